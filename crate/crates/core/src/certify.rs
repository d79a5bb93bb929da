//! Distances to the positive cone and the converse invariance certificates.
//!
//! For `G = E⁺` the distance is `d_G(x) = ‖x⁻‖` in the ambient norm. The cone
//! is not invariant as soon as, for every `δ, C > 0`, some `x` with
//! `0 < d_G(x) < δ` satisfies
//!
//! * L²: `-⟨x⁻, F x⟩ > C ‖x⁻‖₂²`,
//! * sup: `min { -(F x)(θ) : θ ∈ argmax x⁻ } ≥ C ‖x⁻‖_∞`.
//!
//! Both checks evaluate the closed-loop generator `F` directly: a dissipative
//! splitting `F = (F - μ I) + μ I` cancels in the sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::model::{apply_f, ModelParams, PolicyConstants};

/// Default relative tolerance defining the argmax set of `x⁻`.
pub const DEFAULT_ARGMAX_REL_TOL: f64 = 1e-9;

/// Default step schedule for [`dini_estimate`].
pub const DEFAULT_DINI_SCHEDULE: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    L2,
    Sup,
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::L2 => "l2",
            Setting::Sup => "sup",
        })
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Setting::L2),
            "sup" | "c" | "inf" => Ok(Setting::Sup),
            other => Err(Error::InvalidParameter(format!("unknown setting {other:?}"))),
        }
    }
}

/// Exact split of the L² left-hand side.
///
/// Summation by parts gives `-σ⟨x⁻, D²x⟩ = -σ h Σ |D⁺x⁻|² + σ h Σ D⁺x⁻ D⁺x⁺`;
/// the second sum lives only on cells where `x` changes sign and is reported
/// as `boundary_residual` (always `≤ 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L2Decomposition {
    pub diffusion: f64,
    pub reaction: f64,
    pub nonlocal: f64,
    pub boundary_residual: f64,
}

impl L2Decomposition {
    pub fn total(&self) -> f64 {
        self.diffusion + self.reaction + self.nonlocal + self.boundary_residual
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub setting: Setting,
    pub delta: f64,
    pub big_c: f64,
    pub d_g: f64,
    pub in_g_delta: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decomposition: Option<L2Decomposition>,
    /// Nodes forming the argmax set of `x⁻` (sup setting only).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub argmax: Vec<f64>,
}

impl CertificateReport {
    fn vacuous(setting: Setting, delta: f64, big_c: f64) -> Self {
        Self {
            setting,
            delta,
            big_c,
            d_g: 0.0,
            in_g_delta: false,
            lhs: 0.0,
            rhs: 0.0,
            pass: false,
            decomposition: None,
            argmax: Vec::new(),
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.d_g == 0.0
    }
}

pub fn distance_to_cone(f: &Field, setting: Setting) -> f64 {
    let neg = f.negative_part();
    match setting {
        Setting::L2 => neg.norm_l2(),
        Setting::Sup => neg.norm_sup(),
    }
}

fn check_constants(big_c: f64, delta: f64) -> Result<()> {
    if !(big_c > 0.0 && big_c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be > 0, got {big_c}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    Ok(())
}

/// L² certificate `-⟨f⁻, F f⟩ > C ‖f⁻‖₂²`, with the exact term split.
pub fn l2_certificate(
    f: &Field,
    big_c: f64,
    delta: f64,
    pc: &PolicyConstants,
    params: &ModelParams,
) -> Result<CertificateReport> {
    check_constants(big_c, delta)?;
    let neg = f.negative_part();
    let d_g = neg.norm_l2();
    if d_g == 0.0 {
        return Ok(CertificateReport::vacuous(Setting::L2, delta, big_c));
    }
    let lhs = -neg.inner(&apply_f(f, pc, params)?)?;
    let rhs = big_c * d_g * d_g;

    let h = f.grid().h();
    let sigma = params.sigma();
    let d_neg = neg.forward_difference();
    let d_pos = f.positive_part().forward_difference();
    let decomposition = L2Decomposition {
        diffusion: -sigma * d_neg.norm_l2().powi(2),
        reaction: h * neg
            .values()
            .iter()
            .zip(params.a().values())
            .map(|(m, a)| a * m * m)
            .sum::<f64>(),
        nonlocal: neg.inner(&pc.psi)? * pc.aggregate(f)?,
        boundary_residual: sigma * d_neg.inner(&d_pos)?,
    };

    Ok(CertificateReport {
        setting: Setting::L2,
        delta,
        big_c,
        d_g,
        in_g_delta: d_g < delta,
        lhs,
        rhs,
        pass: lhs > rhs,
        decomposition: Some(decomposition),
        argmax: Vec::new(),
    })
}

/// Sup-norm certificate `min_{θ ∈ argmax f⁻} -(F f)(θ) ≥ C ‖f⁻‖_∞`. Nodes with
/// `f⁻ ≥ (1 - argmax_rel_tol) ‖f⁻‖_∞` form the argmax set.
pub fn sup_certificate(
    f: &Field,
    big_c: f64,
    delta: f64,
    pc: &PolicyConstants,
    params: &ModelParams,
    argmax_rel_tol: f64,
) -> Result<CertificateReport> {
    check_constants(big_c, delta)?;
    if !(argmax_rel_tol > 0.0 && argmax_rel_tol <= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "argmax tolerance must lie in (0, 1e-3], got {argmax_rel_tol}"
        )));
    }
    let neg = f.negative_part();
    let top = neg.norm_sup();
    if top == 0.0 {
        return Ok(CertificateReport::vacuous(Setting::Sup, delta, big_c));
    }
    let ff = apply_f(f, pc, params)?;
    let cutoff = (1.0 - argmax_rel_tol) * top;
    let grid = f.grid();
    let (mut lhs, mut argmax) = (f64::INFINITY, Vec::new());
    for (i, &m) in neg.values().iter().enumerate() {
        if m >= cutoff {
            lhs = lhs.min(-ff.values()[i]);
            argmax.push(grid.node(i));
        }
    }
    let rhs = big_c * top;
    Ok(CertificateReport {
        setting: Setting::Sup,
        delta,
        big_c,
        d_g: top,
        in_g_delta: top < delta,
        lhs,
        rhs,
        pass: lhs >= rhs,
        decomposition: None,
        argmax,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniEstimate {
    pub steps: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Quotient at the smallest step.
    pub estimate: f64,
    /// Last two quotients agree to `1e-4` (relative to `max(1, |q|)`).
    pub converged: bool,
}

/// Difference quotients `(d_G(x + h v) - d_G(x)) / h` along a decreasing schedule.
pub fn dini_estimate(x: &Field, v: &Field, setting: Setting, schedule: &[f64]) -> Result<DiniEstimate> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty step schedule".into()));
    }
    if schedule.iter().any(|&h| h.is_nan() || h <= 0.0) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "step schedule must be positive and strictly decreasing".into(),
        ));
    }
    let base = distance_to_cone(x, setting);
    let quotients = schedule
        .iter()
        .map(|&h| Ok((distance_to_cone(&x.axpy(h, v)?, setting) - base) / h))
        .collect::<Result<Vec<f64>>>()?;
    let estimate = *quotients.last().expect("schedule is nonempty");
    let converged = match quotients.as_slice() {
        [.., a, b] => (a - b).abs() <= 1e-4 * b.abs().max(1.0),
        _ => false,
    };
    Ok(DiniEstimate {
        steps: schedule.to_vec(),
        quotients,
        estimate,
        converged,
    })
}
