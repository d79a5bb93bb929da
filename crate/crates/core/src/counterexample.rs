//! Explicit witnesses of non-invariance and the smooth bump initial data.
//!
//! A witness is a C² function on S¹ with a quadratic dip
//! `p₂(x) = (x - 1/2 + a)(x - 1/2 - a)` on `(1/2 - a, 1/2 + a)` glued to two
//! quintic ramps that rise to a plateau value `C_*` at the identified endpoint
//! `0 ≡ 1`. The dip fixes `x⁻`; raising `C_*` inflates `⟨x, b₀⟩` without
//! touching it, which is what drives the certificates.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::certify::{l2_certificate, sup_certificate, CertificateReport, Setting, DEFAULT_ARGMAX_REL_TOL};
use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::model::{ModelParams, PolicyConstants};

/// Largest admissible dip half-width.
pub const MAX_HALFWIDTH: f64 = 0.4;

/// Plateau heights beyond this abort the certificate search.
pub const MAX_C_STAR: f64 = 1e12;

/// Polynomial in monomial form, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    /// Value of the `order`-th derivative at `x`.
    pub fn eval_derivative(&self, x: f64, order: usize) -> f64 {
        (0..order)
            .fold(self.clone(), |p, _| p.derivative())
            .eval(x)
    }

    /// Like [`Polynomial::eval_derivative`] but in double-double arithmetic,
    /// so the result is the stored polynomial's exact value to ~1e-30 relative
    /// to the largest term. Used for junction residuals.
    pub fn eval_derivative_exact(&self, x: f64, order: usize) -> f64 {
        let mut acc = DoubleDouble::ZERO;
        for (j, &c) in self.0.iter().enumerate().skip(order).rev() {
            let falling: f64 = (j - order + 1..=j).map(|k| k as f64).product();
            acc = acc.mul_f64(x).add(DoubleDouble::product(falling, c));
        }
        acc.hi + acc.lo
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let v = s - a;
        Self {
            hi: s,
            lo: (a - (s - v)) + (b - v),
        }
    }

    fn product(a: f64, b: f64) -> Self {
        let p = a * b;
        Self {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        Self::two_sum(s.hi, lo)
    }

    fn mul_f64(self, x: f64) -> Self {
        let p = Self::product(self.hi, x);
        Self::two_sum(p.hi, p.lo + self.lo * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Half-width of the dip: `(√15 δ / 8)^{2/5}` in L², `√(δ/2)` in sup norm. Both
/// make the dip's norm exactly `δ/2`.
pub fn dip_halfwidth(delta: f64, setting: Setting) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    let a = match setting {
        Setting::L2 => (15f64.sqrt() * delta / 8.0).powf(0.4),
        Setting::Sup => (delta / 2.0).sqrt(),
    };
    if a >= MAX_HALFWIDTH {
        return Err(Error::DeltaTooLarge { a, max: MAX_HALFWIDTH });
    }
    Ok(a)
}

/// `p₂(x) = (x - 1/2 + a)(x - 1/2 - a) = x² - x + 1/4 - a²`.
pub fn middle_piece(a: f64) -> Polynomial {
    Polynomial(vec![0.25 - a * a, -1.0, 1.0])
}

/// Row of the value/derivative conditions for a quintic at `x`.
fn condition_row(x: f64, order: usize) -> [f64; 6] {
    let mut row = [0.0; 6];
    for (j, slot) in row.iter_mut().enumerate().skip(order) {
        let falling: f64 = (j - order + 1..=j).map(|k| k as f64).product();
        *slot = falling * x.powi((j - order) as i32);
    }
    row
}

/// Quintic ramp matching `p₂` to second order at `1/2 ∓ a` and reaching the
/// flat plateau `C_*` (zero slope and curvature) at `0` (left) or `1` (right).
///
/// Left coefficients are monomials in `θ` on `[0, 1/2 - a]`. Right
/// coefficients are monomials in the mirrored coordinate `s = 1 - θ` on
/// `[0, 1/2 - a]`; monomials in `θ` itself would need cancellation between
/// coefficients of size `~C_*/(1/2 - a)^5` near `θ = 1`.
pub fn solve_quintic(side: Side, a: f64, c_star: f64) -> Result<[f64; 6]> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::InvalidParameter(format!("half-width must lie in (0, 1/2), got {a}")));
    }
    if !(c_star > 0.0 && c_star.is_finite()) {
        return Err(Error::InvalidParameter(format!("C_* must be > 0, got {c_star}")));
    }
    let dip = middle_piece(a);
    // junction in the local coordinate, and d/d(local) = orientation · d/dθ
    let (junction, theta_junction, orientation) = match side {
        Side::Left => (0.5 - a, 0.5 - a, 1.0),
        Side::Right => (1.0 - (0.5 + a), 0.5 + a, -1.0),
    };
    let conditions = [
        (junction, 0, 0.0),
        (junction, 1, orientation * dip.eval_derivative(theta_junction, 1)),
        (junction, 2, dip.eval_derivative(theta_junction, 2)),
        (0.0, 0, c_star),
        (0.0, 1, 0.0),
        (0.0, 2, 0.0),
    ];
    // Same 6×6 system after the substitution x = L u (L = junction): column j
    // scales by L^j and row `order` by L^{-order}, which keeps it well
    // conditioned for narrow ramps.
    let length = junction;
    let mut matrix = Matrix6::<f64>::zeros();
    for (r, &(x, order, _)) in conditions.iter().enumerate() {
        for (c, entry) in condition_row(x / length, order).iter().enumerate() {
            matrix[(r, c)] = *entry;
        }
    }
    let lu = matrix.lu();
    // residual of the unscaled conditions, rescaled into the u system
    let residual = |coeffs: &[f64; 6]| {
        Vector6::from_fn(|r, _| {
            let (x, order, value) = conditions[r];
            let lhs = Polynomial(coeffs.to_vec()).eval_derivative_exact(x, order);
            (value - lhs) * length.powi(order as i32)
        })
    };
    let mut coeffs = [0.0; 6];
    // one solve plus two rounds of iterative refinement
    for _ in 0..3 {
        let step = lu
            .solve(&residual(&coeffs))
            .ok_or_else(|| Error::SingularSystem(format!("quintic conditions at a = {a}")))?;
        for (j, (slot, d)) in coeffs.iter_mut().zip(step.iter()).enumerate() {
            *slot += d / length.powi(j as i32);
        }
    }
    Ok(coeffs)
}

/// Closed-form witness, sampled on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSpec {
    pub setting: Setting,
    pub delta: f64,
    pub big_c: f64,
    pub a: f64,
    pub c_star: f64,
    /// Left ramp, monomials in `θ`.
    pub p5_coeffs: [f64; 6],
    /// Right ramp, monomials in `1 - θ`.
    pub q5_coeffs: [f64; 6],
}

impl WitnessSpec {
    pub fn new(setting: Setting, delta: f64, big_c: f64, c_star: f64) -> Result<Self> {
        let a = dip_halfwidth(delta, setting)?;
        Ok(Self {
            setting,
            delta,
            big_c,
            a,
            c_star,
            p5_coeffs: solve_quintic(Side::Left, a, c_star)?,
            q5_coeffs: solve_quintic(Side::Right, a, c_star)?,
        })
    }

    pub fn left(&self) -> Polynomial {
        Polynomial(self.p5_coeffs.to_vec())
    }

    /// The right ramp as a polynomial in `s = 1 - θ`.
    pub fn right(&self) -> Polynomial {
        Polynomial(self.q5_coeffs.to_vec())
    }

    pub fn middle(&self) -> Polynomial {
        middle_piece(self.a)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_derivative(theta, 0)
    }

    /// `order`-th θ-derivative of the piece covering `θ mod 1`.
    pub fn eval_derivative(&self, theta: f64, order: usize) -> f64 {
        let theta = theta.rem_euclid(1.0);
        if theta <= 0.5 - self.a {
            self.left().eval_derivative(theta, order)
        } else if theta < 0.5 + self.a {
            self.middle().eval_derivative(theta, order)
        } else {
            self.right_derivative(1.0 - theta, order)
        }
    }

    /// θ-derivative of the right ramp at mirrored coordinate `s`.
    fn right_derivative(&self, s: f64, order: usize) -> f64 {
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.right().eval_derivative(s, order)
    }

    pub fn sample(&self, grid: TorusGrid) -> Result<Field> {
        grid.sample(|t| self.eval(t))
    }

    /// Largest mismatch in value, slope, or curvature across the junctions
    /// `1/2 - a`, `1/2 + a`, and `0 ≡ 1`, for the stored coefficients.
    pub fn junction_residual(&self) -> f64 {
        let (left, mid, right) = (self.left(), self.middle(), self.right());
        let sign = |d: usize| if d.is_multiple_of(2) { 1.0 } else { -1.0 };
        let lo = 0.5 - self.a;
        let hi = 0.5 + self.a;
        (0..=2)
            .flat_map(|d| {
                [
                    left.eval_derivative_exact(lo, d) - mid.eval_derivative_exact(lo, d),
                    sign(d) * right.eval_derivative_exact(1.0 - hi, d) - mid.eval_derivative_exact(hi, d),
                    left.eval_derivative_exact(0.0, d) - sign(d) * right.eval_derivative_exact(0.0, d),
                ]
            })
            .fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Runs the certificate matching `self.setting` on the sampled witness.
    pub fn certify(
        &self,
        pc: &PolicyConstants,
        params: &ModelParams,
        argmax_rel_tol: f64,
    ) -> Result<CertificateReport> {
        let f = self.sample(params.grid())?;
        match self.setting {
            Setting::L2 => l2_certificate(&f, self.big_c, self.delta, pc, params),
            Setting::Sup => sup_certificate(&f, self.big_c, self.delta, pc, params, argmax_rel_tol),
        }
    }
}

/// Doubles `C_*` from 1 until the exact certificate passes on the model grid.
pub fn build_counterexample(
    setting: Setting,
    delta: f64,
    big_c: f64,
    pc: &PolicyConstants,
    params: &ModelParams,
) -> Result<(WitnessSpec, CertificateReport)> {
    if !(big_c > 0.0 && big_c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be > 0, got {big_c}")));
    }
    dip_halfwidth(delta, setting)?;
    let mut c_star = 1.0;
    while c_star <= MAX_C_STAR {
        let spec = WitnessSpec::new(setting, delta, big_c, c_star)?;
        let report = spec.certify(pc, params, DEFAULT_ARGMAX_REL_TOL)?;
        if report.pass {
            return Ok((spec, report));
        }
        c_star *= 2.0;
    }
    Err(Error::SearchExhausted { c_star })
}

/// Nonnegative initial datum: the positive part of the sup-norm witness, i.e.
/// the quintic plateau with an exactly flat zero band of width `2a` around 1/2.
pub fn nonneg_witness(
    delta: f64,
    big_c: f64,
    pc: &PolicyConstants,
    params: &ModelParams,
) -> Result<(WitnessSpec, Field)> {
    let (spec, _) = build_counterexample(Setting::Sup, delta, big_c, pc, params)?;
    let field = spec.sample(params.grid())?.positive_part();
    Ok((spec, field))
}

/// `p₃(x) = 1 - 6x² + 8x³ - 3x⁴` (degree four despite the name): falls from 1
/// to 0 on `[0, 1]` with zero slope at both ends.
pub fn p3() -> Polynomial {
    Polynomial(vec![1.0, 0.0, -6.0, 8.0, -3.0])
}

/// Smooth band: 1 on `(1/2 - R + ε/2, 1/2 + R - ε/2)`, 0 outside
/// `(1/2 - R - ε/2, 1/2 + R + ε/2)`, `p₃` ramps in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    #[serde(rename = "R")]
    pub r: f64,
    pub eps: f64,
    pub k_bar: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self {
            r: 0.25,
            eps: 0.1,
            k_bar: 1.0,
        }
    }
}

impl BumpSpec {
    pub fn new(r: f64, eps: f64, k_bar: f64) -> Result<Self> {
        let spec = Self { r, eps, k_bar };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 2.0 * self.r && 2.0 * self.r < 1.0 - self.eps) {
            return Err(Error::InvalidParameter(format!(
                "bump needs 0 < eps < 2R < 1 - eps, got R = {}, eps = {}",
                self.r, self.eps
            )));
        }
        if !(self.k_bar > 0.0 && self.k_bar.is_finite()) {
            return Err(Error::InvalidParameter(format!("k_bar must be > 0, got {}", self.k_bar)));
        }
        Ok(())
    }

    /// Ramp coordinate in `[0, 1]` and its sign of dθ, or the constant value.
    fn locate(&self, theta: f64) -> std::result::Result<(f64, f64), f64> {
        let theta = theta.rem_euclid(1.0);
        let half = 0.5 * self.eps;
        let (inner_lo, inner_hi) = (0.5 - self.r + half, 0.5 + self.r - half);
        let (outer_lo, outer_hi) = (0.5 - self.r - half, 0.5 + self.r + half);
        if theta > inner_lo && theta < inner_hi {
            Err(1.0)
        } else if theta < outer_lo || theta > outer_hi {
            Err(0.0)
        } else if theta >= inner_hi {
            Ok(((theta - 0.5 - self.r + half) / self.eps, 1.0))
        } else {
            Ok(((-theta + 0.5 - self.r + half) / self.eps, -1.0))
        }
    }

    /// `f₀(θ)`, independent of `k_bar`.
    pub fn f0(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            Ok((s, _)) => p3().eval(s),
            Err(v) => v,
        }
    }

    pub fn f0_second_derivative(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            Ok((s, _)) => p3().eval_derivative(s, 2) / (self.eps * self.eps),
            Err(_) => 0.0,
        }
    }

    pub fn f0_derivative(&self, theta: f64) -> f64 {
        match self.locate(theta) {
            Ok((s, dir)) => dir * p3().eval_derivative(s, 1) / self.eps,
            Err(_) => 0.0,
        }
    }
}

pub fn bump_f0(spec: &BumpSpec, grid: TorusGrid) -> Result<Field> {
    spec.validate()?;
    grid.sample(|t| spec.f0(t))
}

/// `K₀ = K̄ f₀`.
pub fn scaled_initial(spec: &BumpSpec, grid: TorusGrid) -> Result<Field> {
    Ok(bump_f0(spec, grid)?.scale(spec.k_bar))
}
