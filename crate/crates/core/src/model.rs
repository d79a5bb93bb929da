//! Model parameters, the auxiliary optimal-consumption policy, and the
//! closed-loop generator
//!
//! ```text
//! (F K)(θ) = σ K''(θ) + A(θ) K(θ) - ψ(θ) ⟨K, b₀⟩,
//! ψ(θ)     = η(θ)^{(q+γ-1)/γ} (α b₀(θ))^{-1/γ}.
//! ```
//!
//! The policy is invariant under rescaling of `b₀`: replacing `b₀` by `c b₀`
//! changes `α` by `c^{γ-1}` and leaves `ψ` and `C*` untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::spectral::EigenPair;

/// Discount rate used for the baseline scenarios, which do not list one.
pub const DEFAULT_RHO: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    sigma: f64,
    rho: f64,
    gamma: f64,
    q: f64,
    a: Field,
    eta: Field,
}

impl ModelParams {
    pub fn new(sigma: f64, rho: f64, gamma: f64, q: f64, a: Field, eta: Field) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(sigma.is_finite() && sigma >= 0.0) {
            return bad(format!("sigma must be >= 0, got {sigma}"));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return bad(format!("rho must be > 0, got {rho}"));
        }
        if !(gamma.is_finite() && gamma > 0.0) || gamma == 1.0 {
            return bad(format!("gamma must be > 0 and gamma != 1, got {gamma}"));
        }
        if !(q.is_finite() && q >= 0.0) {
            return bad(format!("q must be >= 0, got {q}"));
        }
        a.check_same_grid(&eta)?;
        if a.values().iter().any(|&v| v <= 0.0) {
            return bad("technology A must be strictly positive".into());
        }
        if eta.values().iter().any(|&v| v <= 0.0) {
            return bad("population density eta must be strictly positive".into());
        }
        Ok(Self {
            sigma,
            rho,
            gamma,
            q,
            a,
            eta,
        })
    }

    /// Constant-coefficient baseline: `A = η = σ = 0.01`, `q = 1`, `γ = 1/2`.
    pub fn table1(grid: TorusGrid, rho: f64) -> Result<Self> {
        Self::new(
            1e-2,
            rho,
            0.5,
            1.0,
            grid.constant(1e-2)?,
            grid.constant(1e-2)?,
        )
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn a(&self) -> &Field {
        &self.a
    }

    pub fn eta(&self) -> &Field {
        &self.eta
    }

    pub fn grid(&self) -> TorusGrid {
        self.a.grid()
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(sigma, self.rho, self.gamma, self.q, self.a.clone(), self.eta.clone())
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.sigma, rho, self.gamma, self.q, self.a.clone(), self.eta.clone())
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.sigma, self.rho, gamma, self.q, self.a.clone(), self.eta.clone())
    }

    /// `Some((A, η))` when both coefficient fields are spatially constant.
    pub fn constant_coefficients(&self) -> Option<(f64, f64)> {
        let a0 = self.a.values()[0];
        let e0 = self.eta.values()[0];
        let flat_a = self.a.values().iter().all(|&v| v == a0);
        let flat_e = self.eta.values().iter().all(|&v| v == e0);
        (flat_a && flat_e).then_some((a0, e0))
    }

    /// `λ₀ (1 - γ)`, the lower bound `ρ` has to exceed.
    pub fn admissibility_bound(&self, lambda0: f64) -> f64 {
        lambda0 * (1.0 - self.gamma)
    }

    pub fn check_admissible(&self, lambda0: f64) -> Result<()> {
        let bound = self.admissibility_bound(lambda0);
        if self.rho > bound {
            Ok(())
        } else {
            Err(Error::Admissibility {
                rho: self.rho,
                bound,
            })
        }
    }

    /// `σ v'' + A v`, the Sturm–Liouville part of the generator.
    pub fn apply_linear_part(&self, v: &Field) -> Result<Field> {
        v.check_same_grid(&self.a)?;
        v.second_derivative()
            .scale(self.sigma)
            .zip_map(&v.mul(&self.a)?, |d, r| d + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyScalars {
    pub alpha: f64,
    pub g: f64,
}

/// Constants of the auxiliary optimal policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConstants {
    pub alpha: f64,
    pub psi: Field,
    pub g: f64,
    /// The weight of the aggregate functional `⟨K, b₀⟩`.
    pub aggregate_weight: Field,
}

impl PolicyConstants {
    pub fn new(params: &ModelParams, eig: &EigenPair) -> Result<Self> {
        let alpha = compute_alpha(params, eig)?;
        let psi = compute_psi(params, eig, alpha)?;
        Ok(Self {
            alpha,
            psi,
            g: growth_rate(params, eig),
            aggregate_weight: eig.b0.clone(),
        })
    }

    pub fn aggregate(&self, k: &Field) -> Result<f64> {
        k.inner(&self.aggregate_weight)
    }

    pub fn scalars(&self) -> PolicyScalars {
        PolicyScalars {
            alpha: self.alpha,
            g: self.g,
        }
    }
}

fn check_positive(field: &Field, name: &str) -> Result<()> {
    if field.values().iter().all(|&v| v > 0.0) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be strictly positive")))
    }
}

/// `α = (γ / (ρ - λ₀(1-γ)) ∫ η^{(q+γ-1)/γ} b₀^{(γ-1)/γ} dθ)^γ`
pub fn compute_alpha(params: &ModelParams, eig: &EigenPair) -> Result<f64> {
    params.check_admissible(eig.lambda0)?;
    check_positive(&eig.b0, "b0")?;
    let gamma = params.gamma;
    let eta_exp = (params.q + gamma - 1.0) / gamma;
    let b0_exp = (gamma - 1.0) / gamma;
    let integrand = params
        .eta
        .zip_map(&eig.b0, |e, b| e.powf(eta_exp) * b.powf(b0_exp))?;
    let margin = params.rho - params.admissibility_bound(eig.lambda0);
    Ok((gamma / margin * integrand.integrate()).powf(gamma))
}

/// `ψ(θ) = η(θ)^{(q+γ-1)/γ} (α b₀(θ))^{-1/γ}`
pub fn compute_psi(params: &ModelParams, eig: &EigenPair, alpha: f64) -> Result<Field> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    check_positive(&eig.b0, "b0")?;
    let gamma = params.gamma;
    let eta_exp = (params.q + gamma - 1.0) / gamma;
    params
        .eta
        .zip_map(&eig.b0, |e, b| e.powf(eta_exp) * (alpha * b).powf(-1.0 / gamma))
}

/// Optimal aggregate growth rate `g = (λ₀ - ρ) / γ`.
pub fn growth_rate(params: &ModelParams, eig: &EigenPair) -> f64 {
    (eig.lambda0 - params.rho) / params.gamma
}

/// Spatial profile `η^{(q-1)/γ} (α b₀)^{-1/γ}` shared by both consumption forms.
fn consumption_profile(pc: &PolicyConstants, params: &ModelParams) -> Result<Field> {
    let gamma = params.gamma;
    let eta_exp = (params.q - 1.0) / gamma;
    let alpha = pc.alpha;
    params.eta.zip_map(&pc.aggregate_weight, |e, b| {
        e.powf(eta_exp) * (alpha * b).powf(-1.0 / gamma)
    })
}

/// Feedback consumption `C*(θ) = η^{(q-1)/γ} (α b₀)^{-1/γ} ⟨K, b₀⟩`.
pub fn consumption(k: &Field, pc: &PolicyConstants, params: &ModelParams) -> Result<Field> {
    let aggregate = pc.aggregate(k)?;
    Ok(consumption_profile(pc, params)?.scale(aggregate))
}

/// Consumption along the optimal path as a function of the initial state only:
/// the feedback form with `⟨K(t), b₀⟩ = ⟨K₀, b₀⟩ e^{g t}`.
pub fn consumption_closed_form(
    k0: &Field,
    t: f64,
    pc: &PolicyConstants,
    params: &ModelParams,
) -> Result<Field> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let aggregate = pc.aggregate(k0)? * (pc.g * t).exp();
    Ok(consumption_profile(pc, params)?.scale(aggregate))
}

/// Closed-loop generator `F K = σ K'' + A K - ψ ⟨K, b₀⟩`.
pub fn apply_f(k: &Field, pc: &PolicyConstants, params: &ModelParams) -> Result<Field> {
    let aggregate = pc.aggregate(k)?;
    params
        .apply_linear_part(k)?
        .axpy(-aggregate, &pc.psi)
}
