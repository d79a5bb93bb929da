//! Time integration of the closed-loop equation `K' = F K`.
//!
//! The default scheme is Crank–Nicolson for diffusion with the reaction term
//! `A K` and the nonlocal drain `ψ ⟨K, b₀⟩` taken explicitly at a second-order
//! extrapolated midpoint (Adams–Bashforth 2; the first step uses a
//! predictor–corrector). Each step costs one prefactored cyclic tridiagonal
//! solve. Explicit Euler is kept as a cross-check.
//!
//! Two closed forms accompany the integrator: a Fourier–Duhamel oracle for
//! constant coefficients and the per-node solution of the `σ = 0` limit.

mod cyclic;

pub use cyclic::CyclicTridiagonal;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::model::{ModelParams, PolicyConstants};
use crate::spectral::{forward_dft, frequency, inverse_dft_real, mode_rate, EigenPair};

/// Below this gap between the aggregate rate and a mode rate the Duhamel
/// integral switches to its resonant limit `t e^{μt}`.
pub const RESONANCE_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexCn,
    ExplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_every: usize,
    pub scheme: Scheme,
    /// A value counts as negative when it is below `-neg_tol`.
    pub neg_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: 1e-4,
            snapshot_every: 100,
            scheme: Scheme::ImexCn,
            neg_tol: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, grid: TorusGrid, sigma: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || self.dt > self.t_end {
            return bad(format!("dt must lie in (0, t_end], got {}", self.dt));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be >= 1".into());
        }
        if !(self.neg_tol.is_finite() && self.neg_tol >= 0.0) {
            return bad(format!("neg_tol must be >= 0, got {}", self.neg_tol));
        }
        if self.scheme == Scheme::ExplicitEuler && sigma > 0.0 {
            let limit = grid.h() * grid.h() / (2.0 * sigma);
            if self.step_size() > limit {
                return bad(format!(
                    "explicit Euler needs dt <= h^2 / (2 sigma) = {limit:e}, got {:e}",
                    self.step_size()
                ));
            }
        }
        Ok(())
    }

    /// Number of steps; the step is shrunk so that they land exactly on `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn step_size(&self) -> f64 {
        self.t_end / self.steps() as f64
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativityEvent {
    pub time: f64,
    pub theta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// `⟨K(t), b₀⟩` at each stamp.
    pub aggregate: Vec<f64>,
    pub min_value: Vec<f64>,
    pub min_location: Vec<f64>,
    /// First step (not only stamp) at which `min K < -neg_tol`.
    pub first_negativity: Option<NegativityEvent>,
    pub neg_tol: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial stamp")
    }

    pub fn global_min(&self) -> f64 {
        self.min_value.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

struct Recorder<'a> {
    weight: &'a Field,
    neg_tol: f64,
    snapshot_every: usize,
    last_step: usize,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(weight: &'a Field, cfg: &SimConfig) -> Self {
        Self {
            weight,
            neg_tol: cfg.neg_tol,
            snapshot_every: cfg.snapshot_every,
            last_step: cfg.steps(),
            traj: Trajectory {
                times: Vec::new(),
                states: Vec::new(),
                aggregate: Vec::new(),
                min_value: Vec::new(),
                min_location: Vec::new(),
                first_negativity: None,
                neg_tol: cfg.neg_tol,
            },
        }
    }

    fn observe(&mut self, step: usize, t: f64, grid: TorusGrid, values: &[f64]) -> Result<()> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup { step });
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let snapshot = step.is_multiple_of(self.snapshot_every) || step == self.last_step;
        let needs_event = self.traj.first_negativity.is_none() && min < -self.neg_tol;
        if !(snapshot || needs_event) {
            return Ok(());
        }
        let state = Field::from_vec_unchecked(grid, values.to_vec());
        let location = state.argmin_location();
        if needs_event {
            self.traj.first_negativity = Some(NegativityEvent {
                time: t,
                theta: location,
                value: min,
            });
        }
        if snapshot {
            self.traj.aggregate.push(state.inner(self.weight)?);
            self.traj.times.push(t);
            self.traj.min_value.push(min);
            self.traj.min_location.push(location);
            self.traj.states.push(state);
        }
        Ok(())
    }
}

fn check_inputs(params: &ModelParams, pc: &PolicyConstants, k0: &Field) -> Result<()> {
    k0.check_same_grid(params.a())?;
    k0.check_same_grid(&pc.psi)?;
    k0.check_same_grid(&pc.aggregate_weight)
}

/// Integrates `K' = F K` from `K₀` up to `cfg.t_end`.
pub fn simulate(
    params: &ModelParams,
    eig: &EigenPair,
    pc: &PolicyConstants,
    k0: &Field,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    params.check_admissible(eig.lambda0)?;
    check_inputs(params, pc, k0)?;
    let grid = k0.grid();
    cfg.validate(grid, params.sigma())?;

    let n = grid.n();
    let steps = cfg.steps();
    let dt = cfg.step_size();
    let h = grid.h();
    let a = params.a().values();
    let psi = pc.psi.values();
    let weight = pc.aggregate_weight.values();
    let sigma = params.sigma();

    let aggregate = |k: &[f64]| h * k.iter().zip(weight).map(|(x, w)| x * w).sum::<f64>();
    // explicit part A K - ψ ⟨K, b₀⟩
    let reaction = |k: &[f64], out: &mut [f64]| {
        let agg = aggregate(k);
        for i in 0..n {
            out[i] = a[i] * k[i] - psi[i] * agg;
        }
    };
    let laplacian = |k: &[f64], i: usize| k[(i + n - 1) % n] - 2.0 * k[i] + k[(i + 1) % n];

    let mut recorder = Recorder::new(&pc.aggregate_weight, cfg);
    let mut k = k0.values().to_vec();
    recorder.observe(0, 0.0, grid, &k)?;

    match cfg.scheme {
        Scheme::ExplicitEuler => {
            let coupling = sigma / (h * h);
            let mut r = vec![0.0; n];
            let mut next = vec![0.0; n];
            for step in 1..=steps {
                reaction(&k, &mut r);
                for i in 0..n {
                    next[i] = k[i] + dt * (coupling * laplacian(&k, i) + r[i]);
                }
                std::mem::swap(&mut k, &mut next);
                recorder.observe(step, step as f64 * dt, grid, &k)?;
            }
        }
        Scheme::ImexCn => {
            let ratio = sigma * dt / (h * h);
            let system = CyclicTridiagonal::symmetric_constant(n, 1.0 + ratio, -0.5 * ratio)?;
            let cn_rhs = |k: &[f64], explicit: &[f64]| -> Vec<f64> {
                (0..n)
                    .map(|i| k[i] + 0.5 * ratio * laplacian(k, i) + dt * explicit[i])
                    .collect()
            };

            let mut r_prev = vec![0.0; n];
            let mut r_curr = vec![0.0; n];
            let mut r_mid = vec![0.0; n];
            reaction(&k, &mut r_curr);

            // predictor–corrector start: trapezoidal average of the explicit term
            let predicted = system.solve(&cn_rhs(&k, &r_curr));
            reaction(&predicted, &mut r_mid);
            for i in 0..n {
                r_mid[i] = 0.5 * (r_curr[i] + r_mid[i]);
            }
            std::mem::swap(&mut r_prev, &mut r_curr);
            k = system.solve(&cn_rhs(&k, &r_mid));
            recorder.observe(1, dt, grid, &k)?;

            for step in 2..=steps {
                reaction(&k, &mut r_curr);
                for i in 0..n {
                    r_mid[i] = 1.5 * r_curr[i] - 0.5 * r_prev[i];
                }
                std::mem::swap(&mut r_prev, &mut r_curr);
                k = system.solve(&cn_rhs(&k, &r_mid));
                recorder.observe(step, step as f64 * dt, grid, &k)?;
            }
        }
    }
    Ok(recorder.traj)
}

/// `∫₀ᵗ e^{rate (t-s)} e^{g s} ds`, with the resonant limit near `rate = g`.
fn duhamel_factor(rate: f64, g: f64, t: f64) -> f64 {
    let gap = g - rate;
    if gap.abs() < RESONANCE_GAP {
        t * (rate * t).exp()
    } else {
        ((g * t).exp() - (rate * t).exp()) / gap
    }
}

/// Exact solution for constant `A` and `η`: every Fourier mode follows
///
/// ```text
/// m_k(t) = e^{μ_k t} m_k(0) - ψ̂_k ⟨K₀, b₀⟩ (e^{g t} - e^{μ_k t}) / (g - μ_k),
/// μ_k = A - σ (2πk)².
/// ```
pub fn oracle_solution(
    params: &ModelParams,
    pc: &PolicyConstants,
    k0: &Field,
    t: f64,
) -> Result<Field> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let (a_const, _) = params.constant_coefficients().ok_or_else(|| {
        Error::UnsupportedRegime("the Fourier oracle needs constant A and eta".into())
    })?;
    check_inputs(params, pc, k0)?;
    let n = k0.len();
    let aggregate = pc.aggregate(k0)?;
    let k_hat = forward_dft(k0);
    let psi_hat = forward_dft(&pc.psi);
    let coeffs: Vec<Complex64> = (0..n)
        .map(|i| {
            let rate = mode_rate(a_const, params.sigma(), frequency(i, n));
            k_hat[i] * (rate * t).exp() - psi_hat[i] * (aggregate * duhamel_factor(rate, pc.g, t))
        })
        .collect();
    inverse_dft_real(k0.grid(), coeffs)
}

/// Closed-form trajectory of the `σ = 0` limit with constant `A`:
/// `K(t,θ) = e^{A t} K₀(θ) - ψ(θ) ⟨K₀, b₀⟩ (e^{g t} - e^{A t}) / (g - A)`.
pub fn simulate_sigma_zero(
    params: &ModelParams,
    pc: &PolicyConstants,
    k0: &Field,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    if params.sigma() != 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "closed-form ODE limit needs sigma = 0, got {}",
            params.sigma()
        )));
    }
    let a = params.a().values()[0];
    if params.a().values().iter().any(|&v| v != a) {
        return Err(Error::UnsupportedRegime(
            "sigma = 0 is only supported with constant A".into(),
        ));
    }
    check_inputs(params, pc, k0)?;
    let grid = k0.grid();
    cfg.validate(grid, 0.0)?;
    let aggregate = pc.aggregate(k0)?;
    let steps = cfg.steps();
    let dt = cfg.step_size();

    let mut recorder = Recorder::new(&pc.aggregate_weight, cfg);
    let mut values = vec![0.0; grid.n()];
    for step in 0..=steps {
        let t = step as f64 * dt;
        let growth = (a * t).exp();
        let drain = aggregate * duhamel_factor(a, pc.g, t);
        for ((out, &k), &p) in values.iter_mut().zip(k0.values()).zip(pc.psi.values()) {
            *out = growth * k - p * drain;
        }
        recorder.observe(step, t, grid, &values)?;
    }
    Ok(recorder.traj)
}

/// Removes the aggregate trend: `K_g(t) = e^{-g t} K(t)`.
pub fn detrend(traj: &Trajectory, g: f64) -> Trajectory {
    let factor = |t: f64| (-g * t).exp();
    Trajectory {
        times: traj.times.clone(),
        states: traj
            .states
            .iter()
            .zip(&traj.times)
            .map(|(s, &t)| s.scale(factor(t)))
            .collect(),
        aggregate: traj
            .aggregate
            .iter()
            .zip(&traj.times)
            .map(|(a, &t)| a * factor(t))
            .collect(),
        min_value: traj
            .min_value
            .iter()
            .zip(&traj.times)
            .map(|(m, &t)| m * factor(t))
            .collect(),
        min_location: traj.min_location.clone(),
        first_negativity: traj.first_negativity.map(|e| NegativityEvent {
            value: e.value * factor(e.time),
            ..e
        }),
        neg_tol: traj.neg_tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub neg_tol: f64,
    /// First stamp with `min K < -neg_tol`.
    pub first: Option<NegativityEvent>,
    /// Smallest value over all stamps.
    pub global_min: NegativityEvent,
    /// First stamp after which every stamp stays `>= -neg_tol`, if negativity
    /// occurred and ended before the final stamp.
    pub recovery_time: Option<f64>,
}

impl NegativityReport {
    pub fn any_negative(&self) -> bool {
        self.first.is_some()
    }
}

/// Stamp-level negativity summary with threshold `neg_tol`.
pub fn negativity_report(traj: &Trajectory, neg_tol: f64) -> NegativityReport {
    let negative = |i: usize| traj.min_value[i] < -neg_tol;
    let first = (0..traj.times.len()).find(|&i| negative(i));
    let last = (0..traj.times.len()).rev().find(|&i| negative(i));
    let event = |i: usize| NegativityEvent {
        time: traj.times[i],
        theta: traj.min_location[i],
        value: traj.min_value[i],
    };
    let argmin = (0..traj.times.len())
        .min_by(|&i, &j| traj.min_value[i].total_cmp(&traj.min_value[j]))
        .unwrap_or(0);
    NegativityReport {
        neg_tol,
        first: first.map(event),
        global_min: event(argmin),
        recovery_time: last
            .filter(|&i| i + 1 < traj.times.len())
            .map(|i| traj.times[i + 1]),
    }
}
