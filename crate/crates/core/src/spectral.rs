//! Principal eigenpair of `L = σ d²/dθ² + A(θ)` on the discrete circle, and
//! the exact Fourier semigroup for constant coefficients.
//!
//! The discrete operator is the symmetric cyclic tridiagonal matrix with
//! off-diagonal `σ/h²` and diagonal `A_i - 2σ/h²`. Adding a shift that makes
//! it entrywise nonnegative turns it into a primitive nonnegative matrix, so
//! power iteration from a positive start converges to the Perron vector,
//! which is strictly positive.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};
use crate::model::ModelParams;

/// Principal eigenvalue and its positive eigenfunction. Normalized by
/// `∫ b₀ = 1` when produced by [`principal_eigenpair`]. The same object serves
/// as the adjoint eigenfunction, since the discrete operator is symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda0: f64,
    pub b0: Field,
}

impl EigenPair {
    /// Eigenpair of a constant-coefficient operator: `b₀ ≡ 1`, `λ₀ = A`.
    /// Also the natural pair for the `σ = 0` regime with constant `A`.
    pub fn constant(grid: TorusGrid, a: f64) -> Self {
        Self {
            lambda0: a,
            b0: grid.zeros().map(|_| 1.0),
        }
    }

    /// Same eigenvalue with `b₀` multiplied by `c` (no longer normalized).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lambda0: self.lambda0,
            b0: self.b0.scale(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Relative tolerance. Iteration stops once both the change in the
    /// eigenvalue estimate and the residual `‖L v - λ v‖_∞ / ‖v‖_∞` fall below
    /// `tol · ‖L‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1_000_000,
        }
    }
}

/// Principal eigenpair by shifted power iteration from the constant vector.
pub fn principal_eigenpair(params: &ModelParams, opts: EigenOptions) -> Result<EigenPair> {
    let start = params.grid().zeros().map(|_| 1.0);
    principal_eigenpair_from(params, &start, opts)
}

/// As [`principal_eigenpair`], from a caller-supplied strictly positive start.
pub fn principal_eigenpair_from(
    params: &ModelParams,
    start: &Field,
    opts: EigenOptions,
) -> Result<EigenPair> {
    let sigma = params.sigma();
    if sigma == 0.0 {
        return Err(Error::DegenerateOperator);
    }
    start.check_same_grid(params.a())?;
    if start.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("start vector must be strictly positive".into()));
    }

    let grid = params.grid();
    let n = grid.n();
    let coupling = sigma * (n * n) as f64;
    let a = params.a().values();
    let a_max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let op_norm = 4.0 * coupling + a_abs;
    // 2σ/h² + max A makes every entry nonnegative; the extra π²σ keeps the
    // alternating (Nyquist) mode strictly subdominant in modulus.
    let shift = 2.0 * coupling + a_max + PI * PI * sigma;
    let threshold = opts.tol * op_norm.max(1.0);

    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let left = v[(i + n - 1) % n];
            let right = v[(i + 1) % n];
            out[i] = coupling * (left - 2.0 * v[i] + right) + a[i] * v[i];
        }
    };

    let mut v: Vec<f64> = start.values().to_vec();
    let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter_mut().for_each(|x| *x /= norm);
    let mut lv = vec![0.0; n];
    let mut lambda_prev = f64::NAN;
    let mut residual = f64::INFINITY;

    for iteration in 0..opts.max_iter {
        apply(&v, &mut lv);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let lambda = v.iter().zip(&lv).map(|(x, y)| x * y).sum::<f64>() / vv;
        let v_sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        residual = v
            .iter()
            .zip(&lv)
            .fold(0.0f64, |m, (x, y)| m.max((y - lambda * x).abs()))
            / v_sup;

        if residual <= threshold && (lambda - lambda_prev).abs() <= threshold {
            if v.iter().any(|&x| x <= 0.0) {
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    residual,
                });
            }
            let b0 = Field::new(grid, v)?;
            let mass = b0.integrate();
            return Ok(EigenPair {
                lambda0: lambda,
                b0: b0.scale(1.0 / mass),
            });
        }
        lambda_prev = lambda;

        let mut next_sup = 0.0f64;
        for i in 0..n {
            lv[i] += shift * v[i];
            next_sup = next_sup.max(lv[i].abs());
        }
        for i in 0..n {
            v[i] = lv[i] / next_sup;
        }
    }

    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Integer frequency of slot `i` in an `n`-point transform.
pub(crate) fn frequency(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

pub(crate) fn forward_dft(f: &Field) -> Vec<Complex64> {
    let mut buffer: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buffer.len()).process(&mut buffer);
    buffer
}

pub(crate) fn inverse_dft_real(grid: TorusGrid, mut coeffs: Vec<Complex64>) -> Result<Field> {
    let n = coeffs.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut coeffs);
    Field::new(grid, coeffs.iter().map(|c| c.re / n as f64).collect())
}

/// Growth rate `A - σ (2πk)²` of Fourier mode `k` under `L`.
pub(crate) fn mode_rate(a_const: f64, sigma: f64, k: f64) -> f64 {
    a_const - sigma * (2.0 * PI * k).powi(2)
}

/// `e^{tL} f` for constant `A`, applied mode by mode.
pub fn semigroup_apply(a_const: f64, sigma: f64, t: f64, f: &Field) -> Result<Field> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let n = f.len();
    let coeffs = forward_dft(f)
        .into_iter()
        .enumerate()
        .map(|(i, c)| c * (mode_rate(a_const, sigma, frequency(i, n)) * t).exp())
        .collect();
    inverse_dft_real(f.grid(), coeffs)
}
