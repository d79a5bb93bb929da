//! Cyclic tridiagonal systems via the Thomas algorithm plus a Sherman–Morrison
//! rank-one correction for the two corner entries.

use crate::error::{Error, Result};

/// Prefactored cyclic tridiagonal matrix
///
/// ```text
/// | d0 u0          c  |
/// | l1 d1 u1          |
/// |    .  .  .        |
/// | r        l  d     |
/// ```
///
/// with `c = top_right` and `r = bottom_left`. Reused across many right-hand
/// sides; each solve is `O(n)`.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    lower: Vec<f64>,
    /// Pivots of the modified tridiagonal part after elimination.
    pivots: Vec<f64>,
    /// Eliminated super-diagonal ratios.
    ratios: Vec<f64>,
    /// Solution of the modified system against the rank-one vector.
    z: Vec<f64>,
    shift: f64,
    top_right: f64,
    denominator: f64,
}

impl CyclicTridiagonal {
    pub fn new(
        lower: Vec<f64>,
        diag: Vec<f64>,
        upper: Vec<f64>,
        bottom_left: f64,
        top_right: f64,
    ) -> Result<Self> {
        let n = diag.len();
        if n < 3 || lower.len() != n || upper.len() != n {
            return Err(Error::SingularSystem(format!(
                "cyclic system needs n >= 3 and matching bands, got n = {n}"
            )));
        }
        let shift = -diag[0];
        if shift == 0.0 {
            return Err(Error::SingularSystem("zero leading diagonal".into()));
        }
        let mut modified = diag;
        modified[0] -= shift;
        modified[n - 1] -= bottom_left * top_right / shift;

        let mut pivots = vec![0.0; n];
        let mut ratios = vec![0.0; n];
        pivots[0] = modified[0];
        for j in 1..n {
            if pivots[j - 1] == 0.0 {
                return Err(Error::SingularSystem(format!("zero pivot at row {}", j - 1)));
            }
            ratios[j] = upper[j - 1] / pivots[j - 1];
            pivots[j] = modified[j] - lower[j] * ratios[j];
        }
        if pivots[n - 1] == 0.0 {
            return Err(Error::SingularSystem(format!("zero pivot at row {}", n - 1)));
        }

        let mut system = Self {
            lower,
            pivots,
            ratios,
            z: Vec::new(),
            shift,
            top_right,
            denominator: 0.0,
        };
        let mut u = vec![0.0; n];
        u[0] = shift;
        u[n - 1] = bottom_left;
        let z = system.thomas(&u);
        let denominator = 1.0 + z[0] + top_right * z[n - 1] / shift;
        if denominator == 0.0 {
            return Err(Error::SingularSystem("Sherman–Morrison denominator vanished".into()));
        }
        system.z = z;
        system.denominator = denominator;
        Ok(system)
    }

    /// Constant bands: `diag` on the diagonal and `off` everywhere else,
    /// corners included.
    pub fn symmetric_constant(n: usize, diag: f64, off: f64) -> Result<Self> {
        Self::new(vec![off; n], vec![diag; n], vec![off; n], off, off)
    }

    fn thomas(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = vec![0.0; n];
        y[0] = rhs[0] / self.pivots[0];
        for j in 1..n {
            y[j] = (rhs[j] - self.lower[j] * y[j - 1]) / self.pivots[j];
        }
        for j in (0..n - 1).rev() {
            y[j] -= self.ratios[j + 1] * y[j + 1];
        }
        y
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = self.thomas(rhs);
        let fact = (x[0] + self.top_right * x[n - 1] / self.shift) / self.denominator;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi -= fact * zi;
        }
        x
    }
}
