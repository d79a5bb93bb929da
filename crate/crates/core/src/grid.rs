//! Uniform periodic discretization of the circle S¹ = [0, 1) with 0 ≡ 1.
//!
//! A [`Field`] is an immutable sample vector tied to a [`TorusGrid`]. Quadrature
//! is the rectangle rule, which on a uniform periodic grid coincides with the
//! trapezoid rule. Differentiation uses the periodic three-point stencil.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible point count.
pub const MIN_POINTS: usize = 16;

/// Arc-length distance on S¹, in `[0, 1/2]`. Inputs are reduced mod 1 first.
pub fn torus_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::GridTooSmall { n, min: MIN_POINTS });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(*self, self.nodes().map(f).collect())
    }

    pub fn constant(&self, c: f64) -> Result<Field> {
        Field::new(*self, vec![c; self.n])
    }

    pub fn zeros(&self) -> Field {
        Field {
            grid: *self,
            values: vec![0.0; self.n],
        }
    }

    /// Index of the node closest to `theta` on the circle.
    pub fn nearest_index(&self, theta: f64) -> usize {
        ((theta.rem_euclid(1.0) * self.n as f64).round() as usize) % self.n
    }
}

impl TryFrom<usize> for TorusGrid {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<TorusGrid> for usize {
    fn from(grid: TorusGrid) -> usize {
        grid.n
    }
}

/// Real-valued function on S¹ sampled at the grid nodes. All values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::LengthMismatch {
                expected: grid.n,
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without the finiteness scan. Callers guarantee the length.
    pub(crate) fn from_vec_unchecked(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.n,
                right: other.grid.n,
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field::from_vec_unchecked(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Rectangle rule `h Σ f(θ_i)`.
    pub fn integrate(&self) -> f64 {
        self.grid.h() * self.values.iter().sum::<f64>()
    }

    /// Discrete L² inner product `h Σ f(θ_i) g(θ_i)`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.grid.h()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    /// Periodic central difference `(f_{i+1} - 2 f_i + f_{i-1}) / h²`.
    pub fn second_derivative(&self) -> Field {
        let n = self.grid.n;
        let inv_h2 = (n * n) as f64;
        let v = &self.values;
        let out = (0..n)
            .map(|i| {
                let left = v[(i + n - 1) % n];
                let right = v[(i + 1) % n];
                (right - 2.0 * v[i] + left) * inv_h2
            })
            .collect();
        Field::from_vec_unchecked(self.grid, out)
    }

    /// Forward difference `(f_{i+1} - f_i) / h` with wraparound.
    pub fn forward_difference(&self) -> Field {
        let n = self.grid.n;
        let inv_h = n as f64;
        let v = &self.values;
        let out = (0..n).map(|i| (v[(i + 1) % n] - v[i]) * inv_h).collect();
        Field::from_vec_unchecked(self.grid, out)
    }

    /// `f⁻ = max(-f, 0)`
    pub fn negative_part(&self) -> Field {
        self.map(|v| if v < 0.0 { -v } else { 0.0 })
    }

    /// `f⁺ = max(f, 0)`
    pub fn positive_part(&self) -> Field {
        self.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid.h() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.integrate()
    }

    /// Location of the minimum. When several nodes tie with the minimum (to
    /// relative precision `1e-12`), returns the circular mean of the tied nodes,
    /// so flat troughs report their centre rather than their first node.
    pub fn argmin_location(&self) -> f64 {
        let m = self.min();
        let slack = 1e-12 * m.abs().max(f64::MIN_POSITIVE);
        let (mut sx, mut sy) = (0.0, 0.0);
        for (i, &v) in self.values.iter().enumerate() {
            if v <= m + slack {
                let phase = 2.0 * PI * self.grid.node(i);
                sx += phase.cos();
                sy += phase.sin();
            }
        }
        let theta = (sy.atan2(sx) / (2.0 * PI)).rem_euclid(1.0);
        // a tiny negative angle rounds up to exactly 1.0
        if theta >= 1.0 {
            0.0
        } else {
            theta
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_abs_diff_eq!(torus_distance(0.1, 0.9), 0.2, epsilon = 1e-15);
        assert_eq!(torus_distance(0.3, 0.3), 0.0);
        assert_abs_diff_eq!(torus_distance(0.25, 0.75), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(torus_distance(1.1, -0.1), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(matches!(TorusGrid::new(15), Err(Error::GridTooSmall { .. })));
        let g = grid(16);
        assert_eq!(g.h() * g.n() as f64, 1.0);
        assert!(g.nodes().zip(g.nodes().skip(1)).all(|(a, b)| a < b));
    }

    #[test]
    fn field_validation() {
        let g = grid(16);
        assert!(matches!(
            Field::new(g, vec![0.0; 15]),
            Err(Error::LengthMismatch { .. })
        ));
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert_eq!(Field::new(g, v), Err(Error::NonFinite { index: 3 }));
    }

    #[test]
    fn quadrature_examples() {
        let g = grid(64);
        assert_abs_diff_eq!(g.constant(1.0).unwrap().integrate(), 1.0, epsilon = 1e-15);
        let s = g.sample(|t| (2.0 * PI * t).sin()).unwrap();
        let c = g.sample(|t| (2.0 * PI * t).cos()).unwrap();
        assert_abs_diff_eq!(s.integrate(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.inner(&c).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            g.constant(1.0).unwrap().inner(&g.constant(1.0).unwrap()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn inner_rejects_mismatched_grids() {
        let a = grid(16).constant(1.0).unwrap();
        let b = grid(32).constant(1.0).unwrap();
        assert_eq!(a.inner(&b), Err(Error::GridMismatch { left: 16, right: 32 }));
    }

    #[test]
    fn second_derivative_of_constant_is_zero() {
        let f = grid(32).constant(3.7).unwrap();
        assert!(f.second_derivative().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_derivative_converges_at_order_two() {
        let errors: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&n| {
                let g = grid(n);
                let f = g.sample(|t| (2.0 * PI * 3.0 * t).cos()).unwrap();
                let exact = f.scale(-(6.0 * PI).powi(2));
                f.second_derivative().sub(&exact).unwrap().norm_sup()
            })
            .collect();
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!((order - 2.0).abs() < 0.05, "order {order}");
        }
    }

    #[test]
    fn parts_examples() {
        let g = grid(16);
        let f = g.constant(-2.0).unwrap();
        assert!(f.negative_part().values().iter().all(|&v| v == 2.0));
        assert!(f.positive_part().values().iter().all(|&v| v == 0.0));
        assert!(g.constant(3.0).unwrap().negative_part().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn norm_examples() {
        let g = grid(32);
        let one = g.constant(1.0).unwrap();
        assert_abs_diff_eq!(one.norm_l2(), 1.0, epsilon = 1e-15);
        assert_eq!(one.norm_sup(), 1.0);
        let f = g.sample(|t| (2.0 * PI * t).sin() + 0.3).unwrap();
        assert_abs_diff_eq!(f.scale(-4.0).norm_l2(), 4.0 * f.norm_l2(), epsilon = 1e-13);
        assert_abs_diff_eq!(f.scale(-4.0).norm_sup(), 4.0 * f.norm_sup(), epsilon = 1e-13);
    }

    #[test]
    fn argmin_location_centres_flat_troughs() {
        let g = grid(64);
        let f = g
            .sample(|t| if (0.4..=0.6).contains(&t) { -1.0 } else { 0.5 })
            .unwrap();
        assert_abs_diff_eq!(f.argmin_location(), 0.5, epsilon = 1e-12);
        let wrap = g
            .sample(|t| if !(0.1..=0.9).contains(&t) { -1.0 } else { 0.5 })
            .unwrap();
        let theta = wrap.argmin_location();
        assert!((0.0..1.0).contains(&theta));
        assert!(torus_distance(theta, 0.0) < 1e-12);
    }
}
