//! Cell-averaged scalar and vector fields.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// One real per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.center(k))).collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `Σ s · cell volume`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn same_grid(&self, other: &Grid) -> Result<()> {
        if &self.grid == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn ensure_nonnegative(&self, what: &'static str) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0 || v.is_nan()) {
            Some(cell) => Err(Error::Negative {
                what,
                cell,
                value: self.values[cell],
            }),
            None => Ok(()),
        }
    }
}

/// `dim` reals per cell, stored interleaved: component `a` of cell `k` is at
/// `k * dim + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * grid.dim();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(VectorField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            values: vec![0.0; grid.len() * grid.dim()],
        }
    }

    /// Samples `f` at cell centers; only the first `dim` components are kept.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Self {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.len() * d);
        for k in 0..grid.len() {
            let v = f(grid.center(k));
            values.extend_from_slice(&v[..d]);
        }
        VectorField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, k: usize, axis: usize) -> f64 {
        self.values[k * self.grid.dim() + axis]
    }

    #[inline]
    pub fn set(&mut self, k: usize, axis: usize, v: f64) {
        let d = self.grid.dim();
        self.values[k * d + axis] = v;
    }

    /// Component `axis` as a scalar field.
    pub fn component(&self, axis: usize) -> ScalarField {
        let d = self.grid.dim();
        ScalarField {
            grid: self.grid,
            values: self.values.iter().skip(axis).step_by(d).copied().collect(),
        }
    }

    pub fn from_components(components: &[ScalarField]) -> Result<Self> {
        let grid = *components.first().ok_or(Error::GridMismatch)?.grid();
        if components.len() != grid.dim() {
            return Err(Error::InvalidParameter {
                name: "components",
                reason: "need one component per axis",
            });
        }
        for c in components {
            c.same_grid(&grid)?;
        }
        let d = grid.dim();
        let mut values = vec![0.0; grid.len() * d];
        for (a, c) in components.iter().enumerate() {
            for (k, &v) in c.values().iter().enumerate() {
                values[k * d + a] = v;
            }
        }
        Ok(VectorField { grid, values })
    }

    pub fn scale(&self, s: f64) -> Self {
        VectorField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Largest Euclidean norm over cells.
    pub fn max_norm(&self) -> f64 {
        let d = self.grid.dim();
        self.values
            .chunks_exact(d)
            .map(|c| crate::math::sqrt(c.iter().map(|v| v * v).sum()))
            .fold(0.0, f64::max)
    }

    pub(crate) fn same_grid(&self, other: &Grid) -> Result<()> {
        if &self.grid == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn length_must_match_grid() {
        let g = Grid::rect(4, 5, 1.0, 1.0, Boundary::Periodic).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 19]).is_err());
        assert!(ScalarField::new(g, vec![0.0; 20]).is_ok());
        assert!(VectorField::new(g, vec![0.0; 20]).is_err());
        assert!(VectorField::new(g, vec![0.0; 40]).is_ok());
    }

    #[test]
    fn components_round_trip() {
        let g = Grid::rect(4, 4, 1.0, 1.0, Boundary::Periodic).unwrap();
        let v = VectorField::from_fn(g, |x| [x[0], 2.0 * x[1]]);
        let w = VectorField::from_components(&[v.component(0), v.component(1)]).unwrap();
        assert_eq!(v, w);
    }
}
