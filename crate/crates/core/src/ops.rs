//! Second-order centered difference operators on cell fields.
//!
//! Periodic grids wrap; Dirichlet grids read one ghost layer whose content is
//! chosen by [`Ghost`]. The centered gradient and divergence are negative
//! adjoints of each other under the cell-sum inner product on periodic grids,
//! and also on Dirichlet grids when both use a zero ghost.

use alloc::vec;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::math;

/// Content of a Dirichlet ghost cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ghost {
    /// Ghost carries a fixed boundary value.
    Value(f64),
    /// Ghost copies the adjacent interior cell (zero normal gradient).
    Mirror,
}

impl Ghost {
    /// Homogeneous Dirichlet ghost.
    pub const ZERO: Ghost = Ghost::Value(0.0);
}

#[inline]
pub(crate) fn neighbor_value(
    values: &[f64],
    grid: &Grid,
    k: usize,
    axis: usize,
    forward: bool,
    ghost: Ghost,
) -> f64 {
    match grid.neighbor(k, axis, forward) {
        Some(n) => values[n],
        None => match ghost {
            Ghost::Value(v) => v,
            Ghost::Mirror => values[k],
        },
    }
}

/// Same as [`neighbor_value`] for a strided (interleaved) component.
#[inline]
pub(crate) fn neighbor_component(
    values: &[f64],
    grid: &Grid,
    k: usize,
    axis: usize,
    forward: bool,
    comp: usize,
    stride: usize,
    ghost: Ghost,
) -> f64 {
    match grid.neighbor(k, axis, forward) {
        Some(n) => values[n * stride + comp],
        None => match ghost {
            Ghost::Value(v) => v,
            Ghost::Mirror => values[k * stride + comp],
        },
    }
}

/// Centered gradient with a zero Dirichlet ghost.
pub fn grad(s: &ScalarField) -> VectorField {
    grad_with(s, Ghost::ZERO)
}

pub fn grad_with(s: &ScalarField, ghost: Ghost) -> VectorField {
    let grid = *s.grid();
    let d = grid.dim();
    let v = s.values();
    let mut out = vec![0.0; grid.len() * d];
    for k in 0..grid.len() {
        for a in 0..d {
            let up = neighbor_value(v, &grid, k, a, true, ghost);
            let dn = neighbor_value(v, &grid, k, a, false, ghost);
            out[k * d + a] = (up - dn) / (2.0 * grid.spacing(a));
        }
    }
    VectorField::new(grid, out).expect("gradient has grid shape")
}

/// Centered divergence with a zero Dirichlet ghost.
pub fn div(v: &VectorField) -> ScalarField {
    div_with(v, Ghost::ZERO)
}

pub fn div_with(v: &VectorField, ghost: Ghost) -> ScalarField {
    let grid = *v.grid();
    let d = grid.dim();
    let vals = v.values();
    let mut out = vec![0.0; grid.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for a in 0..d {
            let up = neighbor_component(vals, &grid, k, a, true, a, d, ghost);
            let dn = neighbor_component(vals, &grid, k, a, false, a, d, ghost);
            acc += (up - dn) / (2.0 * grid.spacing(a));
        }
        *o = acc;
    }
    ScalarField::new(grid, out).expect("divergence has grid shape")
}

/// Standard (2d+1)-point Laplacian with a zero Dirichlet ghost.
pub fn laplacian(s: &ScalarField) -> ScalarField {
    laplacian_with(s, Ghost::ZERO)
}

pub fn laplacian_with(s: &ScalarField, ghost: Ghost) -> ScalarField {
    let grid = *s.grid();
    let v = s.values();
    let mut out = vec![0.0; grid.len()];
    laplacian_into(v, &grid, ghost, &mut out);
    ScalarField::new(grid, out).expect("laplacian has grid shape")
}

pub(crate) fn laplacian_into(v: &[f64], grid: &Grid, ghost: Ghost, out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for a in 0..grid.dim() {
            let h = grid.spacing(a);
            let up = neighbor_value(v, grid, k, a, true, ghost);
            let dn = neighbor_value(v, grid, k, a, false, ghost);
            acc += (up - 2.0 * v[k] + dn) / (h * h);
        }
        *o = acc;
    }
}

/// `(Σ |s|^p · cell volume)^{1/p}`, or the max norm for `p = ∞`.
pub fn lp_norm(s: &ScalarField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: "L^p exponent must be at least 1",
        });
    }
    let v = s.values();
    if p == f64::INFINITY {
        return Ok(v.iter().fold(0.0, |m, &x| f64::max(m, math::abs(x))));
    }
    let vol = s.grid().cell_volume();
    let sum: f64 = if p == 1.0 {
        v.iter().map(|x| math::abs(*x)).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum()
    } else {
        v.iter().map(|x| math::powf(math::abs(*x), p)).sum()
    };
    let total = sum * vol;
    Ok(if p == 1.0 {
        total
    } else if p == 2.0 {
        math::sqrt(total)
    } else {
        math::powf(total, 1.0 / p)
    })
}

/// Cell-sum inner product `Σ a·b · cell volume`.
pub fn inner(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    a.same_grid(b.grid())?;
    let vol = a.grid().cell_volume();
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * vol)
}

pub fn inner_vector(a: &VectorField, b: &VectorField) -> Result<f64> {
    a.same_grid(b.grid())?;
    let vol = a.grid().cell_volume();
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use core::f64::consts::PI;

    fn line(n: usize) -> Grid {
        Grid::line(n, 1.0, Boundary::Periodic).unwrap()
    }

    #[test]
    fn constant_has_zero_gradient() {
        for bc in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::rect(6, 5, 1.0, 2.0, bc).unwrap();
            let s = ScalarField::constant(g, 3.5);
            let gr = grad_with(&s, Ghost::Mirror);
            assert!(gr.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn periodic_laplacian_sums_to_zero() {
        let g = line(64);
        let s = ScalarField::from_fn(g, |x| math::sin(2.0 * PI * x[0]));
        let l = laplacian(&s);
        assert!(l.integral().abs() < 1e-12);
    }

    #[test]
    fn laplacian_converges_at_second_order() {
        // Refinement oracle: the error against -(2π)² s must drop ~4x per doubling.
        let err = |n: usize| {
            let g = line(n);
            let s = ScalarField::from_fn(g, |x| math::sin(2.0 * PI * x[0]));
            let l = laplacian(&s);
            l.values()
                .iter()
                .zip(s.values())
                .map(|(a, b)| (a + 4.0 * PI * PI * b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(64), err(128), err(256));
        for r in [e1 / e2, e2 / e3] {
            assert!((r - 4.0).abs() < 0.6, "ratio {r}");
        }
    }

    #[test]
    fn grad_div_adjoint() {
        for bc in [Boundary::Periodic, Boundary::Dirichlet] {
            let g = Grid::rect(8, 6, 1.0, 1.5, bc).unwrap();
            let s = ScalarField::from_fn(g, |x| math::sin(3.0 * x[0]) + x[1] * x[1]);
            let v = VectorField::from_fn(g, |x| [math::cos(x[1]) * x[0], x[0] - x[1]]);
            let lhs = inner_vector(&grad(&s), &v).unwrap();
            let rhs = inner(&s, &div(&v)).unwrap();
            assert!((lhs + rhs).abs() < 1e-12, "{bc:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn lp_norm_examples() {
        let g = line(16);
        let c = ScalarField::constant(g, -0.75);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_norm(&c, p).unwrap() - 0.75).abs() < 1e-14);
        }
        let half = ScalarField::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        assert!((lp_norm(&half, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(lp_norm(&c, 0.5).is_err());
        assert!(lp_norm(&c, f64::NAN).is_err());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = ScalarField::zeros(line(8));
        let b = ScalarField::zeros(line(16));
        assert_eq!(inner(&a, &b), Err(Error::GridMismatch));
    }
}
