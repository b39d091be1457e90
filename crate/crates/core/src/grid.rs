//! Uniform rectangular grids in one or two physical dimensions.

use crate::error::{Error, Result};

/// Boundary treatment shared by every field on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    /// Homogeneous Dirichlet walls (`u = 0`, `f = 0`, `η = 0`) realized with
    /// one ghost layer.
    Dirichlet,
}

/// A uniform box grid of cell-centered unknowns. Cells are numbered with the
/// x index running fastest: `k = i + nx * j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    lengths: [f64; 2],
    bc: Boundary,
}

/// Minimum cell count per axis.
pub const MIN_CELLS: usize = 4;

impl Grid {
    /// `cells` and `lengths` must both have length 1 or 2.
    pub fn new(cells: &[usize], lengths: &[f64], bc: Boundary) -> Result<Self> {
        let dim = cells.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "physical dimension must be 1 or 2",
            });
        }
        if lengths.len() != dim {
            return Err(Error::InvalidParameter {
                name: "lengths",
                reason: "need one length per axis",
            });
        }
        if cells.iter().any(|&n| n < MIN_CELLS) {
            return Err(Error::InvalidParameter {
                name: "cells",
                reason: "need at least 4 cells per axis",
            });
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "lengths",
                reason: "domain lengths must be positive and finite",
            });
        }
        let mut c = [1usize; 2];
        let mut l = [1.0f64; 2];
        c[..dim].copy_from_slice(cells);
        l[..dim].copy_from_slice(lengths);
        Ok(Grid {
            dim,
            cells: c,
            lengths: l,
            bc,
        })
    }

    pub fn line(n: usize, length: f64, bc: Boundary) -> Result<Self> {
        Self::new(&[n], &[length], bc)
    }

    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64, bc: Boundary) -> Result<Self> {
        Self::new(&[nx, ny], &[lx, ly], bc)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn bc(&self) -> Boundary {
        self.bc
    }

    /// Cell counts of the active axes.
    #[inline]
    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    /// Domain lengths of the active axes.
    #[inline]
    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.cells[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Total number of cells.
    #[inline]
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.cells[0] * j
    }

    #[inline]
    pub fn coords(&self, k: usize) -> [usize; 2] {
        [k % self.cells[0], k / self.cells[0]]
    }

    /// Cell-center position; the second entry is 0 in one dimension.
    pub fn center(&self, k: usize) -> [f64; 2] {
        let c = self.coords(k);
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = (c[a] as f64 + 0.5) * self.spacing(a);
        }
        x
    }

    /// Neighbor of cell `k` one step along `axis` (`forward` = increasing
    /// index). `None` means the neighbor is a Dirichlet ghost cell.
    #[inline]
    pub fn neighbor(&self, k: usize, axis: usize, forward: bool) -> Option<usize> {
        let n = self.cells[axis];
        let mut c = self.coords(k);
        let i = c[axis];
        let j = if forward {
            if i + 1 == n {
                match self.bc {
                    Boundary::Periodic => 0,
                    Boundary::Dirichlet => return None,
                }
            } else {
                i + 1
            }
        } else if i == 0 {
            match self.bc {
                Boundary::Periodic => n - 1,
                Boundary::Dirichlet => return None,
            }
        } else {
            i - 1
        };
        c[axis] = j;
        Some(self.index(c[0], c[1]))
    }
}
