//! Orientation space: quadrature and real spherical harmonics on S².
//!
//! Nodes form a product rule, Gauss–Legendre in `cos θ` times uniform in `φ`.
//! With `L + 2` latitudes and `2L + 4` longitudes the rule integrates every
//! spherical polynomial up to degree `2L + 3` exactly, which covers products of
//! two band-limited functions and the weak form of the drift operator (whose
//! integrand has degree `2L + 2`).
//!
//! Harmonics are real and orthonormal; coefficient `(l, m)` lives at index
//! `l² + l + m`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

/// 3×3 matrix, row-major.
pub type Mat3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    row: u32,
    col: u32,
    val: f64,
}

/// Discretization data for S² at truncation degree `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereBasis {
    degree: usize,
    n_theta: usize,
    n_phi: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    // harmonic values, node-major: [node * n_coeffs + a]
    ylm: Vec<f64>,
    // Cartesian tangential gradients, node-major like `ylm`
    grad: Vec<[f64; 3]>,
    // weak drift operator for G = e_i ⊗ e_j, index 3 * i + j
    drift: [Vec<Entry>; 9],
    // ∫ (3 τ⊗τ − I) Y_a dτ, nonzero only for l = 2
    stress: Vec<Mat3>,
}

/// Number of coefficients for truncation degree `degree`.
#[inline]
pub const fn coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

#[inline]
pub const fn coeff_index(l: usize, m: isize) -> usize {
    (l * l + l).wrapping_add_signed(m)
}

/// Degree `l` of coefficient index `a`.
#[inline]
pub fn degree_of(a: usize) -> usize {
    let mut l = 0;
    while (l + 1) * (l + 1) <= a {
        l += 1;
    }
    l
}

/// Gauss–Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = math::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if math::abs(dz) < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Orthonormal associated Legendre functions `P̄_lm(cos θ)` (including the
/// `1/√(4π)` factor) and their θ-derivatives, for `0 ≤ m ≤ l ≤ degree`.
fn normalized_legendre(degree: usize, x: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let n = tri(degree, degree) + 1;
    let mut p = vec![0.0; n];
    let mut dp = vec![0.0; n];
    p[0] = 1.0 / math::sqrt(4.0 * PI);
    for m in 1..=degree {
        p[tri(m, m)] = math::sqrt((2 * m + 1) as f64 / (2 * m) as f64) * s * p[tri(m - 1, m - 1)];
    }
    for m in 0..degree {
        p[tri(m + 1, m)] = math::sqrt((2 * m + 3) as f64) * x * p[tri(m, m)];
    }
    for m in 0..=degree {
        for l in (m + 2)..=degree {
            let (lf, mf) = (l as f64, m as f64);
            let a = math::sqrt((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf));
            let b = math::sqrt(
                ((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0),
            );
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    // sin θ · dP̄_lm/dθ = l cos θ P̄_lm − √((2l+1)/(2l−1) (l² − m²)) P̄_{l−1,m}
    for l in 1..=degree {
        for m in 0..=l {
            let (lf, mf) = (l as f64, m as f64);
            let lower = if m < l {
                math::sqrt((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf))
                    * p[tri(l - 1, m)]
            } else {
                0.0
            };
            dp[tri(l, m)] = (lf * x * p[tri(l, m)] - lower) / s;
        }
    }
    (p, dp)
}

impl SphereBasis {
    /// Builds the basis for truncation degree `degree ≥ 2`.
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter {
                name: "sphere degree",
                reason: "truncation degree L must be at least 2",
            });
        }
        let n_theta = degree + 2;
        let n_phi = 2 * degree + 4;
        let nc = coeff_count(degree);
        let (xs, ws) = gauss_legendre(n_theta);
        let n_nodes = n_theta * n_phi;
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut weights = Vec::with_capacity(n_nodes);
        let mut ylm = vec![0.0; n_nodes * nc];
        let mut grad = vec![[0.0; 3]; n_nodes * nc];
        let dphi = 2.0 * PI / n_phi as f64;
        let sqrt2 = math::sqrt(2.0);
        for (it, (&x, &wt)) in xs.iter().zip(&ws).enumerate() {
            let s = math::sqrt(1.0 - x * x);
            let (p, dp) = normalized_legendre(degree, x, s);
            for ip in 0..n_phi {
                let phi = ip as f64 * dphi;
                let (sp, cp) = (math::sin(phi), math::cos(phi));
                let k = it * n_phi + ip;
                nodes.push([s * cp, s * sp, x]);
                weights.push(wt * dphi);
                let e_theta = [x * cp, x * sp, -s];
                let e_phi = [-sp, cp, 0.0];
                for l in 0..=degree {
                    for m in -(l as isize)..=(l as isize) {
                        let am = m.unsigned_abs();
                        let (pl, dpl) = (p[tri(l, am)], dp[tri(l, am)]);
                        let mf = am as f64;
                        let (val, d_theta, d_phi) = if m == 0 {
                            (pl, dpl, 0.0)
                        } else if m > 0 {
                            let (c, sn) = (math::cos(mf * phi), math::sin(mf * phi));
                            (sqrt2 * pl * c, sqrt2 * dpl * c, -mf * sqrt2 * pl * sn)
                        } else {
                            let (c, sn) = (math::cos(mf * phi), math::sin(mf * phi));
                            (sqrt2 * pl * sn, sqrt2 * dpl * sn, mf * sqrt2 * pl * c)
                        };
                        let a = coeff_index(l, m);
                        ylm[k * nc + a] = val;
                        let g = &mut grad[k * nc + a];
                        for c in 0..3 {
                            g[c] = d_theta * e_theta[c] + d_phi / s * e_phi[c];
                        }
                    }
                }
            }
        }

        let mut basis = SphereBasis {
            degree,
            n_theta,
            n_phi,
            nodes,
            weights,
            ylm,
            grad,
            drift: Default::default(),
            stress: vec![[[0.0; 3]; 3]; nc],
        };
        basis.build_drift();
        basis.build_stress();
        Ok(basis)
    }

    // Entry (a, b) of the operator for G = e_i ⊗ e_j is
    //   −∫ Y_b τ_j (∇_τ Y_a)_i dτ,
    // the weak form of ∇_τ·(P_{τ⊥}(G τ) f) tested against Y_a. The a = 0 row
    // vanishes identically, so the operator never changes sphere mass.
    fn build_drift(&mut self) {
        let nc = self.n_coeffs();
        let mut dense = vec![0.0; nc * nc];
        for i in 0..3 {
            for j in 0..3 {
                dense.iter_mut().for_each(|v| *v = 0.0);
                for (k, tau) in self.nodes.iter().enumerate() {
                    let w = self.weights[k] * tau[j];
                    let y = &self.ylm[k * nc..(k + 1) * nc];
                    let g = &self.grad[k * nc..(k + 1) * nc];
                    for a in 1..nc {
                        let ga = w * g[a][i];
                        let row = &mut dense[a * nc..(a + 1) * nc];
                        for (r, yb) in row.iter_mut().zip(y) {
                            *r -= ga * yb;
                        }
                    }
                }
                let scale = dense.iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
                let cut = 1e-13 * scale.max(1.0);
                let mut entries = Vec::new();
                for a in 0..nc {
                    for b in 0..nc {
                        let v = dense[a * nc + b];
                        if math::abs(v) > cut {
                            entries.push(Entry {
                                row: a as u32,
                                col: b as u32,
                                val: v,
                            });
                        }
                    }
                }
                self.drift[3 * i + j] = entries;
            }
        }
    }

    fn build_stress(&mut self) {
        let nc = self.n_coeffs();
        for a in coeff_index(2, -2)..=coeff_index(2, 2) {
            let mut t = [[0.0; 3]; 3];
            for (k, tau) in self.nodes.iter().enumerate() {
                let wy = self.weights[k] * self.ylm[k * nc + a];
                for (r, row) in t.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        let delta = if r == c { 1.0 } else { 0.0 };
                        *v += wy * (3.0 * tau[r] * tau[c] - delta);
                    }
                }
            }
            // exact symmetry, exact zero trace
            for r in 0..3 {
                for c in (r + 1)..3 {
                    let s = 0.5 * (t[r][c] + t[c][r]);
                    t[r][c] = s;
                    t[c][r] = s;
                }
            }
            let tr = (t[0][0] + t[1][1] + t[2][2]) / 3.0;
            for (r, row) in t.iter_mut().enumerate() {
                row[r] -= tr;
            }
            self.stress[a] = t;
        }
    }

    /// Truncation degree `L`.
    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn n_coeffs(&self) -> usize {
        coeff_count(self.degree)
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Latitude and longitude counts of the product rule.
    pub fn rule_shape(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    #[inline]
    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Y_a` at node `k`.
    #[inline]
    pub fn harmonic(&self, k: usize, a: usize) -> f64 {
        self.ylm[k * self.n_coeffs() + a]
    }

    /// Cartesian tangential gradient of `Y_a` at node `k`.
    #[inline]
    pub fn harmonic_gradient(&self, k: usize, a: usize) -> [f64; 3] {
        self.grad[k * self.n_coeffs() + a]
    }

    /// Quadrature of nodal values.
    pub fn integrate(&self, nodal: &[f64]) -> f64 {
        nodal.iter().zip(&self.weights).map(|(f, w)| f * w).sum()
    }

    /// Nodal values → harmonic coefficients (exact for band-limited data).
    pub fn forward(&self, nodal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_coeffs()];
        self.forward_into(nodal, &mut out);
        out
    }

    pub fn forward_into(&self, nodal: &[f64], out: &mut [f64]) {
        let nc = self.n_coeffs();
        out.iter_mut().for_each(|c| *c = 0.0);
        for (k, (&f, &w)) in nodal.iter().zip(&self.weights).enumerate() {
            let fw = f * w;
            for (c, y) in out.iter_mut().zip(&self.ylm[k * nc..(k + 1) * nc]) {
                *c += fw * y;
            }
        }
    }

    /// Harmonic coefficients → nodal values.
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        self.inverse_into(coeffs, &mut out);
        out
    }

    pub fn inverse_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let nc = self.n_coeffs();
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.ylm[k * nc..(k + 1) * nc]
                .iter()
                .zip(coeffs)
                .map(|(y, c)| y * c)
                .sum();
        }
    }

    /// Tangential gradient of a band-limited function at every node.
    pub fn gradient_nodal(&self, coeffs: &[f64], out: &mut [[f64; 3]]) {
        let nc = self.n_coeffs();
        for (k, o) in out.iter_mut().enumerate() {
            let mut g = [0.0; 3];
            for (gy, c) in self.grad[k * nc..(k + 1) * nc].iter().zip(coeffs) {
                g[0] += c * gy[0];
                g[1] += c * gy[1];
                g[2] += c * gy[2];
            }
            *o = g;
        }
    }

    /// Laplace–Beltrami operator: coefficient `(l, m)` times `−l(l+1)`.
    pub fn laplacian(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = coeffs.to_vec();
        for l in 0..=self.degree {
            let ev = -((l * (l + 1)) as f64);
            for c in &mut out[l * l..(l + 1) * (l + 1)] {
                *c *= ev;
            }
        }
        out
    }

    /// Adds `scale · ∇_τ·(P_{τ⊥}(G τ) f)` in coefficient space to `out`.
    /// Modes the drift pushes above degree `L` are dropped.
    pub fn add_drift_divergence(&self, g: &Mat3, coeffs: &[f64], scale: f64, out: &mut [f64]) {
        for i in 0..3 {
            for j in 0..3 {
                let gij = g[i][j] * scale;
                if gij == 0.0 {
                    continue;
                }
                for e in &self.drift[3 * i + j] {
                    out[e.row as usize] += gij * e.val * coeffs[e.col as usize];
                }
            }
        }
    }

    /// `∫ (3 τ⊗τ − I) f dτ` from harmonic coefficients.
    pub fn stress_from_coeffs(&self, coeffs: &[f64]) -> Mat3 {
        let mut s = [[0.0; 3]; 3];
        for a in coeff_index(2, -2)..=coeff_index(2, 2) {
            let c = coeffs[a];
            for r in 0..3 {
                for col in 0..3 {
                    s[r][col] += c * self.stress[a][r][col];
                }
            }
        }
        s
    }

    /// `∫ f dτ = √(4π) c₀₀`.
    #[inline]
    pub fn mass_from_coeffs(&self, coeffs: &[f64]) -> f64 {
        math::sqrt(4.0 * PI) * coeffs[0]
    }
}
