use std::f64::consts::{PI, TAU};

use crate::harmonics::{Manifold, SpectrumSelection};

/// Oversampling factor (relative to the spectral resolution) for exponents
/// where `|t|^p` is not a polynomial, and for sup-norm grids.
pub const APPROX_OVERSAMPLING: usize = 8;

/// A positive-weight cubature rule for the normalized invariant measure.
///
/// `exactness` is the largest degree `D` such that every polynomial of degree
/// `<= D` (per-coordinate frequency on tori, harmonic degree on the sphere) is
/// integrated exactly. A product of polynomials of degrees `a` and `b` has
/// degree `a + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    manifold: Manifold,
    coords: Vec<f64>,
    weights: Vec<f64>,
    exactness: usize,
    spacing: Vec<f64>,
}

impl QuadratureRule {
    /// Smallest product rule on `manifold` exact up to `degree`.
    pub fn exact(manifold: Manifold, degree: usize) -> Self {
        match manifold.torus_dim() {
            Some(d) => Self::torus_grid(manifold, d, degree + 1),
            None => Self::sphere_product(degree / 2 + 1, degree + 1),
        }
    }

    /// Rule exact for every even exponent in `exponents` applied to
    /// polynomials of `spectrum`; other exponents (including infinity) get an
    /// oversampled rule.
    pub fn for_exponents(spectrum: &SpectrumSelection, exponents: &[f64]) -> Self {
        let deg = spectrum.degree();
        let degree = exponents
            .iter()
            .map(|&p| required_degree(p, deg))
            .max()
            .unwrap_or(2 * deg);
        Self::exact(spectrum.manifold(), degree)
    }

    /// Uniform trapezoid grid with `n` points per coordinate on `T^d`.
    pub fn torus_grid(manifold: Manifold, d: usize, n: usize) -> Self {
        let n = n.max(1);
        let total = n.pow(d as u32);
        let h = TAU / n as f64;
        let mut coords = Vec::with_capacity(total * d);
        for code in 0..total {
            let mut rest = code;
            let start = coords.len();
            for _ in 0..d {
                coords.push((rest % n) as f64 * h);
                rest /= n;
            }
            coords[start..].reverse();
        }
        Self {
            manifold,
            coords,
            weights: vec![1.0 / total as f64; total],
            exactness: n - 1,
            spacing: vec![h; d],
        }
    }

    /// Gauss–Legendre in `cos(colatitude)` times a uniform longitude grid.
    pub fn sphere_product(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let mut coords = Vec::with_capacity(2 * n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = xi.clamp(-1.0, 1.0).acos();
            for j in 0..n_phi {
                coords.push(theta);
                coords.push(TAU * j as f64 / n_phi as f64);
                weights.push(wi / (2.0 * n_phi as f64));
            }
        }
        Self {
            manifold: Manifold::Sphere2,
            coords,
            weights,
            exactness: (2 * n_theta - 1).min(n_phi - 1),
            spacing: vec![PI / n_theta as f64, TAU / n_phi as f64],
        }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximate node spacing per coordinate.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn nodes(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.manifold.coord_dim())
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let d = self.manifold.coord_dim();
        &self.coords[i * d..(i + 1) * d]
    }

    /// Whether `|t|^p` is integrated exactly for polynomials of degree `deg`.
    pub fn is_exact_for(&self, p: f64, deg: usize) -> bool {
        is_even_integer(p) && self.exactness >= p as usize * deg
    }

    /// Whether the nodes resolve a degree-`deg` polynomial well enough for a
    /// sup-norm search: at least four nodes per period of the top frequency.
    pub fn resolves(&self, deg: usize) -> bool {
        self.spacing.iter().all(|&h| h * deg as f64 <= PI / 2.0 + 1e-12)
    }
}

pub(crate) fn is_even_integer(p: f64) -> bool {
    p.is_finite() && p >= 2.0 && p.fract() == 0.0 && (p as u64) % 2 == 0
}

pub(crate) fn required_degree(p: f64, deg: usize) -> usize {
    if is_even_integer(p) {
        p as usize * deg
    } else {
        APPROX_OVERSAMPLING * deg
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}
