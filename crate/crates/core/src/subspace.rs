//! Linear subspaces of coefficient space given by orthonormal bases.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::rng;

/// Tolerance on `B^T B = I` accepted by [`Subspace::new`].
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Relative singular-value threshold separating null directions.
pub const RANK_TOL: f64 = 1e-10;
/// Retained singular values below this (relative) mark a degenerate intersection.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// An `s`-dimensional subspace of `R^n`, stored as an `n x s` matrix with
/// orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(invalid(format!(
                "basis shape {}x{} is not a proper frame",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let gram = basis.tr_mul(&basis);
        let dev = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if dev > ORTHONORMALITY_TOL {
            return Err(invalid(format!("basis is not orthonormal (deviation {dev:.2e})")));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes the columns of `spanning` (which must be independent).
    pub fn from_spanning(spanning: DMatrix<f64>) -> Result<Self> {
        let (n, s) = spanning.shape();
        if s == 0 || s > n {
            return Err(invalid("spanning set has the wrong shape"));
        }
        let qr = spanning.qr();
        let r = qr.r();
        let scale = r.diagonal().amax();
        if r.diagonal().iter().any(|d| d.abs() <= RANK_TOL * scale) {
            return Err(invalid("spanning vectors are linearly dependent"));
        }
        Ok(Self { basis: qr.q() })
    }

    /// The whole space `R^n`.
    pub fn full(n: usize) -> Self {
        Self {
            basis: DMatrix::identity(n, n),
        }
    }

    /// Span of the listed coordinate axes.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        let mut b = DMatrix::zeros(n, axes.len());
        for (j, &a) in axes.iter().enumerate() {
            if a >= n {
                return Err(invalid(format!("axis {a} out of range for R^{n}")));
            }
            b[(a, j)] = 1.0;
        }
        Self::new(b)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `B c`: the ambient vector with intrinsic coordinates `c`.
    pub fn embed(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.basis * c
    }

    /// `B^T v`: intrinsic coordinates of the projection of `v`.
    pub fn coords(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(v)
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.embed(&self.coords(v))
    }

    /// `||v - P v||_2`.
    pub fn residual(&self, v: &DVector<f64>) -> Result<f64> {
        check_dim(self.ambient_dim(), v.len())?;
        Ok((v - self.project(v)).norm())
    }

    /// Whether `self` is contained in `other` up to `tol`.
    pub fn is_within(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && self
                .basis
                .column_iter()
                .all(|c| other.residual(&c.into_owned()).map_or(false, |r| r <= tol))
    }
}

/// Haar-distributed `s`-dimensional subspace of `R^n`: QR of a Gaussian
/// matrix with the signs of `R`'s diagonal absorbed into `Q`.
pub fn random_subspace(n: usize, s: usize, seed: u64) -> Result<Subspace> {
    if s == 0 || s > n {
        return Err(invalid(format!("subspace dimension {s} not in 1..={n}")));
    }
    let mut r = rng::stream(seed, 0);
    let g = DMatrix::<f64>::from_fn(n, s, |_, _| StandardNormal.sample(&mut r));
    let qr = g.qr();
    let mut q = qr.q();
    let rd = qr.r().diagonal();
    for (j, d) in rd.iter().enumerate() {
        if *d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(Subspace { basis: q })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub subspace: Subspace,
    /// Smallest singular value kept as nonzero, relative to the largest.
    pub smallest_retained: f64,
    /// Set when `smallest_retained < DEGENERACY_TOL`.
    pub degenerate: bool,
}

/// `a ∩ b` as the null space of the stacked complement projectors
/// `[I - P_a; I - P_b]`, with rank decided at [`RANK_TOL`] relative to the
/// largest singular value.
pub fn intersect(a: &Subspace, b: &Subspace) -> Result<Intersection> {
    let n = a.ambient_dim();
    check_dim(n, b.ambient_dim())?;
    let id = DMatrix::<f64>::identity(n, n);
    let ca = &id - a.basis() * a.basis().transpose();
    let cb = &id - b.basis() * b.basis().transpose();
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&ca);
    stacked.rows_mut(n, n).copy_from(&cb);
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| invalid("singular value decomposition failed"))?;
    let sigma = svd.singular_values;
    let largest = sigma.amax();
    if largest == 0.0 {
        return Ok(Intersection {
            subspace: Subspace::full(n),
            smallest_retained: f64::INFINITY,
            degenerate: false,
        });
    }
    let mut null = Vec::new();
    let mut smallest_retained = f64::INFINITY;
    for (i, &s) in sigma.iter().enumerate() {
        let rel = s / largest;
        if rel <= RANK_TOL {
            null.push(v_t.row(i).transpose());
        } else {
            smallest_retained = smallest_retained.min(rel);
        }
    }
    if null.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let basis = DMatrix::from_columns(&null);
    // re-orthonormalize to clean up rounding in the singular vectors
    let subspace = Subspace::from_spanning(basis)?;
    Ok(Intersection {
        subspace,
        smallest_retained,
        degenerate: smallest_retained < DEGENERACY_TOL,
    })
}
