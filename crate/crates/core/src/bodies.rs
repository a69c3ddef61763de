//! Symmetric convex bodies in `R^n` represented by their norm (gauge)
//! oracles, with polar norms, hit-or-miss volumes and section diameters.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, invalid, Error, Result};
use crate::fingerprint::Fingerprint;
use crate::norms::InducedNorm;
use crate::rng;
use crate::subspace::Subspace;

/// Default multi-start budget for section diameters.
pub const DEFAULT_RESTARTS: usize = 32;
/// Witnesses satisfy `norm(witness) = 1` within this tolerance.
pub const WITNESS_TOL: f64 = 1e-8;
/// Iteration budget per start for the projected ascent/descent loops.
pub const ASCENT_ITERS: usize = 400;
const DUAL_RESTARTS: usize = 8;

/// Volume of the Euclidean unit ball, `pi^{n/2} / Gamma(n/2 + 1)`.
pub fn ball_volume(n: usize) -> f64 {
    if n <= 64 {
        // V_n = 2 pi / n V_{n-2}
        let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
        for k in ((n % 2 + 2)..=n).step_by(2) {
            v *= std::f64::consts::TAU / k as f64;
        }
        return v;
    }
    ln_ball_volume(n).exp()
}

/// `ln` of [`ball_volume`], finite for dimensions where the volume underflows.
pub fn ln_ball_volume(n: usize) -> f64 {
    if n <= 64 {
        return ball_volume(n).ln();
    }
    let h = n as f64 / 2.0;
    h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)
}

/// Ellipsoid `{a : a^T A a <= 1}` for a symmetric positive-definite `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    shape: DMatrix<f64>,
    inverse: DMatrix<f64>,
    /// Eigenvalues of `shape`, ascending, with matching eigenvector columns.
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn from_shape(shape: DMatrix<f64>) -> Result<Self> {
        if !shape.is_square() || shape.nrows() == 0 {
            return Err(invalid("shape matrix must be square and nonempty"));
        }
        let asym = (&shape - shape.transpose()).amax();
        if asym > 1e-12 * shape.amax().max(1.0) {
            return Err(invalid("shape matrix is not symmetric"));
        }
        let eig = SymmetricEigen::new(shape.clone());
        let mut order: Vec<usize> = (0..shape.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        if eigenvalues[0] <= 0.0 {
            return Err(invalid("shape matrix is not positive definite"));
        }
        let eigenvectors = DMatrix::from_columns(
            &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
        );
        let inverse = shape
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("shape matrix is not positive definite"))?
            .inverse();
        Ok(Self {
            shape,
            inverse,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn from_semi_axes(axes: &[f64]) -> Result<Self> {
        if axes.iter().any(|&a| !(a > 0.0)) {
            return Err(invalid("semi-axes must be positive"));
        }
        Self::from_shape(DMatrix::from_diagonal(&DVector::from_iterator(
            axes.len(),
            axes.iter().map(|a| 1.0 / (a * a)),
        )))
    }

    /// Random orientation with semi-axes drawn uniformly from `axis_range`.
    pub fn random(n: usize, axis_range: (f64, f64), seed: u64) -> Result<Self> {
        let (lo, hi) = axis_range;
        if !(0.0 < lo && lo <= hi) {
            return Err(invalid("axis range must satisfy 0 < lo <= hi"));
        }
        let mut r = rng::stream(seed, 0);
        let axes: Vec<f64> = (0..n).map(|_| lo + (hi - lo) * r.random::<f64>()).collect();
        let rot = crate::subspace::random_subspace(n, n, rng::derive(seed, 1))?;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(n, axes.iter().map(|a| 1.0 / (a * a))));
        let shape = rot.basis() * d * rot.basis().transpose();
        Self::from_shape((&shape + shape.transpose()) * 0.5)
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.nrows()
    }

    /// Semi-axis lengths, descending.
    pub fn semi_axes(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect()
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim()) * self.semi_axes().iter().product::<f64>()
    }

    /// Polar ellipsoid (shape `A^{-1}`).
    pub fn polar(&self) -> Self {
        Self::from_shape((&self.inverse + self.inverse.transpose()) * 0.5)
            .expect("inverse of an SPD matrix is SPD")
    }

    /// Section by a subspace, in the subspace's intrinsic coordinates.
    pub fn section(&self, l: &Subspace) -> Self {
        let m = l.basis().tr_mul(&(&self.shape * l.basis()));
        Self::from_shape((&m + m.transpose()) * 0.5).expect("restriction of an SPD form is SPD")
    }

    fn norm(&self, a: &[f64]) -> f64 {
        quad_form(&self.shape, a).sqrt()
    }

    fn dual(&self, a: &[f64]) -> f64 {
        quad_form(&self.inverse, a).sqrt()
    }
}

fn quad_form(m: &DMatrix<f64>, a: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += m[(i, j)] * a[i];
        }
        s += col * a[j];
    }
    s.max(0.0)
}

#[derive(Debug, Clone)]
pub enum BodyKind {
    /// Unit ball of `l_p`, `1 <= p <= inf`.
    Lp(f64),
    Ellipsoid(Ellipsoid),
    /// Unit ball of `||J alpha||_{L_p}`.
    Induced(Arc<InducedNorm>),
    /// `parent ∩ L`, in the intrinsic coordinates of `L`.
    Section { parent: Arc<NormBody>, subspace: Subspace },
    /// Polar body of `inner`.
    Polar(Arc<NormBody>),
}

/// A symmetric convex body given by its norm oracle, scaled by `scale`
/// (the body is `scale * K` for the kind's unit body `K`).
#[derive(Debug, Clone)]
pub struct NormBody {
    dim: usize,
    kind: BodyKind,
    scale: f64,
    circumradius_hint: Option<f64>,
}

/// Value of a dual (polar) norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DualNorm {
    pub value: f64,
    /// Closed form; otherwise `value` is a lower bound from projected ascent.
    pub exact: bool,
    pub converged: bool,
    /// A maximizer `beta` with `norm(beta) = 1` (a subgradient of the dual norm).
    pub argmax: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl VolumeEstimate {
    pub fn relative_error(&self) -> f64 {
        if self.value > 0.0 {
            self.stderr / self.value
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionDiameter {
    pub value: f64,
    pub witness: DVector<f64>,
    /// Closed form (ellipsoids, Euclidean balls, one-dimensional sections).
    pub exact: bool,
    pub converged: bool,
}

impl NormBody {
    fn with_kind(dim: usize, kind: BodyKind) -> Self {
        Self {
            dim,
            kind,
            scale: 1.0,
            circumradius_hint: None,
        }
    }

    pub fn lp(n: usize, p: f64) -> Result<Self> {
        if n == 0 || !(p >= 1.0) {
            return Err(invalid(format!("l_p ball needs n >= 1 and p >= 1 (got n={n}, p={p})")));
        }
        Ok(Self::with_kind(n, BodyKind::Lp(p)))
    }

    pub fn euclidean(n: usize) -> Self {
        Self::with_kind(n, BodyKind::Lp(2.0))
    }

    pub fn ellipsoid(e: Ellipsoid) -> Self {
        Self::with_kind(e.dim(), BodyKind::Ellipsoid(e))
    }

    pub fn induced(norm: Arc<InducedNorm>) -> Self {
        Self::with_kind(norm.dim(), BodyKind::Induced(norm))
    }

    /// The body `c * self`.
    pub fn scaled(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("scale must be positive and finite"));
        }
        self.scale *= c;
        self.circumradius_hint = self.circumradius_hint.map(|r| r * c);
        Ok(self)
    }

    /// Supplies a radius `R` with `body ⊆ R B_2` for kinds without a closed form.
    pub fn with_circumradius_hint(mut self, r: f64) -> Self {
        self.circumradius_hint = Some(r);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Reproducibility token covering the kind, its parameters and the scale.
    pub fn digest(&self) -> String {
        let mut f = Fingerprint::new("body");
        self.feed(&mut f);
        f.finish()
    }

    fn feed(&self, f: &mut Fingerprint) {
        f.u64(self.dim as u64).f64(self.scale);
        match &self.kind {
            BodyKind::Lp(p) => {
                f.str("lp").f64(*p);
            }
            BodyKind::Ellipsoid(e) => {
                f.str("ellipsoid").f64s(e.shape.iter());
            }
            BodyKind::Induced(norm) => {
                let sp = norm.spectrum();
                f.str("induced").str(&sp.manifold().name()).f64(norm.p());
                for b in sp.blocks() {
                    f.u64(*b as u64);
                }
                f.u64(norm.rule().len() as u64).u64(norm.rule().exactness() as u64);
            }
            BodyKind::Section { parent, subspace } => {
                f.str("section").f64s(subspace.basis().iter());
                parent.feed(f);
            }
            BodyKind::Polar(inner) => {
                f.str("polar");
                inner.feed(f);
            }
        }
    }

    /// `self ∩ L` in the intrinsic coordinates of `L`.
    pub fn section(self: &Arc<Self>, l: &Subspace) -> Result<NormBody> {
        check_dim(self.dim, l.ambient_dim())?;
        let s = l.dim();
        let mut out = match &self.kind {
            BodyKind::Lp(p) if *p == 2.0 => NormBody::euclidean(s),
            BodyKind::Ellipsoid(e) => NormBody::ellipsoid(e.section(l)),
            _ => {
                let mut b = Self::with_kind(
                    s,
                    BodyKind::Section {
                        parent: Arc::new(self.as_unscaled()),
                        subspace: l.clone(),
                    },
                );
                b.circumradius_hint = self.unscaled_circumradius();
                b
            }
        };
        out.scale = self.scale;
        Ok(out)
    }

    fn as_unscaled(&self) -> NormBody {
        let mut b = self.clone();
        b.scale = 1.0;
        b.circumradius_hint = self.circumradius_hint.map(|r| r / self.scale);
        b
    }

    /// The polar body, with closed forms where available.
    pub fn polar(&self) -> NormBody {
        let mut out = match &self.kind {
            BodyKind::Lp(p) => NormBody::with_kind(self.dim, BodyKind::Lp(conjugate(*p))),
            BodyKind::Ellipsoid(e) => NormBody::ellipsoid(e.polar()),
            BodyKind::Polar(inner) => inner.as_ref().clone(),
            _ => NormBody::with_kind(self.dim, BodyKind::Polar(Arc::new(self.as_unscaled()))),
        };
        out.scale = 1.0 / self.scale;
        if let BodyKind::Polar(inner) = &self.kind {
            out.scale = inner.scale / self.scale;
            out.circumradius_hint = inner.circumradius_hint.map(|r| r / self.scale);
        }
        out
    }

    /// Closed-form (or hinted) `R` with `body ⊆ R B_2`.
    pub fn circumradius(&self) -> Option<f64> {
        self.unscaled_circumradius().map(|r| r * self.scale)
    }

    fn unscaled_circumradius(&self) -> Option<f64> {
        if let Some(r) = self.circumradius_hint {
            return Some(r / self.scale);
        }
        let n = self.dim as f64;
        match &self.kind {
            BodyKind::Lp(p) => Some(n.powf((0.5 - 1.0 / p).max(0.0))),
            BodyKind::Ellipsoid(e) => Some(e.semi_axes()[0]),
            BodyKind::Induced(norm) => Some(norm.circumradius()),
            BodyKind::Section { parent, .. } => parent.circumradius(),
            BodyKind::Polar(inner) => inner.inradius().map(|r| 1.0 / r),
        }
    }

    /// Radius `r` with `r B_2 ⊆ body`, when known in closed form.
    pub fn inradius(&self) -> Option<f64> {
        let n = self.dim as f64;
        let r = match &self.kind {
            BodyKind::Lp(p) => Some(n.powf((0.5 - 1.0 / p).min(0.0))),
            BodyKind::Ellipsoid(e) => e.semi_axes().last().copied(),
            BodyKind::Induced(norm) => Some(norm.inradius()),
            BodyKind::Section { parent, .. } => parent.inradius(),
            BodyKind::Polar(inner) => inner.circumradius().map(|r| 1.0 / r),
        };
        r.map(|r| r * self.scale)
    }

    pub fn norm(&self, alpha: &[f64]) -> Result<f64> {
        check_dim(self.dim, alpha.len())?;
        Ok(self.norm_unchecked(alpha))
    }

    fn norm_unchecked(&self, alpha: &[f64]) -> f64 {
        let raw = match &self.kind {
            BodyKind::Lp(p) => lp(alpha, *p),
            BodyKind::Ellipsoid(e) => e.norm(alpha),
            BodyKind::Induced(norm) => norm.norm(alpha).expect("dimension checked"),
            BodyKind::Section { parent, subspace } => {
                let x = subspace.embed(&DVector::from_column_slice(alpha));
                parent.norm_unchecked(x.as_slice())
            }
            BodyKind::Polar(inner) => inner.dual_unchecked(alpha).value,
        };
        raw / self.scale
    }

    /// Norms of the columns of `points` (dim x k).
    pub fn norms_of_columns(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        check_dim(self.dim, points.nrows())?;
        if let BodyKind::Induced(norm) = &self.kind {
            return Ok(norm
                .norms_of_columns(points)
                .into_iter()
                .map(|v| v / self.scale)
                .collect());
        }
        Ok(points
            .column_iter()
            .map(|c| self.norm_unchecked(c.as_slice()))
            .collect())
    }

    /// Norm and a subgradient at `alpha`.
    pub fn norm_and_grad(&self, alpha: &[f64]) -> Result<(f64, DVector<f64>)> {
        check_dim(self.dim, alpha.len())?;
        Ok(self.norm_grad_unchecked(alpha))
    }

    fn norm_grad_unchecked(&self, alpha: &[f64]) -> (f64, DVector<f64>) {
        let (v, g) = match &self.kind {
            BodyKind::Lp(p) => (lp(alpha, *p), lp_grad(alpha, *p)),
            BodyKind::Ellipsoid(e) => {
                let v = e.norm(alpha);
                let g = if v > 0.0 {
                    &e.shape * DVector::from_column_slice(alpha) / v
                } else {
                    DVector::zeros(alpha.len())
                };
                (v, g)
            }
            BodyKind::Induced(norm) => {
                let (_, g) = norm.discrete_norm_and_grad(alpha);
                (norm.norm(alpha).expect("dimension checked"), g)
            }
            BodyKind::Section { parent, subspace } => {
                let x = subspace.embed(&DVector::from_column_slice(alpha));
                let (v, g) = parent.norm_grad_unchecked(x.as_slice());
                (v, subspace.coords(&g))
            }
            BodyKind::Polar(inner) => {
                let d = inner.dual_unchecked(alpha);
                (d.value, d.argmax)
            }
        };
        (v / self.scale, g / self.scale)
    }

    /// `sup { |<alpha, beta>| : norm(beta) <= 1 }`.
    pub fn dual_norm(&self, alpha: &[f64]) -> Result<DualNorm> {
        check_dim(self.dim, alpha.len())?;
        Ok(self.dual_unchecked(alpha))
    }

    fn dual_unchecked(&self, alpha: &[f64]) -> DualNorm {
        let a = DVector::from_column_slice(alpha);
        let closed = match &self.kind {
            BodyKind::Lp(p) => {
                let q = conjugate(*p);
                Some((lp(alpha, q), lp_grad(alpha, q)))
            }
            BodyKind::Ellipsoid(e) => {
                let v = e.dual(alpha);
                let g = if v > 0.0 { &e.inverse * &a / v } else { DVector::zeros(self.dim) };
                Some((v, g))
            }
            BodyKind::Polar(inner) => Some(inner.norm_grad_unchecked(alpha)),
            _ => None,
        };
        if let Some((v, g)) = closed {
            // polar of scale*K is (1/scale) K°
            let mut argmax = g;
            let n = self.norm_unchecked(argmax.as_slice());
            if n > 0.0 {
                argmax /= n;
            }
            return DualNorm {
                value: v * self.scale,
                exact: true,
                converged: true,
                argmax,
            };
        }
        self.dual_by_ascent(&a)
    }

    /// Multi-start projected ascent on `<alpha, beta> / norm(beta)`.
    fn dual_by_ascent(&self, alpha: &DVector<f64>) -> DualNorm {
        let n = self.dim;
        let an = alpha.norm();
        if an == 0.0 {
            return DualNorm {
                value: 0.0,
                exact: false,
                converged: true,
                argmax: DVector::zeros(n),
            };
        }
        let objective = |b: &DVector<f64>| alpha.dot(b) / self.norm_unchecked(b.as_slice());
        let seed = 0x5eed ^ n as u64;
        let mut best: Option<(f64, DVector<f64>, bool)> = None;
        for start in 0..DUAL_RESTARTS {
            let mut beta = if start == 0 {
                alpha / an
            } else {
                let mut r = rng::stream(seed, start as u64);
                let g = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(&mut r));
                let gn = g.norm();
                let g = g / gn;
                if g.dot(alpha) < 0.0 {
                    -g
                } else {
                    g
                }
            };
            let mut f = objective(&beta);
            let mut step = 0.5;
            let mut converged = false;
            for _ in 0..ASCENT_ITERS {
                let (nb, gb) = self.norm_grad_unchecked(beta.as_slice());
                let grad = (alpha - &gb * (alpha.dot(&beta) / nb)) / nb;
                // tangent to the unit sphere at beta
                let grad = &grad - &beta * grad.dot(&beta);
                let gn = grad.norm();
                if gn <= 1e-14 * an {
                    converged = true;
                    break;
                }
                let mut improved = false;
                while step > 1e-14 {
                    let cand = &beta + &grad * (step / gn);
                    let cand = &cand / cand.norm();
                    let fc = objective(&cand);
                    if fc > f {
                        improved = fc - f > 1e-15 * f.abs();
                        beta = cand;
                        f = fc;
                        step = (step * 2.0).min(1.0);
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    converged = true;
                    break;
                }
            }
            if best.as_ref().map_or(true, |(bf, _, _)| f > *bf) {
                best = Some((f, beta, converged));
            }
        }
        let (value, beta, converged) = best.expect("at least one start");
        let nb = self.norm_unchecked(beta.as_slice());
        DualNorm {
            value,
            exact: false,
            converged,
            argmax: beta / nb,
        }
    }
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn lp(a: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        a.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        a.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let m = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * a.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn lp_grad(a: &[f64], p: f64) -> DVector<f64> {
    let n = a.len();
    if p.is_infinite() {
        // average over the (near-)active coordinates: a convex combination of
        // the active gradients, which avoids stalling on ties
        let m = lp(a, p);
        if m == 0.0 {
            return DVector::zeros(n);
        }
        let active: Vec<usize> = (0..n).filter(|&i| a[i].abs() >= m * (1.0 - 1e-12)).collect();
        let w = 1.0 / active.len() as f64;
        let mut g = DVector::zeros(n);
        for i in active {
            g[i] = w * a[i].signum();
        }
        return g;
    }
    if p == 1.0 {
        return DVector::from_iterator(n, a.iter().map(|x| if *x == 0.0 { 0.0 } else { x.signum() }));
    }
    let v = lp(a, p);
    if v == 0.0 {
        return DVector::zeros(n);
    }
    DVector::from_iterator(n, a.iter().map(|x| (x.abs() / v).powf(p - 1.0) * x.signum()))
}

fn uniform_ball_point<R: Rng + ?Sized>(k: usize, radius: f64, r: &mut R) -> DVector<f64> {
    let g = DVector::<f64>::from_fn(k, |_, _| StandardNormal.sample(r));
    let u: f64 = r.random();
    g.clone() * (radius * u.powf(1.0 / k as f64) / g.norm())
}

/// Hit-or-miss volume inside the circumscribed Euclidean ball, optionally of
/// the section by `subspace` (measured in the subspace's dimension).
pub fn mc_volume(
    body: &NormBody,
    subspace: Option<&Subspace>,
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    mc_volume_affine(body, subspace, None, samples, seed)
}

/// Volume of `body ∩ (offset + L)`; `offset` must be orthogonal to `L`.
pub fn mc_volume_affine(
    body: &NormBody,
    subspace: Option<&Subspace>,
    offset: Option<&DVector<f64>>,
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let radius = body.circumradius().ok_or(Error::MissingCircumradius)?;
    let k = match subspace {
        Some(l) => {
            check_dim(body.dim(), l.ambient_dim())?;
            l.dim()
        }
        None => body.dim(),
    };
    let mut local_radius = radius;
    if let Some(y) = offset {
        check_dim(body.dim(), y.len())?;
        let l = subspace.ok_or_else(|| invalid("an offset needs a subspace"))?;
        let along = l.coords(y).norm();
        if along > 1e-10 * y.norm().max(1.0) {
            return Err(invalid("offset is not orthogonal to the subspace"));
        }
        let r2 = radius * radius - y.norm_squared();
        if r2 <= 0.0 {
            return Ok(VolumeEstimate {
                value: 0.0,
                stderr: 0.0,
                samples,
            });
        }
        local_radius = r2.sqrt();
    }
    let chunks: Vec<_> = rng::chunks(samples).collect();
    let hits: Vec<Result<usize>> = chunks
        .into_par_iter()
        .map(|(idx, _, len)| {
            let mut r = rng::stream(seed, idx);
            let mut pts = DMatrix::zeros(body.dim(), len);
            for j in 0..len {
                let u = uniform_ball_point(k, local_radius, &mut r);
                let mut x = match subspace {
                    Some(l) => l.embed(&u),
                    None => u,
                };
                if let Some(y) = offset {
                    x += y;
                }
                pts.set_column(j, &x);
            }
            Ok(body.norms_of_columns(&pts)?.into_iter().filter(|&v| v <= 1.0).count())
        })
        .collect();
    let mut total = 0usize;
    for h in hits {
        total += h?;
    }
    let f = total as f64 / samples as f64;
    let enclosing = ball_volume(k) * local_radius.powi(k as i32);
    Ok(VolumeEstimate {
        value: enclosing * f,
        stderr: enclosing * (f * (1.0 - f) / samples as f64).sqrt(),
        samples,
    })
}

/// `diam(body ∩ L) = 2 max { ||a||_2 : a ∈ L, norm(a) <= 1 }`.
///
/// Closed form for ellipsoids and Euclidean balls; otherwise `2 / min norm`
/// over the unit sphere of `L` by multi-start projected subgradient descent.
pub fn diameter_of_section(
    body: &NormBody,
    l: &Subspace,
    restarts: usize,
    seed: u64,
) -> Result<SectionDiameter> {
    check_dim(body.dim(), l.ambient_dim())?;
    let s = l.dim();
    match body.kind() {
        BodyKind::Ellipsoid(e) => {
            let sec = e.section(l);
            let lambda = sec.eigenvalues[0];
            let dir = l.embed(&sec.eigenvectors.column(0).into_owned());
            let witness = &dir * (body.scale / lambda.sqrt() / dir.norm());
            return Ok(SectionDiameter {
                value: 2.0 * body.scale / lambda.sqrt(),
                witness,
                exact: true,
                converged: true,
            });
        }
        BodyKind::Lp(p) if *p == 2.0 => {
            let witness = l.basis().column(0) * body.scale;
            return Ok(SectionDiameter {
                value: 2.0 * body.scale,
                witness,
                exact: true,
                converged: true,
            });
        }
        _ => {}
    }
    let norm_at = |c: &DVector<f64>| body.norm_unchecked(l.embed(c).as_slice());
    let finish = |c: DVector<f64>, exact: bool, converged: bool| {
        let x = l.embed(&c);
        let v = body.norm_unchecked(x.as_slice());
        let witness = &x / v;
        SectionDiameter {
            value: 2.0 * witness.norm(),
            witness,
            exact,
            converged,
        }
    };
    if s == 1 {
        return Ok(finish(DVector::from_element(1, 1.0), true, true));
    }
    let restarts = restarts.max(1);
    let results: Vec<(f64, DVector<f64>, bool)> = (0..restarts)
        .into_par_iter()
        .map(|start| {
            let mut r = rng::stream(seed, start as u64);
            let mut c = DVector::<f64>::from_fn(s, |_, _| StandardNormal.sample(&mut r));
            c /= c.norm();
            let mut f = norm_at(&c);
            let mut step = 0.25;
            let mut converged = false;
            for _ in 0..ASCENT_ITERS {
                let x = l.embed(&c);
                let (_, g) = body.norm_grad_unchecked(x.as_slice());
                let g = l.coords(&g);
                let g = &g - &c * g.dot(&c);
                let gn = g.norm();
                if gn <= 1e-14 * f.max(1e-300) {
                    converged = true;
                    break;
                }
                let mut improved = false;
                while step > 1e-15 {
                    let cand = &c - &g * (step / gn);
                    let cand = &cand / cand.norm();
                    let fc = norm_at(&cand);
                    if fc < f {
                        improved = f - fc > 1e-15 * f;
                        c = cand;
                        f = fc;
                        step = (step * 2.0).min(1.0);
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    converged = true;
                    break;
                }
            }
            (f, c, converged)
        })
        .collect();
    let (_, c, converged) = results
        .into_iter()
        .fold(None::<(f64, DVector<f64>, bool)>, |acc, item| match acc {
            Some(a) if a.0 <= item.0 => Some(a),
            _ => Some(item),
        })
        .expect("at least one restart");
    Ok(finish(c, false, converged))
}
