//! Closed-form orthonormal eigenfunction systems on the circle, the flat tori
//! of dimension at most three, and the two-sphere.
//!
//! Every basis is real and orthonormal in `L_2` of the *normalized* invariant
//! measure. Eigenfunctions are grouped into blocks, one block per eigenspace
//! of the Laplace–Beltrami operator, ordered by nondecreasing eigenvalue.
//!
//! * Tori: a block collects every lattice frequency `k` with the same `|k|^2`.
//!   Each pair `{k, -k}` contributes `sqrt(2) cos(k.x)` and `sqrt(2) sin(k.x)`.
//! * Sphere: block `l` holds the `2l + 1` real spherical harmonics of degree
//!   `l`, ordered `m = 0, (cos 1, sin 1), ..., (cos l, sin l)`.
//!
//! On these homogeneous spaces every block satisfies the addition theorem
//! `sum_s |f_s(x)|^2 = d_j` pointwise, so the class constant is 1.

use std::collections::BTreeMap;
use std::f64::consts::{SQRT_2, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::norms::QuadratureRule;

/// Largest spherical-harmonic degree supported by the Legendre recurrences.
pub const MAX_SPHERE_DEGREE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Torus1,
    /// Flat torus of dimension 1 to 3.
    TorusD(u8),
    /// Unit sphere in R^3, coordinates (colatitude, longitude).
    Sphere2,
}

impl Manifold {
    /// Number of coordinates describing a point.
    pub fn coord_dim(self) -> usize {
        match self {
            Manifold::Torus1 => 1,
            Manifold::TorusD(d) => d as usize,
            Manifold::Sphere2 => 2,
        }
    }

    pub fn torus_dim(self) -> Option<usize> {
        match self {
            Manifold::Torus1 => Some(1),
            Manifold::TorusD(d) => Some(d as usize),
            Manifold::Sphere2 => None,
        }
    }

    /// Draws a point from the normalized invariant measure.
    pub fn random_point<R: Rng + ?Sized>(self, rng: &mut R) -> Vec<f64> {
        match self {
            Manifold::Sphere2 => {
                let z: f64 = 1.0 - 2.0 * rng.random::<f64>();
                vec![z.clamp(-1.0, 1.0).acos(), TAU * rng.random::<f64>()]
            }
            _ => (0..self.coord_dim())
                .map(|_| TAU * rng.random::<f64>())
                .collect(),
        }
    }

    /// Unit vector in R^3 for a sphere point.
    pub fn sphere_embed(x: &[f64]) -> [f64; 3] {
        let (st, ct) = x[0].sin_cos();
        let (sp, cp) = x[1].sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn name(self) -> String {
        match self {
            Manifold::Torus1 => "torus1".into(),
            Manifold::TorusD(d) => format!("torus{d}"),
            Manifold::Sphere2 => "sphere2".into(),
        }
    }
}

impl std::str::FromStr for Manifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "torus1" | "t1" | "circle" => Ok(Manifold::Torus1),
            "torus2" | "t2" => Ok(Manifold::TorusD(2)),
            "torus3" | "t3" => Ok(Manifold::TorusD(3)),
            "sphere2" | "s2" | "sphere" => Ok(Manifold::Sphere2),
            other => Err(invalid(format!("unknown manifold '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum BlockBasis {
    Constant,
    /// Half-lattice representatives; each yields a (cos, sin) pair.
    Torus(Vec<Vec<i32>>),
    Sphere(usize),
}

/// One eigenspace: eigenvalue, dimension and its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub eigenvalue: f64,
    pub dim: usize,
    basis: BlockBasis,
}

impl Block {
    /// Largest per-coordinate frequency (tori) or degree (sphere).
    pub fn degree(&self) -> usize {
        match &self.basis {
            BlockBasis::Constant => 0,
            BlockBasis::Torus(freqs) => freqs
                .iter()
                .flat_map(|k| k.iter().map(|c| c.unsigned_abs() as usize))
                .max()
                .unwrap_or(0),
            BlockBasis::Sphere(l) => *l,
        }
    }
}

/// An eigenspace-blocked orthonormal family on one of the model manifolds.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalSystem {
    manifold: Manifold,
    blocks: Vec<Block>,
    class_k_constant: f64,
}

impl OrthonormalSystem {
    /// Circle with blocks `0..=max_frequency`; block `k` has eigenvalue `k^2`.
    pub fn torus1(max_frequency: usize) -> Self {
        let mut system = Self::torus(1, max_frequency * max_frequency)
            .expect("one-dimensional torus is always valid");
        system.manifold = Manifold::Torus1;
        system
    }

    /// Flat torus `T^d` with every eigenspace of eigenvalue `<= max_eigenvalue`.
    pub fn torus(d: usize, max_eigenvalue: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(invalid(format!("torus dimension {d} not in 1..=3")));
        }
        let radius = (max_eigenvalue as f64).sqrt().floor() as i32;
        let mut shells: BTreeMap<usize, Vec<Vec<i32>>> = BTreeMap::new();
        let side = (2 * radius + 1) as usize;
        for code in 0..side.pow(d as u32) {
            let mut rest = code;
            let k: Vec<i32> = (0..d)
                .map(|_| {
                    let c = (rest % side) as i32 - radius;
                    rest /= side;
                    c
                })
                .rev()
                .collect();
            let r = k.iter().map(|c| c * c).sum::<i32>() as usize;
            let leading_positive = matches!(k.iter().find(|&&c| c != 0), Some(&c) if c > 0);
            if r <= max_eigenvalue && leading_positive {
                shells.entry(r).or_default().push(k);
            }
        }
        let mut blocks = vec![Block {
            eigenvalue: 0.0,
            dim: 1,
            basis: BlockBasis::Constant,
        }];
        blocks.extend(shells.into_iter().map(|(r, freqs)| Block {
            eigenvalue: r as f64,
            dim: 2 * freqs.len(),
            basis: BlockBasis::Torus(freqs),
        }));
        let manifold = if d == 1 {
            Manifold::Torus1
        } else {
            Manifold::TorusD(d as u8)
        };
        Ok(Self {
            manifold,
            blocks,
            class_k_constant: 1.0,
        })
    }

    /// Two-sphere with degrees `0..=max_degree`; block `l` has eigenvalue `l(l+1)`.
    pub fn sphere2(max_degree: usize) -> Result<Self> {
        if max_degree > MAX_SPHERE_DEGREE {
            return Err(invalid(format!(
                "sphere degree {max_degree} exceeds cap {MAX_SPHERE_DEGREE}"
            )));
        }
        let blocks = (0..=max_degree)
            .map(|l| Block {
                eigenvalue: (l * (l + 1)) as f64,
                dim: 2 * l + 1,
                basis: if l == 0 {
                    BlockBasis::Constant
                } else {
                    BlockBasis::Sphere(l)
                },
            })
            .collect();
        Ok(Self {
            manifold: Manifold::Sphere2,
            blocks,
            class_k_constant: 1.0,
        })
    }

    /// Builds the smallest system on `manifold` whose leading blocks can reach
    /// dimension `n`.
    pub fn covering(manifold: Manifold, n: usize) -> Result<Self> {
        match manifold {
            Manifold::Torus1 => Ok(Self::torus1(n / 2 + 1)),
            Manifold::TorusD(d) => {
                // lattice points in a ball of radius R number about c_d R^d
                let mut r = 1;
                loop {
                    let sys = Self::torus(d as usize, r)?;
                    if sys.total_dim() >= n {
                        return Ok(sys);
                    }
                    r *= 2;
                }
            }
            Manifold::Sphere2 => {
                let l = ((n as f64).sqrt().ceil() as usize).max(1);
                Self::sphere2(l.min(MAX_SPHERE_DEGREE))
            }
        }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn class_k_constant(&self) -> f64 {
        self.class_k_constant
    }

    /// Overrides the class constant `C` in the block bound `sum |xi|^2 <= C d_j`.
    pub fn with_class_k_constant(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("class constant must be positive"));
        }
        self.class_k_constant = c;
        Ok(self)
    }

    fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Values of block `j`'s orthonormal basis at `x`.
    pub fn evaluate_block(&self, j: usize, x: &[f64]) -> Result<Vec<f64>> {
        let block = self.blocks.get(j).ok_or(Error::BlockOutOfRange {
            index: j,
            available: self.blocks.len(),
        })?;
        check_dim(self.manifold.coord_dim(), x.len())?;
        let mut out = vec![0.0; block.dim];
        match &block.basis {
            BlockBasis::Constant => out[0] = 1.0,
            BlockBasis::Torus(freqs) => {
                for (slot, k) in out.chunks_exact_mut(2).zip(freqs) {
                    let phase: f64 = k.iter().zip(x).map(|(&kc, &xc)| kc as f64 * xc).sum();
                    let (s, c) = phase.sin_cos();
                    slot[0] = SQRT_2 * c;
                    slot[1] = SQRT_2 * s;
                }
            }
            BlockBasis::Sphere(l) => {
                let table = LegendreTable::new(*l, x[0].cos(), x[0].sin());
                fill_sphere_block(&table, *l, x[1], &mut out);
            }
        }
        Ok(out)
    }
}

/// Fully normalized associated Legendre values `Pbar_l^m(cos t)` with
/// `int_{-1}^{1} Pbar^2 dx = 2`, stored row-major by `(l, m)` for `m <= l`.
struct LegendreTable {
    values: Vec<f64>,
}

impl LegendreTable {
    fn index(l: usize, m: usize) -> usize {
        l * (l + 1) / 2 + m
    }

    fn new(max_degree: usize, c: f64, s: f64) -> Self {
        let mut values = vec![0.0; Self::index(max_degree, max_degree) + 1];
        values[0] = 1.0;
        let mut diag = 1.0;
        for m in 0..=max_degree {
            if m > 0 {
                diag *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
                values[Self::index(m, m)] = diag;
            }
            if m < max_degree {
                values[Self::index(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * c * diag;
            }
            for l in (m + 2)..=max_degree {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                values[Self::index(l, m)] =
                    a * (c * values[Self::index(l - 1, m)] - b * values[Self::index(l - 2, m)]);
            }
        }
        Self { values }
    }

    fn get(&self, l: usize, m: usize) -> f64 {
        self.values[Self::index(l, m)]
    }
}

fn fill_sphere_block(table: &LegendreTable, l: usize, phi: f64, out: &mut [f64]) {
    out[0] = table.get(l, 0);
    for m in 1..=l {
        let (s, c) = (m as f64 * phi).sin_cos();
        let p = SQRT_2 * table.get(l, m);
        out[2 * m - 1] = p * c;
        out[2 * m] = p * s;
    }
}

/// A chosen set of blocks `{j_1 < ... < j_m}` and the coordinate map between
/// coefficient slots and basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSelection {
    system: Arc<OrthonormalSystem>,
    blocks: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
}

impl SpectrumSelection {
    pub fn new(system: Arc<OrthonormalSystem>, blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(invalid("spectrum must select at least one block"));
        }
        if blocks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("block indices must be strictly increasing"));
        }
        let available = system.blocks.len();
        if let Some(&bad) = blocks.iter().find(|&&j| j >= available) {
            return Err(Error::BlockOutOfRange {
                index: bad,
                available,
            });
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for &j in &blocks {
            offsets.push(dim);
            dim += system.blocks[j].dim;
        }
        Ok(Self {
            system,
            blocks,
            offsets,
            dim,
        })
    }

    /// The leading blocks `0..count`.
    pub fn leading(system: Arc<OrthonormalSystem>, count: usize) -> Result<Self> {
        Self::new(system, (0..count).collect())
    }

    /// The leading blocks whose dimensions add up to exactly `n`.
    pub fn with_dimension(system: Arc<OrthonormalSystem>, n: usize) -> Result<Self> {
        let mut total = 0;
        for (j, b) in system.blocks.iter().enumerate() {
            total += b.dim;
            if total == n {
                return Self::leading(system, j + 1);
            }
            if total > n {
                break;
            }
        }
        Err(invalid(format!(
            "no leading block union of {} has dimension {n}",
            system.manifold.name()
        )))
    }

    /// Torus1 spectrum with frequencies `0, ±1, ..., ±m` (`n = 2m + 1`).
    pub fn torus1_trigonometric(m: usize) -> Self {
        Self::leading(Arc::new(OrthonormalSystem::torus1(m)), m + 1)
            .expect("torus1 leading blocks exist")
    }

    pub fn system(&self) -> &OrthonormalSystem {
        &self.system
    }

    pub fn manifold(&self) -> Manifold {
        self.system.manifold
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(block index, position within block)` for coefficient slot `i`.
    pub fn slot(&self, i: usize) -> Option<(usize, usize)> {
        if i >= self.dim {
            return None;
        }
        let s = self.offsets.partition_point(|&o| o <= i) - 1;
        Some((self.blocks[s], i - self.offsets[s]))
    }

    /// Selected blocks with their coefficient offsets.
    pub fn selected(&self) -> impl Iterator<Item = (usize, &Block, usize)> + '_ {
        self.blocks
            .iter()
            .zip(&self.offsets)
            .map(move |(&j, &off)| (j, &self.system.blocks[j], off))
    }

    /// Spectral resolution: max per-coordinate frequency, or max degree.
    pub fn degree(&self) -> usize {
        self.selected().map(|(_, b, _)| b.degree()).max().unwrap_or(0)
    }

    /// Values of all `n` selected basis functions at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.manifold().coord_dim(), x.len())?;
        let mut out = vec![0.0; self.dim];
        self.evaluate_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation; `x` and `out` must have the right lengths.
    pub(crate) fn evaluate_into(&self, x: &[f64], out: &mut [f64]) {
        let deg = self.degree();
        match self.manifold() {
            Manifold::Sphere2 => {
                let table = LegendreTable::new(deg, x[0].cos(), x[0].sin());
                for (_, block, off) in self.selected() {
                    match block.basis {
                        BlockBasis::Constant => out[off] = 1.0,
                        BlockBasis::Sphere(l) => {
                            fill_sphere_block(&table, l, x[1], &mut out[off..off + block.dim])
                        }
                        BlockBasis::Torus(_) => unreachable!(),
                    }
                }
            }
            _ => {
                // powers e^{i j x_c} for j = 0..=deg, per coordinate
                let powers: Vec<Vec<(f64, f64)>> = x
                    .iter()
                    .map(|&xc| {
                        let (s1, c1) = xc.sin_cos();
                        let mut p = Vec::with_capacity(deg + 1);
                        let (mut c, mut s) = (1.0, 0.0);
                        for j in 0..=deg {
                            if j % 32 == 0 && j > 0 {
                                // resync to bound recurrence drift
                                let (sj, cj) = (j as f64 * xc).sin_cos();
                                c = cj;
                                s = sj;
                            }
                            p.push((c, s));
                            let next = (c * c1 - s * s1, s * c1 + c * s1);
                            c = next.0;
                            s = next.1;
                        }
                        p
                    })
                    .collect();
                for (_, block, off) in self.selected() {
                    match &block.basis {
                        BlockBasis::Constant => out[off] = 1.0,
                        BlockBasis::Torus(freqs) => {
                            for (q, k) in freqs.iter().enumerate() {
                                let (mut re, mut im) = (1.0, 0.0);
                                for (c, &kc) in k.iter().enumerate() {
                                    let (pc, ps) = powers[c][kc.unsigned_abs() as usize];
                                    let ps = if kc < 0 { -ps } else { ps };
                                    let r = re * pc - im * ps;
                                    im = re * ps + im * pc;
                                    re = r;
                                }
                                out[off + 2 * q] = SQRT_2 * re;
                                out[off + 2 * q + 1] = SQRT_2 * im;
                            }
                        }
                        BlockBasis::Sphere(_) => unreachable!(),
                    }
                }
            }
        }
    }

    /// Basis values at every node of `rule`, one row per node.
    pub fn basis_matrix(&self, rule: &QuadratureRule) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rule.len(), self.dim);
        let mut row = vec![0.0; self.dim];
        for (i, x) in rule.nodes().enumerate() {
            self.evaluate_into(x, &mut row);
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// The coordinate isomorphism `J`: value of `sum_k alpha_k xi_k` at `x`.
    pub fn synthesize(&self, alpha: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(self.dim, alpha.len())?;
        let basis = self.evaluate(x)?;
        Ok(basis.iter().zip(alpha).map(|(b, a)| b * a).sum())
    }

    /// Coefficients of the kernel column `K_n(., y)`.
    pub fn kernel_column(&self, y: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.evaluate(y)?))
    }
}

/// Outcome of a class-K verification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassKReport {
    /// Every block equals `d_j` within tolerance at every point.
    pub holds: bool,
    /// Every block satisfies the inequality `sum |xi|^2 <= C d_j`.
    pub bound_holds: bool,
    pub max_deviation: f64,
}

/// Checks the addition theorem `sum_s |f_s(x)|^2 = d_j` for every selected
/// block at every point.
pub fn class_k_verify(spectrum: &SpectrumSelection, points: &[Vec<f64>], tol: f64) -> ClassKReport {
    let c = spectrum.system().class_k_constant();
    let mut values = vec![0.0; spectrum.dim()];
    let mut max_deviation: f64 = 0.0;
    let mut bound_holds = true;
    for x in points {
        spectrum.evaluate_into(x, &mut values);
        for (_, block, off) in spectrum.selected() {
            let sum: f64 = values[off..off + block.dim].iter().map(|v| v * v).sum();
            let d = block.dim as f64;
            max_deviation = max_deviation.max((sum - d).abs());
            bound_holds &= sum <= c * d + tol;
        }
    }
    ClassKReport {
        holds: !points.is_empty() && max_deviation <= tol,
        bound_holds,
        max_deviation,
    }
}

/// Reproducing kernel `K_n(x, y) = sum_k xi_k(x) xi_k(y)`.
pub fn kernel(spectrum: &SpectrumSelection, x: &[f64], y: &[f64]) -> Result<f64> {
    let bx = spectrum.evaluate(x)?;
    let by = spectrum.evaluate(y)?;
    Ok(bx.iter().zip(&by).map(|(a, b)| a * b).sum())
}

/// Max over `pairs` of `|int K(x,z) K(z,y) dnu(z) - K(x,y)|`.
pub fn kernel_reproducing_check(
    spectrum: &SpectrumSelection,
    rule: &QuadratureRule,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64> {
    if rule.manifold() != spectrum.manifold() {
        return Err(invalid("quadrature rule is on a different manifold"));
    }
    let required = 2 * spectrum.degree();
    if rule.exactness() < required {
        return Err(Error::InsufficientExactness {
            required,
            available: rule.exactness(),
        });
    }
    let basis = spectrum.basis_matrix(rule);
    let weights = DVector::from_column_slice(rule.weights());
    let mut worst: f64 = 0.0;
    for (x, y) in pairs {
        let bx = DVector::from_vec(spectrum.evaluate(x)?);
        let by = DVector::from_vec(spectrum.evaluate(y)?);
        let kxz = &basis * &bx;
        let kzy = &basis * &by;
        let integral = kxz.component_mul(&kzy).dot(&weights);
        worst = worst.max((integral - bx.dot(&by)).abs());
    }
    Ok(worst)
}

/// Great-circle angle between two sphere points.
pub fn sphere_angle(x: &[f64], y: &[f64]) -> f64 {
    let a = Manifold::sphere_embed(x);
    let b = Manifold::sphere_embed(y);
    let dot: f64 = a.iter().zip(&b).map(|(u, v)| u * v).sum();
    dot.clamp(-1.0, 1.0).acos()
}
