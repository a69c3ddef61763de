//! Search for polynomials with a small `||t||_p / ||t||_q` ratio inside a
//! prescribed coefficient subspace.
//!
//! Three strategies share one result type: pure random sampling, projected
//! (sub)gradient descent of the log-ratio on the `q`-norm sphere, and the
//! constructive route through a random subspace, a subspace intersection and
//! the diameter witness of a section of the `p`-ball.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{diameter_of_section, NormBody, DEFAULT_RESTARTS as DIAMETER_RESTARTS};
use crate::error::{invalid, Error, Result};
use crate::harmonics::{Manifold, OrthonormalSystem, SpectrumSelection};
use crate::levy::{levy_mean, sphere_sample};
use crate::norms::{InducedNorm, QuadratureRule};
use crate::rng;

pub use crate::subspace::{intersect, random_subspace, Intersection, Subspace};

pub const DEFAULT_RESTARTS: usize = 16;
pub const DEFAULT_ITERS: usize = 500;
/// Directions sampled to certify the random-subspace norm comparison.
pub const DEFAULT_CERTIFICATE_SAMPLES: usize = 1000;
/// Witnesses lie in their subspace within this projection residual.
pub const SUBSPACE_TOL: f64 = 1e-8;
/// Iterations without improvement before the `p = inf` target gap is halved.
const POLYAK_PATIENCE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RandomSampling,
    RatioDescent,
    ProofPipeline,
}

/// Byproducts of [`proof_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    /// Smallest `K` with `||a||_2 <= K ||a||_W` on the sampled directions of `L_{m1}`.
    pub certificate_constant: f64,
    /// Lévy mean of the dual of the induced `q`-norm.
    pub dual_levy_mean: f64,
    pub dual_levy_stderr: f64,
    /// `M_{W°} / (1 - lambda)`.
    pub levy_prediction: f64,
    pub smallest_retained: f64,
    pub degenerate: bool,
    /// Euclidean diameter of the `p`-ball section found for the witness.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatSearchResult {
    /// Coefficients `alpha*` with `||J alpha*||_q = 1`.
    pub witness: DVector<f64>,
    pub ratio: f64,
    pub p: f64,
    pub q: f64,
    pub method: Method,
    /// Total iterations over all restarts.
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Whether the winning restart stopped at a stationary point.
    pub converged: bool,
    /// Final ratio of every restart, in restart order.
    pub diagnostics: Vec<f64>,
    pub pipeline: Option<PipelineReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub iters: usize,
    /// Ambient coefficients used (after projection onto `L`) as restart 0.
    pub warm_start: Option<DVector<f64>>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            iters: DEFAULT_ITERS,
            warm_start: None,
        }
    }
}

/// The pair of induced norms behind a ratio, on one shared quadrature rule.
#[derive(Debug, Clone)]
pub struct RatioObjective {
    np: InducedNorm,
    nq: InducedNorm,
}

impl RatioObjective {
    pub fn new(spectrum: &Arc<SpectrumSelection>, p: f64, q: f64) -> Result<Self> {
        if !(q >= 1.0 && q < p) {
            return Err(invalid(format!("need 1 <= q < p <= inf (got p={p}, q={q})")));
        }
        let rule = QuadratureRule::for_exponents(spectrum, &[p, q]);
        Ok(Self {
            np: InducedNorm::with_rule(spectrum.clone(), p, rule.clone())?,
            nq: InducedNorm::with_rule(spectrum.clone(), q, rule)?,
        })
    }

    pub fn p_norm(&self) -> &InducedNorm {
        &self.np
    }

    pub fn q_norm(&self) -> &InducedNorm {
        &self.nq
    }

    /// `||J alpha||_p / ||J alpha||_q`, with the refined sup norm for `p = inf`.
    pub fn ratio(&self, alpha: &[f64]) -> Result<f64> {
        Ok(self.np.norm(alpha)? / self.nq.norm(alpha)?)
    }

    /// Rescales `alpha` to `||J alpha||_q = 1`.
    pub fn normalize(&self, alpha: DVector<f64>) -> Result<DVector<f64>> {
        let nq = self.nq.norm(alpha.as_slice())?;
        if !(nq > 0.0) {
            return Err(invalid("zero polynomial has no ratio"));
        }
        Ok(alpha / nq)
    }
}

/// `||J alpha||_p / ||J alpha||_q` for a stored witness.
pub fn ratio(spectrum: &Arc<SpectrumSelection>, alpha: &[f64], p: f64, q: f64) -> Result<f64> {
    RatioObjective::new(spectrum, p, q)?.ratio(alpha)
}

fn check_subspace(spectrum: &SpectrumSelection, l: &Subspace) -> Result<()> {
    crate::error::check_dim(spectrum.dim(), l.ambient_dim())
}

/// Smallest ratio among `samples` uniform directions of `L`.
pub fn random_search(
    spectrum: &Arc<SpectrumSelection>,
    l: &Subspace,
    p: f64,
    q: f64,
    samples: usize,
    seed: u64,
) -> Result<FlatSearchResult> {
    check_subspace(spectrum, l)?;
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let obj = RatioObjective::new(spectrum, p, q)?;
    let bl = obj.np.basis() * l.basis();
    let s = l.dim();
    let best: Vec<(f64, usize)> = rng::chunks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(idx, start, len)| {
            let mut r = rng::stream(seed, idx);
            let c = DMatrix::<f64>::from_fn(s, len, |_, _| StandardNormal.sample(&mut r));
            let alpha = l.basis() * &c;
            let values = &bl * &c;
            let mut out = (f64::INFINITY, start);
            for j in 0..len {
                let a: Vec<f64> = alpha.column(j).iter().copied().collect();
                let v: Vec<f64> = values.column(j).iter().copied().collect();
                let ratio = obj.np.norm_from_values(&a, &v) / obj.nq.norm_from_values(&a, &v);
                if ratio < out.0 {
                    out = (ratio, start + j);
                }
            }
            out
        })
        .collect();
    let (_, winner) = best
        .into_iter()
        .fold((f64::INFINITY, 0), |acc, b| if b.0 < acc.0 { b } else { acc });
    // regenerate the winning sample from its chunk stream
    let (idx, offset) = ((winner / rng::CHUNK) as u64, winner % rng::CHUNK);
    let mut r = rng::stream(seed, idx);
    let c = DMatrix::<f64>::from_fn(s, offset + 1, |_, _| StandardNormal.sample(&mut r));
    let witness = obj.normalize(l.embed(&c.column(offset).into_owned()))?;
    Ok(FlatSearchResult {
        ratio: obj.ratio(witness.as_slice())?,
        witness,
        p,
        q,
        method: Method::RandomSampling,
        iterations: samples,
        restarts: 1,
        seed,
        converged: true,
        diagnostics: Vec::new(),
        pipeline: None,
    })
}

struct Restart {
    ratio: f64,
    coords: DVector<f64>,
    iterations: usize,
    converged: bool,
}

/// Log-ratio and its gradient in subspace coordinates.
struct LogRatio<'a> {
    obj: &'a RatioObjective,
    bl: DMatrix<f64>,
}

impl LogRatio<'_> {
    fn value_grad(&self, c: &DVector<f64>) -> (f64, DVector<f64>, f64) {
        let v = &self.bl * c;
        let (np, gp) = self.obj.np.discrete_with_value_grad(v.as_slice());
        let (nq, gq) = self.obj.nq.discrete_with_value_grad(v.as_slice());
        let g: Vec<f64> = gp.iter().zip(&gq).map(|(a, b)| a / np - b / nq).collect();
        (np.ln() - nq.ln(), self.bl.tr_mul(&DVector::from_vec(g)), nq)
    }

    /// Backtracking descent for finite `p`; the ratio is scale invariant so
    /// each accepted step is renormalized to `||J alpha||_q = 1`.
    fn smooth(&self, mut c: DVector<f64>, iters: usize) -> (DVector<f64>, usize, bool) {
        let (mut f, mut g, nq) = self.value_grad(&c);
        c /= nq;
        g *= nq;
        let mut step = 0.1;
        for it in 0..iters {
            let gn = g.norm();
            let cn = c.norm();
            if gn * cn <= 1e-12 {
                return (c, it, true);
            }
            loop {
                if step < 1e-12 {
                    return (c, it, true);
                }
                let cand = &c - &g * (step * cn / gn);
                let (fc, gc, nqc) = self.value_grad(&cand);
                if fc < f - 1e-4 * step * cn * gn {
                    c = cand / nqc;
                    g = gc * nqc;
                    f = fc;
                    step = (step * 2.0).min(1.0);
                    break;
                }
                step *= 0.5;
            }
        }
        (c, iters, false)
    }

    /// Subgradient descent with Polyak steps towards a target below the best
    /// value found; the target gap halves after a stall.
    fn polyak(&self, c: DVector<f64>, iters: usize) -> (DVector<f64>, usize, bool) {
        let (f0, _, nq) = self.value_grad(&c);
        let mut c = c / nq;
        let mut best = (f0, c.clone());
        let mut gap = 0.5 * f0.max(1e-3);
        let mut stall = 0;
        for it in 0..iters {
            let (f, g, _) = self.value_grad(&c);
            if f < best.0 {
                best = (f, c.clone());
                stall = 0;
            } else {
                stall += 1;
                if stall >= POLYAK_PATIENCE {
                    gap *= 0.5;
                    stall = 0;
                    c = best.1.clone();
                }
            }
            if gap < 1e-10 {
                return (best.1, it, true);
            }
            let gn2 = g.norm_squared();
            if gn2 == 0.0 {
                return (best.1, it, true);
            }
            let t = (f - (best.0 - gap)) / gn2;
            let cand = &c - &g * t;
            let nq = self.obj.nq.discrete_with_value_grad((&self.bl * &cand).as_slice()).0;
            c = cand / nq;
        }
        (best.1, iters, false)
    }
}

/// Minimizes `||J alpha||_p / ||J alpha||_q` over `alpha ∈ L` by multi-start
/// projected (sub)gradient descent in the coordinates of `L`.
pub fn ratio_minimize(
    spectrum: &Arc<SpectrumSelection>,
    l: &Subspace,
    p: f64,
    q: f64,
    options: &SearchOptions,
    seed: u64,
) -> Result<FlatSearchResult> {
    check_subspace(spectrum, l)?;
    if options.restarts == 0 {
        return Err(invalid("at least one restart is required"));
    }
    let obj = RatioObjective::new(spectrum, p, q)?;
    let lr = LogRatio {
        obj: &obj,
        bl: obj.np.basis() * l.basis(),
    };
    let s = l.dim();
    let warm = match &options.warm_start {
        Some(w) => {
            crate::error::check_dim(spectrum.dim(), w.len())?;
            let c = l.coords(w);
            if c.norm() == 0.0 {
                return Err(invalid("warm start is orthogonal to the subspace"));
            }
            Some(c)
        }
        None => None,
    };
    let runs: Vec<Result<Restart>> = (0..options.restarts)
        .into_par_iter()
        .map(|k| {
            let start = match (&warm, k) {
                (Some(c), 0) => c.clone(),
                _ => {
                    let mut r = rng::stream(rng::derive(seed, k as u64), 0);
                    DVector::<f64>::from_fn(s, |_, _| StandardNormal.sample(&mut r))
                }
            };
            let (c, iterations, converged) = if p.is_infinite() {
                lr.polyak(start.clone(), options.iters)
            } else {
                lr.smooth(start.clone(), options.iters)
            };
            // the refined ratio is what gets reported; never end above the start
            let end = obj.ratio(l.embed(&c).as_slice())?;
            let begin = obj.ratio(l.embed(&start).as_slice())?;
            let (ratio, coords) = if begin < end { (begin, start) } else { (end, c) };
            Ok(Restart {
                ratio,
                coords,
                iterations,
                converged,
            })
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let diagnostics: Vec<f64> = runs.iter().map(|r| r.ratio).collect();
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.ratio < a.ratio { b } else { a })
        .expect("at least one restart");
    let witness = obj.normalize(l.embed(&best.coords))?;
    Ok(FlatSearchResult {
        ratio: obj.ratio(witness.as_slice())?,
        witness,
        p,
        q,
        method: Method::RatioDescent,
        iterations,
        restarts: options.restarts,
        seed,
        converged: best.converged,
        diagnostics,
        pipeline: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub certificate_samples: usize,
    pub diameter_restarts: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            certificate_samples: DEFAULT_CERTIFICATE_SAMPLES,
            diameter_restarts: DIAMETER_RESTARTS,
        }
    }
}

/// The constructive route: a Haar subspace `L_{m1}` with `m1 = ceil(lambda n)`,
/// an empirical certificate of `||a||_2 <= K ||a||_W` on it (`W` the induced
/// `q`-ball), the intersection `L_{m1} ∩ L_{m2}`, and the diameter witness of
/// the induced `p`-ball section there, rescaled to `q`-norm 1.
pub fn proof_pipeline(
    spectrum: &Arc<SpectrumSelection>,
    l_m2: &Subspace,
    p: f64,
    q: f64,
    lambda: f64,
    options: PipelineOptions,
    seed: u64,
) -> Result<FlatSearchResult> {
    check_subspace(spectrum, l_m2)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("lambda {lambda} not in (0, 1)")));
    }
    let n = spectrum.dim();
    let m2 = l_m2.dim();
    if m2 as f64 / n as f64 + lambda <= 1.0 {
        return Err(invalid(format!(
            "dim L / n + lambda = {} must exceed 1",
            m2 as f64 / n as f64 + lambda
        )));
    }
    if options.certificate_samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let obj = RatioObjective::new(spectrum, p, q)?;
    let m1 = ((lambda * n as f64).ceil() as usize).min(n);
    let l_m1 = random_subspace(n, m1, rng::derive(seed, 1))?;

    let directions = l_m1.basis() * sphere_sample(m1, options.certificate_samples, rng::derive(seed, 2))?;
    let certificate_constant = obj
        .nq
        .norms_of_columns(&directions)
        .into_iter()
        .map(|w| 1.0 / w)
        .fold(0.0, f64::max);
    let w_body = NormBody::induced(Arc::new(obj.nq.clone()));
    let dual = levy_mean(&w_body.polar(), options.certificate_samples, rng::derive(seed, 3))?;

    let inter = intersect(&l_m1, l_m2)?;
    let m3 = inter.subspace.dim();
    // reuse the original basis when the intersection is one of the inputs
    let section = if m3 == m1 {
        l_m1.clone()
    } else if m3 == m2 {
        l_m2.clone()
    } else {
        inter.subspace.clone()
    };
    let p_body = NormBody::induced(Arc::new(obj.np.clone()));
    let diam = diameter_of_section(&p_body, &section, options.diameter_restarts, rng::derive(seed, 4))?;
    let witness = obj.normalize(diam.witness.clone())?;
    Ok(FlatSearchResult {
        ratio: obj.ratio(witness.as_slice())?,
        witness,
        p,
        q,
        method: Method::ProofPipeline,
        iterations: 0,
        restarts: options.diameter_restarts,
        seed,
        converged: diam.converged,
        diagnostics: Vec::new(),
        pipeline: Some(PipelineReport {
            m1,
            m2,
            m3,
            certificate_constant,
            dual_levy_mean: dual.value,
            dual_levy_stderr: dual.stderr,
            levy_prediction: dual.value / (1.0 - lambda),
            smallest_retained: inter.smallest_retained,
            degenerate: inter.degenerate,
            diameter: diam.value,
        }),
    })
}

/// The endpoint factor: 1 for `1 < q, p < inf`, `sqrt(ln n)` when exactly
/// one of `q = 1`, `p = inf` holds, `ln n` when both do.
pub fn rho(n: usize, p: f64, q: f64) -> f64 {
    let ln = (n as f64).ln();
    match (q == 1.0, p.is_infinite()) {
        (false, false) => 1.0,
        (true, true) => ln,
        _ => ln.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem3Row {
    pub n: usize,
    pub subspace_dim: usize,
    pub worst_ratio: f64,
    pub best_ratio: f64,
    pub rho: f64,
    /// `worst_ratio / rho`.
    pub normalized: f64,
    pub all_converged: bool,
    /// Per-subspace results, in trial order.
    pub trials: Vec<FlatSearchResult>,
}

/// For every `n`, minimizes the ratio on `trials` Haar subspaces of dimension
/// `ceil(epsilon n)` and reports the worst minimum against `rho(n)`.
#[allow(clippy::too_many_arguments)]
pub fn theorem3_experiment(
    manifold: Manifold,
    n_list: &[usize],
    epsilon: f64,
    p: f64,
    q: f64,
    trials: usize,
    options: &SearchOptions,
    seed: u64,
) -> Result<Vec<Theorem3Row>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon {epsilon} not in (0, 1)")));
    }
    let smallest = n_list.iter().copied().min().ok_or_else(|| invalid("empty dimension list"))?;
    if epsilon * (smallest as f64) < 2.0 {
        return Err(invalid("epsilon * min(n) must be at least 2"));
    }
    if trials == 0 {
        return Err(invalid("at least one trial is required"));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let system = Arc::new(OrthonormalSystem::covering(manifold, n)?);
        let spectrum = Arc::new(SpectrumSelection::with_dimension(system, n)?);
        let s = (epsilon * n as f64).ceil() as usize;
        let row_seed = rng::derive(seed, n as u64);
        let results = (0..trials)
            .map(|t| {
                let trial_seed = rng::derive(row_seed, t as u64);
                let l = random_subspace(n, s, trial_seed)?;
                ratio_minimize(&spectrum, &l, p, q, options, rng::derive(trial_seed, 1))
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = results.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let best = results.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let rho = rho(n, p, q);
        rows.push(Theorem3Row {
            n,
            subspace_dim: s,
            worst_ratio: worst,
            best_ratio: best,
            rho,
            normalized: worst / rho,
            all_converged: results.iter().all(|r| r.converged),
            trials: results,
        });
    }
    Ok(rows)
}
