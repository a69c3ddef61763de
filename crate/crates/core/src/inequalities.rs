//! Numerical checks of the volume and diameter inequalities used to bound
//! sections of norm balls.
//!
//! Every check is phrased as `lhs <= rhs` and passes when that holds within
//! three combined standard errors of the Monte Carlo quantities involved. A
//! volume estimate whose relative error exceeds [`MAX_RELATIVE_ERROR`] makes
//! the report inconclusive instead.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::bodies::{
    ball_volume, diameter_of_section, mc_volume, mc_volume_affine, BodyKind, NormBody, VolumeEstimate,
    DEFAULT_RESTARTS,
};
use crate::error::{check_dim, invalid, Result};
use crate::fingerprint::Fingerprint;
use crate::levy::{levy_mean, sphere_sample};
use crate::rng;
use crate::subspace::Subspace;

/// Relative standard error above which a volume makes a check inconclusive.
pub const MAX_RELATIVE_ERROR: f64 = 0.05;
/// Largest dimension accepted by the Urysohn check.
pub const MAX_URYSOHN_DIM: usize = 10;
/// Largest (section) dimension accepted by the volume-product checks.
pub const MAX_PRODUCT_DIM: usize = 8;
/// Standard errors of slack allowed before a check fails.
pub const SIGMAS: f64 = 3.0;
/// Relative floating-point slack for checks that are exact equalities.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Passed,
    Failed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub status: Status,
    pub passed: bool,
    /// Combined standard error of `lhs - rhs`.
    pub stderr_budget: f64,
    pub inputs_digest: String,
}

impl InequalityReport {
    /// `lhs / rhs`.
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Constants of the volume lower bound: Urysohn (`c1`) and Bourgain–Milman (`c2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 0.5 }
    }
}

struct Outcome {
    lhs: f64,
    lhs_err: f64,
    rhs: f64,
    rhs_err: f64,
    volumes: Vec<VolumeEstimate>,
}

fn report(name: &str, o: Outcome, digest: Fingerprint) -> InequalityReport {
    let budget = o.lhs_err.hypot(o.rhs_err);
    let rounding = ROUNDING * o.lhs.abs().max(o.rhs.abs());
    let holds = o.lhs <= o.rhs + SIGMAS * budget + rounding;
    let noisy = o.volumes.iter().any(|v| !(v.relative_error() <= MAX_RELATIVE_ERROR));
    let status = if noisy {
        Status::Inconclusive
    } else if holds {
        Status::Passed
    } else {
        Status::Failed
    };
    InequalityReport {
        name: name.to_string(),
        lhs: o.lhs,
        rhs: o.rhs,
        slack: o.rhs - o.lhs,
        status,
        passed: status == Status::Passed,
        stderr_budget: budget,
        inputs_digest: digest.finish(),
    }
}

fn fingerprint(name: &str, body: &NormBody, l: Option<&Subspace>, samples: usize, seed: u64) -> Fingerprint {
    let mut f = Fingerprint::new(name);
    f.str(&body.digest()).u64(samples as u64).u64(seed);
    if let Some(l) = l {
        f.f64s(l.basis().iter());
    }
    f
}

/// `body ∩ L` in the coordinates of `L`, or the body itself.
fn section_of(body: &NormBody, l: Option<&Subspace>) -> Result<NormBody> {
    match l {
        Some(l) => Arc::new(body.clone()).section(l),
        None => Ok(body.clone()),
    }
}

fn check_dim_at_most(dim: usize, max: usize) -> Result<()> {
    if dim > max {
        return Err(invalid(format!("dimension {dim} exceeds the volume limit {max}")));
    }
    Ok(())
}

/// Diameter of `body ∩ L` (closed forms for full-space `l_p` balls).
fn diameter(body: &NormBody, l: Option<&Subspace>, seed: u64) -> Result<f64> {
    if l.is_none() {
        if let BodyKind::Lp(_) = body.kind() {
            return body
                .circumradius()
                .map(|r| 2.0 * r)
                .ok_or(crate::Error::MissingCircumradius);
        }
    }
    let full;
    let l = match l {
        Some(l) => l,
        None => {
            full = Subspace::full(body.dim());
            &full
        }
    };
    Ok(diameter_of_section(body, l, DEFAULT_RESTARTS, seed)?.value)
}

/// `(Vol(V) / Vol(B))^{1/n} <= M_{V°}`: the volume radius is at most the
/// mean width (the Lévy mean of the dual norm).
pub fn check_urysohn(body: &NormBody, vol_samples: usize, levy_samples: usize, seed: u64) -> Result<InequalityReport> {
    let n = body.dim();
    check_dim_at_most(n, MAX_URYSOHN_DIM)?;
    let vol = mc_volume(body, None, vol_samples, rng::derive(seed, 1))?;
    let nf = n as f64;
    let lhs = (vol.value / ball_volume(n)).powf(1.0 / nf);
    let width = levy_mean(&body.polar(), levy_samples, rng::derive(seed, 2))?;
    let mut f = fingerprint("urysohn", body, None, vol_samples, seed);
    f.u64(levy_samples as u64);
    Ok(report(
        "urysohn",
        Outcome {
            lhs,
            lhs_err: lhs * vol.relative_error() / nf,
            rhs: width.value,
            rhs_err: width.stderr,
            volumes: vec![vol],
        },
        f,
    ))
}

fn volume_product(k: &NormBody, samples: usize, seed: u64) -> Result<(VolumeEstimate, VolumeEstimate)> {
    let v = mc_volume(k, None, samples, rng::derive(seed, 1))?;
    let vp = mc_volume(&k.polar(), None, samples, rng::derive(seed, 2))?;
    Ok((v, vp))
}

/// `Vol(K) Vol(K°) <= Vol(B)^2` for `K = body` or `K = body ∩ L`, reported as
/// the ratio `Vol(K) Vol(K°) / Vol(B)^2 <= 1`.
pub fn check_santalo(body: &NormBody, l: Option<&Subspace>, samples: usize, seed: u64) -> Result<InequalityReport> {
    let k = section_of(body, l)?;
    let m = k.dim();
    check_dim_at_most(m, MAX_PRODUCT_DIM)?;
    let (v, vp) = volume_product(&k, samples, seed)?;
    let lhs = v.value * vp.value / ball_volume(m).powi(2);
    Ok(report(
        "santalo",
        Outcome {
            lhs,
            lhs_err: lhs * v.relative_error().hypot(vp.relative_error()),
            rhs: 1.0,
            rhs_err: 0.0,
            volumes: vec![v, vp],
        },
        fingerprint("santalo", body, l, samples, seed),
    ))
}

/// `2^m Vol(B^m) diam(K)^{-m} <= Vol(K°)` for `K = body ∩ L`, `m = dim L`.
pub fn check_polar_containment(
    body: &NormBody,
    l: Option<&Subspace>,
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let k = section_of(body, l)?;
    let m = k.dim();
    check_dim_at_most(m, MAX_PRODUCT_DIM)?;
    let diam = diameter(body, l, rng::derive(seed, 3))?;
    let lhs = 2f64.powi(m as i32) * ball_volume(m) / diam.powi(m as i32);
    let vp = mc_volume(&k.polar(), None, samples, rng::derive(seed, 2))?;
    Ok(report(
        "polar_containment",
        Outcome {
            lhs,
            lhs_err: 0.0,
            rhs: vp.value,
            rhs_err: vp.stderr,
            volumes: vec![vp],
        },
        fingerprint("polar_containment", body, l, samples, seed),
    ))
}

/// `Vol(V ∩ (y + L)) <= Vol(V ∩ L)` for every offset `y ⊥ L`. The report's
/// `lhs` is the largest off-center volume; the check fails if any single
/// offset exceeds the central volume by more than three standard errors.
pub fn check_central_section_max(
    body: &NormBody,
    l: &Subspace,
    offsets: &[DVector<f64>],
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    check_dim(body.dim(), l.ambient_dim())?;
    check_dim_at_most(l.dim(), MAX_PRODUCT_DIM)?;
    if offsets.is_empty() {
        return Err(invalid("at least one offset is required"));
    }
    let central = mc_volume(body, Some(l), samples, rng::derive(seed, 1))?;
    let mut worst: Option<VolumeEstimate> = None;
    let mut all_hold = true;
    for (i, y) in offsets.iter().enumerate() {
        let v = mc_volume_affine(body, Some(l), Some(y), samples, rng::derive(seed, 10 + i as u64))?;
        let budget = v.stderr.hypot(central.stderr);
        all_hold &= v.value <= central.value + SIGMAS * budget + ROUNDING * central.value;
        if worst.map_or(true, |w| v.value > w.value) {
            worst = Some(v);
        }
    }
    let worst = worst.expect("offsets are nonempty");
    let mut f = fingerprint("central_section_max", body, Some(l), samples, seed);
    for y in offsets {
        f.f64s(y.iter());
    }
    let mut r = report(
        "central_section_max",
        Outcome {
            lhs: worst.value,
            lhs_err: worst.stderr,
            rhs: central.value,
            rhs_err: central.stderr,
            volumes: vec![central],
        },
        f,
    );
    if r.status == Status::Passed && !all_hold {
        r.status = Status::Failed;
        r.passed = false;
    }
    Ok(r)
}

/// `r(V) = (Vol(V) Vol(V°))^{1/n} / Vol(B)^{2/n} >= c2`, reported as
/// `lhs = c2`, `rhs = r(V)`.
pub fn check_bourgain_milman(body: &NormBody, c2: f64, samples: usize, seed: u64) -> Result<InequalityReport> {
    let n = body.dim();
    check_dim_at_most(n, MAX_PRODUCT_DIM)?;
    let (v, vp) = volume_product(body, samples, seed)?;
    let nf = n as f64;
    let r = (v.value * vp.value).powf(1.0 / nf) / ball_volume(n).powf(2.0 / nf);
    let mut f = fingerprint("bourgain_milman", body, None, samples, seed);
    f.f64(c2);
    Ok(report(
        "bourgain_milman",
        Outcome {
            lhs: c2,
            lhs_err: 0.0,
            rhs: r,
            rhs_err: r * v.relative_error().hypot(vp.relative_error()) / nf,
            volumes: vec![v, vp],
        },
        f,
    ))
}

/// `Vol(V) >= (c2 / (c1 M_V))^n Vol(B)` for a body inside the Euclidean unit
/// ball, reported as `lhs = (c2 / (c1 M_V))^n Vol(B)`, `rhs = Vol(V)`.
pub fn check_volume_lower_bound(
    body: &NormBody,
    constants: Constants,
    samples: usize,
    levy_samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let n = body.dim();
    check_dim_at_most(n, MAX_PRODUCT_DIM)?;
    let levy_seed = rng::derive(seed, 2);
    let pts = sphere_sample(n, levy_samples, levy_seed)?;
    let smallest = body.norms_of_columns(&pts)?.into_iter().fold(f64::INFINITY, f64::min);
    if smallest < 1.0 - ROUNDING {
        return Err(invalid(format!(
            "body is not inside the Euclidean unit ball (norm {smallest:.6} on a unit vector)"
        )));
    }
    let m = levy_mean(body, levy_samples, levy_seed)?;
    let nf = n as f64;
    let lhs = (constants.c2 / (constants.c1 * m.value)).powf(nf) * ball_volume(n);
    let vol = mc_volume(body, None, samples, rng::derive(seed, 1))?;
    let mut f = fingerprint("volume_lower_bound", body, None, samples, seed);
    f.f64(constants.c1).f64(constants.c2).u64(levy_samples as u64);
    Ok(report(
        "volume_lower_bound",
        Outcome {
            lhs,
            lhs_err: lhs * nf * m.stderr / m.value,
            rhs: vol.value,
            rhs_err: vol.stderr,
            volumes: vec![vol],
        },
        f,
    ))
}

/// `2 (Vol_m(V ∩ L) / Vol_m(B^m))^{1/m} <= diam(V ∩ L)`.
pub fn check_diameter_bound(
    body: &NormBody,
    l: Option<&Subspace>,
    samples: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let k = section_of(body, l)?;
    let m = k.dim();
    check_dim_at_most(m, MAX_PRODUCT_DIM)?;
    let vol = mc_volume(&k, None, samples, rng::derive(seed, 1))?;
    let mf = m as f64;
    let lhs = 2.0 * (vol.value / ball_volume(m)).powf(1.0 / mf);
    let diam = diameter(body, l, rng::derive(seed, 3))?;
    Ok(report(
        "diameter_bound",
        Outcome {
            lhs,
            lhs_err: lhs * vol.relative_error() / mf,
            rhs: diam,
            rhs_err: 0.0,
            volumes: vec![vol],
        },
        fingerprint("diameter_bound", body, l, samples, seed),
    ))
}

/// The section volume-ratio factor in its printed form and the reciprocal
/// given by the ball-volume formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Omega {
    /// `(Γ(n/2+1) / (Γ((n-m)/2+1) Γ(m/2+1)))^{1/m}`.
    pub paper_value: f64,
    /// `1 / paper_value`.
    pub corrected_value: f64,
}

pub fn omega(n: usize, m: usize) -> Result<Omega> {
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n (got n={n}, m={m})")));
    }
    let lg = |k: usize| ln_gamma(k as f64 / 2.0 + 1.0);
    // Γ(1) = 1 exactly, so m = n cancels to zero
    let rest = if m == n { 0.0 } else { lg(n - m) };
    let log = (lg(n) - lg(m) - rest) / m as f64;
    Ok(Omega {
        paper_value: log.exp(),
        corrected_value: (-log).exp(),
    })
}
