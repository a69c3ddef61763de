//! Lévy means `M = ∫ ||alpha|| dmu(alpha)` over the uniform measure on the
//! Euclidean unit sphere, estimated by Monte Carlo.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::NormBody;
use crate::error::{invalid, Error, Result};
use crate::harmonics::SpectrumSelection;
use crate::norms::{InducedNorm, QuadratureRule};
use crate::rng;

/// Default number of sphere samples per estimate.
pub const DEFAULT_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyMeanEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub body_digest: String,
    pub seed: u64,
}

/// Columns `start..start+len` of the sample stream for `(n, seed)`.
fn sphere_chunk(n: usize, seed: u64, idx: u64, len: usize) -> DMatrix<f64> {
    let mut r = rng::stream(seed, idx);
    let mut g = DMatrix::<f64>::from_fn(n, len, |_, _| StandardNormal.sample(&mut r));
    for mut c in g.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    g
}

/// `count` i.i.d. uniform points on `S^{n-1}` as the columns of an `n x count`
/// matrix (normalized Gaussian vectors).
pub fn sphere_sample(n: usize, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(invalid("sphere dimension must be positive"));
    }
    let mut out = DMatrix::zeros(n, count);
    for (idx, start, len) in rng::chunks(count) {
        out.columns_mut(start, len).copy_from(&sphere_chunk(n, seed, idx, len));
    }
    Ok(out)
}

/// Running first and second moments, merged in chunk order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn of(values: &[f64]) -> Self {
        Self {
            count: values.len(),
            sum: values.iter().sum(),
            sum_sq: values.iter().map(|v| v * v).sum(),
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            count: self.count + o.count,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }

    fn mean_and_stderr(&self) -> (f64, f64) {
        let k = self.count as f64;
        let mean = self.sum / k;
        if self.count < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
        (mean, (var / k).sqrt())
    }
}

/// Sample mean of `body.norm` over uniform sphere points, with its standard
/// error. Reusing `seed` reuses the same points for any body of the same
/// dimension.
pub fn levy_mean(body: &NormBody, samples: usize, seed: u64) -> Result<LevyMeanEstimate> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let n = body.dim();
    let parts: Vec<Result<Moments>> = rng::chunks(samples)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(idx, _, len)| {
            let pts = sphere_chunk(n, seed, idx, len);
            Ok(Moments::of(&body.norms_of_columns(&pts)?))
        })
        .collect();
    let mut total = Moments::default();
    for m in parts {
        total = total.merge(m?);
    }
    let (value, stderr) = total.mean_and_stderr();
    Ok(LevyMeanEstimate {
        value,
        stderr,
        samples,
        body_digest: body.digest(),
        seed,
    })
}

/// One cell of a Lévy-mean sweep over induced `L_p` norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub p: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `sqrt(p)` for finite `p`, `sqrt(ln n)` for `p = inf`.
    pub normalizer: f64,
    pub normalized: f64,
}

/// Lévy means of the induced `L_p` norms for every spectrum and exponent.
///
/// For each spectrum the sphere points and the polynomial values on a single
/// quadrature rule (valid for every exponent in `p_list`) are shared across
/// all exponents, so the cells of one row use common random numbers.
pub fn theorem2_sweep(
    spectra: &[Arc<SpectrumSelection>],
    p_list: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    if p_list.iter().any(|p| !(*p >= 1.0)) {
        return Err(invalid("exponents must be at least 1"));
    }
    let mut rows = Vec::with_capacity(spectra.len() * p_list.len());
    for spectrum in spectra {
        let n = spectrum.dim();
        let rule = QuadratureRule::for_exponents(spectrum, p_list);
        let norms = p_list
            .iter()
            .map(|&p| InducedNorm::with_rule(spectrum.clone(), p, rule.clone()))
            .collect::<Result<Vec<_>>>()?;
        let basis = norms[0].basis();
        let parts: Vec<Vec<Moments>> = rng::chunks(samples)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(idx, _, len)| {
                let pts = sphere_chunk(n, seed, idx, len);
                let values = basis * &pts;
                let mut per_p = vec![Vec::with_capacity(len); norms.len()];
                for j in 0..len {
                    let alpha: Vec<f64> = pts.column(j).iter().copied().collect();
                    let v: Vec<f64> = values.column(j).iter().copied().collect();
                    for (out, norm) in per_p.iter_mut().zip(&norms) {
                        out.push(norm.norm_from_values(&alpha, &v));
                    }
                }
                per_p.iter().map(|vals| Moments::of(vals)).collect()
            })
            .collect();
        for (k, &p) in p_list.iter().enumerate() {
            let total = parts.iter().fold(Moments::default(), |acc, m| acc.merge(m[k]));
            let (mean, stderr) = total.mean_and_stderr();
            let normalizer = if p.is_infinite() {
                (n as f64).ln().sqrt()
            } else {
                p.sqrt()
            };
            rows.push(SweepRow {
                n,
                p,
                mean,
                stderr,
                normalizer,
                normalized: mean / normalizer,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::OrthonormalSystem;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn samples_are_unit_vectors() {
        let s = sphere_sample(7, 3000, 1).unwrap();
        for c in s.column_iter() {
            assert_abs_diff_eq!(c.norm(), 1.0, epsilon = 1e-12);
        }
        assert!(sphere_sample(0, 3, 1).is_err());
    }

    #[test]
    fn coordinate_moments() {
        let n = 5;
        let count = 100_000;
        let s = sphere_sample(n, count, 11).unwrap();
        for i in 0..n {
            let row = s.row(i);
            let mean = row.mean();
            assert!(mean.abs() < 3.0 / (count as f64).sqrt() / (n as f64).sqrt(), "{mean}");
            let sq: Vec<f64> = row.iter().map(|x| x * x).collect();
            let m = Moments::of(&sq);
            let (second, se) = m.mean_and_stderr();
            assert!((second - 1.0 / n as f64).abs() < 3.0 * se, "{second} +- {se}");
        }
    }

    #[test]
    fn sample_stream_is_chunk_stable() {
        let a = sphere_sample(3, 2500, 4).unwrap();
        let b = sphere_sample(3, 1100, 4).unwrap();
        assert_eq!(a.columns(0, 1100), b.columns(0, 1100));
    }

    #[test]
    fn euclidean_mean_is_one() {
        let m = levy_mean(&NormBody::euclidean(9), 5000, 2).unwrap();
        assert_abs_diff_eq!(m.value, 1.0, epsilon = 1e-12);
        assert!(m.stderr < 1e-12);
    }

    #[test]
    fn l1_mean_in_the_plane() {
        // ∫ |cos| + |sin| dθ / 2π = 4 / π
        let m = levy_mean(&NormBody::lp(2, 1.0).unwrap(), 50_000, 3).unwrap();
        assert!((m.value - 4.0 / PI).abs() < 3.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn linf_mean_high_dimension() {
        let n = 256;
        let m = levy_mean(&NormBody::lp(n, f64::INFINITY).unwrap(), 20_000, 5).unwrap();
        let approx = (2.0 * (n as f64).ln() / n as f64).sqrt();
        assert!((m.value / approx - 1.0).abs() < 0.15, "{} vs {approx}", m.value);
        // independent sample set, max coordinate computed directly
        let oracle = sphere_sample(n, 20_000, 99)
            .unwrap()
            .column_iter()
            .map(|c| c.amax())
            .sum::<f64>()
            / 20_000.0;
        assert!((m.value - oracle).abs() < 4.0 * m.stderr * 2f64.sqrt());
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let b = NormBody::lp(6, 3.0).unwrap();
        let a1 = levy_mean(&b, 4000, 8).unwrap();
        let a2 = levy_mean(&b, 4000, 8).unwrap();
        let c = levy_mean(&b, 4000, 9).unwrap();
        assert_eq!(a1, a2);
        assert_ne!(a1.value, c.value);
        let se = (a1.stderr.powi(2) + c.stderr.powi(2)).sqrt();
        assert!((a1.value - c.value).abs() < 3.0 * se);
    }

    #[test]
    fn induced_two_norm_is_parseval() {
        let sp = Arc::new(SpectrumSelection::torus1_trigonometric(16));
        let body = NormBody::induced(Arc::new(InducedNorm::new(sp, 2.0).unwrap()));
        let m = levy_mean(&body, 3000, 1).unwrap();
        assert_abs_diff_eq!(m.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sweep_matches_standalone_estimate() {
        let sp = Arc::new(SpectrumSelection::torus1_trigonometric(8));
        let rows = theorem2_sweep(&[sp.clone()], &[2.0, 4.0], 3000, 21).unwrap();
        assert_abs_diff_eq!(rows[0].mean, 1.0, epsilon = 1e-10);
        let body = NormBody::induced(Arc::new(InducedNorm::new(sp, 4.0).unwrap()));
        let m = levy_mean(&body, 3000, 21).unwrap();
        assert_abs_diff_eq!(rows[1].mean, m.value, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[1].normalized, m.value / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sweep_on_sphere_and_infinity_column() {
        let sys = Arc::new(OrthonormalSystem::sphere2(4).unwrap());
        let sp = Arc::new(SpectrumSelection::leading(sys, 4).unwrap());
        let rows = theorem2_sweep(&[sp], &[2.0, f64::INFINITY], 500, 2).unwrap();
        assert_abs_diff_eq!(rows[0].mean, 1.0, epsilon = 1e-10);
        assert_eq!(rows[1].n, 16);
        assert_abs_diff_eq!(rows[1].normalizer, 16f64.ln().sqrt(), epsilon = 1e-15);
        // sup norm dominates the L_2 norm on the normalized measure
        assert!(rows[1].mean >= 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn scaling_is_exact_on_shared_samples(c in 0.1f64..10.0, seed in 0u64..1000) {
            let b = NormBody::lp(4, 1.5).unwrap();
            let m = levy_mean(&b, 700, seed).unwrap();
            let mc = levy_mean(&b.clone().scaled(1.0 / c).unwrap(), 700, seed).unwrap();
            prop_assert!((mc.value - c * m.value).abs() <= 1e-12 * mc.value);
        }

        #[test]
        fn domination_is_monotone(p in 1.0f64..2.0, q in 2.0f64..8.0, seed in 0u64..1000) {
            // ||.||_p >= ||.||_q pointwise for p <= q
            let mp = levy_mean(&NormBody::lp(5, p).unwrap(), 600, seed).unwrap();
            let mq = levy_mean(&NormBody::lp(5, q).unwrap(), 600, seed).unwrap();
            prop_assert!(mp.value >= mq.value);
        }
    }
}
