//! Classical flat-polynomial baselines on the circle: random and
//! Rudin–Shapiro sign polynomials, their sup norms, and the moments of random
//! polynomials with i.i.d. coefficients.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::rng;

/// Sup norms are searched on a grid of this many points per coefficient.
pub const GRID_FACTOR: usize = 64;
/// Largest accepted Rudin–Shapiro order (`N = 2^k`).
pub const MAX_RUDIN_SHAPIRO_ORDER: u32 = 20;
/// Default relative tolerance of the moment check.
pub const DEFAULT_MOMENT_TOLERANCE: f64 = 0.10;
/// Smallest degree at which the moment limit is asserted.
pub const MOMENT_MIN_N: usize = 256;
const GOLDEN_ITERS: usize = 60;
const PEAKS: usize = 3;

/// Coefficients `±1` of `sum_m eps_m e^{i m theta}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignSequence {
    signs: Vec<i8>,
}

impl SignSequence {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(invalid("signs must be a nonempty list of +1/-1"));
        }
        Ok(Self { signs })
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `|sum_m eps_m e^{i m theta}|`.
    pub fn modulus(&self, theta: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (m, &s) in self.signs.iter().enumerate() {
            let (sn, cs) = (m as f64 * theta).sin_cos();
            re += s as f64 * cs;
            im += s as f64 * sn;
        }
        re.hypot(im)
    }

    /// Sup norm on the circle: FFT on `GRID_FACTOR * N` points, then
    /// golden-section refinement around the largest grid values.
    pub fn sup_norm(&self) -> f64 {
        let n = self.len();
        let size = GRID_FACTOR * n;
        let mut buf: Vec<Complex64> = (0..size)
            .map(|m| Complex64::new(self.signs.get(m).map_or(0.0, |&s| s as f64), 0.0))
            .collect();
        FftPlanner::new().plan_fft_inverse(size).process(&mut buf);
        let values: Vec<f64> = buf.iter().map(|z| z.norm()).collect();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let h = TAU / size as f64;
        order
            .iter()
            .take(PEAKS)
            .map(|&i| {
                let t = i as f64 * h;
                golden_max(|x| self.modulus(x), t - h, t + h).max(values[i])
            })
            .fold(0.0, f64::max)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.max(f2)
}

/// `N` i.i.d. uniform signs.
pub fn random_sign_poly(n: usize, seed: u64) -> Result<SignSequence> {
    if n == 0 {
        return Err(invalid("length must be positive"));
    }
    let mut r = rng::stream(seed, 0);
    SignSequence::new((0..n).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect())
}

/// P-coefficients of the Rudin–Shapiro pair of order `k` (`N = 2^k`):
/// `P' = P | Q`, `Q' = P | -Q` from `P = Q = (1)`.
pub fn rudin_shapiro(k: u32) -> Result<SignSequence> {
    if k > MAX_RUDIN_SHAPIRO_ORDER {
        return Err(invalid(format!("order {k} exceeds {MAX_RUDIN_SHAPIRO_ORDER}")));
    }
    let mut p = vec![1i8];
    let mut q = vec![1i8];
    for _ in 0..k {
        let np: Vec<i8> = p.iter().chain(&q).copied().collect();
        let nq: Vec<i8> = p.iter().copied().chain(q.iter().map(|s| -s)).collect();
        p = np;
        q = nq;
    }
    SignSequence::new(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RudinReport {
    pub n: usize,
    pub best_sup: f64,
    /// `5 sqrt(N)`.
    pub bound: f64,
    pub candidates: usize,
    pub passed: bool,
}

/// Smallest sup norm over `attempts` random sign polynomials of length `n`.
pub fn rudin_check(n: usize, attempts: usize, seed: u64) -> Result<RudinReport> {
    rudin_check_with(n, attempts, seed, &[])
}

/// As [`rudin_check`], with extra candidate sequences of the same length.
pub fn rudin_check_with(n: usize, attempts: usize, seed: u64, extra: &[SignSequence]) -> Result<RudinReport> {
    if n < 4 {
        return Err(invalid("length must be at least 4"));
    }
    if extra.iter().any(|s| s.len() != n) {
        return Err(invalid("injected sequence has the wrong length"));
    }
    if attempts + extra.len() == 0 {
        return Err(invalid("no candidates to evaluate"));
    }
    let random: Vec<f64> = (0..attempts)
        .into_par_iter()
        .map(|a| random_sign_poly(n, rng::derive(seed, a as u64)).map(|s| s.sup_norm()))
        .collect::<Result<_>>()?;
    let best_sup = random
        .into_iter()
        .chain(extra.iter().map(SignSequence::sup_norm))
        .fold(f64::INFINITY, f64::min);
    let bound = 5.0 * (n as f64).sqrt();
    Ok(RudinReport {
        n,
        best_sup,
        bound,
        candidates: attempts + extra.len(),
        passed: best_sup < bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Coefficients {
    #[default]
    Gaussian,
    Rademacher,
}

impl std::str::FromStr for Coefficients {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "rademacher" | "signs" => Ok(Self::Rademacher),
            other => Err(invalid(format!("unknown coefficient law '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub p: u32,
    /// Estimate of `E ||q_N||_p^p / N^{p/2}`.
    pub ratio: f64,
    pub stderr: f64,
    /// `Gamma(1 + p/2)`.
    pub target: f64,
    pub trials: usize,
    /// `p = 2` is computed in closed form.
    pub exact: bool,
    pub passed: bool,
}

/// Monte Carlo estimate of `E ||q_N||_p^p / N^{p/2}` for
/// `q_N = sum_{k=0}^{N} X_k e^{ik theta}`, with `||.||_p^p` integrated exactly
/// on a uniform grid (the integrand is a trigonometric polynomial of degree
/// `pN/2`). Passes when `N >= 256` and the ratio is within `tolerance`
/// (relative) of `Gamma(1 + p/2)`.
pub fn moment_check(
    n: usize,
    p: u32,
    trials: usize,
    seed: u64,
    coefficients: Coefficients,
    tolerance: f64,
) -> Result<MomentReport> {
    if !matches!(p, 2 | 4 | 6 | 8) {
        return Err(invalid(format!("p = {p} is not an even integer in 2..=8")));
    }
    if n == 0 {
        return Err(invalid("degree must be positive"));
    }
    let target = gamma(1.0 + p as f64 / 2.0);
    let judge = |ratio: f64| n >= MOMENT_MIN_N && (ratio - target).abs() <= tolerance * target;
    if p == 2 {
        // Parseval: E sum |X_k|^2 = N + 1
        let ratio = (n + 1) as f64 / n as f64;
        return Ok(MomentReport {
            n,
            p,
            ratio,
            stderr: 0.0,
            target,
            trials,
            exact: true,
            passed: judge(ratio),
        });
    }
    if trials < 2 {
        return Err(invalid("at least two trials are required"));
    }
    // exact for trigonometric degree below the grid size
    let size = (p as usize * n / 2 + 1).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_inverse(size);
    let half = p as i32 / 2;
    let scale = (n as f64).powi(half);
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(rng::derive(seed, t as u64), 0);
            let mut buf = vec![Complex64::new(0.0, 0.0); size];
            for z in buf.iter_mut().take(n + 1) {
                let x = match coefficients {
                    Coefficients::Gaussian => StandardNormal.sample(&mut r),
                    Coefficients::Rademacher => {
                        if r.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                *z = Complex64::new(x, 0.0);
            }
            fft.process(&mut buf);
            buf.iter().map(|z| z.norm_sqr().powi(half)).sum::<f64>() / size as f64 / scale
        })
        .collect();
    let k = trials as f64;
    let ratio = samples.iter().sum::<f64>() / k;
    let var = samples.iter().map(|s| (s - ratio).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(MomentReport {
        n,
        p,
        ratio,
        stderr: (var / k).sqrt(),
        target,
        trials,
        exact: false,
        passed: judge(ratio),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn sign_sequence_validation() {
        assert!(SignSequence::new(vec![1, 0]).is_err());
        assert!(SignSequence::new(vec![]).is_err());
        let s = random_sign_poly(1, 3).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.signs()[0].abs(), 1);
    }

    #[test]
    fn random_signs_are_balanced_and_seeded() {
        let n = 10_000;
        let s = random_sign_poly(n, 1).unwrap();
        let mean = s.signs().iter().map(|&x| x as f64).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
        assert_ne!(s, random_sign_poly(n, 2).unwrap());
        assert_eq!(s, random_sign_poly(n, 1).unwrap());
    }

    #[test]
    fn rudin_shapiro_small_orders() {
        assert_eq!(rudin_shapiro(0).unwrap().signs(), &[1]);
        assert_eq!(rudin_shapiro(1).unwrap().signs(), &[1, 1]);
        assert_eq!(rudin_shapiro(2).unwrap().signs(), &[1, 1, 1, -1]);
        assert_eq!(rudin_shapiro(3).unwrap().signs(), &[1, 1, 1, -1, 1, 1, -1, 1]);
        assert!(rudin_shapiro(21).is_err());
    }

    #[test]
    fn rudin_shapiro_sup_bound() {
        for k in 0..=12 {
            let s = rudin_shapiro(k).unwrap();
            let n = s.len() as f64;
            let sup = s.sup_norm();
            assert!(sup <= (2.0 * n).sqrt() + 1e-9, "k={k}: {sup}");
            // the sup dominates the L_2 norm sqrt(N)
            assert!(sup >= n.sqrt() - 1e-9);
        }
        let s8 = rudin_shapiro(3).unwrap();
        assert!(s8.sup_norm() <= 4.0 + 1e-12);
    }

    #[test]
    fn sup_norm_matches_dense_evaluation() {
        let s = random_sign_poly(37, 4).unwrap();
        let dense = (0..200_000)
            .map(|i| s.modulus(TAU * i as f64 / 200_000.0))
            .fold(0.0, f64::max);
        let sup = s.sup_norm();
        assert!(sup >= dense - 1e-12 && sup <= dense * (1.0 + 1e-6), "{sup} vs {dense}");
        // all-ones polynomial peaks at theta = 0 with value N
        assert_abs_diff_eq!(SignSequence::new(vec![1; 9]).unwrap().sup_norm(), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn rudin_checks() {
        let r = rudin_check(100, 200, 1).unwrap();
        assert!(r.passed && r.best_sup < 50.0, "{r:?}");
        let inj = rudin_check_with(16, 0, 0, &[rudin_shapiro(4).unwrap()]).unwrap();
        assert!(inj.passed && inj.best_sup <= 32f64.sqrt() + 1e-9);
        let small = rudin_check(4, 16, 2).unwrap();
        assert!(small.passed && small.best_sup <= 4.0 + 1e-12);
        assert!(rudin_check(3, 1, 0).is_err());
        assert!(rudin_check_with(16, 1, 0, &[rudin_shapiro(3).unwrap()]).is_err());
    }

    #[test]
    fn second_moment_is_exact() {
        let r = moment_check(256, 2, 0, 0, Coefficients::Gaussian, 0.1).unwrap();
        assert_eq!(r.ratio, 257.0 / 256.0);
        assert!(r.exact && r.passed);
    }

    #[test]
    fn fourth_moment_matches_exact_expectation() {
        // Isserlis over a + b = c + d: E|q|_4^4 = 2 (N+1)^2 + (N+1)
        let n = 64;
        let r = moment_check(n, 4, 4000, 3, Coefficients::Gaussian, 0.1).unwrap();
        let m = (n + 1) as f64;
        let exact = (2.0 * m * m + m) / (n * n) as f64;
        assert!((r.ratio - exact).abs() < 3.0 * r.stderr, "{r:?} vs {exact}");
        assert!(!r.passed, "N below the asserted range never passes");
    }

    #[test]
    fn moment_limits() {
        let r4 = moment_check(256, 4, 2000, 1, Coefficients::Gaussian, 0.10).unwrap();
        assert!(r4.passed, "{r4:?}");
        let r6 = moment_check(256, 6, 2000, 1, Coefficients::Gaussian, 0.15).unwrap();
        assert!(r6.passed, "{r6:?}");
        let rr = moment_check(256, 4, 2000, 1, Coefficients::Rademacher, 0.10).unwrap();
        assert!(rr.passed, "{rr:?}");
        assert!(moment_check(256, 3, 10, 1, Coefficients::Gaussian, 0.1).is_err());
        assert!(moment_check(256, 10, 10, 1, Coefficients::Gaussian, 0.1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn sup_norm_bounds(seed in 0u64..10_000, n in 4usize..64) {
            let s = random_sign_poly(n, seed).unwrap();
            let sup = s.sup_norm();
            prop_assert!(sup <= n as f64 + 1e-9);
            prop_assert!(sup >= (n as f64).sqrt() - 1e-9);
        }
    }
}
