//! `L_p` norms of polynomials through exact (or honestly oversampled)
//! cubature, the sup norm by grid search plus local refinement, and the norms
//! induced on coefficient space by the coordinate isomorphism `J`.

mod quadrature;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_dim, invalid, Error, Result};
use crate::harmonics::{Manifold, SpectrumSelection};
use crate::rng;

pub use quadrature::{gauss_legendre, QuadratureRule, APPROX_OVERSAMPLING};
pub(crate) use quadrature::required_degree;

/// Minimum sup-norm grid density, in nodes per period of the top frequency.
pub const LINF_MIN_DENSITY: usize = 4;
/// Coordinate sweeps of golden-section refinement around each grid peak.
pub const DEFAULT_REFINE_STEPS: usize = 2;
/// Number of grid peaks refined.
const PEAKS: usize = 3;
const GOLDEN_ITERS: usize = 60;

/// `t = J alpha`: a polynomial given by its coefficients in a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    spectrum: Arc<SpectrumSelection>,
    coeffs: DVector<f64>,
}

impl Polynomial {
    pub fn new(spectrum: Arc<SpectrumSelection>, coeffs: DVector<f64>) -> Result<Self> {
        check_dim(spectrum.dim(), coeffs.len())?;
        Ok(Self { spectrum, coeffs })
    }

    pub fn spectrum(&self) -> &Arc<SpectrumSelection> {
        &self.spectrum
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.spectrum.synthesize(self.coeffs.as_slice(), x)
    }

    /// Values at every node of `rule`.
    pub fn values_on(&self, rule: &QuadratureRule) -> DVector<f64> {
        self.spectrum.basis_matrix(rule) * &self.coeffs
    }
}

fn check_rule(spectrum: &SpectrumSelection, p: f64, rule: &QuadratureRule) -> Result<()> {
    if !(p >= 1.0) {
        return Err(invalid(format!("exponent {p} is below 1")));
    }
    if rule.manifold() != spectrum.manifold() {
        return Err(invalid("quadrature rule is on a different manifold"));
    }
    let deg = spectrum.degree();
    if p.is_infinite() {
        if !rule.resolves(deg) {
            return Err(Error::InsufficientExactness {
                required: LINF_MIN_DENSITY * deg,
                available: rule.exactness(),
            });
        }
        return Ok(());
    }
    let required = required_degree(p, deg);
    if rule.exactness() < required {
        return Err(Error::InsufficientExactness {
            required,
            available: rule.exactness(),
        });
    }
    Ok(())
}

/// Discrete `(sum w |v|^p)^{1/p}`, or `max |v|` for `p = inf`.
fn discrete_norm(values: &[f64], weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else if p == 2.0 {
        values.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
    } else {
        values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// `||t||_p` on the normalized measure, `1 <= p < inf`.
///
/// Even integer `p` requires a rule exact for `|t|^p`; any other exponent
/// requires an oversampled rule ([`APPROX_OVERSAMPLING`] times the spectral
/// resolution) and the result is then a cubature approximation.
pub fn lp_norm(poly: &Polynomial, p: f64, rule: &QuadratureRule) -> Result<f64> {
    if p.is_infinite() {
        return Err(invalid("use linf_norm for p = inf"));
    }
    check_rule(&poly.spectrum, p, rule)?;
    Ok(discrete_norm(poly.values_on(rule).as_slice(), rule.weights(), p))
}

/// Sup-norm estimate. `value` is attained by the polynomial (a certified lower
/// bound); `value + uncertainty` bounds the true maximum from above using the
/// grid spacing and the Bernstein bound for the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LinfEstimate {
    pub value: f64,
    pub uncertainty: f64,
    pub argmax: Vec<f64>,
}

/// Sup norm by a grid of `grid_density` nodes per coordinate followed by
/// `refine_steps` sweeps of golden-section refinement around the top peaks.
pub fn linf_norm(poly: &Polynomial, grid_density: usize, refine_steps: usize) -> Result<LinfEstimate> {
    let deg = poly.spectrum.degree();
    let manifold = poly.spectrum.manifold();
    let per_dim = match manifold {
        Manifold::Sphere2 => 2 * grid_density,
        _ => grid_density,
    };
    if per_dim < LINF_MIN_DENSITY * deg || grid_density == 0 {
        return Err(invalid(format!(
            "grid density {grid_density} below {LINF_MIN_DENSITY} x resolution {deg}"
        )));
    }
    let (coords, spacing) = sup_grid(manifold, grid_density);
    let d = manifold.coord_dim();
    let mut values = Vec::with_capacity(coords.len() / d);
    let mut buf = vec![0.0; poly.spectrum.dim()];
    for x in coords.chunks_exact(d) {
        poly.spectrum.evaluate_into(x, &mut buf);
        values.push(dot(&buf, poly.coeffs.as_slice()));
    }
    Ok(sup_search(
        &poly.spectrum,
        poly.coeffs.as_slice(),
        &values,
        |i| &coords[i * d..(i + 1) * d],
        &spacing,
        refine_steps,
    ))
}

fn sup_grid(manifold: Manifold, density: usize) -> (Vec<f64>, Vec<f64>) {
    match manifold {
        Manifold::Sphere2 => {
            let n_phi = 2 * density;
            let mut coords = Vec::with_capacity(2 * (density + 1) * n_phi);
            for i in 0..=density {
                let theta = PI * i as f64 / density as f64;
                for j in 0..n_phi {
                    coords.push(theta);
                    coords.push(2.0 * PI * j as f64 / n_phi as f64);
                }
            }
            (coords, vec![PI / density as f64, 2.0 * PI / n_phi as f64])
        }
        _ => {
            let d = manifold.coord_dim();
            let rule = QuadratureRule::torus_grid(manifold, d, density);
            let coords = rule.nodes().flatten().copied().collect();
            (coords, rule.spacing().to_vec())
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_search<'a>(
    spectrum: &SpectrumSelection,
    coeffs: &[f64],
    values: &[f64],
    node: impl Fn(usize) -> &'a [f64],
    spacing: &[f64],
    refine_steps: usize,
) -> LinfEstimate {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let peaks = PEAKS.min(values.len());
    if peaks < values.len() {
        order.select_nth_unstable_by(peaks, |&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    }
    order.truncate(peaks);
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));

    let best_node = order[0];
    let mut best = values[best_node].abs();
    let mut argmax = node(best_node).to_vec();
    let sphere = spectrum.manifold() == Manifold::Sphere2;
    let mut buf = vec![0.0; spectrum.dim()];
    let mut eval = |x: &[f64]| {
        spectrum.evaluate_into(x, &mut buf);
        dot(&buf, coeffs).abs()
    };
    if refine_steps > 0 && spectrum.degree() > 0 {
        for &i in &order {
            let mut x = node(i).to_vec();
            let mut fx = values[i].abs();
            for _ in 0..refine_steps {
                for c in 0..x.len() {
                    let (mut lo, mut hi) = (x[c] - spacing[c], x[c] + spacing[c]);
                    if sphere && c == 0 {
                        lo = lo.max(0.0);
                        hi = hi.min(PI);
                    }
                    let mut probe = x.clone();
                    let (u, fu) = golden_max(
                        |u| {
                            probe[c] = u;
                            eval(&probe)
                        },
                        lo,
                        hi,
                    );
                    if fu > fx {
                        x[c] = u;
                        fx = fu;
                    }
                }
            }
            if fx > best {
                best = fx;
                argmax = x;
            }
        }
    }
    let deg = spectrum.degree() as f64;
    let half_step: f64 = spacing.iter().map(|h| h / 2.0).sum();
    let kappa = 0.5 * deg * deg * half_step * half_step;
    let uncertainty = if kappa < 1.0 {
        best * kappa / (1.0 - kappa)
    } else {
        f64::INFINITY
    };
    LinfEstimate {
        value: best,
        uncertainty,
        argmax,
    }
}

fn golden_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERS {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `||alpha||_(X_n) = ||J alpha||_{L_p}` for a one-off evaluation.
pub fn induced_norm(
    spectrum: &Arc<SpectrumSelection>,
    alpha: &[f64],
    p: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    InducedNorm::with_rule(spectrum.clone(), p, rule.clone())?.norm(alpha)
}

/// Reusable induced-norm oracle: the basis is tabulated once at the rule's
/// nodes, so evaluation is a matrix-vector product plus a discrete norm.
#[derive(Debug, Clone)]
pub struct InducedNorm {
    spectrum: Arc<SpectrumSelection>,
    p: f64,
    rule: QuadratureRule,
    basis: DMatrix<f64>,
    refine_steps: usize,
}

impl InducedNorm {
    /// Uses the default rule for `p` (exact for even `p`, oversampled otherwise).
    pub fn new(spectrum: Arc<SpectrumSelection>, p: f64) -> Result<Self> {
        let rule = QuadratureRule::for_exponents(&spectrum, &[p]);
        Self::with_rule(spectrum, p, rule)
    }

    pub fn with_rule(spectrum: Arc<SpectrumSelection>, p: f64, rule: QuadratureRule) -> Result<Self> {
        check_rule(&spectrum, p, &rule)?;
        let basis = spectrum.basis_matrix(&rule);
        Ok(Self {
            spectrum,
            p,
            rule,
            basis,
            refine_steps: DEFAULT_REFINE_STEPS,
        })
    }

    /// Sup-norm refinement sweeps (only used when `p = inf`).
    pub fn with_refine_steps(mut self, steps: usize) -> Self {
        self.refine_steps = steps;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn spectrum(&self) -> &Arc<SpectrumSelection> {
        &self.spectrum
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Basis values at the rule nodes (nodes x n).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Whether the value is a cubature approximation rather than exact.
    pub fn is_approximate(&self) -> bool {
        !self.rule.is_exact_for(self.p, self.spectrum.degree())
    }

    pub fn norm(&self, alpha: &[f64]) -> Result<f64> {
        check_dim(self.dim(), alpha.len())?;
        let values = &self.basis * DVector::from_column_slice(alpha);
        Ok(self.norm_from_values(alpha, values.as_slice()))
    }

    /// Norm given precomputed node values `values = B alpha`.
    pub fn norm_from_values(&self, alpha: &[f64], values: &[f64]) -> f64 {
        if self.p.is_infinite() {
            self.sup_from_values(alpha, values).value
        } else {
            discrete_norm(values, self.rule.weights(), self.p)
        }
    }

    fn sup_from_values(&self, alpha: &[f64], values: &[f64]) -> LinfEstimate {
        sup_search(
            &self.spectrum,
            alpha,
            values,
            |i| self.rule.node(i),
            self.rule.spacing(),
            self.refine_steps,
        )
    }

    /// Sup-norm estimate with uncertainty (`p = inf` only).
    pub fn sup_estimate(&self, alpha: &[f64]) -> Result<LinfEstimate> {
        if self.p.is_finite() {
            return Err(invalid("sup estimate requested for finite p"));
        }
        check_dim(self.dim(), alpha.len())?;
        let values = &self.basis * DVector::from_column_slice(alpha);
        Ok(self.sup_from_values(alpha, values.as_slice()))
    }

    /// Node-discrete norm and a (sub)gradient with respect to the node values.
    ///
    /// For finite `p` this is the exact norm; for `p = inf` it is the max over
    /// nodes (no refinement) with the subgradient at the first maximizing node.
    /// Returns `(norm, d norm / d values)`.
    pub fn discrete_with_value_grad(&self, values: &[f64]) -> (f64, Vec<f64>) {
        let w = self.rule.weights();
        let mut grad = vec![0.0; values.len()];
        if self.p.is_infinite() {
            let (i, m) = values
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bi, bm), (i, v)| if v.abs() > bm { (i, v.abs()) } else { (bi, bm) });
            grad[i] = values[i].signum();
            return (m.max(0.0), grad);
        }
        let norm = discrete_norm(values, w, self.p);
        if norm == 0.0 {
            return (0.0, grad);
        }
        let scale = norm.powf(1.0 - self.p);
        for ((g, &v), &wi) in grad.iter_mut().zip(values).zip(w) {
            *g = if v == 0.0 {
                0.0
            } else {
                scale * wi * v.abs().powf(self.p - 1.0) * v.signum()
            };
        }
        (norm, grad)
    }

    /// Node-discrete norm and its (sub)gradient in coefficient space.
    pub fn discrete_norm_and_grad(&self, alpha: &[f64]) -> (f64, DVector<f64>) {
        let values = &self.basis * DVector::from_column_slice(alpha);
        let (norm, g) = self.discrete_with_value_grad(values.as_slice());
        (norm, self.basis.tr_mul(&DVector::from_vec(g)))
    }

    /// Norms of every column of `a` (n x k).
    pub fn norms_of_columns(&self, a: &DMatrix<f64>) -> Vec<f64> {
        let values = &self.basis * a;
        (0..a.ncols())
            .map(|j| {
                let alpha: Vec<f64> = a.column(j).iter().copied().collect();
                let v: Vec<f64> = values.column(j).iter().copied().collect();
                self.norm_from_values(&alpha, &v)
            })
            .collect()
    }

    /// Radius `R` with `{||J alpha||_p <= 1}` inside `R B_2`: 1 for `p >= 2`,
    /// `n^{1/p - 1/2}` for `p < 2` (Nikolskii with `C = 1`).
    pub fn circumradius(&self) -> f64 {
        (self.dim() as f64).powf((1.0 / self.p - 0.5).max(0.0))
    }

    /// Radius `r` with `r B_2` inside the unit ball: 1 for `p <= 2`,
    /// `n^{1/p - 1/2}` for `p > 2`.
    pub fn inradius(&self) -> f64 {
        (self.dim() as f64).powf((1.0 / self.p - 0.5).min(0.0))
    }
}

/// `n^{(1/q - 1/p)_+}`: the Nikolskii factor with constant 1.
pub fn nikolskii_bound(n: usize, p: f64, q: f64) -> f64 {
    (n as f64).powf((1.0 / q - 1.0 / p).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NikolskiiReport {
    pub max_ratio: f64,
    pub bound: f64,
    /// `||K(., y)||_p / ||K(., y)||_q` for the kernel column at the first node.
    pub kernel_ratio: f64,
    pub trials: usize,
    pub passed: bool,
}

/// Largest `||t||_p / ||t||_q` over random polynomials of the spectrum,
/// compared with `n^{(1/q - 1/p)_+}`.
pub fn nikolskii_check(
    spectrum: &Arc<SpectrumSelection>,
    p: f64,
    q: f64,
    trials: usize,
    seed: u64,
) -> Result<NikolskiiReport> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(invalid("exponents must be at least 1"));
    }
    let rule = QuadratureRule::for_exponents(spectrum, &[p, q]);
    let np = InducedNorm::with_rule(spectrum.clone(), p, rule.clone())?;
    let nq = InducedNorm::with_rule(spectrum.clone(), q, rule.clone())?;
    let n = spectrum.dim();
    let ratio_of = |alpha: &[f64], values: &[f64]| {
        np.norm_from_values(alpha, values) / nq.norm_from_values(alpha, values)
    };

    let chunk_max: Vec<f64> = rng::chunks(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(idx, _, len)| {
            let mut r = rng::stream(seed, idx);
            let a = DMatrix::<f64>::from_fn(n, len, |_, _| StandardNormal.sample(&mut r));
            let values = np.basis() * &a;
            (0..len)
                .map(|j| {
                    let alpha: Vec<f64> = a.column(j).iter().copied().collect();
                    let v: Vec<f64> = values.column(j).iter().copied().collect();
                    ratio_of(&alpha, &v)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let max_ratio = chunk_max.into_iter().fold(0.0, f64::max);

    let column = spectrum.kernel_column(rule.node(0))?;
    let kernel_ratio = np.norm(column.as_slice())? / nq.norm(column.as_slice())?;
    let bound = nikolskii_bound(n, p, q);
    let slack = bound * 1e-9;
    Ok(NikolskiiReport {
        max_ratio,
        bound,
        kernel_ratio,
        trials,
        passed: max_ratio <= bound + slack && kernel_ratio <= bound + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::OrthonormalSystem;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn torus(m: usize) -> Arc<SpectrumSelection> {
        Arc::new(SpectrumSelection::torus1_trigonometric(m))
    }

    fn e(n: usize, k: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        v
    }

    #[test]
    fn constant_has_unit_norm_for_all_p() {
        let s = torus(3);
        let one = Polynomial::new(s.clone(), e(7, 0)).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, 10.0] {
            let rule = QuadratureRule::for_exponents(&s, &[p]);
            assert_abs_diff_eq!(lp_norm(&one, p, &rule).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn cosine_four_norm_matches_closed_form() {
        // int (sqrt2 cos)^4 = 4 * 3/8 = 3/2
        let s = torus(3);
        let poly = Polynomial::new(s.clone(), e(7, 1)).unwrap();
        let rule = QuadratureRule::for_exponents(&s, &[4.0]);
        assert_abs_diff_eq!(lp_norm(&poly, 4.0, &rule).unwrap(), 1.5f64.powf(0.25), epsilon = 1e-14);
        assert_abs_diff_eq!(lp_norm(&poly, 2.0, &rule).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn basis_vector_norms_follow_wallis_integrals() {
        // ||sqrt2 cos||_p^p = 2^{p/2} Gamma((p+1)/2) / (sqrt(pi) Gamma(p/2 + 1))
        let s = torus(4);
        for p in [2.0, 4.0, 6.0, 8.0] {
            let rule = QuadratureRule::for_exponents(&s, &[p]);
            let wallis = (2f64.powf(p / 2.0)
                * statrs::function::gamma::gamma((p + 1.0) / 2.0)
                / (PI.sqrt() * statrs::function::gamma::gamma(p / 2.0 + 1.0)))
            .powf(1.0 / p);
            let got = induced_norm(&s, e(9, 5).as_slice(), p, &rule).unwrap();
            assert_abs_diff_eq!(got, wallis, epsilon = 1e-12);
        }
    }

    #[test]
    fn even_exponent_rejects_coarse_rule() {
        let s = torus(4);
        let poly = Polynomial::new(s.clone(), e(9, 1)).unwrap();
        let rule = QuadratureRule::exact(Manifold::Torus1, 12);
        assert!(matches!(
            lp_norm(&poly, 4.0, &rule),
            Err(Error::InsufficientExactness { required: 16, available: 12 })
        ));
        assert!(lp_norm(&poly, 3.0, &rule).is_err());
    }

    #[test]
    fn parseval_on_every_system() {
        let systems = [
            (Manifold::Torus1, 33),
            (Manifold::TorusD(2), 21),
            (Manifold::Sphere2, 25),
        ];
        let mut r = rng::stream(11, 0);
        for (m, n) in systems {
            let sys = Arc::new(OrthonormalSystem::covering(m, n).unwrap());
            let s = Arc::new(SpectrumSelection::with_dimension(sys, n).unwrap());
            let norm = InducedNorm::new(s, 2.0).unwrap();
            for _ in 0..50 {
                let a: Vec<f64> = (0..n).map(|_| r.random::<f64>() - 0.5).collect();
                let l2 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert_abs_diff_eq!(norm.norm(&a).unwrap(), l2, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn linf_of_kernel_column_and_cosine() {
        let s = torus(1);
        let col = s.kernel_column(&[0.0]).unwrap();
        let k = Polynomial::new(s.clone(), col).unwrap();
        let est = linf_norm(&k, 64, 2).unwrap();
        assert_abs_diff_eq!(est.value, 3.0, epsilon = 1e-12);

        let c = Polynomial::new(s, e(3, 1)).unwrap();
        assert_abs_diff_eq!(linf_norm(&c, 64, 2).unwrap().value, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn linf_refinement_finds_off_grid_peak() {
        // kernel column centred between grid nodes
        let s = torus(5);
        let y = [0.3711];
        let col = s.kernel_column(&y).unwrap();
        let k = Polynomial::new(s, col).unwrap();
        let est = linf_norm(&k, 40, 2).unwrap();
        assert_abs_diff_eq!(est.value, 11.0, epsilon = 1e-9);
        assert!(est.uncertainty.is_finite());
        assert_abs_diff_eq!(est.argmax[0], y[0], epsilon = 1e-5);
    }

    #[test]
    fn linf_rejects_sparse_grid() {
        let s = torus(8);
        let k = Polynomial::new(s, e(17, 3)).unwrap();
        assert!(linf_norm(&k, 31, 1).is_err());
        assert!(linf_norm(&k, 32, 1).is_ok());
    }

    #[test]
    fn linf_dominates_l8() {
        let s = torus(10);
        let mut r = rng::stream(5, 0);
        let a: Vec<f64> = (0..21).map(|_| r.random::<f64>() - 0.5).collect();
        let poly = Polynomial::new(s.clone(), DVector::from_vec(a)).unwrap();
        let rule = QuadratureRule::for_exponents(&s, &[8.0]);
        let l8 = lp_norm(&poly, 8.0, &rule).unwrap();
        let linf = linf_norm(&poly, 64, 2).unwrap();
        assert!(linf.value >= l8);
    }

    #[test]
    fn sphere_linf_of_zonal_kernel() {
        let sys = Arc::new(OrthonormalSystem::sphere2(4).unwrap());
        let s = Arc::new(SpectrumSelection::leading(sys, 5).unwrap());
        let col = s.kernel_column(&[0.9, 2.0]).unwrap();
        let k = Polynomial::new(s, col).unwrap();
        let est = linf_norm(&k, 16, 3).unwrap();
        assert_abs_diff_eq!(est.value, 25.0, epsilon = 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = torus(4);
        let norm = InducedNorm::new(s, 4.0).unwrap();
        let a = [0.3, -0.2, 0.5, 0.1, -0.4, 0.25, 0.05, -0.15, 0.2];
        let (v, g) = norm.discrete_norm_and_grad(&a);
        for k in 0..a.len() {
            let mut b = a;
            b[k] += 1e-6;
            let fd = (norm.norm(&b).unwrap() - v) / 1e-6;
            assert_abs_diff_eq!(g[k], fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn nikolskii_examples() {
        let s = torus(8);
        let n = 17.0f64;
        let r = nikolskii_check(&s, f64::INFINITY, 2.0, 500, 3).unwrap();
        assert!(r.passed);
        assert_abs_diff_eq!(r.kernel_ratio, n.sqrt(), epsilon = 1e-9);

        let r = nikolskii_check(&s, 4.0, 4.0, 200, 3).unwrap();
        assert_abs_diff_eq!(r.max_ratio, 1.0, epsilon = 1e-12);

        let r = nikolskii_check(&s, 2.0, f64::INFINITY, 200, 3).unwrap();
        assert_eq!(r.bound, 1.0);
        assert!(r.passed && r.max_ratio <= 1.0);
    }

    #[test]
    fn refinement_is_scale_equivariant() {
        let s = torus(6);
        let norm = InducedNorm::new(s, f64::INFINITY).unwrap();
        let a = [0.3, -0.2, 0.5, 0.1, -0.4, 0.25, 0.05, -0.15, 0.2, 0.7, -0.1, 0.33, 0.0];
        let scaled: Vec<f64> = a.iter().map(|x| -2.5 * x).collect();
        let v = norm.norm(&a).unwrap();
        assert_abs_diff_eq!(norm.norm(&scaled).unwrap(), 2.5 * v, epsilon = 1e-12);
    }
}
