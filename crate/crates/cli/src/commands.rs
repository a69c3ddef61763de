use std::sync::Arc;

use nalgebra::DVector;
use serde_json::{json, Value};

use flatlab::baselines::{moment_check, rudin_check, rudin_shapiro, Coefficients};
use flatlab::bodies::{Ellipsoid, NormBody};
use flatlab::flatsearch::{theorem3_experiment, SearchOptions, Subspace};
use flatlab::harmonics::{class_k_verify, kernel, Manifold, OrthonormalSystem, SpectrumSelection};
use flatlab::inequalities::{
    check_bourgain_milman, check_central_section_max, check_diameter_bound, check_polar_containment,
    check_santalo, check_urysohn, check_volume_lower_bound, omega, Constants, InequalityReport, Status,
    MAX_URYSOHN_DIM,
};
use flatlab::levy::theorem2_sweep;
use flatlab::norms::{nikolskii_check, QuadratureRule};
use flatlab::rng;

use crate::config::{Command, ExperimentConfig};
use crate::report::{num, Table};
use crate::CliError;

pub struct Outcome {
    pub table: Table,
    pub inconclusive: bool,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self {
            table,
            inconclusive: false,
        }
    }
}

pub fn execute(command: Command, cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Levy => levy(cfg).map(Into::into),
        Command::Flat => flat(cfg).map(Into::into),
        Command::Nikolskii => nikolskii(cfg).map(Into::into),
        Command::Convex => convex(cfg),
        Command::Baseline => baseline(cfg).map(Into::into),
        Command::Report => report(cfg).map(Into::into),
    }
}

fn spectrum(manifold: Manifold, n: usize) -> Result<Arc<SpectrumSelection>, CliError> {
    let system = Arc::new(OrthonormalSystem::covering(manifold, n)?);
    Ok(Arc::new(SpectrumSelection::with_dimension(system, n)?))
}

fn levy(cfg: &mut ExperimentConfig) -> Result<Table, CliError> {
    let manifold = cfg.manifold()?;
    let ns = cfg.n_list(&[33])?;
    let ps = cfg.p_list(&[2.0]);
    let samples = ExperimentConfig::positive(&mut cfg.samples, flatlab::levy::DEFAULT_SAMPLES, "samples")?;
    let seed = cfg.seed()?;
    let spectra = ns.iter().map(|&n| spectrum(manifold, n)).collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["n", "p", "mean", "stderr", "normalizer", "normalized"]);
    for row in theorem2_sweep(&spectra, &ps, samples, seed)? {
        t.push(vec![
            json!(row.n),
            num(row.p),
            num(row.mean),
            num(row.stderr),
            num(row.normalizer),
            num(row.normalized),
        ]);
    }
    Ok(t)
}

fn flat(cfg: &mut ExperimentConfig) -> Result<Table, CliError> {
    let manifold = cfg.manifold()?;
    let ns = cfg.n_list(&[65])?;
    let epsilon = *cfg.epsilon.get_or_insert(0.5);
    let p = cfg.single_p(4.0)?;
    let q = cfg.q_or(2.0);
    let trials = ExperimentConfig::positive(&mut cfg.trials, 8, "trials")?;
    let options = SearchOptions {
        restarts: ExperimentConfig::positive(&mut cfg.restarts, flatlab::flatsearch::DEFAULT_RESTARTS, "restarts")?,
        iters: ExperimentConfig::positive(&mut cfg.iters, flatlab::flatsearch::DEFAULT_ITERS, "iters")?,
        warm_start: None,
    };
    let seed = cfg.seed()?;
    let rows = theorem3_experiment(manifold, &ns, epsilon, p, q, trials, &options, seed)?;
    let mut t = Table::new(&[
        "kind",
        "n",
        "trial",
        "subspace_dim",
        "ratio",
        "converged",
        "iterations",
        "worst_ratio",
        "rho",
        "normalized",
    ]);
    for row in rows {
        for (i, r) in row.trials.iter().enumerate() {
            t.push(vec![
                json!("trial"),
                json!(row.n),
                json!(i),
                json!(row.subspace_dim),
                num(r.ratio),
                json!(r.converged),
                json!(r.iterations),
                Value::Null,
                Value::Null,
                Value::Null,
            ]);
        }
        t.push(vec![
            json!("summary"),
            json!(row.n),
            Value::Null,
            json!(row.subspace_dim),
            num(row.best_ratio),
            json!(row.all_converged),
            json!(row.trials.iter().map(|r| r.iterations).sum::<usize>()),
            num(row.worst_ratio),
            num(row.rho),
            num(row.normalized),
        ]);
    }
    Ok(t)
}

fn nikolskii(cfg: &mut ExperimentConfig) -> Result<Table, CliError> {
    let manifold = cfg.manifold()?;
    let ns = cfg.n_list(&[33, 65, 129])?;
    let p = cfg.single_p(f64::INFINITY)?;
    let q = cfg.q_or(2.0);
    let trials = ExperimentConfig::positive(&mut cfg.trials, 10_000, "trials")?;
    let seed = cfg.seed()?;
    let mut t = Table::new(&["n", "p", "q", "max_ratio", "bound", "kernel_ratio", "trials", "passed"]);
    for n in ns {
        let r = nikolskii_check(&spectrum(manifold, n)?, p, q, trials, rng::derive(seed, n as u64))?;
        t.push(vec![
            json!(n),
            num(p),
            num(q),
            num(r.max_ratio),
            num(r.bound),
            num(r.kernel_ratio),
            json!(r.trials),
            json!(r.passed),
        ]);
    }
    Ok(t)
}

const CONVEX_CHECKS: [&str; 7] = [
    "urysohn",
    "santalo",
    "polar-containment",
    "central-section",
    "bourgain-milman",
    "volume-lower-bound",
    "diameter-bound",
];

fn parse_body(spec: &str, n: usize, seed: u64) -> Result<NormBody, CliError> {
    let body = match spec {
        "l1" => NormBody::lp(n, 1.0)?,
        "l2" | "ball" => NormBody::euclidean(n),
        "linf" | "cube" => NormBody::lp(n, f64::INFINITY)?,
        "ellipsoid" => NormBody::ellipsoid(Ellipsoid::random(n, (0.7, 1.4), rng::derive(seed, 0xe111))?),
        other => match other.strip_prefix("lp:") {
            Some(p) => {
                let p: crate::config::Exponent = p.parse().map_err(CliError::Config)?;
                NormBody::lp(n, p.0)?
            }
            None => return Err(CliError::Config(format!("unknown body '{other}'"))),
        },
    };
    Ok(body)
}

fn convex(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let check = ExperimentConfig::text(&mut cfg.check, "all");
    let n = cfg.single_n(2)?;
    let seed = cfg.seed()?;
    if check == "omega" {
        let m = *cfg.m.get_or_insert(n);
        let w = omega(n, m)?;
        let mut t = Table::new(&["n", "m", "paper_value", "corrected_value"]);
        t.push(vec![json!(n), json!(m), num(w.paper_value), num(w.corrected_value)]);
        return Ok(t.into());
    }
    let checks: Vec<&str> = if check == "all" {
        CONVEX_CHECKS.to_vec()
    } else if let Some(c) = CONVEX_CHECKS.iter().find(|c| **c == check) {
        vec![c]
    } else {
        return Err(CliError::Config(format!("unknown check '{check}'")));
    };
    let body_name = ExperimentConfig::text(&mut cfg.body, "l2");
    let samples = ExperimentConfig::positive(&mut cfg.samples, 100_000, "samples")?;
    let c2 = *cfg.c2.get_or_insert(Constants::default().c2);
    let body = parse_body(&body_name, n, seed)?;
    let mut reports: Vec<InequalityReport> = Vec::new();
    for (k, name) in checks.iter().enumerate() {
        let s = rng::derive(seed, k as u64);
        let r = match *name {
            "urysohn" => {
                if n > MAX_URYSOHN_DIM {
                    continue;
                }
                check_urysohn(&body, samples, samples, s)?
            }
            "santalo" => check_santalo(&body, None, samples, s)?,
            "polar-containment" => check_polar_containment(&body, None, samples, s)?,
            "central-section" => {
                if n < 2 {
                    return Err(CliError::Config("central-section needs n >= 2".into()));
                }
                let l = Subspace::coordinate(n, &(0..n - 1).collect::<Vec<_>>())?;
                let r_in = body.inradius().unwrap_or(1.0);
                let offsets: Vec<DVector<f64>> = [0.1, 0.25, 0.5]
                    .iter()
                    .map(|t| {
                        let mut y = DVector::zeros(n);
                        y[n - 1] = t * r_in;
                        y
                    })
                    .collect();
                check_central_section_max(&body, &l, &offsets, samples, s)?
            }
            "bourgain-milman" => check_bourgain_milman(&body, c2, samples, s)?,
            "volume-lower-bound" => {
                // scaled into the Euclidean unit ball
                let r = body.circumradius().ok_or(flatlab::Error::MissingCircumradius)?;
                let inside = body.clone().scaled(1.0 / r)?;
                let constants = Constants { c2, ..Constants::default() };
                check_volume_lower_bound(&inside, constants, samples, samples, s)?
            }
            "diameter-bound" => check_diameter_bound(&body, None, samples, s)?,
            _ => unreachable!("checks come from CONVEX_CHECKS"),
        };
        reports.push(r);
    }
    let mut t = Table::new(&["check", "lhs", "rhs", "ratio", "slack", "stderr_budget", "status", "digest"]);
    for r in &reports {
        t.push(vec![
            json!(r.name),
            num(r.lhs),
            num(r.rhs),
            num(r.ratio()),
            num(r.slack),
            num(r.stderr_budget),
            serde_json::to_value(r.status).expect("status serializes"),
            json!(r.inputs_digest),
        ]);
    }
    Ok(Outcome {
        table: t,
        inconclusive: reports.iter().any(|r| r.status == Status::Inconclusive),
    })
}

fn baseline(cfg: &mut ExperimentConfig) -> Result<Table, CliError> {
    let kind = ExperimentConfig::text(&mut cfg.baseline, "moment");
    let seed = cfg.seed()?;
    match kind.as_str() {
        "moment" => {
            let n = cfg.single_n(256)?;
            let p = cfg.single_p(4.0)?;
            if p.fract() != 0.0 || !(2.0..=8.0).contains(&p) {
                return Err(CliError::Config(format!("moment baseline needs an even integer p in 2..=8, got {p}")));
            }
            let trials = ExperimentConfig::positive(&mut cfg.trials, 2000, "trials")?;
            let law: Coefficients = ExperimentConfig::text(&mut cfg.coefficients, "gaussian").parse()?;
            let tol = *cfg.tolerance.get_or_insert(flatlab::baselines::DEFAULT_MOMENT_TOLERANCE);
            let r = moment_check(n, p as u32, trials, seed, law, tol)?;
            let mut t = Table::new(&["n", "p", "ratio", "stderr", "target", "trials", "exact", "passed"]);
            t.push(vec![
                json!(r.n),
                json!(r.p),
                num(r.ratio),
                num(r.stderr),
                num(r.target),
                json!(r.trials),
                json!(r.exact),
                json!(r.passed),
            ]);
            Ok(t)
        }
        "rudin" => {
            let n = cfg.single_n(100)?;
            let attempts = ExperimentConfig::positive(&mut cfg.trials, 200, "trials")?;
            let r = rudin_check(n, attempts, seed)?;
            let mut t = Table::new(&["n", "best_sup", "bound", "candidates", "passed"]);
            t.push(vec![json!(r.n), num(r.best_sup), num(r.bound), json!(r.candidates), json!(r.passed)]);
            Ok(t)
        }
        "rudin-shapiro" => {
            let default: Vec<usize> = (0..=12).map(|k| 1 << k).collect();
            let ns = cfg.n_list(&default)?;
            let mut t = Table::new(&["n", "k", "sup", "bound", "passed"]);
            for n in ns {
                if !n.is_power_of_two() {
                    return Err(CliError::Config(format!("rudin-shapiro length {n} is not a power of two")));
                }
                let k = n.trailing_zeros();
                let sup = rudin_shapiro(k)?.sup_norm();
                let bound = (2.0 * n as f64).sqrt();
                t.push(vec![json!(n), json!(k), num(sup), num(bound), json!(sup <= bound + 1e-9)]);
            }
            Ok(t)
        }
        other => Err(CliError::Config(format!("unknown baseline '{other}'"))),
    }
}

/// Gram matrix of the spectrum's basis under the exact rule for `p = 2`.
fn gram_deviation(sp: &SpectrumSelection) -> f64 {
    let rule = QuadratureRule::exact(sp.manifold(), 2 * sp.degree());
    let b = sp.basis_matrix(&rule);
    let mut wb = b.clone();
    for (i, w) in rule.weights().iter().enumerate() {
        wb.row_mut(i).scale_mut(*w);
    }
    let g = b.tr_mul(&wb);
    (g - nalgebra::DMatrix::identity(sp.dim(), sp.dim())).amax()
}

fn report(cfg: &mut ExperimentConfig) -> Result<Table, CliError> {
    let seed = cfg.seed()?;
    let samples = ExperimentConfig::positive(&mut cfg.samples, 20_000, "samples")?;
    let mut t = Table::new(&["check", "value", "target", "tolerance", "passed"]);
    let mut row = |name: &str, value: f64, target: f64, tol: f64| {
        t.push(vec![
            json!(name),
            num(value),
            num(target),
            num(tol),
            json!((value - target).abs() <= tol),
        ]);
    };

    let circle = spectrum(Manifold::Torus1, 33)?;
    let sphere = spectrum(Manifold::Sphere2, 81)?;
    row("gram_torus1_n33", gram_deviation(&circle), 0.0, 1e-10);
    row("gram_sphere2_n81", gram_deviation(&sphere), 0.0, 1e-10);

    let mut r = rng::stream(seed, 0);
    let points: Vec<Vec<f64>> = (0..200).map(|_| Manifold::Sphere2.random_point(&mut r)).collect();
    row("class_k_sphere2", class_k_verify(&sphere, &points, 1e-8).max_deviation, 0.0, 1e-8);
    let x = Manifold::Torus1.random_point(&mut r);
    row("kernel_diagonal_n33", kernel(&circle, &x, &x)?, 33.0, 1e-9);

    let nik = nikolskii_check(&circle, f64::INFINITY, 2.0, 1000, rng::derive(seed, 1))?;
    row("nikolskii_kernel_ratio_n33", nik.kernel_ratio, nik.bound, 1e-6);

    let levy = theorem2_sweep(&[circle], &[2.0], samples, rng::derive(seed, 2))?;
    row("levy_induced_l2_n33", levy[0].mean, 1.0, 1e-10);

    let santalo = check_santalo(&NormBody::lp(2, f64::INFINITY)?, None, samples, rng::derive(seed, 3))?;
    let exact = 8.0 / std::f64::consts::PI.powi(2);
    row("santalo_square", santalo.lhs, exact, 3.0 * santalo.stderr_budget);

    let rs = rudin_shapiro(8)?;
    let bound = (2.0 * rs.len() as f64).sqrt();
    let sup = rs.sup_norm();
    row("rudin_shapiro_k8_excess", (sup - bound).max(0.0), 0.0, 1e-9);
    row("omega_n_equals_m", omega(50, 50)?.paper_value, 1.0, 0.0);
    Ok(t)
}
