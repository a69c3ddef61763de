//! Experiment configuration: command-line flags merged over an optional JSON
//! file with the same field names.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Lévy means of induced L_p norms.
    Levy,
    /// Ratio minimization on random subspaces.
    Flat,
    /// Nikolskii inequality on random polynomials and the kernel.
    Nikolskii,
    /// Convex-geometry inequality checks on a norm body.
    Convex,
    /// Classical flat-polynomial baselines.
    Baseline,
    /// Quick pass/fail summary of the core identities.
    Report,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// An exponent in `[1, inf]`; written `inf` on the command line and in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => f64::INFINITY,
            t => t.parse::<f64>().map_err(|e| format!("bad exponent '{s}': {e}"))?,
        };
        if !(v >= 1.0) {
            return Err(format!("exponent {s} is below 1"));
        }
        Ok(Exponent(v))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Exponent::from_str(&v.to_string()),
            Raw::Text(t) => Exponent::from_str(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// A single value or a list, so `"n": 65` and `"n": [33, 65]` both load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(d: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Option::<OneOrMany<T>>::deserialize(d)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

/// Numerical experiments on flat polynomials, norm bodies and Lévy means.
///
/// Every run needs an explicit --seed. Reports start with comment lines
/// holding the library version and the full resolved configuration.
#[derive(Debug, Parser)]
#[command(name = "flatlab", version, after_long_help = COLUMNS_HELP)]
pub struct Args {
    /// Experiment to run (may also come from --config).
    pub command: Option<Command>,
    /// JSON file with the same field names as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub fields: ExperimentConfig,
}

/// Every experiment knob. Fields left unset take per-command defaults, which
/// are filled in before the configuration is written to the report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    /// torus1, torus2, torus3 or sphere2.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    /// Spectrum dimension(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    /// Exponent(s) p, comma separated; `inf` allowed.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many", skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Exponent>>,
    /// Lower exponent q.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Exponent>,
    /// Relative subspace dimension for `flat`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Trials (subspaces, random polynomials or attempts).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Descent restarts per subspace.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Descent iterations per restart.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    /// Random seed (mandatory).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Convex check: urysohn, santalo, polar-containment, central-section,
    /// bourgain-milman, volume-lower-bound, diameter-bound, omega or all.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
    /// Convex body: l1, l2, linf, lp:<p> or ellipsoid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    /// Section dimension m for the omega factor.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Bourgain–Milman screening constant.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    /// Baseline: moment, rudin or rudin-shapiro.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    /// Coefficient law for the moment baseline: gaussian or rademacher.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<String>,
    /// Relative tolerance for the moment baseline.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Report path; standard output when absent. Not echoed in the report.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl ExperimentConfig {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(&mut self, top: &ExperimentConfig) {
        overlay!(
            self, top, command, manifold, n, p, q, epsilon, samples, trials, restarts, iters, seed, check, body,
            m, c2, baseline, coefficients, tolerance, out, format
        );
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("--seed is required (no clock-based default)".into()))
    }

    /// The first `n`, or `default` when unset.
    pub fn single_n(&mut self, default: usize) -> Result<usize, CliError> {
        let n = self.n.get_or_insert_with(|| vec![default]);
        match n.as_slice() {
            [v] if *v > 0 => Ok(*v),
            [_] => Err(CliError::Config("n must be positive".into())),
            _ => Err(CliError::Config("this command takes a single n".into())),
        }
    }

    pub fn n_list(&mut self, default: &[usize]) -> Result<Vec<usize>, CliError> {
        let n = self.n.get_or_insert_with(|| default.to_vec()).clone();
        if n.is_empty() || n.contains(&0) {
            return Err(CliError::Config("n values must be positive".into()));
        }
        Ok(n)
    }

    pub fn p_list(&mut self, default: &[f64]) -> Vec<f64> {
        self.p
            .get_or_insert_with(|| default.iter().map(|&v| Exponent(v)).collect())
            .iter()
            .map(|e| e.0)
            .collect()
    }

    pub fn single_p(&mut self, default: f64) -> Result<f64, CliError> {
        match self.p_list(&[default]).as_slice() {
            [v] => Ok(*v),
            _ => Err(CliError::Config("this command takes a single p".into())),
        }
    }

    pub fn q_or(&mut self, default: f64) -> f64 {
        self.q.get_or_insert(Exponent(default)).0
    }

    pub fn manifold(&mut self) -> Result<flatlab::harmonics::Manifold, CliError> {
        let name = self.manifold.get_or_insert_with(|| "torus1".into());
        name.parse().map_err(|e: flatlab::Error| CliError::Config(e.to_string()))
    }

    pub fn positive(value: &mut Option<usize>, default: usize, name: &str) -> Result<usize, CliError> {
        match *value.get_or_insert(default) {
            0 => Err(CliError::Config(format!("{name} must be positive"))),
            v => Ok(v),
        }
    }

    pub fn text(value: &mut Option<String>, default: &str) -> String {
        value.get_or_insert_with(|| default.into()).to_ascii_lowercase()
    }
}

const COLUMNS_HELP: &str = "\
Report columns by command:
  levy       n, p, mean, stderr, normalizer, normalized
  flat       kind, n, trial, subspace_dim, ratio, converged, iterations,
             worst_ratio, rho, normalized (summary rows fill the last three)
  nikolskii  n, p, q, max_ratio, bound, kernel_ratio, trials, passed
  convex     check, lhs, rhs, ratio, slack, stderr_budget, status, digest
             (omega: n, m, paper_value, corrected_value)
  baseline   moment: n, p, ratio, stderr, target, trials, exact, passed
             rudin: n, best_sup, bound, candidates, passed
             rudin-shapiro: n, k, sup, bound, passed
  report     check, value, target, tolerance, passed

Exit codes: 0 success, 1 internal error, 2 invalid configuration,
3 inconclusive Monte Carlo result.";
