//! Experiment specification: defaults per experiment and problem, config-file
//! parsing, flag precedence, and validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Integrate,
    Converge,
    Errgrowth,
    Poincare,
    Volume,
    Kdv,
    Solar,
    Argon,
    LemmaA2,
    GammaAsymptotic,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Integrate => "integrate",
            Experiment::Converge => "converge",
            Experiment::Errgrowth => "errgrowth",
            Experiment::Poincare => "poincare",
            Experiment::Volume => "volume",
            Experiment::Kdv => "kdv",
            Experiment::Solar => "solar",
            Experiment::Argon => "argon",
            Experiment::LemmaA2 => "lemma-a2",
            Experiment::GammaAsymptotic => "gamma-asymptotic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Baseline,
    Relaxation,
    Projection,
    SymplecticEuler,
}

impl SchemeKind {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "baseline" => Ok(SchemeKind::Baseline),
            "relaxation" => Ok(SchemeKind::Relaxation),
            "projection" => Ok(SchemeKind::Projection),
            "symplectic-euler" => Ok(SchemeKind::SymplecticEuler),
            other => Err(CliError::Config(format!(
                "unknown scheme `{other}` (expected baseline, relaxation, projection, symplectic-euler)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Baseline => "baseline",
            SchemeKind::Relaxation => "relaxation",
            SchemeKind::Projection => "projection",
            SchemeKind::SymplecticEuler => "symplectic-euler",
        }
    }
}

/// Unresolved overrides from flags or a config file. Every field is optional;
/// omitted values fall back to config-file values and then to the experiment
/// defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Overrides {
    pub problem: Option<String>,
    pub method: Option<String>,
    pub scheme: Option<String>,
    pub invariant: Option<String>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub dts: Option<Vec<f64>>,
    pub max_s: Option<u32>,
    pub points: Option<usize>,
    pub radius: Option<f64>,
    pub stride: Option<usize>,
    pub sample_every: Option<f64>,
    pub grid_n: Option<usize>,
    pub eccentricity: Option<f64>,
    pub direction: Option<String>,
}

impl Overrides {
    /// Later (higher-precedence) values override earlier ones.
    fn merged_over(self, base: Overrides) -> Overrides {
        Overrides {
            problem: self.problem.or(base.problem),
            method: self.method.or(base.method),
            scheme: self.scheme.or(base.scheme),
            invariant: self.invariant.or(base.invariant),
            dt: self.dt.or(base.dt),
            t_end: self.t_end.or(base.t_end),
            seed: self.seed.or(base.seed),
            output: self.output.or(base.output),
            dts: self.dts.or(base.dts),
            max_s: self.max_s.or(base.max_s),
            points: self.points.or(base.points),
            radius: self.radius.or(base.radius),
            stride: self.stride.or(base.stride),
            sample_every: self.sample_every.or(base.sample_every),
            grid_n: self.grid_n.or(base.grid_n),
            eccentricity: self.eccentricity.or(base.eccentricity),
            direction: self.direction.or(base.direction),
        }
    }
}

const KNOWN_KEYS: [&str; 17] = [
    "problem",
    "method",
    "scheme",
    "invariant",
    "dt",
    "t-end",
    "seed",
    "output",
    "dts",
    "max-s",
    "points",
    "radius",
    "stride",
    "sample-every",
    "grid-n",
    "eccentricity",
    "direction",
];

/// Common misspellings mapped to the intended key.
fn key_suggestion(key: &str) -> Option<&'static str> {
    match key {
        "stepsize" | "step-size" | "step" | "h" | "delta-t" | "timestep" => Some("dt"),
        "tend" | "t-final" | "tfinal" | "final-time" | "tmax" | "t-max" => Some("t-end"),
        "tableau" | "rk" | "integrator" => Some("method"),
        "outfile" | "out" | "output-path" => Some("output"),
        "n" | "grid" | "nodes" => Some("grid-n"),
        "e" | "ecc" => Some("eccentricity"),
        "sample-times" | "samples" => Some("sample-every"),
        "maxs" | "s-max" => Some("max-s"),
        _ => None,
    }
}

/// Parse a JSON config file into overrides. Unknown keys are rejected, with a
/// suggestion when the key is a known alias.
pub fn parse_config(path: &Path) -> Result<Overrides, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config `{}`: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config `{}` is not valid JSON: {e}", path.display())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Config("config root must be a JSON object".into()))?;
    for key in obj.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            let hint = match key_suggestion(key) {
                Some(s) => format!("; did you mean `{s}`?"),
                None => format!("; known keys: {}", KNOWN_KEYS.join(", ")),
            };
            return Err(CliError::Config(format!("unknown config key `{key}`{hint}")));
        }
    }
    serde_json::from_value(value)
        .map_err(|e| CliError::Config(format!("config `{}`: {e}", path.display())))
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub problem: String,
    pub method: String,
    pub scheme: SchemeKind,
    /// Functional relaxed or projected on (None for baseline/symplectic runs).
    pub invariant: Option<String>,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Output stem; `.csv` and `.json` are appended.
    pub output: PathBuf,
    pub dts: Vec<f64>,
    pub max_s: u32,
    pub points: usize,
    pub radius: f64,
    pub stride: usize,
    pub sample_every: f64,
    pub grid_n: usize,
    pub eccentricity: f64,
    pub direction: String,
}

/// Invariant names registered on each problem, in registration order (used
/// for validation without constructing the problem).
pub fn problem_invariants(problem: &str) -> Option<&'static [&'static str]> {
    Some(match problem {
        "lotka-volterra" | "henon-heiles" | "henon-heiles-chaotic" | "duffing" | "solar"
        | "argon" | "linear-hamiltonian" => &["hamiltonian"],
        "harmonic" | "harmonic2" | "nonlinear" | "skew4" => &["energy"],
        "kepler" => &["hamiltonian", "angular-momentum"],
        "kdv" => &["mass", "energy"],
        _ => return None,
    })
}

/// Problems with a separable canonical partition (symplectic Euler capable).
pub fn problem_is_partitioned(problem: &str) -> bool {
    matches!(
        problem,
        "harmonic" | "harmonic2" | "duffing" | "henon-heiles" | "henon-heiles-chaotic" | "kepler"
    )
}

/// Default functional to relax on.
fn default_invariant(problem: &str) -> Option<&'static str> {
    match problem {
        "kdv" => Some("energy"),
        other => problem_invariants(other).map(|names| names[0]),
    }
}

struct ProblemDefaults {
    method: &'static str,
    dt: f64,
    t_end: f64,
}

/// Per-problem run parameters of the standard experiments (desk-scaled
/// where noted in the README).
fn integrate_defaults(problem: &str) -> ProblemDefaults {
    match problem {
        "lotka-volterra" => ProblemDefaults { method: "rk44", dt: 0.85, t_end: 500.0 },
        "henon-heiles" => ProblemDefaults { method: "ssprk33", dt: 0.1, t_end: 5000.0 },
        "henon-heiles-chaotic" => ProblemDefaults { method: "ssprk33", dt: 0.1, t_end: 30000.0 },
        "duffing" => ProblemDefaults { method: "rk44", dt: 0.5, t_end: 500.0 },
        "harmonic" | "harmonic2" => ProblemDefaults { method: "rk44", dt: 0.25, t_end: 200.0 },
        "nonlinear" => ProblemDefaults { method: "heun3", dt: 0.025, t_end: 100.0 },
        "kepler" => ProblemDefaults { method: "ssprk33", dt: 0.01, t_end: 100.0 },
        "kdv" => ProblemDefaults { method: "norsett23", dt: 0.5, t_end: 200.0 },
        "solar" => ProblemDefaults { method: "ssprk22", dt: 200.0, t_end: 20000.0 },
        "argon" => ProblemDefaults { method: "rk44", dt: 1e-4, t_end: 0.2 },
        _ => ProblemDefaults { method: "rk44", dt: 0.1, t_end: 10.0 },
    }
}

fn default_problem(experiment: Experiment) -> &'static str {
    match experiment {
        Experiment::Integrate => "lotka-volterra",
        Experiment::Converge => "harmonic",
        Experiment::Errgrowth => "nonlinear",
        Experiment::Poincare => "henon-heiles",
        Experiment::Volume => "harmonic",
        Experiment::Kdv => "kdv",
        Experiment::Solar => "solar",
        Experiment::Argon => "argon",
        Experiment::LemmaA2 | Experiment::GammaAsymptotic => "harmonic",
    }
}

/// The default spacing of error samples: one orbital period for the problems
/// with 2-pi-periodic references, otherwise t_end/64.
fn default_sample_every(problem: &str, t_end: f64) -> f64 {
    match problem {
        "harmonic" | "harmonic2" | "nonlinear" | "kepler" => 2.0 * std::f64::consts::PI,
        _ => t_end / 64.0,
    }
}

pub const VALID_PROBLEMS: [&str; 13] = [
    "lotka-volterra",
    "henon-heiles",
    "henon-heiles-chaotic",
    "duffing",
    "harmonic",
    "harmonic2",
    "nonlinear",
    "kepler",
    "kdv",
    "solar",
    "argon",
    "skew4",
    "linear-hamiltonian",
];

/// Resolve the final spec: flags override config-file values, which override
/// the experiment defaults. Validates names and the scheme/problem pairing.
pub fn resolve(
    experiment: Experiment,
    flags: Overrides,
    config: Option<Overrides>,
) -> Result<ExperimentSpec, CliError> {
    let merged = match config {
        Some(cfg) => flags.merged_over(cfg),
        None => flags,
    };

    let problem = merged
        .problem
        .unwrap_or_else(|| default_problem(experiment).to_string());
    if !VALID_PROBLEMS.contains(&problem.as_str()) {
        return Err(CliError::Config(format!(
            "unknown problem `{problem}`; valid: {}",
            VALID_PROBLEMS.join(", ")
        )));
    }
    // the dedicated experiments pin their problem
    let problem = match experiment {
        Experiment::Kdv => "kdv".to_string(),
        Experiment::Solar => "solar".to_string(),
        Experiment::Argon => "argon".to_string(),
        _ => problem,
    };

    let defaults = integrate_defaults(&problem);
    let method = merged.method.unwrap_or_else(|| match experiment {
        // the superconvergent odd-order showcase
        Experiment::Converge | Experiment::GammaAsymptotic => "heun3".to_string(),
        _ => defaults.method.to_string(),
    });
    if rrk_core::registry_get(&method).is_err() {
        return Err(CliError::Config(format!(
            "unknown method `{method}`; valid: {}",
            rrk_core::METHOD_NAMES.join(", ")
        )));
    }

    let scheme = match merged.scheme {
        Some(s) => SchemeKind::parse(&s)?,
        None => match experiment {
            Experiment::GammaAsymptotic | Experiment::LemmaA2 => SchemeKind::Relaxation,
            _ => SchemeKind::Relaxation,
        },
    };
    if scheme == SchemeKind::SymplecticEuler && !problem_is_partitioned(&problem) {
        return Err(CliError::Config(format!(
            "scheme symplectic-euler requires a canonical (q, p) problem; `{problem}` has none"
        )));
    }

    let invariant = match scheme {
        SchemeKind::Baseline | SchemeKind::SymplecticEuler => None,
        SchemeKind::Relaxation | SchemeKind::Projection => {
            let name = merged
                .invariant
                .or_else(|| default_invariant(&problem).map(String::from))
                .ok_or_else(|| {
                    CliError::Config(format!("problem `{problem}` has no invariants"))
                })?;
            let known = problem_invariants(&problem).unwrap_or(&[]);
            if !known.contains(&name.as_str()) {
                return Err(CliError::Config(format!(
                    "invariant `{name}` is not registered on `{problem}`; available: {}",
                    known.join(", ")
                )));
            }
            Some(name)
        }
    };

    let t_end = merged.t_end.unwrap_or(match experiment {
        Experiment::Converge | Experiment::GammaAsymptotic => 10.0,
        Experiment::Errgrowth => 2000.0,
        _ => defaults.t_end,
    });
    let dt = merged.dt.unwrap_or(defaults.dt);
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(CliError::Config(format!(
            "dt and t-end must be positive (dt = {dt}, t-end = {t_end})"
        )));
    }

    let dts = merged.dts.unwrap_or_else(|| match experiment {
        Experiment::GammaAsymptotic => vec![0.1, 0.05, 0.025, 0.0125],
        _ => vec![0.4, 0.2, 0.1, 0.05, 0.025],
    });
    if dts.len() < 2 && matches!(experiment, Experiment::Converge | Experiment::GammaAsymptotic) {
        return Err(CliError::Config("need at least two entries in dts".into()));
    }

    let sample_every = match merged.sample_every {
        Some(v) if v > 0.0 => v,
        Some(v) => {
            return Err(CliError::Config(format!(
                "sample-every must be positive, got {v}"
            )))
        }
        None => default_sample_every(&problem, t_end),
    };

    let direction = merged.direction.unwrap_or_else(|| "positive".into());
    if !["positive", "negative", "both"].contains(&direction.as_str()) {
        return Err(CliError::Config(format!(
            "direction must be positive, negative, or both; got `{direction}`"
        )));
    }

    Ok(ExperimentSpec {
        experiment,
        problem,
        method,
        scheme,
        invariant,
        dt,
        t_end,
        seed: merged.seed.unwrap_or(rrk_core::rng::DEFAULT_SEED),
        output: merged
            .output
            .unwrap_or_else(|| PathBuf::from(experiment.name())),
        dts,
        max_s: merged.max_s.unwrap_or(12),
        points: merged.points.unwrap_or(200),
        radius: merged.radius.unwrap_or(0.001),
        stride: merged.stride.unwrap_or(4),
        sample_every,
        grid_n: merged.grid_n.unwrap_or(128),
        eccentricity: merged.eccentricity.unwrap_or(0.5),
        direction,
    })
}

/// Defaults for `--show-defaults`, as a stable key/value map.
pub fn show_defaults(experiment: Experiment, problem: Option<&str>) -> BTreeMap<String, String> {
    let spec = resolve(
        experiment,
        Overrides {
            problem: problem.map(String::from),
            ..Overrides::default()
        },
        None,
    )
    .expect("defaults always resolve");
    let mut map = BTreeMap::new();
    map.insert("experiment".into(), spec.experiment.name().to_string());
    map.insert("problem".into(), spec.problem.clone());
    map.insert("method".into(), spec.method.clone());
    map.insert("scheme".into(), spec.scheme.name().to_string());
    map.insert(
        "invariant".into(),
        spec.invariant.clone().unwrap_or_else(|| "-".into()),
    );
    map.insert("dt".into(), format!("{}", spec.dt));
    map.insert("t-end".into(), format!("{}", spec.t_end));
    map.insert("seed".into(), format!("{:#x}", spec.seed));
    map.insert("output".into(), spec.output.display().to_string());
    match experiment {
        Experiment::Converge | Experiment::GammaAsymptotic => {
            map.insert(
                "dts".into(),
                spec.dts
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        Experiment::Errgrowth => {
            map.insert("sample-every".into(), format!("{}", spec.sample_every));
        }
        Experiment::Volume => {
            map.insert("points".into(), format!("{}", spec.points));
            map.insert("radius".into(), format!("{}", spec.radius));
            map.insert("stride".into(), format!("{}", spec.stride));
        }
        Experiment::Kdv => {
            map.insert("grid-n".into(), format!("{}", spec.grid_n));
        }
        Experiment::LemmaA2 => {
            map.insert("max-s".into(), format!("{}", spec.max_s));
        }
        Experiment::Poincare => {
            map.insert("direction".into(), spec.direction.clone());
        }
        _ => {}
    }
    map
}
