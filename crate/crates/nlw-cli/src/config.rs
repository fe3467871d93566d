//! Run configuration: flat `key = value` lines, `#` comments, strict keys.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("key `{key}`: violates {bound}")]
    ConstraintViolation { key: String, bound: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    Ensemble,
    DecayFit,
    CheckInequalities,
    Strichartz,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Ensemble => "ensemble",
            Experiment::DecayFit => "decay_fit",
            Experiment::CheckInequalities => "check_inequalities",
            Experiment::Strichartz => "strichartz",
        }
    }
}

/// Source term g.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Zero,
    /// Mode index applied on every axis.
    SingleMode { index: usize, amplitude: f64 },
    /// Gaussian coefficients rescaled to the given L2 norm.
    SeededRandom { seed: u64, norm: f64 },
}

/// Initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Zero,
    SingleMode { index: usize, a: f64, adot: f64 },
    /// `count` states sampled from the energy ball of radius `radius`,
    /// supported on modes below `mode_cutoff` in every direction.
    Ball {
        radius: f64,
        count: usize,
        seed: u64,
        mode_cutoff: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub n_modes: usize,
    pub n_quad: usize,
    pub k: f64,
    pub p: f64,
    pub f_a: f64,
    pub f_b: f64,
    pub f_q: f64,
    pub g: SourceSpec,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub init: InitSpec,
    pub output_dir: PathBuf,
    /// Ball radius for the ensemble entry-and-stay test.
    pub rho: f64,
    /// Tail window for log-log decay fits.
    pub fit_window: (f64, f64),
    pub oracle_samples: usize,
    pub oracle_seed: u64,
}

impl RunConfig {
    /// Seeds that influence the produced data, in config order.
    pub fn seeds(&self) -> Vec<u64> {
        let mut out = Vec::new();
        if let SourceSpec::SeededRandom { seed, .. } = self.g {
            out.push(seed);
        }
        if let InitSpec::Ball { seed, .. } = self.init {
            out.push(seed);
        }
        if self.experiment == Experiment::CheckInequalities {
            out.push(self.oracle_seed);
        }
        out
    }

    /// Replace every seed the run would use.
    pub fn override_seeds(&mut self, s: u64) {
        if let SourceSpec::SeededRandom { seed, .. } = &mut self.g {
            *seed = s;
        }
        if let InitSpec::Ball { seed, .. } = &mut self.init {
            *seed = s;
        }
        self.oracle_seed = s;
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        reason: reason.into(),
    }
}

fn violation(key: &str, bound: impl Into<String>) -> ConfigError {
    ConfigError::ConstraintViolation {
        key: key.into(),
        bound: bound.into(),
    }
}

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(key, format!("not a number: `{v}`"))),
        }
    }

    fn take_usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| bad(key, format!("not a nonnegative integer: `{v}`"))),
        }
    }

    fn require_usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        match self.take(key) {
            None => Err(ConfigError::MissingKey(key.into())),
            Some(v) => v
                .parse()
                .map_err(|_| bad(key, format!("not a nonnegative integer: `{v}`"))),
        }
    }

    fn take_u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| bad(key, format!("not a nonnegative integer: `{v}`"))),
        }
    }
}

/// `name` or `name(arg, arg, ...)`.
fn call(key: &str, value: &str) -> Result<(String, Vec<String>), ConfigError> {
    match value.split_once('(') {
        None => Ok((value.trim().to_string(), Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| bad(key, "unbalanced parentheses"))?;
            let args = inner.split(',').map(|a| a.trim().to_string()).collect();
            Ok((name.trim().to_string(), args))
        }
    }
}

fn arg<T: std::str::FromStr>(key: &str, args: &[String], i: usize) -> Result<T, ConfigError> {
    let raw = args
        .get(i)
        .ok_or_else(|| bad(key, format!("missing argument {}", i + 1)))?;
    raw.parse()
        .map_err(|_| bad(key, format!("argument {}: cannot parse `{raw}`", i + 1)))
}

fn parse_source(key: &str, value: &str) -> Result<SourceSpec, ConfigError> {
    let (name, args) = call(key, value)?;
    match name.as_str() {
        "zero" if args.is_empty() => Ok(SourceSpec::Zero),
        "single_mode" if args.len() == 2 => Ok(SourceSpec::SingleMode {
            index: arg(key, &args, 0)?,
            amplitude: arg(key, &args, 1)?,
        }),
        "seeded_random" if args.len() == 2 => Ok(SourceSpec::SeededRandom {
            seed: arg(key, &args, 0)?,
            norm: arg(key, &args, 1)?,
        }),
        _ => Err(bad(
            key,
            "expected zero | single_mode(index, amplitude) | seeded_random(seed, norm)",
        )),
    }
}

fn parse_init(key: &str, value: &str) -> Result<InitSpec, ConfigError> {
    let (name, args) = call(key, value)?;
    match name.as_str() {
        "zero" if args.is_empty() => Ok(InitSpec::Zero),
        "single_mode" if args.len() == 3 => Ok(InitSpec::SingleMode {
            index: arg(key, &args, 0)?,
            a: arg(key, &args, 1)?,
            adot: arg(key, &args, 2)?,
        }),
        "ball" if args.len() == 4 => Ok(InitSpec::Ball {
            radius: arg(key, &args, 0)?,
            count: arg(key, &args, 1)?,
            seed: arg(key, &args, 2)?,
            mode_cutoff: arg(key, &args, 3)?,
        }),
        _ => Err(bad(
            key,
            "expected zero | single_mode(index, a, adot) | ball(R, count, seed, mode_cutoff)",
        )),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let malformed = || ConfigError::Malformed {
            line: i + 1,
            text: body.to_string(),
        };
        let (key, value) = body.split_once('=').ok_or_else(malformed)?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() || value.is_empty() {
            return Err(malformed());
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey(key));
        }
    }
    let mut raw = Raw(map);

    let experiment = match raw.take("experiment").as_deref() {
        None | Some("simulate") => Experiment::Simulate,
        Some("ensemble") => Experiment::Ensemble,
        Some("decay_fit") => Experiment::DecayFit,
        Some("check_inequalities") => Experiment::CheckInequalities,
        Some("strichartz") => Experiment::Strichartz,
        Some(v) => {
            return Err(bad(
                "experiment",
                format!("unknown experiment `{v}`; expected simulate | ensemble | decay_fit | check_inequalities | strichartz"),
            ))
        }
    };

    let dim = raw.require_usize("domain.dim")?;
    let n_modes = raw.require_usize("domain.n_modes")?;
    let n_quad = raw.take_usize("domain.n_quad", 2 * n_modes)?;

    let k = raw.take_f64("model.k", 1.0)?;
    let p = raw.take_f64("model.p", 2.0)?;
    let f_a = raw.take_f64("model.f.a", 0.0)?;
    let f_b = raw.take_f64("model.f.b", 0.0)?;
    let f_q = raw.take_f64("model.f.q", 1.0)?;
    let g = match raw.take("model.g") {
        None => SourceSpec::Zero,
        Some(v) => parse_source("model.g", &v)?,
    };

    let dt = raw.take_f64("time.dt", 1e-3)?;
    let t_end = raw.take_f64("time.t_end", 1.0)?;
    let record_every = raw.take_usize("time.record_every", 1)?;

    let init = match raw.take("init") {
        None => InitSpec::Zero,
        Some(v) => parse_init("init", &v)?,
    };

    let output_dir = PathBuf::from(raw.take("output.dir").unwrap_or_else(|| "out".into()));
    let rho = raw.take_f64("ensemble.rho", 1.0)?;
    let fit_window = (
        raw.take_f64("fit.window_start", t_end / 10.0)?,
        raw.take_f64("fit.window_end", t_end)?,
    );
    let oracle_samples = raw.take_usize("oracle.samples", 1000)?;
    let oracle_seed = raw.take_u64("oracle.seed", 0)?;

    if let Some(key) = raw.0.into_keys().next() {
        return Err(ConfigError::UnknownKey(key));
    }

    if !(1..=3).contains(&dim) {
        return Err(violation("domain.dim", "1 <= dim <= 3"));
    }
    if n_modes < 1 {
        return Err(violation("domain.n_modes", ">= 1"));
    }
    if n_quad < (3 * n_modes).div_ceil(2) {
        return Err(violation("domain.n_quad", ">= ceil(3 n_modes / 2)"));
    }
    if k < 0.0 || !k.is_finite() {
        return Err(violation("model.k", ">= 0"));
    }
    if p <= 0.0 || !p.is_finite() {
        return Err(violation("model.p", "> 0"));
    }
    if f_q >= 5.0 {
        return Err(violation("model.f.q", "< 5"));
    }
    if f_q < 1.0 {
        return Err(violation("model.f.q", ">= 1"));
    }
    if dt <= 0.0 || !dt.is_finite() {
        return Err(violation("time.dt", "> 0"));
    }
    if t_end < 0.0 || !t_end.is_finite() {
        return Err(violation("time.t_end", ">= 0"));
    }
    if record_every < 1 {
        return Err(violation("time.record_every", ">= 1"));
    }
    if rho <= 0.0 {
        return Err(violation("ensemble.rho", "> 0"));
    }
    if oracle_samples < 1 {
        return Err(violation("oracle.samples", ">= 1"));
    }

    match g {
        SourceSpec::SingleMode { index, .. } if index < 1 || index > n_modes => {
            return Err(violation("model.g", "1 <= index <= n_modes"));
        }
        SourceSpec::SeededRandom { norm, .. } if !(norm >= 0.0) => {
            return Err(violation("model.g", "norm >= 0"));
        }
        _ => {}
    }
    match init {
        InitSpec::SingleMode { index, .. } if index < 1 || index > n_modes => {
            return Err(violation("init", "1 <= index <= n_modes"));
        }
        InitSpec::Ball {
            radius,
            count,
            mode_cutoff,
            ..
        } => {
            if !(radius >= 0.0) {
                return Err(violation("init", "R >= 0"));
            }
            if count < 1 {
                return Err(violation("init", "count >= 1"));
            }
            if mode_cutoff < 1 || mode_cutoff > n_modes {
                return Err(violation("init", "1 <= mode_cutoff <= n_modes"));
            }
        }
        _ => {}
    }

    // experiment/init compatibility caught here so runs never start doomed
    match experiment {
        Experiment::Simulate | Experiment::Strichartz => {
            if matches!(init, InitSpec::Ball { .. }) {
                return Err(violation(
                    "init",
                    "zero or single_mode required by this experiment",
                ));
            }
        }
        Experiment::Ensemble | Experiment::DecayFit => {
            let InitSpec::Ball { count, .. } = init else {
                return Err(violation("init", "ball(..) required by this experiment"));
            };
            if experiment == Experiment::DecayFit && count < 2 {
                return Err(violation("init", "count >= 2 required by decay_fit"));
            }
        }
        Experiment::CheckInequalities => {}
    }
    if experiment == Experiment::DecayFit
        && !(fit_window.0 > 0.0 && fit_window.0 < fit_window.1 && fit_window.1 <= t_end)
    {
        return Err(violation(
            "fit.window_start",
            "0 < window_start < window_end <= t_end",
        ));
    }

    Ok(RunConfig {
        experiment,
        dim,
        n_modes,
        n_quad,
        k,
        p,
        f_a,
        f_b,
        f_q,
        g,
        dt,
        t_end,
        record_every,
        init,
        output_dir,
        rho,
        fit_window,
        oracle_samples,
        oracle_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config("domain.dim = 1\ndomain.n_modes = 8\n").unwrap();
        assert_eq!(cfg.experiment, Experiment::Simulate);
        assert_eq!(cfg.n_quad, 16);
        assert_eq!(cfg.k, 1.0);
        assert_eq!(cfg.p, 2.0);
        assert_eq!(cfg.g, SourceSpec::Zero);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.record_every, 1);
        assert_eq!(cfg.init, InitSpec::Zero);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = parse_config(
            "# a run\ndomain.dim = 2  # planar\n\ndomain.n_modes = 4\nmodel.f.q = 3.0\n",
        )
        .unwrap();
        assert_eq!(cfg.dim, 2);
        assert_eq!(cfg.f_q, 3.0);
    }

    #[test]
    fn q_at_five_names_the_bound() {
        let err =
            parse_config("domain.dim = 1\ndomain.n_modes = 8\nmodel.f.q = 5.0\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::ConstraintViolation {
                key: "model.f.q".into(),
                bound: "< 5".into()
            }
        );
    }

    #[test]
    fn unknown_key_is_a_hard_error() {
        let err =
            parse_config("domain.dim = 1\ndomain.n_modes = 8\nmodel.damping_k = 1.0\n")
                .unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("model.damping_k".into()));
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_config("domain.dim = 1\ndomain.dim = 2\n").unwrap_err();
        assert_eq!(err, ConfigError::DuplicateKey("domain.dim".into()));
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = parse_config("domain.dim = 1\n").unwrap_err();
        assert_eq!(err, ConfigError::MissingKey("domain.n_modes".into()));
    }

    #[test]
    fn undersized_quadrature_is_rejected() {
        let err =
            parse_config("domain.dim = 1\ndomain.n_modes = 8\ndomain.n_quad = 11\n").unwrap_err();
        assert!(matches!(err, ConfigError::ConstraintViolation { key, .. } if key == "domain.n_quad"));
        assert!(
            parse_config("domain.dim = 1\ndomain.n_modes = 8\ndomain.n_quad = 12\n").is_ok()
        );
    }

    #[test]
    fn value_syntaxes_parse() {
        let cfg = parse_config(
            "experiment = decay_fit\ndomain.dim = 1\ndomain.n_modes = 8\n\
             model.g = seeded_random(7, 0.5)\ninit = ball(2.0, 4, 42, 3)\n\
             time.t_end = 10.0\nfit.window_start = 1.0\nfit.window_end = 10.0\n",
        )
        .unwrap();
        assert_eq!(
            cfg.g,
            SourceSpec::SeededRandom { seed: 7, norm: 0.5 }
        );
        assert_eq!(
            cfg.init,
            InitSpec::Ball {
                radius: 2.0,
                count: 4,
                seed: 42,
                mode_cutoff: 3
            }
        );
        assert_eq!(cfg.seeds(), vec![7, 42]);
    }

    #[test]
    fn experiment_and_init_must_agree() {
        let err = parse_config(
            "experiment = ensemble\ndomain.dim = 1\ndomain.n_modes = 8\ninit = zero\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::ConstraintViolation { key, .. } if key == "init"));
        let err = parse_config(
            "experiment = simulate\ndomain.dim = 1\ndomain.n_modes = 8\ninit = ball(1.0, 2, 1, 2)\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::ConstraintViolation { key, .. } if key == "init"));
    }

    #[test]
    fn seed_override_rewrites_every_seed() {
        let mut cfg = parse_config(
            "experiment = ensemble\ndomain.dim = 1\ndomain.n_modes = 8\n\
             model.g = seeded_random(7, 0.5)\ninit = ball(2.0, 4, 42, 3)\n",
        )
        .unwrap();
        cfg.override_seeds(99);
        assert_eq!(cfg.seeds(), vec![99, 99]);
    }
}
