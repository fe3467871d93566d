//! Experiment dispatch and deterministic persistence: every data file is
//! produced in memory, written serially, and checksummed into the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use nlw_core::attractor::{absorbing_experiment, pairwise_decay, Ensemble, PairDecay};
use nlw_core::diagnostics::{bootstrap_check, fit_bootstrap, split_vw, strichartz_series};
use nlw_core::integrator::{integrate, IntegratorConfig, TrajectoryRecord};
use nlw_core::model::{Damping, ModelSpec, Nonlinearity};
use nlw_core::oracles::{
    estimate_constant, interpolation_check, minimal_branch, small_data_lemma, MonotonicityReport,
    SmallDataVerdict,
};
use nlw_core::spectral::{Grid, SpectralField, State};

use crate::config::{Experiment, InitSpec, RunConfig, SourceSpec};
use crate::manifest::{sha256_hex, RunManifest};
use crate::snapshot;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

type Files = Vec<(String, Vec<u8>)>;

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true)
}

/// Execute the configured experiment and persist data files plus the
/// manifest under `cfg.output_dir`. A numerical failure is still recorded
/// in the manifest before being propagated.
pub fn run(cfg: &RunConfig, raw_config: &str, workers: Option<usize>) -> Result<PathBuf, RunError> {
    let started_at = now();
    let computed = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| RunError::Io(std::io::Error::other(e)))?
            .install(|| dispatch(cfg)),
        None => dispatch(cfg),
    };

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let mut manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.experiment.name().to_string(),
        started_at,
        finished_at: String::new(),
        seeds: cfg.seeds(),
        config: raw_config.to_string(),
        files: BTreeMap::new(),
        error: None,
    };
    let outcome = match computed {
        Ok(files) => {
            for (name, bytes) in &files {
                fs::write(dir.join(name), bytes)?;
                manifest.files.insert(name.clone(), sha256_hex(bytes));
            }
            Ok(())
        }
        Err(e) => {
            manifest.error = Some(e.to_string());
            Err(e)
        }
    };
    manifest.finished_at = now();
    let path = dir.join("manifest.json");
    fs::write(&path, json(&manifest))?;
    outcome.map(|()| path)
}

fn dispatch(cfg: &RunConfig) -> Result<Files, RunError> {
    match cfg.experiment {
        Experiment::Simulate => simulate(cfg),
        Experiment::Ensemble => ensemble(cfg),
        Experiment::DecayFit => decay_fit(cfg),
        Experiment::CheckInequalities => check_inequalities(cfg),
        Experiment::Strichartz => strichartz(cfg),
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

/// Gaussian coefficients rescaled to the requested L2 norm; bit-identical
/// for identical (grid, seed, norm).
fn seeded_field(grid: &Grid, seed: u64, norm: f64) -> SpectralField {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let coeff: Vec<f64> = (0..grid.coeff_len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let mut f = SpectralField::from_coeff(grid, coeff);
    let l2 = f.l2_norm();
    if l2 > 0.0 {
        f.scale_in_place(norm / l2);
    }
    f
}

fn build_grid(cfg: &RunConfig) -> Result<Grid, RunError> {
    Grid::new(cfg.dim, cfg.n_modes, cfg.n_quad).map_err(numerical)
}

fn build_spec(cfg: &RunConfig) -> Result<ModelSpec, RunError> {
    let grid = build_grid(cfg)?;
    let g = match &cfg.g {
        SourceSpec::Zero => SpectralField::zeros(&grid),
        SourceSpec::SingleMode { index, amplitude } => {
            SpectralField::single_mode(&grid, &vec![*index; cfg.dim], *amplitude)
        }
        SourceSpec::SeededRandom { seed, norm } => seeded_field(&grid, *seed, *norm),
    };
    Ok(ModelSpec::new(
        Nonlinearity::new(cfg.f_a, cfg.f_b, cfg.f_q),
        Damping::new(cfg.k, cfg.p),
        g,
    ))
}

fn single_state(cfg: &RunConfig, spec: &ModelSpec) -> State {
    match &cfg.init {
        InitSpec::Zero => State::zeros(spec.grid()),
        InitSpec::SingleMode { index, a, adot } => {
            let kappa = vec![*index; cfg.dim];
            State {
                u: SpectralField::single_mode(spec.grid(), &kappa, *a),
                ut: SpectralField::single_mode(spec.grid(), &kappa, *adot),
            }
        }
        // parse_config rejects ball init for single-trajectory experiments
        InitSpec::Ball { .. } => unreachable!("validated at parse time"),
    }
}

fn build_ensemble(cfg: &RunConfig) -> Result<Ensemble, RunError> {
    let spec = build_spec(cfg)?;
    let icfg = IntegratorConfig::strang(cfg.dt, cfg.record_every);
    let InitSpec::Ball {
        radius,
        count,
        seed,
        mode_cutoff,
    } = cfg.init
    else {
        unreachable!("validated at parse time")
    };
    Ok(Ensemble::new(spec, icfg, radius, count, seed, mode_cutoff))
}

/// Columns fixed; 17 significant digits round-trip binary64 exactly.
fn series_csv(rec: &TrajectoryRecord) -> String {
    let mut out = String::from(
        "t, E_total, E_kin, E_grad, E_f, E_src, norm_ut, l12, l12k2, dissipation_cum\n",
    );
    for i in 0..rec.len() {
        let e = rec.energy[i];
        let row = [
            rec.times[i],
            e.total,
            e.kinetic,
            e.potential_grad,
            e.potential_f,
            e.source,
            rec.norm_ut[i],
            rec.l12[i],
            rec.l12k2[i],
            rec.diss_cum[i],
        ];
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            write!(out, "{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn simulate(cfg: &RunConfig) -> Result<Files, RunError> {
    let spec = build_spec(cfg)?;
    let init = single_state(cfg, &spec);
    let icfg = IntegratorConfig::strang(cfg.dt, cfg.record_every);
    let rec = integrate(&init, &spec, &icfg, cfg.t_end, true).map_err(numerical)?;
    let last = rec.snapshots().unwrap().last().unwrap();

    #[derive(Serialize)]
    struct Report {
        energy_initial: f64,
        energy_final: f64,
        dissipation_total: f64,
        /// E(T) - E(0) + cumulative dissipation; zero up to splitting error.
        identity_residual: f64,
    }
    let (e0, et) = (rec.energy[0].total, rec.energy.last().unwrap().total);
    let diss = *rec.diss_cum.last().unwrap();
    let report = Report {
        energy_initial: e0,
        energy_final: et,
        dissipation_total: diss,
        identity_residual: et - e0 + diss,
    };
    Ok(vec![
        ("series.csv".into(), series_csv(&rec).into_bytes()),
        (
            "final_state.nlws".into(),
            snapshot::encode(last, rec.end_time()),
        ),
        ("report.json".into(), json(&report)),
    ])
}

fn ensemble(cfg: &RunConfig) -> Result<Files, RunError> {
    let ens = build_ensemble(cfg)?;
    let rep = absorbing_experiment(&ens, cfg.rho, cfg.t_end).map_err(numerical)?;

    #[derive(Serialize)]
    struct Report {
        radius: f64,
        rho: f64,
        times: Vec<f64>,
        /// Per member: first recorded time from which the trajectory stays
        /// inside the rho-ball, None if it never does.
        absorbing_time: Vec<Option<f64>>,
        sup_norm_series: Vec<f64>,
    }
    let mut files: Files = rep
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| (format!("member_{i:02}.csv"), series_csv(rec).into_bytes()))
        .collect();
    files.push((
        "report.json".into(),
        json(&Report {
            radius: ens.radius,
            rho: cfg.rho,
            times: rep.times,
            absorbing_time: rep.absorbing_time,
            sup_norm_series: rep.sup_norm_series,
        }),
    ));
    Ok(files)
}

fn decay_fit(cfg: &RunConfig) -> Result<Files, RunError> {
    let ens = build_ensemble(cfg)?;
    let rep = pairwise_decay(&ens, cfg.t_end, cfg.fit_window).map_err(numerical)?;

    #[derive(Serialize)]
    struct Report {
        /// Pure-damping tail prediction; only meaningful when f = 0, g = 0.
        reference_exponent: f64,
        fit_window: (f64, f64),
        times: Vec<f64>,
        pairs: Vec<PairDecay>,
    }
    let mut files: Files = rep
        .records
        .iter()
        .enumerate()
        .map(|(i, rec)| (format!("member_{i:02}.csv"), series_csv(rec).into_bytes()))
        .collect();
    files.push((
        "report.json".into(),
        json(&Report {
            reference_exponent: -2.0 / cfg.p,
            fit_window: cfg.fit_window,
            times: rep.times,
            pairs: rep.pairwise,
        }),
    ));
    Ok(files)
}

fn check_inequalities(cfg: &RunConfig) -> Result<Files, RunError> {
    let (samples, seed) = (cfg.oracle_samples, cfg.oracle_seed);

    let mut monotonicity = Vec::new();
    for &dim in &[1usize, 8, 64] {
        for &exponent in &[2.0, cfg.p + 2.0] {
            monotonicity.push(estimate_constant(dim, exponent, samples, seed));
        }
    }

    let grid = build_grid(cfg)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..samples {
        let coeff: Vec<f64> = (0..grid.coeff_len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        min_slack = min_slack.min(interpolation_check(&SpectralField::from_coeff(&grid, coeff)));
    }

    // fixed-point branch of y = C0 y^sigma + eps under the smallness clause
    let (c0, sigma, eps) = (1.0, 4.0, 0.2);
    let branch = minimal_branch(c0, sigma, eps, 64);
    let verdict = small_data_lemma(&branch, sigma, c0, eps);

    #[derive(Serialize)]
    struct Interpolation {
        n_fields: usize,
        min_slack: f64,
    }
    #[derive(Serialize)]
    struct SmallData {
        c0: f64,
        sigma: f64,
        eps: f64,
        branch_limit: f64,
        verdict: SmallDataVerdict,
    }
    #[derive(Serialize)]
    struct Report {
        monotonicity: Vec<MonotonicityReport>,
        interpolation: Interpolation,
        small_data: SmallData,
    }
    let report = Report {
        monotonicity,
        interpolation: Interpolation {
            n_fields: samples,
            min_slack,
        },
        small_data: SmallData {
            c0,
            sigma,
            eps,
            branch_limit: *branch.last().unwrap(),
            verdict,
        },
    };
    Ok(vec![("report.json".into(), json(&report))])
}

fn strichartz(cfg: &RunConfig) -> Result<Files, RunError> {
    let spec = build_spec(cfg)?;
    let init = single_state(cfg, &spec);
    let icfg = IntegratorConfig::strang(cfg.dt, cfg.record_every);
    let rec = integrate(&init, &spec, &icfg, cfg.t_end, true).map_err(numerical)?;
    let (v_rec, w_rec) = split_vw(&rec).map_err(numerical)?;
    let series = strichartz_series(&w_rec);
    let (eps, c0) = fit_bootstrap(&series);
    let verdict = bootstrap_check(&series, eps, c0);

    #[derive(Serialize)]
    struct Report {
        eps: f64,
        c0: f64,
        verdict: SmallDataVerdict,
        times: Vec<f64>,
        /// Cumulative Strichartz norm of the remainder w = u - v.
        y_w: Vec<f64>,
    }
    Ok(vec![
        ("series.csv".into(), series_csv(&rec).into_bytes()),
        ("v_series.csv".into(), series_csv(&v_rec).into_bytes()),
        ("w_series.csv".into(), series_csv(&w_rec).into_bytes()),
        (
            "report.json".into(),
            json(&Report {
                eps,
                c0,
                verdict,
                times: series.times,
                y_w: series.y,
            }),
        ),
    ])
}
