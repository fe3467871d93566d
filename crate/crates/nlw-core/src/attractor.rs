//! Ensemble experiments: absorbing-set entry times, pairwise trajectory
//! contraction with decay-exponent fits, the closed-form polynomial
//! attraction-rate envelope, and Hausdorff semidistances to a reference
//! bundle of late-time snapshots.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrator::{integrate, IntegratorConfig, IntegratorError, TrajectoryRecord};
use crate::model::ModelSpec;
use crate::spectral::{Grid, State};

#[derive(Debug, Error)]
pub enum AttractorError {
    #[error("member {member} blew up: {source}")]
    MemberBlowUp {
        member: usize,
        source: IntegratorError,
    },
    #[error("rate envelope undefined: brace argument {0} <= 0 before onset")]
    Domain(f64),
}

/// Deterministically regenerable bundle of initial states from the energy
/// ball of radius R.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub spec: ModelSpec,
    pub cfg: IntegratorConfig,
    pub initial_states: Vec<State>,
    pub seed: u64,
    pub radius: f64,
}

impl Ensemble {
    pub fn new(
        spec: ModelSpec,
        cfg: IntegratorConfig,
        radius: f64,
        count: usize,
        seed: u64,
        mode_cutoff: usize,
    ) -> Self {
        let initial_states = sample_ball(spec.grid(), radius, count, seed, mode_cutoff);
        Ensemble {
            spec,
            cfg,
            initial_states,
            seed,
            radius,
        }
    }
}

/// Draw `count` states with energy norm <= R: Gaussian coefficients on the
/// modes below `mode_cutoff` in every direction, rescaled to a radius drawn
/// uniformly in [0, R]. Bit-identical for identical (seed, R, count, grid).
pub fn sample_ball(
    grid: &Grid,
    radius: f64,
    count: usize,
    seed: u64,
    mode_cutoff: usize,
) -> Vec<State> {
    assert!(radius >= 0.0 && count >= 1);
    assert!(mode_cutoff >= 1 && mode_cutoff <= grid.n_modes());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let uniform = Uniform::new_inclusive(0.0, radius).expect("radius range");
    let n = grid.n_modes();
    let in_cutoff = |i: usize| -> bool {
        let mut rem = i;
        for _ in 0..grid.dim() {
            if rem % n + 1 > mode_cutoff {
                return false;
            }
            rem /= n;
        }
        true
    };
    (0..count)
        .map(|_| {
            let mut st = State::zeros(grid);
            for i in 0..grid.coeff_len() {
                if in_cutoff(i) {
                    st.u.coeff_mut()[i] = normal.sample(&mut rng);
                    st.ut.coeff_mut()[i] = normal.sample(&mut rng);
                }
            }
            let target: f64 = uniform.sample(&mut rng);
            let norm = st.energy_norm();
            if norm > 0.0 {
                let s = target / norm;
                st.u.scale_in_place(s);
                st.ut.scale_in_place(s);
            }
            st
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairStatus {
    Fitted,
    /// E_z(0) below the floor: identical initial data.
    Degenerate,
    /// E_z fell below the floor before the fit window; excluded from fits.
    Underflow,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairDecay {
    pub members: (usize, usize),
    pub e_z: Vec<f64>,
    pub fitted_exponent: Option<f64>,
    pub status: PairStatus,
}

/// Results of an ensemble experiment. `records` keeps the per-member
/// trajectories so further diagnostics can run on them.
#[derive(Debug)]
pub struct EnsembleReport {
    pub times: Vec<f64>,
    /// First recorded time from which |xi(s)| <= rho for all later samples.
    pub absorbing_time: Vec<Option<f64>>,
    /// Sup over members of the energy norm, per recorded time.
    pub sup_norm_series: Vec<f64>,
    pub pairwise: Vec<PairDecay>,
    pub records: Vec<TrajectoryRecord>,
}

fn integrate_members(
    ens: &Ensemble,
    t_end: f64,
    snapshots: bool,
) -> Result<Vec<TrajectoryRecord>, AttractorError> {
    ens.initial_states
        .par_iter()
        .enumerate()
        .map(|(member, st)| {
            integrate(st, &ens.spec, &ens.cfg, t_end, snapshots)
                .map_err(|source| AttractorError::MemberBlowUp { member, source })
        })
        .collect()
}

fn norm_series(rec: &TrajectoryRecord) -> Vec<f64> {
    rec.energy
        .iter()
        .zip(&rec.norm_ut)
        .map(|(e, &vt)| (2.0 * e.potential_grad + vt * vt).sqrt())
        .collect()
}

/// Integrate every member to the horizon and report per-member entry-and-stay
/// times into the ball of radius `rho`, plus the ensemble sup-norm series.
pub fn absorbing_experiment(
    ens: &Ensemble,
    rho: f64,
    t_end: f64,
) -> Result<EnsembleReport, AttractorError> {
    assert!(rho > 0.0);
    let records = integrate_members(ens, t_end, false)?;
    let times = records[0].times.clone();
    let norms: Vec<Vec<f64>> = records.iter().map(norm_series).collect();
    let absorbing_time = norms
        .iter()
        .map(|series| {
            // last sample violating rho determines the entry-and-stay time
            match series.iter().rposition(|&v| v > rho) {
                None => Some(0.0),
                Some(i) if i + 1 < series.len() => Some(times[i + 1]),
                Some(_) => None,
            }
        })
        .collect();
    let sup_norm_series = (0..times.len())
        .map(|i| norms.iter().map(|s| s[i]).fold(0.0f64, f64::max))
        .collect();
    Ok(EnsembleReport {
        times,
        absorbing_time,
        sup_norm_series,
        pairwise: Vec::new(),
        records,
    })
}

/// Least-squares slope of log(E) against log(t) over the window samples.
fn fit_loglog(times: &[f64], values: &[f64], window: (f64, f64)) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= window.0 && t <= window.1 && v > 0.0)
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 10 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    (det.abs() > 0.0).then(|| (n * sxy - sx * sy) / det)
}

const EZ_FLOOR: f64 = 1e-12;

/// Pairwise squared energy distances E_z(t) with log-log tail fits over
/// `fit_window`. Pairs that reach the floor before the window are excluded
/// and reported as such.
pub fn pairwise_decay(
    ens: &Ensemble,
    t_end: f64,
    fit_window: (f64, f64),
) -> Result<EnsembleReport, AttractorError> {
    assert!(ens.initial_states.len() >= 2, "need at least 2 members");
    assert!(fit_window.0 > 0.0 && fit_window.1 <= t_end && fit_window.0 < fit_window.1);
    let records = integrate_members(ens, t_end, true)?;
    let times = records[0].times.clone();
    let mut pairwise = Vec::new();
    for i in 0..records.len() {
        for j in i + 1..records.len() {
            let (sa, sb) = (
                records[i].snapshots().unwrap(),
                records[j].snapshots().unwrap(),
            );
            let e_z: Vec<f64> = sa
                .iter()
                .zip(sb)
                .map(|(a, b)| 0.5 * a.sub(b).energy_norm().powi(2))
                .collect();
            let status = if e_z[0] < EZ_FLOOR {
                PairStatus::Degenerate
            } else {
                let floored_before_window = times
                    .iter()
                    .zip(&e_z)
                    .any(|(&t, &e)| t < fit_window.1 && t >= fit_window.0 && e < EZ_FLOOR);
                if floored_before_window {
                    PairStatus::Underflow
                } else {
                    PairStatus::Fitted
                }
            };
            let fitted_exponent = (status == PairStatus::Fitted)
                .then(|| fit_loglog(&times, &e_z, fit_window))
                .flatten();
            pairwise.push(PairDecay {
                members: (i, j),
                e_z,
                fitted_exponent,
                status,
            });
        }
    }
    let norms: Vec<Vec<f64>> = records.iter().map(norm_series).collect();
    let sup_norm_series = (0..times.len())
        .map(|i| norms.iter().map(|s| s[i]).fold(0.0f64, f64::max))
        .collect();
    Ok(EnsembleReport {
        times,
        absorbing_time: vec![None; records.len()],
        sup_norm_series,
        pairwise,
        records,
    })
}

/// Closed-form polynomial attraction-rate envelope
/// {alpha0^(-p) + (p k C_p / 2^(p+2)) (t - t0 - t_b - 1)}^(-1/p).
pub fn rate_envelope(
    t: f64,
    p: f64,
    k: f64,
    c_p: f64,
    alpha0: f64,
    t0: f64,
    t_b: f64,
) -> Result<f64, AttractorError> {
    let slope = p * k * c_p / 2f64.powf(p + 2.0);
    let elapsed = t - t0 - t_b - 1.0;
    if slope * elapsed == 0.0 && alpha0 > 0.0 {
        // onset boundary: the brace reduces to alpha0^(-p) exactly
        return Ok(alpha0);
    }
    let brace = alpha0.powf(-p) + slope * elapsed;
    if brace <= 0.0 {
        return Err(AttractorError::Domain(brace));
    }
    Ok(brace.powf(-1.0 / p))
}

/// Hausdorff semidistance series of the evolved ensemble against a fixed
/// reference bundle: sup over members of inf over bundle of |xi(t) - eta|.
pub fn semidistance_series(
    ens: &Ensemble,
    reference_bundle: &[State],
    t_end: f64,
) -> Result<(Vec<f64>, Vec<f64>), AttractorError> {
    assert!(!reference_bundle.is_empty(), "reference bundle is empty");
    let records = integrate_members(ens, t_end, true)?;
    let times = records[0].times.clone();
    let series = (0..times.len())
        .map(|i| {
            records
                .iter()
                .map(|rec| {
                    let st = &rec.snapshots().unwrap()[i];
                    reference_bundle
                        .iter()
                        .map(|eta| st.sub(eta).energy_norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0f64, f64::max)
        })
        .collect();
    Ok((times, series))
}
