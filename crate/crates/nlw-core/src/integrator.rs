//! Operator-splitting time stepping for the Galerkin system: the free wave
//! group and the nonlocal damping sub-flow are advanced exactly, the
//! nonlinearity and source enter through a velocity kick with frozen u.

use thiserror::Error;

use crate::model::{energy, nonlinear_term, EnergyReport, ModelError, ModelSpec};
use crate::spectral::{SpectralField, State};

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("discrete blow-up at t = {t}")]
    BlowUp { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Strang,
    Lie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn new(dt: f64, scheme: Scheme, record_every: usize) -> Self {
        assert!(dt > 0.0, "dt must be > 0");
        assert!(record_every >= 1, "record_every must be >= 1");
        IntegratorConfig {
            dt,
            scheme,
            record_every,
        }
    }

    pub fn strang(dt: f64, record_every: usize) -> Self {
        Self::new(dt, Scheme::Strang, record_every)
    }
}

/// Per-step energy bookkeeping; `residual` is the defect of the discrete
/// energy identity E_after - E_before + int k|u_t|^(p+2).
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub t: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub dissipation_increment: f64,
    pub residual: f64,
}

/// Exact flow of the free wave group over `tau`: per mode a rotation of
/// (omega*a, adot) by the angle omega*tau. Negative `tau` runs time backwards
/// (used by the reversibility tests).
pub fn linear_flow(state: &State, tau: f64) -> State {
    if tau == 0.0 {
        return state.clone();
    }
    let grid = state.grid().clone();
    let mut u = state.u.clone();
    let mut ut = state.ut.clone();
    {
        let (uc, vc) = (u.coeff_mut(), ut.coeff_mut());
        for (i, l) in grid.lambdas().iter().enumerate() {
            let omega = l.sqrt();
            let theta = omega * tau;
            let (s, c) = theta.sin_cos();
            // rotation in (omega*a, adot); per-mode energy defect is the
            // rounding defect of (c, s), about one ulp per application
            let b = omega * uc[i];
            let adot = vc[i];
            uc[i] = (b * c + adot * s) / omega;
            vc[i] = -b * s + adot * c;
        }
    }
    State { u, ut }
}

/// Exact sub-flow of v' = -k|v|^p v over `tau`: the direction is fixed and
/// the radius follows r(tau) = r0 (1 + p k r0^p tau)^(-1/p).
pub fn damping_flow(v: &SpectralField, spec: &ModelSpec, tau: f64) -> SpectralField {
    assert!(tau >= 0.0, "damping_flow requires tau >= 0");
    let d = spec.damping;
    let r0 = v.l2_norm();
    if d.k == 0.0 || r0 == 0.0 || tau == 0.0 {
        return v.clone();
    }
    let scale = (1.0 + d.p * d.k * r0.powf(d.p) * tau).powf(-1.0 / d.p);
    v.scaled(scale)
}

/// Velocity kick u_t <- u_t + tau*(g - P_N f(u)) with u frozen.
fn kick(state: &mut State, spec: &ModelSpec, tau: f64) -> Result<(), ModelError> {
    let fu = nonlinear_term(&state.u, spec)?;
    state.ut.add_scaled(tau, &spec.g);
    state.ut.add_scaled(-tau, &fu);
    Ok(())
}

/// One step of the splitting without any energy accounting.
pub fn advance(state: &State, spec: &ModelSpec, cfg: &IntegratorConfig) -> Result<State, ModelError> {
    let dt = cfg.dt;
    match cfg.scheme {
        Scheme::Strang => {
            let mut s = linear_flow(state, 0.5 * dt);
            kick(&mut s, spec, 0.5 * dt)?;
            s.ut = damping_flow(&s.ut, spec, dt);
            kick(&mut s, spec, 0.5 * dt)?;
            Ok(linear_flow(&s, 0.5 * dt))
        }
        Scheme::Lie => {
            let mut s = linear_flow(state, dt);
            kick(&mut s, spec, dt)?;
            s.ut = damping_flow(&s.ut, spec, dt);
            Ok(s)
        }
    }
}

/// Instantaneous dissipation rate k |u_t|^(p+2).
fn dissipation_rate(state: &State, spec: &ModelSpec) -> f64 {
    let d = spec.damping;
    if d.k == 0.0 {
        return 0.0;
    }
    d.k * state.ut.l2_norm().powf(d.p + 2.0)
}

/// One step with full energy bookkeeping; `t` is the time at the start of the step.
pub fn step(
    state: &State,
    spec: &ModelSpec,
    cfg: &IntegratorConfig,
    t: f64,
) -> Result<(State, StepReport), IntegratorError> {
    let e_before = energy(state, spec).total;
    let rate_before = dissipation_rate(state, spec);
    let next = advance(state, spec, cfg).map_err(|_| IntegratorError::BlowUp { t })?;
    let e_after = energy(&next, spec).total;
    let rate_after = dissipation_rate(&next, spec);
    let dissipation_increment = 0.5 * cfg.dt * (rate_before + rate_after);
    let report = StepReport {
        t: t + cfg.dt,
        energy_before: e_before,
        energy_after: e_after,
        dissipation_increment,
        residual: e_after - e_before + dissipation_increment,
    };
    Ok((next, report))
}

/// Discrete trace of a trajectory: observable series on the recording grid,
/// optionally with full state snapshots at the recorded times.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub energy: Vec<EnergyReport>,
    pub norm_ut: Vec<f64>,
    pub l12: Vec<f64>,
    pub l12k2: Vec<f64>,
    pub diss_cum: Vec<f64>,
    pub snapshots: Option<Vec<State>>,
    pub spec: ModelSpec,
    pub cfg: IntegratorConfig,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn snapshots(&self) -> Option<&[State]> {
        self.snapshots.as_deref()
    }
}

fn observe(
    rec: &mut TrajectoryRecord,
    state: &State,
    spec: &ModelSpec,
    t: f64,
    diss_cum: f64,
    snapshots: bool,
) {
    rec.times.push(t);
    rec.energy.push(energy(state, spec));
    rec.norm_ut.push(state.ut.l2_norm());
    rec.l12.push(state.u.lq_norm(12.0));
    rec.l12k2.push(state.u.lq_norm(spec.nonlinearity.dual_exponent()));
    rec.diss_cum.push(diss_cum);
    if snapshots {
        rec.snapshots.as_mut().unwrap().push(state.clone());
    }
}

/// Advance `ceil(T/dt)` steps recording observables every `record_every`
/// steps (the final state is always recorded). The cumulative dissipation is
/// the per-step trapezoid of k|u_t|^(p+2), accumulated at every step.
pub fn integrate(
    initial: &State,
    spec: &ModelSpec,
    cfg: &IntegratorConfig,
    t_end: f64,
    snapshots: bool,
) -> Result<TrajectoryRecord, IntegratorError> {
    assert!(t_end >= 0.0, "horizon must be >= 0");
    let n_steps = (t_end / cfg.dt).ceil() as usize;
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        energy: Vec::new(),
        norm_ut: Vec::new(),
        l12: Vec::new(),
        l12k2: Vec::new(),
        diss_cum: Vec::new(),
        snapshots: snapshots.then(Vec::new),
        spec: spec.clone(),
        cfg: *cfg,
    };
    let mut state = initial.clone();
    let mut diss_cum = 0.0;
    let mut rate = dissipation_rate(&state, spec);
    observe(&mut rec, &state, spec, 0.0, diss_cum, snapshots);
    for i in 0..n_steps {
        let t = i as f64 * cfg.dt;
        state = advance(&state, spec, cfg).map_err(|_| IntegratorError::BlowUp { t })?;
        let rate_next = dissipation_rate(&state, spec);
        diss_cum += 0.5 * cfg.dt * (rate + rate_next);
        rate = rate_next;
        let done = i + 1 == n_steps;
        if (i + 1) % cfg.record_every == 0 || done {
            observe(&mut rec, &state, spec, (i + 1) as f64 * cfg.dt, diss_cum, snapshots);
        }
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Damping, Nonlinearity};
    use crate::spectral::Grid;

    fn free_spec(n: usize) -> ModelSpec {
        let grid = Grid::with_default_quad(1, n).unwrap();
        ModelSpec::new(
            Nonlinearity::zero(),
            Damping::new(0.0, 1.0),
            SpectralField::zeros(&grid),
        )
    }

    #[test]
    fn linear_flow_zero_tau_is_identity() {
        let spec = free_spec(4);
        let st = State {
            u: SpectralField::from_coeff(spec.grid(), vec![1.0, -0.5, 0.2, 0.0]),
            ut: SpectralField::from_coeff(spec.grid(), vec![0.0, 1.0, 0.0, 2.0]),
        };
        assert_eq!(linear_flow(&st, 0.0), st);
    }

    #[test]
    fn linear_flow_quarter_rotation() {
        let spec = free_spec(4);
        let st = State {
            u: SpectralField::single_mode(spec.grid(), &[1], 1.0),
            ut: SpectralField::zeros(spec.grid()),
        };
        let out = linear_flow(&st, std::f64::consts::FRAC_PI_2);
        assert!(out.u.coeff()[0].abs() < 1e-14);
        assert!((out.ut.coeff()[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_flow_conserves_energy() {
        let spec = free_spec(8);
        let st = State {
            u: SpectralField::from_coeff(spec.grid(), (1..=8).map(|k| (k as f64).cos()).collect()),
            ut: SpectralField::from_coeff(spec.grid(), (1..=8).map(|k| (k as f64).sin()).collect()),
        };
        let e0 = 0.5 * st.energy_norm().powi(2);
        let out = linear_flow(&st, 0.37);
        let e1 = 0.5 * out.energy_norm().powi(2);
        assert!((e1 - e0).abs() < 1e-13 * e0.max(1.0));
    }

    #[test]
    fn linear_flow_time_reversal() {
        let spec = free_spec(8);
        let st = State {
            u: SpectralField::from_coeff(spec.grid(), (1..=8).map(|k| 1.0 / k as f64).collect()),
            ut: SpectralField::from_coeff(spec.grid(), (1..=8).map(|k| 0.3 * k as f64).collect()),
        };
        let back = linear_flow(&linear_flow(&st, 0.83), -0.83);
        for (a, b) in st.u.coeff().iter().zip(back.u.coeff()) {
            assert!((a - b).abs() < 1e-13);
        }
        for (a, b) in st.ut.coeff().iter().zip(back.ut.coeff()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn damping_flow_zero_is_zero() {
        let grid = Grid::with_default_quad(1, 4).unwrap();
        let spec = ModelSpec::new(
            Nonlinearity::zero(),
            Damping::new(1.0, 2.0),
            SpectralField::zeros(&grid),
        );
        let v = SpectralField::zeros(&grid);
        assert_eq!(damping_flow(&v, &spec, 1.0).coeff(), v.coeff());
    }

    #[test]
    fn damping_flow_matches_closed_form() {
        let grid = Grid::with_default_quad(1, 4).unwrap();
        // k=1, p=2, r0=1, tau=1 -> r = 3^(-1/2)
        let spec = ModelSpec::new(
            Nonlinearity::zero(),
            Damping::new(1.0, 2.0),
            SpectralField::zeros(&grid),
        );
        let v = SpectralField::single_mode(&grid, &[2], 1.0);
        let out = damping_flow(&v, &spec, 1.0);
        assert!((out.l2_norm() - 3f64.powf(-0.5)).abs() < 1e-14);
        // k=1, p=1, r0=2, tau=0.5 -> r = 1
        let spec = ModelSpec::new(
            Nonlinearity::zero(),
            Damping::new(1.0, 1.0),
            SpectralField::zeros(&grid),
        );
        let v = SpectralField::single_mode(&grid, &[1], 2.0);
        let out = damping_flow(&v, &spec, 0.5);
        assert!((out.l2_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn free_step_has_tiny_residual() {
        let spec = free_spec(8);
        let cfg = IntegratorConfig::strang(0.01, 1);
        let st = State {
            u: SpectralField::from_coeff(spec.grid(), (1..=8).map(|k| 1.0 / k as f64).collect()),
            ut: SpectralField::from_coeff(spec.grid(), (1..=8).map(|k| 0.1 * k as f64).collect()),
        };
        let (_, rep) = step(&st, &spec, &cfg, 0.0).unwrap();
        assert!(rep.residual.abs() <= 1e-12 * (1.0 + rep.energy_before.abs()));
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let grid = Grid::with_default_quad(1, 8).unwrap();
        let spec = ModelSpec::new(
            Nonlinearity::new(0.0, 1.0, 3.0),
            Damping::new(1.0, 2.0),
            SpectralField::zeros(&grid),
        );
        let cfg = IntegratorConfig::strang(0.01, 10);
        let rec = integrate(&State::zeros(&grid), &spec, &cfg, 1.0, false).unwrap();
        assert!(rec.energy.iter().all(|e| e.total == 0.0));
        assert!(rec.norm_ut.iter().all(|&v| v == 0.0));
        assert!(rec.l12.iter().all(|&v| v == 0.0));
        assert!(rec.diss_cum.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_horizon_records_initial_observables_only() {
        let spec = free_spec(4);
        let cfg = IntegratorConfig::strang(0.01, 1);
        let st = State {
            u: SpectralField::single_mode(spec.grid(), &[2], 1.0),
            ut: SpectralField::zeros(spec.grid()),
        };
        let rec = integrate(&st, &spec, &cfg, 0.0, true).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.times[0], 0.0);
        assert!((rec.energy[0].total - 2.0).abs() < 1e-13);
        assert_eq!(rec.snapshots().unwrap().len(), 1);
    }

    #[test]
    fn energy_monotone_without_source() {
        let grid = Grid::with_default_quad(1, 8).unwrap();
        let spec = ModelSpec::new(
            Nonlinearity::new(0.0, 1.0, 3.0),
            Damping::new(1.0, 2.0),
            SpectralField::zeros(&grid),
        );
        let cfg = IntegratorConfig::strang(1e-3, 10);
        let st = State {
            u: SpectralField::single_mode(&grid, &[1], 1.0),
            ut: SpectralField::single_mode(&grid, &[2], 0.5),
        };
        let rec = integrate(&st, &spec, &cfg, 2.0, false).unwrap();
        for w in rec.energy.windows(2) {
            assert!(w[1].total <= w[0].total + 1e-9 * (1.0 + w[0].total.abs()));
        }
    }
}
