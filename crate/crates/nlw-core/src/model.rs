//! Ingredients of the equation u_tt - Lap u + k|u_t|^p u_t + f(u) = g:
//! the nonlinearity family, the nonlocal damping, the source, and the
//! energy functional E = 1/2 |xi|^2 + int F(u) - (g,u).

use serde::Serialize;
use thiserror::Error;

use crate::spectral::{Grid, SpectralField, State};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("nonlinear term produced a non-finite value (discrete blow-up)")]
    BlowUp,
    #[error("dissipation condition violated: a = {a} <= -lambda_1 = {neg_lambda1} with b = 0")]
    DissipationViolated { a: f64, neg_lambda1: f64 },
}

/// The two-parameter family f(s) = a*s + b*|s|^(q-1)*s with primitive
/// F(s) = a*s^2/2 + b*|s|^(q+1)/(q+1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nonlinearity {
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

impl Nonlinearity {
    pub fn new(a: f64, b: f64, q: f64) -> Self {
        assert!(b >= 0.0, "power coefficient b must be >= 0");
        assert!((1.0..5.0).contains(&q), "power exponent q must be in [1,5)");
        Nonlinearity { a, b, q }
    }

    pub fn linear(a: f64) -> Self {
        Nonlinearity { a, b: 0.0, q: 1.0 }
    }

    pub fn zero() -> Self {
        Self::linear(0.0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.a * s + self.b * s.abs().powf(self.q - 1.0) * s
    }

    pub fn primitive(&self, s: f64) -> f64 {
        0.5 * self.a * s * s + self.b * s.abs().powf(self.q + 1.0) / (self.q + 1.0)
    }

    /// Growth defect kappa = 5 - q of the growth condition |f'| <= C(1+|s|^(4-kappa)).
    pub fn kappa(&self) -> f64 {
        5.0 - self.q
    }

    /// Exponent 12/(kappa+2) of the compactness norm paired with kappa.
    pub fn dual_exponent(&self) -> f64 {
        12.0 / (self.kappa() + 2.0)
    }
}

/// Nonlocal damping D(v) = k * |v|_{L2}^p * v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Damping {
    pub k: f64,
    pub p: f64,
}

impl Damping {
    pub fn new(k: f64, p: f64) -> Self {
        assert!(k >= 0.0, "damping strength k must be >= 0");
        assert!(p > 0.0, "nonlocal exponent p must be > 0");
        Damping { k, p }
    }
}

/// Immutable problem description shared by every state of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub nonlinearity: Nonlinearity,
    pub damping: Damping,
    pub g: SpectralField,
    grid: Grid,
}

impl ModelSpec {
    pub fn new(nonlinearity: Nonlinearity, damping: Damping, g: SpectralField) -> Self {
        let grid = g.grid().clone();
        ModelSpec {
            nonlinearity,
            damping,
            g,
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Components of E(u, u_t); `total` is their exact sum as computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub potential_grad: f64,
    pub potential_f: f64,
    pub source: f64,
    pub total: f64,
}

/// Galerkin nonlinear term P_N f(u): dealiased pointwise evaluation followed
/// by truncated analysis. Non-finite values are hard errors.
pub fn nonlinear_term(u: &SpectralField, spec: &ModelSpec) -> Result<SpectralField, ModelError> {
    let f = &spec.nonlinearity;
    if f.a == 0.0 && f.b == 0.0 {
        return Ok(SpectralField::zeros(u.grid()));
    }
    let mut phys = u.to_physical();
    for v in phys.values_mut() {
        *v = f.eval(*v);
        if !v.is_finite() {
            return Err(ModelError::BlowUp);
        }
    }
    Ok(phys.to_spectral(u.grid().n_modes()))
}

/// k * |v|^p * v; maps the zero field to the zero field for every p > 0.
pub fn damping_term(v: &SpectralField, spec: &ModelSpec) -> SpectralField {
    let d = spec.damping;
    let r = v.l2_norm();
    if d.k == 0.0 || r == 0.0 {
        return SpectralField::zeros(v.grid());
    }
    v.scaled(d.k * r.powf(d.p))
}

pub fn energy(state: &State, spec: &ModelSpec) -> EnergyReport {
    let vt = state.ut.l2_norm();
    let gr = state.u.grad_norm();
    let kinetic = 0.5 * vt * vt;
    let potential_grad = 0.5 * gr * gr;
    let f = &spec.nonlinearity;
    let potential_f = if f.a == 0.0 && f.b == 0.0 {
        0.0
    } else {
        let phys = state.u.to_physical();
        let w = phys.grid().quad_weight();
        w * phys.values().iter().map(|&s| f.primitive(s)).sum::<f64>()
    };
    let source = -spec.g.dot(&state.u);
    EnergyReport {
        kinetic,
        potential_grad,
        potential_f,
        source,
        total: kinetic + potential_grad + potential_f + source,
    }
}

/// Explicit constants (c_low, C_off) with E(xi) >= c_low*|xi|^2 - C_off.
///
/// The potential is bounded below in closed form: for a >= 0 the primitive is
/// nonnegative; for a < 0 with b = 0 it is absorbed into the gradient term via
/// Poincare (requires a > -lambda_1); for a < 0 with b > 0 the pointwise
/// minimum of F is finite and contributes a volume offset. A nonzero source
/// costs half of the remaining gradient coefficient by Young's inequality.
pub fn coercivity_constants(spec: &ModelSpec) -> Result<(f64, f64), ModelError> {
    let f = spec.nonlinearity;
    let lam1 = spec.grid().lambda_min();
    if f.b == 0.0 && f.a <= -lam1 {
        return Err(ModelError::DissipationViolated {
            a: f.a,
            neg_lambda1: -lam1,
        });
    }
    let volume = std::f64::consts::PI.powi(spec.grid().dim() as i32);
    let (c_grad, offset) = if f.a >= 0.0 {
        (0.5, 0.0)
    } else if f.b == 0.0 {
        (0.5 * (1.0 + f.a / lam1), 0.0)
    } else {
        // min of a*s^2/2 + b*s^(q+1)/(q+1) over s >= 0, attained at
        // s* = (-a/b)^(1/(q-1)); the q = 1 degenerate case has b
        // acting linearly, handled by the same formula limitwise.
        let depth = if f.q > 1.0 {
            let s_star = (-f.a / f.b).powf(1.0 / (f.q - 1.0));
            -f.a * s_star * s_star * (0.5 - 1.0 / (f.q + 1.0))
        } else if f.a + f.b < 0.0 {
            // f(s) = (a+b) s for s > 0; need a + b > -lambda_1
            if f.a + f.b <= -lam1 {
                return Err(ModelError::DissipationViolated {
                    a: f.a + f.b,
                    neg_lambda1: -lam1,
                });
            }
            return coercivity_constants(&ModelSpec::new(
                Nonlinearity::linear(f.a + f.b),
                spec.damping,
                spec.g.clone(),
            ));
        } else {
            0.0
        };
        (0.5, depth * volume)
    };
    let gnorm = spec.g.l2_norm();
    if gnorm == 0.0 {
        Ok((c_grad.min(0.5), offset))
    } else {
        // |(g,u)| <= (c_grad/2)|grad u|^2 + |g|^2/(2 c_grad lambda_1)
        let c_low = (0.5 * c_grad).min(0.5);
        let c_off = offset + gnorm * gnorm / (2.0 * c_grad * lam1);
        Ok((c_low, c_off))
    }
}
