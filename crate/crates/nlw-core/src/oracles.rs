//! Standalone finite-dimensional verifiers for the functional inequalities
//! the analysis rests on, independent of any PDE run: the monotone-operator
//! inequality for x -> |x|^(p-2) x, the small-data smallness lemma, and the
//! spatial interpolation inequality between Lebesgue norms.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::spectral::SpectralField;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("the lemma assumes |x||y| != 0 for exponents in (1,2)")]
    LemmaDomain,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Evaluate the monotone-operator pairing for one pair:
/// lhs = <|x|^(p-2) x - |y|^(p-2) y, x - y> and the ratio against the
/// lemma's denominator (|x-y|^p for p >= 2, |x-y|^2/(|x|+|y|)^(2-p) below).
/// Equal inputs yield (0, 0).
pub fn monotone_pair(x: &[f64], y: &[f64], exponent: f64) -> Result<(f64, f64), OracleError> {
    assert!(exponent > 1.0, "lemma exponent must be > 1");
    assert_eq!(x.len(), y.len());
    if x == y {
        return Ok((0.0, 0.0));
    }
    let nx = norm(x);
    let ny = norm(y);
    if exponent < 2.0 && nx * ny == 0.0 {
        return Err(OracleError::LemmaDomain);
    }
    let fx = if nx == 0.0 { 0.0 } else { nx.powf(exponent - 2.0) };
    let fy = if ny == 0.0 { 0.0 } else { ny.powf(exponent - 2.0) };
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let lhs = x
        .iter()
        .zip(y)
        .zip(&diff)
        .map(|((a, b), d)| (fx * a - fy * b) * d)
        .sum::<f64>();
    let nd = norm(&diff);
    let denom = if exponent >= 2.0 {
        nd.powf(exponent)
    } else {
        nd * nd / (nx + ny).powf(2.0 - exponent)
    };
    Ok((lhs, lhs / denom))
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub exponent: f64,
    pub dim: usize,
    pub n_samples: usize,
    pub min_ratio: f64,
    pub violations: usize,
}

/// Sample standard-normal pairs and record the empirical infimum of the
/// monotonicity ratio. Deterministic for a fixed seed.
pub fn estimate_constant(
    dim: usize,
    exponent: f64,
    n_samples: usize,
    seed: u64,
) -> MonotonicityReport {
    assert!(n_samples >= 1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut min_ratio = f64::INFINITY;
    let mut violations = 0;
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    for _ in 0..n_samples {
        for v in &mut x {
            *v = normal.sample(&mut rng);
        }
        for v in &mut y {
            *v = normal.sample(&mut rng);
        }
        let (lhs, ratio) = match monotone_pair(&x, &y, exponent) {
            Ok(r) => r,
            Err(OracleError::LemmaDomain) => continue,
        };
        if x == y {
            continue;
        }
        if lhs < 0.0 {
            violations += 1;
        }
        min_ratio = min_ratio.min(ratio);
    }
    MonotonicityReport {
        exponent,
        dim,
        n_samples,
        min_ratio,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SmallDataVerdict {
    Holds,
    /// y(s) > C0 y(s)^sigma + eps at this sample.
    HypothesisViolated { index: usize },
    /// eps >= (1/2)(1/(2 C0))^(1/(sigma-1)).
    SmallnessViolated,
    /// Hypothesis and smallness hold but y(s) > 2 eps: a sampling-continuity
    /// artifact that must surface, never silently pass.
    ConclusionViolated { index: usize },
}

/// Samplewise check of the small-data lemma: y(a) = 0 and
/// y <= C0 y^sigma + eps with eps below the smallness threshold imply y <= 2 eps.
pub fn small_data_lemma(samples: &[f64], sigma: f64, c0: f64, eps: f64) -> SmallDataVerdict {
    assert!(sigma > 1.0 && c0 > 0.0 && eps > 0.0);
    let tol = 1e-12;
    for (i, &y) in samples.iter().enumerate() {
        if y > c0 * y.powf(sigma) + eps + tol {
            return SmallDataVerdict::HypothesisViolated { index: i };
        }
    }
    if eps >= 0.5 * (0.5 / c0).powf(1.0 / (sigma - 1.0)) {
        return SmallDataVerdict::SmallnessViolated;
    }
    for (i, &y) in samples.iter().enumerate() {
        if y > 2.0 * eps + tol {
            return SmallDataVerdict::ConclusionViolated { index: i };
        }
    }
    SmallDataVerdict::Holds
}

/// Fixed-point iterates y_{k+1} = C0 y_k^sigma + eps from y_0 = 0: the
/// minimal solution branch of y = C0 y^sigma + eps, sampled as a trace.
pub fn minimal_branch(c0: f64, sigma: f64, eps: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut y = 0.0f64;
    for _ in 0..n {
        out.push(y);
        y = c0 * y.powf(sigma) + eps;
    }
    out
}

/// Slack of the spatial interpolation inequality
/// |u|_{L10} <= |u|_{L12}^(4/5) |u|_{L6}^(1/5): returns
/// |u|_{L12}^(4/5) |u|_{L6}^(1/5) - |u|_{L10}, nonnegative up to quadrature error.
pub fn interpolation_check(u: &SpectralField) -> f64 {
    let l12 = u.lq_norm(12.0);
    let l6 = u.lq_norm(6.0);
    let l10 = u.lq_norm(10.0);
    l12.powf(0.8) * l6.powf(0.2) - l10
}
