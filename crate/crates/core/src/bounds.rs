//! Approximation guarantees for the resilient selection in terms of the
//! matroid ranks and the curvature of the objective.
//!
//! The rank factor is `h(α, β) = max(1/(1+β), 1/(α−β))`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Below this curvature `(1 − e^{−κ})/κ` is evaluated by its Taylor series.
const SERIES_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub alpha: usize,
    pub beta: usize,
    pub kappa: Option<f64>,
    pub c_total: Option<f64>,
}

/// All applicable bounds for a set of inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub h: f64,
    pub submodular_uniform: Option<f64>,
    pub submodular_matroid: Option<f64>,
    pub monotone: Option<f64>,
}

impl BoundInputs {
    pub fn report(&self) -> Result<BoundReport> {
        Ok(BoundReport {
            h: h(self.alpha, self.beta)?,
            submodular_uniform: self
                .kappa
                .map(|k| bound_submodular_uniform(k, self.alpha, self.beta))
                .transpose()?,
            submodular_matroid: self
                .kappa
                .map(|k| bound_submodular_matroid(k, self.alpha, self.beta))
                .transpose()?,
            monotone: self.c_total.map(bound_monotone).transpose()?,
        })
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Input(format!("{what} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// Rank factor; zero once the removal rank reaches the selection rank.
pub fn h(alpha: usize, beta: usize) -> Result<f64> {
    if alpha < 1 {
        return Err(Error::Input("alpha must be at least 1".into()));
    }
    if beta >= alpha {
        return Ok(0.0);
    }
    Ok((1.0 / (1.0 + beta as f64)).max(1.0 / (alpha - beta) as f64))
}

/// `(1 − e^{−κ})/κ`, continuous at `κ = 0`.
pub fn greedy_factor(kappa: f64) -> f64 {
    if kappa < SERIES_CUTOFF {
        // 1 − κ/2 + κ²/6 − κ³/24
        1.0 - kappa / 2.0 + kappa * kappa / 6.0 - kappa * kappa * kappa / 24.0
    } else {
        -(-kappa).exp_m1() / kappa
    }
}

/// Guarantee for monotone submodular `f` under a uniform selection matroid.
pub fn bound_submodular_uniform(kappa: f64, alpha: usize, beta: usize) -> Result<f64> {
    check_unit(kappa, "kappa")?;
    Ok((1.0 - kappa).max(h(alpha, beta)?) * greedy_factor(kappa))
}

/// Guarantee for monotone submodular `f` under any selection matroid.
pub fn bound_submodular_matroid(kappa: f64, alpha: usize, beta: usize) -> Result<f64> {
    check_unit(kappa, "kappa")?;
    Ok((1.0 - kappa).max(h(alpha, beta)?) / (1.0 + kappa))
}

/// Guarantee `(1 − c)³` for merely monotone `f` with total curvature `c`.
pub fn bound_monotone(c_total: f64) -> Result<f64> {
    check_unit(c_total, "total curvature")?;
    Ok((1.0 - c_total).powi(3))
}
