//! Global model parameters for the d-regular k-NAE-SAT ensemble.
//!
//! A problem instance has N variables of degree d and M clauses of arity k,
//! with N·d = M·k. The clause density is α = M/N = d/k, and its normalized
//! form is c = α / (2^{k−1} ln 2); the satisfiability threshold sits at
//! c ≈ 1, which is why scans are parametrized by c.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the random regular k-NAE-SAT ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Clause arity (k ≥ 2).
    pub k: usize,
    /// Variable degree (d ≥ 1).
    pub d: usize,
    /// Number of variables.
    pub n: usize,
    /// Number of clauses; always N·d/k.
    pub m: usize,
}

impl ModelParams {
    /// Build parameters, checking the half-edge count identity N·d = M·k.
    pub fn new(k: usize, d: usize, n: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameters(format!("k = {k} must be ≥ 2")));
        }
        if d < 1 {
            return Err(Error::InvalidParameters(format!("d = {d} must be ≥ 1")));
        }
        if n < 1 {
            return Err(Error::InvalidParameters(format!("N = {n} must be ≥ 1")));
        }
        if (n * d) % k != 0 {
            return Err(Error::InvalidParameters(format!(
                "N·d = {} is not divisible by k = {k}; clause count would be fractional",
                n * d
            )));
        }
        Ok(ModelParams {
            k,
            d,
            n,
            m: n * d / k,
        })
    }

    /// Build parameters for analytic work from (k, c): the degree is the
    /// nearest integer to α·k with α = c·2^{k−1}ln2, and N is set to the
    /// minimal valid value k (the analytic formulas never look at N).
    pub fn from_k_c(k: usize, c: f64) -> Result<Self> {
        let d = degree_from_alpha(k, alpha_from_c(k, c));
        ModelParams::new(k, d, k)
    }

    /// Clause density α = d/k.
    pub fn alpha(&self) -> f64 {
        self.d as f64 / self.k as f64
    }

    /// Normalized density c = α / (2^{k−1} ln 2).
    pub fn c(&self) -> f64 {
        normalized_density(self.k, self.alpha())
    }

    /// Full neighborhood size D = d(k−1): edges at distance two from an edge
    /// through its clause and variable sides combined.
    pub fn big_d(&self) -> usize {
        self.d * (self.k - 1)
    }

    /// Branching factor Đ = (d−1)(k−1) of the bipartite tree (the number of
    /// grand-children edges in the two-step recursion).
    pub fn branch(&self) -> usize {
        (self.d - 1) * (self.k - 1)
    }
}

/// α = c · 2^{k−1} ln 2.
pub fn alpha_from_c(k: usize, c: f64) -> f64 {
    c * 2f64.powi(k as i32 - 1) * std::f64::consts::LN_2
}

/// c = α / (2^{k−1} ln 2).
pub fn normalized_density(k: usize, alpha: f64) -> f64 {
    alpha / (2f64.powi(k as i32 - 1) * std::f64::consts::LN_2)
}

/// Round α = d/k to the nearest realizable integer degree d ≥ 1.
pub fn degree_from_alpha(k: usize, alpha: f64) -> usize {
    ((alpha * k as f64).round() as usize).max(1)
}

/// Crude satisfiability-threshold stand-in α_sat ≈ 2^{k−1} ln 2 − 2, used
/// only to set scan ranges; never asserted as the true threshold.
pub fn alpha_sat_approx(k: usize) -> f64 {
    2f64.powi(k as i32 - 1) * std::f64::consts::LN_2 - 2.0
}
