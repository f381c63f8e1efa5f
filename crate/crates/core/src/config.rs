//! Numerical tolerances shared by every module.
//!
//! All rank decisions and validity checks in the crate read their thresholds
//! from a [`Tolerances`] value; [`Tolerances::default`] is the documented
//! configuration.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max entrywise |A - A†| accepted for a Hermitian operator.
    pub hermitian: f64,
    /// Accepted deviation of a state norm from one.
    pub normalization: f64,
    /// Residual below which Gram–Schmidt drops a generator as dependent.
    pub orthonormal: f64,
    /// Frobenius residual above which an operator lies outside a span.
    pub membership: f64,
    /// Verdicts within `marginal_factor * membership` are flagged marginal.
    pub marginal_factor: f64,
    /// Trace threshold used by the positive/negative split.
    pub traceless: f64,
    /// Knill–Laflamme proportionality tolerance.
    pub knill_laflamme: f64,
    /// Feasibility tolerance for reported SDP variables.
    pub sdp_feasibility: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-12,
        normalization: 1e-12,
        orthonormal: 1e-10,
        membership: 1e-9,
        marginal_factor: 10.0,
        traceless: 1e-10,
        knill_laflamme: 1e-9,
        sdp_feasibility: 1e-8,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
