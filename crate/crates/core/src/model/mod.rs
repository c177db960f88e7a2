//! Problem description for `x'(t) = -a(t) x(t - r(t))`, `x = φ` on `[-q, 0]`.
//!
//! Coefficients, delays and histories are restricted to closed families so that
//! integrals, sup-norms, bounds and moduli of continuity can be computed exactly.

mod coefficient;
mod delay;
mod file;
mod history;
mod samples;

pub use coefficient::{CoefficientFn, CoefficientKind};
pub use delay::{spot_grid, DelayFn, DelayKind};
pub use file::{CoefficientSpec, DelaySpec, HistorySpec, ProblemFile};
pub use history::{HistoryFn, HistoryKind};
pub use samples::Samples;

use crate::error::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub label: String,
    pub a: CoefficientFn,
    pub r: DelayFn,
    pub phi: HistoryFn,
}

impl ProblemSpec {
    pub fn new(
        label: impl Into<String>,
        a: CoefficientFn,
        r: DelayFn,
        phi: HistoryFn,
    ) -> Result<Self> {
        let q = r.q();
        if (phi.q() - q).abs() > 1e-12 * q.max(1.0) {
            return Err(Error::InvalidProblem(format!(
                "history domain [-{}, 0] does not match delay bound q = {q}",
                phi.q()
            )));
        }
        if let Some(a0) = a.declared_bound() {
            for t in spot_grid(q) {
                let v = a.value(t).abs();
                if v > a0 + 1e-12 {
                    return Err(Error::InvalidProblem(format!(
                        "|a({t})| = {v} exceeds declared bound {a0}"
                    )));
                }
            }
        }
        Ok(Self {
            label: label.into(),
            a,
            r,
            phi,
        })
    }

    pub fn q(&self) -> f64 {
        self.r.q()
    }

    /// Same equation with a different initial function.
    pub fn with_history(&self, phi: HistoryFn) -> Result<Self> {
        Self::new(self.label.clone(), self.a.clone(), self.r.clone(), phi)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(s)?;
        file.try_into()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProblemFile::from(self))?)
    }
}

/// `a(t) = 1 + sin(t)/3`, `r(t) = |cos t|`, `φ ≡ 5`: a non-autonomous,
/// variable-delay equation whose zero solution is uniformly asymptotically stable.
pub fn oscillating_problem(phi_value: f64) -> ProblemSpec {
    ProblemSpec::new(
        "x' = -(1 + sin t / 3) x(t - |cos t|)",
        CoefficientFn::sin_affine(1.0, 1.0 / 3.0, 1.0, 0.0).expect("finite parameters"),
        DelayFn::abs_cos(1.0).expect("|cos t| lies in [0, 1]"),
        HistoryFn::constant(phi_value, 1.0).expect("finite value"),
    )
    .expect("consistent problem")
}
