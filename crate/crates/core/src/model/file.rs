//! JSON problem files.
//!
//! ```json
//! {"label": "...",
//!  "a":   {"kind": "sin_affine", "c0": 1, "c1": 0.333, "omega": 1, "phase": 0},
//!  "r":   {"kind": "abs_cos", "q": 1},
//!  "phi": {"kind": "constant", "value": 5}}
//! ```
//!
//! Unknown keys are rejected at every level.

use super::{
    CoefficientFn, CoefficientKind, DelayFn, DelayKind, HistoryFn, HistoryKind, ProblemSpec,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub label: String,
    pub a: CoefficientSpec,
    pub r: DelaySpec,
    pub phi: HistorySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    SinAffine {
        c0: f64,
        c1: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    Table {
        points: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    Constant { value: f64, q: f64 },
    AbsCos { q: f64 },
    Table { points: Vec<[f64; 2]>, q: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistorySpec {
    Constant { value: f64 },
    Poly { coeffs: Vec<f64> },
    Table { points: Vec<[f64; 2]> },
}

fn pairs(points: &[[f64; 2]]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p[0], p[1])).collect()
}

fn arrays(points: &[(f64, f64)]) -> Vec<[f64; 2]> {
    points.iter().map(|&(t, v)| [t, v]).collect()
}

impl TryFrom<ProblemFile> for ProblemSpec {
    type Error = Error;

    fn try_from(f: ProblemFile) -> Result<Self> {
        let (a, bound) = match f.a {
            CoefficientSpec::Constant { value, bound } => (CoefficientFn::constant(value)?, bound),
            CoefficientSpec::SinAffine {
                c0,
                c1,
                omega,
                phase,
                bound,
            } => (CoefficientFn::sin_affine(c0, c1, omega, phase)?, bound),
            CoefficientSpec::Table { points, bound } => {
                (CoefficientFn::table(pairs(&points))?, bound)
            }
        };
        let a = match bound {
            Some(b) => a.with_bound(b)?,
            None => a,
        };
        let r = match f.r {
            DelaySpec::Constant { value, q } => DelayFn::constant(value, q)?,
            DelaySpec::AbsCos { q } => DelayFn::abs_cos(q)?,
            DelaySpec::Table { points, q } => DelayFn::table(pairs(&points), q)?,
        };
        let q = r.q();
        let phi = match f.phi {
            HistorySpec::Constant { value } => HistoryFn::constant(value, q)?,
            HistorySpec::Poly { coeffs } => HistoryFn::poly(coeffs, q)?,
            HistorySpec::Table { points } => HistoryFn::table(pairs(&points))?,
        };
        ProblemSpec::new(f.label, a, r, phi)
    }
}

impl From<&ProblemSpec> for ProblemFile {
    fn from(p: &ProblemSpec) -> Self {
        let bound = p.a.declared_bound();
        let a = match p.a.kind() {
            CoefficientKind::Constant(c) => CoefficientSpec::Constant { value: *c, bound },
            CoefficientKind::SinAffine {
                c0,
                c1,
                omega,
                phase,
            } => CoefficientSpec::SinAffine {
                c0: *c0,
                c1: *c1,
                omega: *omega,
                phase: *phase,
                bound,
            },
            CoefficientKind::Table(s) => CoefficientSpec::Table {
                points: arrays(s.points()),
                bound,
            },
        };
        let q = p.r.q();
        let r = match p.r.kind() {
            DelayKind::Constant(v) => DelaySpec::Constant { value: *v, q },
            DelayKind::AbsCos => DelaySpec::AbsCos { q },
            DelayKind::Table(s) => DelaySpec::Table {
                points: arrays(s.points()),
                q,
            },
        };
        let phi = match p.phi.kind() {
            HistoryKind::Constant(v) => HistorySpec::Constant { value: *v },
            HistoryKind::Poly(c) => HistorySpec::Poly { coeffs: c.clone() },
            HistoryKind::Table(s) => HistorySpec::Table {
                points: arrays(s.points()),
            },
        };
        ProblemFile {
            label: p.label.clone(),
            a,
            r,
            phi,
        }
    }
}
