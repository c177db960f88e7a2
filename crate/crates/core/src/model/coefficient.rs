use super::samples::Samples;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    Constant(f64),
    /// `c0 + c1 * sin(omega * t + phase)`
    SinAffine {
        c0: f64,
        c1: f64,
        omega: f64,
        phase: f64,
    },
    Table(Samples),
}

/// The coefficient `a(t)` multiplying the delayed state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFn {
    kind: CoefficientKind,
    declared_bound: Option<f64>,
}

impl CoefficientFn {
    pub fn new(kind: CoefficientKind) -> Result<Self> {
        let finite = match &kind {
            CoefficientKind::Constant(c) => c.is_finite(),
            CoefficientKind::SinAffine {
                c0,
                c1,
                omega,
                phase,
            } => [c0, c1, omega, phase].iter().all(|v| v.is_finite()),
            CoefficientKind::Table(s) => s.first_t() <= 0.0,
        };
        if !finite {
            return Err(Error::InvalidProblem(
                "coefficient parameters must be finite and tables must start at t <= 0".into(),
            ));
        }
        Ok(Self {
            kind,
            declared_bound: None,
        })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(CoefficientKind::Constant(c))
    }

    pub fn sin_affine(c0: f64, c1: f64, omega: f64, phase: f64) -> Result<Self> {
        Self::new(CoefficientKind::SinAffine {
            c0,
            c1,
            omega,
            phase,
        })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(CoefficientKind::Table(Samples::new(points)?))
    }

    /// Attach a user-declared bound `a0 >= sup |a(t)|`. Checked against the
    /// problem's spot-check grid when a [`super::ProblemSpec`] is assembled.
    pub fn with_bound(mut self, a0: f64) -> Result<Self> {
        if !(a0.is_finite() && a0 >= 0.0) {
            return Err(Error::InvalidProblem(format!(
                "declared bound must be finite and non-negative, got {a0}"
            )));
        }
        self.declared_bound = Some(a0);
        Ok(self)
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn declared_bound(&self) -> Option<f64> {
        self.declared_bound
    }

    /// Unchecked evaluation; callers guarantee `t >= 0`.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match &self.kind {
            CoefficientKind::Constant(c) => *c,
            CoefficientKind::SinAffine {
                c0,
                c1,
                omega,
                phase,
            } => c0 + c1 * (omega * t + phase).sin(),
            CoefficientKind::Table(s) => s.eval(t),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "coefficient evaluated at t = {t} < 0"
            )));
        }
        Ok(self.value(t))
    }

    fn antiderivative_sin(c0: f64, c1: f64, omega: f64, phase: f64, t: f64) -> f64 {
        c0 * t - c1 / omega * (omega * t + phase).cos()
    }

    pub(crate) fn integral(&self, t1: f64, t2: f64) -> f64 {
        if t1 == t2 {
            return 0.0;
        }
        match &self.kind {
            CoefficientKind::Constant(c) => c * (t2 - t1),
            CoefficientKind::SinAffine {
                c0,
                c1,
                omega,
                phase,
            } => {
                if *omega == 0.0 {
                    (c0 + c1 * phase.sin()) * (t2 - t1)
                } else {
                    // c0*(t2-t1) kept separate from the cosine difference to avoid
                    // cancellation between two large antiderivative values
                    c0 * (t2 - t1)
                        + (Self::antiderivative_sin(0.0, *c1, *omega, *phase, t2)
                            - Self::antiderivative_sin(0.0, *c1, *omega, *phase, t1))
                }
            }
            CoefficientKind::Table(s) => s.integrate(t1, t2),
        }
    }

    /// `∫_{t1}^{t2} a(s) ds`, exact for every variant.
    pub fn integrate(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1 >= 0.0) {
            return Err(Error::Domain(format!("integration start t1 = {t1} < 0")));
        }
        if !(t2 >= t1) {
            return Err(Error::Domain(format!(
                "integration interval reversed: [{t1}, {t2}]"
            )));
        }
        Ok(self.integral(t1, t2))
    }

    /// `a0` from (A2): the declared bound if any, otherwise the exact sup of |a|.
    pub fn bound(&self) -> f64 {
        self.declared_bound.unwrap_or_else(|| self.computed_bound())
    }

    pub fn computed_bound(&self) -> f64 {
        match &self.kind {
            CoefficientKind::Constant(c) => c.abs(),
            CoefficientKind::SinAffine {
                c0,
                c1,
                omega,
                phase,
                ..
            } => {
                if *omega == 0.0 {
                    (c0 + c1 * phase.sin()).abs()
                } else {
                    c0.abs() + c1.abs()
                }
            }
            CoefficientKind::Table(s) => s.max_abs(),
        }
    }

    /// Exact infimum of `a` over `[0, ∞)`.
    pub fn infimum(&self) -> f64 {
        match &self.kind {
            CoefficientKind::Constant(c) => *c,
            CoefficientKind::SinAffine {
                c0,
                c1,
                omega,
                phase,
            } => {
                if *omega == 0.0 {
                    c0 + c1 * phase.sin()
                } else {
                    c0 - c1.abs()
                }
            }
            CoefficientKind::Table(s) => {
                // nodes at t < 0 are outside the domain; the value at 0 replaces them
                let inside = s
                    .points()
                    .iter()
                    .filter(|p| p.0 > 0.0)
                    .map(|p| p.1)
                    .fold(f64::INFINITY, f64::min);
                inside.min(s.eval(0.0))
            }
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match &self.kind {
            CoefficientKind::Constant(c) => *c == 0.0,
            CoefficientKind::SinAffine { c0, c1, .. } => *c0 == 0.0 && *c1 == 0.0,
            CoefficientKind::Table(s) => s.max_abs() == 0.0,
        }
    }
}
