use super::samples::Samples;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DelayKind {
    Constant(f64),
    /// `r(t) = |cos t|`
    AbsCos,
    Table(Samples),
}

/// The delay `r(t)` with its declared supremum `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayFn {
    kind: DelayKind,
    q: f64,
}

/// Slack allowed when spot-checking `0 <= r(t) <= q`.
const RANGE_SLACK: f64 = 1e-12;

impl DelayFn {
    /// Builds the delay and spot-checks `0 <= r <= q` on `[0, 10q]` at spacing `q/1000`.
    pub fn new(kind: DelayKind, q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "delay bound q must be positive and finite, got {q}"
            )));
        }
        match &kind {
            DelayKind::Constant(r0) if !r0.is_finite() => {
                return Err(Error::InvalidProblem(
                    "constant delay must be finite".into(),
                ))
            }
            DelayKind::Table(s) if s.first_t() > 0.0 => {
                return Err(Error::InvalidProblem(
                    "delay table must start at t <= 0".into(),
                ))
            }
            DelayKind::Table(s)
                if s.min_value() < -RANGE_SLACK || s.max_value() > q + RANGE_SLACK =>
            {
                return Err(Error::InvalidProblem(format!(
                    "delay table leaves [0, q = {q}]"
                )))
            }
            _ => {}
        }
        let r = Self { kind, q };
        for t in spot_grid(q) {
            let v = r.eval(t);
            if !(v >= -RANGE_SLACK && v <= q + RANGE_SLACK) {
                return Err(Error::InvalidProblem(format!(
                    "delay r({t}) = {v} outside [0, q = {q}]"
                )));
            }
        }
        Ok(r)
    }

    pub fn constant(r0: f64, q: f64) -> Result<Self> {
        Self::new(DelayKind::Constant(r0), q)
    }

    pub fn abs_cos(q: f64) -> Result<Self> {
        Self::new(DelayKind::AbsCos, q)
    }

    pub fn table(points: Vec<(f64, f64)>, q: f64) -> Result<Self> {
        Self::new(DelayKind::Table(Samples::new(points)?), q)
    }

    pub fn kind(&self) -> &DelayKind {
        &self.kind
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            DelayKind::Constant(r0) => *r0,
            DelayKind::AbsCos => t.cos().abs(),
            DelayKind::Table(s) => s.eval(t),
        }
    }

    /// Lipschitz constant of the variant, the basis of its modulus of continuity.
    pub fn lipschitz(&self) -> f64 {
        match &self.kind {
            DelayKind::Constant(_) => 0.0,
            DelayKind::AbsCos => 1.0,
            DelayKind::Table(s) => s.max_slope(),
        }
    }

    /// Oscillation `sup r - inf r` over `[0, ∞)`.
    pub fn range_width(&self) -> f64 {
        match &self.kind {
            DelayKind::Constant(_) => 0.0,
            DelayKind::AbsCos => 1.0,
            DelayKind::Table(s) => {
                let inside = s.points().iter().filter(|p| p.0 > 0.0).map(|p| p.1);
                let at0 = s.eval(0.0);
                let (lo, hi) = inside.fold((at0, at0), |(lo, hi), v| (lo.min(v), hi.max(v)));
                hi - lo
            }
        }
    }
}

/// `[0, 10q]` at spacing `q/1000`, used for range spot checks.
pub fn spot_grid(q: f64) -> impl Iterator<Item = f64> {
    (0..=10_000).map(move |i| i as f64 * q / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_checked() {
        assert!(DelayFn::abs_cos(1.0).is_ok());
        assert!(DelayFn::abs_cos(0.5).is_err());
        assert!(DelayFn::constant(2.0, 1.0).is_err());
        assert!(DelayFn::constant(-0.1, 1.0).is_err());
        assert!(DelayFn::constant(0.0, 1.0).is_ok());
        assert!(DelayFn::table(vec![(0.0, 0.0), (1.0, 1.5)], 1.0).is_err());
        assert!(DelayFn::constant(1.0, 0.0).is_err());
    }

    #[test]
    fn moduli() {
        let t = DelayFn::table(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.25)], 1.0).unwrap();
        assert_eq!(t.lipschitz(), 0.5);
        assert_eq!(t.range_width(), 0.5);
        assert_eq!(DelayFn::abs_cos(1.0).unwrap().lipschitz(), 1.0);
    }
}
