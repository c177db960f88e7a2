use crate::error::{Error, Result};

/// Piecewise-linear interpolant through strictly increasing nodes.
///
/// Outside the node range the first/last value is held constant, so the
/// function is defined (and continuous) on the whole real line.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    points: Vec<(f64, f64)>,
}

impl Samples {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidProblem(
                "table needs at least one node".into(),
            ));
        }
        if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidProblem("table nodes must be finite".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidProblem(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn first_t(&self) -> f64 {
        self.points[0].0
    }

    pub fn last_t(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn eval(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        // first node strictly greater than t; exists and is > 0 here
        let j = pts.partition_point(|p| p.0 <= t);
        let (t0, v0) = pts[j - 1];
        let (t1, v1) = pts[j];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Exact integral of the interpolant (trapezoid per piece) over `[t1, t2]`.
    pub fn integrate(&self, t1: f64, t2: f64) -> f64 {
        if t2 <= t1 {
            return 0.0;
        }
        let pts = &self.points;
        let mut total = 0.0;
        // left constant tail
        let first = pts[0];
        if t1 < first.0 {
            total += first.1 * (t2.min(first.0) - t1);
        }
        for w in pts.windows(2) {
            let lo = w[0].0.max(t1);
            let hi = w[1].0.min(t2);
            if hi > lo {
                total += 0.5 * (hi - lo) * (self.eval(lo) + self.eval(hi));
            }
        }
        let last = pts[pts.len() - 1];
        if t2 > last.0 {
            total += last.1 * (t2 - t1.max(last.0));
        }
        total
    }

    pub fn max_value(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
    }

    /// Largest absolute slope over all pieces; the Lipschitz constant of the interpolant.
    pub fn max_slope(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Samples {
        Samples::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 0.0)]).unwrap()
    }

    #[test]
    fn interpolates_and_holds_ends() {
        let s = tri();
        assert_eq!(s.eval(-5.0), 0.0);
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(2.0), 1.0);
        assert_eq!(s.eval(10.0), 0.0);
    }

    #[test]
    fn integrates_exactly() {
        let s = tri();
        assert!((s.integrate(0.0, 3.0) - 3.0).abs() < 1e-15);
        assert!((s.integrate(0.5, 2.0) - (0.75 + 1.5)).abs() < 1e-15);
        let c = Samples::new(vec![(0.0, 2.0)]).unwrap();
        assert!((c.integrate(1.0, 4.0) - 6.0).abs() < 1e-15);
        assert_eq!(s.integrate(1.0, 1.0), 0.0);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(Samples::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(Samples::new(vec![]).is_err());
    }

    #[test]
    fn slope() {
        assert_eq!(tri().max_slope(), 2.0);
    }
}
