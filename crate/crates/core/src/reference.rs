//! Method-of-steps reference solver.
//!
//! Classical RK4 on a uniform grid; the delayed state is read from a cubic Hermite
//! interpolant of the already computed nodes (or from `φ` for non-positive times).
//! When the delayed argument of an RK4 stage falls inside the step being computed
//! (vanishing delay) the last completed Hermite segment is extrapolated.

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::output::fmt_float;
use std::collections::VecDeque;
use std::io::Write;

/// Dense approximation of `x(t)` on `[-q, T]`.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    spec: ProblemSpec,
    fine_step: f64,
    horizon: f64,
    xs: Vec<f64>,
    ds: Vec<f64>,
}

fn hermite(x0: f64, d0: f64, x1: f64, d1: f64, dt: f64, th: f64) -> f64 {
    let (h00, h10, h01, h11) = hermite_basis(th);
    h00 * x0 + h10 * dt * d0 + h01 * x1 + h11 * dt * d1
}

fn hermite_basis(th: f64) -> (f64, f64, f64, f64) {
    let t2 = th * th;
    let t3 = t2 * th;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + th,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Delayed-state lookup while node `cur` is the newest completed node.
fn lookup(spec: &ProblemSpec, dt: f64, xs: &[f64], ds: &[f64], cur: usize, s: f64) -> f64 {
    if s <= 0.0 {
        return spec.phi.value(s.max(-spec.q()));
    }
    let i = (s / dt).floor() as usize;
    if i < cur {
        let th = (s - i as f64 * dt) / dt;
        return hermite(xs[i], ds[i], xs[i + 1], ds[i + 1], dt, th);
    }
    let tc = cur as f64 * dt;
    if s == tc {
        return xs[cur];
    }
    if cur == 0 {
        return xs[0] + ds[0] * s;
    }
    let th = (s - (cur - 1) as f64 * dt) / dt;
    hermite(xs[cur - 1], ds[cur - 1], xs[cur], ds[cur], dt, th)
}

/// Solves `x' = -a(t) x(t - r(t))` on `[0, horizon]` with step `fine_step <= q/16`.
pub fn solve_reference(spec: &ProblemSpec, horizon: f64, fine_step: f64) -> Result<DenseSolution> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Precondition(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let q = spec.q();
    if !(fine_step > 0.0 && fine_step <= q / 16.0 * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "fine_step = {fine_step} must lie in (0, q/16 = {}]",
            q / 16.0
        )));
    }
    let dt = fine_step;
    let m = {
        let x = horizon / dt;
        let n = x.round();
        if (x - n).abs() <= 1e-9 * x.max(1.0) {
            n as usize
        } else {
            x.ceil() as usize
        }
    };
    let a = &spec.a;
    let r = &spec.r;
    let mut xs = Vec::with_capacity(m + 1);
    let mut ds = Vec::with_capacity(m + 1);
    let x0 = spec.phi.value(0.0);
    xs.push(x0);
    ds.push(-a.value(0.0) * spec.phi.value((-r.eval(0.0)).max(-q)));

    for j in 0..m {
        let t = j as f64 * dt;
        let rhs = |tt: f64| -a.value(tt) * lookup(spec, dt, &xs, &ds, j, tt - r.eval(tt));
        let k1 = ds[j];
        let k2 = rhs(t + 0.5 * dt);
        let k3 = k2;
        let k4 = rhs(t + dt);
        let x1 = xs[j] + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        let t1 = (j + 1) as f64 * dt;
        if !x1.is_finite() {
            return Err(Error::NonFinite { t: t1 });
        }
        let a1 = a.value(t1);
        let s = t1 - r.eval(t1);
        let d1 = if s <= 0.0 {
            -a1 * spec.phi.value(s.max(-q))
        } else if ((s / dt).floor() as usize) < j {
            -a1 * lookup(spec, dt, &xs, &ds, j, s)
        } else {
            // s in the new segment [t_j, t_{j+1}]: the Hermite value there is linear in
            // the unknown derivative, so solve for it directly.
            let th = ((s - t) / dt).clamp(0.0, 1.0);
            let (h00, h10, h01, h11) = hermite_basis(th);
            let known = h00 * xs[j] + h10 * dt * ds[j] + h01 * x1;
            -a1 * known / (1.0 + a1 * h11 * dt)
        };
        if !d1.is_finite() {
            return Err(Error::NonFinite { t: t1 });
        }
        xs.push(x1);
        ds.push(d1);
    }
    Ok(DenseSolution {
        spec: spec.clone(),
        fine_step,
        horizon,
        xs,
        ds,
    })
}

impl DenseSolution {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn fine_step(&self) -> f64 {
        self.fine_step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Node times `j * fine_step`, `j = 0..`, and stored values / derivatives.
    pub fn node_values(&self) -> &[f64] {
        &self.xs
    }

    pub fn node_derivatives(&self) -> &[f64] {
        &self.ds
    }

    pub fn node_time(&self, j: usize) -> f64 {
        j as f64 * self.fine_step
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let q = self.spec.q();
        let slack = 1e-12 * self.horizon.max(1.0);
        if !(t >= -q - slack && t <= self.horizon + slack) {
            return Err(Error::Domain(format!(
                "reference evaluated at t = {t} outside [{}, {}]",
                -q, self.horizon
            )));
        }
        Ok(self.value(t))
    }

    fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.spec.phi.value(t.max(-self.spec.q()));
        }
        let dt = self.fine_step;
        let last = self.xs.len() - 1;
        let i = ((t / dt).floor() as usize).min(last - 1);
        let th = (t - i as f64 * dt) / dt;
        hermite(
            self.xs[i],
            self.ds[i],
            self.xs[i + 1],
            self.ds[i + 1],
            dt,
            th,
        )
    }

    /// `max_j |d_j + a(t_j) x(t_j - r(t_j))|` with `x` read from the finished interpolant.
    pub fn derivative_residual(&self) -> f64 {
        (1..self.xs.len())
            .map(|j| {
                let t = self.node_time(j);
                let s = t - self.spec.r.eval(t);
                (self.ds[j] + self.spec.a.value(t) * self.value(s)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Estimated sup-norm error of this solution from a second solve at a
    /// different step (coarser `2 dt` when allowed, otherwise finer `dt / 2`).
    pub fn error_estimate(&self) -> Result<f64> {
        let q = self.spec.q();
        let (other, factor) = if 2.0 * self.fine_step <= q / 16.0 * (1.0 + 1e-12) {
            (
                solve_reference(&self.spec, self.horizon, 2.0 * self.fine_step)?,
                1.0,
            )
        } else {
            (
                solve_reference(&self.spec, self.horizon, 0.5 * self.fine_step)?,
                2.0,
            )
        };
        let coarse = if other.fine_step > self.fine_step {
            &other
        } else {
            self
        };
        let mut diff: f64 = 0.0;
        for j in 0..coarse.xs.len() {
            let t = coarse.node_time(j).min(self.horizon);
            diff = diff.max((self.value(t) - other.value(t)).abs());
        }
        Ok(factor * diff)
    }

    /// CSV with columns `t,x` at the nodes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x")?;
        for (j, x) in self.xs.iter().enumerate() {
            writeln!(w, "{},{}", fmt_float(self.node_time(j)), fmt_float(*x))?;
        }
        Ok(())
    }
}

/// `max{|x_j - x_i| : t_j - t_i <= reach}` over time-sorted samples, by a sliding
/// window of monotone max/min deques.
pub(crate) fn max_spread(samples: &[(f64, f64)], reach: f64) -> f64 {
    let mut best: f64 = 0.0;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut left = 0;
    for (right, &(tr, xr)) in samples.iter().enumerate() {
        while tr - samples[left].0 > reach {
            left += 1;
        }
        while maxq.back().is_some_and(|&i| samples[i].1 <= xr) {
            maxq.pop_back();
        }
        maxq.push_back(right);
        while minq.back().is_some_and(|&i| samples[i].1 >= xr) {
            minq.pop_back();
        }
        minq.push_back(right);
        while maxq.front().is_some_and(|&i| i < left) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < left) {
            minq.pop_front();
        }
        best = best.max(samples[maxq[0]].1 - samples[minq[0]].1);
    }
    best
}

/// Grid estimate of `w_x(δ; T) = max{|x(t2) - x(t1)| : -q <= t1, t2 <= T, |t2 - t1| <= δ}`.
///
/// Scans every pair of grid samples (history sampled exactly from `φ` at spacing
/// `fine_step`, then the solver nodes) within `δ` using a sliding max/min window,
/// and additionally every pair `(t_i, t_i + δ)` through the interpolant. The result
/// is exact for piecewise-linear solutions and otherwise resolves the modulus to
/// the grid resolution.
pub fn modulus_solution(sol: &DenseSolution, delta: f64, horizon: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if horizon > sol.horizon * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "modulus horizon {horizon} beyond solution horizon {}",
            sol.horizon
        )));
    }
    let horizon = horizon.min(sol.horizon);
    let q = sol.spec.q();
    let dt = sol.fine_step;

    let mut samples: Vec<(f64, f64)> = Vec::new();
    let n_hist = (q / dt).floor() as usize;
    if (n_hist as f64) * dt < q {
        samples.push((-q, sol.value(-q)));
    }
    for j in (1..=n_hist).rev() {
        let t = -(j as f64) * dt;
        samples.push((t, sol.value(t)));
    }
    for (j, &x) in sol.xs.iter().enumerate() {
        let t = sol.node_time(j);
        if t > horizon {
            break;
        }
        samples.push((t, x));
    }
    if samples.last().map(|s| s.0 < horizon).unwrap_or(true) {
        samples.push((horizon, sol.value(horizon)));
    }

    let mut best = max_spread(&samples, delta * (1.0 + 1e-12));
    for &(t, x) in &samples {
        let u = t + delta;
        if u > horizon {
            break;
        }
        best = best.max((sol.value(u) - x).abs());
    }
    Ok(best)
}
