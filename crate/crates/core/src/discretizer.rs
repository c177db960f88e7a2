//! Piecewise-constant-argument discretization.
//!
//! On each step `[nh, (n+1)h)` the delayed argument `t - r(t)` is replaced by the
//! grid point `h(n - k_n)` with `k_n = floor(r(nh)/h)`. The resulting hybrid equation
//! is solved exactly by the delay difference recurrence
//!
//! ```text
//! z(n+1) = z(n) - A_n z(n - k_n),   A_n = ∫_{nh}^{(n+1)h} a(s) ds,
//! z(n)   = φ(nh)                     for -k <= n <= 0,
//! ```
//!
//! and between grid points by `z(t) = z(n) - (∫_{nh}^t a) z(n - k_n)`.

use crate::error::{Error, Result};
use crate::model::{CoefficientFn, DelayFn, ProblemSpec};
use crate::output::fmt_float;
use std::io::Write;

/// Grid step `h = q / k`, always derived from `q` and `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSize {
    q: f64,
    k: usize,
    h: f64,
}

impl StepSize {
    pub fn new(q: f64, k: usize) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::Precondition(format!("q must be positive, got {q}")));
        }
        if k == 0 {
            return Err(Error::Precondition("k must be at least 1".into()));
        }
        Ok(Self {
            q,
            k,
            h: q / k as f64,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Grid time `n h`.
    pub fn time(&self, n: i64) -> f64 {
        n as f64 * self.h
    }

    /// Number of whole steps needed to reach `horizon`.
    pub fn steps_to(&self, horizon: f64) -> usize {
        let x = horizon / self.h;
        let n = x.round();
        if (x - n).abs() <= 1e-9 * x.max(1.0) {
            n as usize
        } else {
            x.ceil() as usize
        }
    }
}

/// `floor(x)`, except that values within `tol` below an integer snap up to it.
fn guarded_floor(x: f64, tol: f64) -> f64 {
    let f = x.floor();
    if f + 1.0 - x <= tol {
        f + 1.0
    } else {
        f
    }
}

/// Index `i` of the step `[ih, (i+1)h)` containing `t >= 0`.
pub fn grid_index(t: f64, step: &StepSize) -> usize {
    let x = t / step.h;
    guarded_floor(x, 1e-12 * x.abs().max(1.0)).max(0.0) as usize
}

/// `k_i = floor(r(ih) / h)`.
pub fn delay_index(i: usize, step: &StepSize, r: &DelayFn) -> usize {
    let x = r.eval(step.time(i as i64)) / step.h;
    guarded_floor(x, 1e-12).max(0.0) as usize
}

/// `γ_h(t, r) = h (i - k_i)` with `i = floor(t/h)`; a grid time `<= t`.
pub fn gamma_h(t: f64, step: &StepSize, r: &DelayFn) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("gamma_h needs t >= 0, got {t}")));
    }
    let i = grid_index(t, step);
    let ki = delay_index(i, step, r);
    Ok(step.time(i as i64 - ki as i64))
}

/// Solution `ẑ_h(n)`, `n = -k ..= N`, of the delay difference equation.
#[derive(Debug, Clone)]
pub struct DiscreteTrajectory {
    step: StepSize,
    /// `values[j]` holds `ẑ(j - k)`.
    values: Vec<f64>,
    coeff_integrals: Vec<f64>,
    delay_indices: Vec<usize>,
    coefficient: CoefficientFn,
}

impl DiscreteTrajectory {
    pub fn step(&self) -> &StepSize {
        &self.step
    }

    /// Number of steps `N`.
    pub fn len_steps(&self) -> usize {
        self.coeff_integrals.len()
    }

    /// `N h`.
    pub fn horizon(&self) -> f64 {
        self.step.time(self.len_steps() as i64)
    }

    /// `ẑ(n)` for `-k <= n <= N`.
    pub fn z(&self, n: i64) -> f64 {
        let j = n + self.step.k as i64;
        assert!(
            j >= 0 && (j as usize) < self.values.len(),
            "trajectory index {n} outside [-{}, {}]",
            self.step.k,
            self.len_steps()
        );
        self.values[j as usize]
    }

    /// All values starting from `n = -k`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values for `n = 0 ..= N`.
    pub fn forward_values(&self) -> &[f64] {
        &self.values[self.step.k..]
    }

    pub fn coeff_integrals(&self) -> &[f64] {
        &self.coeff_integrals
    }

    pub fn delay_indices(&self) -> &[usize] {
        &self.delay_indices
    }

    /// Continuous extension `z_h(t)` on `[0, N h]`.
    pub fn extend(&self, t: f64) -> Result<f64> {
        let end = self.horizon();
        if !(t >= 0.0 && t <= end) {
            return Err(Error::Domain(format!(
                "extension evaluated at t = {t} outside [0, {end}]"
            )));
        }
        let n = grid_index(t, &self.step);
        let nn = self.len_steps();
        if n >= nn {
            return Ok(self.z(nn as i64));
        }
        let tn = self.step.time(n as i64);
        if t <= tn {
            return Ok(self.z(n as i64));
        }
        let kn = self.delay_indices[n] as i64;
        let partial = self.coefficient.integral(tn, t);
        Ok(self.z(n as i64) - partial * self.z(n as i64 - kn))
    }

    pub fn extension(&self) -> PcaExtension<'_> {
        PcaExtension { trajectory: self }
    }

    /// CSV with columns `n,t,z,A_n,k_n`; `A_n`/`k_n` are empty where undefined.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,t,z,A_n,k_n")?;
        let k = self.step.k as i64;
        for n in -k..=self.len_steps() as i64 {
            let (an, kn) = if n >= 0 && (n as usize) < self.len_steps() {
                (
                    fmt_float(self.coeff_integrals[n as usize]),
                    self.delay_indices[n as usize].to_string(),
                )
            } else {
                (String::new(), String::new())
            };
            writeln!(
                w,
                "{n},{},{},{an},{kn}",
                fmt_float(self.step.time(n)),
                fmt_float(self.z(n))
            )?;
        }
        Ok(())
    }
}

/// Borrowed view of a trajectory as the function `t ↦ z_h(t)`.
#[derive(Debug, Clone, Copy)]
pub struct PcaExtension<'a> {
    trajectory: &'a DiscreteTrajectory,
}

impl PcaExtension<'_> {
    pub fn trajectory(&self) -> &DiscreteTrajectory {
        self.trajectory
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.trajectory.extend(t)
    }
}

/// Runs the recurrence for `n_steps` steps.
pub fn iterate(spec: &ProblemSpec, step: StepSize, n_steps: usize) -> Result<DiscreteTrajectory> {
    if n_steps == 0 {
        return Err(Error::Precondition("need at least one step".into()));
    }
    if (step.q - spec.q()).abs() > 1e-12 * spec.q().max(1.0) {
        return Err(Error::Precondition(format!(
            "step built for q = {} but problem has q = {}",
            step.q,
            spec.q()
        )));
    }
    let k = step.k;
    let mut values = Vec::with_capacity(k + n_steps + 1);
    for n in -(k as i64)..=0 {
        let t = step.time(n).max(-spec.q());
        values.push(spec.phi.value(t));
    }
    let mut coeff_integrals = Vec::with_capacity(n_steps);
    let mut delay_indices = Vec::with_capacity(n_steps);
    for n in 0..n_steps {
        let an = spec
            .a
            .integral(step.time(n as i64), step.time(n as i64 + 1));
        let kn = delay_index(n, &step, &spec.r);
        if kn > k {
            return Err(Error::InvalidProblem(format!(
                "delay index k_{n} = {kn} exceeds k = {k}; r(t) exceeds its declared bound q"
            )));
        }
        // values index of ẑ(n) is n + k
        let next = values[n + k] - an * values[n + k - kn];
        if !next.is_finite() {
            return Err(Error::Overflow { step: n });
        }
        values.push(next);
        coeff_integrals.push(an);
        delay_indices.push(kn);
    }
    Ok(DiscreteTrajectory {
        step,
        values,
        coeff_integrals,
        delay_indices,
        coefficient: spec.a.clone(),
    })
}
