//! Moduli of continuity, compact-interval error bounds, measured errors against the
//! reference solver, convergence studies, decay-rate fits and the Yorke criterion.

use crate::discretizer::{iterate, DiscreteTrajectory, PcaExtension, StepSize};
use crate::error::{Error, Result};
use crate::halanay::TransferReport;
use crate::model::{CoefficientFn, CoefficientKind, DelayFn, DelayKind, ProblemSpec};
use crate::output::fmt_float;
use crate::reference::{max_spread, modulus_solution, solve_reference, DenseSolution};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusMethod {
    Analytic,
    GridScan,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusEstimate {
    pub delta: f64,
    pub horizon: f64,
    pub value: f64,
    pub method: ModulusMethod,
}

/// Upper bound on `w_r(δ; T)` from the variant's Lipschitz constant, capped by its range.
pub fn modulus_delay(r: &DelayFn, delta: f64, horizon: f64) -> ModulusEstimate {
    let value = if delta > 0.0 {
        match r.kind() {
            DelayKind::Constant(_) => 0.0,
            _ => (r.lipschitz() * delta).min(r.range_width()),
        }
    } else {
        0.0
    };
    ModulusEstimate {
        delta,
        horizon,
        value,
        method: ModulusMethod::Analytic,
    }
}

/// `w_r(δ; T)` by scanning `[0, T]` at the given spacing.
pub fn modulus_delay_scan(r: &DelayFn, delta: f64, horizon: f64, spacing: f64) -> ModulusEstimate {
    let n = (horizon / spacing).ceil() as usize;
    let mut samples: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = (i as f64 * spacing).min(horizon);
            (t, r.eval(t))
        })
        .collect();
    samples.dedup_by(|a, b| a.0 == b.0);
    ModulusEstimate {
        delta,
        horizon,
        value: max_spread(&samples, delta * (1.0 + 1e-12)),
        method: ModulusMethod::GridScan,
    }
}

/// The pieces of `e^{A(T)} A(T) w_x(w_r(h;T) + 2h; T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundComponents {
    /// `A(T) = ∫₀ᵀ a`, or `a₀ T` when `a` changes sign.
    pub a_integral: f64,
    pub w_r: f64,
    /// Argument `w_r + 2h` of the solution modulus.
    pub delta: f64,
    /// Oracle modulus of the solution, before inflation.
    pub w_x_oracle: f64,
    /// Oracle error allowance; the modulus is inflated by twice this.
    pub oracle_tol: f64,
    pub bound: f64,
}

/// Compact-interval error bound. The exact solution's modulus is replaced by the
/// oracle's plus `2 * oracle_tol`, which dominates it whenever the oracle is within
/// `oracle_tol` of the exact solution.
pub fn error_bound_compact(
    spec: &ProblemSpec,
    step: &StepSize,
    horizon: f64,
    sol: &DenseSolution,
    oracle_tol: f64,
) -> Result<BoundComponents> {
    if sol.horizon() < horizon * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "reference horizon {} shorter than T = {horizon}",
            sol.horizon()
        )));
    }
    let a_integral = if spec.a.infimum() >= 0.0 {
        spec.a.integral(0.0, horizon)
    } else {
        spec.a.bound() * horizon
    };
    let h = step.h();
    let w_r = modulus_delay(&spec.r, h, horizon).value;
    let delta = w_r + 2.0 * h;
    let w_x_oracle = modulus_solution(sol, delta, horizon)?;
    let bound = if a_integral == 0.0 {
        0.0
    } else {
        a_integral.exp() * a_integral * (w_x_oracle + 2.0 * oracle_tol)
    };
    Ok(BoundComponents {
        a_integral,
        w_r,
        delta,
        w_x_oracle,
        oracle_tol,
        bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridError {
    pub n: usize,
    pub t: f64,
    pub reference: f64,
    pub discrete: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub step: StepSize,
    pub horizon: f64,
    pub measured_max_error: f64,
    pub argmax_t: f64,
    pub bound: BoundComponents,
    /// `measured <= bound (1 + 1e-6) + 10 oracle_tol`
    pub dominated: bool,
    pub grid_errors: Vec<GridError>,
}

impl ErrorReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,t,x_ref,z,abs_error")?;
        for g in &self.grid_errors {
            writeln!(
                w,
                "{},{},{},{},{}",
                g.n,
                fmt_float(g.t),
                fmt_float(g.reference),
                fmt_float(g.discrete),
                fmt_float(g.abs_error)
            )?;
        }
        Ok(())
    }
}

/// Allowed slack in the domination check.
pub fn domination_holds(measured: f64, bound: f64, oracle_tol: f64) -> bool {
    measured <= bound * (1.0 + 1e-6) + 10.0 * oracle_tol
}

/// `max |x(t) - z_h(t)|` over a uniform probe grid with `probes_per_step` points per step.
pub fn measured_error(
    sol: &DenseSolution,
    ext: PcaExtension<'_>,
    horizon: f64,
    probes_per_step: usize,
    oracle_tol: f64,
) -> Result<ErrorReport> {
    if probes_per_step < 10 {
        return Err(Error::Precondition(format!(
            "need at least 10 probes per step, got {probes_per_step}"
        )));
    }
    let traj = ext.trajectory();
    let slack = 1e-12 * horizon.max(1.0);
    if sol.horizon() < horizon - slack || traj.horizon() < horizon - slack {
        return Err(Error::Domain(format!(
            "horizon {horizon} exceeds reference ({}) or trajectory ({}) range",
            sol.horizon(),
            traj.horizon()
        )));
    }
    let step = *traj.step();
    let h = step.h();
    let spacing = h / probes_per_step as f64;
    let n_probes = (horizon / spacing).ceil() as usize;
    let mut worst = 0.0;
    let mut argmax = 0.0;
    for i in 0..=n_probes {
        let t = (i as f64 * spacing).min(horizon);
        let e = (sol.eval(t)? - ext.eval(t)?).abs();
        if e > worst {
            worst = e;
            argmax = t;
        }
    }
    let n_grid = step.steps_to(horizon).min(traj.len_steps());
    let mut grid_errors = Vec::with_capacity(n_grid + 1);
    for n in 0..=n_grid {
        let t = step.time(n as i64);
        if t > horizon + slack {
            break;
        }
        let reference = sol.eval(t.min(horizon))?;
        let discrete = traj.z(n as i64);
        grid_errors.push(GridError {
            n,
            t,
            reference,
            discrete,
            abs_error: (reference - discrete).abs(),
        });
        if grid_errors[n].abs_error > worst {
            worst = grid_errors[n].abs_error;
            argmax = t;
        }
    }
    let bound = error_bound_compact(sol.spec(), &step, horizon, sol, oracle_tol)?;
    Ok(ErrorReport {
        step,
        horizon,
        measured_max_error: worst,
        argmax_t: argmax,
        dominated: domination_holds(worst, bound.bound, oracle_tol),
        bound,
        grid_errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    pub h: f64,
    pub measured: f64,
    pub bound: f64,
    /// `measured(previous row) / measured(this row)`
    pub ratio_prev: Option<f64>,
    pub dominated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub horizon: f64,
    pub fine_step: f64,
    pub oracle_tol: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceStudy {
    pub fn all_dominated(&self) -> bool {
        self.rows.iter().all(|r| r.dominated)
    }

    /// Smallest `k` from which measured errors decrease strictly to the end of the table.
    pub fn decreasing_from(&self) -> Option<usize> {
        let n = self.rows.len();
        if n < 2 {
            return None;
        }
        let mut start = n - 1;
        while start > 0 && self.rows[start - 1].measured > self.rows[start].measured {
            start -= 1;
        }
        if start == n - 1 {
            None
        } else {
            Some(self.rows[start].k)
        }
    }

    /// Least-squares slope of `log(measured)` against `log(h)`.
    pub fn observed_order(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.measured > 0.0)
            .map(|r| (r.h.ln(), r.measured.ln()))
            .collect();
        least_squares(&pts).map(|(slope, _, _)| slope)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,h,measured_max_error,bound,ratio_prev")?;
        for r in &self.rows {
            let ratio = r
                .ratio_prev
                .filter(|x| x.is_finite())
                .map(fmt_float)
                .unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{ratio}",
                r.k,
                fmt_float(r.h),
                fmt_float(r.measured),
                fmt_float(r.bound)
            )?;
        }
        Ok(())
    }
}

/// Measured error and bound for each `k` in an ascending list, against one oracle.
pub fn convergence_study(
    spec: &ProblemSpec,
    horizon: f64,
    k_list: &[usize],
    fine_step: f64,
) -> Result<ConvergenceStudy> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[1] <= w[0]) || k_list[0] == 0 {
        return Err(Error::Precondition(
            "k list must be non-empty, positive and strictly ascending".into(),
        ));
    }
    let sol = solve_reference(spec, horizon, fine_step)?;
    let oracle_tol = sol.error_estimate()?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let step = StepSize::new(spec.q(), k)?;
        let traj = iterate(spec, step, step.steps_to(horizon).max(1))?;
        let rep = measured_error(&sol, traj.extension(), horizon, 10, oracle_tol)?;
        let ratio_prev = rows.last().map(|p| p.measured / rep.measured_max_error);
        rows.push(ConvergenceRow {
            k,
            h: step.h(),
            measured: rep.measured_max_error,
            bound: rep.bound.bound,
            ratio_prev,
            dominated: rep.dominated,
        });
    }
    Ok(ConvergenceStudy {
        horizon,
        fine_step,
        oracle_tol,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YorkeVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YorkeReport {
    pub alpha: f64,
    pub q: f64,
    pub alpha_q: f64,
    pub verdict: YorkeVerdict,
}

/// Yorke's sufficient condition `0 < a(t) <= α`, `α q < 3/2`, with `α = a₀`.
pub fn yorke_check(a: &CoefficientFn, q: f64) -> YorkeReport {
    yorke_check_sampled(a, q, 1000)
}

/// As [`yorke_check`], spot-checking positivity on `points` samples in addition to
/// the variant's exact infimum.
pub fn yorke_check_sampled(a: &CoefficientFn, q: f64, points: usize) -> YorkeReport {
    let alpha = a.bound();
    let span = match a.kind() {
        CoefficientKind::SinAffine { omega, .. } if *omega != 0.0 => {
            (10.0 * q).max(2.0 * std::f64::consts::TAU / omega.abs())
        }
        CoefficientKind::Table(s) => (10.0 * q).max(s.last_t()),
        _ => 10.0 * q,
    };
    let positive = a.infimum() > 0.0
        && (0..=points).all(|i| a.value(span * i as f64 / points.max(1) as f64) > 0.0);
    let alpha_q = alpha * q;
    let verdict = if !positive {
        YorkeVerdict::Inconclusive
    } else if alpha_q < 1.5 {
        YorkeVerdict::Satisfied
    } else {
        YorkeVerdict::Violated
    };
    YorkeReport {
        alpha,
        q,
        alpha_q,
        verdict,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Positive for decay, negative for growth.
    pub rate: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub samples: usize,
}

/// `(slope, intercept, rms residual)` of a straight-line fit.
fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    Some((slope, icpt, (rss / n).sqrt()))
}

/// Decay rate of the running-peak envelope `e(n) = max_{n-window <= m <= n} |v(m)|`.
///
/// `values[zero_index]` corresponds to time 0; samples are `h` apart. Only times
/// `>= t_start` enter the fit. Zero envelope samples are skipped.
pub fn fit_envelope_rate(
    values: &[f64],
    zero_index: usize,
    h: f64,
    t_start: f64,
    window: usize,
) -> Result<DecayFit> {
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut pts = Vec::new();
    for (j, v) in values.iter().enumerate() {
        let a = v.abs();
        while deque.back().is_some_and(|&i| values[i].abs() <= a) {
            deque.pop_back();
        }
        deque.push_back(j);
        while deque.front().is_some_and(|&i| i + window < j) {
            deque.pop_front();
        }
        if j < zero_index {
            continue;
        }
        let t = (j - zero_index) as f64 * h;
        if t < t_start - 1e-12 * t_start.abs().max(1.0) {
            continue;
        }
        let env = values[deque[0]].abs();
        if env > 0.0 {
            pts.push((t, env.ln()));
        }
    }
    if pts.is_empty() {
        return Err(Error::Precondition(
            "envelope is identically zero on the fitting window".into(),
        ));
    }
    let (slope, _, residual) = least_squares(&pts)
        .ok_or_else(|| Error::Precondition("fitting window holds fewer than two samples".into()))?;
    Ok(DecayFit {
        rate: -slope,
        residual,
        samples: pts.len(),
    })
}

/// Exponential decay rate of `|ẑ(n)|` for `n h >= t_start` (window of `4q`).
pub fn fit_decay_rate(traj: &DiscreteTrajectory, t_start: f64) -> Result<DecayFit> {
    let step = traj.step();
    fit_envelope_rate(traj.values(), step.k(), step.h(), t_start, 4 * step.k())
}

/// Split of `|x(t) - z_h([t]_h)|` into the continuity term `|x(t) - x([t]_h)|` and the
/// grid error `|x([t]_h) - ẑ(n)|`, with the decay envelope at `[t]_h` when available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapDiagnostic {
    pub t: f64,
    pub grid_t: f64,
    pub continuity: f64,
    pub grid_error: f64,
    pub total: f64,
    pub envelope: Option<f64>,
}

pub fn snap_diagnostic(
    sol: &DenseSolution,
    traj: &DiscreteTrajectory,
    t: f64,
    transfer: Option<(&TransferReport, f64)>,
) -> Result<SnapDiagnostic> {
    if !(t >= 0.0 && t <= traj.horizon()) {
        return Err(Error::Domain(format!("t = {t} outside trajectory range")));
    }
    let step = traj.step();
    let n = crate::discretizer::grid_index(t, step).min(traj.len_steps());
    let grid_t = step.time(n as i64);
    let x_t = sol.eval(t)?;
    let x_grid = sol.eval(grid_t)?;
    let z = traj.z(n as i64);
    let envelope = match transfer {
        Some((rep, e_norm)) if grid_t >= rep.t0 && rep.admissible => {
            Some(rep.envelope(e_norm, sol.spec().phi.norm(), grid_t)?)
        }
        _ => None,
    };
    Ok(SnapDiagnostic {
        t,
        grid_t,
        continuity: (x_t - x_grid).abs(),
        grid_error: (x_grid - z).abs(),
        total: (x_t - z).abs(),
        envelope,
    })
}

/// Yorke verdict as JSON: `{"alpha", "q", "alpha_q", "verdict"}`.
pub fn yorke_json(report: &YorkeReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}
