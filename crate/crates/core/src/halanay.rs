//! Halanay decay exponents and the stability-transfer constants.
//!
//! If `v' <= -α v + β sup_{[t-q, t]} v` with `α > β > 0`, then `v` decays like
//! `e^{-η t}` where `η > 0` solves `η = α - β e^{η q}`. With `α = σ` and
//! `β = K₁(h) = a₀² (2h + w_r(h)) K` this gives the decay exponent of the
//! discretization error, provided `σ > K₁(h)`.

use crate::analysis::modulus_delay;
use crate::discretizer::StepSize;
use crate::error::{Error, Result};
use crate::model::{HistoryFn, ProblemSpec};
use crate::output::fmt_float;
use crate::reference::{solve_reference, DenseSolution};
use serde::{Deserialize, Serialize};
use std::io::Write;

const MAX_BISECTIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;

/// `(α, β, q)` with `α > β > 0`, `q >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalanayProblem {
    alpha: f64,
    beta: f64,
    q: f64,
}

impl HalanayProblem {
    pub fn new(alpha: f64, beta: f64, q: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && q.is_finite()) {
            return Err(Error::Precondition("α, β, q must be finite".into()));
        }
        if !(alpha > beta && beta > 0.0) {
            return Err(Error::Precondition(format!(
                "need α > β > 0, got α = {alpha}, β = {beta}"
            )));
        }
        if !(q >= 0.0) {
            return Err(Error::Precondition(format!("need q >= 0, got {q}")));
        }
        Ok(Self { alpha, beta, q })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `f(η) = η - α + β e^{η q}`; strictly increasing, negative at 0.
    pub fn residual(&self, eta: f64) -> f64 {
        eta - self.alpha + self.beta * (eta * self.q).exp()
    }
}

/// Unique positive root of `η = α - β e^{η q}`, by bisection on `(0, α - β]`.
pub fn solve_eta(p: &HalanayProblem) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, p.alpha - p.beta);
    if p.residual(hi) <= 0.0 {
        // only when q = 0 (or rounding makes f(α-β) vanish): the bracket end is the root
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p.residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta = if p.residual(lo).abs() <= p.residual(hi).abs() && lo > 0.0 {
        lo
    } else {
        hi
    };
    let residual = p.residual(eta).abs();
    if residual > RESIDUAL_TOL * p.alpha.max(1.0) {
        return Err(Error::NoConvergence { residual });
    }
    Ok(eta)
}

/// `K₁(h) = a₀² (2h + w_r(h)) K`.
pub fn k1_of_h(a0: f64, h: f64, w_r_h: f64, k: f64) -> f64 {
    a0 * a0 * (2.0 * h + w_r_h) * k
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsSource {
    #[default]
    User,
    Fitted,
}

/// Constants `K`, `σ` (solution-operator bound) and `M₀` (solution bound) of a
/// uniformly asymptotically stable equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConstants {
    #[serde(rename = "K")]
    pub k: f64,
    pub sigma: f64,
    #[serde(rename = "M0")]
    pub m0: f64,
    #[serde(default)]
    pub source: ConstantsSource,
    #[serde(default)]
    pub residual: Option<f64>,
}

impl TransferConstants {
    pub fn user(k: f64, sigma: f64, m0: f64) -> Result<Self> {
        let tc = Self {
            k,
            sigma,
            m0,
            source: ConstantsSource::User,
            residual: None,
        };
        tc.validate()?;
        Ok(tc)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.k, self.sigma, self.m0]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!(
                "transfer constants must be positive: K = {}, sigma = {}, M0 = {}",
                self.k, self.sigma, self.m0
            )))
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let tc: Self = serde_json::from_str(s)?;
        tc.validate()?;
        Ok(tc)
    }
}

/// One row of an admissibility sweep over `h = q/k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleRow {
    pub k: usize,
    pub h: f64,
    pub k1: f64,
    pub admissible: bool,
    pub eta: Option<f64>,
    /// `K₁ = 0` (zero coefficient): η is the limit value σ.
    pub degenerate: bool,
}

fn halanay_row(sigma: f64, k1: f64, q: f64) -> Result<(bool, Option<f64>, bool)> {
    if k1 == 0.0 {
        return Ok((true, Some(sigma), true));
    }
    if sigma > k1 {
        let eta = solve_eta(&HalanayProblem::new(sigma, k1, q)?)?;
        Ok((true, Some(eta), false))
    } else {
        Ok((false, None, false))
    }
}

/// `K₁(h)` and, where `σ > K₁(h)`, the exponent η for `k = 1 ..= k_max`.
pub fn admissible_steps(
    spec: &ProblemSpec,
    tc: &TransferConstants,
    k_max: usize,
) -> Result<Vec<AdmissibleRow>> {
    if k_max == 0 {
        return Err(Error::Precondition("k_max must be at least 1".into()));
    }
    let q = spec.q();
    let a0 = spec.a.bound();
    (1..=k_max)
        .map(|k| {
            let step = StepSize::new(q, k)?;
            let h = step.h();
            let w = modulus_delay(&spec.r, h, f64::INFINITY).value;
            let k1 = k1_of_h(a0, h, w, tc.k);
            let (admissible, eta, degenerate) = halanay_row(tc.sigma, k1, q)?;
            Ok(AdmissibleRow {
                k,
                h,
                k1,
                admissible,
                eta,
                degenerate,
            })
        })
        .collect()
}

/// Smallest `k` from which every later row of the sweep is admissible.
pub fn admissibility_threshold(rows: &[AdmissibleRow]) -> Option<usize> {
    let last_bad = rows.iter().rposition(|r| !r.admissible);
    match last_bad {
        None => rows.first().map(|r| r.k),
        Some(i) => rows.get(i + 1).map(|r| r.k),
    }
}

/// CSV with columns `k,h,K1,admissible,eta` (empty `eta` when inadmissible).
pub fn write_sweep_csv<W: Write>(rows: &[AdmissibleRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "k,h,K1,admissible,eta")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.k,
            fmt_float(r.h),
            fmt_float(r.k1),
            r.admissible,
            r.eta.map(fmt_float).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Constants and decay envelope for one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub step: StepSize,
    pub constants: TransferConstants,
    pub k1: f64,
    pub admissible: bool,
    pub eta: Option<f64>,
    /// `t₀ = 3q + w_r(q)`
    pub t0: f64,
    /// `M₁ = M₀ e^{σ (5q + 2 w_r(q))}`
    pub m1: f64,
}

impl TransferReport {
    pub fn new(spec: &ProblemSpec, tc: &TransferConstants, step: StepSize) -> Result<Self> {
        tc.validate()?;
        let q = spec.q();
        let h = step.h();
        let w_h = modulus_delay(&spec.r, h, f64::INFINITY).value;
        let w_q = modulus_delay(&spec.r, q, f64::INFINITY).value;
        let k1 = k1_of_h(spec.a.bound(), h, w_h, tc.k);
        let (admissible, eta, _) = halanay_row(tc.sigma, k1, q)?;
        Ok(Self {
            step,
            constants: tc.clone(),
            k1,
            admissible,
            eta,
            t0: 3.0 * q + w_q,
            m1: tc.m0 * (tc.sigma * (5.0 * q + 2.0 * w_q)).exp(),
        })
    }

    /// `C(t) e^{-η (t - t₀)}` with `C(t) = K ‖E_{t₀}‖ + K₁ M₁ ‖φ‖ e^{σ t₀} t`.
    pub fn envelope(&self, e_norm: f64, phi_norm: f64, t: f64) -> Result<f64> {
        let eta = match (self.admissible, self.eta) {
            (true, Some(eta)) => eta,
            _ => {
                return Err(Error::State(format!(
                    "envelope undefined: sigma = {} <= K1(h) = {}",
                    self.constants.sigma, self.k1
                )))
            }
        };
        if t < self.t0 {
            return Err(Error::Domain(format!(
                "envelope defined for t >= t0 = {}, got {t}",
                self.t0
            )));
        }
        let tc = &self.constants;
        let c = tc.k * e_norm + self.k1 * self.m1 * phi_norm * (tc.sigma * self.t0).exp() * t;
        Ok(c * (-eta * (t - self.t0)).exp())
    }
}

pub fn envelope(report: &TransferReport, e_norm: f64, phi_norm: f64, t: f64) -> Result<f64> {
    report.envelope(e_norm, phi_norm, t)
}

/// Settings for [`fit_transfer_constants`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Start of the rate-fitting window, as a fraction of the horizon.
    pub fit_start_fraction: f64,
    /// Restart times `s = j q` used for `K` are taken up to this fraction of the horizon.
    pub restart_fraction: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fit_start_fraction: 0.25,
            restart_fraction: 0.5,
        }
    }
}

/// Empirical `K`, `σ`, `M₀` from reference solutions.
///
/// Each trial history (plus the one `sol` was built with) is solved on the same
/// horizon and grid. `σ` is the smallest running-peak decay rate over the trials.
/// `M₀` is the least constant with `|x(t)| <= M₀ ‖φ‖ e^{-σ t}` on the nodes and `K`
/// the least with `|x(t)| <= K ‖x_s‖ e^{-σ (t - s)}` for restarts at `s = q, 2q, ...`.
/// A restart from `x_s` reproduces `x` on `[s, T]`, so the restarted solutions are
/// read off the original ones.
pub fn fit_transfer_constants(
    sol: &DenseSolution,
    trials: &[HistoryFn],
    opts: FitOptions,
) -> Result<TransferConstants> {
    let spec = sol.spec();
    let horizon = sol.horizon();
    let mut solutions = vec![sol.clone()];
    for phi in trials {
        solutions.push(solve_reference(
            &spec.with_history(phi.clone())?,
            horizon,
            sol.fine_step(),
        )?);
    }

    let q = spec.q();
    let window = (4.0 * q / sol.fine_step()).ceil() as usize;
    let t_start = opts.fit_start_fraction * horizon;
    let mut sigma = f64::INFINITY;
    let mut residual: f64 = 0.0;
    let mut used = Vec::new();
    for (i, s) in solutions.iter().enumerate() {
        if s.spec().phi.norm() == 0.0 {
            continue;
        }
        let fit = crate::analysis::fit_envelope_rate(
            s.node_values(),
            0,
            sol.fine_step(),
            t_start,
            window,
        )
        .map_err(|e| Error::Fit {
            trial: i,
            reason: e.to_string(),
        })?;
        if !(fit.rate > 0.0) {
            return Err(Error::Fit {
                trial: i,
                reason: format!("solution does not decay (fitted rate {})", fit.rate),
            });
        }
        sigma = sigma.min(fit.rate);
        residual = residual.max(fit.residual);
        used.push(s);
    }
    if used.is_empty() {
        return Err(Error::Fit {
            trial: 0,
            reason: "all trial histories are zero".into(),
        });
    }

    let dt = sol.fine_step();
    let mut m0: f64 = 0.0;
    let mut k: f64 = 0.0;
    let restart_stride = (q / dt).round().max(1.0) as usize;
    for s in &used {
        let xs = s.node_values();
        let phi_norm = s.spec().phi.norm();
        for (j, x) in xs.iter().enumerate() {
            m0 = m0.max(x.abs() * (sigma * j as f64 * dt).exp() / phi_norm);
        }
        let last_restart = (opts.restart_fraction * horizon / dt) as usize;
        let mut js = restart_stride;
        while js <= last_restart.min(xs.len() - 1) {
            // ‖x_s‖ over [s - q, s]
            let lo = js.saturating_sub(restart_stride);
            let seg_norm = xs[lo..=js].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if seg_norm > 0.0 {
                for (off, x) in xs[js..].iter().enumerate() {
                    k = k.max(x.abs() * (sigma * off as f64 * dt).exp() / seg_norm);
                }
            }
            js += restart_stride;
        }
    }
    // restarting at s = 0 is the M₀ bound itself
    let k = k.max(m0);
    Ok(TransferConstants {
        k,
        sigma,
        m0,
        source: ConstantsSource::Fitted,
        residual: Some(residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{oscillating_problem, CoefficientFn, DelayFn, HistoryFn};

    /// Independent bisection on `g(η) = α - β e^{η q} - η` over `[0, α]`, run to a
    /// fixed 400 halvings with no early exit.
    fn oracle_eta(alpha: f64, beta: f64, q: f64) -> f64 {
        let g = |e: f64| alpha - beta * (e * q).exp() - e;
        let (mut lo, mut hi) = (0.0f64, alpha);
        for _ in 0..400 {
            let m = 0.5 * (lo + hi);
            if g(m) > 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eta_examples() {
        let e = solve_eta(&HalanayProblem::new(2.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(e, 1.0);
        let e = solve_eta(&HalanayProblem::new(1.0, 0.5, 1.0).unwrap()).unwrap();
        assert!((e - oracle_eta(1.0, 0.5, 1.0)).abs() < 1e-10);
        assert!((e - 0.31492).abs() < 1e-5);
        let p = HalanayProblem::new(1.0, 0.999, 10.0).unwrap();
        let e = solve_eta(&p).unwrap();
        assert!(e > 0.0 && e < 1e-3);
        assert!((e - oracle_eta(1.0, 0.999, 10.0)).abs() < 1e-12);
        assert!(p.residual(e).abs() <= 1e-12);
    }

    #[test]
    fn hypothesis_violations() {
        assert!(HalanayProblem::new(1.0, 1.0, 1.0).is_err());
        assert!(HalanayProblem::new(1.0, 0.0, 1.0).is_err());
        assert!(HalanayProblem::new(1.0, 0.5, -1.0).is_err());
    }

    #[test]
    fn k1_examples() {
        assert_eq!(k1_of_h(0.0, 0.1, 0.1, 3.0), 0.0);
        let v = k1_of_h(4.0 / 3.0, 0.01, 0.01, 1.0);
        assert!((v - 16.0 / 9.0 * 0.03).abs() < 1e-15);
        assert!((v - 0.053333).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let h = 1.0 / k as f64;
            let v = k1_of_h(1.0, h, h, 2.0);
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn characteristic_root() {
        let (sigma, k1, q) = (0.8, 0.3, 1.7);
        let eta = solve_eta(&HalanayProblem::new(sigma, k1, q).unwrap()).unwrap();
        let lambda = -eta;
        assert!((lambda - (-sigma + k1 * (-lambda * q).exp())).abs() < 1e-10);
    }

    #[test]
    fn sweep_rows() {
        let spec = oscillating_problem(5.0);
        let huge = TransferConstants::user(1.0, 1e6, 1.0).unwrap();
        let rows = admissible_steps(&spec, &huge, 8).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.admissible && r.eta.is_some()));
        assert_eq!(admissibility_threshold(&rows), Some(1));

        let tc = TransferConstants::user(2.0, 0.5, 1.0).unwrap();
        let rows = admissible_steps(&spec, &tc, 400).unwrap();
        let kstar = admissibility_threshold(&rows).unwrap();
        assert!(kstar > 1);
        for r in &rows {
            assert_eq!(r.admissible, r.k >= kstar);
            assert_eq!(r.eta.is_some(), r.admissible);
        }
    }

    #[test]
    fn zero_coefficient_rows_are_degenerate() {
        let spec = ProblemSpec::new(
            "zero",
            CoefficientFn::constant(0.0).unwrap(),
            DelayFn::abs_cos(1.0).unwrap(),
            HistoryFn::constant(5.0, 1.0).unwrap(),
        )
        .unwrap();
        let tc = TransferConstants::user(3.0, 0.7, 1.0).unwrap();
        for r in admissible_steps(&spec, &tc, 5).unwrap() {
            assert!(r.degenerate && r.admissible);
            assert_eq!(r.k1, 0.0);
            assert_eq!(r.eta, Some(0.7));
        }
    }

    #[test]
    fn report_constants_and_envelope() {
        let spec = oscillating_problem(5.0);
        let tc = TransferConstants::user(1.5, 0.9, 2.0).unwrap();
        let rep = TransferReport::new(&spec, &tc, StepSize::new(1.0, 100).unwrap()).unwrap();
        // w_r(q) = min(q, 1) = 1 for |cos t|
        assert_eq!(rep.t0, 4.0);
        assert!((rep.m1 - 2.0 * (0.9f64 * 7.0).exp()).abs() < 1e-9);
        assert!(rep.admissible);
        let eta = rep.eta.unwrap();
        assert_eq!(rep.envelope(0.0, 0.0, 10.0).unwrap(), 0.0);
        let at_t0 = rep.envelope(0.3, 5.0, rep.t0).unwrap();
        let expected = 1.5 * 0.3 + rep.k1 * rep.m1 * 5.0 * (0.9f64 * 4.0).exp() * 4.0;
        assert!((at_t0 - expected).abs() < 1e-9 * expected);
        assert!(rep.envelope(0.3, 5.0, 1.0).is_err());
        let start = rep.t0.max(1.0 / eta);
        let mut prev = rep.envelope(0.3, 5.0, start).unwrap();
        for i in 1..200 {
            let v = rep.envelope(0.3, 5.0, start + i as f64).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 1e-6 * at_t0);

        let coarse = TransferReport::new(&spec, &tc, StepSize::new(1.0, 1).unwrap()).unwrap();
        assert!(!coarse.admissible && coarse.eta.is_none());
        assert!(matches!(
            coarse.envelope(0.1, 1.0, 10.0),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn constants_json_schema() {
        let tc = TransferConstants::from_json_str(
            r#"{"K": 2.0, "sigma": 0.5, "M0": 1.5, "source": "user", "residual": null}"#,
        )
        .unwrap();
        assert_eq!(tc.source, ConstantsSource::User);
        assert_eq!(tc.k, 2.0);
        let text = serde_json::to_string(&tc).unwrap();
        assert!(text.contains("\"K\":2.0") && text.contains("\"M0\":1.5"));
        assert!(TransferConstants::from_json_str(
            r#"{"K": -1, "sigma": 0.5, "M0": 1, "source": "user"}"#
        )
        .is_err());
        assert!(TransferConstants::from_json_str(
            r#"{"K": 1, "sigma": 0.5, "M0": 1, "source": "guess"}"#
        )
        .is_err());
    }

    #[test]
    fn fitted_rate_of_nearly_undelayed_decay() {
        let c = 1.0;
        let spec = ProblemSpec::new(
            "nearly undelayed",
            CoefficientFn::constant(c).unwrap(),
            DelayFn::constant(0.01, 0.01).unwrap(),
            HistoryFn::constant(1.0, 0.01).unwrap(),
        )
        .unwrap();
        let sol = solve_reference(&spec, 10.0, 0.01 / 16.0).unwrap();
        let zero = HistoryFn::constant(0.0, 0.01).unwrap();
        let tc = fit_transfer_constants(&sol, &[zero], FitOptions::default()).unwrap();
        // dominant root of λ = -c e^{-λ r}: λ ≈ -1.0101 for c = 1, r = 0.01
        assert!((tc.sigma - c).abs() < 0.05 * c, "sigma {}", tc.sigma);
        assert!(tc.m0 >= 1.0 && tc.k >= tc.m0);
        assert_eq!(tc.source, ConstantsSource::Fitted);
    }

    #[test]
    fn fitted_constants_for_oscillating_problem() {
        let spec = oscillating_problem(5.0);
        let sol = solve_reference(&spec, 30.0, 1.0 / 64.0).unwrap();
        let trials = [
            HistoryFn::constant(1.0, 1.0).unwrap(),
            HistoryFn::poly(vec![1.0, 1.0], 1.0).unwrap(),
        ];
        let tc = fit_transfer_constants(&sol, &trials, FitOptions::default()).unwrap();
        assert!(tc.sigma > 0.0 && tc.k > 0.0 && tc.m0 > 0.0);
        let rows = admissible_steps(&spec, &tc, 2000).unwrap();
        assert!(admissibility_threshold(&rows).is_some());
    }

    #[test]
    fn growing_trial_is_rejected() {
        let spec = ProblemSpec::new(
            "unstable",
            CoefficientFn::constant(3.0).unwrap(),
            DelayFn::constant(1.0, 1.0).unwrap(),
            HistoryFn::constant(1.0, 1.0).unwrap(),
        )
        .unwrap();
        let sol = solve_reference(&spec, 20.0, 1.0 / 32.0).unwrap();
        assert!(matches!(
            fit_transfer_constants(&sol, &[], FitOptions::default()),
            Err(Error::Fit { trial: 0, .. })
        ));
    }
}
