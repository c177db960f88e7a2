use super::samples::Samples;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum HistoryKind {
    Constant(f64),
    /// Coefficients in ascending powers of `t`.
    Poly(Vec<f64>),
    Table(Samples),
}

/// Initial function `φ` on `[-q, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFn {
    kind: HistoryKind,
    q: f64,
}

impl HistoryFn {
    pub fn constant(v: f64, q: f64) -> Result<Self> {
        Self::check_q(q)?;
        if !v.is_finite() {
            return Err(Error::InvalidProblem("history value must be finite".into()));
        }
        Ok(Self {
            kind: HistoryKind::Constant(v),
            q,
        })
    }

    pub fn poly(coeffs: Vec<f64>, q: f64) -> Result<Self> {
        Self::check_q(q)?;
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProblem(
                "polynomial history needs finite coefficients".into(),
            ));
        }
        Ok(Self {
            kind: HistoryKind::Poly(coeffs),
            q,
        })
    }

    /// Sampled history; the nodes must span exactly `[-q, 0]`, which fixes `q`.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        let s = Samples::new(points)?;
        let q = -s.first_t();
        if s.last_t() != 0.0 || !(q > 0.0) {
            return Err(Error::InvalidProblem(
                "history table must run from -q < 0 up to exactly 0".into(),
            ));
        }
        Ok(Self {
            kind: HistoryKind::Table(s),
            q,
        })
    }

    fn check_q(q: f64) -> Result<()> {
        if q.is_finite() && q > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!(
                "history domain length must be positive, got {q}"
            )))
        }
    }

    pub fn kind(&self) -> &HistoryKind {
        &self.kind
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub(crate) fn value(&self, t: f64) -> f64 {
        match &self.kind {
            HistoryKind::Constant(v) => *v,
            HistoryKind::Poly(c) => horner(c, t),
            HistoryKind::Table(s) => s.eval(t),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.q.max(1.0);
        if !(t >= -self.q - slack && t <= slack) {
            return Err(Error::Domain(format!(
                "history evaluated at t = {t} outside [{}, 0]",
                -self.q
            )));
        }
        Ok(self.value(t))
    }

    /// `‖φ‖_q = sup_{-q <= θ <= 0} |φ(θ)|`, exact per variant.
    pub fn norm(&self) -> f64 {
        match &self.kind {
            HistoryKind::Constant(v) => v.abs(),
            HistoryKind::Table(s) => s.max_abs(),
            HistoryKind::Poly(c) => {
                let (lo, hi) = (-self.q, 0.0);
                let mut best = horner(c, lo).abs().max(horner(c, hi).abs());
                for x in real_roots_in(&derivative(c), lo, hi) {
                    best = best.max(horner(c, x).abs());
                }
                best
            }
        }
    }

    /// Same shape with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let kind = match &self.kind {
            HistoryKind::Constant(v) => HistoryKind::Constant(v * factor),
            HistoryKind::Poly(c) => HistoryKind::Poly(c.iter().map(|x| x * factor).collect()),
            HistoryKind::Table(s) => HistoryKind::Table(
                Samples::new(s.points().iter().map(|&(t, v)| (t, v * factor)).collect())
                    .expect("scaling keeps abscissae valid"),
            ),
        };
        Self { kind, q: self.q }
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &ci)| i as f64 * ci)
        .collect()
}

/// All real roots of the polynomial in `[lo, hi]`.
///
/// Roots of the derivative split the interval into monotone pieces; each piece
/// holds at most one root, found by bisection.
fn real_roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && c[c.len() - 1] == 0.0 {
        c.pop();
    }
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let x = -c[0] / c[1];
            return if (lo..=hi).contains(&x) {
                vec![x]
            } else {
                Vec::new()
            };
        }
        _ => {}
    }
    let mut knots = vec![lo];
    knots.extend(real_roots_in(&derivative(&c), lo, hi));
    knots.push(hi);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (horner(&c, a), horner(&c, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        let sa = fa.signum();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if horner(&c, m).signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}
