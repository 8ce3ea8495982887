//! Bessel functions of the first kind for real order greater than -1/2.
//!
//! Three evaluation routes are available:
//!
//! * the Poisson integral
//!   `J_λ(t) = t^λ / (2^λ Γ(λ+1/2) Γ(1/2)) ∫_{-1}^{1} e^{itr} (1-r²)^{λ-1/2} dr`,
//!   integrated exactly in the weight by a Gauss–Gegenbauer rule,
//! * the power series, summed in double-double arithmetic so that the
//!   cancellation at moderate arguments does not cost digits,
//! * Hankel's asymptotic expansion for the two lowest orders sharing the
//!   fractional part of λ, followed by upward recurrence (stable while the
//!   order stays below the argument).
//!
//! The automatic choice uses the integral below `t_switch` and the
//! asymptotic route above it.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::log_gamma;
use crate::quadrature::{gauss_jacobi, Rule};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BesselMethod {
    IntegralRepresentation,
    PowerSeries,
    Asymptotic,
}

/// Evaluator for `J_λ` at a fixed order.
#[derive(Clone, Debug)]
pub struct BesselEvaluator {
    order: f64,
    forced: Option<BesselMethod>,
    t_switch: f64,
    rule: Rule,
    log_norm: f64,
}

/// Smallest argument at which the automatic evaluator leaves the integral
/// representation.
pub fn switch_point(order: f64) -> f64 {
    25f64.max(order + 15.0)
}

impl BesselEvaluator {
    pub fn new(order: f64) -> Result<Self> {
        if !(order > -0.5) || !order.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Bessel order must exceed -1/2, got {order}"
            )));
        }
        let t_switch = switch_point(order);
        let nodes = (t_switch / 2.0).ceil() as usize + 24;
        let a = order - 0.5;
        let rule = gauss_jacobi(nodes, a, a)?;
        let log_norm = -log_gamma(order + 0.5)? - 0.5 * PI.ln();
        Ok(Self { order, forced: None, t_switch, rule, log_norm })
    }

    /// Evaluator that always uses `method`, regardless of the argument.
    pub fn with_method(order: f64, method: BesselMethod) -> Result<Self> {
        let mut ev = Self::new(order)?;
        ev.forced = Some(method);
        if method == BesselMethod::IntegralRepresentation {
            // enough nodes for arguments well beyond the automatic switch
            let a = order - 0.5;
            ev.rule = gauss_jacobi(ev.rule.len().max(80), a, a)?;
        }
        Ok(ev)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn t_switch(&self) -> f64 {
        self.t_switch
    }

    pub fn method_for(&self, t: f64) -> BesselMethod {
        match self.forced {
            Some(m) => m,
            None if t <= self.t_switch => BesselMethod::IntegralRepresentation,
            None => BesselMethod::Asymptotic,
        }
    }

    /// `J_λ(t)` for `t >= 0`; NaN for negative arguments.
    pub fn eval(&self, t: f64) -> f64 {
        if !(t >= 0.0) {
            return f64::NAN;
        }
        if t == 0.0 {
            return if self.order == 0.0 { 1.0 } else { 0.0 };
        }
        match self.method_for(t) {
            BesselMethod::IntegralRepresentation => self.integral(t),
            BesselMethod::PowerSeries => power_series(self.order, t),
            BesselMethod::Asymptotic => asymptotic_recurrence(self.order, t),
        }
    }

    /// Series below `t_switch`, asymptotics above; slower than [`Self::eval`]
    /// but free of the quadrature noise of the integral at higher orders.
    pub(crate) fn eval_precise(&self, t: f64) -> f64 {
        if t > 0.0 && t <= self.t_switch && self.forced.is_none() {
            power_series(self.order, t)
        } else {
            self.eval(t)
        }
    }

    fn integral(&self, t: f64) -> f64 {
        let sum: f64 = self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(&x, &w)| w * (t * x).cos())
            .sum();
        (self.order * (0.5 * t).ln() + self.log_norm).exp() * sum
    }
}

/// `J_λ(t)` with the automatic method choice.
pub fn bessel_j(order: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("Bessel argument must be >= 0, got {t}")));
    }
    Ok(BesselEvaluator::new(order)?.eval(t))
}

/// Coefficients `a_k(ν) = ∏_{j=1}^{k} (4ν² - (2j-1)²) / (k! 8^k)` of Hankel's expansion.
pub fn hankel_coefficients(order: f64, count: usize) -> Vec<f64> {
    let mu = 4.0 * order * order;
    let mut out = Vec::with_capacity(count);
    let mut a = 1.0;
    out.push(a);
    for k in 1..count {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (8.0 * k as f64);
        out.push(a);
    }
    out
}

fn hankel_pq(order: f64, t: f64) -> (f64, f64) {
    let mu = 4.0 * order * order;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * t);
        if term == 0.0 {
            break;
        }
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // k odd feeds Q, k even feeds P; signs alternate in pairs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-18 * p.abs().max(q.abs()).max(1e-300) {
            break;
        }
    }
    (p, q)
}

fn hankel_direct(order: f64, t: f64) -> f64 {
    let (p, q) = hankel_pq(order, t);
    let chi = t - (0.5 * order + 0.25) * PI;
    (2.0 / (PI * t)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn asymptotic_recurrence(order: f64, t: f64) -> f64 {
    let steps = order.floor() as i64;
    let base = order - steps as f64;
    let j0 = hankel_direct(base, t);
    if steps == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = hankel_direct(base + 1.0, t);
    for m in 1..steps {
        let nu = base + m as f64;
        let next = 2.0 * nu / t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Double-double number used for the cancellation-prone power series.
#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    fn quick(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let r = Self::quick(s.hi, s.lo + t.hi);
        Self::quick(r.hi, r.lo + t.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::from(q1)).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::from(q2)).neg());
        let q3 = r.hi / o.hi;
        Self::quick(q1, q2).add(Dd::from(q3))
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `Σ_m (-1)^m (t/2)^{λ+2m} / (m! Γ(λ+m+1))`.
pub(crate) fn power_series(order: f64, t: f64) -> f64 {
    let half = 0.5 * t;
    let x2 = Dd::from(half).mul(Dd::from(half)).neg();
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    let mut peak = 1.0f64;
    for m in 0..1000 {
        let m1 = (m + 1) as f64;
        let denom = Dd::two_sum(order, m1).mul(Dd::from(m1));
        term = term.mul(x2).div(denom);
        sum = sum.add(term);
        let mag = term.hi.abs();
        peak = peak.max(mag);
        if mag < 1e-34 * peak || mag < 1e-300 {
            break;
        }
    }
    let log_lead = match log_gamma(order + 1.0) {
        Ok(lg) => order * half.ln() - lg,
        Err(_) => return f64::NAN,
    };
    log_lead.exp() * sum.value()
}
