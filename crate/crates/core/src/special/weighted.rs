//! `∫₀^∞ J_ν(rt)² r / w(r)² dr` for power and bracket weights.
//!
//! After the substitution `u = rt` the integrand is split at a crossover
//! `u_x`. Below it the integral is computed numerically: tanh-sinh near the
//! origin, where the integrand behaves like `u^p` with `p > -1`, then
//! Gauss–Kronrod panels one period of `J²` wide. Above it, Hankel's expansion
//! gives
//!
//! `J_ν(u)² = (|z|² + Re(z² e^{2iχ})) / (πu)`, `z = Σ a_m (i/u)^m`, `χ = u - (ν/2 + 1/4)π`,
//!
//! and with the weight expanded in inverse powers of `u` every term is either
//! a power integral or an oscillatory one handled by repeated integration by
//! parts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::bessel::{hankel_coefficients, power_series, BesselEvaluator};
use super::log_gamma;
use crate::quadrature::{adaptive_gk, gk15, tanh_sinh};
use crate::{Error, Result};

/// Radial weight `w(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `w(r) = r^γ`
    Power { exponent: f64 },
    /// `w(r) = (1 + r²)^{γ/2}`
    Bracket { exponent: f64 },
}

impl WeightSpec {
    pub fn power(exponent: f64) -> Self {
        WeightSpec::Power { exponent }
    }

    pub fn bracket(exponent: f64) -> Self {
        WeightSpec::Bracket { exponent }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            WeightSpec::Power { exponent } | WeightSpec::Bracket { exponent } => exponent,
        }
    }

    /// `γ₀` with `w(r) ~ r^{γ₀}` as `r → 0`.
    pub fn exponent_at_zero(&self) -> f64 {
        match *self {
            WeightSpec::Power { exponent } => exponent,
            WeightSpec::Bracket { .. } => 0.0,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            WeightSpec::Power { exponent } => r.powf(exponent),
            WeightSpec::Bracket { exponent } => (1.0 + r * r).powf(0.5 * exponent),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    Logarithmic,
    Power,
}

/// Growth of a truncated integral that diverges at infinity:
/// `I(R) ≈ rate · ln R` (logarithmic) or `I(R) ≈ rate · R^exponent` (power).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub kind: DivergenceKind,
    pub exponent: f64,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselIntegral {
    /// Full integral, or the integral over `[0, R_cap]` when divergent.
    pub value: f64,
    /// Numerical part over `[0, crossover]`.
    pub truncated: f64,
    /// Analytic part over `[crossover, ∞)`; infinite when divergent.
    pub tail: f64,
    /// Size of the first neglected terms of the tail expansions.
    pub tail_bound: f64,
    /// Crossover radius in `r` units.
    pub crossover: f64,
    pub divergence: Option<Divergence>,
}

impl BesselIntegral {
    pub fn is_divergent(&self) -> bool {
        self.divergence.is_some()
    }
}

const PANEL_REL_TOL: f64 = 1e-13;
const TANH_SINH_LEVEL: u32 = 7;

/// `∫₀^∞ J_ν(rt)² r / w(r)² dr`, with the numerical part running at least
/// to `r = r_cap`.
pub fn weighted_bessel_integral(nu: f64, t: f64, w: WeightSpec, r_cap: f64) -> Result<BesselIntegral> {
    let ev = BesselEvaluator::new(nu)?;
    weighted_bessel_integral_with(&ev, t, w, r_cap)
}

/// [`weighted_bessel_integral`] reusing an evaluator for the order.
pub fn weighted_bessel_integral_with(
    ev: &BesselEvaluator,
    t: f64,
    w: WeightSpec,
    r_cap: f64,
) -> Result<BesselIntegral> {
    let nu = ev.order();
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if !(r_cap > 0.0) || !r_cap.is_finite() {
        return Err(Error::InvalidParameter(format!("R_cap must be positive, got {r_cap}")));
    }
    let gamma = w.exponent();
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter("weight exponent must be finite".into()));
    }
    let p0 = 2.0 * nu + 1.0 - 2.0 * w.exponent_at_zero();
    if p0 <= -1.0 {
        return Err(Error::DivergentAtOrigin(format!(
            "integrand ~ r^{p0} at r = 0 (order {nu}, weight exponent {}); need 2ν + 1 - 2γ > -1",
            w.exponent_at_zero()
        )));
    }

    let integrand = UIntegrand::new(ev, t, w)?;
    // both families decay like u^{-2γ} times 1/u-averaged J²
    let divergent = 2.0 * gamma <= 1.0;

    if divergent {
        let u_end = r_cap * t;
        let truncated = integrand.prefactor * integrand.numeric(u_end);
        let (kind, exponent, rate) = if (2.0 * gamma - 1.0).abs() < 1e-12 {
            (DivergenceKind::Logarithmic, 0.0, t.powf(2.0 * gamma - 2.0) / PI)
        } else {
            let e = 1.0 - 2.0 * gamma;
            (DivergenceKind::Power, e, t.powf(2.0 * gamma - 2.0) * t.powf(e) / (PI * e))
        };
        return Ok(BesselIntegral {
            value: truncated,
            truncated,
            tail: f64::INFINITY,
            tail_bound: f64::INFINITY,
            crossover: r_cap,
            divergence: Some(Divergence { kind, exponent, rate }),
        });
    }

    let mut u_x = (r_cap * t).max(40.0).max(4.0 * nu * nu + 20.0);
    if matches!(w, WeightSpec::Bracket { .. }) {
        u_x = u_x.max(3.0 * t);
    }
    let truncated = integrand.prefactor * integrand.numeric(u_x);
    let (tail, tail_bound) = integrand.tail(u_x);
    let tail = integrand.prefactor * tail;
    let tail_bound = integrand.prefactor * tail_bound;
    let value = truncated + tail;
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("weighted Bessel integral at ν={nu}, t={t}")));
    }
    Ok(BesselIntegral {
        value,
        truncated,
        tail,
        tail_bound,
        crossover: u_x / t,
        divergence: None,
    })
}

/// `J_ν(u)² · u · W(u)` with `W(u) = prefactor⁻¹ · t² / w(u/t)²`.
struct UIntegrand<'a> {
    ev: &'a BesselEvaluator,
    nu: f64,
    t: f64,
    weight: WeightSpec,
    prefactor: f64,
    inv_gamma_nu1: f64,
}

impl<'a> UIntegrand<'a> {
    fn new(ev: &'a BesselEvaluator, t: f64, weight: WeightSpec) -> Result<Self> {
        let nu = ev.order();
        let gamma = weight.exponent();
        let prefactor = match weight {
            WeightSpec::Power { .. } => t.powf(2.0 * gamma - 2.0),
            WeightSpec::Bracket { .. } => t.powi(-2),
        };
        Ok(Self {
            ev,
            nu,
            t,
            weight,
            prefactor,
            inv_gamma_nu1: (-log_gamma(nu + 1.0)?).exp(),
        })
    }

    /// `u · W(u)` for `u > 0`.
    fn weight_u(&self, u: f64) -> f64 {
        match self.weight {
            WeightSpec::Power { exponent } => u.powf(1.0 - 2.0 * exponent),
            WeightSpec::Bracket { exponent } => {
                let x = u / self.t;
                u * (1.0 + x * x).powf(-exponent)
            }
        }
    }

    fn eval(&self, u: f64) -> f64 {
        // the Poisson sum is noisy at the 1e-13 level for larger orders,
        // which stalls adaptive refinement; the compensated series is not
        let j = if u <= self.ev.t_switch() { power_series(self.nu, u) } else { self.ev.eval(u) };
        j * j * self.weight_u(u)
    }

    /// Integrand for `u <= 1` from `J_ν(u) = (u/2)^ν S(u)` with `S` summed
    /// directly, so powers of `u` are combined before they can underflow.
    fn eval_small(&self, u: f64) -> f64 {
        let q = -0.25 * u * u;
        let mut term = self.inv_gamma_nu1;
        let mut s = term;
        for m in 1..40 {
            term *= q / (m as f64 * (self.nu + m as f64));
            s += term;
            if term.abs() < 1e-18 * s.abs() {
                break;
            }
        }
        let lead = 2f64.powf(-2.0 * self.nu) * s * s;
        match self.weight {
            WeightSpec::Power { exponent } => lead * u.powf(2.0 * self.nu + 1.0 - 2.0 * exponent),
            WeightSpec::Bracket { exponent } => {
                let x = u / self.t;
                lead * u.powf(2.0 * self.nu + 1.0) * (1.0 + x * x).powf(-exponent)
            }
        }
    }

    /// `∫₀^{u_end}` of the integrand.
    fn numeric(&self, u_end: f64) -> f64 {
        let u1 = match self.weight {
            WeightSpec::Power { .. } => 1.0,
            WeightSpec::Bracket { .. } => self.t.min(1.0),
        }
        .min(u_end);
        let mut total = tanh_sinh(|_, da, _| self.eval_small(da), 0.0, u1, TANH_SINH_LEVEL);
        let mut f = |u: f64| if u <= 1.0 { self.eval_small(u) } else { self.eval(u) };
        let mut breaks = vec![u1];
        let mut b = u1;
        while 2.0 * b < PI && 2.0 * b < u_end {
            b *= 2.0;
            breaks.push(b);
        }
        let mut b = PI;
        while b < u_end {
            if b > breaks[breaks.len() - 1] {
                breaks.push(b);
            }
            b += PI;
        }
        breaks.push(u_end);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        // absolute floor keeps refinement away from evaluation noise where
        // the integrand is negligible
        let scale = breaks
            .windows(2)
            .map(|win| gk15(&mut f, win[0], win[1]).0.abs())
            .fold(total.abs(), f64::max);
        let floor = 1e-16 * scale;
        for win in breaks.windows(2) {
            if win[1] > win[0] {
                total += adaptive_gk(&mut f, win[0], win[1], floor, PANEL_REL_TOL, 16).0;
            }
        }
        total
    }

    /// Weight expansion `u · W(u) / u = Σ ω_l u^{-q_l}` valid for large `u`.
    fn weight_terms(&self) -> Vec<(f64, f64)> {
        match self.weight {
            WeightSpec::Power { exponent } => vec![(1.0, 2.0 * exponent)],
            WeightSpec::Bracket { exponent } => {
                // (1 + u²/t²)^{-γ} = t^{2γ} u^{-2γ} Σ binom(-γ, l) (t/u)^{2l}
                let t2 = self.t * self.t;
                let mut coef = self.t.powf(2.0 * exponent);
                let mut out = Vec::new();
                for l in 0..40 {
                    out.push((coef, 2.0 * exponent + 2.0 * l as f64));
                    coef *= (-exponent - l as f64) / (l as f64 + 1.0) * t2;
                    if coef == 0.0 {
                        break;
                    }
                }
                out
            }
        }
    }

    /// `∫_U^∞` of the integrand from Hankel's expansion; returns the value
    /// and an estimate of the neglected terms.
    fn tail(&self, big_u: f64) -> (f64, f64) {
        let raw = hankel_coefficients(self.nu, 40);
        let mut c: Vec<Complex64> = Vec::new();
        let mut last = f64::INFINITY;
        let mut neglected = 0.0;
        for (m, &a) in raw.iter().enumerate() {
            let mag = a.abs() / big_u.powi(m as i32);
            if m > 0 && (mag > last || mag < 1e-18) {
                neglected = mag;
                break;
            }
            last = mag;
            c.push(a * Complex64::i().powi(m as i32));
        }
        let len = 2 * c.len() - 1;
        let mut abs2 = vec![0.0; len];
        let mut sq = vec![Complex64::new(0.0, 0.0); len];
        for i in 0..c.len() {
            for j in 0..c.len() {
                abs2[i + j] += (c[i] * c[j].conj()).re;
                sq[i + j] += c[i] * c[j];
            }
        }

        let weights = self.weight_terms();
        let chi = big_u - (0.5 * self.nu + 0.25) * PI;
        let phase = Complex64::from_polar(1.0, 2.0 * chi);
        let mut smooth = 0.0;
        let mut osc = Complex64::new(0.0, 0.0);
        let mut bound = 0.0;
        for m in 0..len {
            for &(omega, q) in &weights {
                let p = m as f64 + q;
                // d_m ω u^{-p}, p > 1 guaranteed by the convergence check
                if abs2[m] != 0.0 {
                    smooth += abs2[m] * omega * big_u.powf(1.0 - p) / (p - 1.0);
                }
                let (val, err) = ibp_power(p, big_u);
                osc += sq[m] * omega * val;
                bound += (sq[m] * omega).norm() * err;
            }
        }
        let osc = -(phase * osc).re;
        // neglected Hankel terms enter |z|² and z² at order 2·neglected
        let lead = weights[0].0 * big_u.powf(1.0 - weights[0].1);
        bound += 2.0 * neglected * lead.abs();
        ((smooth + osc) / PI, bound / PI)
    }
}

/// `Σ_j rising(p, j) U^{-p-j} / (2i)^{j+1}`, truncated at its smallest term,
/// so that `∫_U^∞ u^{-p} e^{2iχ} du = -e^{2iχ_U} · value`.
fn ibp_power(p: f64, big_u: f64) -> (Complex64, f64) {
    let two_i = Complex64::new(0.0, 2.0);
    let mut term = big_u.powf(-p) / two_i;
    let mut sum = term;
    let mut last = term.norm();
    for j in 1..60 {
        let next = term * (p + (j - 1) as f64) / (big_u * two_i);
        let mag = next.norm();
        if mag > last {
            return (sum, last);
        }
        sum += next;
        term = next;
        last = mag;
        if mag < 1e-20 * sum.norm() {
            return (sum, mag);
        }
    }
    (sum, last)
}
