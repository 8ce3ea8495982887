//! Sharp trace constants and their smoothing-side counterparts.
//!
//! For `a(ξ) = |ξ|²` the best constant in
//! `ρ^{n-1} ∫_{S^{n-1}} |f(ρω)|² dω ≤ C² σ(ρ)² ‖w(|D|) f‖²` is
//!
//! `C² = sup_{t>0, k≥0} σ(t)^{-2} ∫₀^∞ J_{n/2+k-1}(rt)² r / w(r)² dr`,
//!
//! which for `σ(t) = t^{s-1}`, `w(r) = r^s` collapses to the Gamma ratio
//! `2^{1-2s} Γ(2s-1) Γ(n/2-s) / (Γ(s)² Γ(n/2-1+s))`. The smoothing constant
//! for `e^{it|D|²}` satisfies `C₀ = √π C`.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::special::{log_gamma, weighted_bessel_integral, BesselEvaluator, Divergence, WeightSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantMethod {
    GammaClosedForm,
    BesselSupremum,
    SmoothingConversion,
}

/// Which inequality the constant belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantKind {
    Trace,
    Smoothing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "form")]
pub enum ConstantParams {
    Sobolev { s: f64 },
    Weights { sigma: WeightSpec, w: WeightSpec },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attaining {
    pub t: f64,
    pub k: usize,
}

/// How the supremum over `(t, k)` behaved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupremumDiagnostics {
    pub grid_points: usize,
    pub k_max: usize,
    /// `(max - min) / max` of the bracket over the `t` grid at `k*`.
    pub t_spread: f64,
    /// No secondary local maximum on the `t` grid at `k*`.
    pub unimodal: bool,
    /// The grid maximum sits on an end of the `t` range, so the supremum may
    /// be approached only in a limit.
    pub at_boundary: bool,
    /// Largest `|tail_bound / value|` among the integrals used.
    pub max_tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantResult {
    pub kind: ConstantKind,
    pub method: ConstantMethod,
    pub n: usize,
    pub params: ConstantParams,
    /// `+∞` when the defining supremum diverges.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attaining: Option<Attaining>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<SupremumDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
}

impl ConstantResult {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Closed-form constant for `σ(t) = t^{s-1}`, `w(r) = r^s` on the sphere.
pub fn gamma_closed_form_constant(n: usize, s: f64) -> Result<ConstantResult> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")));
    }
    let half = n as f64 / 2.0;
    if !(s > 0.5) {
        return Err(Error::InvalidParameter(format!("s = {s}: Γ(2s-1) has its pole at s = 1/2; need s > 1/2")));
    }
    if !(s < half) {
        return Err(Error::InvalidParameter(format!("s = {s}: Γ(n/2-s) has its pole at s = n/2 = {half}; need s < n/2")));
    }
    let log_c2 = (1.0 - 2.0 * s) * 2f64.ln() + log_gamma(2.0 * s - 1.0)? + log_gamma(half - s)?
        - 2.0 * log_gamma(s)?
        - log_gamma(half - 1.0 + s)?;
    Ok(ConstantResult {
        kind: ConstantKind::Trace,
        method: ConstantMethod::GammaClosedForm,
        n,
        params: ConstantParams::Sobolev { s },
        value: (0.5 * log_c2).exp(),
        attaining: None,
        diagnostics: None,
        divergence: None,
    })
}

/// Search settings for the supremum over `t` and `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupremumSearch {
    pub t_min: f64,
    pub t_max: f64,
    pub grid_points: usize,
    pub k_max: usize,
    /// Numerical integration runs to at least `u = rt = u_target`.
    pub u_target: f64,
}

impl Default for SupremumSearch {
    fn default() -> Self {
        Self { t_min: 1e-3, t_max: 1e3, grid_points: 49, k_max: 8, u_target: 200.0 }
    }
}

const K_MAX_LIMIT: usize = 64;

struct Bracket {
    n: usize,
    sigma: WeightSpec,
    w: WeightSpec,
    u_target: f64,
}

impl Bracket {
    fn order(&self, k: usize) -> f64 {
        self.n as f64 / 2.0 + k as f64 - 1.0
    }

    /// `σ(t)^{-2} ∫ J_ν(rt)² r / w² dr` and the relative tail bound.
    fn eval(&self, ev: &BesselEvaluator, t: f64) -> Result<(f64, f64)> {
        let res = crate::special::weighted_bessel_integral_with(ev, t, self.w, self.u_target / t)?;
        let sig = self.sigma.eval(t);
        Ok((res.value / (sig * sig), (res.tail_bound / res.value).abs()))
    }
}

/// `C` as the square root of the supremum of the Bessel bracket.
pub fn c1_trace_constant(n: usize, sigma: WeightSpec, w: WeightSpec, search: SupremumSearch) -> Result<ConstantResult> {
    let (sup, attaining, diagnostics, divergence) = bessel_supremum(n, sigma, w, search)?;
    Ok(ConstantResult {
        kind: ConstantKind::Trace,
        method: ConstantMethod::BesselSupremum,
        n,
        params: ConstantParams::Weights { sigma, w },
        value: sup.sqrt(),
        attaining,
        diagnostics,
        divergence,
    })
}

/// Smoothing constant for `e^{it|D|²}`:
/// `C₀² = 2π sup_{ρ,k} ρ / (σ(ρ)² g'(ρ)) ∫ J_ν(rρ)² r / w² dr` with `g(ρ) = ρ²`.
pub fn walther_smoothing_constant(n: usize, sigma: WeightSpec, w: WeightSpec, search: SupremumSearch) -> Result<ConstantResult> {
    let (sup, attaining, diagnostics, divergence) = bessel_supremum(n, sigma, w, search)?;
    // ρ / g'(ρ) = 1/2
    let c0_sq = 2.0 * PI * 0.5 * sup;
    Ok(ConstantResult {
        kind: ConstantKind::Smoothing,
        method: ConstantMethod::BesselSupremum,
        n,
        params: ConstantParams::Weights { sigma, w },
        value: c0_sq.sqrt(),
        attaining,
        diagnostics,
        divergence: divergence.map(|d| Divergence { rate: PI * d.rate, ..d }),
    })
}

/// Trace constant in the normalization with slice measure
/// `2ρ^{n-1} dω / |∇a|`, from a smoothing constant: `C₀ / √π`.
///
/// `grad_norms` samples `|∇a|` on `Σ_a`; when it is identically 2 (the
/// sphere) the slice measure is `ρ^{n-1} dω` and the result is the trace
/// constant itself.
pub fn convert_smoothing_to_trace(c0: &ConstantResult, grad_norms: &[f64]) -> Result<(ConstantResult, bool)> {
    if c0.kind != ConstantKind::Smoothing {
        return Err(Error::InvalidParameter("expected a smoothing constant".into()));
    }
    if !c0.value.is_finite() {
        return Err(Error::InvalidParameter("cannot convert an infinite constant".into()));
    }
    let coincide = grad_norms.iter().all(|g| (g - 2.0).abs() < 1e-12);
    Ok((
        ConstantResult {
            kind: ConstantKind::Trace,
            method: ConstantMethod::SmoothingConversion,
            value: c0.value / PI.sqrt(),
            ..c0.clone()
        },
        coincide,
    ))
}

/// Inverse of [`convert_smoothing_to_trace`].
pub fn convert_trace_to_smoothing(c: &ConstantResult) -> ConstantResult {
    ConstantResult {
        kind: ConstantKind::Smoothing,
        method: ConstantMethod::SmoothingConversion,
        value: c.value * PI.sqrt(),
        ..c.clone()
    }
}

type Supremum = (f64, Option<Attaining>, Option<SupremumDiagnostics>, Option<Divergence>);

fn bessel_supremum(n: usize, sigma: WeightSpec, w: WeightSpec, search: SupremumSearch) -> Result<Supremum> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")));
    }
    if !(search.t_min > 0.0 && search.t_max > search.t_min) || search.grid_points < 3 {
        return Err(Error::InvalidParameter("t grid needs 0 < t_min < t_max and at least 3 points".into()));
    }
    let br = Bracket { n, sigma, w, u_target: search.u_target };

    // divergence depends only on the weight's decay
    let probe = weighted_bessel_integral(br.order(0), 1.0, w, search.u_target)?;
    if let Some(d) = probe.divergence {
        let sig = sigma.eval(1.0);
        return Ok((
            f64::INFINITY,
            None,
            None,
            Some(Divergence { rate: d.rate / (sig * sig), ..d }),
        ));
    }

    let m = search.grid_points;
    let ts: Vec<f64> = (0..m)
        .map(|i| {
            let f = i as f64 / (m - 1) as f64;
            (search.t_min.ln() + f * (search.t_max.ln() - search.t_min.ln())).exp()
        })
        .collect();

    let mut k_max = search.k_max;
    let mut rows: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut evaluators = Vec::new();
    loop {
        while rows.len() <= k_max {
            let k = rows.len();
            let ev = BesselEvaluator::new(br.order(k))?;
            let row = ts.par_iter().map(|&t| br.eval(&ev, t)).collect::<Result<Vec<_>>>()?;
            rows.push(row);
            evaluators.push(ev);
        }
        let best = rows.iter().flatten().fold(0.0f64, |a, b| a.max(b.0));
        let last = rows[k_max].iter().fold(0.0f64, |a, b| a.max(b.0));
        if last < (1.0 - 1e-6) * best || k_max >= K_MAX_LIMIT {
            break;
        }
        warn!("degree k_max = {k_max} still attains the supremum; raising it");
        k_max = (2 * k_max).min(K_MAX_LIMIT);
    }

    let (mut k_star, mut i_star, mut best) = (0, 0, f64::NEG_INFINITY);
    for (k, row) in rows.iter().enumerate() {
        for (i, &(v, _)) in row.iter().enumerate() {
            // strict comparison keeps the lowest degree and smallest t on ties
            if v > best * (1.0 + 1e-12) {
                best = v;
                k_star = k;
                i_star = i;
            }
        }
    }
    let row: Vec<f64> = rows[k_star].iter().map(|p| p.0).collect();
    let max_tail_bound = rows.iter().flatten().fold(0.0f64, |a, b| a.max(b.1));
    let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_spread = (best - lo) / best;
    let flat = t_spread < 1e-8;
    let local_maxima = (1..m - 1)
        .filter(|&i| row[i] > row[i - 1] * (1.0 + 1e-9) && row[i] > row[i + 1] * (1.0 + 1e-9))
        .count();
    let at_boundary = !flat && (i_star == 0 || i_star == m - 1);
    let unimodal = flat || local_maxima + usize::from(at_boundary) <= 1;

    // a flat bracket is attained everywhere; report a representative interior t
    let mut t_star = if flat { (search.t_min * search.t_max).sqrt() } else { ts[i_star] };
    if !flat && !at_boundary {
        let ev = &evaluators[k_star];
        let f = |lt: f64| br.eval(ev, lt.exp()).map(|p| p.0);
        let (lt, val) = golden_max(f, ts[i_star - 1].ln(), ts[i_star + 1].ln(), best)?;
        if val > best {
            best = val;
            t_star = lt.exp();
        }
    }
    Ok((
        best,
        Some(Attaining { t: t_star, k: k_star }),
        Some(SupremumDiagnostics { grid_points: m, k_max, t_spread, unimodal, at_boundary, max_tail_bound }),
        None,
    ))
}

/// Golden-section maximization on `[a, b]`; stops once the bracket is
/// narrow enough that the value is stable to about 1e-10 relative.
fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, start: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..80 {
        if (b - a).abs() < 1e-6 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let (x, v) = if fc > fd { (c, fc) } else { (d, fd) };
    Ok(if v > start { (x, v) } else { (0.5 * (a + b), v.max(start)) })
}
