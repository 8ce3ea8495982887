use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::report::CsvRow;
use crate::fields::{Grid, GridField, RadialProfile};
use crate::quadrature::gauss_legendre;
use crate::surfaces::build_quadrature;
use crate::symbols::{HomogeneousSymbol, Symbol, SymbolSpec};
use crate::{Error, Result};

type C64 = Complex64;

const PANEL_NODES: usize = 24;

/// Time profiles `g` given by their transform `ĝ(τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeProfile {
    /// `ĝ(τ) = exp(1 - 1/(1 - y²))`, `y` the position of `τ` in `[lo, hi]`
    /// rescaled to `[-1, 1]`.
    Bump { lo: f64, hi: f64 },
    /// The bump plus its reflection `τ ↦ -τ`, so `g` is real and even.
    SymmetricBump { lo: f64, hi: f64 },
}

impl TimeProfile {
    fn interval(&self) -> (f64, f64) {
        match *self {
            Self::Bump { lo, hi } | Self::SymmetricBump { lo, hi } => (lo, hi),
        }
    }

    fn bump(&self, tau: f64) -> f64 {
        let (lo, hi) = self.interval();
        let y = (2.0 * tau - lo - hi) / (hi - lo);
        if y.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - y * y)).exp()
        } else {
            0.0
        }
    }

    pub fn transform(&self, tau: f64) -> f64 {
        match self {
            Self::Bump { .. } => self.bump(tau),
            Self::SymmetricBump { .. } => self.bump(tau) + self.bump(-tau),
        }
    }

    /// `supp ĝ ⊂ [0, ∞)`
    pub fn one_sided(&self) -> bool {
        matches!(self, Self::Bump { lo, .. } if *lo >= 0.0)
    }

    /// `g(t) = (2π)^{-1} ∫ ĝ(τ) e^{itτ} dτ`, with GL panels short enough to
    /// resolve the oscillation up to `t_max`.
    fn time_values(&self, ts: &[f64], t_max: f64) -> Vec<C64> {
        let (lo, hi) = self.interval();
        let panels = ((hi - lo) * t_max / (2.0 * PI)).ceil() as usize + 16;
        let rule = gauss_legendre(16);
        let step = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 16);
        for p in 0..panels {
            let m = rule.mapped(lo + p as f64 * step, lo + (p + 1) as f64 * step);
            nodes.extend(m.nodes.iter().zip(&m.weights).map(|(&x, &w)| (x, w * self.bump(x))));
        }
        let symmetric = matches!(self, Self::SymmetricBump { .. });
        ts.par_iter()
            .map(|&t| {
                let v: C64 = nodes.iter().map(|&(x, w)| w * C64::from_polar(1.0, t * x)).sum();
                let v = if symmetric { C64::new(2.0 * v.re, 0.0) } else { v };
                v / (2.0 * PI)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualityOptions {
    /// Grid for the direct evaluation.
    pub grid: Grid,
    /// Angular resolution of the level-set quadrature.
    pub resolution: usize,
    /// GL panels over the radial range `[√lo, √hi]`.
    pub radial_panels: usize,
    /// `‖g‖²` is summed over `[-T, T]` in the time domain.
    pub time_extent: f64,
}

impl Default for DualityOptions {
    fn default() -> Self {
        Self {
            grid: Grid { n: 2, size: 1024, extent: 512.0 },
            resolution: 64,
            radial_panels: 16,
            time_extent: 3000.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityRow {
    pub rho: f64,
    /// `(2π)^{-n} |ĝ(ρ²)|² ∫_{ρΣ_a} |f̂|² 2ρ^{n-1} dω / |∇a|` at the
    /// requested resolution.
    pub integrand: f64,
    /// The same at twice the resolution.
    pub integrand_refined: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub symbol: SymbolSpec,
    pub time_profile: TimeProfile,
    pub test_function: String,
    /// `‖F^{-1}[ĝ(a(ξ)) f̂(ξ)]‖²` on the grid.
    pub direct: f64,
    /// The same through the coarea formula in `ρ = a^{1/2}`.
    pub coarea: f64,
    pub relative_gap: f64,
    /// `‖g‖²` from time samples.
    pub g_norm_sq: f64,
    /// `π^{-1} ∫₀^∞ |ĝ(ρ²)|² ρ dρ`
    pub one_sided: f64,
    /// `g_norm_sq / one_sided`; 1 exactly when `supp ĝ ⊂ [0, ∞)`.
    pub identity_ratio: f64,
    pub identity_holds: bool,
    pub support_hypothesis: bool,
    pub warnings: Vec<String>,
    pub rows: Vec<DualityRow>,
}

impl DualityReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow { rho_or_r: r.rho, lhs: r.integrand, rhs: r.integrand_refined, ratio: r.integrand / r.integrand_refined })
            .collect()
    }
}

/// Compares the two evaluations of `‖T*v‖²` for `v = g(t) f(x)` and checks
/// the one-sided identity `‖g‖² = π^{-1} ∫ |ĝ(ρ²)|² ρ dρ`.
pub fn duality_check(sym: &HomogeneousSymbol, g: TimeProfile, f: &RadialProfile, opts: &DualityOptions) -> Result<DualityReport> {
    let n = sym.dim();
    if f.n() != n || opts.grid.n != n {
        return Err(Error::InvalidParameter("symbol, test function and grid dimensions differ".into()));
    }
    let (lo, hi) = g.interval();
    if !(hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("time profile needs lo < hi, got [{lo}, {hi}]")));
    }
    if !(lo >= 0.0) {
        return Err(Error::InvalidParameter("the bump interval must lie in [0, ∞); use symmetric-bump for two-sided support".into()));
    }
    if opts.radial_panels == 0 || !(opts.time_extent > 0.0) {
        return Err(Error::InvalidParameter("radial panels and time extent must be positive".into()));
    }
    let mut warnings = Vec::new();
    if lo == 0.0 {
        let msg = "supp ĝ touches τ = 0, where the substitution τ = ρ² degenerates".to_string();
        warn!("{msg}");
        warnings.push(msg);
    }
    let support_hypothesis = g.one_sided();
    if !support_hypothesis {
        let msg = "supp ĝ is not contained in [0, ∞)".to_string();
        warn!("{msg}");
        warnings.push(msg);
    }

    // direct side on the grid
    let field = GridField::from_frequency_fn(opts.grid, |xi| {
        let a = if xi.iter().all(|v| *v == 0.0) { Ok(0.0) } else { sym.value(xi) };
        match a {
            Ok(a) => f.frequency_value(xi) * g.transform(a),
            Err(_) => C64::new(f64::NAN, 0.0),
        }
    })?;
    let direct = field.l2_norm().powi(2);

    // coarea side; the weights of the unit rule carry |∇a| at Σ_a, and
    // 2ρ^{n-1}/|∇a| scales as ρ^{n-1}
    let norm = (2.0 * PI).powi(-(n as i32));
    let slices = |resolution: usize| -> Result<Box<dyn Fn(f64) -> f64 + Sync>> {
        let q = build_quadrature(sym, 1.0, resolution)?;
        let cw = q.coarea_weights();
        let nodes = q.nodes;
        Ok(Box::new(move |rho: f64| {
            let slice: f64 = nodes
                .iter()
                .zip(&cw)
                .map(|(x, w)| {
                    let xi: Vec<f64> = x.iter().map(|v| v * rho).collect();
                    w * f.frequency_value(&xi).norm_sqr()
                })
                .sum();
            norm * g.transform(rho * rho).powi(2) * rho.powi(n as i32 - 1) * slice
        }))
    };
    let coarse = slices(opts.resolution)?;
    let fine = slices(2 * opts.resolution)?;
    let (a, b) = (lo.sqrt(), hi.sqrt());
    let rule = gauss_legendre(PANEL_NODES);
    let step = (b - a) / opts.radial_panels as f64;
    let mut nodes = Vec::new();
    for p in 0..opts.radial_panels {
        let m = rule.mapped(a + p as f64 * step, a + (p + 1) as f64 * step);
        nodes.extend(m.nodes.into_iter().zip(m.weights));
    }
    let rows: Vec<DualityRow> = nodes
        .par_iter()
        .map(|&(rho, _)| DualityRow { rho, integrand: coarse(rho), integrand_refined: fine(rho) })
        .collect();
    let coarea: f64 = rows.iter().zip(&nodes).map(|(r, (_, w))| w * r.integrand).sum();
    let one_sided: f64 = nodes.iter().map(|&(rho, w)| w * g.transform(rho * rho).powi(2) * rho).sum::<f64>() / PI;

    // |g|² has spectrum in [-2 hi, 2 hi]; a step below π / hi makes the
    // trapezoid sum exact up to the truncation at ±T
    let h = 0.5 * PI / hi;
    let count = (opts.time_extent / h).ceil() as usize;
    let ts: Vec<f64> = (0..=count).map(|j| j as f64 * h).collect();
    let gv = g.time_values(&ts, opts.time_extent);
    // |g(-t)| = |g(t)| for real ĝ
    let g_norm_sq = h * (gv[0].norm_sqr() + 2.0 * gv[1..].iter().map(|v| v.norm_sqr()).sum::<f64>());
    let tail: f64 = gv[count - count / 10..].iter().map(|v| v.norm_sqr()).sum::<f64>() * 2.0 * h;
    if tail > 1e-12 * g_norm_sq {
        let msg = format!("time-domain tail {tail:.2e} is not negligible; raise the time extent");
        warn!("{msg}");
        warnings.push(msg);
    }

    let identity_ratio = g_norm_sq / one_sided;
    Ok(DualityReport {
        symbol: sym.spec().clone(),
        time_profile: g,
        test_function: f.label().to_string(),
        direct,
        coarea,
        relative_gap: (direct - coarea).abs() / direct,
        g_norm_sq,
        one_sided,
        identity_ratio,
        identity_holds: (identity_ratio - 1.0).abs() < 1e-5,
        support_hypothesis,
        warnings,
        rows,
    })
}
