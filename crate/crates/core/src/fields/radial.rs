//! Fields with a single spherical-harmonic component in frequency,
//! `f̂(ξ) = g(|ξ|) Y_k(ξ/|ξ|)`, and the Hankel-type reduction of their traces
//! on spheres.
//!
//! The fixed harmonics are `cos kθ` for `n = 2`, the zonal `P_k(ω_3)` for
//! `n = 3`, and the constant for `k = 0` in any dimension. On the sphere of
//! radius `ρ` such a field is `c_k(ρ) Y_k(ω)` with
//! `c_k(ρ) = κ_{n,k} ρ^{1-n/2} ∫ g(r) r^{n/2} J_{ν(k)}(rρ) dr`,
//! `ν(k) = n/2 + k - 1`. The constants `κ_{n,k}` are calibrated against
//! grid restrictions and stored with the crate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use super::grid::{Grid, GridField, SobolevFlavor};
use crate::quadrature::{gauss_legendre, tanh_sinh};
use crate::special::{gamma, BesselEvaluator};
use crate::surfaces::build_quadrature;
use crate::symbols::SymbolSpec;
use crate::{Error, Result};

type C64 = Complex64;

const PANEL_NODES: usize = 24;
const ORIGIN_LEVEL: u32 = 7;
/// Below this radius an overflowing integrand is dropped; integrability at
/// the origin is checked before integrating.
const ORIGIN_FLOOR: f64 = 1e-30;

fn check_harmonic(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("harmonics need n ≥ 2, got {n}")));
    }
    if n > 3 && k > 0 {
        return Err(Error::InvalidParameter(format!("only k = 0 is available for n = {n}")));
    }
    Ok(())
}

/// `Y_k(ω)` for a unit vector `ω`.
pub fn harmonic(n: usize, k: usize, omega: &[f64]) -> Result<f64> {
    check_harmonic(n, k)?;
    Ok(match n {
        2 => C64::new(omega[0], omega[1]).powu(k as u32).re,
        3 => legendre(k, omega[2]),
        _ => 1.0,
    })
}

fn legendre(k: usize, z: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, z);
    if k == 0 {
        return p0;
    }
    for m in 1..k {
        let m = m as f64;
        let p2 = ((2.0 * m + 1.0) * z * p1 - m * p0) / (m + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `∫_{S^{n-1}} Y_k² dω`.
pub fn harmonic_norm_sq(n: usize, k: usize) -> Result<f64> {
    check_harmonic(n, k)?;
    Ok(match (n, k) {
        (2, 0) => 2.0 * PI,
        (2, _) => PI,
        (3, _) => 4.0 * PI / (2 * k + 1) as f64,
        _ => 2.0 * PI.powf(0.5 * n as f64) / gamma(0.5 * n as f64)?,
    })
}

pub type ProfileFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Radial frequency profile `g` of degree `k`, supported in `[lo, hi]`.
#[derive(Clone)]
pub struct RadialProfile {
    n: usize,
    k: usize,
    g: ProfileFn,
    support: (f64, f64),
    /// Panels of the radial quadrature are no wider than this.
    scale: f64,
    /// `g(r) = O(r^p)` as `r → 0`.
    origin_exponent: f64,
    label: String,
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProfile")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("support", &self.support)
            .field("label", &self.label)
            .finish()
    }
}

impl RadialProfile {
    pub fn new(
        n: usize,
        k: usize,
        support: (f64, f64),
        scale: f64,
        origin_exponent: f64,
        label: impl Into<String>,
        g: ProfileFn,
    ) -> Result<Self> {
        check_harmonic(n, k)?;
        let (lo, hi) = support;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("profile support [{lo}, {hi}] must be a finite interval in [0, ∞)")));
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("panel scale must be positive, got {scale}")));
        }
        Ok(Self { n, k, g, support, scale, origin_exponent, label: label.into() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nu(&self) -> f64 {
        0.5 * self.n as f64 + self.k as f64 - 1.0
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn origin_exponent(&self) -> f64 {
        self.origin_exponent
    }

    pub fn value(&self, r: f64) -> C64 {
        if r < self.support.0 || r > self.support.1 {
            C64::new(0.0, 0.0)
        } else {
            (self.g)(r)
        }
    }

    /// `g(|ξ|) Y_k(ξ/|ξ|)`, with the `k = 0` value `g(0)` at the origin.
    pub fn frequency_value(&self, xi: &[f64]) -> C64 {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return if self.k == 0 && self.support.0 == 0.0 { self.value(0.0) } else { C64::new(0.0, 0.0) };
        }
        let omega: Vec<f64> = xi.iter().map(|v| v / r).collect();
        // check_harmonic ran at construction
        self.value(r) * harmonic(self.n, self.k, &omega).unwrap_or(0.0)
    }

    /// Samples `f̂` on a grid of the same dimension.
    pub fn to_grid(&self, grid: Grid) -> Result<GridField> {
        if grid.n != self.n {
            return Err(Error::InvalidParameter(format!("profile is {}-dimensional, grid is {}", self.n, grid.n)));
        }
        GridField::from_frequency_fn(grid, |xi| self.frequency_value(xi))
    }

    /// The profile of `|D|^{-1} f`.
    pub fn divided_by_radius(&self) -> Self {
        let g = self.g.clone();
        Self {
            g: Arc::new(move |r| g(r) / r),
            origin_exponent: self.origin_exponent - 1.0,
            label: format!("{} / r", self.label),
            ..self.clone()
        }
    }

    /// `∫ h(r) dr` over the support, in panels no wider than `width`; the
    /// panel touching `r = 0` uses tanh-sinh for the algebraic endpoint
    /// behaviour.
    pub fn integrate<F>(&self, h: F, width: f64) -> C64
    where
        F: Fn(f64) -> C64 + Sync,
    {
        let (lo, hi) = self.support;
        let width = width.min(self.scale);
        let panels = ((hi - lo) / width).ceil().max(1.0) as usize;
        let step = (hi - lo) / panels as f64;
        let rule = gauss_legendre(PANEL_NODES);
        (0..panels)
            .into_par_iter()
            .map(|p| {
                let a = lo + p as f64 * step;
                let b = if p + 1 == panels { hi } else { a + step };
                if p == 0 && lo == 0.0 {
                    let near = |x: f64| {
                        let v = h(x);
                        if x < ORIGIN_FLOOR && !(v.re.is_finite() && v.im.is_finite()) {
                            C64::new(0.0, 0.0)
                        } else {
                            v
                        }
                    };
                    let re = tanh_sinh(|x, _, _| near(x).re, a, b, ORIGIN_LEVEL);
                    let im = tanh_sinh(|x, _, _| near(x).im, a, b, ORIGIN_LEVEL);
                    C64::new(re, im)
                } else {
                    let m = rule.mapped(a, b);
                    m.nodes.iter().zip(&m.weights).map(|(&x, &w)| h(x) * w).sum()
                }
            })
            // panels are combined in order so the result is thread-count independent
            .collect::<Vec<C64>>()
            .iter()
            .sum()
    }

    /// `(2π)^{-n/2} ‖m(|ξ|) f̂‖` through the radial reduction; `+∞` when the
    /// integrand is not integrable at the origin.
    pub fn sobolev_norm(&self, s: f64, flavor: SobolevFlavor) -> Result<f64> {
        let n = self.n as f64;
        if self.support.0 == 0.0 {
            let p = 2.0 * self.origin_exponent + 2.0 * flavor.exponent_at_zero(s) + n - 1.0;
            if p <= -1.0 {
                return Ok(f64::INFINITY);
            }
        }
        let integral = self
            .integrate(
                |r| C64::new(self.value(r).norm_sqr() * flavor.measure(s, r, self.n), 0.0),
                f64::INFINITY,
            )
            .re;
        if !integral.is_finite() {
            return Err(Error::NonFinite(format!("Sobolev integral of profile {}", self.label)));
        }
        Ok((integral * harmonic_norm_sq(self.n, self.k)? * (2.0 * PI).powf(-n)).sqrt())
    }

    pub fn l2_norm(&self) -> Result<f64> {
        self.sobolev_norm(0.0, SobolevFlavor::Homogeneous)
    }

    /// `ρ^{1-n/2} ∫ g(r) r^{n/2} J_ν(rρ) dr`, the trace coefficient before the
    /// kernel constant.
    pub fn hankel_integral(&self, rho: f64) -> Result<C64> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!("ρ must be positive, got {rho}")));
        }
        let half = 0.5 * self.n as f64;
        if self.support.0 == 0.0 && self.origin_exponent + half + self.nu() <= -1.0 {
            return Err(Error::DivergentAtOrigin(format!("profile {} has no trace", self.label)));
        }
        let ev = BesselEvaluator::new(self.nu())?;
        let v = self.integrate(|r| self.value(r) * r.powf(half) * ev.eval_precise(r * rho), PI / rho);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(format!("Hankel integral of profile {} at ρ={rho}", self.label)));
        }
        Ok(v * rho.powf(1.0 - half))
    }
}

/// One calibrated kernel constant `κ_{n,k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub n: usize,
    pub k: usize,
    pub re: f64,
    pub im: f64,
    /// Largest relative deviation of a single calibration sample from the
    /// mean.
    pub spread: f64,
    pub samples: usize,
}

impl KernelEntry {
    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTable {
    pub version: u32,
    pub radii: Vec<f64>,
    pub families: Vec<String>,
    pub entries: Vec<KernelEntry>,
}

pub const KERNEL_TABLE_VERSION: u32 = 1;
pub const CALIBRATION_RADII: [f64; 3] = [0.75, 1.0, 1.5];
pub const CALIBRATION_FAMILIES: [&str; 3] = ["r^k exp(-r^2/2)", "r^k exp(-r^2/3)", "r^k cos(r) exp(-r^2/2)"];
const CALIBRATION_RESOLUTION: usize = 32;

static STORED: OnceLock<std::result::Result<KernelTable, String>> = OnceLock::new();

impl KernelTable {
    /// The table shipped in `data/trace_kernel.json`.
    pub fn stored() -> Result<&'static KernelTable> {
        STORED
            .get_or_init(|| {
                let t: KernelTable =
                    serde_json::from_str(include_str!("../../data/trace_kernel.json")).map_err(|e| e.to_string())?;
                if t.version != KERNEL_TABLE_VERSION {
                    return Err(format!("kernel table version {} != {KERNEL_TABLE_VERSION}", t.version));
                }
                Ok(t)
            })
            .as_ref()
            .map_err(|e| Error::InvalidParameter(e.clone()))
    }

    pub fn coefficient(&self, n: usize, k: usize) -> Result<C64> {
        self.entries
            .iter()
            .find(|e| e.n == n && e.k == k)
            .map(KernelEntry::value)
            .ok_or(Error::Uncalibrated { n, k })
    }
}

/// The calibration profiles of degree `k`.
pub fn calibration_profiles(n: usize, k: usize) -> Result<Vec<RadialProfile>> {
    let kf = k as i32;
    let fams: [(&str, ProfileFn); 3] = [
        (CALIBRATION_FAMILIES[0], Arc::new(move |r: f64| C64::new(r.powi(kf) * (-0.5 * r * r).exp(), 0.0))),
        (CALIBRATION_FAMILIES[1], Arc::new(move |r: f64| C64::new(r.powi(kf) * (-r * r / 3.0).exp(), 0.0))),
        (CALIBRATION_FAMILIES[2], Arc::new(move |r: f64| C64::new(r.powi(kf) * r.cos() * (-0.5 * r * r).exp(), 0.0))),
    ];
    fams.into_iter()
        .map(|(label, g)| RadialProfile::new(n, k, (0.0, 40.0), 1.0, k as f64, label, g))
        .collect()
}

/// Degree-`k` coefficient of the grid field on the sphere of radius `ρ`,
/// by projection of the interpolated restriction onto `Y_k`.
pub fn grid_sphere_coefficient(f: &GridField, k: usize, rho: f64, resolution: usize) -> Result<C64> {
    let n = f.grid().n;
    let sphere = SymbolSpec::sphere(n).build()?;
    let q = build_quadrature(&sphere, rho, resolution)?;
    let values = f.restrict(&q.nodes)?;
    let mut acc = C64::new(0.0, 0.0);
    for ((x, w), v) in q.nodes.iter().zip(&q.weights).zip(&values) {
        let omega: Vec<f64> = x.iter().map(|c| c / rho).collect();
        acc += v * (w * harmonic(n, k, &omega)?);
    }
    Ok(acc / (rho.powi(n as i32 - 1) * harmonic_norm_sq(n, k)?))
}

/// Fits `κ_{n,k}` as the mean ratio of grid to radial coefficients over the
/// calibration families and radii.
pub fn calibrate_trace_kernel(n: usize, k: usize, grid: Grid) -> Result<KernelEntry> {
    let mut ratios = Vec::new();
    for p in calibration_profiles(n, k)? {
        let f = p.to_grid(grid)?;
        for &rho in &CALIBRATION_RADII {
            let direct = grid_sphere_coefficient(&f, k, rho, CALIBRATION_RESOLUTION)?;
            ratios.push(direct / p.hankel_integral(rho)?);
        }
    }
    let mean = ratios.iter().sum::<C64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - mean).norm() / mean.norm()).fold(0.0, f64::max);
    Ok(KernelEntry { n, k, re: mean.re, im: mean.im, spread, samples: ratios.len() })
}

/// Builds the full table for `n ∈ {2, 3}`, `k ∈ {0, 1, 2}` on default grids.
pub fn calibrate_kernel_table() -> Result<KernelTable> {
    let mut entries = Vec::new();
    for n in 2..=3 {
        let grid = Grid::default_for(n)?;
        for k in 0..=2 {
            entries.push(calibrate_trace_kernel(n, k, grid)?);
        }
    }
    Ok(KernelTable {
        version: KERNEL_TABLE_VERSION,
        radii: CALIBRATION_RADII.to_vec(),
        families: CALIBRATION_FAMILIES.iter().map(|s| s.to_string()).collect(),
        entries,
    })
}

/// `c_k(ρ)` with the stored kernel constant.
pub fn radial_trace_coefficient(p: &RadialProfile, rho: f64) -> Result<C64> {
    let kappa = KernelTable::stored()?.coefficient(p.n(), p.k())?;
    Ok(kappa * p.hankel_integral(rho)?)
}

/// `(ρ^{n-1} ∫_{S^{n-1}} |f(ρω)|² dω)^{1/2} = ρ^{(n-1)/2} |c_k(ρ)| ‖Y_k‖`.
pub fn radial_trace_norm(p: &RadialProfile, rho: f64) -> Result<f64> {
    let c = radial_trace_coefficient(p, rho)?;
    Ok(rho.powf(0.5 * (p.n() as f64 - 1.0)) * c.norm() * harmonic_norm_sq(p.n(), p.k())?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::sphere_rule;

    #[test]
    fn harmonic_norms_match_quadrature() {
        for (n, kmax) in [(2, 4), (3, 4), (4, 0)] {
            let (nodes, w) = sphere_rule(n, 48).unwrap();
            for k in 0..=kmax {
                let q: f64 = nodes.iter().zip(&w).map(|(x, w)| w * harmonic(n, k, x.as_slice()).unwrap().powi(2)).sum();
                let exact = harmonic_norm_sq(n, k).unwrap();
                assert!(((q - exact) / exact).abs() < 1e-12, "n={n} k={k}");
            }
        }
        assert!(harmonic(4, 1, &[1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn profile_norm_matches_closed_form() {
        // n = 3, g = e^{-r²/2}: ∫ e^{-r²} r² dr = √π / 4
        let p = RadialProfile::new(3, 0, (0.0, 40.0), 1.0, 0.0, "gauss", Arc::new(|r: f64| C64::new((-0.5 * r * r).exp(), 0.0)))
            .unwrap();
        let exact = (4.0 * PI * PI.sqrt() / 4.0 * (2.0 * PI).powi(-3)).sqrt();
        assert!(((p.l2_norm().unwrap() - exact) / exact).abs() < 1e-13);
    }

    #[test]
    fn homogeneous_norm_flags_origin_divergence() {
        let p = RadialProfile::new(3, 0, (0.0, 40.0), 1.0, 0.0, "gauss", Arc::new(|r: f64| C64::new((-0.5 * r * r).exp(), 0.0)))
            .unwrap();
        assert!(p.sobolev_norm(-1.5, SobolevFlavor::Homogeneous).unwrap().is_infinite());
        assert!(p.sobolev_norm(-1.4, SobolevFlavor::Homogeneous).unwrap().is_finite());
    }

    #[test]
    fn narrow_bump_coefficient_vanishes_at_bessel_zeros() {
        // n = 3, k = 0: J_{1/2}(r₀ρ) = 0 at r₀ρ = π
        let r0 = 2.0;
        let d = 1e-3;
        let bump = Arc::new(move |r: f64| {
            let y = (r - r0) / d;
            C64::new(if y.abs() < 1.0 { (1.0 - 1.0 / (1.0 - y * y)).exp() } else { 0.0 }, 0.0)
        });
        let p = RadialProfile::new(3, 0, (r0 - d, r0 + d), d / 4.0, 0.0, "bump", bump).unwrap();
        let at_zero = p.hankel_integral(PI / r0).unwrap().norm();
        let away = p.hankel_integral(0.5 * PI / r0).unwrap().norm();
        assert!(at_zero < 1e-6 * away, "{at_zero} vs {away}");
    }
}
