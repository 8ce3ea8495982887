//! Quadrature on dilated level sets `ρΣ_a` and the coarea change of
//! variables `dξ = 2ρ^{n-1} / |∇a(ω)| dω dρ`.
//!
//! `Σ_a` is star-shaped, so it is the radial graph `θ ↦ r(θ)θ` over the unit
//! sphere with `r = a(θ)^{-1/2}`, and its area element is
//! `r^{n-2} √(r² + |∇_S r|²) dθ`.
//!
//! The weights of a [`SurfaceQuadrature`] carry the measure `ρ^{n-1} dω`,
//! where `dω` is the surface measure of `Σ_a` transported to `ρΣ_a` by the
//! dilation; the total mass is `ρ^{n-1} |Σ_a|`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::symbols::Symbol;
use crate::{Error, Result};

/// Nodes on the unit sphere `S^{n-1}` with weights for its surface measure.
pub fn sphere_rule(n: usize, resolution: usize) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    match n {
        0 | 1 => Err(Error::InvalidParameter(format!("sphere rules need n ≥ 2, got {n}"))),
        2 => {
            let rule = gauss_legendre(resolution).mapped(0.0, 2.0 * PI);
            let nodes = rule.nodes.iter().map(|t| DVector::from_vec(vec![t.cos(), t.sin()])).collect();
            Ok((nodes, rule.weights))
        }
        3 => {
            let z = gauss_legendre(resolution);
            let m = 2 * resolution;
            let dphi = 2.0 * PI / m as f64;
            let mut nodes = Vec::with_capacity(resolution * m);
            let mut weights = Vec::with_capacity(resolution * m);
            for (&zi, &wi) in z.nodes.iter().zip(&z.weights) {
                let s = (1.0 - zi * zi).sqrt();
                for j in 0..m {
                    let ph = dphi * (j as f64 + 0.5);
                    nodes.push(DVector::from_vec(vec![s * ph.cos(), s * ph.sin(), zi]));
                    weights.push(wi * dphi);
                }
            }
            Ok((nodes, weights))
        }
        _ => {
            // θ = (√(1-t²) φ, t), dθ = (1-t²)^{(n-3)/2} dt dφ
            let half = 0.5 * (n as f64 - 3.0);
            let t = gauss_jacobi(resolution, half, half)?;
            let (inner, inner_w) = sphere_rule(n - 1, resolution)?;
            let mut nodes = Vec::with_capacity(t.len() * inner.len());
            let mut weights = Vec::with_capacity(t.len() * inner.len());
            for (&ti, &wi) in t.nodes.iter().zip(&t.weights) {
                let s = (1.0 - ti * ti).sqrt();
                for (phi, &wp) in inner.iter().zip(&inner_w) {
                    let mut v = DVector::zeros(n);
                    v.rows_mut(0, n - 1).copy_from(&(phi * s));
                    v[n - 1] = ti;
                    nodes.push(v);
                    weights.push(wi * wp);
                }
            }
            Ok((nodes, weights))
        }
    }
}

#[derive(Clone, Debug)]
pub struct SurfaceQuadrature {
    pub n: usize,
    pub rho: f64,
    pub resolution: usize,
    /// Points of `ρΣ_a`.
    pub nodes: Vec<Vec<f64>>,
    /// Weights for `ρ^{n-1} dω`.
    pub weights: Vec<f64>,
    /// `|∇a|` at the corresponding points of `Σ_a`.
    pub grad_norms: Vec<f64>,
}

/// Product rule on `ρΣ_a`.
pub fn build_quadrature(sym: &dyn Symbol, rho: f64, resolution: usize) -> Result<SurfaceQuadrature> {
    if resolution < 8 {
        return Err(Error::InvalidParameter(format!("resolution must be at least 8, got {resolution}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("ρ must be positive, got {rho}")));
    }
    let n = sym.dim();
    let (dirs, sw) = sphere_rule(n, resolution)?;
    let scale = rho.powi(n as i32 - 1);
    let mut nodes = Vec::with_capacity(dirs.len());
    let mut weights = Vec::with_capacity(dirs.len());
    let mut grad_norms = Vec::with_capacity(dirs.len());
    for (theta, w) in dirs.iter().zip(sw) {
        let jet = sym.jet(theta.as_slice())?;
        let r = jet.value.powf(-0.5);
        let tangential = &jet.gradient - theta * theta.dot(&jet.gradient);
        let grad_s = 0.5 * jet.value.powf(-1.5) * tangential.norm();
        let area = r.powi(n as i32 - 2) * (r * r + grad_s * grad_s).sqrt();
        nodes.push((theta * (rho * r)).iter().copied().collect());
        weights.push(w * area * scale);
        // ∇a is homogeneous of degree one
        grad_norms.push(jet.gradient.norm() * r);
    }
    Ok(SurfaceQuadrature { n, rho, resolution, nodes, weights, grad_norms })
}

impl SurfaceQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weights for `2ρ^{n-1} dω / |∇a(ω)|`, the slice measure of the coarea
    /// formula.
    pub fn coarea_weights(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.grad_norms).map(|(w, g)| 2.0 * w / g).collect()
    }

    /// Largest `|a(ω)/ρ² - 1|` over the nodes.
    pub fn node_defect(&self, sym: &dyn Symbol) -> Result<f64> {
        let r2 = self.rho * self.rho;
        self.nodes
            .iter()
            .map(|x| Ok((sym.value(x)? - r2).abs() / r2))
            .try_fold(0.0f64, |m, d: Result<f64>| Ok(m.max(d?)))
    }

    /// Writes `x1,…,xn,weight` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.n).map(|i| format!("x{i}")).chain(["weight".into()]).collect();
        writeln!(out, "{}", header.join(","))?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let row: Vec<String> = x.iter().chain(std::iter::once(w)).map(|v| format!("{v:.17e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `Σ wⱼ F(ωⱼ)`.
pub fn surface_integral<F: Fn(&[f64]) -> f64>(q: &SurfaceQuadrature, f: F) -> Result<f64> {
    let values: Vec<f64> = q.nodes.iter().map(|x| f(x)).collect();
    surface_integral_values(q, &values)
}

pub fn surface_integral_values(q: &SurfaceQuadrature, values: &[f64]) -> Result<f64> {
    if values.len() != q.len() {
        return Err(Error::InvalidParameter(format!("{} values for {} nodes", values.len(), q.len())));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("integrand at node {i}")));
    }
    Ok(values.iter().zip(&q.weights).map(|(v, w)| v * w).sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoareaOptions {
    /// Radial truncation of the slice integral.
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Cartesian step of the volume-side trapezoid rule.
    #[serde(default = "default_step")]
    pub lhs_step: f64,
}

fn default_r_max() -> f64 {
    12.0
}

fn default_step() -> f64 {
    0.25
}

impl Default for CoareaOptions {
    fn default() -> Self {
        Self { r_max: default_r_max(), lhs_step: default_step() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoareaReport {
    pub resolution: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

/// Compares `∫ F dξ` (Cartesian trapezoid over a box containing
/// `{a ≤ r_max²}`) with `∫₀^{r_max} ∫_{Σ_a} F(ρω) 2ρ^{n-1}/|∇a(ω)| dω dρ`
/// (Gauss–Legendre panels in `ρ` times the surface rule).
pub fn coarea_verify<F>(sym: &dyn Symbol, f: F, resolution: usize, opts: CoareaOptions) -> Result<CoareaReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = sym.dim();
    let unit = build_quadrature(sym, 1.0, resolution)?;
    let slice_w = unit.coarea_weights();
    let radial = gauss_legendre(resolution);
    let panels = 4;
    let width = opts.r_max / panels as f64;
    let mut rhs = 0.0;
    for p in 0..panels {
        let rule = radial.mapped(p as f64 * width, (p + 1) as f64 * width);
        for (&rho, &wr) in rule.nodes.iter().zip(&rule.weights) {
            let scale = rho.powi(n as i32 - 1);
            let mut x = vec![0.0; n];
            let slice: f64 = unit
                .nodes
                .iter()
                .zip(&slice_w)
                .map(|(om, w)| {
                    for (xi, oi) in x.iter_mut().zip(om) {
                        *xi = rho * oi;
                    }
                    w * f(&x)
                })
                .sum();
            rhs += wr * scale * slice;
        }
    }

    let extent = unit.nodes.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())) * opts.r_max;
    let h = opts.lhs_step;
    let half = (extent / h).ceil() as i64;
    let side = (2 * half + 1) as usize;
    let coord = |i: usize| (i as i64 - half) as f64 * h;
    let total_points = side.pow(n as u32 - 1);
    let lhs: f64 = (0..side)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![0.0; n];
            x[0] = coord(i0);
            let mut acc = 0.0;
            for rest in 0..total_points {
                let mut r = rest;
                for xk in x.iter_mut().skip(1) {
                    *xk = coord(r % side);
                    r /= side;
                }
                acc += f(&x);
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        * h.powi(n as i32);
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::NonFinite("coarea integrand".into()));
    }
    Ok(CoareaReport { resolution, lhs, rhs, relative_gap: (lhs - rhs).abs() / lhs.abs() })
}
