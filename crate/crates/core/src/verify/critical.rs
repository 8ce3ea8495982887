use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::CsvRow;
use crate::fields::{harmonic_norm_sq, make_profile, radial_trace_coefficient, radial_trace_norm, RadialProfile, SobolevFlavor, TestFunctionSpec};
use crate::special::WeightSpec;
use crate::symbols::{curvature_certificate, CurvatureCertificate, HomogeneousSymbol, Symbol, SymbolSpec};
use crate::{Error, Result};

/// Resolution of the curvature certificate required before a critical run.
pub const CRITICAL_RESOLUTION: usize = 256;

/// Trace of the bare-normal wedge `x/|x| ∧ D/|D|` of a radial profile on
/// the sphere of radius `ρ`.
///
/// On `|x| = ρ` the components are `-i ρ^{-1} L_{ij} |D|^{-1} f` with
/// `L_{ij} = x_i ∂_j - x_j ∂_i`, and `Σ_{i<j} |L_{ij} Y_k|²` integrates to
/// `k(k+n-2) ‖Y_k‖²`; `|D|^{-1} f` has the profile `g(r)/r`.
pub fn wedge_trace_norm_radial(p: &RadialProfile, rho: f64) -> Result<f64> {
    let (n, k) = (p.n(), p.k());
    if k == 0 {
        return Ok(0.0);
    }
    let h = radial_trace_coefficient(&p.divided_by_radius(), rho)?;
    let casimir = (k * (k + n - 2)) as f64;
    Ok(rho.powf(0.5 * (n as f64 - 3.0)) * h.norm() * (casimir * harmonic_norm_sq(n, k)?).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub truncation: f64,
    pub sobolev_norm: f64,
    pub plain_trace: f64,
    pub wedge_trace: f64,
    /// `‖f|_Σ‖ / ‖f‖_{Ḣ^{1/2}}`
    pub plain: f64,
    /// `‖(wedge f)|_Σ‖ / ‖f‖_{Ḣ^{1/2}}`
    pub wedge: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub symbol: SymbolSpec,
    pub k: usize,
    pub certificate: CurvatureCertificate,
    pub rows: Vec<CriticalRow>,
    /// Last plain ratio over the first.
    pub plain_growth: f64,
    /// Plain ratios strictly increasing along the ladder.
    pub plain_increasing: bool,
    /// Max over min of the wedge ratios; absent when they vanish.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wedge_spread: Option<f64>,
}

impl CriticalReport {
    /// `lhs` plain ratio, `rhs` wedge ratio, `ratio` their quotient.
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                rho_or_r: r.truncation,
                lhs: r.plain,
                rhs: r.wedge,
                ratio: if r.wedge > 0.0 { r.plain / r.wedge } else { f64::INFINITY },
            })
            .collect()
    }
}

/// Plain and wedge trace ratios at `s = 1/2` on the unit sphere for the
/// cs-optimal profiles of degree `k` with `t = 1`, `w = r^{1/2}`, truncated
/// at each `R` of the ladder.
pub fn critical_comparison(sym: &HomogeneousSymbol, k: usize, ladder: &[f64]) -> Result<CriticalReport> {
    let certificate = curvature_certificate(sym, CRITICAL_RESOLUTION)?;
    if !certificate.passed {
        return Err(Error::Hypothesis(format!(
            "curvature certificate failed: min det ∇²a = {:.3e} on Σ_a at resolution {}",
            certificate.min_det, certificate.resolution
        )));
    }
    let n = sym.dim();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    if !sym.is_isotropic() || sym.value(&e1)? != 1.0 {
        return Err(Error::InvalidParameter("the radial critical comparison runs on the unit sphere a = |ξ|² only".into()));
    }
    if ladder.len() < 2 || ladder.windows(2).any(|p| !(p[1] > p[0])) || !(ladder[0] > 0.0) {
        return Err(Error::InvalidParameter("the truncation ladder needs at least two increasing positive values".into()));
    }
    let w = WeightSpec::power(0.5);
    let rows = ladder
        .par_iter()
        .map(|&r| {
            let p = make_profile(&TestFunctionSpec::CsOptimal { n, k, t: 1.0, weight: w, truncation: r })?;
            let sobolev_norm = p.sobolev_norm(0.5, SobolevFlavor::Homogeneous)?;
            let plain_trace = radial_trace_norm(&p, 1.0)?;
            let wedge_trace = wedge_trace_norm_radial(&p, 1.0)?;
            Ok(CriticalRow {
                truncation: r,
                sobolev_norm,
                plain_trace,
                wedge_trace,
                plain: plain_trace / sobolev_norm,
                wedge: wedge_trace / sobolev_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plain_growth = rows[rows.len() - 1].plain / rows[0].plain;
    let plain_increasing = rows.windows(2).all(|p| p[1].plain > p[0].plain);
    let wedge_spread = if k == 0 {
        None
    } else {
        let hi = rows.iter().fold(0.0f64, |m, r| m.max(r.wedge));
        let lo = rows.iter().fold(f64::INFINITY, |m, r| m.min(r.wedge));
        Some(hi / lo)
    };
    Ok(CriticalReport { symbol: sym.spec().clone(), k, certificate, rows, plain_growth, plain_increasing, wedge_spread })
}
