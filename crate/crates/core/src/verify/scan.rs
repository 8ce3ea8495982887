use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::{trace_bound, TraceReport, TraceRow};
use crate::constants::ConstantResult;
use crate::special::{weighted_bessel_integral_with, BesselEvaluator, WeightSpec};
use crate::symbols::{HomogeneousSymbol, Symbol};
use crate::{Error, Result};

/// Least-squares slope of `log y` against `log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// `slope ± 2 stderr`
    pub band: [f64; 2],
    pub points_used: usize,
}

/// Fits `log y = slope · log x + intercept`. With six or more points the
/// smallest and largest `x` are left out.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> Result<ExponentFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("x and y lengths differ".into()));
    }
    if x.len() < 4 {
        return Err(Error::InvalidParameter(format!("an exponent fit needs at least 4 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("an exponent fit needs positive finite data".into()));
    }
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() >= 6 {
        pts = pts[1..pts.len() - 1].to_vec();
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("exponent fit needs distinct x values".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(ExponentFit { slope, intercept, stderr, band: [slope - 2.0 * stderr, slope + 2.0 * stderr], points_used: pts.len() })
}

/// Supremal trace ratio over the cs-optimal family at each `ρ` on the unit
/// sphere, against `C √ρ σ(ρ)`.
///
/// In the `k = 0` sector the supremum over profiles is `(ρ I(ρ))^{1/2}` with
/// `I(ρ) = ∫ J_{n/2-1}(rρ)² r / w(r)² dr`, attained as the truncation grows.
/// Rows hold `lhs` = that supremum and `rhs` = `C √ρ σ(ρ)`.
pub fn rho_scan(
    sym: &HomogeneousSymbol,
    w: WeightSpec,
    rhos: &[f64],
    constant: &ConstantResult,
    u_target: f64,
) -> Result<TraceReport> {
    if rhos.len() < 4 {
        return Err(Error::InvalidParameter(format!("a ρ-scan needs at least 4 radii, got {}", rhos.len())));
    }
    let n = sym.dim();
    if constant.n != n {
        return Err(Error::InvalidParameter(format!("constant is for n={}, symbol for n={n}", constant.n)));
    }
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    if !sym.is_isotropic() || sym.value(&e1)? != 1.0 {
        return Err(Error::InvalidParameter("the radial ρ-scan runs on the unit sphere a = |ξ|² only".into()));
    }
    if !constant.is_finite() {
        return Err(Error::Hypothesis("the trace constant is infinite for these weights".into()));
    }
    let ev = BesselEvaluator::new(0.5 * n as f64 - 1.0)?;
    let rows = rhos
        .par_iter()
        .map(|&rho| {
            let res = weighted_bessel_integral_with(&ev, rho, w, u_target / rho)?;
            if res.is_divergent() {
                return Err(Error::Hypothesis(format!("∫ J² r / w² dr diverges for w = {w:?}")));
            }
            let lhs = (rho * res.value).sqrt();
            let rhs = trace_bound(constant, rho);
            Ok(TraceRow { rho, lhs, rhs, ratio: lhs / rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_exponent(rhos, &rows.iter().map(|r| r.lhs).collect::<Vec<_>>())?;
    Ok(TraceReport {
        symbol: sym.spec().clone(),
        test_function: format!("cs-optimal(k=0, R→∞, w={w:?})"),
        columns: ["supremal trace ratio".into(), "C sqrt(rho) sigma(rho)".into()],
        rows,
        fit: Some(fit),
        constant: Some(constant.value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_fits_exactly() {
        let x: Vec<f64> = (0..8).map(|i| 2f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(0.25)).collect();
        let f = fit_exponent(&x, &y).unwrap();
        assert!((f.slope - 0.25).abs() < 1e-12 && f.stderr < 1e-12);
        assert_eq!(f.points_used, 6);
    }

    #[test]
    fn too_few_points_are_rejected() {
        assert!(fit_exponent(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
