use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::CsvRow;
use super::trace::trace_bound;
use crate::constants::ConstantResult;
use crate::fields::{make_profile, radial_trace_norm, SobolevFlavor, TestFunctionSpec};
use crate::special::WeightSpec;
use crate::{Error, Result};

/// Truncated cs-optimal profiles `J_{ν(k*)}(r t*) r^{1-n/2} / w(r)²` on
/// `(0, R]` measured against the sharp constant at `ρ = t*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRun {
    pub n: usize,
    pub w: WeightSpec,
    pub t_star: f64,
    pub k_star: usize,
    pub constant: f64,
    /// `C √t* σ(t*)`
    pub target: f64,
    pub truncations: Vec<f64>,
    pub trace_norms: Vec<f64>,
    pub sobolev_norms: Vec<f64>,
    /// Trace norm over Sobolev norm.
    pub ratios: Vec<f64>,
    /// `ratio / target`
    pub attainment: Vec<f64>,
    /// Attainment of `e^{-|x|²/2}` at the same `ρ`.
    pub gaussian_attainment: f64,
    /// Ratios nondecreasing along the ladder up to 1e-3.
    pub monotone: bool,
    /// Every attainment at most `1 + 1e-3`.
    pub bounded: bool,
}

impl SharpnessRun {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        (0..self.truncations.len())
            .map(|i| CsvRow {
                rho_or_r: self.truncations[i],
                lhs: self.trace_norms[i],
                rhs: self.target * self.sobolev_norms[i],
                ratio: self.attainment[i],
            })
            .collect()
    }
}

/// Runs the truncation ladder with `(t*, k*)` and `C` taken from `constant`,
/// which must be a Bessel-supremum trace constant for the weights `σ`, `w`.
pub fn sharpness_run(w: WeightSpec, ladder: &[f64], constant: &ConstantResult) -> Result<SharpnessRun> {
    let n = constant.n;
    let at = constant
        .attaining
        .ok_or_else(|| Error::InvalidParameter("the constant carries no attaining (t, k)".into()))?;
    if !constant.is_finite() {
        return Err(Error::Hypothesis("the trace constant is infinite for these weights".into()));
    }
    if ladder.is_empty() || ladder.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("truncations must be positive and finite".into()));
    }
    if ladder.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter("truncations must be strictly increasing".into()));
    }
    let flavor = SobolevFlavor::Weight(w);
    let target = trace_bound(constant, at.t);
    let rows = ladder
        .par_iter()
        .map(|&r| {
            let p = make_profile(&TestFunctionSpec::CsOptimal { n, k: at.k, t: at.t, weight: w, truncation: r })?;
            Ok((radial_trace_norm(&p, at.t)?, p.sobolev_norm(0.0, flavor)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (trace_norms, sobolev_norms): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let ratios: Vec<f64> = trace_norms.iter().zip(&sobolev_norms).map(|(a, b)| a / b).collect();
    let attainment: Vec<f64> = ratios.iter().map(|r| r / target).collect();

    let gauss = make_profile(&TestFunctionSpec::Gaussian { n })?;
    let gaussian_attainment = radial_trace_norm(&gauss, at.t)? / gauss.sobolev_norm(0.0, flavor)? / target;

    let monotone = ratios.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-3));
    let bounded = attainment.iter().all(|a| *a <= 1.0 + 1e-3);
    Ok(SharpnessRun {
        n,
        w,
        t_star: at.t,
        k_star: at.k,
        constant: constant.value,
        target,
        truncations: ladder.to_vec(),
        trace_norms,
        sobolev_norms,
        ratios,
        attainment,
        gaussian_attainment,
        monotone,
        bounded,
    })
}
