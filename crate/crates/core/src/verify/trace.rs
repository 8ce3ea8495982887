use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::CsvRow;
use super::scan::ExponentFit;
use crate::constants::{ConstantParams, ConstantResult};
use crate::fields::{harmonic, radial_trace_coefficient, GridField, RadialProfile, SobolevFlavor};
use crate::surfaces::{build_quadrature, SurfaceQuadrature};
use crate::symbols::{HomogeneousSymbol, SymbolSpec};
use crate::{Error, Result};

/// A field that can be restricted to a surface.
#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a> {
    Grid(&'a GridField),
    Radial(&'a RadialProfile),
}

impl FieldRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            FieldRef::Grid(f) => f.grid().n,
            FieldRef::Radial(p) => p.n(),
        }
    }

    pub fn sobolev_norm(&self, s: f64, flavor: SobolevFlavor) -> Result<f64> {
        match self {
            FieldRef::Grid(f) => Ok(f.sobolev_norm(s, flavor)),
            FieldRef::Radial(p) => p.sobolev_norm(s, flavor),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FieldRef::Grid(f) => format!("grid field (n={}, N={}, L={})", f.grid().n, f.grid().size, f.grid().extent),
            FieldRef::Radial(p) => p.label().to_string(),
        }
    }
}

/// `(Σ_j w_j |f(x_j)|²)^{1/2}` over the nodes of `q`, i.e. the `L²` norm
/// of the restriction for the measure `ρ^{n-1} dω`.
///
/// Radial profiles are evaluated through their trace coefficient, which
/// only describes the restriction to a round sphere centred at 0.
pub fn trace_norm(f: FieldRef, q: &SurfaceQuadrature) -> Result<f64> {
    if f.dim() != q.n {
        return Err(Error::InvalidParameter(format!("field is {}-dimensional, surface is in R^{}", f.dim(), q.n)));
    }
    let sum: f64 = match f {
        FieldRef::Grid(g) => {
            let vals = g.restrict(&q.nodes)?;
            vals.iter().zip(&q.weights).map(|(v, w)| w * v.norm_sqr()).sum()
        }
        FieldRef::Radial(p) => {
            let round = q.nodes.iter().all(|x| {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                (r - q.rho).abs() <= 1e-12 * q.rho
            });
            if !round {
                return Err(Error::InvalidParameter("a radial profile can only be restricted to a round sphere".into()));
            }
            let c = radial_trace_coefficient(p, q.rho)?.norm_sqr();
            q.nodes
                .iter()
                .zip(&q.weights)
                .map(|(x, w)| {
                    let omega: Vec<f64> = x.iter().map(|v| v / q.rho).collect();
                    Ok(w * c * harmonic(p.n(), p.k(), &omega)?.powi(2))
                })
                .sum::<Result<f64>>()?
        }
    };
    Ok(sum.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRatio {
    pub lhs: f64,
    /// `+∞` when the Sobolev norm diverges; the ratio is then 0.
    pub rhs: f64,
    pub ratio: f64,
}

impl TraceRatio {
    pub fn is_divergent(&self) -> bool {
        self.rhs.is_infinite()
    }
}

/// Trace norm on `ρΣ_a` over the Sobolev norm of `f`.
pub fn trace_ratio(
    f: FieldRef,
    sym: &HomogeneousSymbol,
    rho: f64,
    s: f64,
    flavor: SobolevFlavor,
    resolution: usize,
) -> Result<TraceRatio> {
    let q = build_quadrature(sym, rho, resolution)?;
    let lhs = trace_norm(f, &q)?;
    let rhs = f.sobolev_norm(s, flavor)?;
    if !(rhs > 0.0) {
        return Err(Error::InvalidParameter(format!("Sobolev norm of {} vanishes", f.label())));
    }
    Ok(TraceRatio { lhs, rhs, ratio: if rhs.is_infinite() { 0.0 } else { lhs / rhs } })
}

/// `C √ρ σ(ρ)`, the right-hand side factor of the trace inequality at `ρ`.
pub fn trace_bound(constant: &ConstantResult, rho: f64) -> f64 {
    let sigma = match constant.params {
        ConstantParams::Sobolev { s } => rho.powf(s - 1.0),
        ConstantParams::Weights { sigma, .. } => sigma.eval(rho),
    };
    constant.value * rho.sqrt() * sigma
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub rho: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub symbol: SymbolSpec,
    pub test_function: String,
    /// What `lhs` and `rhs` hold in each row.
    pub columns: [String; 2],
    pub rows: Vec<TraceRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<ExponentFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
}

impl TraceReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows.iter().map(|r| CsvRow { rho_or_r: r.rho, lhs: r.lhs, rhs: r.rhs, ratio: r.ratio }).collect()
    }

    /// Largest `ratio` over the rows.
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().fold(0.0f64, |m, r| m.max(r.ratio))
    }

    /// Trace ratios of one field over a list of `ρ`, each compared with
    /// `C √ρ σ(ρ)` when a constant is given.
    pub fn for_field(
        f: FieldRef,
        sym: &HomogeneousSymbol,
        rhos: &[f64],
        s: f64,
        flavor: SobolevFlavor,
        resolution: usize,
        constant: Option<&ConstantResult>,
    ) -> Result<Self> {
        let rows = rhos
            .par_iter()
            .map(|&rho| {
                let r = trace_ratio(f, sym, rho, s, flavor, resolution)?;
                Ok(match constant {
                    Some(c) => {
                        let bound = trace_bound(c, rho) * r.rhs;
                        TraceRow { rho, lhs: r.lhs, rhs: bound, ratio: if bound.is_infinite() { 0.0 } else { r.lhs / bound } }
                    }
                    None => TraceRow { rho, lhs: r.lhs, rhs: r.rhs, ratio: r.ratio },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let columns = match constant {
            Some(_) => ["trace norm".to_string(), "C sqrt(rho) sigma(rho) times Sobolev norm".to_string()],
            None => ["trace norm".to_string(), "Sobolev norm".to_string()],
        };
        Ok(Self {
            symbol: sym.spec().clone(),
            test_function: f.label(),
            columns,
            rows,
            fit: None,
            constant: constant.map(|c| c.value),
        })
    }
}
