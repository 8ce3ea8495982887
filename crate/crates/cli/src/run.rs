use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{weights, Experiment, ExperimentConfig, FieldSource};
use sharptrace::constants::{
    c1_trace_constant, convert_smoothing_to_trace, gamma_closed_form_constant, walther_smoothing_constant, ConstantParams,
    ConstantResult, SupremumSearch,
};
use sharptrace::fields::{make_profile, make_test_function, random_band_limited, Grid};
use sharptrace::surfaces::{build_quadrature, coarea_verify, CoareaOptions};
use sharptrace::symbols::{check_homogeneity_euler, curvature_certificate, dual_eval, HomogeneousSymbol, Symbol, SymbolSpec};
use sharptrace::verify::{
    critical_comparison, duality_check, rho_scan, sharpness_run, CsvRow, FieldRef, TraceReport,
};
use sharptrace::{Error, Result};

pub struct Outcome {
    pub result: Value,
    pub csv: Vec<CsvRow>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn build(spec: &SymbolSpec) -> Result<HomogeneousSymbol> {
    spec.build()
}

/// The trace constant for `params`: the closed form for Sobolev exponents
/// when it exists, the Bessel supremum otherwise.
fn trace_constant(n: usize, params: &ConstantParams, search: SupremumSearch) -> Result<ConstantResult> {
    if let ConstantParams::Sobolev { s } = *params {
        if let Ok(c) = gamma_closed_form_constant(n, s) {
            return Ok(c);
        }
    }
    let (sigma, w) = weights(params);
    c1_trace_constant(n, sigma, w, search)
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    match &cfg.experiment {
        Experiment::Constants { n, params, search } => constants(*n, params, *search),
        Experiment::Trace { symbol, field, radii, s, flavor, resolution, constant, search } => {
            let sym = build(symbol)?;
            let n = sym.dim();
            let c = constant.as_ref().map(|p| trace_constant(n, p, *search)).transpose()?;
            let report = match field {
                FieldSource::ClosedForm { test_function, grid } => {
                    let tf = make_test_function(test_function, *grid)?;
                    let f = match (&tf.grid, &tf.profile) {
                        (Some(g), _) => FieldRef::Grid(g),
                        (None, Some(p)) => FieldRef::Radial(p),
                        (None, None) => return Err(Error::InvalidParameter("test function has no representation".into())),
                    };
                    TraceReport::for_field(f, &sym, radii, *s, *flavor, *resolution, c.as_ref())?
                }
                FieldSource::Random { grid, packets, band } => {
                    let grid = match grid {
                        Some(g) => *g,
                        None => Grid::default_for(n)?,
                    };
                    let f = random_band_limited(grid, cfg.seed, *packets, *band)?;
                    TraceReport::for_field(FieldRef::Grid(&f), &sym, radii, *s, *flavor, *resolution, c.as_ref())?
                }
            };
            Ok(Outcome { csv: report.csv_rows(), result: to_value(&report)? })
        }
        Experiment::RhoScan { n, params, radii, u_target, search } => {
            let c = trace_constant(*n, params, *search)?;
            let (_, w) = weights(params);
            let report = rho_scan(&SymbolSpec::sphere(*n).build()?, w, radii, &c, *u_target)?;
            Ok(Outcome { csv: report.csv_rows(), result: to_value(&report)? })
        }
        Experiment::Sharpness { n, params, truncations, search } => {
            let (sigma, w) = weights(params);
            let c = c1_trace_constant(*n, sigma, w, *search)?;
            let run = sharpness_run(w, truncations, &c)?;
            Ok(Outcome { csv: run.csv_rows(), result: to_value(&run)? })
        }
        Experiment::Critical { symbol, k, truncations } => {
            let report = critical_comparison(&build(symbol)?, *k, truncations)?;
            Ok(Outcome { csv: report.csv_rows(), result: to_value(&report)? })
        }
        Experiment::Duality { symbol, time_profile, test_function, options } => {
            let f = make_profile(test_function)?;
            let report = duality_check(&build(symbol)?, *time_profile, &f, options)?;
            Ok(Outcome { csv: report.csv_rows(), result: to_value(&report)? })
        }
        Experiment::SurfaceChecks { symbol, resolution, samples, certificate_resolution } => {
            surface_checks(&build(symbol)?, *resolution, *samples, *certificate_resolution, cfg.seed)
        }
    }
}

fn constants(n: usize, params: &ConstantParams, search: SupremumSearch) -> Result<Outcome> {
    let (sigma, w) = weights(params);
    let closed = match *params {
        ConstantParams::Sobolev { s } => Some(gamma_closed_form_constant(n, s)?),
        ConstantParams::Weights { .. } => None,
    };
    let supremum = c1_trace_constant(n, sigma, w, search)?;
    let smoothing = walther_smoothing_constant(n, sigma, w, search)?;
    let sphere = SymbolSpec::sphere(n).build()?;
    let q = build_quadrature(&sphere, 1.0, 8)?;
    let converted = if smoothing.is_finite() { Some(convert_smoothing_to_trace(&smoothing, &q.grad_norms)?.0) } else { None };

    let reference = closed.as_ref().unwrap_or(&supremum).value;
    let mut values = vec![supremum.value];
    values.extend(closed.iter().map(|c| c.value));
    values.extend(converted.iter().map(|c| c.value));
    let mut max_gap = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            if a.is_finite() && b.is_finite() {
                max_gap = max_gap.max(rel_gap(*a, *b));
            }
        }
    }
    let t_of = |c: &ConstantResult| c.attaining.map_or(f64::NAN, |a| a.t);
    let mut csv = Vec::new();
    for c in closed.iter().chain([&supremum]).chain(converted.iter()) {
        csv.push(CsvRow { rho_or_r: t_of(c), lhs: c.value, rhs: reference, ratio: c.value / reference });
    }
    let result = json!({
        "closed_form": closed,
        "bessel_supremum": supremum,
        "smoothing": smoothing,
        "converted": converted,
        "max_pairwise_gap": max_gap,
    });
    Ok(Outcome { result, csv })
}

fn surface_checks(sym: &HomogeneousSymbol, resolution: usize, samples: usize, cert_res: usize, seed: u64) -> Result<Outcome> {
    let homogeneity = check_homogeneity_euler(sym, samples, seed)?;
    let certificate = curvature_certificate(sym, cert_res)?;
    let q = build_quadrature(sym, 1.0, resolution)?;
    let node_defect = q.node_defect(sym)?;
    let gaussian = |x: &[f64]| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
    let coarea = coarea_verify(sym, gaussian, resolution, CoareaOptions::default())?;

    // a*(∇a(ξ)) = 1 on Σ_a, only meaningful with nonvanishing curvature
    let mut csv = Vec::with_capacity(q.len());
    let mut dual_defect = None;
    if certificate.passed {
        let mut worst = 0.0f64;
        for x in &q.nodes {
            let g = sym.gradient(x)?;
            let d = dual_eval(sym, g.as_slice(), 1e-12)?;
            worst = worst.max((d.value - 1.0).abs());
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            csv.push(CsvRow { rho_or_r: r, lhs: d.value, rhs: 1.0, ratio: d.value });
        }
        dual_defect = Some(worst);
    } else {
        for x in &q.nodes {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            csv.push(CsvRow { rho_or_r: r, lhs: f64::NAN, rhs: 1.0, ratio: f64::NAN });
        }
    }
    let result = json!({
        "symbol": sym.spec(),
        "homogeneity": homogeneity,
        "curvature_certificate": certificate,
        "quadrature": {
            "resolution": resolution,
            "nodes": q.len(),
            "total_mass": q.total_mass(),
            "node_defect": node_defect,
        },
        "coarea": coarea,
        "dual_defect": dual_defect,
    });
    Ok(Outcome { result, csv })
}
