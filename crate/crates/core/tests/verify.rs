use proptest::prelude::*;
use sharptrace::constants::*;
use sharptrace::fields::*;
use sharptrace::special::WeightSpec;
use sharptrace::surfaces::build_quadrature;
use sharptrace::symbols::SymbolSpec;
use sharptrace::verify::*;
use sharptrace::Error;
use std::f64::consts::PI;
use std::sync::Arc;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sphere(n: usize) -> sharptrace::symbols::HomogeneousSymbol {
    SymbolSpec::sphere(n).build().unwrap()
}

#[test]
fn gaussian_trace_on_unit_sphere() {
    let expected = (-0.5f64).exp() * (4.0 * PI).sqrt();
    let q = build_quadrature(&sphere(3), 1.0, 48).unwrap();
    let tf = make_test_function(&TestFunctionSpec::Gaussian { n: 3 }, Some(Grid::default_for(3).unwrap())).unwrap();
    let grid = trace_norm(FieldRef::Grid(tf.grid.as_ref().unwrap()), &q).unwrap();
    let radial = trace_norm(FieldRef::Radial(tf.profile.as_ref().unwrap()), &q).unwrap();
    assert!(rel(grid, expected) < 1e-8, "{grid} vs {expected}");
    assert!(rel(radial, expected) < 1e-6, "{radial} vs {expected}");
}

#[test]
fn degree_one_harmonic_trace() {
    // equals x₁ on the unit sphere
    let f = GridField::from_space_fn(Grid::default_for(3).unwrap(), |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        C64::new(x[0] * (-(r2 - 1.0) / 2.0).exp(), 0.0)
    })
    .unwrap();
    let q = build_quadrature(&sphere(3), 1.0, 48).unwrap();
    let t = trace_norm(FieldRef::Grid(&f), &q).unwrap();
    assert!(rel(t, (4.0 * PI / 3.0).sqrt()) < 1e-7, "{t}");
}

#[test]
fn surface_beyond_the_grid_is_rejected() {
    let tf = make_test_function(&TestFunctionSpec::Gaussian { n: 2 }, Some(Grid::default_for(2).unwrap())).unwrap();
    let q = build_quadrature(&sphere(2), 9.0, 32).unwrap();
    assert!(matches!(trace_norm(FieldRef::Grid(tf.grid.as_ref().unwrap()), &q), Err(Error::OutsideGrid(_))));
}

#[test]
fn radial_profiles_need_a_round_sphere() {
    let p = make_profile(&TestFunctionSpec::Gaussian { n: 2 }).unwrap();
    let q = build_quadrature(&SymbolSpec::diagonal(&[1.0, 4.0]).build().unwrap(), 1.0, 32).unwrap();
    assert!(matches!(trace_norm(FieldRef::Radial(&p), &q), Err(Error::InvalidParameter(_))));
}

#[test]
fn gaussian_ratio_against_sharp_constant() {
    let p = make_profile(&TestFunctionSpec::Gaussian { n: 3 }).unwrap();
    let r = trace_ratio(FieldRef::Radial(&p), &sphere(3), 1.0, 1.0, SobolevFlavor::Homogeneous, 32).unwrap();
    let expected = (-0.5f64).exp() * (4.0 * PI).sqrt() / (1.5 * PI.powf(1.5)).sqrt();
    assert!(rel(r.ratio, expected) < 1e-6, "{} vs {expected}", r.ratio);
    assert!((r.ratio - 0.744).abs() < 1e-3 && r.ratio <= 1.0);
}

#[test]
fn divergent_sobolev_norm_gives_zero_ratio() {
    // ‖·‖_{Ḣ^{-2}} of a function with f̂(0) ≠ 0 diverges in n = 3
    let p = make_profile(&TestFunctionSpec::Gaussian { n: 3 }).unwrap();
    let r = trace_ratio(FieldRef::Radial(&p), &sphere(3), 1.0, -2.0, SobolevFlavor::Homogeneous, 16).unwrap();
    assert!(r.is_divergent() && r.ratio == 0.0);
}

#[test]
fn trace_report_over_radii_is_bounded() {
    let tf = make_test_function(&TestFunctionSpec::Gaussian { n: 3 }, Some(Grid::default_for(3).unwrap())).unwrap();
    let c = gamma_closed_form_constant(3, 1.0).unwrap();
    let rep = TraceReport::for_field(
        FieldRef::Grid(tf.grid.as_ref().unwrap()),
        &sphere(3),
        &[0.5, 1.0, 2.0, 3.0],
        1.0,
        SobolevFlavor::Homogeneous,
        32,
        Some(&c),
    )
    .unwrap();
    assert_eq!(rep.rows.len(), 4);
    assert!(rep.max_ratio() < 1.0);
    let mut buf = Vec::new();
    write_csv(&rep.csv_rows(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("rho_or_R,lhs,rhs,ratio\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn rho_scan_slopes_for_power_weights() {
    for n in [2, 3] {
        for s in [0.6, 0.75, 1.0] {
            if s >= 0.5 * n as f64 {
                continue;
            }
            let c = gamma_closed_form_constant(n, s).unwrap();
            let rhos: Vec<f64> = (0..8).map(|i| 0.5 * 2f64.powf(i as f64 * 0.5)).collect();
            let rep = rho_scan(&sphere(n), WeightSpec::power(s), &rhos, &c, 200.0).unwrap();
            let fit = rep.fit.unwrap();
            assert!((fit.slope - (s - 0.5)).abs() < 0.05, "n={n} s={s}: slope {}", fit.slope);
            // the supremum over the family is the sharp constant itself
            for row in &rep.rows {
                assert!((row.ratio - 1.0).abs() < 1e-6, "n={n} s={s} ρ={}: {}", row.rho, row.ratio);
            }
        }
    }
}

#[test]
fn rho_scan_refuses_short_lists_and_other_symbols() {
    let c = gamma_closed_form_constant(3, 1.0).unwrap();
    assert!(rho_scan(&sphere(3), WeightSpec::power(1.0), &[1.0, 2.0, 4.0], &c, 200.0).is_err());
    let ell = SymbolSpec::diagonal(&[1.0, 4.0, 1.0]).build().unwrap();
    assert!(rho_scan(&ell, WeightSpec::power(1.0), &[1.0, 2.0, 4.0, 8.0], &c, 200.0).is_err());
}

#[test]
fn sharpness_improves_and_beats_the_gaussian() {
    let s = 1.25;
    let c = c1_trace_constant(3, WeightSpec::power(s - 1.0), WeightSpec::power(s), SupremumSearch::default()).unwrap();
    let run = sharpness_run(WeightSpec::power(s), &[10.0, 40.0, 160.0], &c).unwrap();
    assert!(run.monotone && run.bounded, "{:?}", run.attainment);
    assert!(run.attainment[2] > 0.9, "{:?}", run.attainment);
    assert!(run.attainment.iter().all(|a| *a >= run.gaussian_attainment));
    assert_eq!(run.csv_rows().len(), 3);
}

#[test]
fn sharpness_needs_an_attaining_pair() {
    let c = gamma_closed_form_constant(3, 1.0).unwrap();
    assert!(sharpness_run(WeightSpec::power(1.0), &[10.0, 40.0], &c).is_err());
}

#[test]
fn radial_wedge_trace_matches_grid_operator() {
    let grid = Grid::new(3, 128, 32.0).unwrap();
    let spec = TestFunctionSpec::HarmonicModulated { n: 3, k: 2, center: 1.0, width: 0.7 };
    let tf = make_test_function(&spec, Some(grid)).unwrap();
    let sym = Arc::new(sphere(3));
    let comps = wedge_operator_apply(WedgeStyle::BareNormal, &sym, tf.grid.as_ref().unwrap()).unwrap();
    let q = build_quadrature(sym.as_ref(), 1.2, 48).unwrap();
    let grid_sq: f64 = comps.iter().map(|c| trace_norm(FieldRef::Grid(c), &q).unwrap().powi(2)).sum();
    let radial = wedge_trace_norm_radial(tf.profile.as_ref().unwrap(), 1.2).unwrap();
    assert!(rel(grid_sq.sqrt(), radial) < 1e-4, "{} vs {radial}", grid_sq.sqrt());
}

#[test]
fn critical_contrast_on_the_sphere() {
    let rep = critical_comparison(&sphere(3), 1, &[10.0, 100.0, 1000.0]).unwrap();
    assert!(rep.plain_increasing);
    assert!(rep.wedge_spread.unwrap() <= 2.0);
    let zero = critical_comparison(&sphere(3), 0, &[10.0, 100.0]).unwrap();
    assert!(zero.rows.iter().all(|r| r.wedge == 0.0) && zero.plain_increasing);
}

#[test]
fn critical_comparison_hypotheses() {
    let quartic = SymbolSpec::Quartic { n: 3 }.build().unwrap();
    assert!(matches!(critical_comparison(&quartic, 1, &[10.0, 100.0]), Err(Error::Hypothesis(_))));
    let ell = SymbolSpec::diagonal(&[1.0, 2.0, 3.0]).build().unwrap();
    assert!(matches!(critical_comparison(&ell, 1, &[10.0, 100.0]), Err(Error::InvalidParameter(_))));
}

#[test]
fn duality_one_sided_and_symmetric() {
    let sym = sphere(2);
    let f = make_profile(&TestFunctionSpec::Gaussian { n: 2 }).unwrap();
    let opts = DualityOptions::default();
    let one = duality_check(&sym, TimeProfile::Bump { lo: 1.0, hi: 2.0 }, &f, &opts).unwrap();
    assert!(one.relative_gap < 1e-5 && one.identity_holds && one.support_hypothesis, "{one:?}");
    let two = duality_check(&sym, TimeProfile::SymmetricBump { lo: 1.0, hi: 2.0 }, &f, &opts).unwrap();
    assert!(two.relative_gap < 1e-5);
    assert!(!two.support_hypothesis && !two.identity_holds);
    assert!((two.identity_ratio - 2.0).abs() < 1e-6, "{}", two.identity_ratio);
}

#[test]
fn duality_warns_when_support_touches_zero() {
    let sym = sphere(2);
    let f = make_profile(&TestFunctionSpec::Gaussian { n: 2 }).unwrap();
    let opts = DualityOptions { grid: Grid::new(2, 256, 128.0).unwrap(), ..Default::default() };
    let rep = duality_check(&sym, TimeProfile::Bump { lo: 0.0, hi: 1.0 }, &f, &opts).unwrap();
    assert!(!rep.warnings.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dilation_identity(lambda in 0.8f64..1.25, rho in 0.6f64..1.5, c in -0.3f64..0.3) {
        let grid = Grid::new(3, 128, 16.0).unwrap();
        let f = |x: &[f64]| {
            let d: f64 = x.iter().enumerate().map(|(i, v)| (v - if i == 0 { c } else { 0.0 }).powi(2)).sum();
            C64::new((1.0 + x[1]) * (-d / 2.0).exp(), x[2] * (-d).exp())
        };
        let base = GridField::from_space_fn(grid, f).unwrap();
        let scaled = GridField::from_space_fn(grid, |x| f(&x.iter().map(|v| lambda * v).collect::<Vec<_>>())).unwrap();
        let sym = sphere(3);
        let lhs = trace_norm(FieldRef::Grid(&scaled), &build_quadrature(&sym, rho, 40).unwrap()).unwrap();
        let rhs = trace_norm(FieldRef::Grid(&base), &build_quadrature(&sym, lambda * rho, 40).unwrap()).unwrap();
        prop_assert!(rel(lhs, lambda.powf(-1.0) * rhs) < 1e-6, "{} vs {}", lhs, lambda.powf(-1.0) * rhs);
    }

    #[test]
    fn ratio_dilation_bookkeeping(lambda in 0.8f64..1.25, rho in 0.6f64..1.5) {
        // ratio(f(λ·), ρ) = λ^{1/2 - s} ratio(f, λρ) with s = 1
        let grid = Grid::new(3, 128, 16.0).unwrap();
        let f = |x: &[f64]| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            C64::new((1.0 + x[0] - 0.5 * x[1] * x[2]) * (-r2 / 2.0).exp(), 0.0)
        };
        let base = GridField::from_space_fn(grid, f).unwrap();
        let scaled = GridField::from_space_fn(grid, |x| f(&x.iter().map(|v| lambda * v).collect::<Vec<_>>())).unwrap();
        let sym = sphere(3);
        let a = trace_ratio(FieldRef::Grid(&scaled), &sym, rho, 1.0, SobolevFlavor::Homogeneous, 40).unwrap().ratio;
        let b = trace_ratio(FieldRef::Grid(&base), &sym, lambda * rho, 1.0, SobolevFlavor::Homogeneous, 40).unwrap().ratio;
        prop_assert!(rel(a, lambda.powf(-0.5) * b) < 1e-6, "{} vs {}", a, lambda.powf(-0.5) * b);
    }

    #[test]
    fn random_fields_respect_the_sharp_constant(seed in 0u64..1000, s in prop::sample::select(vec![0.75, 1.0, 1.25])) {
        let c = gamma_closed_form_constant(3, s).unwrap();
        let f = random_band_limited(Grid::default_for(3).unwrap(), seed, 6, 3.0).unwrap();
        let r = trace_ratio(FieldRef::Grid(&f), &sphere(3), 1.0, s, SobolevFlavor::Homogeneous, 48).unwrap();
        prop_assert!(r.ratio <= c.value * (1.0 + 1e-3), "ratio {} vs C {}", r.ratio, c.value);
    }

    #[test]
    fn exponent_fit_recovers_slopes(slope in -2.0f64..2.0, scale in 0.1f64..10.0, points in 4usize..12) {
        let x: Vec<f64> = (0..points).map(|i| 1.3f64.powi(i as i32)).collect();
        let y: Vec<f64> = x.iter().map(|v| scale * v.powf(slope)).collect();
        let fit = fit_exponent(&x, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert_eq!(fit.points_used, if points >= 6 { points - 2 } else { points });
    }
}
