//! Closed-form test functions, as grid fields and/or radial profiles.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use super::grid::{Grid, GridField};
use super::radial::RadialProfile;
use crate::special::{BesselEvaluator, WeightSpec};
use crate::{Error, Result};

type C64 = Complex64;

/// Gaussian profiles are cut where `e^{-r²/2}` underflows.
const GAUSSIAN_CUTOFF: f64 = 40.0;

fn default_width() -> f64 {
    0.1
}

fn default_one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunctionSpec {
    /// `f = e^{-|x|²/2}`, `f̂ = (2π)^{n/2} e^{-|ξ|²/2}`.
    Gaussian { n: usize },
    /// Radial `f̂` equal to a smooth bump supported in `[radius - width, radius + width]`.
    Shell {
        n: usize,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default = "default_one")]
        radius: f64,
    },
    /// `g(r) = J_{ν(k)}(rt) r^{1-n/2} / w(r)²` on `(0, R]`.
    CsOptimal { n: usize, k: usize, t: f64, weight: WeightSpec, truncation: f64 },
    /// `g(r) = e^{-((r - center)/width)²}` times `Y_k`.
    HarmonicModulated {
        n: usize,
        k: usize,
        #[serde(default = "default_one")]
        center: f64,
        #[serde(default = "default_one")]
        width: f64,
    },
}

impl TestFunctionSpec {
    pub fn n(&self) -> usize {
        match *self {
            Self::Gaussian { n } | Self::Shell { n, .. } | Self::CsOptimal { n, .. } | Self::HarmonicModulated { n, .. } => n,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub spec: TestFunctionSpec,
    pub grid: Option<GridField>,
    pub profile: Option<RadialProfile>,
}

fn bump(y: f64) -> f64 {
    if y.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - y * y)).exp()
    } else {
        0.0
    }
}

/// The radial profile of a spec.
pub fn make_profile(spec: &TestFunctionSpec) -> Result<RadialProfile> {
    match *spec {
        TestFunctionSpec::Gaussian { n } => {
            let c = (2.0 * PI).powf(0.5 * n as f64);
            RadialProfile::new(n, 0, (0.0, GAUSSIAN_CUTOFF), 1.0, 0.0, "gaussian", Arc::new(move |r: f64| C64::new(c * (-0.5 * r * r).exp(), 0.0)))
        }
        TestFunctionSpec::Shell { n, width, radius } => {
            if !(width > 0.0 && radius > width) {
                return Err(Error::InvalidParameter(format!("shell needs 0 < width < radius, got {width}, {radius}")));
            }
            RadialProfile::new(
                n,
                0,
                (radius - width, radius + width),
                width / 4.0,
                0.0,
                "shell",
                Arc::new(move |r: f64| C64::new(bump((r - radius) / width), 0.0)),
            )
        }
        TestFunctionSpec::CsOptimal { n, k, t, weight, truncation } => {
            if !(t > 0.0 && truncation > 0.0 && truncation.is_finite()) {
                return Err(Error::InvalidParameter(format!("cs-optimal needs t > 0 and finite R > 0, got t={t}, R={truncation}")));
            }
            let half = 0.5 * n as f64;
            let nu = half + k as f64 - 1.0;
            let ev = BesselEvaluator::new(nu)?;
            let origin = k as f64 - 2.0 * weight.exponent_at_zero();
            RadialProfile::new(
                n,
                k,
                (0.0, truncation),
                PI / t,
                origin,
                format!("cs-optimal(k={k}, t={t}, R={truncation})"),
                Arc::new(move |r: f64| {
                    let w = weight.eval(r);
                    C64::new(ev.eval_precise(r * t) * r.powf(1.0 - half) / (w * w), 0.0)
                }),
            )
        }
        TestFunctionSpec::HarmonicModulated { n, k, center, width } => {
            if !(width > 0.0) {
                return Err(Error::InvalidParameter(format!("width must be positive, got {width}")));
            }
            RadialProfile::new(
                n,
                k,
                (0.0, center.max(0.0) + 40.0 * width),
                width,
                0.0,
                format!("harmonic-modulated(k={k})"),
                Arc::new(move |r: f64| C64::new((-((r - center) / width).powi(2)).exp(), 0.0)),
            )
        }
    }
}

/// Builds the profile and, when a grid is given, the grid field from the
/// closed-form transform.
pub fn make_test_function(spec: &TestFunctionSpec, grid: Option<Grid>) -> Result<TestFunction> {
    let profile = make_profile(spec)?;
    let field = match grid {
        None => None,
        Some(g) if g.n != spec.n() => {
            return Err(Error::InvalidParameter(format!("test function is {}-dimensional, grid is {}", spec.n(), g.n)))
        }
        Some(g) => Some(profile.to_grid(g)?),
    };
    Ok(TestFunction { spec: spec.clone(), grid: field, profile: Some(profile) })
}

/// Random Gaussian wave packets `f̂(ξ) = Σ c_j e^{-|ξ - ξ_j|²/(2δ_j²)}` with
/// complex normal `c_j`, centres uniform in the ball of radius `band`, and
/// `δ_j ∈ [0.8, 1.5]`.
pub fn random_band_limited(grid: Grid, seed: u64, packets: usize, band: f64) -> Result<GridField> {
    if packets == 0 {
        return Err(Error::InvalidParameter("at least one packet is needed".into()));
    }
    let n = grid.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(packets);
    for _ in 0..packets {
        let c = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = band * rng.random::<f64>().powf(1.0 / n as f64);
        let centre: Vec<f64> = dir.iter().map(|v| v * r / len).collect();
        let delta: f64 = rng.random_range(0.8..1.5);
        params.push((c, centre, delta));
    }
    GridField::from_frequency_fn(grid, |xi| {
        params
            .iter()
            .map(|(c, centre, delta)| {
                let d2: f64 = xi.iter().zip(centre).map(|(a, b)| (a - b).powi(2)).sum();
                c * (-0.5 * d2 / (delta * delta)).exp()
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::SobolevFlavor;

    #[test]
    fn gaussian_transform_at_origin() {
        let f = make_test_function(&TestFunctionSpec::Gaussian { n: 3 }, Some(Grid::default_for(3).unwrap())).unwrap();
        let g = f.grid.unwrap();
        let v = g.frequency()[ndarray::IxDyn(&[0, 0, 0])];
        assert!((v.re - (2.0 * PI).powf(1.5)).abs() < 1e-12);
        let x0 = g.space()[ndarray::IxDyn(&[48, 48, 48])];
        assert!((x0.re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shell_support() {
        let p = make_profile(&TestFunctionSpec::Shell { n: 3, width: 0.1, radius: 1.0 }).unwrap();
        let (lo, hi) = p.support();
        assert!((lo - 0.9).abs() < 1e-15 && (hi - 1.1).abs() < 1e-15);
        assert_eq!(p.value(0.89).norm(), 0.0);
        assert!(p.value(1.0).norm() > 0.99);
    }

    #[test]
    fn harmonic_modulated_norms_agree() {
        // f̂ jumps at ξ = 0 (degree-1 harmonic times g(0) ≠ 0); the origin
        // cell dominates the grid error, so the frequency step is refined
        for grid in [Grid::new(2, 1024, 128.0).unwrap(), Grid::new(3, 128, 32.0).unwrap()] {
            let n = grid.n;
            let spec = TestFunctionSpec::HarmonicModulated { n, k: 1, center: 1.0, width: 1.0 };
            let f = make_test_function(&spec, Some(grid)).unwrap();
            let radial = f.profile.unwrap().l2_norm().unwrap();
            let grid = f.grid.unwrap().sobolev_norm(0.0, SobolevFlavor::Homogeneous);
            assert!(((radial - grid) / radial).abs() < 1e-4, "n={n}: {radial} vs {grid}");
        }
    }

    #[test]
    fn unknown_family_is_rejected() {
        let err = serde_json::from_str::<TestFunctionSpec>(r#"{"family": "sawtooth", "n": 2}"#);
        assert!(err.is_err());
    }
}
