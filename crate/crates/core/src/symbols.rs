//! Elliptic, positively homogeneous degree-2 symbols `a(ξ)` and their duals.
//!
//! Every symbol is evaluated together with its gradient and Hessian in
//! closed form. The dual `a*` is the degree-2 function with
//! `a*(∇a(ξ)) = 1` on `Σ_a`; equivalently `a*(x) = a(ξ)` where `∇a(ξ) = x`,
//! since `∇a` is homogeneous of degree one. Solving `∇a(ξ) = x` by Newton's
//! method needs `∇²a` to be invertible, which for these symbols is the
//! non-vanishing of the Gaussian curvature of `Σ_a`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::{Error, Result};

/// Value, gradient and Hessian at one point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

pub trait Symbol: Send + Sync {
    fn dim(&self) -> usize;

    fn jet(&self, xi: &[f64]) -> Result<Jet>;

    fn value(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.jet(xi)?.value)
    }

    fn gradient(&self, xi: &[f64]) -> Result<DVector<f64>> {
        Ok(self.jet(xi)?.gradient)
    }
}

/// Configuration form of a symbol, as it appears in experiment files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// `⟨Aξ, ξ⟩`; `A` defaults to the identity.
    Quadratic {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
    },
    /// `(Σ ξᵢ⁴)^{1/2}`
    Quartic { n: usize },
    /// `|ξ|² (1 + ε h(ξ/|ξ|))` with `h(θ) = c₀ + b·θ + θᵀCθ`.
    PerturbedSphere {
        n: usize,
        epsilon: f64,
        #[serde(default)]
        constant: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        linear: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadratic: Option<Vec<Vec<f64>>>,
    },
}

impl SymbolSpec {
    pub fn sphere(n: usize) -> Self {
        SymbolSpec::Quadratic { n, matrix: None }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { entries[i] } else { 0.0 }).collect())
            .collect();
        SymbolSpec::Quadratic { n, matrix: Some(matrix) }
    }

    pub fn build(&self) -> Result<HomogeneousSymbol> {
        make_symbol(self)
    }
}

#[derive(Clone, Debug)]
enum Family {
    Quadratic { a: DMatrix<f64> },
    Quartic,
    PerturbedSphere { eps: f64, c0: f64, b: DVector<f64>, c: DMatrix<f64> },
}

#[derive(Clone, Debug)]
pub struct HomogeneousSymbol {
    n: usize,
    family: Family,
    spec: SymbolSpec,
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter(format!("{what} must be {n}x{n}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} has non-finite entries")));
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!("{what} must be symmetric")));
    }
    Ok(m)
}

/// Builds a symbol, validating ellipticity for the family.
pub fn make_symbol(spec: &SymbolSpec) -> Result<HomogeneousSymbol> {
    let n = match *spec {
        SymbolSpec::Quadratic { n, .. } | SymbolSpec::Quartic { n } | SymbolSpec::PerturbedSphere { n, .. } => n,
    };
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {n}")));
    }
    let family = match spec {
        SymbolSpec::Quadratic { matrix, .. } => {
            let a = match matrix {
                Some(rows) => matrix_from_rows(rows, n, "quadratic matrix")?,
                None => DMatrix::identity(n, n),
            };
            if a.clone().cholesky().is_none() {
                return Err(Error::NotElliptic("quadratic matrix is not positive definite".into()));
            }
            Family::Quadratic { a }
        }
        SymbolSpec::Quartic { .. } => Family::Quartic,
        SymbolSpec::PerturbedSphere { epsilon, constant, linear, quadratic, .. } => {
            let b = match linear {
                Some(v) if v.len() == n => DVector::from_column_slice(v),
                Some(_) => return Err(Error::InvalidParameter(format!("linear coefficients must have length {n}"))),
                None => DVector::zeros(n),
            };
            let c = match quadratic {
                Some(rows) => matrix_from_rows(rows, n, "quadratic coefficients")?,
                None => DMatrix::zeros(n, n),
            };
            if !epsilon.is_finite() || !constant.is_finite() || b.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite perturbation coefficients".into()));
            }
            let eig = c.clone().symmetric_eigenvalues();
            let h_max = constant.abs() + b.norm() + eig.amax();
            if epsilon.abs() * h_max >= 0.5 {
                return Err(Error::NotElliptic(format!(
                    "|ε|·max|h| ≤ {:.6} must stay below 1/2",
                    epsilon.abs() * h_max
                )));
            }
            Family::PerturbedSphere { eps: *epsilon, c0: *constant, b, c }
        }
    };
    Ok(HomogeneousSymbol { n, family, spec: spec.clone() })
}

impl HomogeneousSymbol {
    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    /// `A` for `a(ξ) = ⟨Aξ, ξ⟩`.
    pub fn quadratic_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.family {
            Family::Quadratic { a } => Some(a),
            _ => None,
        }
    }

    /// True for `a(ξ) = c|ξ|²`, where the dual and the wedge constructions
    /// reduce to their rotation-invariant forms.
    pub fn is_isotropic(&self) -> bool {
        match &self.family {
            Family::Quadratic { a } => {
                let d = a[(0, 0)];
                (a - DMatrix::identity(self.n, self.n) * d).amax() == 0.0
            }
            Family::Quartic => false,
            Family::PerturbedSphere { eps, b, c, .. } => *eps == 0.0 || (b.amax() == 0.0 && c.amax() == 0.0),
        }
    }
}

impl Symbol for HomogeneousSymbol {
    fn dim(&self) -> usize {
        self.n
    }

    fn jet(&self, xi: &[f64]) -> Result<Jet> {
        if xi.len() != self.n {
            return Err(Error::InvalidParameter(format!("expected {} coordinates, got {}", self.n, xi.len())));
        }
        let x = DVector::from_column_slice(xi);
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::InvalidParameter("symbols are evaluated away from ξ = 0".into()));
        }
        let n = self.n;
        Ok(match &self.family {
            Family::Quadratic { a } => {
                let ax = a * &x;
                Jet { value: x.dot(&ax), gradient: ax * 2.0, hessian: a * 2.0 }
            }
            Family::Quartic => {
                let s: f64 = x.iter().map(|v| v.powi(4)).sum();
                let val = s.sqrt();
                let cubes = x.map(|v| v.powi(3));
                let gradient = &cubes * (2.0 / val);
                let mut hessian = &cubes * cubes.transpose() * (-4.0 / val.powi(3));
                for i in 0..n {
                    hessian[(i, i)] += 6.0 * x[i] * x[i] / val;
                }
                Jet { value: val, gradient, hessian }
            }
            Family::PerturbedSphere { eps, c0, b, c } => {
                let beta = b.dot(&x);
                let cx = c * &x;
                let base = 1.0 + eps * c0;
                let value = base * r * r + eps * r * beta + eps * x.dot(&cx);
                let gradient = &x * (2.0 * base) + (&x * (beta / r) + b * r) * *eps + &cx * (2.0 * eps);
                let outer = b * x.transpose() + &x * b.transpose();
                let proj = DMatrix::identity(n, n) / r - &x * x.transpose() / r.powi(3);
                let hessian = DMatrix::identity(n, n) * (2.0 * base)
                    + (outer / r + proj * beta) * *eps
                    + c * (2.0 * eps);
                Jet { value, gradient, hessian }
            }
        })
    }
}

/// Worst relative defects of degree-2 homogeneity and Euler's identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub samples: usize,
    pub homogeneity_defect: f64,
    pub euler_defect: f64,
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let r = v.norm();
        if r > 1e-8 {
            return v / r;
        }
    }
}

/// Samples `ξ` with `1/2 ≤ |ξ| ≤ 2` and `λ ∈ [1/4, 4]` from a seeded stream.
pub fn check_homogeneity_euler(sym: &dyn Symbol, samples: usize, seed: u64) -> Result<HomogeneityReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sym.dim();
    let mut hom: f64 = 0.0;
    let mut euler: f64 = 0.0;
    for _ in 0..samples {
        let xi = random_direction(&mut rng, n) * rng.random_range(0.5..=2.0);
        let lambda: f64 = rng.random_range(0.25..=4.0);
        let jet = sym.jet(xi.as_slice())?;
        let scaled = sym.value((&xi * lambda).as_slice())?;
        hom = hom.max((scaled - lambda * lambda * jet.value).abs() / scaled);
        euler = euler.max((jet.value - 0.5 * xi.dot(&jet.gradient)).abs() / jet.value);
    }
    Ok(HomogeneityReport { samples, homogeneity_defect: hom, euler_defect: euler })
}

/// Deterministic unit directions: an angle grid for `n = 2`, a polar ×
/// azimuth grid for `n = 3`, seeded samples above; coordinate axes are
/// always included.
pub fn sphere_directions(n: usize, resolution: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    match n {
        2 => {
            for j in 0..resolution {
                let th = 2.0 * PI * j as f64 / resolution as f64;
                out.push(DVector::from_vec(vec![th.cos(), th.sin()]));
            }
        }
        3 => {
            for i in 0..resolution {
                let th = PI * (i as f64 + 0.5) / resolution as f64;
                for j in 0..2 * resolution {
                    let ph = PI * j as f64 / resolution as f64;
                    out.push(DVector::from_vec(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]));
                }
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..resolution * resolution {
                out.push(random_direction(&mut rng, n));
            }
        }
    }
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = DVector::zeros(n);
            e[i] = sign;
            out.push(e);
        }
    }
    out
}

/// Minimum of `det ∇²a` over sampled points of `Σ_a`.
///
/// `∇²a` is homogeneous of degree zero, so sampling unit directions is the
/// same as sampling the level set.
pub fn min_hessian_det_on_level(sym: &dyn Symbol, resolution: usize) -> Result<f64> {
    Ok(curvature_certificate(sym, resolution)?.min_det)
}

/// Minimum determinant below which the curvature hypothesis is reported as
/// failed.
pub const CURVATURE_THRESHOLD: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureCertificate {
    pub resolution: usize,
    pub min_det: f64,
    pub max_det: f64,
    pub passed: bool,
}

pub fn curvature_certificate(sym: &dyn Symbol, resolution: usize) -> Result<CurvatureCertificate> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let mut min_det = f64::INFINITY;
    let mut max_det = f64::NEG_INFINITY;
    for theta in sphere_directions(sym.dim(), resolution) {
        let d = sym.jet(theta.as_slice())?.hessian.determinant();
        min_det = min_det.min(d);
        max_det = max_det.max(d);
    }
    Ok(CurvatureCertificate { resolution, min_det, max_det, passed: min_det > CURVATURE_THRESHOLD })
}

/// Result of evaluating `a*` at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualEvaluation {
    pub x: Vec<f64>,
    /// Point of `Σ_a` whose normal is parallel to `x`.
    pub xi_star: Vec<f64>,
    /// `x = λ ∇a(ξ*)`.
    pub lambda: f64,
    pub value: f64,
    /// `|x/|x| - ∇a(ξ*)/|∇a(ξ*)||`.
    pub angular_residual: f64,
    pub iterations: usize,
}

const DUAL_MAX_ITER: usize = 100;

/// Solves `∇a(ξ) = x` by damped Newton steps and returns `a*(x) = a(ξ)`.
pub fn dual_eval(sym: &dyn Symbol, x: &[f64], tol: f64) -> Result<DualEvaluation> {
    let n = sym.dim();
    if x.len() != n {
        return Err(Error::InvalidParameter(format!("expected {n} coordinates, got {}", x.len())));
    }
    let target = DVector::from_column_slice(x);
    let xn = target.norm();
    if xn == 0.0 || !xn.is_finite() {
        return Err(Error::InvalidParameter("the dual is evaluated at finite x ≠ 0".into()));
    }
    let dir = &target / xn;
    // a direction-matched start is usually inside the basin; otherwise fall
    // back to the best direction of a coarse sweep
    let start = |theta: &DVector<f64>| -> Result<DVector<f64>> {
        let g = sym.gradient(theta.as_slice())?;
        Ok(theta * (xn / g.norm()))
    };
    let first = newton_gauss_map(sym, &target, start(&dir)?, tol);
    let (xi, iterations, residual) = match first {
        Ok(v) => v,
        Err(first_err) => {
            let resolution = if n == 2 { 256 } else { 24 };
            let mut best = (f64::NEG_INFINITY, dir.clone());
            for theta in sphere_directions(n, resolution) {
                let g = sym.gradient(theta.as_slice())?;
                let c = g.dot(&dir) / g.norm();
                if c > best.0 {
                    best = (c, theta);
                }
            }
            newton_gauss_map(sym, &target, start(&best.1)?, tol).map_err(|e| match (e, first_err) {
                (Error::NoConvergence { iterations, residual }, Error::NoConvergence { residual: r0, .. }) => {
                    Error::NoConvergence { iterations, residual: residual.min(r0) }
                }
                (e, _) => e,
            })?
        }
    };
    let value = sym.value(xi.as_slice())?;
    let lambda = value.sqrt();
    Ok(DualEvaluation {
        x: x.to_vec(),
        xi_star: (&xi / lambda).iter().copied().collect(),
        lambda,
        value,
        angular_residual: residual,
        iterations,
    })
}

fn angular(g: &DVector<f64>, dir: &DVector<f64>) -> f64 {
    (g / g.norm() - dir).norm()
}

fn newton_gauss_map(
    sym: &dyn Symbol,
    target: &DVector<f64>,
    mut xi: DVector<f64>,
    tol: f64,
) -> Result<(DVector<f64>, usize, f64)> {
    let xn = target.norm();
    let dir = target / xn;
    let mut jet = sym.jet(xi.as_slice())?;
    let mut res = (&jet.gradient - target).norm();
    let mut stalled = 0;
    for it in 1..=DUAL_MAX_ITER {
        if res <= 4.0 * f64::EPSILON * xn {
            return Ok((xi, it - 1, angular(&jet.gradient, &dir)));
        }
        let rhs = target - &jet.gradient;
        let step = jet
            .hessian
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-14 * jet.hessian.amax())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &xi + &step * alpha;
            if cand.norm() > 0.0 {
                let cj = sym.jet(cand.as_slice())?;
                let cr = (&cj.gradient - target).norm();
                if cr < (1.0 - 1e-4 * alpha) * res {
                    accepted = Some((cand, cj, cr));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((c, cj, cr)) => {
                xi = c;
                jet = cj;
                res = cr;
                stalled = 0;
            }
            None => {
                stalled += 1;
                if stalled >= 2 {
                    let ang = angular(&jet.gradient, &dir);
                    if ang < tol && res < 1e-10 * xn {
                        return Ok((xi, it, ang));
                    }
                    return Err(Error::NoConvergence { iterations: it, residual: ang });
                }
            }
        }
    }
    let ang = angular(&jet.gradient, &dir);
    if ang < tol {
        Ok((xi, DUAL_MAX_ITER, ang))
    } else {
        Err(Error::NoConvergence { iterations: DUAL_MAX_ITER, residual: ang })
    }
}

/// `a*` as a symbol in its own right: `∇a*(x) = ξ` and
/// `∇²a*(x) = ∇²a(ξ)⁻¹` where `∇a(ξ) = x`.
#[derive(Clone)]
pub struct DualSymbol {
    inner: Arc<dyn Symbol>,
    tol: f64,
}

impl DualSymbol {
    /// Requires a passing curvature certificate at `resolution`.
    pub fn new(inner: Arc<dyn Symbol>, resolution: usize, tol: f64) -> Result<Self> {
        let cert = curvature_certificate(inner.as_ref(), resolution)?;
        if !cert.passed {
            return Err(Error::Hypothesis(format!(
                "curvature certificate failed: min det ∇²a = {:.3e} at resolution {resolution}",
                cert.min_det
            )));
        }
        Ok(Self { inner, tol })
    }

    pub fn eval(&self, x: &[f64]) -> Result<DualEvaluation> {
        dual_eval(self.inner.as_ref(), x, self.tol)
    }
}

impl Symbol for DualSymbol {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let d = self.eval(x)?;
        let xi = DVector::from_column_slice(&d.xi_star) * d.lambda;
        let h = self.inner.jet(xi.as_slice())?.hessian;
        let hessian = h.try_inverse().ok_or_else(|| Error::Hypothesis("singular Hessian of a".into()))?;
        Ok(Jet { value: d.value, gradient: xi, hessian })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(spec: SymbolSpec) -> HomogeneousSymbol {
        spec.build().unwrap()
    }

    #[test]
    fn quadratic_values() {
        let s = sym(SymbolSpec::sphere(3));
        let j = s.jet(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(j.value, 14.0);
        assert_eq!(j.gradient.as_slice(), &[2.0, 4.0, 6.0]);
        assert_eq!(j.hessian, DMatrix::identity(3, 3) * 2.0);

        let e = sym(SymbolSpec::diagonal(&[1.0, 4.0]));
        let j = e.jet(&[1.0, 1.0]).unwrap();
        assert_eq!(j.value, 5.0);
        assert_eq!(j.gradient.as_slice(), &[2.0, 8.0]);
    }

    #[test]
    fn quartic_value() {
        let q = sym(SymbolSpec::Quartic { n: 2 });
        assert!((q.value(&[1.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_elliptic() {
        let bad = SymbolSpec::Quadratic { n: 2, matrix: Some(vec![vec![1.0, 0.0], vec![0.0, -1.0]]) };
        assert!(matches!(bad.build(), Err(Error::NotElliptic(_))));
        let asym = SymbolSpec::Quadratic { n: 2, matrix: Some(vec![vec![1.0, 0.5], vec![0.0, 1.0]]) };
        assert!(asym.build().is_err());
        let big = SymbolSpec::PerturbedSphere { n: 2, epsilon: 0.6, constant: 1.0, linear: None, quadratic: None };
        assert!(matches!(big.build(), Err(Error::NotElliptic(_))));
        assert!(SymbolSpec::Quartic { n: 1 }.build().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let specs = [
            SymbolSpec::diagonal(&[1.0, 4.0, 2.5]),
            SymbolSpec::Quartic { n: 3 },
            SymbolSpec::PerturbedSphere {
                n: 3,
                epsilon: 0.1,
                constant: 0.3,
                linear: Some(vec![0.5, -0.2, 0.1]),
                quadratic: Some(vec![vec![0.4, 0.1, 0.0], vec![0.1, -0.3, 0.2], vec![0.0, 0.2, -0.1]]),
            },
        ];
        let h = 1e-5;
        let p = [0.7, -0.4, 0.9];
        for spec in specs {
            let s = sym(spec);
            let j = s.jet(&p).unwrap();
            for k in 0..3 {
                let mut up = p;
                let mut dn = p;
                up[k] += h;
                dn[k] -= h;
                let fd = (s.value(&up).unwrap() - s.value(&dn).unwrap()) / (2.0 * h);
                assert!((fd - j.gradient[k]).abs() < 1e-8, "gradient {k}");
                let gd = (s.gradient(&up).unwrap() - s.gradient(&dn).unwrap()) / (2.0 * h);
                for i in 0..3 {
                    assert!((gd[i] - j.hessian[(i, k)]).abs() < 1e-7, "hessian {i}{k}");
                }
            }
        }
    }

    #[test]
    fn quartic_curvature_vanishes_on_axes() {
        let q = sym(SymbolSpec::Quartic { n: 2 });
        assert!(q.jet(&[1.0, 0.0]).unwrap().hessian.determinant().abs() < 1e-15);
        assert!(min_hessian_det_on_level(&q, 256).unwrap() < 0.01);
        let s = sym(SymbolSpec::sphere(3));
        assert!((min_hessian_det_on_level(&s, 16).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_dual_is_quarter_norm() {
        let s = sym(SymbolSpec::sphere(3));
        let d = dual_eval(&s, &[0.3, -1.2, 0.5], 1e-10).unwrap();
        let x2 = 0.09 + 1.44 + 0.25;
        assert!((d.value - x2 / 4.0).abs() < 1e-14);
    }

    #[test]
    fn dual_rejects_origin() {
        let s = sym(SymbolSpec::sphere(2));
        assert!(dual_eval(&s, &[0.0, 0.0], 1e-10).is_err());
    }

    #[test]
    fn dual_symbol_requires_curvature() {
        let q: Arc<dyn Symbol> = Arc::new(sym(SymbolSpec::Quartic { n: 2 }));
        assert!(matches!(DualSymbol::new(q, 256, 1e-10), Err(Error::Hypothesis(_))));
    }
}
