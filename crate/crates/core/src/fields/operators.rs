//! Separable pseudo-differential operators `σ(X, D) f = Σ_l m_l(x) (q_l(D) f)(x)`
//! and the wedge operators built from them.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::grid::GridField;
use crate::symbols::{curvature_certificate, dual_eval, HomogeneousSymbol, Symbol};
use crate::{Error, Result};

type C64 = Complex64;

const HOMOGENEITY_TOL: f64 = 1e-10;
const HOMOGENEITY_SAMPLES: usize = 32;
const DUAL_TOL: f64 = 1e-12;
const CERTIFICATE_RESOLUTION: usize = 64;

pub type FactorFn = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// A positively homogeneous function of one vector variable, with its value
/// at the origin fixed by convention (0 unless stated).
#[derive(Clone)]
pub struct Factor {
    f: FactorFn,
    degree: f64,
    origin: C64,
    label: String,
}

impl std::fmt::Debug for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Factor({}, degree {})", self.label, self.degree)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Factor {
    pub fn new(label: impl Into<String>, degree: f64, f: FactorFn) -> Self {
        Self { f, degree, origin: C64::new(0.0, 0.0), label: label.into() }
    }

    pub fn with_origin_value(mut self, v: C64) -> Self {
        self.origin = v;
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), 0.0, Arc::new(move |_| C64::new(c, 0.0))).with_origin_value(C64::new(c, 0.0))
    }

    /// `|x|^p`
    pub fn power(p: f64) -> Self {
        Self::new(format!("|x|^{p}"), p, Arc::new(move |x| C64::new(norm(x).powf(p), 0.0)))
    }

    /// `x_i / |x|`
    pub fn unit(i: usize) -> Self {
        Self::new(format!("x{}/|x|", i + 1), 0.0, Arc::new(move |x| C64::new(x[i] / norm(x), 0.0)))
    }

    /// `(∇a(x))_i / |∇a(x)|`
    pub fn normal(sym: Arc<HomogeneousSymbol>, i: usize) -> Self {
        Self::new(
            format!("n{}(x)", i + 1),
            0.0,
            Arc::new(move |x| match sym.gradient(x) {
                Ok(g) => C64::new(g[i] / g.norm(), 0.0),
                Err(_) => C64::new(f64::NAN, 0.0),
            }),
        )
    }

    /// `(∇a*(x))_i / |∇a*(x)|`, the unit vector from the origin to the point
    /// of `Σ_a` whose normal is parallel to `x`.
    pub fn dual_normal(sym: Arc<HomogeneousSymbol>, i: usize) -> Self {
        Self::new(
            format!("m{}(x)", i + 1),
            0.0,
            Arc::new(move |x| match dual_direction(&sym, x) {
                Ok(d) => C64::new(d[i], 0.0),
                Err(_) => C64::new(f64::NAN, 0.0),
            }),
        )
    }

    /// Pointwise product; degrees add.
    pub fn times(&self, other: &Factor) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        Self {
            f: Arc::new(move |x| f(x) * g(x)),
            degree: self.degree + other.degree,
            origin: self.origin * other.origin,
            label: format!("{}·{}", self.label, other.label),
        }
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        if x.iter().all(|&v| v == 0.0) {
            self.origin
        } else {
            (self.f)(x)
        }
    }

    /// Worst `|F(λx) - λ^d F(x)| / max(1, |F(x)|)` over seeded samples.
    pub fn homogeneity_defect(&self, n: usize, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let lam: f64 = rng.random_range(0.25..4.0);
            let xl: Vec<f64> = x.iter().map(|v| v * lam).collect();
            let a = self.eval(&x);
            let b = self.eval(&xl);
            let d = (b - a * lam.powf(self.degree)).norm() / a.norm().max(1.0) / lam.powf(self.degree).max(1.0);
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        }
        worst
    }
}

/// `∇a*(x)/|∇a*(x)|`, in closed form for quadratic symbols.
pub fn dual_direction(sym: &HomogeneousSymbol, x: &[f64]) -> Result<DVector<f64>> {
    if let Some(a) = sym.quadratic_matrix() {
        // a* = ¼⟨A⁻¹x, x⟩
        let y = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotElliptic("quadratic matrix".into()))?
            .solve(&DVector::from_column_slice(x));
        return Ok(&y / y.norm());
    }
    let d = dual_eval(sym, x, DUAL_TOL)?;
    let v = DVector::from_vec(d.xi_star);
    Ok(&v / v.norm())
}

#[derive(Clone, Debug)]
pub struct SeparableTerm {
    pub spatial: Factor,
    pub frequency: Factor,
}

/// `σ(x, ξ) = Σ_l m_l(x) q_l(ξ)`, homogeneous of degree `β` in `x` and `α`
/// in `ξ`.
#[derive(Clone, Debug)]
pub struct SeparableSymbol {
    n: usize,
    terms: Vec<SeparableTerm>,
    beta: f64,
    alpha: f64,
}

impl SeparableSymbol {
    /// Validates declared degrees and samples each factor's homogeneity.
    pub fn new(n: usize, terms: Vec<SeparableTerm>, beta: f64, alpha: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("a separable symbol needs at least one term".into()));
        }
        for (l, t) in terms.iter().enumerate() {
            for (fac, deg, side) in [(&t.spatial, beta, "spatial"), (&t.frequency, alpha, "frequency")] {
                if fac.degree != deg {
                    return Err(Error::InvalidParameter(format!(
                        "term {l}: {side} factor {} has degree {}, expected {deg}",
                        fac.label, fac.degree
                    )));
                }
                let defect = fac.homogeneity_defect(n, HOMOGENEITY_SAMPLES, 17 + l as u64);
                if !(defect <= HOMOGENEITY_TOL) {
                    return Err(Error::InvalidParameter(format!(
                        "term {l}: {side} factor {} fails homogeneity (defect {defect:.2e})",
                        fac.label
                    )));
                }
            }
        }
        Ok(Self { n, terms, beta, alpha })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[SeparableTerm] {
        &self.terms
    }

    pub fn degrees(&self) -> (f64, f64) {
        (self.beta, self.alpha)
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> C64 {
        self.terms.iter().map(|t| t.spatial.eval(x) * t.frequency.eval(xi)).sum()
    }
}

/// `Σ_l m_l · F⁻¹[q_l f̂]`.
pub fn apply_separable_symbol(sigma: &SeparableSymbol, f: &GridField) -> Result<GridField> {
    if sigma.n != f.grid().n {
        return Err(Error::InvalidParameter("symbol and field dimensions differ".into()));
    }
    let mut acc: Option<GridField> = None;
    for (l, t) in sigma.terms.iter().enumerate() {
        let q = f.apply_multiplier(|xi| t.frequency.eval(xi)).map_err(|e| nan_context(e, l, "frequency"))?;
        let term = q.multiply_space(|x| t.spatial.eval(x)).map_err(|e| nan_context(e, l, "spatial"))?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc.expect("at least one term"))
}

fn nan_context(e: Error, l: usize, side: &str) -> Error {
    match e {
        Error::NonFinite(_) => Error::NonFinite(format!("{side} factor of term {l} is not finite on the grid")),
        e => e,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WedgeStyle {
    /// `∇a(x)/|∇a(x)| ∧ D/|D|`
    BareNormal,
    /// `x/|x| ∧ ∇a*(D)/|∇a*(D)|`
    BareDual,
    /// `|x|^{-1/2} (x/|x| ∧ ∇a(D)/|∇a(D)|) |D|^{1/2}`
    Omega1,
    /// `|x|^{-1/2} (∇a*(x)/|∇a*(x)| ∧ D/|D|) |D|^{1/2}`
    Omega2,
}

impl WedgeStyle {
    fn needs_dual(self) -> bool {
        matches!(self, Self::BareDual | Self::Omega2)
    }
}

/// Index pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn wedge_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Spatial and frequency unit fields `(p, q)` of a wedge style, with the
/// extra homogeneous weights folded into `p` and `q`.
fn wedge_factors(style: WedgeStyle, sym: &Arc<HomogeneousSymbol>) -> (Vec<Factor>, Vec<Factor>) {
    let n = sym.dim();
    let (mut p, mut q): (Vec<Factor>, Vec<Factor>) = match style {
        WedgeStyle::BareNormal => ((0..n).map(|i| Factor::normal(sym.clone(), i)).collect(), (0..n).map(Factor::unit).collect()),
        WedgeStyle::BareDual => ((0..n).map(Factor::unit).collect(), (0..n).map(|i| Factor::dual_normal(sym.clone(), i)).collect()),
        WedgeStyle::Omega1 => ((0..n).map(Factor::unit).collect(), (0..n).map(|i| Factor::normal(sym.clone(), i)).collect()),
        WedgeStyle::Omega2 => ((0..n).map(|i| Factor::dual_normal(sym.clone(), i)).collect(), (0..n).map(Factor::unit).collect()),
    };
    if matches!(style, WedgeStyle::Omega1 | WedgeStyle::Omega2) {
        p = p.iter().map(|f| Factor::power(-0.5).times(f)).collect();
        q = q.iter().map(|f| f.times(&Factor::power(0.5))).collect();
    }
    (p, q)
}

/// The separable symbol of component `(i, j)`: `p_i q_j - p_j q_i`.
pub fn wedge_component_symbol(style: WedgeStyle, sym: &Arc<HomogeneousSymbol>, i: usize, j: usize) -> Result<SeparableSymbol> {
    let n = sym.dim();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidParameter(format!("invalid wedge index pair ({i}, {j}) for n={n}")));
    }
    if style.needs_dual() {
        let cert = curvature_certificate(sym.as_ref(), CERTIFICATE_RESOLUTION)?;
        if !cert.passed {
            return Err(Error::Hypothesis(format!(
                "dual function undefined: curvature certificate failed (min det ∇²a = {:.3e})",
                cert.min_det
            )));
        }
    }
    let (p, q) = wedge_factors(style, sym);
    let minus = Factor::constant(-1.0);
    let terms = vec![
        SeparableTerm { spatial: p[i].clone(), frequency: q[j].clone() },
        SeparableTerm { spatial: minus.times(&p[j]), frequency: q[i].clone() },
    ];
    let (beta, alpha) = (p[i].degree(), q[j].degree());
    SeparableSymbol::new(n, terms, beta, alpha)
}

/// All `(n choose 2)` components, ordered as [`wedge_pairs`].
pub fn wedge_operator_apply(style: WedgeStyle, sym: &Arc<HomogeneousSymbol>, f: &GridField) -> Result<Vec<GridField>> {
    if sym.dim() != f.grid().n {
        return Err(Error::InvalidParameter("symbol and field dimensions differ".into()));
    }
    wedge_pairs(sym.dim())
        .into_iter()
        .map(|(i, j)| apply_separable_symbol(&wedge_component_symbol(style, sym, i, j)?, f))
        .collect()
}

/// `Σ_{i<j} |σ_{ij}(x, ξ)|²` for a wedge style.
pub fn wedge_symbol_sq(style: WedgeStyle, sym: &Arc<HomogeneousSymbol>, x: &[f64], xi: &[f64]) -> f64 {
    let (p, q) = wedge_factors(style, sym);
    wedge_pairs(sym.dim())
        .into_iter()
        .map(|(i, j)| (p[i].eval(x) * q[j].eval(xi) - p[j].eval(x) * q[i].eval(xi)).norm_sqr())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub samples: usize,
    /// `max |σ(x, λ∇a(x))|`
    pub direct: f64,
    /// `max |σ(-x, λ∇a(x))|`
    pub reflected: f64,
    /// `max |σ|` over the sampled `(x, ξ)` without the orbit constraint.
    pub scale: f64,
    pub passed: bool,
}

/// Samples `x` in the annulus `1/2 ≤ |x| ≤ 2` and `λ ∈ [-4, 4] \ {0}`.
pub fn structure_condition_check(
    sigma: &SeparableSymbol,
    sym: &dyn Symbol,
    samples: usize,
    seed: u64,
) -> Result<StructureReport> {
    let n = sigma.dim();
    if sym.dim() != n {
        return Err(Error::InvalidParameter("symbol dimensions differ".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut direct, mut reflected, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let r: f64 = rng.random_range(0.5..2.0);
        let x: Vec<f64> = v.iter().map(|c| c * r / norm(&v)).collect();
        let mut lam: f64 = rng.random_range(0.05..4.0);
        if rng.random::<bool>() {
            lam = -lam;
        }
        let g = sym.gradient(&x)?;
        let xi: Vec<f64> = g.iter().map(|c| c * lam).collect();
        let neg: Vec<f64> = x.iter().map(|c| -c).collect();
        direct = direct.max(sigma.eval(&x, &xi).norm());
        reflected = reflected.max(sigma.eval(&neg, &xi).norm());
        let free: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        scale = scale.max(sigma.eval(&x, &free).norm());
    }
    let tol = 1e-8 * scale.max(f64::MIN_POSITIVE);
    Ok(StructureReport { samples, direct, reflected, scale, passed: direct < tol || reflected < tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::Grid;
    use crate::symbols::SymbolSpec;

    // f̂ = |ξ|⁸ e^{-|ξ|²/2}: Riesz images decay like |x|^{-10}, small at the
    // edge of a 32-wide box
    fn radial_field(grid: Grid) -> GridField {
        GridField::from_frequency_fn(grid, |xi| {
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            C64::new(r2.powi(4) * (-0.5 * r2).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn rejects_wrong_degree_and_inhomogeneous_factors() {
        let bad = SeparableTerm { spatial: Factor::power(1.0), frequency: Factor::constant(1.0) };
        assert!(SeparableSymbol::new(2, vec![bad], 0.0, 0.0).is_err());
        let lying = Factor::new("1+|x|", 1.0, Arc::new(|x| C64::new(1.0 + norm(x), 0.0)));
        let t = SeparableTerm { spatial: lying, frequency: Factor::constant(1.0) };
        assert!(SeparableSymbol::new(2, vec![t], 1.0, 0.0).is_err());
    }

    #[test]
    fn rotation_symbol_kills_radial_functions() {
        let grid = Grid::new(2, 256, 32.0).unwrap();
        let f = radial_field(grid);
        let sigma = SeparableSymbol::new(
            2,
            vec![
                SeparableTerm { spatial: Factor::unit(0), frequency: Factor::unit(1) },
                SeparableTerm { spatial: Factor::unit(1).times(&Factor::constant(-1.0)), frequency: Factor::unit(0) },
            ],
            0.0,
            0.0,
        )
        .unwrap();
        let out = apply_separable_symbol(&sigma, &f).unwrap();
        assert!(out.max_abs() < 1e-8 * f.max_abs(), "{}", out.max_abs());
    }

    #[test]
    fn wedge_components_are_antisymmetric() {
        let sym = Arc::new(SymbolSpec::diagonal(&[1.0, 4.0]).build().unwrap());
        let a = wedge_component_symbol(WedgeStyle::BareNormal, &sym, 0, 1).unwrap();
        let b = wedge_component_symbol(WedgeStyle::BareNormal, &sym, 1, 0).unwrap();
        let x = [0.3, -1.2];
        let xi = [2.0, 0.7];
        assert_eq!(a.eval(&x, &xi), -b.eval(&x, &xi));
    }

    #[test]
    fn dual_direction_quadratic_matches_newton() {
        let sym = SymbolSpec::diagonal(&[1.0, 4.0, 2.0]).build().unwrap();
        let x = [0.4, -0.3, 1.1];
        let closed = dual_direction(&sym, &x).unwrap();
        let d = dual_eval(&sym, &x, 1e-13).unwrap();
        let v = DVector::from_vec(d.xi_star);
        assert!((closed - &v / v.norm()).norm() < 1e-12);
    }

    #[test]
    fn structure_condition_cases() {
        let sphere = SymbolSpec::sphere(2).build().unwrap();
        let rot = SeparableSymbol::new(
            2,
            vec![
                SeparableTerm { spatial: Factor::unit(0), frequency: Factor::unit(1) },
                SeparableTerm { spatial: Factor::unit(1).times(&Factor::constant(-1.0)), frequency: Factor::unit(0) },
            ],
            0.0,
            0.0,
        )
        .unwrap();
        let r = structure_condition_check(&rot, &sphere, 200, 1).unwrap();
        assert!(r.passed && r.direct < 1e-12);
        let radial = SeparableSymbol::new(
            2,
            (0..2).map(|i| SeparableTerm { spatial: Factor::unit(i), frequency: Factor::unit(i) }).collect(),
            0.0,
            0.0,
        )
        .unwrap();
        let r = structure_condition_check(&radial, &sphere, 200, 1).unwrap();
        assert!(!r.passed && (r.direct - 1.0).abs() < 1e-12 && (r.reflected - 1.0).abs() < 1e-12);
    }
}
