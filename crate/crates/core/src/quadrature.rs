//! One-dimensional quadrature rules shared by the special-function, surface
//! and radial-profile code.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::special::log_gamma;
use crate::{Error, Result};

/// Nodes and weights of a quadrature rule on a fixed interval.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Affinely maps a rule on [-1, 1] onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre rule with `n` nodes on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1],
/// computed by the Golub–Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<Rule> {
    if n == 0 || alpha <= -1.0 || beta <= -1.0 {
        return Err(Error::InvalidParameter(format!(
            "gauss_jacobi requires n >= 1 and alpha, beta > -1 (got n={n}, alpha={alpha}, beta={beta})"
        )));
    }
    let ab = alpha + beta;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    diag[0] = (beta - alpha) / (ab + 2.0);
    for (k, d) in diag.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        let t = 2.0 * kf + ab;
        *d = (beta * beta - alpha * alpha) / (t * (t + 2.0));
    }
    for (idx, o) in off.iter_mut().enumerate() {
        let k = (idx + 1) as f64;
        let t = 2.0 * k + ab;
        let b2 = if idx == 0 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (t * t * (t + 1.0) * (t - 1.0))
        };
        *o = b2.sqrt();
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = diag[i];
        if i + 1 < n {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + log_gamma(alpha + 1.0)?
        + log_gamma(beta + 1.0)?
        - log_gamma(ab + 2.0)?)
    .exp();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate with the embedded 7-point Gauss error estimate.
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = GK_WK[7] * fc;
    let mut gauss = GK_WG[3] * fc;
    for j in 0..7 {
        let dx = half * GK_NODES[j];
        let s = f(mid - dx) + f(mid + dx);
        kron += GK_WK[j] * s;
        if j % 2 == 1 {
            gauss += GK_WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration by recursive bisection.
///
/// Stops when the local error estimate is below `max(abs_tol, rel_tol * |I|)`
/// or the recursion depth reaches `max_depth`.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: usize,
) -> (f64, f64) {
    let (value, err) = gk15(f, a, b);
    refine(f, a, b, value, err, abs_tol, rel_tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: usize,
) -> (f64, f64) {
    if err <= abs_tol.max(rel_tol * value.abs()) || depth == 0 {
        return (value, err);
    }
    let m = 0.5 * (a + b);
    let (lv, le) = gk15(f, a, m);
    let (rv, re) = gk15(f, m, b);
    let (lv, le) = refine(f, a, m, lv, le, 0.5 * abs_tol, rel_tol, depth - 1);
    let (rv, re) = refine(f, m, b, rv, re, 0.5 * abs_tol, rel_tol, depth - 1);
    (lv + rv, le + re)
}

/// Integrates over consecutive panels `[breaks[i], breaks[i+1]]`, each
/// handled adaptively.
pub fn integrate_panels<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], rel_tol: f64) -> f64 {
    breaks
        .windows(2)
        .map(|w| adaptive_gk(f, w[0], w[1], 1e-300, rel_tol, 40).0)
        .sum()
}

/// Tanh-sinh rule on [a, b], suited to integrable algebraic endpoint
/// singularities. The integrand receives `(x, x - a, b - x)` so that
/// distances to the endpoints are available without cancellation.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, level: u32) -> f64 {
    let h = 2f64.powi(-(level as i32));
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut sum = 0.0;
    let kmax = (6.0 / h) as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = pi2 * t.sinh();
        let cu = u.cosh();
        let w = pi2 * t.cosh() / (cu * cu);
        // 1 + x and 1 - x, each computed without cancellation.
        let e = (-2.0 * u.abs()).exp();
        let small = 2.0 * e / (1.0 + e);
        let (opx, omx) = if u < 0.0 { (small, 2.0 - small) } else { (2.0 - small, small) };
        let da = half * opx;
        let db = half * omx;
        if da <= 0.0 || db <= 0.0 || w < 1e-300 {
            continue;
        }
        let x = if u < 0.0 { a + da } else { b - db };
        sum += w * f(x, da, db);
    }
    sum * h * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(10);
        for p in 0..20 {
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(|x| x.powi(p));
            assert!((got - exact).abs() < 1e-14, "degree {p}: {got} vs {exact}");
        }
    }

    #[test]
    fn jacobi_reproduces_beta_moments() {
        // int_{-1}^{1} (1-x)^a (1+x)^b (1+x)^m dx = 2^{a+b+m+1} B(a+1, b+m+1)
        for &(a, b) in &[(0.0, 0.0), (-0.5, -0.5), (1.5, 0.25), (0.0, -0.7), (3.0, 3.0)] {
            let rule = gauss_jacobi(12, a, b).unwrap();
            for m in 0..23 {
                let mf = m as f64;
                let exact = ((a + b + mf + 1.0) * std::f64::consts::LN_2
                    + log_gamma(a + 1.0).unwrap()
                    + log_gamma(b + mf + 1.0).unwrap()
                    - log_gamma(a + b + mf + 2.0).unwrap())
                .exp();
                let got = rule.integrate(|x| (1.0 + x).powi(m));
                assert!(
                    ((got - exact) / exact).abs() < 1e-12,
                    "a={a} b={b} m={m}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn jacobi_rejects_bad_exponents() {
        assert!(gauss_jacobi(4, -1.0, 0.0).is_err());
        assert!(gauss_jacobi(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let mut f = |x: f64| 1.0 / (1e-4 + x * x);
        let (v, _) = adaptive_gk(&mut f, -1.0, 1.0, 1e-14, 1e-13, 50);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(((v - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 6);
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        // int_0^2 log(x) dx = 2 log 2 - 2
        let v = tanh_sinh(|_, da, _| da.ln(), 0.0, 2.0, 6);
        assert!((v - (2.0 * 2f64.ln() - 2.0)).abs() < 1e-12, "{v}");
    }
}
