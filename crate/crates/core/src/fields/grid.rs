//! Uniform periodic grids with both the space and the frequency samples of a
//! field.
//!
//! Points are `x_j = -L/2 + j·dx` with `dx = L/N`, frequencies are
//! `ξ_m = m·dξ` with `dξ = 2π/L` and `m` in FFT order. With these,
//! `f̂(ξ_m) ≈ dx^n (-1)^{|m|} DFT(f)_m` and the inverse is
//! `L^{-n} IDFT((-1)^{|m|} f̂)`, where `|m|` is the sum of the indices.

use ndarray::{ArrayD, IxDyn, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::special::WeightSpec;
use crate::symbols::Symbol;
use crate::{Error, Result};

pub type C64 = Complex64;

const MAX_GRID_DIM: usize = 3;
/// Stencil width of the separable Lagrange interpolation (degree 7).
pub const INTERP_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: usize,
    /// Samples per axis.
    pub size: usize,
    /// Side length `L` of the periodic box.
    pub extent: f64,
}

impl Grid {
    pub fn new(n: usize, size: usize, extent: f64) -> Result<Self> {
        if n == 0 || n > MAX_GRID_DIM {
            return Err(Error::InvalidParameter(format!("grids exist for 1 ≤ n ≤ 3, got n={n}")));
        }
        if size < 8 || size % 2 != 0 {
            return Err(Error::InvalidParameter(format!("grid size must be even and at least 8, got {size}")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidParameter(format!("grid extent must be positive, got {extent}")));
        }
        Ok(Self { n, size, extent })
    }

    /// `N = 128, L = 16` in two dimensions and `N = 96, L = 12` in three.
    pub fn default_for(n: usize) -> Result<Self> {
        match n {
            1 => Self::new(1, 512, 32.0),
            2 => Self::new(2, 128, 16.0),
            3 => Self::new(3, 96, 12.0),
            _ => Err(Error::InvalidParameter(format!("no grid in dimension {n}"))),
        }
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.size as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.extent
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.extent + j as f64 * self.dx()
    }

    pub fn freq(&self, k: usize) -> f64 {
        let m = if k < self.size / 2 { k as f64 } else { k as f64 - self.size as f64 };
        m * self.dxi()
    }

    /// Largest `|x_i|` at which interpolation has its full stencil.
    pub fn interpolation_radius(&self) -> f64 {
        0.5 * self.extent - (INTERP_POINTS / 2) as f64 * self.dx()
    }

    fn shape(&self) -> IxDyn {
        IxDyn(&vec![self.size; self.n])
    }

    /// Row-major multi-index of a flat position.
    fn unravel(&self, mut flat: usize) -> [usize; MAX_GRID_DIM] {
        let mut idx = [0; MAX_GRID_DIM];
        for a in (0..self.n).rev() {
            idx[a] = flat % self.size;
            flat /= self.size;
        }
        idx
    }

    fn point(&self, flat: usize, freq: bool) -> [f64; MAX_GRID_DIM] {
        let idx = self.unravel(flat);
        let mut p = [0.0; MAX_GRID_DIM];
        for a in 0..self.n {
            p[a] = if freq { self.freq(idx[a]) } else { self.coord(idx[a]) };
        }
        p
    }

    fn parity(&self, flat: usize) -> f64 {
        if self.unravel(flat).iter().sum::<usize>() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Fills an array from a function of the point coordinates.
    fn tabulate<F>(&self, freq: bool, f: F) -> ArrayD<C64>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let mut out = ArrayD::<C64>::zeros(self.shape());
        flat_mut(&mut out).par_iter_mut().enumerate().for_each(|(i, v)| {
            *v = f(&self.point(i, freq)[..self.n]);
        });
        out
    }
}

fn flat_mut(a: &mut ArrayD<C64>) -> &mut [C64] {
    a.as_slice_mut().expect("grid arrays are in standard layout")
}

fn flat(a: &ArrayD<C64>) -> &[C64] {
    a.as_slice().expect("grid arrays are in standard layout")
}

const SUM_CHUNK: usize = 4096;

/// `Σ h(i, a_i)` over fixed chunks combined in order, so the rounding does
/// not depend on the thread count.
fn ordered_sum<F: Fn(usize, &C64) -> f64 + Sync>(a: &[C64], h: F) -> f64 {
    let parts: Vec<f64> = a
        .par_chunks(SUM_CHUNK)
        .enumerate()
        .map(|(c, chunk)| chunk.iter().enumerate().map(|(j, v)| h(c * SUM_CHUNK + j, v)).sum())
        .collect();
    parts.iter().sum()
}

fn fft_all_axes(data: &mut ArrayD<C64>, direction: FftDirection) {
    let n = data.shape()[0];
    let plan = FftPlanner::new().plan_fft(n, direction);
    for axis in 0..data.ndim() {
        Zip::from(data.lanes_mut(ndarray::Axis(axis))).par_for_each(|mut lane| {
            let mut buf: Vec<C64> = lane.iter().copied().collect();
            plan.process(&mut buf);
            for (d, s) in lane.iter_mut().zip(buf) {
                *d = s;
            }
        });
    }
}

fn forward(grid: &Grid, space: &ArrayD<C64>) -> ArrayD<C64> {
    let mut a = space.clone();
    fft_all_axes(&mut a, FftDirection::Forward);
    let scale = grid.dx().powi(grid.n as i32);
    flat_mut(&mut a).par_iter_mut().enumerate().for_each(|(i, v)| *v *= scale * grid.parity(i));
    a
}

fn inverse(grid: &Grid, freq: &ArrayD<C64>) -> ArrayD<C64> {
    let mut a = freq.clone();
    flat_mut(&mut a).par_iter_mut().enumerate().for_each(|(i, v)| *v *= grid.parity(i));
    fft_all_axes(&mut a, FftDirection::Inverse);
    let scale = grid.extent.powi(-(grid.n as i32));
    a.par_mapv_inplace(|v| v * scale);
    a
}

/// Norm multipliers `|ξ|^s`, `(1+|ξ|²)^{s/2}` or a weight `w(|ξ|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SobolevFlavor {
    Homogeneous,
    Inhomogeneous,
    Weight(WeightSpec),
}

impl SobolevFlavor {
    pub fn multiplier(&self, s: f64, r: f64) -> f64 {
        match self {
            Self::Homogeneous if r == 0.0 => match s.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => 1.0,
                _ => f64::INFINITY,
            },
            Self::Homogeneous => r.powf(s),
            Self::Inhomogeneous => (1.0 + r * r).powf(0.5 * s),
            Self::Weight(w) => w.eval(r),
        }
    }

    /// `m(r)² r^{n-1}`, without overflow near `r = 0` for power multipliers.
    pub fn measure(&self, s: f64, r: f64, n: usize) -> f64 {
        let d = n as f64 - 1.0;
        match self {
            Self::Homogeneous if r > 0.0 => r.powf(2.0 * s + d),
            Self::Weight(WeightSpec::Power { exponent }) if r > 0.0 => r.powf(2.0 * exponent + d),
            _ => self.multiplier(s, r).powi(2) * r.powf(d),
        }
    }

    /// Power of `r` in the multiplier as `r → 0`.
    pub fn exponent_at_zero(&self, s: f64) -> f64 {
        match self {
            Self::Homogeneous => s,
            Self::Inhomogeneous => 0.0,
            Self::Weight(w) => w.exponent_at_zero(),
        }
    }
}

/// A sampled field; both representations are kept in sync and never mutated.
#[derive(Clone, Debug)]
pub struct GridField {
    grid: Grid,
    space: ArrayD<C64>,
    freq: ArrayD<C64>,
}

#[derive(Serialize)]
struct DumpSidecar<'a> {
    shape: Vec<usize>,
    extent: f64,
    convention: &'a str,
    layout: &'a str,
    files: [String; 2],
}

impl GridField {
    pub fn from_space_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        Self::from_space(grid, grid.tabulate(false, f))
    }

    pub fn from_frequency_fn<F>(grid: Grid, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        Self::from_frequency(grid, grid.tabulate(true, f))
    }

    pub fn from_space(grid: Grid, space: ArrayD<C64>) -> Result<Self> {
        check_samples(&grid, &space)?;
        let space = space.as_standard_layout().into_owned();
        let freq = forward(&grid, &space);
        Ok(Self { grid, space, freq })
    }

    pub fn from_frequency(grid: Grid, freq: ArrayD<C64>) -> Result<Self> {
        check_samples(&grid, &freq)?;
        let freq = freq.as_standard_layout().into_owned();
        let space = inverse(&grid, &freq);
        Ok(Self { grid, space, freq })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn space(&self) -> &ArrayD<C64> {
        &self.space
    }

    pub fn frequency(&self) -> &ArrayD<C64> {
        &self.freq
    }

    /// `(∫|f|² dx)^{1/2}` from the space samples.
    pub fn l2_norm(&self) -> f64 {
        let s = ordered_sum(flat(&self.space), |_, v| v.norm_sqr());
        (s * self.grid.dx().powi(self.grid.n as i32)).sqrt()
    }

    /// `(∫|f̂|² dξ)^{1/2}` from the frequency samples.
    pub fn l2_norm_frequency(&self) -> f64 {
        let s = ordered_sum(flat(&self.freq), |_, v| v.norm_sqr());
        (s * self.grid.dxi().powi(self.grid.n as i32)).sqrt()
    }

    /// `(2π)^{-n/2} ‖m(|ξ|) f̂‖`; `+∞` when the multiplier is infinite on
    /// the support of `f̂`.
    pub fn sobolev_norm(&self, s: f64, flavor: SobolevFlavor) -> f64 {
        let g = &self.grid;
        let total = ordered_sum(flat(&self.freq), |i, v| {
            let r2: f64 = g.point(i, true).iter().map(|c| c * c).sum();
            let m = flavor.multiplier(s, r2.sqrt());
            if v.norm_sqr() == 0.0 {
                0.0
            } else {
                m * m * v.norm_sqr()
            }
        });
        let dxi = g.dxi().powi(g.n as i32);
        (total * dxi).sqrt() * (2.0 * PI).powf(-0.5 * g.n as f64)
    }

    /// Multiplies `f̂` by `m(ξ)`.
    pub fn apply_multiplier<F>(&self, m: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let g = self.grid;
        let mut out = self.freq.clone();
        flat_mut(&mut out).par_iter_mut().enumerate().for_each(|(i, v)| {
            *v *= m(&g.point(i, true)[..g.n]);
        });
        Self::from_frequency(g, out)
    }

    /// Multiplies `f` pointwise by `m(x)`.
    pub fn multiply_space<F>(&self, m: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let g = self.grid;
        let mut out = self.space.clone();
        flat_mut(&mut out).par_iter_mut().enumerate().for_each(|(i, v)| {
            *v *= m(&g.point(i, false)[..g.n]);
        });
        Self::from_space(g, out)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid, space: self.space.mapv(|v| v * c), freq: self.freq.mapv(|v| v * c) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("fields live on different grids".into()));
        }
        Ok(Self { grid: self.grid, space: &self.space + &other.space, freq: &self.freq + &other.freq })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Largest sample modulus.
    pub fn max_abs(&self) -> f64 {
        self.space.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `e^{ita(D)}` with `a(0) = 0`.
    pub fn evolve(&self, sym: &dyn Symbol, t: f64) -> Result<Self> {
        if sym.dim() != self.grid.n {
            return Err(Error::InvalidParameter("symbol and grid dimensions differ".into()));
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        let g = self.grid;
        let mut out = self.freq.clone();
        let phases: Result<()> = flat_mut(&mut out).par_iter_mut().enumerate().try_for_each(|(i, v)| {
            let p = g.point(i, true);
            if p.iter().any(|&c| c != 0.0) {
                let a = sym.value(&p[..g.n])?;
                *v *= C64::from_polar(1.0, t * a);
            }
            Ok(())
        });
        phases?;
        Self::from_frequency(g, out)
    }

    /// Separable Lagrange interpolation of the space samples on an
    /// `INTERP_POINTS`-wide stencil per axis.
    pub fn interpolate(&self, x: &[f64]) -> Result<C64> {
        let g = &self.grid;
        if x.len() != g.n {
            return Err(Error::InvalidParameter(format!("expected {} coordinates, got {}", g.n, x.len())));
        }
        let lim = g.interpolation_radius();
        if let Some(c) = x.iter().find(|c| !(c.abs() <= lim)) {
            return Err(Error::OutsideGrid(format!("coordinate {c} beyond ±{lim}")));
        }
        const HALF: usize = INTERP_POINTS / 2;
        let mut base = [0usize; MAX_GRID_DIM];
        let mut w = [[0.0; INTERP_POINTS]; MAX_GRID_DIM];
        for a in 0..g.n {
            let u = (x[a] + 0.5 * g.extent) / g.dx();
            let i0 = u.floor();
            let t = u - i0;
            base[a] = i0 as usize + 1 - HALF;
            // stencil offsets 1-HALF ..= HALF relative to i0
            for (o, wo) in w[a].iter_mut().enumerate() {
                let node = o as f64 + 1.0 - HALF as f64;
                *wo = (0..INTERP_POINTS)
                    .filter(|&q| q != o)
                    .map(|q| {
                        let other = q as f64 + 1.0 - HALF as f64;
                        (t - other) / (node - other)
                    })
                    .product();
            }
        }
        let data = flat(&self.space);
        let mut sum = C64::new(0.0, 0.0);
        for stencil in 0..INTERP_POINTS.pow(g.n as u32) {
            let mut rem = stencil;
            let mut weight = 1.0;
            let mut offset = 0;
            for a in 0..g.n {
                let o = rem % INTERP_POINTS;
                rem /= INTERP_POINTS;
                offset = offset * g.size + base[a] + o;
                weight *= w[a][o];
            }
            sum += data[offset] * weight;
        }
        Ok(sum)
    }

    /// Interpolated values at many points, in parallel.
    pub fn restrict(&self, points: &[Vec<f64>]) -> Result<Vec<C64>> {
        points.par_iter().map(|p| self.interpolate(p)).collect()
    }

    /// Writes `<name>.space.bin`, `<name>.frequency.bin` (little-endian
    /// `(re, im)` pairs, row-major) and a JSON sidecar `<name>.json`.
    pub fn dump(&self, dir: &Path, name: &str) -> Result<()> {
        let files = [format!("{name}.space.bin"), format!("{name}.frequency.bin")];
        for (file, data) in files.iter().zip([&self.space, &self.freq]) {
            let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(file))?);
            for v in data.iter() {
                out.write_all(&v.re.to_le_bytes())?;
                out.write_all(&v.im.to_le_bytes())?;
            }
            out.flush()?;
        }
        let sidecar = DumpSidecar {
            shape: vec![self.grid.size; self.grid.n],
            extent: self.grid.extent,
            convention: "fhat(xi) = int exp(-i x.xi) f(x) dx; x_j = -L/2 + j L/N; xi in FFT order with step 2pi/L",
            layout: "row-major complex128 (re, im) little-endian",
            files,
        };
        std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

fn check_samples(grid: &Grid, a: &ArrayD<C64>) -> Result<()> {
    if a.shape() != vec![grid.size; grid.n].as_slice() {
        return Err(Error::InvalidParameter(format!("sample shape {:?} does not match the grid", a.shape())));
    }
    if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("grid samples".into()));
    }
    Ok(())
}
