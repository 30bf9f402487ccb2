//! Catalog of symmetric kernels with evaluation, Fourier-transform access,
//! L1/moment integrals, mollification, and Fourier tail checking.
//!
//! Transform convention, fixed everywhere: fhat(u) = int f(x) e^{-2 pi i u.x} dx.
//! Built-in transforms are derived under this convention and validated by
//! quadrature; per coordinate they are
//!
//!   gaussian   exp(-x^2/2)        ->  sqrt(2 pi) exp(-2 pi^2 u^2)
//!   cauchy     2/(1+x^2)          ->  2 pi exp(-2 pi |u|)
//!   laplacian  exp(-|x|)          ->  2/(1 + 4 pi^2 u^2)
//!   hat        (1-|x|)+           ->  (1 - cos(2 pi u)) / (2 pi^2 u^2)
//!   cosine     cos(x) 1{|x|<=pi/2} ->  2 cos(pi^2 u) / (1 - 4 pi^2 u^2)
//!
//! Every built-in base is a product of identical one-dimensional factors, so
//! d-dimensional transforms are products of the factors above and mass
//! integrals reduce to one-dimensional quadrature.

use crate::error::{Error, Result};
use crate::quadrature::{self, LineIntegral, DEFAULT_TOL};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Eval-only view of a symmetric kernel of order `m` on d-dimensional
/// arguments. Implemented by [`KernelSpec`], mollified kernels, feature
/// expansions, and ad-hoc test kernels.
pub trait SymmetricKernel: Send + Sync {
    fn order(&self) -> usize;
    fn arg_dim(&self) -> usize;
    /// Evaluate at exactly `order()` points of dimension `arg_dim()`.
    fn eval_args(&self, args: &[&[f64]]) -> f64;
}

/// Wrap a closure as a kernel; used by oracles and studies that need an
/// exactly-known target.
pub struct FnKernel<F> {
    pub m: usize,
    pub d: usize,
    pub f: F,
}

impl<F: Fn(&[&[f64]]) -> f64 + Send + Sync> SymmetricKernel for FnKernel<F> {
    fn order(&self) -> usize {
        self.m
    }
    fn arg_dim(&self) -> usize {
        self.d
    }
    fn eval_args(&self, args: &[&[f64]]) -> f64 {
        (self.f)(args)
    }
}

/// Tabulated one-dimensional base function on a uniform grid, linearly
/// interpolated, clamped to the edge values outside `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl GridTable {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(lo < hi) || values.len() < 2 {
            return Err(Error::invalid(
                "grid table needs lo < hi and at least two values",
            ));
        }
        Ok(Self { lo, hi, values })
    }

    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.values.len();
        let t = (x - self.lo) / (self.hi - self.lo) * (n - 1) as f64;
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    Cauchy,
    Laplacian,
    Hat,
    Cosine,
    CustomGrid(GridTable),
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Cauchy => "cauchy",
            KernelKind::Laplacian => "laplacian",
            KernelKind::Hat => "hat",
            KernelKind::Cosine => "cosine",
            KernelKind::CustomGrid(_) => "custom-grid",
        }
    }
}

/// A symmetric kernel of order `m` on `R^d` arguments. For `m == 2` every
/// built-in is shift-invariant, `f(x, y) = f0(x - y)`; for other orders the
/// same base functional form is read as a function of all `m*d` coordinates,
/// which keeps it symmetric under permutation of the argument blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Order of the kernel (number of arguments).
    pub m: usize,
    /// Dimension of each argument.
    pub d: usize,
    pub shift_invariant: bool,
    /// Positive definite base (Bochner: nonnegative transform).
    pub pd: bool,
    /// Lipschitz constant of the one-dimensional base factor, when known.
    pub lipschitz: Option<f64>,
    /// Scale of a Gaussian mollifier applied to the base, if any.
    pub mollify_h: Option<f64>,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::invalid("kernel order and dimension must be >= 1"));
        }
        let (pd, lipschitz) = match &kind {
            KernelKind::Gaussian => (true, Some((-0.5f64).exp())),
            KernelKind::Cauchy => (true, Some(3.0 * 3.0f64.sqrt() / 4.0)),
            KernelKind::Laplacian => (true, Some(1.0)),
            KernelKind::Hat => (true, Some(1.0)),
            KernelKind::Cosine => (false, Some(1.0)),
            KernelKind::CustomGrid(_) => (false, None),
        };
        Ok(Self {
            kind,
            m,
            d,
            shift_invariant: m <= 2,
            pd,
            lipschitz,
            mollify_h: None,
        })
    }

    /// Registry lookup for the names used in CLI configs.
    pub fn by_name(name: &str, m: usize, d: usize) -> Result<Self> {
        let kind = match name {
            "gaussian" => KernelKind::Gaussian,
            "cauchy" => KernelKind::Cauchy,
            "laplacian" => KernelKind::Laplacian,
            "hat" => KernelKind::Hat,
            "cosine" => KernelKind::Cosine,
            other => {
                return Err(Error::invalid(format!(
                    "unknown kernel `{other}` (known: gaussian, cauchy, laplacian, hat, cosine)"
                )))
            }
        };
        Self::new(kind, m, d)
    }

    pub fn gaussian(m: usize, d: usize) -> Self {
        Self::new(KernelKind::Gaussian, m, d).unwrap()
    }
    pub fn cauchy(m: usize, d: usize) -> Self {
        Self::new(KernelKind::Cauchy, m, d).unwrap()
    }
    pub fn laplacian(m: usize, d: usize) -> Self {
        Self::new(KernelKind::Laplacian, m, d).unwrap()
    }
    pub fn hat(m: usize, d: usize) -> Self {
        Self::new(KernelKind::Hat, m, d).unwrap()
    }
    pub fn cosine(m: usize, d: usize) -> Self {
        Self::new(KernelKind::Cosine, m, d).unwrap()
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Dimension of the space the Fourier machinery operates on: `d` for the
    /// shift-invariant (m = 2) and single-argument views, `m*d` otherwise.
    pub fn fourier_dim(&self) -> usize {
        if self.m == 2 && self.shift_invariant || self.m == 1 {
            self.d
        } else {
            self.m * self.d
        }
    }

    fn factor_1d(&self, x: f64) -> f64 {
        match &self.kind {
            KernelKind::Gaussian => (-0.5 * x * x).exp(),
            KernelKind::Cauchy => 2.0 / (1.0 + x * x),
            KernelKind::Laplacian => (-x.abs()).exp(),
            KernelKind::Hat => (1.0 - x.abs()).max(0.0),
            KernelKind::Cosine => {
                if x.abs() <= PI / 2.0 {
                    x.cos()
                } else {
                    0.0
                }
            }
            KernelKind::CustomGrid(t) => t.interpolate(x),
        }
    }

    fn mollified_factor_1d(&self, x: f64) -> f64 {
        match self.mollify_h {
            None => self.factor_1d(x),
            Some(h) => {
                // Convolution with the N(0, h^2) density; the Gaussian weight
                // truncates negligibly beyond 12 h.
                let norm = 1.0 / (h * (2.0 * PI).sqrt());
                quadrature::integrate(
                    |t| {
                        let w = (x - t) / h;
                        self.factor_1d(t) * norm * (-0.5 * w * w).exp()
                    },
                    x - 12.0 * h,
                    x + 12.0 * h,
                    1e-10,
                )
                .unwrap_or(f64::NAN)
            }
        }
    }

    /// Base function on `R^{fourier_dim}` (product of per-coordinate factors).
    pub fn base_eval(&self, z: &[f64]) -> f64 {
        z.iter().map(|&c| self.mollified_factor_1d(c)).product()
    }

    /// Base value at the origin, `f0(0)`.
    pub fn base_value_at_zero(&self) -> f64 {
        self.base_eval(&vec![0.0; self.fourier_dim()])
    }

    /// Evaluate the kernel at `m` points of dimension `d`.
    pub fn eval(&self, args: &[&[f64]]) -> Result<f64> {
        if args.len() != self.m {
            return Err(Error::invalid(format!(
                "kernel of order {} called with {} arguments",
                self.m,
                args.len()
            )));
        }
        for a in args {
            if a.len() != self.d {
                return Err(Error::invalid(format!(
                    "kernel argument has dimension {}, expected {}",
                    a.len(),
                    self.d
                )));
            }
        }
        Ok(self.eval_args(args))
    }

    /// Per-coordinate transform factor under the 2 pi convention. Real for
    /// every built-in (even bases); complex in general for tabulated bases.
    pub fn transform_factor(&self, u: f64) -> Complex64 {
        let base = match &self.kind {
            KernelKind::Gaussian => Complex64::new((2.0 * PI).sqrt() * (-2.0 * PI * PI * u * u).exp(), 0.0),
            KernelKind::Cauchy => Complex64::new(2.0 * PI * (-2.0 * PI * u.abs()).exp(), 0.0),
            KernelKind::Laplacian => Complex64::new(2.0 / (1.0 + 4.0 * PI * PI * u * u), 0.0),
            KernelKind::Hat => Complex64::new(fejer(u), 0.0),
            KernelKind::Cosine => Complex64::new(cosine_transform(u), 0.0),
            KernelKind::CustomGrid(t) => custom_transform(t, u),
        };
        match self.mollify_h {
            None => base,
            Some(h) => base * (-2.0 * PI * PI * h * h * u * u).exp(),
        }
    }

    /// Transform at `u` in `R^{fourier_dim}`: the product of coordinate factors.
    pub fn fourier_transform(&self, u: &[f64]) -> Result<Complex64> {
        if u.len() != self.fourier_dim() {
            return Err(Error::invalid(format!(
                "transform argument has dimension {}, expected {}",
                u.len(),
                self.fourier_dim()
            )));
        }
        Ok(u.iter()
            .map(|&c| self.transform_factor(c))
            .product::<Complex64>())
    }

    /// Per-coordinate transform mass; the sign-measure machinery reuses it.
    pub(crate) fn factor_l1_value(&self) -> Result<f64> {
        self.factor_l1()
    }

    fn factor_l1(&self) -> Result<f64> {
        if self.pd && self.mollify_h.is_none() {
            // Bochner: nonnegative transform integrates to the base at zero.
            return Ok(self.factor_1d(0.0));
        }
        match &self.kind {
            KernelKind::Cosine => {
                let (pos, neg) = signed_even_masses(
                    |u| self.transform_factor(u).re,
                    cosine_sign_breakpoints(2000),
                )?;
                Ok(pos + neg)
            }
            KernelKind::CustomGrid(_) => Ok(tabulate_transform(self).norm_moment(0.0)),
            _ => match line_mass(|u| self.transform_factor(u).norm())? {
                LineIntegral::Converged { value, .. } => Ok(value),
                LineIntegral::Divergent { .. } => Ok(f64::INFINITY),
            },
        }
    }

    /// `||fhat||_{L1}` over `R^{fourier_dim}`; infinity sentinel if divergent.
    pub fn fourier_l1_norm(&self) -> Result<f64> {
        let per = self.factor_l1()?;
        Ok(per.powi(self.fourier_dim() as i32))
    }

    /// Moment integral `int |fhat(u)| ||u||^q du`; `q = 0` delegates to the
    /// L1 norm, and a non-shrinking tail makes the result an infinity
    /// sentinel per the range-doubling rule.
    pub fn fourier_moment(&self, q: f64) -> Result<f64> {
        if q < 0.0 {
            return Err(Error::invalid("moment order must be nonnegative"));
        }
        if q == 0.0 {
            return self.fourier_l1_norm();
        }
        if matches!(self.kind, KernelKind::CustomGrid(_)) && self.fourier_dim() == 1 {
            return Ok(tabulate_transform(self).norm_moment(q));
        }
        match self.fourier_dim() {
            1 => {
                let out = quadrature::integrate_real_line(
                    |u| self.transform_factor(u).norm() * u.abs().powf(q),
                    DEFAULT_TOL,
                )?;
                Ok(out.value_or_infinity())
            }
            2 => {
                let out = quadrature::integrate_plane(
                    |a, b| {
                        let mag = (self.transform_factor(a) * self.transform_factor(b)).norm();
                        mag * (a * a + b * b).powf(0.5 * q)
                    },
                    1e-9,
                )?;
                Ok(out.value_or_infinity())
            }
            dim => Err(Error::Unsupported(format!(
                "moment quadrature implemented for transform dimension <= 2, got {dim}"
            ))),
        }
    }

    /// Summary of the transform: mass, dimension, and whether the value is
    /// analytically certified (tabulated bases are discrete approximations).
    pub fn fourier_info(&self) -> Result<FourierInfo> {
        Ok(FourierInfo {
            l1_norm: self.fourier_l1_norm()?,
            dim: self.fourier_dim(),
            certified: !matches!(self.kind, KernelKind::CustomGrid(_)),
        })
    }

    /// Gaussian mollification at scale `h > 0`: the transform is damped by
    /// exp(-2 pi^2 h^2 ||u||^2), the base becomes the convolution with the
    /// N(0, h^2 I) density (evaluated by quadrature).
    pub fn mollify(&self, h: f64) -> Result<MollifiedKernel> {
        if !(h > 0.0) {
            return Err(Error::invalid("mollifier scale must be positive"));
        }
        if self.mollify_h.is_some() {
            return Err(Error::Unsupported("kernel is already mollified".into()));
        }
        let mut spec = self.clone();
        spec.mollify_h = Some(h);
        Ok(MollifiedKernel {
            parent: self.clone(),
            h,
            spec,
        })
    }

    /// Verify |fhat(u)| <= L / (1 + ||u||^{dim + eps}) on a radial grid,
    /// probing axis and diagonal directions. Reports the worst ratio
    /// |fhat| (1 + ||u||^{dim+eps}) / L.
    pub fn check_fourier_tail(&self, l: f64, eps: f64, radii: &[f64]) -> Result<TailCheckReport> {
        if radii.is_empty() {
            return Err(Error::invalid("tail check needs a nonempty radial grid"));
        }
        if !(l > 0.0 && eps > 0.0) {
            return Err(Error::invalid("tail check needs L > 0 and eps > 0"));
        }
        let dim = self.fourier_dim();
        let expo = dim as f64 + eps;
        let mut worst_ratio = 0.0f64;
        let mut worst_radius = 0.0f64;
        for &r in radii {
            let r = r.abs();
            let mut points: Vec<Vec<f64>> = Vec::new();
            let mut axis = vec![0.0; dim];
            axis[0] = r;
            points.push(axis);
            if dim > 1 {
                points.push(vec![r / (dim as f64).sqrt(); dim]);
            }
            for u in points {
                let mag = self.fourier_transform(&u)?.norm();
                let ratio = mag * (1.0 + r.powf(expo)) / l;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst_radius = r;
                }
            }
        }
        Ok(TailCheckReport {
            pass: worst_ratio <= 1.0,
            worst_ratio,
            worst_radius,
        })
    }
}

impl SymmetricKernel for KernelSpec {
    fn order(&self) -> usize {
        self.m
    }
    fn arg_dim(&self) -> usize {
        self.d
    }
    fn eval_args(&self, args: &[&[f64]]) -> f64 {
        if self.m == 2 && self.shift_invariant {
            let diff: Vec<f64> = args[0]
                .iter()
                .zip(args[1].iter())
                .map(|(a, b)| a - b)
                .collect();
            self.base_eval(&diff)
        } else {
            let flat: Vec<f64> = args.iter().flat_map(|a| a.iter().copied()).collect();
            self.base_eval(&flat)
        }
    }
}

/// Transform summary returned by [`KernelSpec::fourier_info`].
#[derive(Debug, Clone, Serialize)]
pub struct FourierInfo {
    pub l1_norm: f64,
    pub dim: usize,
    pub certified: bool,
}

/// Result of [`KernelSpec::mollify`]: the parent kernel, the scale, and the
/// mollified spec usable everywhere a `KernelSpec` is.
#[derive(Debug, Clone)]
pub struct MollifiedKernel {
    pub parent: KernelSpec,
    pub h: f64,
    pub spec: KernelSpec,
}

impl MollifiedKernel {
    pub fn fourier_transform(&self, u: &[f64]) -> Result<Complex64> {
        self.spec.fourier_transform(u)
    }
    pub fn base_eval(&self, z: &[f64]) -> f64 {
        self.spec.base_eval(z)
    }
}

impl SymmetricKernel for MollifiedKernel {
    fn order(&self) -> usize {
        self.spec.m
    }
    fn arg_dim(&self) -> usize {
        self.spec.d
    }
    fn eval_args(&self, args: &[&[f64]]) -> f64 {
        self.spec.eval_args(args)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailCheckReport {
    pub pass: bool,
    pub worst_ratio: f64,
    pub worst_radius: f64,
}

/// Surface-measure constant from polar-coordinate integration, with the
/// convention (-1)!! = 0!! = 1:
/// even n: (2 pi)^{n/2} / (n-2)!!, odd n: 2 (2 pi)^{(n-1)/2} / (n-2)!!.
pub fn polar_constant(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("polar constant requires n >= 1"));
    }
    let double_factorial = |k: i64| -> f64 {
        let mut acc = 1.0f64;
        let mut v = k;
        while v > 1 {
            acc *= v as f64;
            v -= 2;
        }
        acc
    };
    let df = double_factorial(n as i64 - 2);
    let value = if n.is_multiple_of(2) {
        (2.0 * PI).powi(n as i32 / 2) / df
    } else {
        2.0 * (2.0 * PI).powi((n as i32 - 1) / 2) / df
    };
    Ok(value)
}

/// (1 - cos(2 pi u)) / (2 pi^2 u^2) = sinc(u)^2, evaluated stably near zero.
fn fejer(u: f64) -> f64 {
    let t = PI * u;
    if t.abs() < 1e-4 {
        let s = 1.0 - t * t / 6.0;
        return s * s;
    }
    let s = t.sin() / t;
    s * s
}

/// 2 cos(pi^2 u) / (1 - 4 pi^2 u^2), with the removable singularity at
/// |u| = 1/(2 pi) filled by the local expansion.
fn cosine_transform(u: f64) -> f64 {
    let a = u.abs();
    let u0 = 1.0 / (2.0 * PI);
    let delta = a - u0;
    if delta.abs() < 1e-4 {
        // near u0: 2 cos(pi^2 u) = -2 sin(pi^2 delta), 1 - 4 pi^2 u^2 =
        // -2 pi delta (1 + 2 pi u); the ratio tends to pi/2
        let num = (PI * PI * delta).sin();
        let frac = if delta.abs() < 1e-12 {
            PI
        } else {
            num / (PI * delta)
        };
        return frac / (1.0 + 2.0 * PI * a);
    }
    2.0 * (PI * PI * u).cos() / (1.0 - 4.0 * PI * PI * u * u)
}

fn custom_transform(table: &GridTable, u: f64) -> Complex64 {
    let re = quadrature::integrate(
        |x| table.interpolate(x) * (-2.0 * PI * u * x).cos(),
        table.lo,
        table.hi,
        DEFAULT_TOL,
    )
    .unwrap_or(f64::NAN);
    // convention e^{-2 pi i u x}: imaginary part carries -sin
    let im = quadrature::integrate(
        |x| -table.interpolate(x) * (2.0 * PI * u * x).sin(),
        table.lo,
        table.hi,
        DEFAULT_TOL,
    )
    .unwrap_or(f64::NAN);
    Complex64::new(re, im)
}

/// One-dimensional mass integral by range doubling. Terminates when a
/// doubled range adds less than the tail threshold; at the range cap, a
/// still-shrinking increment sequence is closed with its geometric-series
/// extrapolation (exact for power-law tails), otherwise the integral is
/// reported divergent.
pub(crate) fn line_mass(f: impl Fn(f64) -> f64) -> Result<LineIntegral> {
    let mut range = 1.0f64;
    let mut total = quadrature::integrate(&f, -range, range, DEFAULT_TOL)?;
    let mut prev_increment = f64::INFINITY;
    loop {
        let next = 2.0 * range;
        let left = quadrature::integrate(&f, -next, -range, DEFAULT_TOL)?;
        let right = quadrature::integrate(&f, range, next, DEFAULT_TOL)?;
        let increment = left + right;
        total += increment;
        range = next;
        if increment.abs() < quadrature::TAIL_INCREMENT_TOL {
            return Ok(LineIntegral::Converged {
                value: total,
                range,
            });
        }
        if range >= 1024.0 {
            let ratio = increment.abs() / prev_increment.abs();
            if ratio <= 0.9 {
                let tail = increment.abs() * ratio / (1.0 - ratio);
                return Ok(LineIntegral::Converged {
                    value: total + tail.copysign(increment),
                    range,
                });
            }
            return Ok(LineIntegral::Divergent {
                partial: total,
                range,
            });
        }
        prev_increment = increment;
    }
}

/// Positive and negative masses of a signed even factor whose sign changes
/// only at a known increasing sequence of breakpoints, integrating the
/// smooth signed function per sign interval (no absolute-value kinks) and
/// closing the alternating tail with a power-law extrapolation. Returns
/// one-sided masses doubled to cover the full line.
pub(crate) fn signed_even_masses(
    f: impl Fn(f64) -> f64,
    breakpoints: impl Iterator<Item = f64>,
) -> Result<(f64, f64)> {
    let mut pos = 0.0f64;
    let mut neg = 0.0f64;
    let mut lo = 0.0f64;
    let mut last_abs = 0.0f64;
    let mut count = 0usize;
    for hi in breakpoints {
        let piece = quadrature::integrate(&f, lo, hi, DEFAULT_TOL)?;
        if piece >= 0.0 {
            pos += piece;
        } else {
            neg += -piece;
        }
        last_abs = piece.abs();
        lo = hi;
        count += 1;
        if count > 8 && last_abs < 1e-13 {
            last_abs = 0.0;
            break;
        }
    }
    // |piece_k| ~ c/k^2 for 1/u^2 tails, so the remaining sum is ~ |piece_K| K,
    // split evenly across the alternating signs
    let tail = last_abs * count as f64;
    pos += 0.5 * tail;
    neg += 0.5 * tail;
    Ok((2.0 * pos, 2.0 * neg))
}

/// Sign-change points of the cosine-kernel transform factor: (2k+1)/(2 pi)
/// for k >= 1. The k = 0 point is the removable singularity, not a zero.
pub(crate) fn cosine_sign_breakpoints(count: usize) -> impl Iterator<Item = f64> {
    (1..=count).map(|k| (2.0 * k as f64 + 1.0) / (2.0 * PI))
}

/// Tabulated transform of a custom-grid base on a uniform frequency grid
/// over [-range, range]; trapezoid masses of the positive/negative parts of
/// the real and imaginary components. Resolution 4096 cells. Discrete
/// approximation, flagged non-certified upstream.
pub(crate) struct TabulatedTransform {
    pub us: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub step: f64,
}

pub(crate) const CUSTOM_FREQ_RANGE: f64 = 64.0;
pub(crate) const CUSTOM_FREQ_CELLS: usize = 4096;

pub(crate) fn tabulate_transform(spec: &KernelSpec) -> TabulatedTransform {
    let n = CUSTOM_FREQ_CELLS + 1;
    let step = 2.0 * CUSTOM_FREQ_RANGE / CUSTOM_FREQ_CELLS as f64;
    let mut us = Vec::with_capacity(n);
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for i in 0..n {
        let u = -CUSTOM_FREQ_RANGE + step * i as f64;
        let v = spec.transform_factor(u);
        us.push(u);
        re.push(v.re);
        im.push(v.im);
    }
    TabulatedTransform { us, re, im, step }
}

impl TabulatedTransform {
    /// Trapezoid integral of norm(fhat) |u|^q over the tabulated range.
    pub fn norm_moment(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.us.len() {
            let w = if i == 0 || i == self.us.len() - 1 {
                0.5
            } else {
                1.0
            } * self.step;
            let mag = (self.re[i] * self.re[i] + self.im[i] * self.im[i]).sqrt();
            let weight = if q == 0.0 { 1.0 } else { self.us[i].abs().powf(q) };
            acc += w * mag * weight;
        }
        acc
    }

    /// Trapezoid masses (pos re, neg re, pos im, neg im).
    pub fn masses(&self) -> [f64; 4] {
        let mut out = [0.0f64; 4];
        let weight = |i: usize| {
            if i == 0 || i == self.us.len() - 1 {
                0.5
            } else {
                1.0
            }
        };
        for i in 0..self.us.len() {
            let w = weight(i) * self.step;
            out[0] += w * self.re[i].max(0.0);
            out[1] += w * (-self.re[i]).max(0.0);
            out[2] += w * self.im[i].max(0.0);
            out[3] += w * (-self.im[i]).max(0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_examples() {
        let g = KernelSpec::gaussian(2, 2);
        let z = [0.0, 0.0];
        assert_abs_diff_eq!(g.eval(&[&z, &z]).unwrap(), 1.0);

        let hat = KernelSpec::hat(2, 1);
        assert_abs_diff_eq!(hat.eval(&[&[0.5], &[0.0]]).unwrap(), 0.5);

        let c = KernelSpec::cauchy(2, 2);
        let x = [0.3, -1.2];
        assert_abs_diff_eq!(c.eval(&[&x, &x]).unwrap(), 4.0);
    }

    #[test]
    fn eval_arity_errors() {
        let g = KernelSpec::gaussian(2, 1);
        assert!(g.eval(&[&[0.0]]).is_err());
        assert!(g.eval(&[&[0.0][..], &[0.0, 1.0][..]]).is_err());
    }

    #[test]
    fn transform_values() {
        let cosine = KernelSpec::cosine(2, 1);
        assert_abs_diff_eq!(
            cosine.fourier_transform(&[0.0]).unwrap().re,
            2.0,
            epsilon = 1e-14
        );

        let hat = KernelSpec::hat(2, 1);
        assert_abs_diff_eq!(hat.fourier_transform(&[1.0]).unwrap().re, 0.0, epsilon = 1e-14);

        let g = KernelSpec::gaussian(2, 1);
        assert_abs_diff_eq!(
            g.fourier_transform(&[0.0]).unwrap().re,
            (2.0 * PI).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn cosine_transform_is_smooth_at_singularity() {
        let u0 = 1.0 / (2.0 * PI);
        assert_abs_diff_eq!(cosine_transform(u0), PI / 2.0, epsilon = 1e-9);
        // the expansion agrees with the direct formula right at the switch
        let u = u0 + 0.99e-4;
        assert_abs_diff_eq!(
            cosine_transform(u),
            2.0 * (PI * PI * u).cos() / (1.0 - 4.0 * PI * PI * u * u),
            epsilon = 1e-12
        );
        // continuity across the switch (the genuine slope there is ~ -pi^2/2)
        assert_abs_diff_eq!(
            cosine_transform(u0 + 1.01e-4),
            cosine_transform(u0 + 0.99e-4),
            epsilon = 1e-4
        );
    }

    #[test]
    fn l1_norms() {
        assert_abs_diff_eq!(
            KernelSpec::gaussian(2, 1).fourier_l1_norm().unwrap(),
            1.0
        );
        assert_abs_diff_eq!(KernelSpec::cauchy(2, 1).fourier_l1_norm().unwrap(), 2.0);
        assert_abs_diff_eq!(KernelSpec::cauchy(2, 3).fourier_l1_norm().unwrap(), 8.0);
        // cosine is not PD; quadrature route, value from an independent
        // high-precision evaluation
        let l1 = KernelSpec::cosine(2, 1).fourier_l1_norm().unwrap();
        assert_abs_diff_eq!(l1, 1.17855, epsilon = 2e-3);
    }

    #[test]
    fn moments() {
        let g = KernelSpec::gaussian(2, 1);
        assert_abs_diff_eq!(g.fourier_moment(0.0).unwrap(), 1.0);
        // sqrt(2 pi) int u^2 e^{-2 pi^2 u^2} du = 1/(4 pi^2)
        assert_abs_diff_eq!(
            g.fourier_moment(2.0).unwrap(),
            1.0 / (4.0 * PI * PI),
            epsilon = 1e-9
        );
        assert!(KernelSpec::laplacian(2, 1)
            .fourier_moment(1.0)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn polar_constants() {
        assert_abs_diff_eq!(polar_constant(1).unwrap(), 2.0);
        assert_abs_diff_eq!(polar_constant(2).unwrap(), 2.0 * PI);
        assert_abs_diff_eq!(polar_constant(3).unwrap(), 4.0 * PI);
        assert_abs_diff_eq!(polar_constant(4).unwrap(), 2.0 * PI * PI, epsilon = 1e-12);
        assert!(polar_constant(0).is_err());
    }

    #[test]
    fn mollify_basics() {
        let g = KernelSpec::gaussian(2, 1);
        let mk = g.mollify(1.0).unwrap();
        // transform unchanged at zero
        assert_abs_diff_eq!(
            mk.fourier_transform(&[0.0]).unwrap().re,
            g.fourier_transform(&[0.0]).unwrap().re,
            epsilon = 1e-12
        );
        // damped elsewhere
        assert!(mk.fourier_transform(&[0.4]).unwrap().norm() < g.fourier_transform(&[0.4]).unwrap().norm());
        // closed form for the mollified gaussian: (1+h^2)^{-1/2} e^{-x^2/(2(1+h^2))}
        assert_abs_diff_eq!(mk.base_eval(&[0.0]), 1.0 / 2.0f64.sqrt(), epsilon = 1e-8);
        assert_abs_diff_eq!(
            mk.base_eval(&[1.3]),
            (1.0f64 / 2.0).sqrt() * (-1.3f64 * 1.3 / 4.0).exp(),
            epsilon = 1e-8
        );
        assert!(g.mollify(0.0).is_err());
    }

    #[test]
    fn tail_check_examples() {
        let cosine = KernelSpec::cosine(2, 1);
        let radii: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
        let rep = cosine.check_fourier_tail(2.0, 1.0, &radii).unwrap();
        assert!(rep.pass, "worst ratio {}", rep.worst_ratio);

        let hat = KernelSpec::hat(2, 1);
        let rep = hat.check_fourier_tail(0.001, 1.0, &[0.0, 0.1]).unwrap();
        assert!(!rep.pass);
        assert!(rep.worst_ratio > 1.0);
    }

    #[test]
    fn custom_grid_clamps_and_transforms() {
        let table = GridTable::new(-1.0, 1.0, vec![0.3, 0.3, 0.3]).unwrap();
        let spec = KernelSpec::new(KernelKind::CustomGrid(table), 2, 1).unwrap();
        // constant kernel: clamped interpolation gives 0.3 everywhere
        assert_abs_diff_eq!(spec.eval(&[&[5.0], &[-3.0]]).unwrap(), 0.3);
        let info = spec.fourier_info().unwrap();
        assert!(!info.certified);
    }

    #[test]
    fn asymmetric_table_has_imaginary_transform() {
        let table = GridTable::new(0.0, 1.0, vec![0.0, 1.0, 0.0]).unwrap();
        let spec = KernelSpec::new(KernelKind::CustomGrid(table), 1, 1).unwrap();
        let v = spec.fourier_transform(&[0.7]).unwrap();
        assert!(v.im.abs() > 1e-3);
    }
}
