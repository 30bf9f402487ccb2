//! Random-Fourier-feature machinery: sign-measure decomposition of a
//! transform, frequency sampling from its normalized parts, construction of
//! bounded symmetric tensor expansions, measured uniform error, and the
//! covering-argument sample-size formulas.
//!
//! The expansion of a kernel f with transform fhat = ghat + i*hhat splits
//! ghat and hhat into positive/negative parts with masses A+g, A-g, A+h,
//! A-h, draws frequencies from each normalized part, and combines sample
//! means of cosines/sines:
//!
//!   s_D = A+g s_{D1} - A-g s_{D2} - A+h s_{D3} + A-h s_{D4}.
//!
//! Multi-argument cosines/sines are expanded into products of one-argument
//! trigonometric bases, and the result is symmetrized. Coefficient mass
//! stays below 2^m ||fhat||_{L1} and every basis is bounded by 1.

use crate::error::{Error, Result};
use crate::kernels::{
    self, KernelKind, KernelSpec, SymmetricKernel, CUSTOM_FREQ_CELLS, CUSTOM_FREQ_RANGE,
};
use crate::numeric::{linspace, CompensatedSum};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The four sign-measure parts of a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartId {
    /// Positive part of Re fhat (cosine bases, weight +).
    GPlus = 0,
    /// Negative part of Re fhat (cosine bases, weight -).
    GMinus = 1,
    /// Positive part of Im fhat (sine bases, weight -).
    HPlus = 2,
    /// Negative part of Im fhat (sine bases, weight +).
    HMinus = 3,
}

impl PartId {
    pub const ALL: [PartId; 4] = [PartId::GPlus, PartId::GMinus, PartId::HPlus, PartId::HMinus];

    pub fn index(self) -> usize {
        self as usize
    }

    fn is_sine(self) -> bool {
        matches!(self, PartId::HPlus | PartId::HMinus)
    }

    /// Sign the part carries in the combination s_D.
    fn combination_sign(self) -> f64 {
        match self {
            PartId::GPlus | PartId::HMinus => 1.0,
            PartId::GMinus | PartId::HPlus => -1.0,
        }
    }
}

enum CoordSampler {
    /// Gaussian transform factor, exact: N(0, 1/(2 pi sqrt(1+h^2))).
    Gaussian { sd: f64 },
    /// Cauchy-kernel factor ~ exp(-2 pi |u|): Laplace with rate 2 pi;
    /// mollification handled by damping acceptance.
    Laplace { rate: f64, h: Option<f64> },
    /// Laplacian-kernel factor ~ 1/(1 + 4 pi^2 u^2): Cauchy(0, 1/(2 pi)).
    Cauchy { scale: f64, h: Option<f64> },
    /// Fejer factor sinc^2(u): rejection from Cauchy(0, 1/pi), envelope
    /// constant 2 since sinc^2(u) (1 + pi^2 u^2) <= 2.
    HatReject { h: Option<f64> },
    /// Signed cosine-kernel part: rejection from Cauchy(0, 1), envelope
    /// 2/(1+u^2) from the transform's tail bound.
    CosineReject { positive: bool, h: Option<f64> },
    /// Piecewise-constant inverse CDF over a tabulated part density.
    Grid { lo: f64, step: f64, cdf: Vec<f64> },
}

impl CoordSampler {
    fn damp(h: Option<f64>, u: f64) -> f64 {
        match h {
            None => 1.0,
            Some(h) => (-2.0 * PI * PI * h * h * u * u).exp(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            CoordSampler::Gaussian { sd } => {
                let z: f64 = rng.sample(StandardNormal);
                z * sd
            }
            CoordSampler::Laplace { rate, h } => loop {
                let e: f64 = -rng.random::<f64>().ln();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let u = sign * e / rate;
                if rng.random::<f64>() <= Self::damp(*h, u) {
                    return u;
                }
            },
            CoordSampler::Cauchy { scale, h } => loop {
                let v: f64 = rng.random::<f64>() - 0.5;
                let u = scale * (PI * v).tan();
                if rng.random::<f64>() <= Self::damp(*h, u) {
                    return u;
                }
            },
            CoordSampler::HatReject { h } => loop {
                let v: f64 = rng.random::<f64>() - 0.5;
                let u = (PI * v).tan() / PI;
                let t = PI * u;
                let sinc = if t.abs() < 1e-8 { 1.0 } else { t.sin() / t };
                let accept = sinc * sinc * (1.0 + PI * PI * u * u) / 2.0 * Self::damp(*h, u);
                if rng.random::<f64>() <= accept.min(1.0) {
                    return u;
                }
            },
            CoordSampler::CosineReject { positive, h } => loop {
                let v: f64 = rng.random::<f64>() - 0.5;
                let u = (PI * v).tan();
                let g = cosine_factor(u) * Self::damp(*h, u);
                let part = if *positive { g.max(0.0) } else { (-g).max(0.0) };
                let accept = part * (1.0 + u * u) / 2.0;
                if rng.random::<f64>() <= accept.min(1.0) {
                    return u;
                }
            },
            CoordSampler::Grid { lo, step, cdf } => {
                let total = *cdf.last().unwrap();
                let target = rng.random::<f64>() * total;
                let cell = cdf.partition_point(|&c| c < target).min(cdf.len() - 1);
                let prev = if cell == 0 { 0.0 } else { cdf[cell - 1] };
                let width = cdf[cell] - prev;
                let frac = if width > 0.0 {
                    (target - prev) / width
                } else {
                    0.5
                };
                lo + (cell as f64 + frac) * step
            }
        }
    }
}

fn cosine_factor(u: f64) -> f64 {
    // mirror of the kernels-module factor; kept local to the sampler
    KernelSpec::cosine(1, 1).transform_factor(u).re
}

enum CoordSplit {
    /// Identical real even factors on every coordinate, with per-coordinate
    /// positive/negative masses and samplers.
    ProductReal {
        pos_mass: f64,
        neg_mass: f64,
        pos: CoordSampler,
        neg: Option<CoordSampler>,
    },
    /// One-dimensional tabulated transform with up to four part samplers.
    Tabulated { samplers: [Option<CoordSampler>; 4] },
}

/// Sign-measure decomposition of a kernel transform: the four part masses
/// and frequency samplers over R^{fourier_dim}.
pub struct SignMeasureParts {
    pub masses: [f64; 4],
    pub fourier_dim: usize,
    pub kernel: KernelSpec,
    split: CoordSplit,
}

/// Masses of the positive/negative parts of a single real factor.
fn factor_masses(spec: &KernelSpec) -> Result<(f64, f64)> {
    match &spec.kind {
        KernelKind::Cosine => kernels::signed_even_masses(
            |u| spec.transform_factor(u).re,
            kernels::cosine_sign_breakpoints(2000),
        ),
        KernelKind::CustomGrid(_) => unreachable!("custom handled by tabulation"),
        _ => {
            // nonnegative transforms
            let l1 = spec.factor_l1_value()?;
            Ok((l1, 0.0))
        }
    }
}

fn coord_sampler(spec: &KernelSpec, positive: bool) -> CoordSampler {
    let h = spec.mollify_h;
    match &spec.kind {
        KernelKind::Gaussian => {
            let widen = 1.0 + h.unwrap_or(0.0) * h.unwrap_or(0.0);
            CoordSampler::Gaussian {
                sd: 1.0 / (2.0 * PI * widen.sqrt()),
            }
        }
        KernelKind::Cauchy => CoordSampler::Laplace {
            rate: 2.0 * PI,
            h,
        },
        KernelKind::Laplacian => CoordSampler::Cauchy {
            scale: 1.0 / (2.0 * PI),
            h,
        },
        KernelKind::Hat => CoordSampler::HatReject { h },
        KernelKind::Cosine => CoordSampler::CosineReject { positive, h },
        KernelKind::CustomGrid(_) => unreachable!("custom handled by tabulation"),
    }
}

/// Decompose the transform of `spec` into its four sign-measure parts.
///
/// For product-form transforms (all built-ins), the positive part of the
/// full product is a parity mixture of the per-coordinate parts, giving
///   A+ = ((a+ + a-)^Q + (a+ - a-)^Q) / 2
/// and the complementary expression for A-; drawing conditions coordinate
/// signs on the parity exactly.
pub fn decompose_sign_measure(spec: &KernelSpec) -> Result<SignMeasureParts> {
    let dim = spec.fourier_dim();
    let (masses, split) = if matches!(spec.kind, KernelKind::CustomGrid(_)) {
        if dim != 1 {
            return Err(Error::Unsupported(
                "sign decomposition of tabulated bases is one-dimensional only".into(),
            ));
        }
        let table = kernels::tabulate_transform(spec);
        let masses = table.masses();
        let step = 2.0 * CUSTOM_FREQ_RANGE / CUSTOM_FREQ_CELLS as f64;
        let mut samplers: [Option<CoordSampler>; 4] = [None, None, None, None];
        for (slot, sampler) in samplers.iter_mut().enumerate() {
            if masses[slot] <= 0.0 {
                continue;
            }
            let mut cdf = Vec::with_capacity(CUSTOM_FREQ_CELLS);
            let mut acc = 0.0;
            for cell in 0..CUSTOM_FREQ_CELLS {
                let mid = 0.5 * (table.re[cell] + table.re[cell + 1]);
                let mid_im = 0.5 * (table.im[cell] + table.im[cell + 1]);
                let v = match slot {
                    0 => mid.max(0.0),
                    1 => (-mid).max(0.0),
                    2 => mid_im.max(0.0),
                    _ => (-mid_im).max(0.0),
                };
                acc += v * step;
                cdf.push(acc);
            }
            *sampler = Some(CoordSampler::Grid {
                lo: -CUSTOM_FREQ_RANGE,
                step,
                cdf,
            });
        }
        (masses, CoordSplit::Tabulated { samplers })
    } else {
        let (a_pos, a_neg) = factor_masses(spec)?;
        if !(a_pos + a_neg).is_finite() {
            return Err(Error::Numeric {
                message: "transform mass did not converge".into(),
                residual: f64::NAN,
            });
        }
        let q = dim as f64;
        let sum = (a_pos + a_neg).powf(q);
        let diff_base = a_pos - a_neg;
        let diff = diff_base.signum().powi(dim as i32) * diff_base.abs().powf(q);
        let a_plus = 0.5 * (sum + diff);
        let a_minus = 0.5 * (sum - diff);
        let neg = if a_neg > 0.0 {
            Some(coord_sampler(spec, false))
        } else {
            None
        };
        (
            [a_plus, a_minus, 0.0, 0.0],
            CoordSplit::ProductReal {
                pos_mass: a_pos,
                neg_mass: a_neg,
                pos: coord_sampler(spec, true),
                neg,
            },
        )
    };
    if masses.iter().all(|&m| m < 1e-12) {
        return Err(Error::DegenerateKernel(
            "all sign-measure masses vanish".into(),
        ));
    }
    Ok(SignMeasureParts {
        masses,
        fourier_dim: dim,
        kernel: spec.clone(),
        split,
    })
}

/// Exact sequential sampling of sign indicators conditioned on their parity.
/// `pi_neg` is the per-coordinate probability of the negative part.
fn parity_conditioned_signs(
    rng: &mut ChaCha8Rng,
    dims: usize,
    pi_neg: f64,
    want_odd: bool,
) -> Vec<bool> {
    let lambda = 1.0 - 2.0 * pi_neg;
    // P(parity of k draws is odd) = (1 - lambda^k)/2
    let p_parity = |k: usize, odd: bool| -> f64 {
        let l = lambda.powi(k as i32);
        if odd {
            0.5 * (1.0 - l)
        } else {
            0.5 * (1.0 + l)
        }
    };
    let mut need_odd = want_odd;
    let mut signs = Vec::with_capacity(dims);
    for i in 0..dims {
        let rem = dims - i - 1;
        let denom = p_parity(rem + 1, need_odd);
        let p_take = if denom <= 0.0 {
            0.0
        } else {
            (pi_neg * p_parity(rem, !need_odd) / denom).clamp(0.0, 1.0)
        };
        let take = rng.random::<f64>() < p_take;
        signs.push(take);
        if take {
            need_odd = !need_odd;
        }
    }
    signs
}

impl SignMeasureParts {
    /// Total variation across the four parts, `sum masses`.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// i.i.d. frequencies from the normalized `part` density; deterministic
    /// given `seed` (each part owns its own stream).
    pub fn sample_frequencies(
        &self,
        part: PartId,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::invalid("frequency sample count must be >= 1"));
        }
        if self.masses[part.index()] <= 0.0 {
            return Err(Error::invalid(format!(
                "part {:?} has zero mass and cannot be sampled",
                part
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(part.index() as u64);
        let mut out = Vec::with_capacity(count);
        match &self.split {
            CoordSplit::Tabulated { samplers } => {
                let sampler = samplers[part.index()].as_ref().ok_or_else(|| {
                    Error::invalid(format!("no sampler for part {:?}", part))
                })?;
                for _ in 0..count {
                    out.push(vec![sampler.draw(&mut rng)]);
                }
            }
            CoordSplit::ProductReal {
                pos_mass,
                neg_mass,
                pos,
                neg,
            } => {
                if part.is_sine() {
                    return Err(Error::invalid(
                        "even real transforms have no imaginary part to sample",
                    ));
                }
                let pi_neg = neg_mass / (pos_mass + neg_mass);
                let want_odd = part == PartId::GMinus;
                for _ in 0..count {
                    let signs =
                        parity_conditioned_signs(&mut rng, self.fourier_dim, pi_neg, want_odd);
                    let mut freq = Vec::with_capacity(self.fourier_dim);
                    for take_neg in signs {
                        let sampler = if take_neg { neg.as_ref().unwrap() } else { pos };
                        freq.push(sampler.draw(&mut rng));
                    }
                    out.push(freq);
                }
            }
        }
        Ok(out)
    }
}

/// Per-part sample sizes with the covering-argument bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproxBudget {
    /// Target sup error (when sized by formula).
    pub t: Option<f64>,
    /// Half-width of the approximation box.
    pub box_half_width: Option<f64>,
    /// Moment order used by the certificate.
    pub q: Option<f64>,
    /// Sample counts for parts [g+, g-, h+, h-].
    pub counts: [usize; 4],
    /// Covering-ball radius implied by the chosen counts.
    pub covering_radius: Option<f64>,
    /// Calibration multipliers standing in for the proof constants.
    pub multipliers: [f64; 4],
}

impl ApproxBudget {
    /// Split a total feature count across parts proportionally to mass.
    pub fn proportional(total: usize, masses: &[f64; 4]) -> Result<Self> {
        if total == 0 {
            return Err(Error::invalid("total feature count must be >= 1"));
        }
        let sum: f64 = masses.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateKernel("no mass to allocate".into()));
        }
        let mut counts = [0usize; 4];
        let mut assigned = 0usize;
        for i in 0..4 {
            if masses[i] > 0.0 {
                counts[i] = ((total as f64 * masses[i] / sum).round() as usize).max(1);
                assigned += counts[i];
            }
        }
        // nudge the largest part so the total matches
        if assigned != total {
            let largest = (0..4)
                .filter(|&i| counts[i] > 0)
                .max_by(|&a, &b| masses[a].partial_cmp(&masses[b]).unwrap())
                .unwrap();
            let delta = total as i64 - assigned as i64;
            let adjusted = counts[largest] as i64 + delta;
            counts[largest] = adjusted.max(1) as usize;
        }
        Ok(Self {
            t: None,
            box_half_width: None,
            q: None,
            counts,
            covering_radius: None,
            multipliers: [1.0; 4],
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Inputs to [`required_sample_size`].
#[derive(Debug, Clone)]
pub struct BudgetInputs {
    /// Target sup error over the box.
    pub t: f64,
    /// Box half-width M for [-M, M]^{md}.
    pub box_half_width: f64,
    /// Moment order q >= 1.
    pub q: f64,
    /// Raw moment integral int |fhat(u)| ||u||^q du.
    pub moment: f64,
    /// Part masses [g+, g-, h+, h-].
    pub masses: [f64; 4],
    pub m: usize,
    pub d: usize,
    /// Calibration multipliers for the four parts (default 1).
    pub multipliers: [f64; 4],
}

/// Evaluate the displayed sample-size formulas:
///   D_i >= mult_i (md A_i^2 / t^2) log( kappa_i pi c diam A_i^{1-1/q} mu_q / t )
/// with diam([-M,M]^{md}) = 2 M sqrt(md), c = 3 sqrt(md/pi), mu_q the q-th
/// root of the raw moment integral, and kappa = 8 for the g- part, 1
/// otherwise. Zero-mass parts get D_i = 0; positive-mass parts get at
/// least 1.
pub fn required_sample_size(inputs: &BudgetInputs) -> Result<ApproxBudget> {
    if !(inputs.t > 0.0 && inputs.box_half_width > 0.0) {
        return Err(Error::invalid("need t > 0 and box half-width > 0"));
    }
    if inputs.q < 1.0 {
        return Err(Error::invalid("moment order q must be >= 1"));
    }
    if !inputs.moment.is_finite() {
        return Err(Error::Unsupported(
            "the q-th transform moment is infinite; mollify the kernel first".into(),
        ));
    }
    let md = (inputs.m * inputs.d) as f64;
    let diam = 2.0 * inputs.box_half_width * md.sqrt();
    let c = 3.0 * (md / PI).sqrt();
    let mu_q = inputs.moment.powf(1.0 / inputs.q);
    let mut counts = [0usize; 4];
    for (i, slot) in counts.iter_mut().enumerate() {
        let mass = inputs.masses[i];
        if mass <= 0.0 {
            continue;
        }
        let kappa = if i == PartId::GMinus.index() { 8.0 } else { 1.0 };
        let arg = kappa * PI * c * diam * mass.powf(1.0 - 1.0 / inputs.q) * mu_q / inputs.t;
        let raw = inputs.multipliers[i] * md * mass * mass / (inputs.t * inputs.t) * arg.ln();
        *slot = (raw.ceil().max(1.0)) as usize;
    }
    // covering radius implied by the largest part: r = (k1/k2)^{1/(q+md)}
    let d_max = *counts.iter().max().unwrap() as f64;
    let mass_max = inputs
        .masses
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let kappa1 = (c * diam).powf(md) * (-d_max * inputs.t * inputs.t / 128.0).exp();
    let kappa2 = (32.0 * PI / inputs.t).powf(inputs.q) * (inputs.moment / mass_max);
    let radius = (kappa1 / kappa2).powf(1.0 / (inputs.q + md));
    Ok(ApproxBudget {
        t: Some(inputs.t),
        box_half_width: Some(inputs.box_half_width),
        q: Some(inputs.q),
        counts,
        covering_radius: Some(radius.max(f64::MIN_POSITIVE)),
        multipliers: inputs.multipliers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trig {
    Cos,
    Sin,
}

/// One-argument trigonometric basis e(x) = cos/sin(2 pi freq . x).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigBasis {
    pub trig: Trig,
    pub freq: Vec<f64>,
}

impl TrigBasis {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.freq.iter().zip(x).map(|(f, v)| f * v).sum();
        let t = 2.0 * PI * dot;
        match self.trig {
            Trig::Cos => t.cos(),
            Trig::Sin => t.sin(),
        }
    }
}

/// One tensor term: basis indices for the m slots and a signed weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorTerm {
    pub bases: Vec<usize>,
    pub weight: f64,
}

/// A symmetric tensor expansion sum_t w_t e_{j1}(x_1) ... e_{jm}(x_m) of
/// sampled trigonometric bases. Serializable for replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureExpansion {
    pub m: usize,
    pub d: usize,
    pub bases: Vec<TrigBasis>,
    pub terms: Vec<TensorTerm>,
    /// Part masses the construction used.
    pub masses: [f64; 4],
    /// Upper bound 2^m ||fhat||_{L1} the coefficient mass must respect.
    pub coefficient_budget: f64,
    /// Uniform bound on every basis (1 for trigonometric bases).
    pub basis_bound: f64,
    pub symmetrized: bool,
    pub seed: u64,
    pub kernel_name: String,
    /// Built via the cos/sin pairing of a shift-invariant order-2 kernel.
    pub paired: bool,
}

impl FeatureExpansion {
    pub fn feature_count(&self) -> usize {
        self.bases.len()
    }

    /// Sum of absolute term weights (the realized coefficient mass F).
    pub fn coefficient_sum(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for t in &self.terms {
            acc.add(t.weight.abs());
        }
        acc.value()
    }

    pub fn eval(&self, args: &[&[f64]]) -> f64 {
        let mut acc = CompensatedSum::new();
        for term in &self.terms {
            let mut prod = term.weight;
            for (slot, &j) in term.bases.iter().enumerate() {
                prod *= self.bases[j].eval(args[slot]);
            }
            acc.add(prod);
        }
        acc.value()
    }

    /// Explicit feature map for expansions built from a positive-definite
    /// shift-invariant order-2 kernel: phi with f~(x, y) = phi(x).phi(y).
    pub fn feature_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.paired || self.m != 2 {
            return Err(Error::Unsupported(
                "feature map needs the paired shift-invariant construction".into(),
            ));
        }
        let mut phi = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            if term.bases[0] != term.bases[1] {
                return Err(Error::Unsupported(
                    "feature map needs diagonal tensor terms".into(),
                ));
            }
            if term.weight < 0.0 {
                return Err(Error::Unsupported(
                    "feature map needs nonnegative weights (positive-definite base)".into(),
                ));
            }
            phi.push(term.weight.sqrt() * self.bases[term.bases[0]].eval(x));
        }
        Ok(phi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("expansion serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl SymmetricKernel for FeatureExpansion {
    fn order(&self) -> usize {
        self.m
    }
    fn arg_dim(&self) -> usize {
        self.d
    }
    fn eval_args(&self, args: &[&[f64]]) -> f64 {
        self.eval(args)
    }
}

/// Expansion of cos/sin of a sum of m angles into products of one-argument
/// cosines/sines: a list of (sign, trig choice per slot).
fn trig_product_expansion(m: usize, sine: bool) -> Vec<(f64, Vec<Trig>)> {
    let mut cos_terms: Vec<(f64, Vec<Trig>)> = vec![(1.0, vec![Trig::Cos])];
    let mut sin_terms: Vec<(f64, Vec<Trig>)> = vec![(1.0, vec![Trig::Sin])];
    for _ in 1..m {
        let mut next_cos = Vec::with_capacity(cos_terms.len() * 2);
        let mut next_sin = Vec::with_capacity(sin_terms.len() * 2);
        // cos(A + t) = cos A cos t - sin A sin t
        for (s, trigs) in &cos_terms {
            let mut a = trigs.clone();
            a.push(Trig::Cos);
            next_cos.push((*s, a));
        }
        for (s, trigs) in &sin_terms {
            let mut a = trigs.clone();
            a.push(Trig::Sin);
            next_cos.push((-*s, a));
        }
        // sin(A + t) = sin A cos t + cos A sin t
        for (s, trigs) in &sin_terms {
            let mut a = trigs.clone();
            a.push(Trig::Cos);
            next_sin.push((*s, a));
        }
        for (s, trigs) in &cos_terms {
            let mut a = trigs.clone();
            a.push(Trig::Sin);
            next_sin.push((*s, a));
        }
        cos_terms = next_cos;
        sin_terms = next_sin;
    }
    if sine {
        sin_terms
    } else {
        cos_terms
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for (i, rest) in (0..m).map(|i| {
        let sub: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        (i, sub)
    }) {
        for mut tail in permutations(m - 1) {
            for t in tail.iter_mut() {
                *t = rest[*t];
            }
            let mut perm = vec![i];
            perm.extend(tail);
            out.push(perm);
        }
    }
    out
}

/// Build the bounded symmetric tensor expansion of `spec` with per-part
/// sample counts from `budget`, deterministic in `seed`.
pub fn build_expansion(
    spec: &KernelSpec,
    budget: &ApproxBudget,
    seed: u64,
) -> Result<FeatureExpansion> {
    let parts = decompose_sign_measure(spec)?;
    for part in PartId::ALL {
        if budget.counts[part.index()] > 0 && parts.masses[part.index()] <= 0.0 {
            return Err(Error::invalid(format!(
                "budget assigns samples to zero-mass part {:?}",
                part
            )));
        }
    }
    let l1 = spec.fourier_l1_norm()?;
    let coefficient_budget = 2f64.powi(spec.m as i32) * l1;
    let mut bases: Vec<TrigBasis> = Vec::new();
    let mut terms: Vec<TensorTerm> = Vec::new();

    let paired = spec.m == 2 && spec.shift_invariant;
    if paired {
        if parts.masses[PartId::HPlus.index()] > 0.0 || parts.masses[PartId::HMinus.index()] > 0.0
        {
            return Err(Error::Unsupported(
                "shift-invariant order-2 expansion needs an even base (real transform)".into(),
            ));
        }
        for part in [PartId::GPlus, PartId::GMinus] {
            let count = budget.counts[part.index()];
            if count == 0 {
                continue;
            }
            let mass = parts.masses[part.index()];
            let weight = part.combination_sign() * mass / count as f64;
            for freq in parts.sample_frequencies(part, count, seed)? {
                let c = bases.len();
                bases.push(TrigBasis {
                    trig: Trig::Cos,
                    freq: freq.clone(),
                });
                let s = bases.len();
                bases.push(TrigBasis {
                    trig: Trig::Sin,
                    freq,
                });
                // cos(2 pi u.(x-y)) = cos cos + sin sin
                terms.push(TensorTerm {
                    bases: vec![c, c],
                    weight,
                });
                terms.push(TensorTerm {
                    bases: vec![s, s],
                    weight,
                });
            }
        }
    } else {
        if spec.m > 4 {
            return Err(Error::Unsupported(
                "general symmetrization is limited to order m <= 4".into(),
            ));
        }
        for part in PartId::ALL {
            let count = budget.counts[part.index()];
            if count == 0 {
                continue;
            }
            let mass = parts.masses[part.index()];
            let weight0 = part.combination_sign() * mass / count as f64;
            let products = trig_product_expansion(spec.m, part.is_sine());
            for freq in parts.sample_frequencies(part, count, seed)? {
                // one cos/sin basis per argument block
                let mut block_idx = Vec::with_capacity(spec.m);
                for block in 0..spec.m {
                    let lo = block * spec.d;
                    let hi = lo + spec.d;
                    let f = freq[lo..hi.min(freq.len())].to_vec();
                    let c = bases.len();
                    bases.push(TrigBasis {
                        trig: Trig::Cos,
                        freq: f.clone(),
                    });
                    bases.push(TrigBasis {
                        trig: Trig::Sin,
                        freq: f,
                    });
                    block_idx.push(c);
                }
                for (sign, trigs) in &products {
                    let idx: Vec<usize> = trigs
                        .iter()
                        .enumerate()
                        .map(|(slot, t)| block_idx[slot] + if *t == Trig::Sin { 1 } else { 0 })
                        .collect();
                    terms.push(TensorTerm {
                        bases: idx,
                        weight: sign * weight0,
                    });
                }
            }
        }
        // symmetrize over slot permutations
        if spec.m > 1 {
            let perms = permutations(spec.m);
            let norm = 1.0 / perms.len() as f64;
            let mut sym_terms = Vec::with_capacity(terms.len() * perms.len());
            for term in &terms {
                for perm in &perms {
                    sym_terms.push(TensorTerm {
                        bases: perm.iter().map(|&s| term.bases[s]).collect(),
                        weight: term.weight * norm,
                    });
                }
            }
            terms = sym_terms;
        }
    }

    Ok(FeatureExpansion {
        m: spec.m,
        d: spec.d,
        bases,
        terms,
        masses: parts.masses,
        coefficient_budget,
        basis_bound: 1.0,
        symmetrized: true,
        seed,
        kernel_name: match spec.mollify_h {
            None => spec.name().to_string(),
            Some(h) => format!("{}+mollified(h={})", spec.name(), h),
        },
        paired,
    })
}

/// Largest |f~ - f| over the tensor grid with `pts_per_axis` points per
/// scalar coordinate of the box [-M, M]^{md}; a lower bound on the true
/// sup over the box. Grid chunks evaluate in parallel under max-reduction.
pub fn uniform_error(
    exp: &FeatureExpansion,
    target: &dyn SymmetricKernel,
    box_half_width: f64,
    pts_per_axis: usize,
) -> Result<f64> {
    if pts_per_axis < 2 {
        return Err(Error::invalid("need at least 2 grid points per axis"));
    }
    let m = exp.m;
    let d = exp.d;
    if target.order() != m || target.arg_dim() != d {
        return Err(Error::invalid("expansion and target shapes differ"));
    }
    let axis = linspace(-box_half_width, box_half_width, pts_per_axis);
    // argument grid: all points of the per-argument box [-M, M]^d
    let arg_points: Vec<Vec<f64>> = {
        let mut pts: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..d {
            let mut next = Vec::with_capacity(pts.len() * axis.len());
            for p in &pts {
                for &a in &axis {
                    let mut q = p.clone();
                    q.push(a);
                    next.push(q);
                }
            }
            pts = next;
        }
        pts
    };
    let napts = arg_points.len();
    let total = (napts as f64).powi(m as i32);
    if total > 2.0e7 {
        return Err(Error::Resource(format!(
            "uniform-error grid has {total:.3e} tuples; reduce pts_per_axis"
        )));
    }
    // precompute basis values at the argument grid
    let table: Vec<Vec<f64>> = exp
        .bases
        .par_iter()
        .map(|b| arg_points.iter().map(|p| b.eval(p)).collect())
        .collect();

    let worst = (0..napts)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; m];
            idx[0] = first;
            let mut local = 0.0f64;
            loop {
                // f~ via the table, f via the target
                let mut acc = CompensatedSum::new();
                for term in &exp.terms {
                    let mut prod = term.weight;
                    for (slot, &j) in term.bases.iter().enumerate() {
                        prod *= table[j][idx[slot]];
                    }
                    acc.add(prod);
                }
                let args: Vec<&[f64]> = idx.iter().map(|&i| arg_points[i].as_slice()).collect();
                let diff = (acc.value() - target.eval_args(&args)).abs();
                if diff > local {
                    local = diff;
                }
                // advance the odometer over slots 1..m
                let mut carry = true;
                for slot in (1..m).rev() {
                    idx[slot] += 1;
                    if idx[slot] < napts {
                        carry = false;
                        break;
                    }
                    idx[slot] = 0;
                }
                if m == 1 || carry {
                    break;
                }
            }
            local
        })
        .reduce(|| 0.0f64, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_mass_is_pure_positive() {
        let spec = KernelSpec::gaussian(1, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        assert_abs_diff_eq!(parts.masses[0], 1.0, epsilon = 1e-10);
        assert_eq!(parts.masses[1], 0.0);
        assert_eq!(parts.masses[2], 0.0);
        assert_eq!(parts.masses[3], 0.0);
    }

    #[test]
    fn hat_mass_by_quadrature() {
        let spec = KernelSpec::hat(1, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        assert_abs_diff_eq!(parts.masses[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn cosine_masses_difference_is_base_at_zero() {
        let spec = KernelSpec::cosine(1, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        assert!(parts.masses[1] > 0.01);
        assert_abs_diff_eq!(parts.masses[0] - parts.masses[1], 1.0, epsilon = 1e-4);
        // against independent high-precision values
        assert_abs_diff_eq!(parts.masses[0], 1.089275, epsilon = 1e-3);
        assert_abs_diff_eq!(parts.masses[1], 0.089275, epsilon = 1e-3);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = KernelSpec::gaussian(1, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        let a = parts.sample_frequencies(PartId::GPlus, 32, 7).unwrap();
        let b = parts.sample_frequencies(PartId::GPlus, 32, 7).unwrap();
        assert_eq!(a, b);
        let c = parts.sample_frequencies(PartId::GPlus, 32, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_mass_part_rejected() {
        let spec = KernelSpec::gaussian(1, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        assert!(parts.sample_frequencies(PartId::GMinus, 4, 1).is_err());
    }

    #[test]
    fn trig_expansion_sizes() {
        assert_eq!(trig_product_expansion(1, false).len(), 1);
        assert_eq!(trig_product_expansion(2, false).len(), 2);
        assert_eq!(trig_product_expansion(3, false).len(), 4);
        assert_eq!(trig_product_expansion(3, true).len(), 4);
    }

    #[test]
    fn trig_expansion_identity() {
        // numeric check of cos(a+b+c) expansion
        let terms = trig_product_expansion(3, false);
        let angles = [0.3f64, -1.1, 2.4];
        let direct = (angles.iter().sum::<f64>()).cos();
        let expanded: f64 = terms
            .iter()
            .map(|(s, trigs)| {
                s * trigs
                    .iter()
                    .zip(angles.iter())
                    .map(|(t, &a)| match t {
                        Trig::Cos => a.cos(),
                        Trig::Sin => a.sin(),
                    })
                    .product::<f64>()
            })
            .sum();
        assert_abs_diff_eq!(direct, expanded, epsilon = 1e-12);
    }

    #[test]
    fn paired_expansion_at_equal_args_gives_base_at_zero() {
        let spec = KernelSpec::gaussian(2, 1);
        let budget = ApproxBudget::proportional(64, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let exp = build_expansion(&spec, &budget, 3).unwrap();
        for x in [-1.7, 0.0, 2.3] {
            assert_abs_diff_eq!(exp.eval(&[&[x], &[x]]), 1.0, epsilon = 1e-12);
        }
        assert!(exp.coefficient_sum() <= exp.coefficient_budget + 1e-9);
    }

    #[test]
    fn general_path_matches_paired_on_permutations() {
        // order-3 gaussian: expansion must be permutation invariant
        let spec = KernelSpec::gaussian(3, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        let budget = ApproxBudget::proportional(32, &parts.masses).unwrap();
        let exp = build_expansion(&spec, &budget, 11).unwrap();
        let (a, b, c) = ([0.4], [-0.9], [1.2]);
        let v1 = exp.eval(&[&a, &b, &c]);
        let v2 = exp.eval(&[&c, &a, &b]);
        let v3 = exp.eval(&[&b, &c, &a]);
        assert_abs_diff_eq!(v1, v2, epsilon = 1e-13);
        assert_abs_diff_eq!(v1, v3, epsilon = 1e-13);
    }

    #[test]
    fn sample_size_formula_pinned_value() {
        // gaussian order-2 d=1 base: A+ = 1, raw second moment 1/(4 pi^2)
        let inputs = BudgetInputs {
            t: 0.1,
            box_half_width: 2.0,
            q: 2.0,
            moment: 1.0 / (4.0 * PI * PI),
            masses: [1.0, 0.0, 0.0, 0.0],
            m: 2,
            d: 1,
            multipliers: [1.0; 4],
        };
        let budget = required_sample_size(&inputs).unwrap();
        assert_eq!(budget.counts, [844, 0, 0, 0]);
        assert!(budget.covering_radius.unwrap() > 0.0);
    }

    #[test]
    fn halving_t_quadruples_counts() {
        let base = BudgetInputs {
            t: 0.05,
            box_half_width: 2.0,
            q: 2.0,
            moment: 1.0 / (4.0 * PI * PI),
            masses: [1.0, 0.0, 0.0, 0.0],
            m: 2,
            d: 1,
            multipliers: [1.0; 4],
        };
        let coarse = required_sample_size(&base).unwrap();
        let mut finer_inputs = base.clone();
        finer_inputs.t = 0.025;
        let fine = required_sample_size(&finer_inputs).unwrap();
        let ratio = fine.counts[0] as f64 / coarse.counts[0] as f64;
        assert!((3.9..=4.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn exact_single_term_expansion_has_zero_error() {
        let freq = vec![0.25];
        let exp = FeatureExpansion {
            m: 2,
            d: 1,
            bases: vec![
                TrigBasis {
                    trig: Trig::Cos,
                    freq: freq.clone(),
                },
                TrigBasis {
                    trig: Trig::Sin,
                    freq: freq.clone(),
                },
            ],
            terms: vec![
                TensorTerm {
                    bases: vec![0, 0],
                    weight: 1.0,
                },
                TensorTerm {
                    bases: vec![1, 1],
                    weight: 1.0,
                },
            ],
            masses: [1.0, 0.0, 0.0, 0.0],
            coefficient_budget: 4.0,
            basis_bound: 1.0,
            symmetrized: true,
            seed: 0,
            kernel_name: "single-frequency".into(),
            paired: true,
        };
        let target = FnKernel {
            m: 2,
            d: 1,
            f: |args: &[&[f64]]| (2.0 * PI * 0.25 * (args[0][0] - args[1][0])).cos(),
        };
        let err = uniform_error(&exp, &target, 2.0, 11).unwrap();
        assert_abs_diff_eq!(err, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn feature_map_reproduces_expansion() {
        let spec = KernelSpec::gaussian(2, 1);
        let budget = ApproxBudget::proportional(50, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let exp = build_expansion(&spec, &budget, 5).unwrap();
        let phi_len = exp.feature_map(&[0.0]).unwrap().len();
        assert_eq!(phi_len, 100); // 2 D entries
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = [rng.random::<f64>() * 4.0 - 2.0];
            let y = [rng.random::<f64>() * 4.0 - 2.0];
            let px = exp.feature_map(&x).unwrap();
            let py = exp.feature_map(&y).unwrap();
            let dot: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(dot, exp.eval(&[&x, &y]), epsilon = 1e-12);
            // self inner product is the total positive mass
            let self_dot: f64 = px.iter().map(|a| a * a).sum();
            assert_abs_diff_eq!(self_dot, exp.masses[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn total_mass_below_sqrt2_l1() {
        for spec in [
            KernelSpec::gaussian(1, 1),
            KernelSpec::cauchy(1, 2),
            KernelSpec::laplacian(2, 1),
            KernelSpec::hat(1, 1),
            KernelSpec::cosine(2, 1),
        ] {
            let parts = decompose_sign_measure(&spec).unwrap();
            let l1 = spec.fourier_l1_norm().unwrap();
            assert!(
                parts.total_mass() <= 2.0f64.sqrt() * l1 + 1e-6,
                "{}: {} vs sqrt(2) * {}",
                spec.name(),
                parts.total_mass(),
                l1
            );
        }
    }

    #[test]
    fn feature_map_rejects_signed_expansions() {
        // the cosine base is not positive definite: its expansion carries
        // negative weights, which no real feature map represents
        let spec = KernelSpec::cosine(2, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        let budget = ApproxBudget::proportional(24, &parts.masses).unwrap();
        let exp = build_expansion(&spec, &budget, 3).unwrap();
        assert!(exp.feature_map(&[0.1]).is_err());
    }

    #[test]
    fn zero_table_is_degenerate() {
        use crate::kernels::{GridTable, KernelKind};
        let table = GridTable::new(-1.0, 1.0, vec![0.0, 0.0, 0.0]).unwrap();
        let spec = KernelSpec::new(KernelKind::CustomGrid(table), 1, 1).unwrap();
        assert!(matches!(
            decompose_sign_measure(&spec),
            Err(crate::error::Error::DegenerateKernel(_))
        ));
    }

    #[test]
    fn expansion_roundtrips_through_json() {
        let spec = KernelSpec::cosine(2, 1);
        let parts = decompose_sign_measure(&spec).unwrap();
        let budget = ApproxBudget::proportional(24, &parts.masses).unwrap();
        let exp = build_expansion(&spec, &budget, 17).unwrap();
        let back = FeatureExpansion::from_json(&exp.to_json()).unwrap();
        assert_eq!(exp.terms.len(), back.terms.len());
        let x = [0.3];
        let y = [-0.8];
        assert_abs_diff_eq!(
            exp.eval(&[&x, &y]),
            back.eval(&[&x, &y]),
            epsilon = 1e-15
        );
    }

    use crate::kernels::FnKernel;
}
