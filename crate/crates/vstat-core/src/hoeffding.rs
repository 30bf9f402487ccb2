//! Hoeffding decomposition of a kernel against a marginal measure: the mean
//! value theta, the conditional-expectation functions g_p, the recursively
//! centered components f_p, closed-form components for tensor expansions,
//! basis moments, and degeneracy diagnostics.
//!
//! The recursion: g_p(x_1..x_p) = E f(x_1..x_p, X~_{p+1}..X~_m) - theta with
//! g_m = f - theta, then
//!
//!   f_1 = g_1,
//!   f_p = g_p - sum over proper nonempty subsets S of the arguments of
//!         f_{|S|}(x_S).
//!
//! Components built here satisfy f - theta = sum_p sum_{|S|=p} f_p(x_S)
//! exactly by construction (the recursion makes the identity algebraic,
//! whatever Monte Carlo noise enters the g estimates).

use crate::error::{Error, Result};
use crate::kernels::SymmetricKernel;
use crate::numeric::{mean_stderr, CompensatedSum};
use crate::rff::FeatureExpansion;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Marginal law of the stationary sequence; draws are i.i.d. and
/// seed-deterministic.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    /// All mass at one point; expectations are exact.
    PointMass(Vec<f64>),
    StandardNormal { d: usize },
    Uniform { lo: f64, hi: f64, d: usize },
    /// Empirical law of a fixed point set, sampled uniformly.
    Custom(Vec<Vec<f64>>),
}

impl Marginal {
    pub fn dim(&self) -> usize {
        match self {
            Marginal::PointMass(p) => p.len(),
            Marginal::StandardNormal { d } | Marginal::Uniform { d, .. } => *d,
            Marginal::Custom(pts) => pts.first().map_or(0, |p| p.len()),
        }
    }

    /// Expectations against a point mass need no sampling.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, Marginal::PointMass(_))
            || matches!(self, Marginal::Custom(pts) if pts.len() == 1)
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Marginal::PointMass(p) => p.clone(),
            Marginal::StandardNormal { d } => {
                (0..*d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            }
            Marginal::Uniform { lo, hi, d } => (0..*d)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
            Marginal::Custom(pts) => pts[rng.random_range(0..pts.len())].clone(),
        }
    }

    pub fn draw_many(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Monte Carlo estimate of the kernel mean theta = E f(X~_1,..,X~_m).
#[derive(Debug, Clone, Serialize)]
pub struct ThetaEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_draws: usize,
}

/// Mean value of `kernel` over independent m-tuples from `marginal`; exact
/// (one evaluation, zero stderr) for point masses.
pub fn theta(
    kernel: &dyn SymmetricKernel,
    marginal: &Marginal,
    n_draws: usize,
    seed: u64,
) -> Result<ThetaEstimate> {
    if marginal.dim() != kernel.arg_dim() {
        return Err(Error::invalid("marginal dimension does not match kernel"));
    }
    let m = kernel.order();
    if marginal.is_deterministic() {
        let atom = marginal.draw_many(1, seed).pop().unwrap();
        let args: Vec<&[f64]> = (0..m).map(|_| atom.as_slice()).collect();
        return Ok(ThetaEstimate {
            value: kernel.eval_args(&args),
            stderr: 0.0,
            n_draws: 1,
        });
    }
    if n_draws < 2 {
        return Err(Error::invalid("theta needs at least 2 Monte Carlo draws"));
    }
    let draws = marginal.draw_many(n_draws * m, seed);
    let values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let args: Vec<&[f64]> = (0..m).map(|j| draws[i * m + j].as_slice()).collect();
            kernel.eval_args(&args)
        })
        .collect();
    let (value, stderr) = mean_stderr(&values);
    Ok(ThetaEstimate {
        value,
        stderr,
        n_draws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentMode {
    McRecursion,
    TensorClosedForm,
}

enum CompImpl {
    Mc {
        kernel: Arc<dyn SymmetricKernel>,
        m: usize,
        theta: f64,
        /// N rows of m marginal draws each (common random numbers shared by
        /// every conditional-expectation evaluation).
        draws: Vec<Vec<Vec<f64>>>,
    },
    Tensor {
        expansion: Arc<FeatureExpansion>,
        /// Monte Carlo basis means E e_j(X~).
        means: Vec<f64>,
    },
}

/// One level of the Hoeffding decomposition: a symmetric p-argument
/// evaluator, degenerate for p >= 2 up to Monte Carlo error.
pub struct HoeffdingComponent {
    pub p: usize,
    pub mode: ComponentMode,
    pub n_draws: usize,
    /// Construction-noise scale (approximate, delta-method style); the
    /// degeneracy check combines it with its own sampling error.
    pub stderr: f64,
    imp: CompImpl,
}

impl HoeffdingComponent {
    /// g_k(y_1..y_k): conditional expectation minus theta, by shared-draw
    /// Monte Carlo over the remaining m-k slots.
    fn g_mc(
        kernel: &dyn SymmetricKernel,
        m: usize,
        theta: f64,
        draws: &[Vec<Vec<f64>>],
        points: &[&[f64]],
    ) -> f64 {
        let k = points.len();
        if k == m {
            return kernel.eval_args(points) - theta;
        }
        let mut acc = CompensatedSum::new();
        for row in draws {
            let mut args: Vec<&[f64]> = Vec::with_capacity(m);
            args.extend_from_slice(points);
            args.extend(row[k..m].iter().map(|p| p.as_slice()));
            acc.add(kernel.eval_args(&args));
        }
        acc.value() / draws.len() as f64 - theta
    }

    pub fn eval(&self, args: &[&[f64]]) -> f64 {
        debug_assert_eq!(args.len(), self.p);
        match &self.imp {
            CompImpl::Tensor { expansion, means } => {
                let m = expansion.m;
                let p = self.p;
                let mut acc = CompensatedSum::new();
                for term in &expansion.terms {
                    let mut prod = term.weight;
                    for &j in &term.bases[..m - p] {
                        prod *= means[j];
                    }
                    if prod == 0.0 {
                        continue;
                    }
                    for (slot, &j) in term.bases[m - p..].iter().enumerate() {
                        prod *= expansion.bases[j].eval(args[slot]) - means[j];
                    }
                    acc.add(prod);
                }
                acc.value()
            }
            CompImpl::Mc {
                kernel,
                m,
                theta,
                draws,
            } => {
                // subset dynamic program over the p arguments:
                // f(S) = g(args_S) - sum over proper nonempty subsets T of f(T)
                let p = self.p;
                let full = (1usize << p) - 1;
                let mut f_val = vec![0.0f64; full + 1];
                for mask in 1..=full {
                    let pts: Vec<&[f64]> = (0..p)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| args[i])
                        .collect();
                    let mut v = Self::g_mc(kernel.as_ref(), *m, *theta, draws, &pts);
                    let mut sub = (mask - 1) & mask;
                    while sub != 0 {
                        v -= f_val[sub];
                        sub = (sub - 1) & mask;
                    }
                    f_val[mask] = v;
                }
                f_val[full]
            }
        }
    }

    /// The expansion and basis means backing a tensor-mode component.
    pub fn tensor_parts(&self) -> Option<(&FeatureExpansion, &[f64])> {
        match &self.imp {
            CompImpl::Tensor { expansion, means } => Some((expansion, means)),
            _ => None,
        }
    }

    /// Fixed-prefix view: the recursion's subset values that do not involve
    /// the varying last argument are computed once, so sweeping the last
    /// argument (the degeneracy check) skips the prefix-only conditional
    /// expectations on every call.
    pub fn prefix_eval<'a>(&'a self, prefix: &[&[f64]]) -> PrefixEval<'a> {
        debug_assert_eq!(prefix.len(), self.p - 1);
        let cached = match &self.imp {
            CompImpl::Mc {
                kernel,
                m,
                theta,
                draws,
            } => {
                let wide = 1usize << (self.p - 1);
                let mut f_val = vec![0.0f64; wide];
                for mask in 1..wide {
                    let pts: Vec<&[f64]> = (0..self.p - 1)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| prefix[i])
                        .collect();
                    let mut v = Self::g_mc(kernel.as_ref(), *m, *theta, draws, &pts);
                    let mut sub = (mask - 1) & mask;
                    while sub != 0 {
                        v -= f_val[sub];
                        sub = (sub - 1) & mask;
                    }
                    f_val[mask] = v;
                }
                f_val
            }
            CompImpl::Tensor { .. } => Vec::new(),
        };
        PrefixEval {
            comp: self,
            prefix: prefix.iter().map(|x| x.to_vec()).collect(),
            cached,
        }
    }
}

/// See [`HoeffdingComponent::prefix_eval`].
pub struct PrefixEval<'a> {
    comp: &'a HoeffdingComponent,
    prefix: Vec<Vec<f64>>,
    cached: Vec<f64>,
}

impl PrefixEval<'_> {
    pub fn eval(&self, last: &[f64]) -> f64 {
        match &self.comp.imp {
            CompImpl::Tensor { .. } => {
                let mut args: Vec<&[f64]> = self.prefix.iter().map(|x| x.as_slice()).collect();
                args.push(last);
                self.comp.eval(&args)
            }
            CompImpl::Mc {
                kernel,
                m,
                theta,
                draws,
            } => {
                let p = self.comp.p;
                let last_bit = 1usize << (p - 1);
                let full = (1usize << p) - 1;
                let mut fresh = vec![0.0f64; 1 << p];
                // masks containing the last slot, in increasing low-mask
                // order so fresh submasks are ready when subtracted
                for low in 0..(1usize << (p - 1)) {
                    let mask = low | last_bit;
                    let mut pts: Vec<&[f64]> = (0..p - 1)
                        .filter(|i| low & (1 << i) != 0)
                        .map(|i| self.prefix[i].as_slice())
                        .collect();
                    pts.push(last);
                    let mut v =
                        HoeffdingComponent::g_mc(kernel.as_ref(), *m, *theta, draws, &pts);
                    let mut sub = (mask - 1) & mask;
                    while sub != 0 {
                        v -= if sub & last_bit != 0 {
                            fresh[sub]
                        } else {
                            self.cached[sub]
                        };
                        sub = (sub - 1) & mask;
                    }
                    fresh[mask] = v;
                }
                fresh[full]
            }
        }
    }
}

impl SymmetricKernel for HoeffdingComponent {
    fn order(&self) -> usize {
        self.p
    }
    fn arg_dim(&self) -> usize {
        match &self.imp {
            CompImpl::Mc { kernel, .. } => kernel.arg_dim(),
            CompImpl::Tensor { expansion, .. } => expansion.d,
        }
    }
    fn eval_args(&self, args: &[&[f64]]) -> f64 {
        self.eval(args)
    }
}

/// Level-p component of `kernel` by Monte Carlo recursion with `n_draws`
/// shared draws from `marginal`.
pub fn component(
    kernel: Arc<dyn SymmetricKernel>,
    marginal: &Marginal,
    p: usize,
    n_draws: usize,
    seed: u64,
) -> Result<HoeffdingComponent> {
    let m = kernel.order();
    if p == 0 || p > m {
        return Err(Error::invalid(format!(
            "component level p={p} out of range 1..={m}"
        )));
    }
    if marginal.dim() != kernel.arg_dim() {
        return Err(Error::invalid("marginal dimension does not match kernel"));
    }
    let effective_draws = if marginal.is_deterministic() { 1 } else { n_draws };
    if effective_draws == 0 {
        return Err(Error::invalid("component needs n_draws >= 1"));
    }
    let theta_est = theta(kernel.as_ref(), marginal, effective_draws.max(2), seed)?;
    let flat = marginal.draw_many(effective_draws * m, seed.wrapping_add(1));
    let draws: Vec<Vec<Vec<f64>>> = flat.chunks(m).map(|c| c.to_vec()).collect();

    // construction-noise scale: stderr of g_1 at the marginal's center plus
    // the theta error, conservatively added per argument slot
    let stderr = if marginal.is_deterministic() {
        0.0
    } else {
        let center = vec![0.0f64; kernel.arg_dim()];
        let samples: Vec<f64> = draws
            .iter()
            .map(|row| {
                let mut args: Vec<&[f64]> = vec![center.as_slice()];
                args.extend(row[1..m].iter().map(|p| p.as_slice()));
                kernel.eval_args(&args)
            })
            .collect();
        let (_, se_g) = mean_stderr(&samples);
        theta_est.stderr + p as f64 * se_g
    };

    Ok(HoeffdingComponent {
        p,
        mode: ComponentMode::McRecursion,
        n_draws: effective_draws,
        stderr,
        imp: CompImpl::Mc {
            kernel,
            m,
            theta: theta_est.value,
            draws,
        },
    })
}

/// Level-p component of a tensor expansion in closed form: expectations on
/// the first m-p slots, centered bases on the last p. Basis means are
/// estimated once with `n_draws` Monte Carlo draws.
pub fn tensor_component(
    expansion: Arc<FeatureExpansion>,
    marginal: &Marginal,
    p: usize,
    n_draws: usize,
    seed: u64,
) -> Result<HoeffdingComponent> {
    if p == 0 || p > expansion.m {
        return Err(Error::invalid(format!(
            "component level p={p} out of range 1..={}",
            expansion.m
        )));
    }
    if marginal.dim() != expansion.d {
        return Err(Error::invalid(
            "marginal dimension does not match expansion",
        ));
    }
    let (means, max_se, effective) = basis_means(&expansion, marginal, n_draws, seed)?;
    let stderr = expansion.coefficient_sum() * max_se;
    Ok(HoeffdingComponent {
        p,
        mode: ComponentMode::TensorClosedForm,
        n_draws: effective,
        stderr,
        imp: CompImpl::Tensor { expansion, means },
    })
}

/// Tensor component from precomputed basis means; lets a pipeline estimate
/// means once and share them across levels.
pub fn tensor_component_from_means(
    expansion: Arc<FeatureExpansion>,
    means: Vec<f64>,
    max_se: f64,
    n_draws: usize,
    p: usize,
) -> Result<HoeffdingComponent> {
    if p == 0 || p > expansion.m {
        return Err(Error::invalid(format!(
            "component level p={p} out of range 1..={}",
            expansion.m
        )));
    }
    if means.len() != expansion.bases.len() {
        return Err(Error::invalid("one mean per basis required"));
    }
    let stderr = expansion.coefficient_sum() * max_se;
    Ok(HoeffdingComponent {
        p,
        mode: ComponentMode::TensorClosedForm,
        n_draws,
        stderr,
        imp: CompImpl::Tensor { expansion, means },
    })
}

/// Monte Carlo means of every basis, their worst standard error, and the
/// number of draws actually used.
pub fn basis_means(
    expansion: &FeatureExpansion,
    marginal: &Marginal,
    n_draws: usize,
    seed: u64,
) -> Result<(Vec<f64>, f64, usize)> {
    let effective = if marginal.is_deterministic() { 1 } else { n_draws };
    if effective == 0 {
        return Err(Error::invalid("basis means need n_draws >= 1"));
    }
    let draws = marginal.draw_many(effective, seed);
    let per_basis: Vec<(f64, f64)> = expansion
        .bases
        .par_iter()
        .map(|b| {
            let vals: Vec<f64> = draws.iter().map(|x| b.eval(x)).collect();
            mean_stderr(&vals)
        })
        .collect();
    let means: Vec<f64> = per_basis.iter().map(|(m, _)| *m).collect();
    let max_se = per_basis.iter().map(|(_, s)| *s).fold(0.0, f64::max);
    Ok((means, max_se, effective))
}

/// Mean value of a tensor expansion consistent with its component set:
/// theta = sum_t w_t prod_k mean[j_k].
pub fn tensor_theta(expansion: &FeatureExpansion, means: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for term in &expansion.terms {
        let mut prod = term.weight;
        for &j in &term.bases {
            prod *= means[j];
        }
        acc.add(prod);
    }
    acc.value()
}

/// Basis moment mu_a = sup_j (E |e_j(X~)|^a)^{1/a}, Monte Carlo.
pub fn basis_moments(
    expansion: &FeatureExpansion,
    marginal: &Marginal,
    a: f64,
    n_draws: usize,
    seed: u64,
) -> Result<BasisMoment> {
    if a < 1.0 {
        return Err(Error::invalid("moment order a must be >= 1"));
    }
    let effective = if marginal.is_deterministic() { 1 } else { n_draws };
    let draws = marginal.draw_many(effective, seed);
    let per_basis: Vec<(f64, f64)> = expansion
        .bases
        .par_iter()
        .map(|b| {
            let vals: Vec<f64> = draws.iter().map(|x| b.eval(x).abs().powf(a)).collect();
            mean_stderr(&vals)
        })
        .collect();
    let (value, stderr) = per_basis
        .iter()
        .map(|(m, s)| (m.powf(1.0 / a), s))
        .fold((0.0f64, 0.0f64), |acc, (m, s)| {
            if m > acc.0 {
                (m, *s)
            } else {
                acc
            }
        });
    Ok(BasisMoment {
        a,
        value,
        stderr,
        n_draws: effective,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisMoment {
    pub a: f64,
    pub value: f64,
    pub stderr: f64,
    pub n_draws: usize,
}

/// One grid point of a degeneracy check.
#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyRow {
    pub point: Vec<Vec<f64>>,
    pub estimate: f64,
    pub stderr: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub rows: Vec<DegeneracyRow>,
    pub all_pass: bool,
    /// Multiplier on the combined stderr used for flagging (default 3).
    pub tolerance_sigma: f64,
}

/// Estimate E f_p(x_{1..p-1}, X~) at each grid prefix with `n_draws` fresh
/// draws and flag estimates exceeding `tolerance_sigma` combined standard
/// errors (sampling error plus the component's construction noise).
pub fn check_degeneracy(
    comp: &HoeffdingComponent,
    marginal: &Marginal,
    grid: &[Vec<Vec<f64>>],
    n_draws: usize,
    seed: u64,
    tolerance_sigma: f64,
) -> Result<DegeneracyReport> {
    if grid.is_empty() {
        return Err(Error::invalid("degeneracy check needs a nonempty grid"));
    }
    let p = comp.p;
    let draws = marginal.draw_many(n_draws.max(2), seed);
    let mut rows = Vec::with_capacity(grid.len());
    for prefix in grid {
        if prefix.len() + 1 != p {
            return Err(Error::invalid(format!(
                "grid prefix has {} points, component level {p} needs {}",
                prefix.len(),
                p - 1
            )));
        }
        let prefix_refs: Vec<&[f64]> = prefix.iter().map(|x| x.as_slice()).collect();
        let pe = comp.prefix_eval(&prefix_refs);
        let vals: Vec<f64> = draws.par_iter().map(|y| pe.eval(y)).collect();
        let (estimate, se) = mean_stderr(&vals);
        let combined = (se * se + comp.stderr * comp.stderr).sqrt();
        let scale = 1e-12 * (1.0 + estimate.abs());
        let flagged = estimate.abs() > tolerance_sigma * combined + scale;
        rows.push(DegeneracyRow {
            point: prefix.clone(),
            estimate,
            stderr: combined,
            flagged,
        });
    }
    let all_pass = rows.iter().all(|r| !r.flagged);
    Ok(DegeneracyReport {
        rows,
        all_pass,
        tolerance_sigma,
    })
}

/// What the decomposition was computed from; the combined centered
/// statistic reuses it so both sides of the identity share one object.
#[derive(Clone)]
pub enum DecompositionSource {
    Kernel(Arc<dyn SymmetricKernel>),
    Expansion(Arc<FeatureExpansion>),
}

impl DecompositionSource {
    pub fn eval(&self, args: &[&[f64]]) -> f64 {
        match self {
            DecompositionSource::Kernel(k) => k.eval_args(args),
            DecompositionSource::Expansion(e) => e.eval(args),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            DecompositionSource::Kernel(k) => k.order(),
            DecompositionSource::Expansion(e) => e.m,
        }
    }
}

/// Full decomposition: theta, all components, detected degeneracy level.
pub struct DecompositionResult {
    pub theta: ThetaEstimate,
    pub components: Vec<HoeffdingComponent>,
    /// Largest r such that components 1..r-1 vanish on the probe grid
    /// within tolerance; r = 1 when none do.
    pub degeneracy_level: usize,
    pub source: DecompositionSource,
}

impl DecompositionResult {
    pub fn order(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, p: usize) -> &HoeffdingComponent {
        &self.components[p - 1]
    }

    /// JSON summary with all stderr fields (evaluators are not data).
    pub fn to_summary(&self) -> serde_json::Value {
        serde_json::json!({
            "theta": self.theta,
            "degeneracyLevel": self.degeneracy_level,
            "components": self.components.iter().map(|c| serde_json::json!({
                "p": c.p,
                "mode": c.mode,
                "nDraws": c.n_draws,
                "stderr": c.stderr,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Decompose a kernel by Monte Carlo recursion (every level 1..=m), probing
/// component magnitudes on a small marginal-quantile grid to detect the
/// degeneracy level.
pub fn decompose(
    kernel: Arc<dyn SymmetricKernel>,
    marginal: &Marginal,
    n_draws: usize,
    seed: u64,
) -> Result<DecompositionResult> {
    let m = kernel.order();
    let theta_est = theta(kernel.as_ref(), marginal, n_draws.max(2), seed)?;
    let mut components = Vec::with_capacity(m);
    for p in 1..=m {
        components.push(component(kernel.clone(), marginal, p, n_draws, seed)?);
    }
    let degeneracy_level = detect_degeneracy_level(&components, marginal, seed);
    Ok(DecompositionResult {
        theta: theta_est,
        components,
        degeneracy_level,
        source: DecompositionSource::Kernel(kernel),
    })
}

/// Decompose a tensor expansion in closed form.
pub fn decompose_tensor(
    expansion: Arc<FeatureExpansion>,
    marginal: &Marginal,
    n_draws: usize,
    seed: u64,
) -> Result<DecompositionResult> {
    let m = expansion.m;
    let mut components = Vec::with_capacity(m);
    for p in 1..=m {
        components.push(tensor_component(
            expansion.clone(),
            marginal,
            p,
            n_draws,
            seed,
        )?);
    }
    let (means, _, n_used) = basis_means(&expansion, marginal, n_draws, seed)?;
    let theta_est = ThetaEstimate {
        value: tensor_theta(&expansion, &means),
        stderr: components[0].stderr,
        n_draws: n_used,
    };
    let degeneracy_level = detect_degeneracy_level(&components, marginal, seed);
    Ok(DecompositionResult {
        theta: theta_est,
        components,
        degeneracy_level,
        source: DecompositionSource::Expansion(expansion),
    })
}

/// Probe |f_p| at a handful of marginal draws; a level counts as vanishing
/// when every probe is inside 3 combined standard errors of zero. Heuristic
/// by nature; callers may override the level explicitly.
fn detect_degeneracy_level(
    components: &[HoeffdingComponent],
    marginal: &Marginal,
    seed: u64,
) -> usize {
    let probes = marginal.draw_many(5, seed.wrapping_add(97));
    let mut r = 1usize;
    for comp in components {
        let p = comp.p;
        if p == components.len() {
            break;
        }
        let vanishes = probes.windows(p.max(1)).all(|w| {
            if w.len() < p {
                return true;
            }
            let args: Vec<&[f64]> = w.iter().map(|x| x.as_slice()).collect();
            let v = comp.eval(&args);
            v.abs() <= 3.0 * comp.stderr + 1e-10
        });
        if vanishes {
            r = p + 1;
        } else {
            break;
        }
    }
    r
}
