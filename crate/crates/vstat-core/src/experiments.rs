//! Monte Carlo engine: empirical tails of the maximal statistic T_p,
//! calibration of the bound constant C, dominance checks across sample
//! sizes, concentration-scaling studies, and feature-count convergence
//! studies. Replications run concurrently on per-replication substreams
//! and aggregate in replication order, so results do not depend on
//! scheduling and re-runs are byte-identical.

use crate::bounds::{self, BoundConstants, MixingConstants, VariantInput};
use crate::error::{Error, Result};
use crate::hoeffding::{self, HoeffdingComponent, Marginal};
use crate::kernels::{KernelSpec, SymmetricKernel};
use crate::mixing::{self, ProcessKind, ProcessSpec, SeedSpec, StreamDomain};
use crate::numeric::{log_spaced, median, quantile, regression_slope};
use crate::rff::{build_expansion, uniform_error, ApproxBudget, FeatureExpansion};
use crate::vstat::{maximal_statistic, v_features, v_naive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::Arc;

const WILSON_Z: f64 = 1.96;
const C_CAP: f64 = 1.0e6;

/// 95% Wilson interval for a binomial proportion.
pub fn wilson_interval(successes: usize, total: usize) -> (f64, f64) {
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelConfig {
    Name(String),
    Spec { name: String, d: Option<usize> },
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig::Name("gaussian".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProcessConfig {
    Name(String),
    Spec {
        kind: String,
        rho: Option<f64>,
        q: Option<f64>,
        order: Option<usize>,
        d: Option<usize>,
    },
}

impl Default for ProcessConfig {
    fn default() -> Self {
        ProcessConfig::Name("iid-normal".into())
    }
}

fn default_features() -> usize {
    256
}
fn default_box() -> f64 {
    2.0
}
fn default_mean_samples() -> usize {
    100_000
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XGridConfig {
    Auto(String),
    Explicit(Vec<f64>),
}

impl Default for XGridConfig {
    fn default() -> Self {
        XGridConfig::Auto("auto".into())
    }
}

/// One self-describing experiment configuration (the CLI's JSON schema).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelConfig,
    pub process: ProcessConfig,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    /// Degeneracy level for combined studies; detected when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(rename = "nList")]
    pub n_list: Vec<usize>,
    #[serde(rename = "R")]
    pub replications: usize,
    #[serde(rename = "D", default = "default_features")]
    pub features: usize,
    /// Half-width of the approximation box.
    #[serde(rename = "M", default = "default_box")]
    pub box_half_width: f64,
    #[serde(rename = "xGrid", default)]
    pub x_grid: XGridConfig,
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(rename = "meanSamples", default = "default_mean_samples")]
    pub mean_samples: usize,
    /// Bound variant override; auto-selected from the kernel when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Explicit bound constant for `bound`-style evaluation.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Tail-variant parameters when the variant needs them.
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Mixing-envelope overrides (documented process values otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    /// Clip generated coordinates to [-clip, clip].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
    /// Target sup error: sizes the expansion by the covering-argument
    /// formulas instead of the flat feature count D.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Moment order for the sample-size formulas (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > 4 {
            return Err(Error::validation("m", "order must be in 1..=4"));
        }
        if let Some(p) = self.p {
            if p == 0 || p > self.m {
                return Err(Error::validation("p", format!("must be in 1..={}", self.m)));
            }
        }
        if let Some(r) = self.r {
            if r == 0 || r > self.m {
                return Err(Error::validation("r", format!("must be in 1..={}", self.m)));
            }
        }
        if self.n_list.is_empty() {
            return Err(Error::validation("nList", "must be nonempty"));
        }
        for &n in &self.n_list {
            if n < 3 {
                return Err(Error::validation("nList", "every n must be >= 3"));
            }
        }
        if self.replications == 0 {
            return Err(Error::validation("R", "must be >= 1"));
        }
        if self.features == 0 {
            return Err(Error::validation("D", "must be >= 1"));
        }
        if !(self.box_half_width > 0.0) {
            return Err(Error::validation("M", "must be positive"));
        }
        if self.mean_samples < 2 {
            return Err(Error::validation("meanSamples", "must be >= 2"));
        }
        if let XGridConfig::Explicit(xs) = &self.x_grid {
            if xs.is_empty() {
                return Err(Error::validation("xGrid", "must be nonempty"));
            }
            if xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::validation("xGrid", "must be sorted ascending"));
            }
        } else if let XGridConfig::Auto(s) = &self.x_grid {
            if s != "auto" {
                return Err(Error::validation("xGrid", "expected \"auto\" or an array"));
            }
        }
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return Err(Error::validation("C", "must be positive"));
            }
        }
        if let Some(g) = self.gamma1 {
            if !(g > 0.0) {
                return Err(Error::validation("gamma1", "must be positive"));
            }
        }
        if let Some(g) = self.gamma2 {
            if !(g > 0.0) {
                return Err(Error::validation("gamma2", "must be positive"));
            }
        }
        if let Some(t) = self.t {
            if !(t > 0.0) {
                return Err(Error::validation("t", "must be positive"));
            }
        }
        if let Some(q) = self.q {
            if q < 1.0 {
                return Err(Error::validation("q", "must be >= 1"));
            }
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let (name, d) = match &self.kernel {
            KernelConfig::Name(n) => (n.as_str(), 1),
            KernelConfig::Spec { name, d } => (name.as_str(), d.unwrap_or(1)),
        };
        KernelSpec::by_name(name, self.m, d)
            .map_err(|e| Error::validation("kernel", e.to_string()))
    }

    pub fn process_spec(&self) -> Result<ProcessSpec> {
        let spec = match &self.process {
            ProcessConfig::Name(n) => ProcessSpec::by_name(n),
            ProcessConfig::Spec {
                kind,
                rho,
                q,
                order,
                d,
            } => {
                let dd = d.unwrap_or(1);
                match kind.as_str() {
                    "iid" | "iid-normal" => ProcessSpec::new(ProcessKind::Iid, dd),
                    "ar1" => ProcessSpec::new(
                        ProcessKind::Ar1 {
                            rho: rho.unwrap_or(0.5),
                        },
                        dd,
                    ),
                    "two-state" | "two-state-chain" => ProcessSpec::new(
                        ProcessKind::TwoStateChain {
                            q: q.unwrap_or(0.1),
                        },
                        dd,
                    ),
                    "ma" | "moving-average" => ProcessSpec::new(
                        ProcessKind::MovingAverage {
                            order: order.unwrap_or(2),
                        },
                        dd,
                    ),
                    other => Err(Error::invalid(format!("unknown process kind `{other}`"))),
                }
            }
        }
        .map_err(|e| Error::validation("process", e.to_string()))?;
        Ok(match self.clip {
            Some(c) => spec.with_clip(c),
            None => spec,
        })
    }

    pub fn mixing_constants(&self) -> Result<MixingConstants> {
        let proc = self.process_spec()?;
        MixingConstants::new(
            self.gamma1.unwrap_or(proc.gamma1),
            self.gamma2.unwrap_or(proc.gamma2),
        )
    }

    /// Kernel-side variant input, auto-selected unless overridden.
    pub fn variant_input(&self, kernel: &KernelSpec) -> Result<VariantInput> {
        let name = match &self.variant {
            Some(v) => v.clone(),
            None => {
                if kernel.m == 2 && kernel.shift_invariant && kernel.pd {
                    "positive-definite".into()
                } else if kernel.m == 2 && kernel.shift_invariant {
                    "shift-invariant".into()
                } else {
                    "general".into()
                }
            }
        };
        Ok(match name.as_str() {
            "general" => VariantInput::General {
                m: kernel.m,
                transform_l1: kernel.fourier_l1_norm()?,
            },
            "shift-invariant" => VariantInput::ShiftInvariant {
                base_transform_l1: kernel.fourier_l1_norm()?,
            },
            "positive-definite" | "pd" => VariantInput::PositiveDefinite {
                base_at_zero: kernel.base_value_at_zero(),
            },
            "fourier-tail" => VariantInput::FourierTail {
                m: kernel.m,
                d: kernel.d,
                l: self.l.ok_or_else(|| Error::validation("L", "required by fourier-tail"))?,
                eps: self
                    .eps
                    .ok_or_else(|| Error::validation("eps", "required by fourier-tail"))?,
            },
            "fourier-tail-shift-invariant" => VariantInput::FourierTailShiftInvariant {
                d: kernel.d,
                l: self.l.ok_or_else(|| Error::validation("L", "required by fourier-tail"))?,
                eps: self
                    .eps
                    .ok_or_else(|| Error::validation("eps", "required by fourier-tail"))?,
            },
            other => return Err(Error::validation("variant", format!("unknown `{other}`"))),
        })
    }
}

/// Everything an experiment shares across replications and sample sizes:
/// the expansion, its basis means under the process marginal, and the
/// mixing constants.
pub struct Pipeline {
    pub kernel: KernelSpec,
    pub process: ProcessSpec,
    pub mixing: MixingConstants,
    pub marginal: Marginal,
    pub expansion: Arc<FeatureExpansion>,
    pub means: Vec<f64>,
    pub means_max_se: f64,
    pub seeds: SeedSpec,
    pub box_half_width: f64,
    pub mean_samples: usize,
}

impl Pipeline {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let kernel = cfg.kernel_spec()?;
        let process = cfg.process_spec()?;
        if process.d != kernel.d {
            return Err(Error::validation(
                "process",
                "process dimension must match kernel dimension",
            ));
        }
        let mixing = cfg.mixing_constants()?;
        let marginal = process.marginal();
        let seeds = SeedSpec::new(cfg.seed);
        let parts = crate::rff::decompose_sign_measure(&kernel)?;
        let budget = ApproxBudget::proportional(cfg.features, &parts.masses)?;
        let expansion = Arc::new(build_expansion(
            &kernel,
            &budget,
            seeds.derived_seed(StreamDomain::Expansion, 0),
        )?);
        let (means, means_max_se, _) = hoeffding::basis_means(
            &expansion,
            &marginal,
            cfg.mean_samples,
            seeds.derived_seed(StreamDomain::BasisMeans, 0),
        )?;
        Ok(Self {
            kernel,
            process,
            mixing,
            marginal,
            expansion,
            means,
            means_max_se,
            seeds,
            box_half_width: cfg.box_half_width,
            mean_samples: cfg.mean_samples,
        })
    }

    pub fn component(&self, p: usize) -> Result<Arc<HoeffdingComponent>> {
        Ok(Arc::new(hoeffding::tensor_component_from_means(
            self.expansion.clone(),
            self.means.clone(),
            self.means_max_se,
            self.mean_samples,
            p,
        )?))
    }

    /// T_p for replications 0..count at sample size n; deterministic per
    /// replication index regardless of count.
    fn t_values(
        &self,
        comp: &HoeffdingComponent,
        n: usize,
        count: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let audited = n <= 50;
        let results: Result<Vec<(f64, bool)>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let path = mixing::generate_path(
                    &self.process,
                    n,
                    self.seeds.derived_seed(StreamDomain::Replication, i as u64),
                )?;
                let (series, _) = v_features(comp, &path)?;
                if audited && i < 3 {
                    let naive = v_naive(comp, &path)?;
                    let scale = series
                        .values
                        .iter()
                        .fold(1.0f64, |a, &v| a.max(v.abs()));
                    for (a, b) in series.values.iter().zip(&naive.values) {
                        if (a - b).abs() > 1e-8 * scale {
                            return Err(Error::Numeric {
                                message: "feature/naive audit mismatch".into(),
                                residual: (a - b).abs(),
                            });
                        }
                    }
                }
                let outside = !path.inside_box(self.box_half_width);
                Ok((maximal_statistic(&series).value, outside))
            })
            .collect();
        let results = results?;
        let exceed = results.iter().filter(|(_, out)| *out).count();
        Ok((results.into_iter().map(|(t, _)| t).collect(), exceed))
    }

    /// Run the tail experiment at sample size n for level p.
    pub fn empirical_tail(
        &self,
        p: usize,
        n: usize,
        replications: usize,
        x_grid: &XGridConfig,
    ) -> Result<EmpiricalTail> {
        if replications < 50 {
            return Err(Error::validation(
                "R",
                "tail experiments need at least 50 replications",
            ));
        }
        let comp = self.component(p)?;
        let (t_values, exceed) = self.t_values(&comp, n, replications)?;
        let xs = match x_grid {
            XGridConfig::Explicit(xs) => xs.clone(),
            XGridConfig::Auto(_) => {
                // pilot: the first R/10 replications (same substreams)
                let pilot = &t_values[..(replications / 10).max(10).min(replications)];
                auto_grid(pilot)
            }
        };
        let mut phat = Vec::with_capacity(xs.len());
        let mut lo = Vec::with_capacity(xs.len());
        let mut hi = Vec::with_capacity(xs.len());
        for &x in &xs {
            let count = t_values.iter().filter(|&&t| t >= x).count();
            let (l, h) = wilson_interval(count, replications);
            phat.push(count as f64 / replications as f64);
            lo.push(l);
            hi.push(h);
        }
        Ok(EmpiricalTail {
            xs,
            phat,
            wilson_lo: lo,
            wilson_hi: hi,
            t_values,
            n,
            p,
            exceed_fraction: exceed as f64 / replications as f64,
        })
    }
}

/// 30 log-spaced thresholds between the pilot's 50th and 99.5th percentile.
fn auto_grid(pilot: &[f64]) -> Vec<f64> {
    let lo = quantile(pilot, 0.5);
    let hi = quantile(pilot, 0.995);
    if !(lo > 0.0) || !(hi > lo) {
        // degenerate pilot (zero statistic): fixed fallback
        return log_spaced(1e-6, 1.0, 30);
    }
    log_spaced(lo, hi, 30)
}

/// Empirical survival function of T_p on a threshold grid with Wilson 95%
/// intervals; per-replication values retained.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalTail {
    pub xs: Vec<f64>,
    pub phat: Vec<f64>,
    pub wilson_lo: Vec<f64>,
    pub wilson_hi: Vec<f64>,
    pub t_values: Vec<f64>,
    pub n: usize,
    pub p: usize,
    /// Fraction of replications whose path left the approximation box.
    pub exceed_fraction: f64,
}

/// Largest C whose curve dominates the upper Wilson bound at every
/// constrained grid point.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub c_star: f64,
    pub binding_x: Option<f64>,
    pub capped: bool,
    /// Per-x solved constants (None where phat = 0 imposes no constraint).
    pub per_x: Vec<Option<f64>>,
}

/// Closed-form inversion of the tail bound per grid point: the exponent is
/// linear in C, so 6 exp(-C g(x)) = w gives C = ln(6/w) / g(x); the
/// calibrated constant is the minimum over constrained points.
pub fn calibrate_c(tail: &EmpiricalTail, bc: &BoundConstants) -> Result<CalibrationReport> {
    if bc.p != tail.p || bc.n != tail.n {
        return Err(Error::invalid("constants and tail disagree on (p, n)"));
    }
    let p = bc.p as f64;
    let mut c_star = C_CAP;
    let mut binding_x = None;
    let mut per_x = Vec::with_capacity(tail.xs.len());
    for (i, &x) in tail.xs.iter().enumerate() {
        if tail.phat[i] <= 0.0 || x <= 0.0 {
            per_x.push(None);
            continue;
        }
        let w = tail.wilson_hi[i];
        let g = bc.n as f64 * x.powf(2.0 / p)
            / (bc.a.powf(1.0 / p) + x.powf(1.0 / p) * bc.m_const.powf(1.0 / p));
        let c_x = (6.0 / w).ln() / g;
        per_x.push(Some(c_x));
        if c_x < c_star {
            c_star = c_x;
            binding_x = Some(x);
        }
    }
    let capped = binding_x.is_none();
    Ok(CalibrationReport {
        c_star,
        binding_x,
        capped,
        per_x,
    })
}

/// Pointwise check that the bound curve lies above the empirical tail.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub pass: bool,
    pub rows: Vec<DominanceRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceRow {
    pub x: f64,
    pub phat: f64,
    pub bound: f64,
}

pub fn dominance_check(tail: &EmpiricalTail, bc: &BoundConstants) -> Result<DominanceReport> {
    let mut rows = Vec::with_capacity(tail.xs.len());
    let mut pass = true;
    for (i, &x) in tail.xs.iter().enumerate() {
        let bound = bounds::tail_bound(bc, x)?;
        if bound < tail.phat[i] {
            pass = false;
        }
        rows.push(DominanceRow {
            x,
            phat: tail.phat[i],
            bound,
        });
    }
    Ok(DominanceReport { pass, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub median_tp: f64,
    /// median(T_p) * n^{p/2}.
    pub scaled_median: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub p: usize,
    pub rows: Vec<ScalingRow>,
    /// max/min of the scaled medians (1 means perfect n^{-p/2} scaling).
    pub spread: f64,
}

/// Median T_p against n, scaled by n^{p/2}.
pub fn scaling_study(
    pipeline: &Pipeline,
    p: usize,
    n_list: &[usize],
    replications: usize,
) -> Result<ScalingReport> {
    if n_list.len() < 3 {
        return Err(Error::validation("nList", "scaling study needs >= 3 sizes"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("nList", "must be strictly increasing"));
    }
    let comp = pipeline.component(p)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (ts, _) = pipeline.t_values(&comp, n, replications)?;
        let med = median(&ts);
        rows.push(ScalingRow {
            n,
            median_tp: med,
            scaled_median: med * (n as f64).powf(p as f64 / 2.0),
        });
    }
    let max = rows.iter().map(|r| r.scaled_median).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.scaled_median).fold(f64::MAX, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(ScalingReport { p, rows, spread })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub features: usize,
    pub median_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log median error against log feature count.
    pub slope: f64,
}

/// Median sup-grid error per feature count over independent seeds, with the
/// fitted log-log slope. The builder injects how expansions are built so
/// exactly-representable targets can bypass sampling.
pub fn rff_convergence_study(
    target: &dyn SymmetricKernel,
    builder: &(dyn Fn(usize, u64) -> Result<FeatureExpansion> + Sync),
    d_list: &[usize],
    box_half_width: f64,
    seeds_count: usize,
    master_seed: u64,
    grid_pts: usize,
) -> Result<ConvergenceReport> {
    if d_list.len() < 3 {
        return Err(Error::validation("D", "convergence study needs >= 3 counts"));
    }
    let seeds = SeedSpec::new(master_seed);
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        let errors: Result<Vec<f64>> = (0..seeds_count)
            .into_par_iter()
            .map(|s| {
                let exp = builder(d, seeds.derived_seed(StreamDomain::Expansion, s as u64))?;
                uniform_error(&exp, target, box_half_width, grid_pts)
            })
            .collect();
        rows.push(ConvergenceRow {
            features: d,
            median_error: median(&errors?),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.features as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_error.max(1e-300).ln()).collect();
    let slope = regression_slope(&xs, &ys);
    Ok(ConvergenceReport { rows, slope })
}

/// Convenience: the standard builder sampling from a kernel's transform.
pub fn kernel_expansion_builder(
    spec: KernelSpec,
    total_features: usize,
) -> impl Fn(usize, u64) -> Result<FeatureExpansion> {
    let _ = total_features;
    move |d, seed| {
        let parts = crate::rff::decompose_sign_measure(&spec)?;
        let budget = ApproxBudget::proportional(d, &parts.masses)?;
        build_expansion(&spec, &budget, seed)
    }
}
