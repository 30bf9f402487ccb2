//! Tail-bound constants and curves.
//!
//! The bound evaluated everywhere is
//!
//!   P( n^{-p} max_k |V_k(f_p)| >= x ) <= 6 exp( -C n x^{2/p} /
//!       (A^{1/p} + x^{1/p} M^{1/p}) )
//!
//! with variant-specific A and M built around the shared bracket term
//! 64 gamma1^{1/3} / (1 - e^{-gamma2/3}) + (ln n)^4 / n, raised to the p-th
//! power. Natural logarithm throughout; n >= 3 so (ln n)^{2p} > 1.
//!
//! C is an explicit calibration field (the analysis only asserts its
//! existence); it defaults to 1 and the experiments module calibrates it
//! empirically. Every report prints C alongside curves.

use crate::error::{Error, Result};
use crate::kernels::polar_constant;
use serde::{Deserialize, Serialize};

/// Geometric mixing envelope constants, both strictly positive.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MixingConstants {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl MixingConstants {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 > 0.0 && gamma2 > 0.0) {
            return Err(Error::invalid("mixing constants must be positive"));
        }
        Ok(Self { gamma1, gamma2 })
    }

    /// 64 gamma1^{1/3} / (1 - e^{-gamma2/3}).
    pub fn series_term(&self) -> f64 {
        64.0 * self.gamma1.powf(1.0 / 3.0) / (1.0 - (-self.gamma2 / 3.0).exp())
    }
}

/// Which constant recipe produced a [`BoundConstants`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Order-m kernel with integrable transform: A = 2^{2m} l1^2 bracket^p.
    General,
    /// Shift-invariant order-2 kernel: A = 16 l1(f0)^2 bracket^p.
    ShiftInvariant,
    /// Positive-definite shift-invariant order-2 kernel: A = 4 f0(0)^2
    /// bracket^p (the transform mass equals the base at zero).
    PositiveDefinite,
    /// Bounded uniformly continuous kernel with transform tail
    /// L/(1+||u||^{md+eps}): A = (1+1/eps)^2 2^{2m} c1^2 L^2 bracket^p,
    /// c1 the polar constant of md.
    FourierTail,
    /// Shift-invariant version of the tail variant, c1 at d.
    FourierTailShiftInvariant,
    /// Constants straight from a tensor expansion's F, B, mu_1, mu_3.
    Tensor,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "general" => Variant::General,
            "shift-invariant" => Variant::ShiftInvariant,
            "positive-definite" | "pd" => Variant::PositiveDefinite,
            "fourier-tail" => Variant::FourierTail,
            "fourier-tail-shift-invariant" => Variant::FourierTailShiftInvariant,
            "tensor" => Variant::Tensor,
            other => {
                return Err(Error::invalid(format!(
                    "unknown bound variant `{other}`"
                )))
            }
        })
    }
}

/// Kernel-side inputs per variant.
#[derive(Debug, Clone, Copy)]
pub enum VariantInput {
    General { m: usize, transform_l1: f64 },
    ShiftInvariant { base_transform_l1: f64 },
    PositiveDefinite { base_at_zero: f64 },
    FourierTail { m: usize, d: usize, l: f64, eps: f64 },
    FourierTailShiftInvariant { d: usize, l: f64, eps: f64 },
}

/// The pair (A, M) of a tail bound, with the calibration constant C.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundConstants {
    pub a: f64,
    pub m_const: f64,
    pub c: f64,
    pub variant: Variant,
    pub p: usize,
    pub n: usize,
}

impl BoundConstants {
    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }
}

fn validate_pn(p: usize, m: usize, n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::invalid("n must be >= 3 so (log n)^{2p} > 1"));
    }
    if p == 0 || p > m {
        return Err(Error::invalid(format!("p = {p} out of range 1..={m}")));
    }
    Ok(())
}

/// Shared bracket: series term + (ln n)^4 / n.
pub fn bracket_term(mixing: &MixingConstants, n: usize) -> f64 {
    let log_n = (n as f64).ln();
    mixing.series_term() + log_n.powi(4) / n as f64
}

/// Evaluate the constants of the requested variant.
pub fn constants_for(
    input: VariantInput,
    p: usize,
    n: usize,
    mixing: &MixingConstants,
) -> Result<BoundConstants> {
    let log_n = (n as f64).ln();
    let bracket = bracket_term(mixing, n);
    let log_pow = log_n.powi(2 * p as i32);
    let (a, m_const, variant) = match input {
        VariantInput::General { m, transform_l1 } => {
            validate_pn(p, m, n)?;
            if !(transform_l1 > 0.0) {
                return Err(Error::invalid("transform mass must be positive"));
            }
            let two_m = 2f64.powi(m as i32);
            (
                two_m * two_m * transform_l1 * transform_l1 * bracket.powi(p as i32),
                two_m * transform_l1 * log_pow,
                Variant::General,
            )
        }
        VariantInput::ShiftInvariant { base_transform_l1 } => {
            validate_pn(p, 2, n)?;
            if !(base_transform_l1 > 0.0) {
                return Err(Error::invalid("transform mass must be positive"));
            }
            (
                16.0 * base_transform_l1 * base_transform_l1 * bracket.powi(p as i32),
                4.0 * base_transform_l1 * log_pow,
                Variant::ShiftInvariant,
            )
        }
        VariantInput::PositiveDefinite { base_at_zero } => {
            validate_pn(p, 2, n)?;
            if !(base_at_zero > 0.0) {
                return Err(Error::invalid("base value at zero must be positive"));
            }
            (
                4.0 * base_at_zero * base_at_zero * bracket.powi(p as i32),
                2.0 * base_at_zero * log_pow,
                Variant::PositiveDefinite,
            )
        }
        VariantInput::FourierTail { m, d, l, eps } => {
            validate_pn(p, m, n)?;
            if !(l > 0.0 && eps > 0.0) {
                return Err(Error::invalid("tail variant needs L > 0 and eps > 0"));
            }
            let c1 = polar_constant((m * d) as u32)?;
            let two_m = 2f64.powi(m as i32);
            let factor = 1.0 + 1.0 / eps;
            (
                factor * factor * two_m * two_m * c1 * c1 * l * l * bracket.powi(p as i32),
                factor * two_m * c1 * l * log_pow,
                Variant::FourierTail,
            )
        }
        VariantInput::FourierTailShiftInvariant { d, l, eps } => {
            validate_pn(p, 2, n)?;
            if !(l > 0.0 && eps > 0.0) {
                return Err(Error::invalid("tail variant needs L > 0 and eps > 0"));
            }
            let c1 = polar_constant(d as u32)?;
            let factor = 1.0 + 1.0 / eps;
            (
                16.0 * factor * factor * c1 * c1 * l * l * bracket.powi(p as i32),
                4.0 * factor * c1 * l * log_pow,
                Variant::FourierTailShiftInvariant,
            )
        }
    };
    Ok(BoundConstants {
        a,
        m_const,
        c: 1.0,
        variant,
        p,
        n,
    })
}

/// Constants straight from an expansion's realized quantities:
///   sigma^2 = 64 gamma1^{1/3} mu3^2 / (1 - e^{-gamma2/3}),
///   A = mu1^{2(m-p)} F^2 (sigma^2 + B^2 (ln n)^4 / n)^p,
///   M = mu1^{m-p} F B^p (ln n)^{2p}.
#[allow(clippy::too_many_arguments)]
pub fn tensor_constants(
    coefficient_budget: f64,
    basis_bound: f64,
    mu1: f64,
    mu3: f64,
    mixing: &MixingConstants,
    n: usize,
    p: usize,
    m: usize,
) -> Result<BoundConstants> {
    validate_pn(p, m, n)?;
    if !(coefficient_budget > 0.0 && basis_bound > 0.0) {
        return Err(Error::invalid("F and B must be positive"));
    }
    if mu1 < 0.0 || mu3 < 0.0 {
        return Err(Error::invalid("basis moments must be nonnegative"));
    }
    let log_n = (n as f64).ln();
    let sigma_sq = 64.0 * mixing.gamma1.powf(1.0 / 3.0) * mu3 * mu3
        / (1.0 - (-mixing.gamma2 / 3.0).exp());
    let inner = sigma_sq + basis_bound * basis_bound * log_n.powi(4) / n as f64;
    let a = mu1.powi(2 * (m - p) as i32)
        * coefficient_budget
        * coefficient_budget
        * inner.powi(p as i32);
    let m_const = mu1.powi((m - p) as i32)
        * coefficient_budget
        * basis_bound.powi(p as i32)
        * log_n.powi(2 * p as i32);
    Ok(BoundConstants {
        a,
        m_const,
        c: 1.0,
        variant: Variant::Tensor,
        p,
        n,
    })
}

/// Right side of the tail inequality at threshold x.
pub fn tail_bound(bc: &BoundConstants, x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::invalid("threshold x must be nonnegative"));
    }
    if x == 0.0 {
        return Ok(6.0);
    }
    let p = bc.p as f64;
    let num = bc.c * bc.n as f64 * x.powf(2.0 / p);
    let den = bc.a.powf(1.0 / p) + x.powf(1.0 / p) * bc.m_const.powf(1.0 / p);
    Ok(6.0 * (-num / den).exp())
}

/// Sum of per-level tail bounds for levels r..=m (the maximal-type bound
/// for the combined centered statistic).
pub fn combined_tail_bound(constants: &[BoundConstants], x: f64) -> Result<f64> {
    if constants.is_empty() {
        return Err(Error::invalid("need at least one level"));
    }
    let mut total = 0.0;
    for bc in constants {
        total += tail_bound(bc, x)?;
    }
    Ok(total)
}

/// The evaluated bound over a threshold grid.
#[derive(Debug, Clone, Serialize)]
pub struct TailCurve {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub constants: BoundConstants,
}

impl TailCurve {
    pub fn new(bc: &BoundConstants, xs: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(xs.len());
        for &x in xs {
            values.push(tail_bound(bc, x)?);
        }
        Ok(Self {
            xs: xs.to_vec(),
            values,
            constants: *bc,
        })
    }
}
