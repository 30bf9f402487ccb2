//! V- and U-statistics over sample paths: exact prefix series by
//! enumeration, the O(nK) partial-sum route for tensor components, maximal
//! statistics, and the combined centered statistic with its
//! binomial-weighted bound.
//!
//! Summation order is fixed (index-lexicographic, compensated) so serial
//! and parallel runs agree bitwise.

use crate::error::{Error, Result};
use crate::hoeffding::{DecompositionResult, HoeffdingComponent};
use crate::kernels::SymmetricKernel;
use crate::numeric::CompensatedSum;
use rayon::prelude::*;
use serde::Serialize;

/// Realized path X_1..X_n in R^d with generator metadata.
#[derive(Debug, Clone, Serialize)]
pub struct SamplePath {
    /// Row-major coordinates, length n*d.
    pub data: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub process: String,
    pub seed: u64,
    /// Coordinates clamped by the generator's clipping box, if any.
    pub clipped: usize,
}

impl SamplePath {
    pub fn new(data: Vec<f64>, d: usize, process: impl Into<String>, seed: u64) -> Result<Self> {
        if d == 0 || data.is_empty() || !data.len().is_multiple_of(d) {
            return Err(Error::invalid("path data length must be a multiple of d"));
        }
        Ok(Self {
            n: data.len() / d,
            data,
            d,
            process: process.into(),
            seed,
            clipped: 0,
        })
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// The first k points as a path (prefix-consistency checks).
    pub fn truncated(&self, k: usize) -> SamplePath {
        SamplePath {
            data: self.data[..k * self.d].to_vec(),
            n: k,
            d: self.d,
            process: self.process.clone(),
            seed: self.seed,
            clipped: 0,
        }
    }

    /// Whether every coordinate lies inside [-box, box].
    pub fn inside_box(&self, half_width: f64) -> bool {
        self.data.iter().all(|v| v.abs() <= half_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesMode {
    Naive,
    Features,
}

/// The prefix series V_k for k = 1..n of a level-p evaluator.
#[derive(Debug, Clone, Serialize)]
pub struct VStatSeries {
    pub values: Vec<f64>,
    pub p: usize,
    pub mode: SeriesMode,
}

impl VStatSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// T_p = n^{-p} max_k |V_k|.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaximalStatistic {
    pub value: f64,
    pub p: usize,
    pub n: usize,
}

/// Partial sums S_{k,j} of centered bases along the path and their running
/// maxima Z_j; the backbone of the feature route.
#[derive(Debug, Clone)]
pub struct PartialSumTable {
    /// columns[j][k-1] = sum_{i<=k} centered_basis_j(X_i).
    pub columns: Vec<Vec<f64>>,
    /// z[j] = max_k |S_{k,j}|.
    pub z: Vec<f64>,
    pub n: usize,
}

impl PartialSumTable {
    pub fn s(&self, k: usize, j: usize) -> f64 {
        self.columns[j][k - 1]
    }
}

const NAIVE_TUPLE_CAP: f64 = 1.0e8;

/// Exact V_k series by enumeration, V_k built incrementally from V_{k-1} by
/// adding the tuples whose maximal index is k. Guarded: p <= 3 and n^p
/// below the tuple cap; beyond that use the feature route.
pub fn v_naive(f: &dyn SymmetricKernel, path: &SamplePath) -> Result<VStatSeries> {
    let p = f.order();
    let n = path.n;
    if p > 3 {
        return Err(Error::Resource(
            "naive enumeration is limited to p <= 3; use the feature route".into(),
        ));
    }
    if (n as f64).powi(p as i32) > NAIVE_TUPLE_CAP {
        return Err(Error::Resource(format!(
            "naive enumeration would visit {:.2e} tuples; use the feature route",
            (n as f64).powi(p as i32)
        )));
    }
    if f.arg_dim() != path.d {
        return Err(Error::invalid("path dimension does not match evaluator"));
    }
    let mut values = Vec::with_capacity(n);
    let mut running = CompensatedSum::new();
    let mut idx = vec![0usize; p];
    for k in 1..=n {
        // all tuples in [1..k]^p with at least one index equal to k
        let mut boundary = CompensatedSum::new();
        enumerate_boundary(&mut idx, 0, k, false, &mut |tuple: &[usize]| {
            let args: Vec<&[f64]> = tuple.iter().map(|&i| path.point(i - 1)).collect();
            boundary.add(f.eval_args(&args));
        });
        running.add(boundary.value());
        values.push(running.value());
    }
    Ok(VStatSeries {
        values,
        p,
        mode: SeriesMode::Naive,
    })
}

/// Recursive odometer over tuples of [1..k]^p containing index k at least
/// once; lexicographic order keeps summation reproducible.
fn enumerate_boundary(
    idx: &mut Vec<usize>,
    slot: usize,
    k: usize,
    has_k: bool,
    visit: &mut impl FnMut(&[usize]),
) {
    let p = idx.len();
    if slot == p {
        if has_k {
            visit(idx);
        }
        return;
    }
    let remaining = p - slot - 1;
    for v in 1..=k {
        idx[slot] = v;
        let now_has = has_k || v == k;
        // prune branches that can no longer contain k
        if !now_has && remaining == 0 {
            continue;
        }
        enumerate_boundary(idx, slot + 1, k, now_has, visit);
    }
}

/// V_k series of a tensor component via partial sums: O(nK) to build the
/// table, then each V_k is a coefficient-weighted product of p partial sums
/// and m-p basis means. Identical contract to [`v_naive`].
pub fn v_features(
    comp: &HoeffdingComponent,
    path: &SamplePath,
) -> Result<(VStatSeries, PartialSumTable)> {
    let (expansion, means) = comp.tensor_parts().ok_or_else(|| {
        Error::invalid("feature route needs a tensor-mode component")
    })?;
    if expansion.d != path.d {
        return Err(Error::invalid("path dimension does not match expansion"));
    }
    let p = comp.p;
    let m = expansion.m;
    let n = path.n;

    // centered partial sums per basis, columns in parallel
    let columns: Vec<Vec<f64>> = expansion
        .bases
        .par_iter()
        .enumerate()
        .map(|(j, basis)| {
            let mean = means[j];
            let mut acc = CompensatedSum::new();
            let mut col = Vec::with_capacity(n);
            for i in 0..n {
                acc.add(basis.eval(path.point(i)) - mean);
                col.push(acc.value());
            }
            col
        })
        .collect();
    let z: Vec<f64> = columns
        .iter()
        .map(|col| col.iter().fold(0.0f64, |a, &s| a.max(s.abs())))
        .collect();

    // mean prefactors per term are k-independent
    let prefactors: Vec<f64> = expansion
        .terms
        .iter()
        .map(|t| {
            let mut w = t.weight;
            for &j in &t.bases[..m - p] {
                w *= means[j];
            }
            w
        })
        .collect();

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|ki| {
            let mut acc = CompensatedSum::new();
            for (term, &w) in expansion.terms.iter().zip(&prefactors) {
                if w == 0.0 {
                    continue;
                }
                let mut prod = w;
                for &j in &term.bases[m - p..] {
                    prod *= columns[j][ki];
                }
                acc.add(prod);
            }
            acc.value()
        })
        .collect();

    Ok((
        VStatSeries {
            values,
            p,
            mode: SeriesMode::Features,
        },
        PartialSumTable { columns, z, n },
    ))
}

/// U-statistic: the kernel summed over tuples of distinct indices.
pub fn u_naive(f: &dyn SymmetricKernel, path: &SamplePath) -> Result<f64> {
    let m = f.order();
    let n = path.n;
    if n < m {
        return Err(Error::invalid(format!(
            "U-statistic needs n >= m (n = {n}, m = {m})"
        )));
    }
    if (n as f64).powi(m as i32) > NAIVE_TUPLE_CAP {
        return Err(Error::Resource("distinct-tuple enumeration too large".into()));
    }
    let mut total = CompensatedSum::new();
    let mut idx = vec![0usize; m];
    enumerate_distinct(&mut idx, 0, n, &mut |tuple: &[usize]| {
        let args: Vec<&[f64]> = tuple.iter().map(|&i| path.point(i)).collect();
        total.add(f.eval_args(&args));
    });
    Ok(total.value())
}

fn enumerate_distinct(
    idx: &mut Vec<usize>,
    slot: usize,
    n: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    let m = idx.len();
    if slot == m {
        visit(idx);
        return;
    }
    'outer: for v in 0..n {
        for taken in idx.iter().take(slot) {
            if *taken == v {
                continue 'outer;
            }
        }
        idx[slot] = v;
        enumerate_distinct(idx, slot + 1, n, visit);
    }
}

/// T_p = n^{-p} max_{1<=k<=n} |V_k|.
pub fn maximal_statistic(series: &VStatSeries) -> MaximalStatistic {
    let n = series.len();
    let max_abs = series.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let value = max_abs / (n as f64).powi(series.p as i32);
    MaximalStatistic {
        value,
        p: series.p,
        n,
    }
}

/// The combined centered statistic and its bound.
#[derive(Debug, Clone, Serialize)]
pub struct CombinedStatistic {
    /// n^{-m} max_k |sum over m-tuples <= k of (f - theta)|.
    pub statistic: f64,
    /// sum_{p=r}^m C(m, p) T_p at the degeneracy level used.
    pub bound: f64,
    /// T_p for every level 1..=m.
    pub per_level: Vec<f64>,
    /// Degeneracy level the bound summed from.
    pub r_used: usize,
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Combined centered maximal statistic of the decomposition's source kernel
/// against the binomial-weighted sum of per-level maximal statistics. The
/// full-level sum dominates the statistic as an algebraic identity; the
/// check errs if floating-point slack is exceeded.
///
/// `r_override` restricts the reported bound to levels >= r (callers that
/// know the degeneracy level); the identity check always uses all levels.
pub fn combined_centered_vstat(
    decomp: &DecompositionResult,
    path: &SamplePath,
    r_override: Option<usize>,
) -> Result<CombinedStatistic> {
    let m = decomp.order();
    let n = path.n;
    if (n as f64).powi(m as i32) > NAIVE_TUPLE_CAP {
        return Err(Error::Resource(
            "combined statistic enumerates all m-tuples; n too large".into(),
        ));
    }
    let r_used = r_override.unwrap_or(decomp.degeneracy_level);
    if r_used == 0 || r_used > m {
        return Err(Error::invalid("degeneracy level out of range"));
    }
    let theta = decomp.theta.value;

    // centered prefix sums of the source kernel, incremental in k
    let mut running = CompensatedSum::new();
    let mut best = 0.0f64;
    let mut idx = vec![0usize; m];
    for k in 1..=n {
        let mut boundary = CompensatedSum::new();
        enumerate_boundary(&mut idx, 0, k, false, &mut |tuple: &[usize]| {
            let args: Vec<&[f64]> = tuple.iter().map(|&i| path.point(i - 1)).collect();
            boundary.add(decomp.source.eval(&args) - theta);
        });
        running.add(boundary.value());
        best = best.max(running.value().abs());
    }
    let statistic = best / (n as f64).powi(m as i32);

    // per-level maximal statistics (feature route when available)
    let mut per_level = Vec::with_capacity(m);
    for p in 1..=m {
        let comp = decomp.component(p);
        let series = if comp.tensor_parts().is_some() {
            v_features(comp, path)?.0
        } else {
            v_naive(comp, path)?
        };
        per_level.push(maximal_statistic(&series).value);
    }
    let bound_at = |r: usize| -> f64 {
        (r..=m)
            .map(|p| binomial(m, p) * per_level[p - 1])
            .sum::<f64>()
    };
    let bound = bound_at(r_used);
    let full_bound = bound_at(1);
    let slack = 1e-9 * (1.0 + full_bound.abs());
    if statistic > full_bound + slack {
        return Err(Error::Numeric {
            message: "combined statistic exceeded its binomial-weighted bound".into(),
            residual: statistic - full_bound,
        });
    }
    Ok(CombinedStatistic {
        statistic,
        bound,
        per_level,
        r_used,
    })
}
