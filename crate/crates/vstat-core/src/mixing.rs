//! Seeded generators of stationary sequences with documented geometric
//! strong-mixing envelopes alpha(i) <= gamma1 exp(-gamma2 i), plus an exact
//! enumeration oracle bounding alpha(i) from below for the two-state chain.
//!
//! Envelope provenance per generator:
//! - iid: alpha(i) = 0; any positive envelope is valid, (1, 1) recorded.
//! - ar1(rho): Gaussian AR(1); by the maximal-correlation bound for jointly
//!   Gaussian sigma-algebras, alpha(i) <= rho^i / 4, so (1, -ln rho) is a
//!   valid (loose) envelope. rho = 0 degenerates to iid.
//! - two-state chain(q): alpha(i) = |1-2q|^i / 4 exactly (eigenvalue decay
//!   of the transition matrix), envelope (1, -ln |1-2q|).
//! - moving-average(L): (L+1)-dependent, alpha(i) = 0 for i > L and <= 1/4
//!   below; envelope (e^L / 4, 1).

use crate::error::{Error, Result};
use crate::vstat::SamplePath;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const GAMMA2_CAP: f64 = 1.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ProcessKind {
    Iid,
    Ar1 { rho: f64 },
    TwoStateChain { q: f64 },
    MovingAverage { order: usize },
}

/// A stationary-sequence generator with its documented mixing constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub d: usize,
    /// Clamp coordinates to [-clip, clip], recorded per path.
    pub clip: Option<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub provenance: String,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("process dimension must be >= 1"));
        }
        let (gamma1, gamma2, provenance): (f64, f64, String) = match kind {
            ProcessKind::Iid => (
                1.0,
                1.0,
                "independent sequence: alpha(i) = 0, any envelope valid".into(),
            ),
            ProcessKind::Ar1 { rho } => {
                if !(0.0..1.0).contains(&rho) {
                    return Err(Error::invalid("ar1 needs rho in [0, 1)"));
                }
                let g2 = if rho == 0.0 { GAMMA2_CAP } else { (-rho.ln()).min(GAMMA2_CAP) };
                (
                    1.0,
                    g2,
                    format!(
                        "Gaussian AR(1): alpha(i) <= rho^i/4 via maximal correlation, rho = {rho}"
                    ),
                )
            }
            ProcessKind::TwoStateChain { q } => {
                if !(0.0 < q && q < 1.0) {
                    return Err(Error::invalid("two-state chain needs q in (0, 1)"));
                }
                if d != 1 {
                    return Err(Error::invalid("two-state chain is one-dimensional"));
                }
                let lambda = (1.0 - 2.0 * q).abs();
                let g2 = if lambda == 0.0 {
                    GAMMA2_CAP
                } else {
                    (-lambda.ln()).min(GAMMA2_CAP)
                };
                (
                    1.0,
                    g2,
                    format!("two-state chain: alpha(i) = |1-2q|^i/4 exactly, q = {q}"),
                )
            }
            ProcessKind::MovingAverage { order } => {
                if order == 0 || order > 50 {
                    return Err(Error::invalid("moving average order must be in 1..=50"));
                }
                if d != 1 {
                    return Err(Error::invalid("moving average is one-dimensional"));
                }
                (
                    (order as f64).exp() / 4.0,
                    1.0,
                    format!("MA({order}): (order+1)-dependent, alpha(i) = 0 for i > order"),
                )
            }
        };
        Ok(Self {
            kind,
            d,
            clip: None,
            gamma1,
            gamma2,
            provenance,
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "iid-normal" | "iid" => Self::new(ProcessKind::Iid, 1),
            "ar1" => Self::new(ProcessKind::Ar1 { rho: 0.5 }, 1),
            "two-state" | "two-state-chain" => Self::new(ProcessKind::TwoStateChain { q: 0.1 }, 1),
            "ma" | "moving-average" => Self::new(ProcessKind::MovingAverage { order: 2 }, 1),
            other => Err(Error::invalid(format!(
                "unknown process `{other}` (known: iid-normal, ar1, two-state-chain, moving-average)"
            ))),
        }
    }

    pub fn with_clip(mut self, clip: f64) -> Self {
        self.clip = Some(clip);
        self
    }

    pub fn name(&self) -> String {
        match self.kind {
            ProcessKind::Iid => "iid-normal".into(),
            ProcessKind::Ar1 { rho } => format!("ar1(rho={rho})"),
            ProcessKind::TwoStateChain { q } => format!("two-state(q={q})"),
            ProcessKind::MovingAverage { order } => format!("ma({order})"),
        }
    }

    /// Marginal law of the generated sequence.
    pub fn marginal(&self) -> crate::hoeffding::Marginal {
        match self.kind {
            ProcessKind::TwoStateChain { .. } => {
                crate::hoeffding::Marginal::Custom(vec![vec![0.0], vec![1.0]])
            }
            _ => crate::hoeffding::Marginal::StandardNormal { d: self.d },
        }
    }
}

/// Counter-based substream derivation from one master seed: the ChaCha
/// stream index encodes a domain tag in the top byte and a counter below,
/// so replications, expansion draws, and marginal-mean draws never collide.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    Replication = 0,
    Expansion = 1,
    BasisMeans = 2,
    Auxiliary = 3,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn stream(&self, domain: StreamDomain, index: u64) -> ChaCha8Rng {
        assert!(index < (1 << 56), "substream counter overflow");
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(((domain as u64) << 56) | index);
        rng
    }

    /// A derived 64-bit seed for APIs that take one.
    pub fn derived_seed(&self, domain: StreamDomain, index: u64) -> u64 {
        self.stream(domain, index).random()
    }
}

/// Generate a stationary path of length n, deterministic in the seed.
/// AR(1) starts from its stationary law, the chain from its uniform law.
pub fn generate_path(spec: &ProcessSpec, n: usize, seed: u64) -> Result<SamplePath> {
    if n == 0 {
        return Err(Error::invalid("path length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<f64> = Vec::with_capacity(n * spec.d);
    match spec.kind {
        ProcessKind::Iid => {
            for _ in 0..n * spec.d {
                data.push(rng.sample::<f64, _>(StandardNormal));
            }
        }
        ProcessKind::Ar1 { rho } => {
            let innovation_sd = (1.0 - rho * rho).sqrt();
            // coordinates evolve independently; generate column-wise then interleave
            let mut columns: Vec<Vec<f64>> = Vec::with_capacity(spec.d);
            for _ in 0..spec.d {
                let mut col = Vec::with_capacity(n);
                let mut x: f64 = rng.sample(StandardNormal);
                col.push(x);
                for _ in 1..n {
                    let z: f64 = rng.sample(StandardNormal);
                    x = rho * x + innovation_sd * z;
                    col.push(x);
                }
                columns.push(col);
            }
            for i in 0..n {
                for col in &columns {
                    data.push(col[i]);
                }
            }
        }
        ProcessKind::TwoStateChain { q } => {
            let mut state = if rng.random::<bool>() { 1.0 } else { 0.0 };
            data.push(state);
            for _ in 1..n {
                if rng.random::<f64>() < q {
                    state = 1.0 - state;
                }
                data.push(state);
            }
        }
        ProcessKind::MovingAverage { order } => {
            let scale = 1.0 / ((order + 1) as f64).sqrt();
            let mut window: std::collections::VecDeque<f64> = (0..=order)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            data.push(scale * window.iter().sum::<f64>());
            for _ in 1..n {
                window.pop_front();
                window.push_back(rng.sample::<f64, _>(StandardNormal));
                data.push(scale * window.iter().sum::<f64>());
            }
        }
    }
    let mut clipped = 0usize;
    if let Some(c) = spec.clip {
        for v in data.iter_mut() {
            if v.abs() > c {
                *v = v.clamp(-c, c);
                clipped += 1;
            }
        }
    }
    let mut path = SamplePath::new(data, spec.d, spec.name(), seed)?;
    path.clipped = clipped;
    Ok(path)
}

/// Exact lower bound on alpha(i) for the two-state chain: maximize
/// |P(A and B) - P(A) P(B)| over all events A, B measurable with respect to
/// `depth` coordinates on each side of a gap of length i, by full event
/// enumeration over the 2^(2^depth) x 2^(2^depth) event pairs.
pub fn alpha_lower_bound(spec: &ProcessSpec, gap: usize, depth: usize) -> Result<f64> {
    let q = match spec.kind {
        ProcessKind::TwoStateChain { q } => q,
        _ => {
            return Err(Error::Unsupported(
                "the enumeration oracle needs a finite-state chain".into(),
            ))
        }
    };
    if gap == 0 {
        return Err(Error::invalid("gap must be >= 1"));
    }
    if depth == 0 || depth > 3 {
        return Err(Error::invalid("depth must be in 1..=3 (cost guard)"));
    }
    let lambda = 1.0 - 2.0 * q;
    // transition matrix power across the gap, in closed form
    let cross = |a: usize, b: usize| -> f64 {
        let l = lambda.powi(gap as i32);
        if a == b {
            0.5 * (1.0 + l)
        } else {
            0.5 * (1.0 - l)
        }
    };
    let step = |a: usize, b: usize| -> f64 {
        if a == b {
            1.0 - q
        } else {
            q
        }
    };
    let configs = 1usize << depth;
    let bit = |cfg: usize, pos: usize| (cfg >> pos) & 1;
    // joint probability of a past block and a future block
    let mut joint = vec![vec![0.0f64; configs]; configs];
    for (past, row) in joint.iter_mut().enumerate() {
        let mut p_past = 0.5;
        for pos in 1..depth {
            p_past *= step(bit(past, pos - 1), bit(past, pos));
        }
        for (future, cell) in row.iter_mut().enumerate() {
            let mut p = p_past * cross(bit(past, depth - 1), bit(future, 0));
            for pos in 1..depth {
                p *= step(bit(future, pos - 1), bit(future, pos));
            }
            *cell = p;
        }
    }
    let marg_past: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let marg_future: Vec<f64> = (0..configs)
        .map(|b| joint.iter().map(|row| row[b]).sum())
        .collect();

    let events = 1usize << configs;
    // precompute, for each future event, the vector over past configs
    let mut best = 0.0f64;
    for b_mask in 0..events {
        let mut row_sum = vec![0.0f64; configs];
        let mut p_b = 0.0f64;
        for b in 0..configs {
            if b_mask & (1 << b) != 0 {
                p_b += marg_future[b];
                for a in 0..configs {
                    row_sum[a] += joint[a][b];
                }
            }
        }
        for a_mask in 0..events {
            let mut p_ab = 0.0f64;
            let mut p_a = 0.0f64;
            for a in 0..configs {
                if a_mask & (1 << a) != 0 {
                    p_ab += row_sum[a];
                    p_a += marg_past[a];
                }
            }
            let gap_value = (p_ab - p_a * p_b).abs();
            if gap_value > best {
                best = gap_value;
            }
        }
    }
    Ok(best)
}
