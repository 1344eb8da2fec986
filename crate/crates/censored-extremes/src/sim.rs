//! Replicated Monte Carlo engine for the i.i.d. right-censoring model:
//! sampling, decoupage splitting and extreme-statistic extraction.
//!
//! Replications run in parallel but are seeded per-replication with a
//! counter-based scheme, so results are identical at any thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::CensoringSetup;
use crate::error::Result;
use crate::limits::{norming_constants, NormingConstants};

/// Observed pairs `(min(T*, U), censor indicator)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSample {
    pub times: Vec<f64>,
    /// `true` iff the lifetime exceeded the censoring time.
    pub censored: Vec<bool>,
}

impl SurvivalSample {
    pub fn new(times: Vec<f64>, censored: Vec<bool>) -> Result<Self> {
        if times.len() != censored.len() {
            return Err(crate::error::Error::Parse(format!(
                "times and censor indicators differ in length: {} vs {}",
                times.len(),
                censored.len()
            )));
        }
        Ok(Self { times, censored })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Per-replication extreme statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremeStats {
    /// Largest uncensored observation, absent when all are censored.
    pub m_u: Option<f64>,
    /// Largest censored observation, absent when none are censored.
    pub m_c: Option<f64>,
    /// Largest observation overall.
    pub m: f64,
    pub n_u: usize,
    pub n_c: usize,
    /// Censored observations strictly exceeding `m_u` (all of them when
    /// `m_u` is absent).
    pub n_c_exceed: usize,
    /// `(m - m_u) / a_n`, present when norming and `m_u` are both present.
    pub norm_l: Option<f64>,
    /// `(m - m_u) / m`, present when `m_u` is present.
    pub norm_r: Option<f64>,
}

/// Draw one sample of size `n`: immune with probability `1 - p` (lifetime
/// infinite, always censored), otherwise lifetime from `F`; censoring time
/// from `G` independently. Ties `T* = U` count as uncensored.
pub fn draw_sample<R: Rng + ?Sized>(setup: &CensoringSetup, n: usize, rng: &mut R) -> SurvivalSample {
    let mut times = Vec::with_capacity(n);
    let mut censored = Vec::with_capacity(n);
    let p = setup.cure_fraction;
    for _ in 0..n {
        let lifetime = if p >= 1.0 || rng.gen::<f64>() < p {
            setup.lifetime.sample(rng)
        } else {
            f64::INFINITY
        };
        let u = setup.censoring.sample(rng);
        if lifetime <= u {
            times.push(lifetime);
            censored.push(false);
        } else {
            times.push(u);
            censored.push(true);
        }
    }
    SurvivalSample { times, censored }
}

/// Order-preserving partition into (uncensored, censored) subsequences.
pub fn decoupage_split(sample: &SurvivalSample) -> (Vec<f64>, Vec<f64>) {
    let mut uncensored = Vec::new();
    let mut censored = Vec::new();
    for (&t, &c) in sample.times.iter().zip(&sample.censored) {
        if c {
            censored.push(t);
        } else {
            uncensored.push(t);
        }
    }
    (uncensored, censored)
}

/// All extreme statistics of one sample, normalized when norming constants
/// are supplied.
pub fn extreme_stats(sample: &SurvivalSample, norming: Option<&NormingConstants>) -> ExtremeStats {
    let mut m_u: Option<f64> = None;
    let mut m_c: Option<f64> = None;
    for (&t, &c) in sample.times.iter().zip(&sample.censored) {
        let slot = if c { &mut m_c } else { &mut m_u };
        *slot = Some(slot.map_or(t, |cur: f64| cur.max(t)));
    }
    let m = match (m_u, m_c) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => f64::NAN,
    };
    let n_c = sample.censored.iter().filter(|&&c| c).count();
    let n_u = sample.len() - n_c;
    let n_c_exceed = match m_u {
        Some(mu) => sample
            .times
            .iter()
            .zip(&sample.censored)
            .filter(|&(&t, &c)| c && t > mu)
            .count(),
        None => n_c,
    };
    let norm_l = match (m_u, norming) {
        (Some(mu), Some(nc)) => Some((m - mu) / nc.a),
        _ => None,
    };
    let norm_r = m_u.map(|mu| (m - mu) / m);
    ExtremeStats { m_u, m_c, m, n_u, n_c, n_c_exceed, norm_l, norm_r }
}

/// Result of a replicated run; deterministic given `(setup, n, rep_count,
/// master_seed)` regardless of execution parallelism.
#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub setup: CensoringSetup,
    pub n: usize,
    pub rep_count: usize,
    pub master_seed: u64,
    pub norming: Option<NormingConstants>,
    pub stats: Vec<ExtremeStats>,
    /// Replications with no uncensored observation; these carry no L/R value.
    pub no_uncensored_count: usize,
}

impl ReplicationResult {
    /// Normalized level stretches over replications that have one.
    pub fn norm_l_values(&self) -> Vec<f64> {
        self.stats.iter().filter_map(|s| s.norm_l).collect()
    }

    pub fn norm_r_values(&self) -> Vec<f64> {
        self.stats.iter().filter_map(|s| s.norm_r).collect()
    }

    /// Exceedance counts over replications with an uncensored observation.
    pub fn exceed_counts(&self) -> Vec<usize> {
        self.stats
            .iter()
            .filter(|s| s.m_u.is_some())
            .map(|s| s.n_c_exceed)
            .collect()
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for one replication: the 256-bit ChaCha key is expanded by
/// splitmix64 from `(master_seed, rep_index)`.
pub fn replication_rng(master_seed: u64, rep_index: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ rep_index.wrapping_mul(GOLDEN).wrapping_add(0x1234_5678_9abc_def0);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Run `rep_count` independent replications of size `n`. Norming constants
/// are computed once and shared when the setup is proper with finite kappa.
pub fn run_replications(
    setup: &CensoringSetup,
    n: usize,
    rep_count: usize,
    master_seed: u64,
) -> Result<ReplicationResult> {
    if rep_count < 1 {
        return Err(crate::error::Error::Domain("rep_count must be >= 1".into()));
    }
    let norming = if setup.cure_fraction >= 1.0 && setup.kappa.finite().is_some() {
        Some(norming_constants(setup, n as u64)?)
    } else {
        None
    };
    let stats: Vec<ExtremeStats> = (0..rep_count as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(master_seed, rep);
            let sample = draw_sample(setup, n, &mut rng);
            extreme_stats(&sample, norming.as_ref())
        })
        .collect();
    let no_uncensored_count = stats.iter().filter(|s| s.m_u.is_none()).count();
    Ok(ReplicationResult {
        setup: *setup,
        n,
        rep_count,
        master_seed,
        norming,
        stats,
        no_uncensored_count,
    })
}
