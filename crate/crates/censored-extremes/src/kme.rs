//! Kaplan-Meier product-limit estimator and the terminal level stretch.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::SurvivalSample;

/// Step-function table of the product-limit estimator of the survivor
/// function, plus the terminal plateau diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct KmeCurve {
    /// Distinct uncensored times, increasing.
    pub jump_times: Vec<f64>,
    /// Survivor value just after each jump.
    pub survivor_values: Vec<f64>,
    /// Survivor value at the largest observation.
    pub plateau_level: f64,
    /// `M - M_u`, length of the terminal flat segment (equals `M` when no
    /// observation is uncensored).
    pub level_stretch: f64,
}

/// Standard product-limit fit. At each distinct uncensored time with `d`
/// deaths out of `r` at risk the survivor is multiplied by `1 - d/r`;
/// censored times only shrink the risk set. Ties at equal times are
/// processed uncensored-first.
pub fn fit_kme(sample: &SurvivalSample) -> Result<KmeCurve> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::Domain("empty sample".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // false < true puts uncensored first within a tied time
    order.sort_by(|&i, &j| {
        sample.times[i]
            .total_cmp(&sample.times[j])
            .then(sample.censored[i].cmp(&sample.censored[j]))
    });

    let mut jump_times = Vec::new();
    let mut survivor_values = Vec::new();
    let mut survivor = 1.0f64;
    let mut at_risk = n;
    let mut idx = 0;
    while idx < n {
        let t = sample.times[order[idx]];
        let mut deaths = 0usize;
        let mut removed = 0usize;
        while idx < n && sample.times[order[idx]] == t {
            if sample.censored[order[idx]] {
                removed += 1;
            } else {
                deaths += 1;
            }
            idx += 1;
        }
        if deaths > 0 {
            survivor *= 1.0 - deaths as f64 / at_risk as f64;
            jump_times.push(t);
            survivor_values.push(survivor);
        }
        at_risk -= deaths + removed;
    }

    let m = sample.times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let level_stretch = match jump_times.last() {
        Some(&m_u) => m - m_u,
        None => m,
    };
    Ok(KmeCurve { jump_times, survivor_values, plateau_level: survivor, level_stretch })
}

/// Terminal level stretch of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelStretch {
    /// `M - M_u` (equals `M` when there is no uncensored observation).
    pub length: f64,
    /// Censored observations strictly exceeding `M_u`.
    pub exceed_count: usize,
    /// Set when the sample has no uncensored observation at all.
    pub no_uncensored: bool,
}

pub fn level_stretch(sample: &SurvivalSample) -> Result<LevelStretch> {
    if sample.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let stats = crate::sim::extreme_stats(sample, None);
    Ok(LevelStretch {
        length: match stats.m_u {
            Some(mu) => stats.m - mu,
            None => stats.m,
        },
        exceed_count: stats.n_c_exceed,
        no_uncensored: stats.m_u.is_none(),
    })
}
