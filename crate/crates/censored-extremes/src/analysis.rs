//! Confronting Monte Carlo output with the limit laws: KS / TV /
//! chi-square fits, a method-of-moments kappa estimate, and the
//! cure-existence test based on the ratio law.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dist::CensoringSetup;
use crate::error::{Error, Result};
use crate::limits::{count_law_pmf, l_law_cdf, r_law_tail, success_prob};
use crate::numerics::roots;
use crate::sim::ReplicationResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Ks,
    Tv,
    ChiSquare,
}

impl std::fmt::Display for StatKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StatKind::Ks => write!(f, "ks"),
            StatKind::Tv => write!(f, "tv"),
            StatKind::ChiSquare => write!(f, "chi_square"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitReport {
    pub kind: StatKind,
    pub observed: f64,
    pub threshold: f64,
    pub sample_size: usize,
    pub pass: bool,
}

impl FitReport {
    fn new(kind: StatKind, observed: f64, threshold: f64, sample_size: usize) -> Self {
        Self { kind, observed, threshold, sample_size, pass: observed <= threshold }
    }
}

/// Null sampling bound plus an additive asymptotic-bias allowance.
pub fn ks_threshold(sample_size: usize, bias_allowance: f64) -> f64 {
    1.36 / (sample_size as f64).sqrt() + bias_allowance
}

/// Two-sided KS distance between sorted data and a possibly mixed cdf.
///
/// `cdf_left` must give the left limit `F(x-)`; it differs from `cdf` only
/// at atoms. Ties are grouped so the empirical cdf is evaluated at distinct
/// points only, which keeps atoms (e.g. the mass of `L` at zero) from
/// producing spurious discrepancies.
pub fn ks_distance_mixed(
    sorted: &[f64],
    cdf: impl Fn(f64) -> f64,
    cdf_left: impl Fn(f64) -> f64,
) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        d = d.max((j as f64 / n - cdf(x)).abs()).max((cdf_left(x) - i as f64 / n).abs());
        i = j;
    }
    d
}

/// Two-sided KS distance against a continuous cdf.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    ks_distance_mixed(sorted, &cdf, &cdf)
}

/// KS fit of the empirical normalized level stretch against the L-law cdf.
pub fn ks_against_l_law(results: &ReplicationResult, kappa: f64, threshold: f64) -> Result<FitReport> {
    let values = results.norm_l_values();
    ks_against_l_law_values(&values, kappa, threshold)
}

/// Same fit on raw normalized values (used for null-calibration runs).
pub fn ks_against_l_law_values(values: &[f64], kappa: f64, threshold: f64) -> Result<FitReport> {
    if values.len() < 100 {
        return Err(Error::InsufficientReplications { got: values.len(), need: 100 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d = ks_distance_mixed(
        &sorted,
        |x| l_law_cdf(kappa, x.max(0.0)).unwrap_or(f64::NAN),
        |x| if x <= 0.0 { 0.0 } else { l_law_cdf(kappa, x).unwrap_or(f64::NAN) },
    );
    Ok(FitReport::new(StatKind::Ks, d, threshold, sorted.len()))
}

/// Total-variation distance between the empirical exceedance-count pmf and
/// the geometric count law, truncated where the theoretical mass drops
/// below 1e-6.
pub fn fit_count_law(results: &ReplicationResult, kappa: f64, threshold: f64) -> Result<FitReport> {
    fit_count_law_values(&results.exceed_counts(), kappa, threshold)
}

pub fn fit_count_law_values(counts: &[usize], kappa: f64, threshold: f64) -> Result<FitReport> {
    if counts.len() < 1000 {
        return Err(Error::InsufficientReplications { got: counts.len(), need: 1000 });
    }
    if !(kappa > 0.0) || kappa.is_infinite() {
        return Err(Error::Domain(format!("count-law fit needs finite kappa > 0, got {kappa}")));
    }
    let m = counts.len() as f64;
    let mut tv = 0.0;
    let mut j = 0u64;
    loop {
        let p = count_law_pmf(kappa, j);
        if p < 1e-6 {
            break;
        }
        let emp = counts.iter().filter(|&&c| c as u64 == j).count() as f64 / m;
        tv += 0.5 * (emp - p).abs();
        j += 1;
    }
    Ok(FitReport::new(StatKind::Tv, tv, threshold, counts.len()))
}

/// Chi-square variant of the count-law fit; counts with `j >= 8` are pooled
/// into one cell to keep expected counts reasonable. Threshold is the
/// chi-square critical value at level `alpha`.
pub fn chi_square_count_law(results: &ReplicationResult, kappa: f64, alpha: f64) -> Result<FitReport> {
    let counts = results.exceed_counts();
    if counts.len() < 1000 {
        return Err(Error::InsufficientReplications { got: counts.len(), need: 1000 });
    }
    const POOL_AT: usize = 8;
    let m = counts.len() as f64;
    let mut observed = [0.0f64; POOL_AT + 1];
    for &c in &counts {
        observed[c.min(POOL_AT)] += 1.0;
    }
    let mut stat = 0.0;
    let mut tail_mass = 1.0;
    for (j, &obs) in observed.iter().enumerate().take(POOL_AT) {
        let p = count_law_pmf(kappa, j as u64);
        tail_mass -= p;
        stat += (obs - m * p).powi(2) / (m * p);
    }
    stat += (observed[POOL_AT] - m * tail_mass).powi(2) / (m * tail_mass);
    let dist = ChiSquared::new(POOL_AT as f64)
        .map_err(|e| Error::Domain(format!("chi-square setup: {e}")))?;
    let critical = dist.inverse_cdf(1.0 - alpha);
    Ok(FitReport::new(StatKind::ChiSquare, stat, critical, counts.len()))
}

/// KS fit of `n * p(M_u(n))` against the exponential limit with mean
/// `kappa / p_c`.
pub fn check_np_limit(
    results: &ReplicationResult,
    setup: &CensoringSetup,
    threshold: f64,
) -> Result<FitReport> {
    let kappa = setup.finite_kappa()?;
    if kappa <= 0.0 {
        return Err(Error::Domain("np-limit check needs kappa > 0".into()));
    }
    let n = results.n as f64;
    let mut values = Vec::with_capacity(results.stats.len());
    for st in &results.stats {
        if let Some(mu) = st.m_u {
            values.push(n * success_prob(setup, mu)?);
        }
    }
    if values.len() < 100 {
        return Err(Error::InsufficientReplications { got: values.len(), need: 100 });
    }
    values.sort_by(f64::total_cmp);
    let rate = setup.p_c / kappa;
    let d = ks_distance(&values, |x| -(-rate * x.max(0.0)).exp_m1());
    Ok(FitReport::new(StatKind::Ks, d, threshold, values.len()))
}

/// Method-of-moments kappa estimate: the mean exceedance count over
/// replications (the count law has mean kappa). With a single replication
/// this is just the observed count.
pub fn estimate_kappa(results: &ReplicationResult) -> f64 {
    let counts = results.exceed_counts();
    if counts.is_empty() {
        return f64::NAN;
    }
    counts.iter().sum::<usize>() as f64 / counts.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CureTestOutcome {
    Reject,
    NoReject,
    /// The ratio-law tail never crosses `alpha` from above anywhere in
    /// (0,1): no critical value achieves size `alpha`.
    CannotRejectAtLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CureTestResult {
    pub kappa_hat: f64,
    pub observed_r: f64,
    pub alpha: f64,
    pub critical_value: Option<f64>,
    pub outcome: CureTestOutcome,
    pub reject: bool,
}

/// Test of H0: kappa = 0 (no cure proportion) against large observed
/// level-stretch ratios `R = (M - M_u)/M`.
///
/// Under H0 the ratio law is degenerate at zero, so any positive `R`
/// rejects. For positive `kappa_hat` the critical value solves
/// `r_law_tail(kappa_hat, c) = alpha` when a solution exists; when the
/// tail sits above `alpha` on all of (0,1) the requested level is
/// unattainable and the test reports that explicitly.
pub fn cure_test(observed_r: f64, alpha: f64, kappa_hat: f64) -> Result<CureTestResult> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::Domain(format!("alpha out of (0, 0.5]: {alpha}")));
    }
    if !(kappa_hat >= 0.0) {
        return Err(Error::Domain(format!("kappa_hat must be >= 0: {kappa_hat}")));
    }
    if !(0.0..1.0).contains(&observed_r) {
        return Err(Error::Domain(format!("observed R out of [0,1): {observed_r}")));
    }
    // R = 0 never rejects, whatever the level.
    if observed_r == 0.0 {
        return Ok(CureTestResult {
            kappa_hat,
            observed_r,
            alpha,
            critical_value: None,
            outcome: CureTestOutcome::NoReject,
            reject: false,
        });
    }
    if kappa_hat == 0.0 {
        // P[R = 0] = 1 under the estimated law: any positive R rejects.
        return Ok(CureTestResult {
            kappa_hat,
            observed_r,
            alpha,
            critical_value: Some(0.0),
            outcome: CureTestOutcome::Reject,
            reject: true,
        });
    }
    let lo = 1e-6;
    let hi = 1.0 - 1e-6;
    let f = |c: f64| r_law_tail(kappa_hat, c).unwrap_or(f64::NAN) - alpha;
    let flo = f(lo);
    let fhi = f(hi);
    let critical = if flo.signum() != fhi.signum() {
        Some(roots::bisect(f, lo, hi, 1e-10)?)
    } else if flo > 0.0 && fhi > 0.0 {
        // Tail exceeds alpha everywhere: size alpha is unattainable.
        return Ok(CureTestResult {
            kappa_hat,
            observed_r,
            alpha,
            critical_value: None,
            outcome: CureTestOutcome::CannotRejectAtLevel,
            reject: false,
        });
    } else {
        // Tail below alpha everywhere: rejecting for any positive R keeps
        // the size under alpha.
        Some(0.0)
    };
    let c = critical.expect("critical value set on this branch");
    let reject = observed_r > c;
    Ok(CureTestResult {
        kappa_hat,
        observed_r,
        alpha,
        critical_value: critical,
        outcome: if reject { CureTestOutcome::Reject } else { CureTestOutcome::NoReject },
        reject,
    })
}
