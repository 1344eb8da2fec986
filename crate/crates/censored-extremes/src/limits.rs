//! Norming constants and limit laws for the extremes of censored samples:
//! the level-stretch law L, the ratio law R, the geometric exceedance-count
//! law and its Poisson-mixture form, plus numerical checks of the
//! tail-asymptotics and partial-converse results.

use serde::Serialize;

use crate::dist::CensoringSetup;
use crate::error::{Error, Result};
use crate::numerics::{quad, roots};

/// Centering `b_n` (solving `n * H-bar(b_n) = 1`) and scale `a_n = h(b_n)`
/// for the maximum of `n` observed times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormingConstants {
    pub n: u64,
    pub b: f64,
    pub a: f64,
}

/// Solve `H-bar(b) = 1/n` on the monotone product tail and set `a = h(b)`.
pub fn norming_constants(setup: &CensoringSetup, n: u64) -> Result<NormingConstants> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    setup.require_proper()?;
    let target = -(n as f64).ln();
    let x0 = setup.x0();
    if setup.observed_ln_tail(x0) < target {
        return Err(Error::Bracket(format!(
            "H-bar(x0) = {:e} < 1/n = {:e}: n too small for the representation interval",
            setup.observed_ln_tail(x0).exp(),
            1.0 / n as f64
        )));
    }
    // ln H-bar is strictly decreasing; bracket upward from x0 then bisect.
    let b = roots::bisect_with_upward_bracket(|x| setup.observed_ln_tail(x) - target, x0, 1e-12)?;
    let a = setup.observed_auxiliary(b);
    Ok(NormingConstants { n, b, a })
}

/// Cdf of the level-stretch limit `L`: `1/(1 + kappa e^{-x})` for `x >= 0`,
/// with an atom of `1/(1+kappa)` at zero.
pub fn l_law_cdf(kappa: f64, x: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if x < 0.0 {
        return Err(Error::Domain(format!("L is a.s. >= 0, got x = {x}")));
    }
    Ok(1.0 / (1.0 + kappa * (-x).exp()))
}

/// Tail of `L`: `kappa / (e^x + kappa)`.
pub fn l_law_tail(kappa: f64, x: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if x < 0.0 {
        return Err(Error::Domain(format!("L is a.s. >= 0, got x = {x}")));
    }
    Ok(kappa / (x.exp() + kappa))
}

/// Quantile of the L law; returns 0 inside the atom.
pub fn l_law_quantile(kappa: f64, u: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("probability out of [0,1): {u}")));
    }
    if u <= 1.0 / (1.0 + kappa) {
        return Ok(0.0);
    }
    // 1/(1 + kappa e^{-x}) = u  =>  x = ln(u kappa / (1 - u))
    Ok((u * kappa / (1.0 - u)).ln())
}

const R_LAW_TOL: f64 = 1e-8;

/// Tail of the ratio law `R` at `x` in (0, 1):
///
/// `P[R > x] = (1-x)/(1+kappa) * int_0^inf (1 - e^{-kappa u/(1+kappa)})
///             e^{-u^{1-x}/(1+kappa)} u^{-x} du`.
///
/// Evaluated after the substitution `w = u^{1-x}`, which removes the
/// endpoint singularity:
/// `P[R > x] = 1/(1+kappa) * int_0^inf (1 - e^{-kappa w^{1/(1-x)}/(1+kappa)})
///             e^{-w/(1+kappa)} dw`.
pub fn r_law_tail(kappa: f64, x: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("ratio argument out of (0,1): {x}")));
    }
    if kappa == 0.0 {
        return Ok(0.0); // R degenerate at 0
    }
    let c = 1.0 + kappa;
    let pow = 1.0 / (1.0 - x);
    let integrand = move |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let outer = (-w / c).exp();
        if outer == 0.0 {
            return 0.0;
        }
        let inner = -kappa * w.powf(pow) / c;
        (-inner.exp_m1()) * outer
    };
    let r = quad::integrate_from(integrand, 0.0, R_LAW_TOL, 0.0)?;
    Ok(r.value / c)
}

/// Pmf of the geometric exceedance-count law with success probability
/// `p_kappa = kappa/(1+kappa)` and mean `kappa`.
pub fn count_law_pmf(kappa: f64, j: u64) -> f64 {
    let p = kappa / (1.0 + kappa);
    (1.0 - p) * p.powi(j as i32)
}

/// Pmf of the Poisson(kappa E) mixture with E unit exponential, by
/// quadrature: `int_0^inf e^{-kappa e} (kappa e)^j / j! e^{-e} de`.
/// Agrees with `count_law_pmf` by the generating-function identity.
pub fn poisson_mixture_pmf(kappa: f64, j: u64) -> Result<f64> {
    check_kappa(kappa)?;
    if kappa == 0.0 {
        return Ok(if j == 0 { 1.0 } else { 0.0 });
    }
    let jf = j as f64;
    let ln_jfact: f64 = (1..=j).map(|m| (m as f64).ln()).sum();
    let integrand = move |e: f64| {
        if e <= 0.0 {
            return if j == 0 { (-e).exp() * (-kappa * e).exp() } else { 0.0 };
        }
        (jf * (kappa * e).ln() - ln_jfact - (kappa + 1.0) * e).exp()
    };
    let r = quad::integrate_from(integrand, 0.0, 1e-12, 1e-12)?;
    Ok(r.value)
}

/// Gumbel extremal-process marginal at time `t`: `Lambda^t(x) = exp{-t e^{-x}}`.
pub fn gumbel_marginal_cdf(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time index must be positive: {t}")));
    }
    Ok((-t * (-x).exp()).exp())
}

/// `p(t) = int_t^inf F-bar dG / int_0^inf F-bar dG`, the tail of the
/// censored-lifetime distribution.
pub fn success_prob(setup: &CensoringSetup, t: f64) -> Result<f64> {
    setup.require_proper()?;
    if t <= setup.lifetime.support_lower().max(setup.censoring.support_lower()) {
        return Ok(1.0);
    }
    if t > setup.x0() {
        // Scaled form: the integrand relative to H-bar(t) stays O(1) however
        // deep in the tail t sits.
        let ratio = censored_ratio(setup, t)?;
        let ln_h = setup.observed_ln_tail(t);
        return Ok((ratio * ln_h.exp() / setup.p_c).min(1.0));
    }
    let num = quad::integrate_from(
        |s| setup.lifetime.tail_unchecked(s) * setup.censoring.density_unchecked(s),
        t,
        1e-12,
        1e-10,
    )?;
    Ok((num.value / setup.p_c).min(1.0))
}

// int_x^inf G-bar dF / H-bar(x), computed underflow-free as
// int_0^inf exp(ln H-bar(x+u) - ln H-bar(x)) / f_aux(x+u) du.
fn uncensored_ratio(setup: &CensoringSetup, x: f64) -> Result<f64> {
    let ln_hx = setup.observed_ln_tail(x);
    let r = quad::integrate_from(
        |u| {
            let s = x + u;
            let d = setup.observed_ln_tail(s) - ln_hx;
            if d < -745.0 {
                0.0
            } else {
                d.exp() / setup.lifetime.auxiliary_unchecked(s)
            }
        },
        0.0,
        1e-11,
        1e-10,
    )?;
    Ok(r.value)
}

// Same with the roles of F and G interchanged.
fn censored_ratio(setup: &CensoringSetup, x: f64) -> Result<f64> {
    let ln_hx = setup.observed_ln_tail(x);
    let r = quad::integrate_from(
        |u| {
            let s = x + u;
            let d = setup.observed_ln_tail(s) - ln_hx;
            if d < -745.0 {
                0.0
            } else {
                d.exp() / setup.censoring.auxiliary_unchecked(s)
            }
        },
        0.0,
        1e-11,
        1e-10,
    )?;
    Ok(r.value)
}

/// Default tail grid: the points where `H-bar` equals 1e-2 .. 1e-8, so the
/// checks sit at comparable depths across families.
pub fn default_tail_grid(setup: &CensoringSetup) -> Result<Vec<f64>> {
    let x0 = setup.x0();
    [1e-2f64, 1e-4, 1e-6, 1e-8]
        .iter()
        .map(|&level| {
            let target = level.ln();
            roots::bisect_with_upward_bracket(|x| setup.observed_ln_tail(x) - target, x0, 1e-12)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRatioRow {
    pub x: f64,
    pub uncensored_ratio: f64,
    pub censored_ratio: f64,
}

/// Convergence report for the tail-asymptotics check: sequences of
/// discrepancies against the limits `1/(1+kappa)` and `kappa/(1+kappa)`
/// plus monotone-trend flags. No p-values at this layer.
#[derive(Debug, Clone, Serialize)]
pub struct TailAsymptoticsReport {
    pub kappa: f64,
    pub rows: Vec<TailRatioRow>,
    pub uncensored_target: f64,
    pub censored_target: f64,
    /// |uncensored_ratio - target| non-increasing along the grid.
    pub uncensored_trend_ok: bool,
    /// For kappa > 0: |censored_ratio - target| non-increasing;
    /// for kappa = 0: censored_ratio itself decreasing toward 0.
    pub censored_trend_ok: bool,
}

/// Ratios `int_x^inf G-bar dF / H-bar(x)` (limit `1/(1+kappa)`) and
/// `int_x^inf F-bar dG / H-bar(x)` (limit `kappa/(1+kappa)`, or 0 when
/// `kappa = 0`) along an increasing grid.
pub fn check_tail_asymptotics(setup: &CensoringSetup, x_grid: &[f64]) -> Result<TailAsymptoticsReport> {
    setup.require_proper()?;
    let kappa = setup.finite_kappa()?;
    let mut rows = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        rows.push(TailRatioRow {
            x,
            uncensored_ratio: uncensored_ratio(setup, x)?,
            censored_ratio: censored_ratio(setup, x)?,
        });
    }
    let u_target = 1.0 / (1.0 + kappa);
    let c_target = kappa / (1.0 + kappa);
    let non_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let u_dev: Vec<f64> = rows.iter().map(|r| (r.uncensored_ratio - u_target).abs()).collect();
    let censored_trend_ok = if kappa == 0.0 {
        let c: Vec<f64> = rows.iter().map(|r| r.censored_ratio).collect();
        non_increasing(&c)
    } else {
        let c_dev: Vec<f64> = rows.iter().map(|r| (r.censored_ratio - c_target).abs()).collect();
        non_increasing(&c_dev)
    };
    Ok(TailAsymptoticsReport {
        kappa,
        rows,
        uncensored_target: u_target,
        censored_target: c_target,
        uncensored_trend_ok: non_increasing(&u_dev),
        censored_trend_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverseRow {
    pub x: f64,
    /// Estimate of `k` from the tail-ratio integral at this point.
    pub k_hat: f64,
    /// |(1-k)/k - f(x)/g(x)| at this point.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverseReport {
    pub rows: Vec<ConverseRow>,
    /// Discrepancy at the deepest grid point.
    pub final_discrepancy: f64,
    pub shrinking: bool,
}

/// Partial-converse check: estimate `k` from the integral ratio and compare
/// `(1-k)/k` with the auxiliary-function ratio `f/g` along the grid.
pub fn check_converse(setup: &CensoringSetup, x_grid: &[f64]) -> Result<ConverseReport> {
    setup.require_proper()?;
    let kappa = setup.finite_kappa()?;
    if kappa <= 0.0 {
        return Err(Error::Domain("partial converse needs 0 < kappa < infinity".into()));
    }
    let mut rows = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let k_hat = uncensored_ratio(setup, x)?;
        let fg = setup.lifetime.auxiliary_unchecked(x) / setup.censoring.auxiliary_unchecked(x);
        rows.push(ConverseRow { x, k_hat, discrepancy: ((1.0 - k_hat) / k_hat - fg).abs() });
    }
    let final_discrepancy = rows.last().map(|r| r.discrepancy).unwrap_or(f64::NAN);
    let shrinking = rows.windows(2).all(|w| w[1].discrepancy <= w[0].discrepancy + 1e-12);
    Ok(ConverseReport { rows, final_discrepancy, shrinking })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularVariationRow {
    pub t: f64,
    /// `U(tx)/U(t)` with `U(t) = 1 / G-bar(F-bar^{-1}(1/t))`; target `x^kappa`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularVariationReport {
    pub kappa: f64,
    pub x: f64,
    pub target: f64,
    pub rows: Vec<RegularVariationRow>,
    /// Trend of F-bar/G-bar along the grid: +1 diverging, -1 vanishing,
    /// 0 flat -- the kappa-vs-1 dominance taxonomy.
    pub tail_dominance_trend: i8,
}

/// Regular-variation check for `U = 1/G-bar o F-bar^{-1}` with index kappa.
pub fn check_regular_variation_u(
    setup: &CensoringSetup,
    t_grid: &[f64],
    x: f64,
) -> Result<RegularVariationReport> {
    let kappa = setup.finite_kappa()?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("scale factor must be positive: {x}")));
    }
    let ln_u = |t: f64| -> Result<f64> {
        if !(t > 1.0) {
            return Err(Error::Domain(format!("U needs t > 1, got {t}")));
        }
        let q = setup.lifetime.quantile_from_tail(1.0 / t)?;
        Ok(-setup.censoring.ln_tail_unchecked(q))
    };
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut dominance = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let ratio = (ln_u(t * x)? - ln_u(t)?).exp();
        rows.push(RegularVariationRow { t, ratio });
        let q = setup.lifetime.quantile_from_tail(1.0 / t)?;
        dominance.push(setup.lifetime.ln_tail_unchecked(q) - setup.censoring.ln_tail_unchecked(q));
    }
    let trend = if dominance.windows(2).all(|w| w[1] > w[0]) {
        1
    } else if dominance.windows(2).all(|w| w[1] < w[0]) {
        -1
    } else {
        0
    };
    Ok(RegularVariationReport { kappa, x, target: x.powf(kappa), rows, tail_dominance_trend: trend })
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0) || kappa.is_infinite() {
        return Err(Error::InfiniteKappa(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    Ok(())
}
