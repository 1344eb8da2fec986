//! Lifetime and censoring distribution families with closed-form tails,
//! densities, reciprocal hazards (auxiliary functions) and samplers, plus
//! the balance parameter kappa of a lifetime/censoring pair.
//!
//! All four families admit a representation
//! `tail(x) = k1 * exp{ -int_{x0}^x du / aux(u) }` on `x > x0` with
//! `aux' -> 0`, which places them in the Gumbel domain of attraction.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::normal::{ln_norm_tail, mills, norm_pdf, norm_tail, norm_tail_inv};
use crate::numerics::quad;

/// Absolute tolerance for the `p_u` quadrature.
const PU_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
    LogNormal { sigma: f64 },
    NormalTail { sigma: f64 },
}

/// A distribution family together with the lower bound `x0` of the
/// interval on which its von Mises representation is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionModel {
    pub family: Family,
    pub x0: f64,
}

impl DistributionModel {
    pub fn new(family: Family) -> Result<Self> {
        let ok = match family {
            Family::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Family::Weibull { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
            Family::LogNormal { sigma } | Family::NormalTail { sigma } => {
                sigma > 0.0 && sigma.is_finite()
            }
        };
        if !ok {
            return Err(Error::Parse(format!("parameters out of range: {family:?}")));
        }
        // Smallest x0 keeping the auxiliary function positive and smooth.
        let x0 = match family {
            Family::Exponential { .. } => 0.0,
            _ => 1.0,
        };
        Ok(Self { family, x0 })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Weibull { shape, scale })
    }

    pub fn lognormal(sigma: f64) -> Result<Self> {
        Self::new(Family::LogNormal { sigma })
    }

    pub fn normal_tail(sigma: f64) -> Result<Self> {
        Self::new(Family::NormalTail { sigma })
    }

    /// Lower end of the support (`-inf` for the normal-tail family).
    pub fn support_lower(&self) -> f64 {
        match self.family {
            Family::NormalTail { .. } => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    fn check_support(&self, x: f64) -> Result<()> {
        if x.is_nan() || x < self.support_lower() {
            return Err(Error::Domain(format!("{x} outside support of {self}")));
        }
        Ok(())
    }

    /// Survival function `P[X > x]`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(self.tail_unchecked(x))
    }

    pub(crate) fn tail_unchecked(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { rate } => (-rate * x).exp(),
            Family::Weibull { shape, scale } => (-scale * x.powf(shape)).exp(),
            Family::LogNormal { sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    norm_tail(x.ln() / sigma)
                }
            }
            Family::NormalTail { sigma } => norm_tail(x / sigma),
        }
    }

    /// `ln tail(x)`, exact far past the underflow point of `tail`.
    pub fn ln_tail(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(self.ln_tail_unchecked(x))
    }

    pub(crate) fn ln_tail_unchecked(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { rate } => -rate * x,
            Family::Weibull { shape, scale } => -scale * x.powf(shape),
            Family::LogNormal { sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ln_norm_tail(x.ln() / sigma)
                }
            }
            Family::NormalTail { sigma } => ln_norm_tail(x / sigma),
        }
    }

    /// Density `-d/dx tail(x)`.
    pub fn density(&self, x: f64) -> Result<f64> {
        self.check_support(x)?;
        Ok(self.density_unchecked(x))
    }

    pub(crate) fn density_unchecked(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { rate } => rate * (-rate * x).exp(),
            Family::Weibull { shape, scale } => {
                scale * shape * x.powf(shape - 1.0) * (-scale * x.powf(shape)).exp()
            }
            Family::LogNormal { sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_pdf(x.ln() / sigma) / (x * sigma)
                }
            }
            Family::NormalTail { sigma } => norm_pdf(x / sigma) / sigma,
        }
    }

    /// Auxiliary function of the von Mises representation: `tail / density`,
    /// the reciprocal hazard. Defined for `x > x0`.
    pub fn auxiliary(&self, x: f64) -> Result<f64> {
        if !(x > self.x0) {
            return Err(Error::Domain(format!(
                "auxiliary needs x > x0 = {}, got {x}",
                self.x0
            )));
        }
        Ok(self.auxiliary_unchecked(x))
    }

    pub(crate) fn auxiliary_unchecked(&self, x: f64) -> f64 {
        match self.family {
            Family::Exponential { rate } => 1.0 / rate,
            Family::Weibull { shape, scale } => x.powf(1.0 - shape) / (scale * shape),
            Family::LogNormal { sigma } => x * sigma * mills(x.ln() / sigma),
            Family::NormalTail { sigma } => sigma * mills(x / sigma),
        }
    }

    /// Inverse of the tail: the `x` with `tail(x) = q`.
    pub fn quantile_from_tail(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("tail probability out of (0,1): {q}")));
        }
        Ok(match self.family {
            Family::Exponential { rate } => -q.ln() / rate,
            Family::Weibull { shape, scale } => (-q.ln() / scale).powf(1.0 / shape),
            Family::LogNormal { sigma } => (sigma * norm_tail_inv(q)).exp(),
            Family::NormalTail { sigma } => sigma * norm_tail_inv(q),
        })
    }

    /// One draw from the distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Exponential { rate } => {
                let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                -u.ln() / rate
            }
            Family::Weibull { shape, scale } => {
                let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                (-u.ln() / scale).powf(1.0 / shape)
            }
            Family::LogNormal { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (sigma * z).exp()
            }
            Family::NormalTail { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma * z
            }
        }
    }

    /// Parse a config string such as `exp(rate=1.0)`,
    /// `weibull(shape=2,scale=1)`, `lognormal(sigma=1)`, `normaltail(sigma=1)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Parse(format!("missing '(' in family spec `{s}`")))?;
        if !s.ends_with(')') {
            return Err(Error::Parse(format!("missing ')' in family spec `{s}`")));
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let body = &s[open + 1..s.len() - 1];
        let mut kv = std::collections::BTreeMap::new();
        for part in body.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
            let val: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numeric value `{}` in `{s}`", v.trim())))?;
            kv.insert(k.trim().to_string(), val);
        }
        let mut take = |key: &str| {
            kv.remove(key)
                .ok_or_else(|| Error::Parse(format!("missing parameter `{key}` in `{s}`")))
        };
        let model = match name.as_str() {
            "exp" | "exponential" => Self::exponential(take("rate")?)?,
            "weibull" => Self::weibull(take("shape")?, take("scale")?)?,
            "lognormal" => Self::lognormal(take("sigma")?)?,
            "normaltail" => Self::normal_tail(take("sigma")?)?,
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        };
        if let Some(extra) = kv.keys().next() {
            return Err(Error::Parse(format!("unknown parameter `{extra}` in `{s}`")));
        }
        Ok(model)
    }
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Exponential { rate } => write!(f, "exp(rate={rate})"),
            Family::Weibull { shape, scale } => write!(f, "weibull(shape={shape},scale={scale})"),
            Family::LogNormal { sigma } => write!(f, "lognormal(sigma={sigma})"),
            Family::NormalTail { sigma } => write!(f, "normaltail(sigma={sigma})"),
        }
    }
}

/// Balance parameter: the limit of `aux_F / aux_G`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kappa {
    Finite(f64),
    Infinite,
}

impl Kappa {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Kappa::Finite(k) => Some(*k),
            Kappa::Infinite => None,
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Finite(k) => write!(f, "{k}"),
            Kappa::Infinite => write!(f, "inf"),
        }
    }
}

// Exponential(rate) is Weibull(shape=1, scale=rate) for the kappa rules.
fn as_weibull(family: Family) -> Option<(f64, f64)> {
    match family {
        Family::Exponential { rate } => Some((1.0, rate)),
        Family::Weibull { shape, scale } => Some((shape, scale)),
        _ => None,
    }
}

/// Analytic balance parameter of a lifetime/censoring pair.
///
/// Refuses combinations with no analytic limit of `aux_F / aux_G`; a wrong
/// kappa silently corrupts every downstream law.
pub fn kappa_of(lifetime: &DistributionModel, censoring: &DistributionModel) -> Result<Kappa> {
    if let (Some((alpha, lambda)), Some((beta, mu))) =
        (as_weibull(lifetime.family), as_weibull(censoring.family))
    {
        return Ok(if beta < alpha {
            Kappa::Finite(0.0)
        } else if beta > alpha {
            Kappa::Infinite
        } else {
            Kappa::Finite(mu / lambda)
        });
    }
    match (lifetime.family, censoring.family) {
        (Family::LogNormal { sigma: sf }, Family::LogNormal { sigma: sg }) => {
            Ok(Kappa::Finite(sf * sf / (sg * sg)))
        }
        (Family::NormalTail { sigma: sf }, Family::NormalTail { sigma: sg }) => {
            Ok(Kappa::Finite(sf / sg))
        }
        // Weibull lifetime with lognormal censoring: aux_F/aux_G ~ log(x)/x^alpha -> 0.
        (Family::Weibull { .. } | Family::Exponential { .. }, Family::LogNormal { .. }) => {
            Ok(Kappa::Finite(0.0))
        }
        _ => Err(Error::UnsupportedPair(format!("{lifetime} / {censoring}"))),
    }
}

/// Lifetime model `F`, censoring model `G`, cure fraction `p`, and the
/// derived quantities kappa, `p_u`, `p_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringSetup {
    pub lifetime: DistributionModel,
    pub censoring: DistributionModel,
    pub cure_fraction: f64,
    pub kappa: Kappa,
    pub p_u: f64,
    pub p_c: f64,
}

impl CensoringSetup {
    /// Build a setup; `p` is the susceptible fraction in [0, 1] (`p = 0`
    /// means everyone is immune and every observation is censored).
    pub fn new(lifetime: DistributionModel, censoring: DistributionModel, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parse(format!("cure fraction p out of [0,1]: {p}")));
        }
        let kappa = kappa_of(&lifetime, &censoring)?;
        // p_u, p_c conditional on being susceptible; unconditionally an
        // observation is uncensored with probability p * p_u.
        let (p_u, p_c) = event_probabilities(&lifetime, &censoring)?;
        Ok(Self { lifetime, censoring, cure_fraction: p, kappa, p_u, p_c })
    }

    pub fn proper(lifetime: DistributionModel, censoring: DistributionModel) -> Result<Self> {
        Self::new(lifetime, censoring, 1.0)
    }

    /// Finite kappa or an error; the limit-law layer calls this gate.
    pub fn finite_kappa(&self) -> Result<f64> {
        self.kappa.finite().ok_or_else(|| {
            Error::InfiniteKappa(format!("{} / {}", self.lifetime, self.censoring))
        })
    }

    pub fn require_proper(&self) -> Result<()> {
        if self.cure_fraction < 1.0 {
            return Err(Error::Domain(format!(
                "limit-law verification requires p = 1, got p = {}",
                self.cure_fraction
            )));
        }
        Ok(())
    }

    /// Product tail `H-bar = F-bar * G-bar` of the observed time.
    pub fn observed_tail(&self, x: f64) -> f64 {
        self.lifetime.tail_unchecked(x) * self.censoring.tail_unchecked(x)
    }

    pub fn observed_ln_tail(&self, x: f64) -> f64 {
        self.lifetime.ln_tail_unchecked(x) + self.censoring.ln_tail_unchecked(x)
    }

    /// Auxiliary function of the observed-time tail: `fg / (f + g)`.
    pub fn observed_auxiliary(&self, x: f64) -> f64 {
        let f = self.lifetime.auxiliary_unchecked(x);
        let g = self.censoring.auxiliary_unchecked(x);
        f * g / (f + g)
    }

    /// Lower bound of the interval on which both representations hold.
    pub fn x0(&self) -> f64 {
        self.lifetime.x0.max(self.censoring.x0)
    }
}

/// `(p_u, p_c)` for a proper lifetime model: `p_u = int G-bar dF`.
/// Closed forms for exponential and equal-shape Weibull pairs; adaptive
/// quadrature otherwise.
pub fn event_probabilities(
    lifetime: &DistributionModel,
    censoring: &DistributionModel,
) -> Result<(f64, f64)> {
    if let (Some((alpha, lambda)), Some((beta, mu))) =
        (as_weibull(lifetime.family), as_weibull(censoring.family))
    {
        if alpha == beta {
            let p_u = lambda / (lambda + mu);
            return Ok((p_u, 1.0 - p_u));
        }
    }
    event_probabilities_quadrature(lifetime, censoring)
}

/// Quadrature route for `(p_u, p_c)`, exposed so tests can cross-check the
/// closed forms against it.
pub fn event_probabilities_quadrature(
    lifetime: &DistributionModel,
    censoring: &DistributionModel,
) -> Result<(f64, f64)> {
    let integrand = |s: f64| censoring.tail_unchecked(s) * lifetime.density_unchecked(s);
    let lower = lifetime.support_lower().max(censoring.support_lower());
    let r = if lower.is_finite() {
        quad::integrate_from(integrand, lower, PU_TOL, 0.0)?
    } else {
        quad::integrate_real_line(integrand, PU_TOL, 0.0)?
    };
    let p_u = r.value.clamp(0.0, 1.0);
    Ok((p_u, 1.0 - p_u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_examples() {
        let w = DistributionModel::weibull(1.0, 2.0).unwrap();
        assert_eq!(w.tail(0.0).unwrap(), 1.0);
        let e = DistributionModel::exponential(1.0).unwrap();
        assert!((e.tail(2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        let ln = DistributionModel::lognormal(1.0).unwrap();
        assert!((ln.tail(1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn auxiliary_examples() {
        let e = DistributionModel::exponential(4.0).unwrap();
        assert!((e.auxiliary(10.0).unwrap() - 0.25).abs() < 1e-15);
        let w = DistributionModel::weibull(2.0, 1.0).unwrap();
        assert!((w.auxiliary(2.0).unwrap() - 0.25).abs() < 1e-15);
        // lognormal asymptotic regime: f(x) ~ x sigma^2 / log x at x = e^3
        let ln = DistributionModel::lognormal(1.0).unwrap();
        let x = 3f64.exp();
        let v = ln.auxiliary(x).unwrap();
        assert!((v - x / 3.0).abs() / (x / 3.0) < 0.10, "v={v}");
    }

    #[test]
    fn auxiliary_domain() {
        let w = DistributionModel::weibull(2.0, 1.0).unwrap();
        assert!(w.auxiliary(1.0).is_err());
        assert!(w.auxiliary(0.5).is_err());
    }

    #[test]
    fn kappa_cases() {
        let k = |f: &DistributionModel, g: &DistributionModel| kappa_of(f, g).unwrap();
        let exp = |r| DistributionModel::exponential(r).unwrap();
        let weib = |a, l| DistributionModel::weibull(a, l).unwrap();
        assert_eq!(k(&exp(2.0), &exp(1.0)), Kappa::Finite(0.5));
        assert_eq!(k(&weib(2.0, 1.0), &weib(1.0, 1.0)), Kappa::Finite(0.0));
        assert_eq!(k(&weib(1.0, 1.0), &weib(2.0, 1.0)), Kappa::Infinite);
        assert_eq!(
            k(&DistributionModel::lognormal(2.0).unwrap(), &DistributionModel::lognormal(1.0).unwrap()),
            Kappa::Finite(4.0)
        );
        assert_eq!(
            k(&DistributionModel::normal_tail(3.0).unwrap(), &DistributionModel::normal_tail(2.0).unwrap()),
            Kappa::Finite(1.5)
        );
        assert_eq!(k(&weib(2.0, 1.0), &DistributionModel::lognormal(1.0).unwrap()), Kappa::Finite(0.0));
        assert!(kappa_of(&DistributionModel::lognormal(1.0).unwrap(), &weib(2.0, 1.0)).is_err());
    }

    #[test]
    fn event_probabilities_closed_and_numeric() {
        let exp = |r| DistributionModel::exponential(r).unwrap();
        let (pu, pc) = event_probabilities(&exp(1.0), &exp(1.0)).unwrap();
        assert_eq!((pu, pc), (0.5, 0.5));
        for (l, m) in [(1.0, 3.0), (2.0, 5.0), (0.3, 0.7)] {
            let (pu, _) = event_probabilities_quadrature(&exp(l), &exp(m)).unwrap();
            assert!((pu - l / (l + m)).abs() < 1e-10, "lambda={l} mu={m} pu={pu}");
        }
        let w = DistributionModel::weibull(2.0, 1.0).unwrap();
        let (pu, pc) = event_probabilities(&w, &w).unwrap();
        assert_eq!((pu, pc), (0.5, 0.5));
        // normal-tail pair integrates over the whole line
        let nt = DistributionModel::normal_tail(1.0).unwrap();
        let (pu, _) = event_probabilities_quadrature(&nt, &nt).unwrap();
        assert!((pu - 0.5).abs() < 1e-9, "pu={pu}");
    }

    #[test]
    fn quantile_inverts_tail() {
        let models = [
            DistributionModel::exponential(2.0).unwrap(),
            DistributionModel::weibull(1.7, 0.8).unwrap(),
            DistributionModel::lognormal(1.3).unwrap(),
            DistributionModel::normal_tail(2.0).unwrap(),
        ];
        for m in &models {
            for q in [0.9, 0.5, 1e-2, 1e-6, 1e-10] {
                let x = m.quantile_from_tail(q).unwrap();
                let back = m.tail(x).unwrap();
                assert!((back - q).abs() / q < 1e-9, "{m} q={q} x={x} back={back}");
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for s in ["exp(rate=1.0)", "weibull(shape=2,scale=1)", "lognormal(sigma=1)", "normaltail(sigma=1)"] {
            let m = DistributionModel::parse(s).unwrap();
            let again = DistributionModel::parse(&m.to_string()).unwrap();
            assert_eq!(m, again);
        }
        assert!(DistributionModel::parse("gamma(shape=1)").is_err());
        assert!(DistributionModel::parse("exp(rate=-1)").is_err());
        assert!(DistributionModel::parse("exp(rate=1,foo=2)").is_err());
        assert!(DistributionModel::parse("weibull(shape=2)").is_err());
    }

    #[test]
    fn setup_rejects_bad_cure_fraction() {
        let e = DistributionModel::exponential(1.0).unwrap();
        assert!(CensoringSetup::new(e, e, -0.1).is_err());
        assert!(CensoringSetup::new(e, e, 1.2).is_err());
        let s = CensoringSetup::new(e, e, 1.0).unwrap();
        assert!((s.p_u + s.p_c - 1.0).abs() < 1e-15);
    }
}
