//! Extreme-value behaviour of right-censored survival data: distribution
//! models with Gumbel-domain tails, balance-parameter (kappa) computation,
//! limit laws for the winner of the censored/uncensored race, deterministic
//! replicated simulation, Kaplan-Meier estimation, and goodness-of-fit
//! verification.

pub mod analysis;
pub mod cli;
pub mod dist;
pub mod error;
pub mod kme;
pub mod limits;
pub mod numerics;
pub mod sim;

pub use dist::{CensoringSetup, DistributionModel, Family, Kappa};
pub use error::{Error, Result};
pub use kme::{fit_kme, level_stretch, KmeCurve, LevelStretch};
pub use limits::{
    count_law_pmf, gumbel_marginal_cdf, l_law_cdf, l_law_quantile, l_law_tail, norming_constants,
    poisson_mixture_pmf, r_law_tail, success_prob, NormingConstants,
};
pub use sim::{extreme_stats, run_replications, ExtremeStats, ReplicationResult, SurvivalSample};
