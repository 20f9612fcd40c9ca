//! Noise mechanisms, sensitivity bookkeeping, and composition accounting.
//!
//! Publishing k marginals under an (epsilon, delta) budget can be accounted
//! five ways: Laplace under basic, advanced, or zCDP composition, and
//! Gaussian under advanced or zCDP composition. [`plan_noise`] evaluates the
//! per-marginal noise standard deviation of each strategy and picks the
//! minimum. Laplace with basic composition wins for small k; Gaussian with
//! zCDP wins for large k.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginal::MarginalTable;
use crate::rng::{derive_rng, sample_gaussian, sample_laplace};

/// Neighboring-dataset convention; fixes the sensitivity of one marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighboring {
    /// Neighbors differ by adding or removing one record.
    Unbounded,
    /// Neighbors differ by changing one record.
    Bounded,
}

/// L1 and L2 sensitivity of a single marginal query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub l1: f64,
    pub l2: f64,
}

impl Sensitivity {
    pub fn for_neighboring(neighboring: Neighboring) -> Self {
        match neighboring {
            // add/remove one record touches one cell by one
            Neighboring::Unbounded => Sensitivity { l1: 1.0, l2: 1.0 },
            // changing one record moves a unit between two cells
            Neighboring::Bounded => Sensitivity {
                l1: 2.0,
                l2: std::f64::consts::SQRT_2,
            },
        }
    }
}

/// Privacy budget plus the neighboring convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub neighboring: Neighboring,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, neighboring: Neighboring) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidPrivacyParams(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidPrivacyParams(format!(
                "delta must lie in [0, 1), got {delta}"
            )));
        }
        Ok(PrivacyParams {
            epsilon,
            delta,
            neighboring,
        })
    }

    pub fn sensitivity(&self) -> Sensitivity {
        Sensitivity::for_neighboring(self.neighboring)
    }

    /// Split the budget into two sequentially composed stages: a `fraction`
    /// share and the remainder. Basic composition adds the pieces back up.
    pub fn split(&self, fraction: f64) -> Result<(PrivacyParams, PrivacyParams)> {
        if !(0.0 < fraction && fraction < 1.0) {
            return Err(Error::InvalidPrivacyParams(format!(
                "split fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let a = PrivacyParams::new(
            self.epsilon * fraction,
            self.delta * fraction,
            self.neighboring,
        )?;
        let b = PrivacyParams::new(
            self.epsilon * (1.0 - fraction),
            self.delta * (1.0 - fraction),
            self.neighboring,
        )?;
        Ok((a, b))
    }
}

/// Zero-concentrated DP budget. Composes additively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZcdpBudget {
    pub rho: f64,
}

impl ZcdpBudget {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidPrivacyParams(format!(
                "rho must be positive, got {rho}"
            )));
        }
        Ok(ZcdpBudget { rho })
    }

    pub fn compose(self, other: ZcdpBudget) -> ZcdpBudget {
        ZcdpBudget {
            rho: self.rho + other.rho,
        }
    }
}

/// Noise distribution attached to a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDistribution {
    Laplace,
    Gaussian,
}

/// The five composition strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    LapBasic,
    LapAdv,
    LapZcdp,
    GaussAdv,
    GaussZcdp,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::LapBasic,
        Strategy::LapAdv,
        Strategy::LapZcdp,
        Strategy::GaussAdv,
        Strategy::GaussZcdp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::LapBasic => "lap_basic",
            Strategy::LapAdv => "lap_adv",
            Strategy::LapZcdp => "lap_zcdp",
            Strategy::GaussAdv => "gauss_adv",
            Strategy::GaussZcdp => "gauss_zcdp",
        }
    }

    pub fn distribution(&self) -> NoiseDistribution {
        match self {
            Strategy::LapBasic | Strategy::LapAdv | Strategy::LapZcdp => {
                NoiseDistribution::Laplace
            }
            Strategy::GaussAdv | Strategy::GaussZcdp => NoiseDistribution::Gaussian,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Chosen strategy and the per-marginal noise std it implies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisePlan {
    pub strategy: Strategy,
    pub per_marginal_std: f64,
    pub k: usize,
    pub distribution: NoiseDistribution,
    /// Set when the chosen strategy evaluates the Gaussian guarantee at a
    /// per-marginal epsilon of 1 or more, outside its stated range.
    pub flagged: bool,
}

/// Standard deviation of Laplace noise buying (eps_per, 0)-DP at L1
/// sensitivity `gs`: sqrt(2) * gs / eps_per.
pub fn laplace_std(eps_per: f64, gs: f64) -> Result<f64> {
    if !(eps_per > 0.0) || !(gs > 0.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "laplace_std needs positive inputs, got eps={eps_per}, gs={gs}"
        )));
    }
    Ok(std::f64::consts::SQRT_2 * gs / eps_per)
}

/// Gaussian std buying (eps, delta)-DP at L2 sensitivity `l2`:
/// l2 * sqrt(2 ln(1.25/delta)) / eps.
///
/// The guarantee is stated for eps < 1; larger values still evaluate, the
/// planner flags them.
pub fn gaussian_sigma(eps: f64, delta: f64, l2: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(l2 > 0.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "l2 sensitivity must be positive, got {l2}"
        )));
    }
    Ok(l2 * (2.0 * (1.25 / delta).ln()).sqrt() / eps)
}

/// The zCDP budget whose (eps, delta) conversion matches the given one: the
/// unique rho > 0 with rho + 2 sqrt(rho ln(1/delta)) = eps, i.e.
/// rho = (sqrt(L + eps) - sqrt(L))^2 with L = ln(1/delta).
pub fn zcdp_from_dp(eps: f64, delta: f64) -> Result<ZcdpBudget> {
    if !(eps > 0.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let l = (1.0 / delta).ln();
    let rho = ((l + eps).sqrt() - l.sqrt()).powi(2);
    ZcdpBudget::new(rho)
}

/// DP epsilon implied by a zCDP budget at the given delta:
/// rho + 2 sqrt(rho ln(1/delta)).
pub fn dp_eps_from_zcdp(budget: ZcdpBudget, delta: f64) -> f64 {
    budget.rho + 2.0 * (budget.rho * (1.0 / delta).ln()).sqrt()
}

/// Largest per-mechanism eps0 such that k mechanisms compose, under the
/// advanced composition bound with slack delta_prime, to at most `eps`:
/// eps0 sqrt(2k ln(1/delta')) + k eps0 (e^eps0 - 1) <= eps.
/// Solved by bisection to 1e-9 relative tolerance.
pub fn advanced_eps_per(eps: f64, delta_prime: f64, k: usize) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    if !(delta_prime > 0.0 && delta_prime < 1.0) {
        return Err(Error::InvalidPrivacyParams(format!(
            "delta' must lie in (0, 1), got {delta_prime}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidPrivacyParams("k must be at least 1".into()));
    }
    let lp = (1.0 / delta_prime).ln();
    let kf = k as f64;
    let spent = |e0: f64| e0 * (2.0 * kf * lp).sqrt() + kf * e0 * (e0.exp_m1());
    let mut lo = 0.0;
    let mut hi = eps;
    while spent(hi) < eps {
        hi *= 2.0;
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if spent(mid) > eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Per-marginal noise std of one strategy, or `None` when the strategy is
/// unavailable (every strategy except Laplace/basic requires delta > 0).
pub fn strategy_std(params: &PrivacyParams, k: usize, strategy: Strategy) -> Result<Option<f64>> {
    if k == 0 {
        return Err(Error::InvalidPrivacyParams("k must be at least 1".into()));
    }
    let s = params.sensitivity();
    let kf = k as f64;
    if params.delta == 0.0 && strategy != Strategy::LapBasic {
        return Ok(None);
    }
    let std = match strategy {
        // eps/k per marginal; Laplace is pure, deltas add to zero
        Strategy::LapBasic => laplace_std(params.epsilon / kf, s.l1)?,
        // pure mechanisms contribute no per-mechanism delta, so the whole
        // delta goes to the composition slack
        Strategy::LapAdv => {
            let e0 = advanced_eps_per(params.epsilon, params.delta, k)?;
            laplace_std(e0, s.l1)?
        }
        // Laplace with scale gs*x is 1/(2x^2)-zCDP; spend rho/k per marginal
        Strategy::LapZcdp => {
            let rho = zcdp_from_dp(params.epsilon, params.delta)?.rho;
            let x = (kf / (2.0 * rho)).sqrt();
            std::f64::consts::SQRT_2 * s.l1 * x
        }
        // half the delta to the composition slack, half split evenly across
        // the k per-mechanism guarantees
        Strategy::GaussAdv => {
            let delta0 = params.delta / (2.0 * kf);
            let delta_prime = params.delta / 2.0;
            let e0 = advanced_eps_per(params.epsilon, delta_prime, k)?;
            gaussian_sigma(e0, delta0, s.l2)?
        }
        // Gaussian with std l2*sigma is 1/(2 sigma^2)-zCDP
        Strategy::GaussZcdp => {
            let rho = zcdp_from_dp(params.epsilon, params.delta)?.rho;
            s.l2 * (kf / (2.0 * rho)).sqrt()
        }
    };
    Ok(Some(std))
}

/// Per-marginal std of all five strategies, in [`Strategy::ALL`] order.
pub fn strategy_stds(params: &PrivacyParams, k: usize) -> Result<Vec<(Strategy, Option<f64>)>> {
    Strategy::ALL
        .iter()
        .map(|&s| Ok((s, strategy_std(params, k, s)?)))
        .collect()
}

/// Evaluate all five strategies and return the one with the smallest
/// per-marginal std.
pub fn plan_noise(params: &PrivacyParams, k: usize) -> Result<NoisePlan> {
    let stds = strategy_stds(params, k)?;
    let mut best: Option<(Strategy, f64)> = None;
    for (strategy, std) in stds {
        let Some(std) = std else { continue };
        if best.map_or(true, |(_, b)| std < b) {
            best = Some((strategy, std));
        }
    }
    let (strategy, per_marginal_std) =
        best.ok_or_else(|| Error::NoStrategy("no strategy is available".into()))?;
    // the Gaussian guarantee is stated for per-marginal eps < 1
    let flagged = match strategy {
        Strategy::GaussAdv => advanced_eps_per(params.epsilon, params.delta / 2.0, k)? >= 1.0,
        _ => false,
    };
    Ok(NoisePlan {
        strategy,
        per_marginal_std,
        k,
        distribution: strategy.distribution(),
        flagged,
    })
}

/// Smallest k in 1..=k_max where the Gaussian/zCDP std drops below the
/// Laplace/basic std, if any.
pub fn crossover_k(params: &PrivacyParams, k_max: usize) -> Result<Option<usize>> {
    for k in 1..=k_max {
        let basic = strategy_std(params, k, Strategy::LapBasic)?.unwrap();
        if let Some(gauss) = strategy_std(params, k, Strategy::GaussZcdp)? {
            if gauss < basic {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

/// Add i.i.d. noise of the given std to every cell. The generator is derived
/// from the seed and the table's schema, so noising many marginals from one
/// run seed is reproducible and order-independent.
pub fn add_noise(
    table: &MarginalTable,
    std: f64,
    distribution: NoiseDistribution,
    seed: u64,
) -> Result<MarginalTable> {
    if std < 0.0 {
        return Err(Error::InvalidPrivacyParams(format!(
            "noise std must be non-negative, got {std}"
        )));
    }
    let mut out = table.clone();
    if std > 0.0 {
        let mut rng = derive_rng(seed, "add_noise", table.schema().attrs());
        match distribution {
            NoiseDistribution::Laplace => {
                let scale = std / std::f64::consts::SQRT_2;
                for c in out.counts_mut() {
                    *c += sample_laplace(&mut rng, scale);
                }
            }
            NoiseDistribution::Gaussian => {
                for c in out.counts_mut() {
                    *c += sample_gaussian(&mut rng, std);
                }
            }
        }
        out.recompute_total();
    }
    out.set_noise_std(Some(std));
    Ok(out)
}
