//! Utility scoring of a synthetic dataset against the original.
//!
//! Three metrics, each mapped to [0, 10^6]: random 3-way marginal density
//! (L1 penalty), random range queries (log-ratio RMS), and a domain-specific
//! Gini-index / gender-pay-gap comparison per city. The first two are
//! generic; the third needs designated city, sex, and income attributes and
//! is best-effort (its normalization to the score range is a local choice).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::domain::{AttributeKind, Dataset};
use crate::error::{Error, Result};
use crate::marginal::{compute_marginal, l1_distance, MarginalSchema};
use crate::rng::derive_rng;

pub const DEFAULT_TRIALS: usize = 300;
pub const DEFAULT_ARITY: usize = 3;

/// Max attempts at finding a query supported by the original dataset.
const MAX_QUERY_ATTEMPTS: usize = 100_000;

/// Scores emitted by the evaluation command.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub density: f64,
    pub range: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gini_gap: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_cities: Option<usize>,
}

fn check_same_domain(orig: &Dataset, synth: &Dataset) -> Result<()> {
    if orig.domain() != synth.domain() {
        return Err(Error::InvalidInput(
            "datasets must share a domain".into(),
        ));
    }
    Ok(())
}

/// Density-estimation score: mean L1 distance between normalized marginals
/// on random attribute subsets, mapped by `10^6 (1 - s/2)`.
pub fn density_score(
    orig: &Dataset,
    synth: &Dataset,
    trials: usize,
    arity: usize,
    seed: u64,
) -> Result<f64> {
    check_same_domain(orig, synth)?;
    if orig.n() == 0 || synth.n() == 0 {
        return Err(Error::InvalidInput(
            "density score is undefined on an empty dataset".into(),
        ));
    }
    let d = orig.d();
    if arity == 0 || d < arity {
        return Err(Error::InvalidInput(format!(
            "need at least {arity} attributes, domain has {d}"
        )));
    }
    let mut penalty_sum = 0.0;
    for trial in 0..trials {
        let mut rng = derive_rng(seed, "density_trial", &[trial]);
        let mut attrs: Vec<usize> = (0..d).collect();
        let (chosen, _) = attrs.partial_shuffle(&mut rng, arity);
        let schema = MarginalSchema::new(chosen.to_vec())?;
        let mo = compute_marginal(orig, &schema)?.normalized()?;
        let ms = compute_marginal(synth, &schema)?.normalized()?;
        penalty_sum += l1_distance(mo.table(), ms.table())?;
    }
    let s = penalty_sum / trials as f64;
    Ok((1e6 * (1.0 - s / 2.0)).clamp(0.0, 1e6))
}

/// A conjunctive range query: every listed attribute must take a value
/// inside its condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeQuery {
    pub conditions: Vec<(usize, QueryCondition)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryCondition {
    /// Non-empty subset of categorical values, sorted.
    Values(Vec<u32>),
    /// Contiguous inclusive bin range.
    Bins { lo: u32, hi: u32 },
}

impl RangeQuery {
    pub fn matches(&self, dataset: &Dataset, row: usize) -> bool {
        self.conditions.iter().all(|(attr, cond)| {
            let v = dataset.value(row, *attr);
            match cond {
                QueryCondition::Values(vals) => vals.binary_search(&v).is_ok(),
                QueryCondition::Bins { lo, hi } => *lo <= v && v <= *hi,
            }
        })
    }
}

/// Fraction of records satisfying the query.
pub fn query_fraction(dataset: &Dataset, query: &RangeQuery) -> f64 {
    if dataset.n() == 0 {
        return 0.0;
    }
    let hits = (0..dataset.n())
        .filter(|&r| query.matches(dataset, r))
        .count();
    hits as f64 / dataset.n() as f64
}

/// Per-query log penalty `ln(max(f_p, 1e-6) / f_o)`.
pub fn query_penalty(f_o: f64, f_p: f64) -> f64 {
    (f_p.max(1e-6) / f_o).ln()
}

/// Sample one query from the domain: each attribute selected with
/// probability 1/3, categorical conditions are uniform non-empty value
/// subsets, numeric conditions are uniform contiguous bin ranges. A query
/// selecting no attribute is resampled.
pub fn sample_query(domain: &crate::domain::Domain, rng: &mut ChaCha12Rng) -> RangeQuery {
    loop {
        let mut conditions = Vec::new();
        for (a, spec) in domain.attributes().iter().enumerate() {
            if rng.random::<f64>() >= 1.0 / 3.0 {
                continue;
            }
            let size = spec.domain_size() as u32;
            let cond = match &spec.kind {
                AttributeKind::Categorical { .. } => {
                    // uniform over non-empty subsets: independent coin per
                    // value, rejecting the empty draw
                    loop {
                        let vals: Vec<u32> =
                            (0..size).filter(|_| rng.random_bool(0.5)).collect();
                        if !vals.is_empty() {
                            break QueryCondition::Values(vals);
                        }
                    }
                }
                AttributeKind::Numeric { .. } => {
                    // uniform over the size*(size+1)/2 contiguous ranges
                    let total = u64::from(size) * (u64::from(size) + 1) / 2;
                    let mut r = rng.random_range(0..total);
                    let mut lo = 0u32;
                    loop {
                        let ranges_from_lo = u64::from(size - lo);
                        if r < ranges_from_lo {
                            break QueryCondition::Bins { lo, hi: lo + r as u32 };
                        }
                        r -= ranges_from_lo;
                        lo += 1;
                    }
                }
            };
            conditions.push((a, cond));
        }
        if !conditions.is_empty() {
            return RangeQuery { conditions };
        }
    }
}

/// Range-query score: RMS of log ratios over queries supported by the
/// original dataset, mapped by `10^6 max(0, 1 - rms / ln(10^3))`.
///
/// Queries are rejection-sampled until at least one original record matches,
/// so `f_o > 0` always; a synthetic fraction of zero is clamped to `1e-6`
/// inside the log.
pub fn range_query_score(
    orig: &Dataset,
    synth: &Dataset,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_same_domain(orig, synth)?;
    if orig.n() == 0 {
        return Err(Error::InvalidInput(
            "range-query score needs a non-empty original dataset".into(),
        ));
    }
    let mut sum_sq = 0.0;
    for trial in 0..trials {
        let mut rng = derive_rng(seed, "range_trial", &[trial]);
        let mut accepted = None;
        for _ in 0..MAX_QUERY_ATTEMPTS {
            let q = sample_query(orig.domain(), &mut rng);
            let f_o = query_fraction(orig, &q);
            if f_o > 0.0 {
                accepted = Some((q, f_o));
                break;
            }
        }
        let Some((q, f_o)) = accepted else {
            return Err(Error::QueryRejection(MAX_QUERY_ATTEMPTS));
        };
        let f_p = query_fraction(synth, &q);
        let d = query_penalty(f_o, f_p);
        sum_sq += d * d;
    }
    let rms = (sum_sq / trials as f64).sqrt();
    let score = 1e6 * (1.0 - rms / (1e3f64).ln()).max(0.0);
    Ok(score.clamp(0.0, 1e6))
}

/// Gini index over a sample: sum of absolute pairwise differences divided by
/// `2 m^2 mean`. Zero dispersion (or an all-zero sample) gives zero.
pub fn gini_index(incomes: &[f64]) -> f64 {
    let m = incomes.len();
    if m == 0 {
        return 0.0;
    }
    let sum: f64 = incomes.iter().sum();
    if sum == 0.0 {
        return 0.0;
    }
    let mut sorted = incomes.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // sorted form of the pairwise sum: sum_j (2j - m - 1) x_(j), 1-based j
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - m as f64 - 1.0) * x)
        .sum();
    let mean = sum / m as f64;
    weighted / (m as f64 * m as f64 * mean)
}

/// Outcome of the Gini / gender-gap metric.
#[derive(Debug, Clone, Serialize)]
pub struct GiniGapReport {
    pub score: f64,
    /// City values present in the original dataset.
    pub cities: usize,
    /// Cities skipped in at least one component.
    pub skipped_cities: usize,
    /// Cities entering the Gini component.
    pub gini_cities: usize,
    /// Cities entering the pay-gap ranking.
    pub gap_cities: usize,
}

struct CityStats {
    incomes: Vec<f64>,
    by_sex: [Vec<f64>; 2],
}

fn collect_city_stats(
    dataset: &Dataset,
    city: usize,
    sex: usize,
    income_midpoints: &[f64],
    income: usize,
    n_cities: usize,
) -> Vec<CityStats> {
    let mut stats: Vec<CityStats> = (0..n_cities)
        .map(|_| CityStats {
            incomes: Vec::new(),
            by_sex: [Vec::new(), Vec::new()],
        })
        .collect();
    for r in 0..dataset.n() {
        let c = dataset.value(r, city) as usize;
        let s = dataset.value(r, sex) as usize;
        let x = income_midpoints[dataset.value(r, income) as usize];
        stats[c].incomes.push(x);
        stats[c].by_sex[s].push(x);
    }
    stats
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Gini / gender-pay-gap score.
///
/// Component one is the mean-square deviation of per-city Gini indices
/// between the datasets; component two ranks the cities by pay gap (mean
/// income of the first sex value minus the second) in each dataset and takes
/// the mean-square deviation of the ranks. Cities with fewer than two
/// records, or with a sex absent, are skipped in the affected component and
/// counted. Each component is normalized (0.25 for the Gini deviation, the
/// max single-rank displacement squared for the ranks), clamped to [0, 1],
/// and the average is mapped to [0, 10^6].
pub fn gini_gender_score(
    orig: &Dataset,
    synth: &Dataset,
    city_attr: usize,
    sex_attr: usize,
    income_attr: usize,
) -> Result<GiniGapReport> {
    check_same_domain(orig, synth)?;
    let d = orig.d();
    for (name, a) in [("city", city_attr), ("sex", sex_attr), ("income", income_attr)] {
        if a >= d {
            return Err(Error::InvalidInput(format!(
                "{name} attribute index {a} out of range"
            )));
        }
    }
    if orig.domain().size(sex_attr) != 2 {
        return Err(Error::InvalidInput(
            "sex attribute must have exactly two values".into(),
        ));
    }
    let income_spec = orig.domain().attr(income_attr);
    let AttributeKind::Numeric { .. } = income_spec.kind else {
        return Err(Error::InvalidInput(
            "income attribute must be numeric (bucketized)".into(),
        ));
    };
    let midpoints: Vec<f64> = (0..income_spec.domain_size())
        .map(|v| income_spec.bin_midpoint(v as u32))
        .collect::<Result<_>>()?;

    let n_cities = orig.domain().size(city_attr);
    let so = collect_city_stats(orig, city_attr, sex_attr, &midpoints, income_attr, n_cities);
    let ss = collect_city_stats(synth, city_attr, sex_attr, &midpoints, income_attr, n_cities);

    let present: Vec<usize> = (0..n_cities).filter(|&c| !so[c].incomes.is_empty()).collect();

    let mut gini_sq_sum = 0.0;
    let mut gini_cities = 0usize;
    let mut skipped: std::collections::BTreeSet<usize> = Default::default();
    for &c in &present {
        if so[c].incomes.len() < 2 || ss[c].incomes.len() < 2 {
            skipped.insert(c);
            continue;
        }
        let diff = gini_index(&so[c].incomes) - gini_index(&ss[c].incomes);
        gini_sq_sum += diff * diff;
        gini_cities += 1;
    }
    let gini_msd = if gini_cities > 0 {
        gini_sq_sum / gini_cities as f64
    } else {
        0.0
    };

    // pay gap: mean income of sex value 0 minus sex value 1; ranking needs
    // the gap defined in both datasets
    let mut gaps: Vec<(usize, f64, f64)> = Vec::new();
    for &c in &present {
        let defined = |s: &CityStats| !s.by_sex[0].is_empty() && !s.by_sex[1].is_empty();
        if defined(&so[c]) && defined(&ss[c]) {
            gaps.push((
                c,
                mean(&so[c].by_sex[0]) - mean(&so[c].by_sex[1]),
                mean(&ss[c].by_sex[0]) - mean(&ss[c].by_sex[1]),
            ));
        } else {
            skipped.insert(c);
        }
    }
    let gap_cities = gaps.len();
    let rank = |key: fn(&(usize, f64, f64)) -> f64, gaps: &[(usize, f64, f64)]| -> Vec<usize> {
        let mut order: Vec<usize> = (0..gaps.len()).collect();
        order.sort_by(|&i, &j| {
            key(&gaps[j])
                .partial_cmp(&key(&gaps[i]))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(gaps[i].0.cmp(&gaps[j].0))
        });
        let mut ranks = vec![0usize; gaps.len()];
        for (pos, &i) in order.iter().enumerate() {
            ranks[i] = pos + 1;
        }
        ranks
    };
    let rank_msd = if gap_cities > 1 {
        let ro = rank(|g| g.1, &gaps);
        let rs = rank(|g| g.2, &gaps);
        ro.iter()
            .zip(&rs)
            .map(|(a, b)| {
                let d = *a as f64 - *b as f64;
                d * d
            })
            .sum::<f64>()
            / gap_cities as f64
    } else {
        0.0
    };

    let norm_gini = (gini_msd / 0.25).clamp(0.0, 1.0);
    let norm_rank = if gap_cities > 1 {
        let max_msd = ((gap_cities - 1) as f64).powi(2);
        (rank_msd / max_msd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let score = (1e6 * (1.0 - (norm_gini + norm_rank) / 2.0)).clamp(0.0, 1e6);
    Ok(GiniGapReport {
        score,
        cities: present.len(),
        skipped_cities: skipped.len(),
        gini_cities,
        gap_cities,
    })
}
