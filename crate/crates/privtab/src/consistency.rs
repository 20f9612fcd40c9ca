//! Mutual consistency of noisy marginals.
//!
//! Overlapping marginals carry independent noise, so their projections onto
//! shared attribute sets disagree. Processing every shared set in topological
//! order (smaller sets first, the empty set before everything) and replacing
//! each member's projection with the inverse-variance-weighted average makes
//! all overlaps agree, and consistency established on earlier sets is never
//! violated by later ones. A separate pass turns negative cells non-negative
//! while preserving totals, re-running the averaging until both properties
//! hold.

use crate::error::{Error, Result};
use crate::marginal::{MarginalSchema, MarginalTable};

/// An attribute set shared by two or more marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedSet {
    /// Shared attributes, sorted. Empty for the total-count set.
    pub attrs: Vec<usize>,
    /// Indices (into the table list) of the marginals containing `attrs`.
    pub members: Vec<usize>,
}

/// All attribute sets obtainable as intersections of two or more schemas,
/// ordered so every subset precedes its supersets (ties broken by
/// lexicographic attribute order). The empty set is included whenever at
/// least two marginals exist; a single marginal shares nothing.
pub fn shared_sets(schemas: &[MarginalSchema]) -> Vec<SharedSet> {
    if schemas.len() < 2 {
        return Vec::new();
    }
    let mut sets: std::collections::BTreeSet<Vec<usize>> = std::collections::BTreeSet::new();
    for i in 0..schemas.len() {
        for j in i + 1..schemas.len() {
            let inter = schemas[i].intersection(&schemas[j]);
            if !inter.is_empty() {
                sets.insert(inter);
            }
        }
    }
    // close under intersection so k-wise overlaps are processed too
    loop {
        let current: Vec<Vec<usize>> = sets.iter().cloned().collect();
        let mut grew = false;
        for i in 0..current.len() {
            for j in i + 1..current.len() {
                let inter: Vec<usize> = current[i]
                    .iter()
                    .copied()
                    .filter(|a| current[j].binary_search(a).is_ok())
                    .collect();
                if !inter.is_empty() && sets.insert(inter) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let mut ordered: Vec<Vec<usize>> = std::iter::once(Vec::new()).chain(sets).collect();
    ordered.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    ordered
        .into_iter()
        .map(|attrs| {
            let members = schemas
                .iter()
                .enumerate()
                .filter(|(_, s)| attrs.iter().all(|a| s.contains(*a)))
                .map(|(i, _)| i)
                .collect();
            SharedSet { attrs, members }
        })
        .collect()
}

/// Outcome metadata for a consistency pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConsistencyInfo {
    /// Number of shared sets processed.
    pub sets: usize,
    /// True when some table lacked noise metadata and equal weights were used.
    pub equal_weights_fallback: bool,
}

/// Outcome metadata for the non-negativity pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonnegInfo {
    pub rounds: usize,
    pub converged: bool,
}

struct SetView {
    member: usize,
    keep: Vec<bool>,
    group_count: usize,
    collapse: f64,
    weight: f64,
}

/// Make all tables agree on every shared attribute set.
///
/// For each shared set, each member's projection is replaced by the weighted
/// average over members, with weights proportional to `1 / (c * sigma^2)`
/// where `c` is the number of member cells collapsing into one shared cell
/// and `sigma` the member's noise std. The difference is spread uniformly
/// over the collapsing cells. Tables without noise metadata force an
/// equal-weight fallback for the whole pass.
pub fn enforce_consistency(tables: &mut [MarginalTable]) -> Result<ConsistencyInfo> {
    if tables.len() < 2 {
        return Ok(ConsistencyInfo::default());
    }
    let schemas: Vec<MarginalSchema> = tables.iter().map(|t| t.schema().clone()).collect();
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            check_compatible_sizes(&tables[i], &tables[j])?;
        }
    }
    let equal_weights = tables.iter().any(|t| t.noise_std().is_none());
    if equal_weights {
        log::warn!("consistency: missing noise_std, falling back to equal weights");
    }
    let sets = shared_sets(&schemas);
    for set in &sets {
        let views: Vec<SetView> = set
            .members
            .iter()
            .map(|&m| {
                let table = &tables[m];
                let keep: Vec<bool> = table
                    .schema()
                    .attrs()
                    .iter()
                    .map(|a| set.attrs.binary_search(a).is_ok())
                    .collect();
                let group_count: usize = table
                    .sizes()
                    .iter()
                    .zip(&keep)
                    .filter(|(_, k)| **k)
                    .map(|(s, _)| *s)
                    .product();
                let collapse = (table.len() / group_count) as f64;
                let weight = if equal_weights {
                    1.0
                } else {
                    let sigma = table.noise_std().unwrap_or(1.0).max(1e-9);
                    1.0 / (collapse * sigma * sigma)
                };
                SetView {
                    member: m,
                    keep,
                    group_count,
                    collapse,
                    weight,
                }
            })
            .collect();
        let group_count = views[0].group_count;
        debug_assert!(views.iter().all(|v| v.group_count == group_count));

        let mut average = vec![0.0; group_count];
        let mut weight_sum = 0.0;
        let mut projections = Vec::with_capacity(views.len());
        for view in &views {
            let table = &tables[view.member];
            let mut proj = vec![0.0; group_count];
            for flat in 0..table.len() {
                proj[table.group_index(flat, &view.keep)] += table.counts()[flat];
            }
            for (a, p) in average.iter_mut().zip(&proj) {
                *a += view.weight * p;
            }
            weight_sum += view.weight;
            projections.push(proj);
        }
        for a in &mut average {
            *a /= weight_sum;
        }
        for (view, proj) in views.iter().zip(&projections) {
            let table = &mut tables[view.member];
            let shifts: Vec<f64> = average
                .iter()
                .zip(proj)
                .map(|(a, p)| (a - p) / view.collapse)
                .collect();
            let groups: Vec<usize> = (0..table.len())
                .map(|flat| table.group_index(flat, &view.keep))
                .collect();
            for (flat, g) in groups.into_iter().enumerate() {
                table.counts_mut()[flat] += shifts[g];
            }
            table.recompute_total();
        }
    }
    Ok(ConsistencyInfo {
        sets: sets.len(),
        equal_weights_fallback: equal_weights,
    })
}

fn check_compatible_sizes(a: &MarginalTable, b: &MarginalTable) -> Result<()> {
    for (ai, &attr) in a.schema().attrs().iter().enumerate() {
        if let Some(bi) = b.schema().attrs().iter().position(|&x| x == attr) {
            if a.sizes()[ai] != b.sizes()[bi] {
                return Err(Error::SchemaMismatch(format!(
                    "attribute {attr} has size {} in one table and {} in another",
                    a.sizes()[ai],
                    b.sizes()[bi]
                )));
            }
        }
    }
    Ok(())
}

/// Clip negatives to zero, paying the clipped mass out of the positive cells
/// proportionally to their magnitude. Preserves the table total. Returns the
/// total clipped mass.
fn clip_redistribute(table: &mut MarginalTable) -> Result<f64> {
    let neg_mass: f64 = table.counts().iter().filter(|c| **c < 0.0).map(|c| -c).sum();
    if neg_mass == 0.0 {
        return Ok(0.0);
    }
    let pos_sum: f64 = table.counts().iter().filter(|c| **c > 0.0).sum();
    if pos_sum < neg_mass {
        return Err(Error::NegativeTotal(table.total()));
    }
    let scale = neg_mass / pos_sum;
    for c in table.counts_mut() {
        if *c < 0.0 {
            *c = 0.0;
        } else {
            *c -= scale * *c;
        }
    }
    table.recompute_total();
    Ok(neg_mass)
}

/// Make consistent tables non-negative while keeping them consistent.
///
/// Alternates clip-and-redistribute with [`enforce_consistency`] until a
/// round has nothing left to clip. The clipped mass shrinks geometrically
/// (cells whose consistent value is genuinely negative keep being nudged
/// back), so the loop runs until the per-round mass falls below 1e-10,
/// leaving the final state non-negative, consistent to that tolerance, and
/// stable under a further consistency pass. Totals are preserved throughout.
/// A table whose positive mass cannot absorb its negatives (total below
/// zero) is unsalvageable and reported as an error.
pub fn nonneg_consistent(tables: &mut [MarginalTable]) -> Result<NonnegInfo> {
    // contraction per round is data-dependent (slow when one table's noise
    // std dwarfs another's on a shared set), so the cap is generous; a
    // round costs O(cells)
    const MAX_ROUNDS: usize = 5000;
    const CLIP_TOL: f64 = 1e-10;
    for t in tables.iter() {
        if t.total() < -1e-9 {
            return Err(Error::NegativeTotal(t.total()));
        }
    }
    let mut info = NonnegInfo::default();
    for round in 0..MAX_ROUNDS {
        info.rounds = round + 1;
        let mut max_clip = 0.0f64;
        for table in tables.iter_mut() {
            max_clip = max_clip.max(clip_redistribute(table)?);
        }
        if max_clip <= CLIP_TOL {
            info.converged = true;
            return Ok(info);
        }
        enforce_consistency(tables)?;
    }
    // the round cap was hit; leave the tables non-negative and accept the
    // residual inconsistency of one last clip
    for table in tables.iter_mut() {
        clip_redistribute(table)?;
    }
    log::warn!("nonneg_consistent: did not converge within {MAX_ROUNDS} rounds");
    Ok(info)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, sample_gaussian};

    fn table(attrs: &[usize], sizes: &[usize], counts: Vec<f64>, std: f64) -> MarginalTable {
        let mut t = MarginalTable::new(
            MarginalSchema::new(attrs.to_vec()).unwrap(),
            sizes.to_vec(),
            counts,
        )
        .unwrap();
        t.set_noise_std(Some(std));
        t
    }

    #[test]
    fn shared_sets_of_three_views_covering_all_pairs() {
        // twelve attributes; three 8-way views whose pairwise overlaps are
        // the three 4-attribute blocks
        let schemas = vec![
            MarginalSchema::new([0, 1, 2, 3, 4, 5, 6, 7]).unwrap(),
            MarginalSchema::new([0, 1, 2, 3, 8, 9, 10, 11]).unwrap(),
            MarginalSchema::new([4, 5, 6, 7, 8, 9, 10, 11]).unwrap(),
        ];
        let sets = shared_sets(&schemas);
        let attrs: Vec<Vec<usize>> = sets.iter().map(|s| s.attrs.clone()).collect();
        assert_eq!(
            attrs,
            vec![
                vec![],
                vec![0, 1, 2, 3],
                vec![4, 5, 6, 7],
                vec![8, 9, 10, 11],
            ]
        );
        assert_eq!(sets[0].members, vec![0, 1, 2]);
        assert_eq!(sets[1].members, vec![0, 1]);
    }

    #[test]
    fn shared_sets_single_marginal_is_empty() {
        let schemas = vec![MarginalSchema::new([0, 1]).unwrap()];
        assert!(shared_sets(&schemas).is_empty());
    }

    #[test]
    fn shared_sets_identical_schemas() {
        let schemas = vec![
            MarginalSchema::new([2, 5]).unwrap(),
            MarginalSchema::new([2, 5]).unwrap(),
        ];
        let sets = shared_sets(&schemas);
        let attrs: Vec<Vec<usize>> = sets.iter().map(|s| s.attrs.clone()).collect();
        assert_eq!(attrs, vec![vec![], vec![2, 5]]);
    }

    #[test]
    fn symmetric_average_of_two_tables() {
        let mut tables = vec![
            table(&[0], &[2], vec![3.0, 1.0], 1.0),
            table(&[0], &[2], vec![1.0, 3.0], 1.0),
        ];
        enforce_consistency(&mut tables).unwrap();
        assert_eq!(tables[0].counts(), &[2.0, 2.0]);
        assert_eq!(tables[1].counts(), &[2.0, 2.0]);
    }

    #[test]
    fn consistent_input_is_unchanged() {
        let joint = table(&[0, 1], &[2, 2], vec![1.0, 2.0, 3.0, 4.0], 1.0);
        let row = table(&[0], &[2], vec![3.0, 7.0], 1.0);
        let mut tables = vec![joint.clone(), row.clone()];
        enforce_consistency(&mut tables).unwrap();
        for (t, orig) in tables.iter().zip(&[joint, row]) {
            for (a, b) in t.counts().iter().zip(orig.counts()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    fn random_noisy_tables(seed: u64) -> Vec<MarginalTable> {
        // overlapping 2- and 3-way schemas over five attributes of size 3
        let schemas = [
            vec![0usize, 1, 2],
            vec![1, 2, 3],
            vec![0, 3],
            vec![2, 3, 4],
            vec![1, 4],
        ];
        let mut rng = derive_rng(seed, "consistency_test", &[]);
        schemas
            .iter()
            .enumerate()
            .map(|(i, attrs)| {
                let sizes = vec![3usize; attrs.len()];
                let len: usize = sizes.iter().product();
                let sigma = 1.0 + i as f64;
                let counts: Vec<f64> = (0..len)
                    .map(|c| 100.0 + (c as f64) + sample_gaussian(&mut rng, sigma))
                    .collect();
                let mut t = MarginalTable::new(
                    MarginalSchema::new(attrs.clone()).unwrap(),
                    sizes,
                    counts,
                )
                .unwrap();
                t.set_noise_std(Some(sigma));
                t
            })
            .collect()
    }

    /// Brute-force oracle: largest disagreement between any two tables'
    /// projections onto their schema intersection.
    fn max_pairwise_projection_gap(tables: &[MarginalTable]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..tables.len() {
            for j in i + 1..tables.len() {
                let inter = tables[i].schema().intersection(tables[j].schema());
                let (pi, pj) = if inter.is_empty() {
                    (vec![tables[i].total()], vec![tables[j].total()])
                } else {
                    let sub = MarginalSchema::new(inter).unwrap();
                    (
                        tables[i].project(&sub).unwrap().counts().to_vec(),
                        tables[j].project(&sub).unwrap().counts().to_vec(),
                    )
                };
                for (a, b) in pi.iter().zip(&pj) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    #[test]
    fn consistency_post_condition_and_idempotence() {
        for seed in 0..5 {
            let mut tables = random_noisy_tables(seed);
            enforce_consistency(&mut tables).unwrap();
            assert!(max_pairwise_projection_gap(&tables) < 1e-9);
            let totals: Vec<f64> = tables.iter().map(|t| t.total()).collect();
            for t in &totals {
                assert!((t - totals[0]).abs() < 1e-9);
            }
            // second pass is a no-op
            let before: Vec<Vec<f64>> = tables.iter().map(|t| t.counts().to_vec()).collect();
            enforce_consistency(&mut tables).unwrap();
            for (t, b) in tables.iter().zip(&before) {
                for (x, y) in t.counts().iter().zip(b) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn inverse_variance_average_is_variance_optimal() {
        // Monte-Carlo check on two one-cell estimates of the same quantity:
        // combining with weights 1/sigma^2 must beat the better input and
        // match 1/(1/s1^2 + 1/s2^2) within 2%.
        let truth = 50.0;
        let (s1, s2) = (1.0, 3.0);
        let trials = 100_000;
        let mut rng = derive_rng(99, "variance_optimal", &[]);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..trials {
            let mut tables = vec![
                table(&[0], &[2], vec![truth + sample_gaussian(&mut rng, s1), 10.0], s1),
                table(&[0], &[2], vec![truth + sample_gaussian(&mut rng, s2), 10.0], s2),
            ];
            enforce_consistency(&mut tables).unwrap();
            let combined = tables[0].counts()[0];
            sum += combined;
            sum_sq += combined * combined;
        }
        let mean = sum / trials as f64;
        let var = sum_sq / trials as f64 - mean * mean;
        let expected = 1.0 / (1.0 / (s1 * s1) + 1.0 / (s2 * s2));
        assert!((var - expected).abs() < 0.02 * 1.0f64.max(expected), "var {var}");
        assert!(var <= s1 * s1 && var <= s2 * s2);
    }

    #[test]
    fn equal_weight_fallback_is_flagged() {
        let mut t1 = table(&[0], &[2], vec![3.0, 1.0], 1.0);
        t1.set_noise_std(None);
        let t2 = table(&[0], &[2], vec![1.0, 3.0], 9.0);
        let mut tables = vec![t1, t2];
        let info = enforce_consistency(&mut tables).unwrap();
        assert!(info.equal_weights_fallback);
        // equal weights: plain average, not sigma-weighted
        assert_eq!(tables[0].counts(), &[2.0, 2.0]);
    }

    #[test]
    fn clip_redistribute_examples() {
        let mut t = table(&[0], &[2], vec![5.0, -1.0], 1.0);
        clip_redistribute(&mut t).unwrap();
        assert_eq!(t.counts(), &[4.0, 0.0]);

        let mut t = table(&[0], &[3], vec![-1.0, -1.0, 6.0], 1.0);
        clip_redistribute(&mut t).unwrap();
        assert_eq!(t.counts(), &[0.0, 0.0, 4.0]);

        let mut t = table(&[0], &[2], vec![2.0, 3.0], 1.0);
        clip_redistribute(&mut t).unwrap();
        assert_eq!(t.counts(), &[2.0, 3.0]);
    }

    #[test]
    fn clip_bounds_linf_by_clipped_mass() {
        let before = vec![10.0, -1.0, -1.0, -1.0, -1.0, -1.0];
        let mut t = table(&[0], &[6], before.clone(), 1.0);
        let mass = clip_redistribute(&mut t).unwrap();
        assert_eq!(mass, 5.0);
        let linf = t
            .counts()
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(linf <= mass + 1e-12);
    }

    #[test]
    fn negative_total_is_an_error() {
        let mut tables = vec![table(&[0], &[2], vec![1.0, -3.0], 1.0)];
        assert!(matches!(
            nonneg_consistent(&mut tables),
            Err(Error::NegativeTotal(_))
        ));
    }

    #[test]
    fn nonneg_consistent_post_conditions() {
        for seed in 20..25 {
            let mut tables = random_noisy_tables(seed);
            // inject negatives to force clipping
            for t in tables.iter_mut() {
                let first = &mut t.counts_mut()[0];
                *first -= 150.0;
                t.recompute_total();
            }
            enforce_consistency(&mut tables).unwrap();
            let info = nonneg_consistent(&mut tables).unwrap();
            assert!(info.converged, "seed {seed} needed more rounds");
            assert!(tables.iter().all(|t| t.counts().iter().all(|c| *c >= 0.0)));
            assert!(max_pairwise_projection_gap(&tables) < 1e-6);
            let before: Vec<Vec<f64>> = tables.iter().map(|t| t.counts().to_vec()).collect();
            enforce_consistency(&mut tables).unwrap();
            for (t, b) in tables.iter().zip(&before) {
                for (x, y) in t.counts().iter().zip(b) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }
}
