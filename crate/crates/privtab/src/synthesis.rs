//! Dataset synthesis from consistent noisy marginals.
//!
//! Starting from a random dataset whose columns follow the noisy one-way
//! marginals, records are iteratively updated until every target marginal is
//! approximately matched. The baseline update ([`mcf_update`]) forces the
//! current marginal to equal its target exactly each pass by moving records
//! from surplus to deficit cells. The gradual update ([`gum_update`]) caps
//! each cell's growth at a multiple of its current count and realizes each
//! unit of change as either a full-row duplication of a matching record or
//! an overwrite of the marginal's attributes only, preferring duplication as
//! the synthetic dataset converges.
//!
//! [`synthesize`] wraps the sweep loop with the structural shortcuts that
//! make the approach practical: degree-1 attributes are peeled off and
//! appended afterwards from their single marginal, disconnected groups of
//! marginals are synthesized separately and joined by column concatenation,
//! and the update rate decays over the iterations.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{random_dataset, Dataset, Domain};
use crate::error::{Error, Result};
use crate::marginal::{cell_decode, compute_marginal, l1_distance, MarginalSchema, MarginalTable};
use crate::quota::largest_remainder;
use crate::rng::derive_rng;

/// Update-rate decay schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecaySchedule {
    /// alpha0 * rate^(floor(t / step))
    Step { rate: f64, step: usize },
    /// alpha0 * exp(-k t)
    Exponential { k: f64 },
    /// alpha0 / (1 + k t)
    Linear { k: f64 },
    /// alpha0 / sqrt(1 + k t)
    Sqrt { k: f64 },
}

/// Update rate at iteration `t`; every schedule equals `alpha0` at t = 0.
pub fn decay(alpha0: f64, t: usize, schedule: &DecaySchedule) -> f64 {
    match schedule {
        DecaySchedule::Step { rate, step } => alpha0 * rate.powi((t / step.max(&1).to_owned()) as i32),
        DecaySchedule::Exponential { k } => alpha0 * (-k * t as f64).exp(),
        DecaySchedule::Linear { k } => alpha0 / (1.0 + k * t as f64),
        DecaySchedule::Sqrt { k } => alpha0 / (1.0 + k * t as f64).sqrt(),
    }
}

/// Synthesis parameters. Defaults match the configuration used throughout:
/// alpha0 = 0.2 with step decay (rate 0.5 every 20 sweeps), 100 sweeps,
/// duplication preference ramping by 0.01 per sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub alpha0: f64,
    pub decay: DecaySchedule,
    pub iterations: usize,
    /// Per-iteration increase of the duplication probability
    /// `min(0.9, 0.5 + dup_ramp * t)`.
    pub dup_ramp: f64,
    pub seed: u64,
    pub convergence_tol: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            alpha0: 0.2,
            decay: DecaySchedule::Step {
                rate: 0.5,
                step: 20,
            },
            iterations: 100,
            dup_ramp: 0.01,
            seed: 0,
            convergence_tol: 1e-4,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha0 must be positive, got {}",
                self.alpha0
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dup_prob(&self, t: usize) -> f64 {
        (0.5 + self.dup_ramp * t as f64).min(0.9)
    }
}

/// Hypergraph of marginals over attributes: one node per attribute, one
/// hyperedge per schema.
#[derive(Debug, Clone)]
pub struct MarginalGraph {
    schemas: Vec<MarginalSchema>,
    d: usize,
}

impl MarginalGraph {
    pub fn new(schemas: Vec<MarginalSchema>, d: usize) -> Self {
        MarginalGraph { schemas, d }
    }

    /// Number of marginals containing the attribute.
    pub fn degree(&self, attr: usize) -> usize {
        self.schemas.iter().filter(|s| s.contains(attr)).count()
    }

    pub fn covered_attrs(&self) -> Vec<usize> {
        (0..self.d).filter(|&a| self.degree(a) > 0).collect()
    }

    /// Connected components of covered attributes, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.d).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for s in &self.schemas {
            let first = s.attrs()[0];
            for &a in &s.attrs()[1..] {
                let (ra, rb) = (find(&mut parent, first), find(&mut parent, a));
                if ra != rb {
                    parent[rb] = ra;
                }
            }
        }
        let covered = self.covered_attrs();
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for a in covered {
            groups.entry(find(&mut parent, a)).or_default().push(a);
        }
        groups.into_values().collect()
    }
}

/// Per-cell working state for one marginal over a dataset.
struct CellIndex {
    sizes: Vec<usize>,
    counts: Vec<u64>,
    records: Vec<Vec<usize>>,
}

impl CellIndex {
    fn build(dataset: &Dataset, schema: &MarginalSchema) -> Result<CellIndex> {
        schema.validate_for(dataset.domain())?;
        let sizes: Vec<usize> = schema
            .attrs()
            .iter()
            .map(|&a| dataset.domain().size(a))
            .collect();
        let len: usize = sizes.iter().product();
        let mut counts = vec![0u64; len];
        let mut records = vec![Vec::new(); len];
        for r in 0..dataset.n() {
            let mut flat = 0usize;
            for (i, &a) in schema.attrs().iter().enumerate() {
                flat = flat * sizes[i] + dataset.value(r, a) as usize;
            }
            counts[flat] += 1;
            records[flat].push(r);
        }
        Ok(CellIndex {
            sizes,
            counts,
            records,
        })
    }
}

fn scaled_target(target: &MarginalTable, n: usize) -> Result<Vec<f64>> {
    if target.counts().iter().any(|c| *c < -1e-9) {
        return Err(Error::InvalidInput(
            "target marginal has negative cells; run the consistency step first".into(),
        ));
    }
    if target.total() <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "target marginal total {} is not positive",
            target.total()
        )));
    }
    let f = n as f64 / target.total();
    Ok(target.counts().iter().map(|c| c.max(0.0) * f).collect())
}

/// Force the dataset's marginal on the target schema to equal the
/// largest-remainder rounding of the target, by overwriting only the schema
/// attributes of records in surplus cells. Returns the number of records
/// changed.
pub fn mcf_update(dataset: &mut Dataset, target: &MarginalTable) -> Result<usize> {
    if dataset.n() == 0 {
        return Ok(0);
    }
    let schema = target.schema().clone();
    let index = CellIndex::build(dataset, &schema)?;
    if index.sizes != target.sizes() {
        return Err(Error::SchemaMismatch(
            "target sizes do not match the dataset domain".into(),
        ));
    }
    let tgt = scaled_target(target, dataset.n())?;
    let tgt_int = largest_remainder(&tgt, dataset.n() as u64);

    let mut movers: Vec<usize> = Vec::new();
    let mut slots: Vec<usize> = Vec::new();
    for c in 0..index.counts.len() {
        let cur = index.counts[c];
        let want = tgt_int[c];
        if cur > want {
            // deterministic choice: the latest records in the cell move
            let excess = (cur - want) as usize;
            movers.extend(index.records[c][index.records[c].len() - excess..].iter());
        } else if want > cur {
            slots.extend(std::iter::repeat(c).take((want - cur) as usize));
        }
    }
    debug_assert_eq!(movers.len(), slots.len());
    let moved = movers.len();
    for (r, cell) in movers.into_iter().zip(slots) {
        let values = cell_decode(&index.sizes, cell)?;
        for (i, &a) in schema.attrs().iter().enumerate() {
            dataset.set_value(r, a, values[i]);
        }
    }
    Ok(moved)
}

/// Outcome of one gradual update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    /// Real-valued total increase planned across under-counted cells.
    pub planned_increase: f64,
    /// Units realized by cloning a full matching row.
    pub duplicated: u64,
    /// Units realized by overwriting only the schema attributes.
    pub replaced: u64,
}

impl UpdateStats {
    pub fn moved(&self) -> u64 {
        self.duplicated + self.replaced
    }
}

/// One gradual update of the dataset toward a target marginal.
///
/// Under-counted cells grow by at most `alpha` times their current count
/// (cells currently empty get a floor of `max(1, ceil(alpha n / cells))` so
/// they can start growing); over-counted cells shrink proportionally to
/// their surplus so the record count is preserved. Each unit of change
/// duplicates a random record already in the growing cell with probability
/// `dup_prob` (falling back to a replace when the cell has no donor), and
/// otherwise overwrites the schema attributes of a record taken from a
/// shrinking cell.
pub fn gum_update(
    dataset: &mut Dataset,
    target: &MarginalTable,
    alpha: f64,
    dup_prob: f64,
    rng: &mut ChaCha12Rng,
) -> Result<UpdateStats> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if dataset.n() == 0 {
        return Ok(UpdateStats::default());
    }
    let schema = target.schema().clone();
    let mut index = CellIndex::build(dataset, &schema)?;
    if index.sizes != target.sizes() {
        return Err(Error::SchemaMismatch(
            "target sizes do not match the dataset domain".into(),
        ));
    }
    let n = dataset.n() as f64;
    let tgt = scaled_target(target, dataset.n())?;
    let cells = index.counts.len();

    let zero_floor = (alpha * n / cells as f64).ceil().max(1.0);
    let mut increases = vec![0.0; cells];
    let mut surpluses = vec![0.0; cells];
    let mut planned = 0.0;
    let mut total_surplus = 0.0;
    for c in 0..cells {
        let cur = index.counts[c] as f64;
        if tgt[c] > cur {
            let cap = if index.counts[c] == 0 {
                zero_floor
            } else {
                alpha * cur
            };
            increases[c] = (tgt[c] - cur).min(cap);
            planned += increases[c];
        } else if cur > tgt[c] {
            surpluses[c] = cur - tgt[c];
            total_surplus += surpluses[c];
        }
    }
    if planned <= 0.0 || total_surplus <= 0.0 {
        return Ok(UpdateStats {
            planned_increase: planned,
            ..Default::default()
        });
    }
    // shrink every over-counted cell by the same proportion of its surplus
    // so the total decrease matches the total increase
    let ratio = (planned / total_surplus).min(1.0);
    let decreases: Vec<f64> = surpluses.iter().map(|s| s * ratio).collect();

    let moves = planned.round() as u64;
    if moves == 0 {
        return Ok(UpdateStats {
            planned_increase: planned,
            ..Default::default()
        });
    }
    let inc_int = largest_remainder(&increases, moves);
    let dec_int = largest_remainder(&decreases, moves);

    // donors drawn uniformly without replacement from shrinking cells
    let mut donors: Vec<usize> = Vec::with_capacity(moves as usize);
    for c in 0..cells {
        let q = (dec_int[c] as usize).min(index.records[c].len());
        if q == 0 {
            continue;
        }
        let (chosen, _) = index.records[c].partial_shuffle(rng, q);
        donors.extend_from_slice(chosen);
        let keep = index.records[c].len() - q;
        index.records[c].truncate(keep);
    }
    let mut receivers: Vec<usize> = Vec::with_capacity(moves as usize);
    for c in 0..cells {
        receivers.extend(std::iter::repeat(c).take(inc_int[c] as usize));
    }

    let mut stats = UpdateStats {
        planned_increase: planned,
        ..Default::default()
    };
    for (&donor, &cell) in donors.iter().zip(&receivers) {
        let members = &index.records[cell];
        let duplicate = rng.random::<f64>() < dup_prob && !members.is_empty();
        if duplicate {
            let src = members[rng.random_range(0..members.len())];
            dataset.copy_row_within(src, donor);
            stats.duplicated += 1;
        } else {
            let values = cell_decode(&index.sizes, cell)?;
            for (i, &a) in schema.attrs().iter().enumerate() {
                dataset.set_value(donor, a, values[i]);
            }
            stats.replaced += 1;
        }
        index.records[cell].push(donor);
    }
    Ok(stats)
}

/// Mean normalized L1 error of the dataset's marginals against the targets.
pub fn mean_marginal_error(dataset: &Dataset, targets: &[MarginalTable]) -> Result<f64> {
    if targets.is_empty() || dataset.n() == 0 {
        return Ok(0.0);
    }
    let n = dataset.n() as f64;
    let mut sum = 0.0;
    for t in targets {
        let current = compute_marginal(dataset, t.schema())?;
        let scaled = t.scale_to_total(n)?;
        sum += l1_distance(&current, &scaled)? / n;
    }
    Ok(sum / targets.len() as f64)
}

/// Generate a synthetic dataset of `n` records matching the given consistent,
/// non-negative marginals over `domain`.
pub fn synthesize(
    marginals: &[MarginalTable],
    domain: &Domain,
    n: usize,
    config: &SynthesisConfig,
) -> Result<Dataset> {
    config.validate()?;
    for m in marginals {
        m.schema().validate_for(domain)?;
        let expected: Vec<usize> = m.schema().attrs().iter().map(|&a| domain.size(a)).collect();
        if expected != m.sizes() {
            return Err(Error::SchemaMismatch(
                "marginal sizes do not match the domain".into(),
            ));
        }
    }
    if n == 0 {
        return Ok(Dataset::empty(std::sync::Arc::new(domain.clone())));
    }
    // rescale to n records and verify mutual consistency
    let targets: Vec<MarginalTable> = marginals
        .iter()
        .map(|m| {
            if m.counts().iter().any(|c| *c < -1e-9) {
                return Err(Error::InvalidInput(
                    "negative marginal input; run the consistency step first".into(),
                ));
            }
            m.scale_to_total(n as f64)
        })
        .collect::<Result<_>>()?;
    check_mutual_consistency(&targets, n as f64)?;

    let graph = MarginalGraph::new(targets.iter().map(|t| t.schema().clone()).collect(), domain.d());

    // peel attributes appearing in exactly one marginal; they are appended
    // after the main synthesis from that single marginal
    let degree_one: Vec<usize> = (0..domain.d()).filter(|&a| graph.degree(a) == 1).collect();
    let mut peeled_marginals: Vec<usize> = Vec::new();
    let mut peeled: Vec<(usize, usize)> = Vec::new(); // (attr, marginal index)
    for &a in &degree_one {
        let m = targets
            .iter()
            .position(|t| t.schema().contains(a))
            .expect("degree-one attribute has a marginal");
        if !peeled_marginals.contains(&m) {
            peeled_marginals.push(m);
        }
        peeled.push((a, m));
    }
    let core: Vec<&MarginalTable> = targets
        .iter()
        .enumerate()
        .filter(|(i, _)| !peeled_marginals.contains(i))
        .map(|(_, t)| t)
        .collect();

    // synthesize each connected component of the core independently
    let core_graph = MarginalGraph::new(core.iter().map(|t| t.schema().clone()).collect(), domain.d());
    let mut synthesized = vec![false; domain.d()];
    let mut values = vec![0u32; n * domain.d()];
    for component in core_graph.components() {
        let comp_targets: Vec<&&MarginalTable> = core
            .iter()
            .filter(|t| component.contains(&t.schema().attrs()[0]))
            .collect();
        let comp_ds = synthesize_component(&component, &comp_targets, domain, n, config)?;
        // columns drop into their global positions; rows were shuffled per
        // component, so cross-component correlations are incidental
        for (local, &attr) in component.iter().enumerate() {
            for r in 0..n {
                values[r * domain.d() + attr] = comp_ds.value(r, local);
            }
            synthesized[attr] = true;
        }
    }
    let mut dataset = Dataset::new(std::sync::Arc::new(domain.clone()), values)?;

    // append peeled attributes from their single marginal, conditioning on
    // whatever part of the marginal is already synthesized
    for &(attr, m) in peeled.iter().rev() {
        if synthesized[attr] {
            continue;
        }
        append_from_marginal(&mut dataset, &targets[m], &mut synthesized, config.seed)?;
        debug_assert!(synthesized[attr]);
    }

    // attributes covered by no marginal at all get uniform values
    for a in 0..domain.d() {
        if !synthesized[a] {
            log::warn!(
                "attribute {:?} is covered by no marginal; filling uniformly",
                domain.attr(a).name
            );
            let mut rng = derive_rng(config.seed, "uniform_fill", &[a]);
            let size = domain.size(a) as u32;
            for r in 0..n {
                dataset.set_value(r, a, rng.random_range(0..size));
            }
            synthesized[a] = true;
        }
    }
    Ok(dataset)
}

fn check_mutual_consistency(targets: &[MarginalTable], n: f64) -> Result<()> {
    let tol = 1e-6 * n.max(1.0);
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            let inter = targets[i].schema().intersection(targets[j].schema());
            if inter.is_empty() {
                continue;
            }
            let sub = MarginalSchema::new(inter)?;
            let pi = targets[i].project(&sub)?;
            let pj = targets[j].project(&sub)?;
            let gap = pi
                .counts()
                .iter()
                .zip(pj.counts())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if gap > tol {
                return Err(Error::InvalidInput(format!(
                    "marginals {i} and {j} disagree by {gap} on their overlap; run the consistency step first",
                )));
            }
        }
    }
    Ok(())
}

fn synthesize_component(
    component: &[usize],
    targets: &[&&MarginalTable],
    domain: &Domain,
    n: usize,
    config: &SynthesisConfig,
) -> Result<Dataset> {
    let comp_domain = domain.subset(component)?;
    let remap = |global: usize| component.iter().position(|&a| a == global).unwrap();
    let local_targets: Vec<MarginalTable> = targets
        .iter()
        .map(|t| {
            let attrs: Vec<usize> = t.schema().attrs().iter().map(|&a| remap(a)).collect();
            let mut local =
                MarginalTable::new(MarginalSchema::new(attrs)?, t.sizes().to_vec(), t.counts().to_vec())?;
            local.set_noise_std(t.noise_std());
            Ok(local)
        })
        .collect::<Result<_>>()?;

    // initialize so each column follows its noisy one-way marginal
    let one_ways: Vec<Vec<f64>> = (0..comp_domain.d())
        .map(|a| {
            let covering = local_targets
                .iter()
                .find(|t| t.schema().contains(a))
                .expect("component attribute is covered");
            let one = covering.project(&MarginalSchema::new([a])?)?;
            let total = one.total();
            if total > 0.0 {
                Ok(one.counts().iter().map(|c| c / total).collect())
            } else {
                Ok(vec![1.0 / comp_domain.size(a) as f64; comp_domain.size(a)])
            }
        })
        .collect::<Result<_>>()?;
    let comp_id = component[0];
    let mut ds = random_dataset(
        &comp_domain,
        n,
        Some(&one_ways),
        crate::rng::stable_hash(&[&config.seed.to_le_bytes(), b"component_init", &comp_id.to_le_bytes()]),
    )?;

    let mut rng = derive_rng(config.seed, "component_sweeps", &[comp_id]);
    let mut prev_err = mean_marginal_error(&ds, &local_targets)?;
    for t in 1..=config.iterations {
        let alpha = decay(config.alpha0, t, &config.decay);
        let dup_prob = config.dup_prob(t);
        for target in &local_targets {
            gum_update(&mut ds, target, alpha, dup_prob, &mut rng)?;
        }
        ds.shuffle_rows(&mut rng);
        let err = mean_marginal_error(&ds, &local_targets)?;
        log::info!("component={comp_id} iteration={t} alpha={alpha} mean_l1={err}");
        if prev_err - err < config.convergence_tol {
            break;
        }
        prev_err = err;
    }
    // one more shuffle before the columns are joined
    ds.shuffle_rows(&mut rng);
    Ok(ds)
}

/// Fill the not-yet-synthesized attributes of `marginal` by sampling, per
/// group of records sharing the already-synthesized attribute values, the
/// conditional distribution from the marginal (largest-remainder quota, then
/// a shuffle within the group). With nothing synthesized yet this reduces to
/// quota sampling of the whole marginal.
fn append_from_marginal(
    dataset: &mut Dataset,
    marginal: &MarginalTable,
    synthesized: &mut [bool],
    seed: u64,
) -> Result<()> {
    let attrs = marginal.schema().attrs();
    let known: Vec<usize> = (0..attrs.len()).filter(|&i| synthesized[attrs[i]]).collect();
    let unknown: Vec<usize> = (0..attrs.len()).filter(|&i| !synthesized[attrs[i]]).collect();
    if unknown.is_empty() {
        return Ok(());
    }
    let sizes = marginal.sizes();
    let known_sizes: Vec<usize> = known.iter().map(|&i| sizes[i]).collect();
    let unknown_sizes: Vec<usize> = unknown.iter().map(|&i| sizes[i]).collect();
    let known_len: usize = known_sizes.iter().product();
    let unknown_len: usize = unknown_sizes.iter().product();

    // conditional count matrix: rows indexed by known-cell, cols by unknown-cell
    let mut cond = vec![vec![0.0; unknown_len]; known_len];
    for flat in 0..marginal.len() {
        let digits = cell_decode(sizes, flat)?;
        let k: Vec<u32> = known.iter().map(|&i| digits[i]).collect();
        let u: Vec<u32> = unknown.iter().map(|&i| digits[i]).collect();
        let krow = crate::marginal::cell_encode(&known_sizes, &k)?;
        let ucol = crate::marginal::cell_encode(&unknown_sizes, &u)?;
        cond[krow][ucol] += marginal.counts()[flat];
    }

    // group records by their known-attribute values
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); known_len];
    for r in 0..dataset.n() {
        let k: Vec<u32> = known.iter().map(|&i| dataset.value(r, attrs[i])).collect();
        groups[crate::marginal::cell_encode(&known_sizes, &k)?].push(r);
    }
    let mut rng = derive_rng(seed, "append", attrs);
    for (krow, records) in groups.iter().enumerate() {
        if records.is_empty() {
            continue;
        }
        let quota = largest_remainder(&cond[krow], records.len() as u64);
        let mut assignment: Vec<usize> = Vec::with_capacity(records.len());
        for (ucol, &q) in quota.iter().enumerate() {
            assignment.extend(std::iter::repeat(ucol).take(q as usize));
        }
        assignment.shuffle(&mut rng);
        for (&r, &ucol) in records.iter().zip(&assignment) {
            let uvals = cell_decode(&unknown_sizes, ucol)?;
            for (i, &axis) in unknown.iter().enumerate() {
                dataset.set_value(r, attrs[axis], uvals[i]);
            }
        }
    }
    for &i in &unknown {
        synthesized[attrs[i]] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AttributeSpec;
    use std::sync::Arc;

    fn dom(sizes: &[usize]) -> Domain {
        Domain::new(
            sizes
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    AttributeSpec::categorical(
                        format!("a{i}"),
                        (0..s).map(|v| format!("v{v}")).collect(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    fn table(domain: &Domain, attrs: &[usize], counts: Vec<f64>) -> MarginalTable {
        let schema = MarginalSchema::new(attrs.to_vec()).unwrap();
        let sizes: Vec<usize> = attrs.iter().map(|&a| domain.size(a)).collect();
        MarginalTable::new(schema, sizes, counts).unwrap()
    }

    #[test]
    fn decay_schedules() {
        let step = DecaySchedule::Step { rate: 0.5, step: 10 };
        assert!((decay(0.2, 25, &step) - 0.05).abs() < 1e-12);
        for schedule in [
            step,
            DecaySchedule::Exponential { k: 0.3 },
            DecaySchedule::Linear { k: 0.3 },
            DecaySchedule::Sqrt { k: 0.3 },
        ] {
            assert_eq!(decay(0.2, 0, &schedule), 0.2);
        }
        assert_eq!(decay(0.2, 57, &DecaySchedule::Exponential { k: 0.0 }), 0.2);
    }

    #[test]
    fn step_decay_is_non_increasing() {
        let schedule = DecaySchedule::Step { rate: 0.7, step: 5 };
        let mut prev = f64::INFINITY;
        for t in 0..60 {
            let a = decay(0.2, t, &schedule);
            assert!(a <= prev);
            prev = a;
        }
    }

    #[test]
    fn mcf_replays_flow_example() {
        // current [3, 4, 3] over one ternary attribute, target [5, 3, 2]:
        // one adult and one elderly become teenagers
        let domain = dom(&[3, 2]);
        let mut values = Vec::new();
        for (v, c) in [(0u32, 3), (1, 4), (2, 3)] {
            for i in 0..c {
                values.push(v);
                values.push(i % 2);
            }
        }
        let mut ds = Dataset::new(Arc::new(domain.clone()), values).unwrap();
        let before: Vec<Vec<u32>> = (0..ds.n()).map(|r| ds.row(r).to_vec()).collect();
        let target = table(&domain, &[0], vec![0.5, 0.3, 0.2]);
        let moved = mcf_update(&mut ds, &target).unwrap();
        assert_eq!(moved, 2);
        let m = compute_marginal(&ds, &MarginalSchema::new([0]).unwrap()).unwrap();
        assert_eq!(m.counts(), &[5.0, 3.0, 2.0]);
        // only the schema attribute changed
        for r in 0..ds.n() {
            assert_eq!(ds.value(r, 1), before[r][1]);
        }
    }

    #[test]
    fn mcf_is_a_noop_on_matching_target() {
        let domain = dom(&[2, 2]);
        let ds0 = random_dataset(&domain, 50, None, 3).unwrap();
        let mut ds = ds0.clone();
        let current = compute_marginal(&ds, &MarginalSchema::new([0]).unwrap()).unwrap();
        let moved = mcf_update(&mut ds, &current).unwrap();
        assert_eq!(moved, 0);
        assert_eq!(ds, ds0);
    }

    #[test]
    fn mcf_matches_rounded_target_exactly() {
        // recount oracle on a random 3-attribute dataset and random target
        let domain = dom(&[3, 4, 2]);
        let mut ds = random_dataset(&domain, 223, None, 7).unwrap();
        let raw = [13.7, 40.1, 2.2, 91.0, 30.5, 20.0, 11.1, 9.9, 2.0, 1.0, 0.5, 0.9];
        let target = table(&domain, &[0, 1], raw.to_vec());
        mcf_update(&mut ds, &target).unwrap();
        let m = compute_marginal(&ds, &MarginalSchema::new([0, 1]).unwrap()).unwrap();
        let scaled: Vec<f64> = raw
            .iter()
            .map(|c| c * 223.0 / raw.iter().sum::<f64>())
            .collect();
        let expected = largest_remainder(&scaled, 223);
        let got: Vec<u64> = m.counts().iter().map(|c| *c as u64).collect();
        assert_eq!(got, expected);
    }

    /// The five-record update example: marginal [0, 0, 0.8, 0.2] moved toward
    /// [0, 0, 0.2, 0.8] with alpha = 2 lands on [0, 0, 0.4, 0.6].
    #[test]
    fn gum_replays_update_example() {
        // income x gender x age; records: 4x (high, male, *), 1x (high, female, elderly)
        let domain = Domain::new(vec![
            AttributeSpec::categorical("income", vec!["low".into(), "high".into()]),
            AttributeSpec::categorical("gender", vec!["male".into(), "female".into()]),
            AttributeSpec::categorical(
                "age",
                vec!["teenager".into(), "adult".into(), "elderly".into()],
            ),
        ])
        .unwrap();
        let values = vec![
            1, 0, 0, // high male teenager
            1, 0, 1, // high male adult
            1, 0, 1, // high male adult
            1, 0, 0, // high male teenager
            1, 1, 2, // high female elderly
        ];
        let mut ds = Dataset::new(Arc::new(domain.clone()), values).unwrap();
        let target = table(&domain, &[0, 1], vec![0.0, 0.0, 0.2, 0.8]);
        let mut rng = derive_rng(5, "fig_example", &[]);
        let stats = gum_update(&mut ds, &target, 2.0, 0.5, &mut rng).unwrap();
        assert_eq!(stats.moved(), 2);
        let m = compute_marginal(&ds, &MarginalSchema::new([0, 1]).unwrap()).unwrap();
        assert_eq!(m.counts(), &[0.0, 0.0, 2.0, 3.0]); // = [0, 0, 0.4, 0.6] of 5
        assert_eq!(ds.n(), 5);
    }

    #[test]
    fn gum_noop_when_target_matches() {
        let domain = dom(&[2, 3]);
        let ds0 = random_dataset(&domain, 60, None, 11).unwrap();
        let mut ds = ds0.clone();
        let current = compute_marginal(&ds, &MarginalSchema::new([0, 1]).unwrap()).unwrap();
        let mut rng = derive_rng(1, "noop", &[]);
        let stats = gum_update(&mut ds, &current, 0.5, 0.5, &mut rng).unwrap();
        assert_eq!(stats.moved(), 0);
        assert_eq!(ds, ds0);
    }

    #[test]
    fn gum_zero_count_floor_lets_empty_cells_grow() {
        // every record sits at value 0; the target wants value 1, whose
        // multiplicative cap would be zero without the floor
        let domain = dom(&[2]);
        let mut ds = Dataset::new(Arc::new(domain.clone()), vec![0; 40]).unwrap();
        let target = table(&domain, &[0], vec![20.0, 20.0]);
        let mut rng = derive_rng(2, "floor", &[]);
        let stats = gum_update(&mut ds, &target, 0.2, 0.9, &mut rng).unwrap();
        // floor = ceil(0.2 * 40 / 2) = 4; the first unit must be a replace
        // (no donor yet), later units may duplicate the arrivals
        assert_eq!(stats.moved(), 4);
        assert!(stats.replaced >= 1);
        let m = compute_marginal(&ds, &MarginalSchema::new([0]).unwrap()).unwrap();
        assert_eq!(m.counts(), &[36.0, 4.0]);
    }

    #[test]
    fn gum_preserves_record_count_and_off_schema_attributes() {
        // every post-update row either existed before or differs from a
        // pre-update row only on schema attributes
        let domain = dom(&[3, 3, 2]);
        let ds0 = random_dataset(&domain, 120, None, 13).unwrap();
        let mut ds = ds0.clone();
        let target = table(
            &domain,
            &[0, 1],
            vec![30.0, 5.0, 5.0, 10.0, 20.0, 10.0, 10.0, 10.0, 20.0],
        );
        let mut rng = derive_rng(3, "invariant", &[]);
        gum_update(&mut ds, &target, 0.3, 0.5, &mut rng).unwrap();
        assert_eq!(ds.n(), 120);
        let pre_rows: std::collections::HashSet<Vec<u32>> =
            (0..ds0.n()).map(|r| ds0.row(r).to_vec()).collect();
        for r in 0..ds.n() {
            let row = ds.row(r).to_vec();
            let ok = pre_rows.contains(&row) || {
                // replace path: off-schema attrs match the donor's old row
                let mut donor_old = row.clone();
                donor_old[0] = ds0.value(r, 0);
                donor_old[1] = ds0.value(r, 1);
                donor_old == ds0.row(r)
            };
            assert!(ok, "row {r} has no pre-update explanation");
        }
    }

    #[test]
    fn synthesize_single_one_way_marginal() {
        let domain = dom(&[4]);
        let target = table(&domain, &[0], vec![10.0, 20.0, 30.0, 40.0]);
        let config = SynthesisConfig {
            seed: 5,
            ..Default::default()
        };
        let ds = synthesize(&[target], &domain, 1000, &config).unwrap();
        let m = compute_marginal(&ds, &MarginalSchema::new([0]).unwrap()).unwrap();
        assert_eq!(m.counts(), &[100.0, 200.0, 300.0, 400.0]);
    }

    #[test]
    fn synthesize_disjoint_components_and_independence() {
        // two disjoint 2-way marginals: both matched, and the cross pair is
        // close to the independence product
        let domain = dom(&[2, 2, 2, 2]);
        let n = 4000usize;
        let t01 = table(&domain, &[0, 1], vec![1600.0, 400.0, 400.0, 1600.0]);
        let t23 = table(&domain, &[2, 3], vec![200.0, 1800.0, 1800.0, 200.0]);
        let config = SynthesisConfig {
            seed: 11,
            ..Default::default()
        };
        let ds = synthesize(&[t01.clone(), t23.clone()], &domain, n, &config).unwrap();
        assert_eq!(ds.n(), n);
        let err = mean_marginal_error(&ds, &[t01, t23]).unwrap();
        assert!(err < 0.05, "component targets missed: {err}");
        // cross-component marginal vs independence product
        let m02 = compute_marginal(&ds, &MarginalSchema::new([0, 2]).unwrap()).unwrap();
        let m0 = compute_marginal(&ds, &MarginalSchema::new([0]).unwrap()).unwrap();
        let m2 = compute_marginal(&ds, &MarginalSchema::new([2]).unwrap()).unwrap();
        let prod = crate::marginal::independent_product(&m0, &m2, n as f64).unwrap();
        let gap = l1_distance(&m02, &prod).unwrap() / n as f64;
        assert!(gap < 0.1, "cross-component dependence {gap}");
    }

    #[test]
    fn synthesize_appends_degree_one_attribute_from_two_way() {
        // attributes 0,1 in the core (two marginals), attribute 2 peeled via
        // its single 2-way marginal with attribute 1
        let domain = dom(&[2, 2, 3]);
        let n = 2000usize;
        let t01 = table(&domain, &[0, 1], vec![800.0, 200.0, 200.0, 800.0]);
        let t1 = table(&domain, &[1], vec![1000.0, 1000.0]);
        let t12 = table(
            &domain,
            &[1, 2],
            vec![900.0, 50.0, 50.0, 100.0, 450.0, 450.0],
        );
        let config = SynthesisConfig {
            seed: 23,
            ..Default::default()
        };
        let ds = synthesize(&[t01, t1, t12.clone()], &domain, n, &config).unwrap();
        let m12 = compute_marginal(&ds, &MarginalSchema::new([1, 2]).unwrap()).unwrap();
        let gap = l1_distance(&m12, &t12).unwrap() / n as f64;
        assert!(gap < 0.05, "appended marginal missed: {gap}");
    }

    #[test]
    fn synthesize_rejects_inconsistent_input() {
        let domain = dom(&[2, 2]);
        let t01 = table(&domain, &[0, 1], vec![500.0, 0.0, 0.0, 500.0]);
        let t0 = table(&domain, &[0], vec![100.0, 900.0]); // disagrees with t01
        let err = synthesize(&[t01, t0], &domain, 1000, &SynthesisConfig::default());
        assert!(err.is_err());
        let t_neg = table(&domain, &[0], vec![-5.0, 1005.0]);
        assert!(synthesize(&[t_neg], &domain, 1000, &SynthesisConfig::default()).is_err());
    }

    #[test]
    fn synthesize_is_deterministic_per_seed() {
        let domain = dom(&[2, 3, 2]);
        let t01 = table(&domain, &[0, 1], vec![100.0, 50.0, 50.0, 50.0, 50.0, 100.0]);
        let t12 = table(&domain, &[1, 2], vec![75.0, 75.0, 50.0, 50.0, 75.0, 75.0]);
        let config = SynthesisConfig {
            seed: 31,
            iterations: 20,
            ..Default::default()
        };
        let a = synthesize(&[t01.clone(), t12.clone()], &domain, 400, &config).unwrap();
        let b = synthesize(&[t01.clone(), t12.clone()], &domain, 400, &config).unwrap();
        assert_eq!(a, b);
        let other = SynthesisConfig {
            seed: 32,
            ..config
        };
        let c = synthesize(&[t01, t12], &domain, 400, &other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uncovered_attribute_is_filled_uniformly() {
        let domain = dom(&[2, 4]);
        let t0 = table(&domain, &[0], vec![300.0, 700.0]);
        let config = SynthesisConfig {
            seed: 41,
            ..Default::default()
        };
        let ds = synthesize(&[t0], &domain, 1000, &config).unwrap();
        let m1 = compute_marginal(&ds, &MarginalSchema::new([1]).unwrap()).unwrap();
        for c in m1.counts() {
            assert!((c - 250.0).abs() < 3.0 * (1000.0f64 * 0.25 * 0.75).sqrt());
        }
    }
}
