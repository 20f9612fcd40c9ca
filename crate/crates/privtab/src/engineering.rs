//! Marginal-engineering utilities.
//!
//! Tools for shaping the marginal workload before noise is spent: the
//! independent-difference correlation score for ranking attribute pairs,
//! low-count value compression with its threshold rules, group recoding of
//! semantically tied attributes, and the post-synthesis expansion that maps
//! compressed values back to the original domain.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AttributeSpec, Dataset, Domain};
use crate::error::{Error, Result};
use crate::marginal::{compute_marginal, independent_product, l1_distance, MarginalSchema, MarginalTable};
use crate::rng::derive_rng;

/// Correlation proxy for one attribute pair: L1 distance between the 2-way
/// marginal and the independence product of the 1-way marginals, at dataset
/// scale.
pub fn indif(dataset: &Dataset, a: usize, b: usize) -> Result<f64> {
    if a == b {
        return Err(Error::InvalidInput(
            "indif needs two distinct attributes".into(),
        ));
    }
    let joint = compute_marginal(dataset, &MarginalSchema::new([a, b])?)?;
    let ma = compute_marginal(dataset, &MarginalSchema::new([a])?)?;
    let mb = compute_marginal(dataset, &MarginalSchema::new([b])?)?;
    if dataset.n() == 0 {
        return Ok(0.0);
    }
    let product = independent_product(&ma, &mb, dataset.n() as f64)?;
    l1_distance(&joint, &product)
}

/// Score for one attribute pair; symmetric in the pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InDifScore {
    pub pair: (usize, usize),
    pub value: f64,
}

/// All pairwise scores, sorted descending (ties broken by pair indices).
pub fn indif_matrix(dataset: &Dataset) -> Result<Vec<InDifScore>> {
    let d = dataset.d();
    let mut scores = Vec::with_capacity(d * (d - 1) / 2);
    for a in 0..d {
        for b in a + 1..d {
            scores.push(InDifScore {
                pair: (a, b),
                value: indif(dataset, a, b)?,
            });
        }
    }
    scores.sort_by(|x, y| {
        y.value
            .partial_cmp(&x.value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.pair.cmp(&y.pair))
    });
    Ok(scores)
}

/// Threshold rules for compressing low-count values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// max(4.5 sigma, 800)
    Fire,
    /// 3 sigma
    FilterCombine,
}

/// Compression threshold for a given noise std.
pub fn threshold(rule: ThresholdRule, sigma: f64) -> f64 {
    match rule {
        ThresholdRule::Fire => (4.5 * sigma).max(800.0),
        ThresholdRule::FilterCombine => 3.0 * sigma,
    }
}

/// How one attribute's domain is compressed, and how to undo it.
///
/// `kept` values survive with their own compressed index; `grouped` values
/// either share a dummy value (when their summed noisy count clears the
/// threshold) or are dropped to zero. The noisy one-way that produced the map
/// is retained for audit.
#[derive(Debug, Clone)]
pub struct RecodeMap {
    pub attr: usize,
    pub kept: Vec<u32>,
    pub grouped: Vec<u32>,
    /// Index of the dummy in the compressed domain (`kept.len()`), when the
    /// grouped values are represented rather than dropped.
    pub dummy_index: Option<u32>,
    pub one_way: MarginalTable,
    original_spec: AttributeSpec,
}

/// Build a recode map from a noisy one-way marginal: keep values with count
/// above `theta`; pool the rest into a dummy value if their sum clears
/// `theta`, otherwise drop them to zero.
pub fn compress_attribute(
    noisy_one_way: &MarginalTable,
    theta: f64,
    domain: &Domain,
) -> Result<RecodeMap> {
    if noisy_one_way.schema().arity() != 1 {
        return Err(Error::InvalidInput(
            "compression expects a one-way marginal".into(),
        ));
    }
    if theta < 0.0 {
        return Err(Error::InvalidInput(format!(
            "threshold must be non-negative, got {theta}"
        )));
    }
    let attr = noisy_one_way.schema().attrs()[0];
    let spec = domain.attr(attr).clone();
    if noisy_one_way.len() != spec.domain_size() {
        return Err(Error::InvalidInput(format!(
            "one-way marginal has {} cells, attribute {:?} has {}",
            noisy_one_way.len(),
            spec.name,
            spec.domain_size()
        )));
    }
    let mut kept = Vec::new();
    let mut grouped = Vec::new();
    let mut grouped_sum = 0.0;
    for (v, &c) in noisy_one_way.counts().iter().enumerate() {
        if c > theta {
            kept.push(v as u32);
        } else {
            grouped.push(v as u32);
            grouped_sum += c;
        }
    }
    let dummy_index = if !grouped.is_empty() && grouped_sum > theta {
        Some(kept.len() as u32)
    } else {
        None
    };
    if kept.is_empty() && dummy_index.is_none() {
        return Err(Error::EmptyAttribute(spec.name.clone()));
    }
    Ok(RecodeMap {
        attr,
        kept,
        grouped,
        dummy_index,
        one_way: noisy_one_way.clone(),
        original_spec: spec,
    })
}

impl RecodeMap {
    pub fn compressed_size(&self) -> usize {
        self.kept.len() + usize::from(self.dummy_index.is_some())
    }

    pub fn is_identity(&self) -> bool {
        self.grouped.is_empty()
    }

    pub fn original_spec(&self) -> &AttributeSpec {
        &self.original_spec
    }

    /// Attribute spec of the compressed domain: the kept labels, plus a
    /// dummy label when the grouped values are represented.
    pub fn compressed_spec(&self) -> AttributeSpec {
        let mut values: Vec<String> = self
            .kept
            .iter()
            .map(|&v| self.original_spec.decode(v))
            .collect();
        if self.dummy_index.is_some() {
            let mut dummy = String::from("<other>");
            while values.contains(&dummy) {
                dummy.push('_');
            }
            values.push(dummy);
        }
        AttributeSpec::categorical(self.original_spec.name.clone(), values)
    }

    /// Re-encode a dataset from the original domain into the compressed one.
    /// Records holding dropped values (grouped, no dummy) are reassigned to
    /// the kept value with the largest noisy count.
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        let mut forward = vec![u32::MAX; self.original_spec.domain_size()];
        for (i, &v) in self.kept.iter().enumerate() {
            forward[v as usize] = i as u32;
        }
        let fallback = match self.dummy_index {
            Some(d) => d,
            None => {
                // heaviest kept value, by the noisy one-way
                let mut best = 0usize;
                for (i, &v) in self.kept.iter().enumerate() {
                    if self.one_way.counts()[v as usize]
                        > self.one_way.counts()[self.kept[best] as usize]
                    {
                        best = i;
                    }
                }
                best as u32
            }
        };
        for &v in &self.grouped {
            forward[v as usize] = fallback;
        }
        self.remap(dataset, self.compressed_spec(), &forward)
    }

    fn remap(&self, dataset: &Dataset, new_spec: AttributeSpec, forward: &[u32]) -> Result<Dataset> {
        let mut specs = dataset.domain().attributes().to_vec();
        specs[self.attr] = new_spec;
        let new_domain = Arc::new(Domain::new(specs)?);
        let d = dataset.d();
        let mut values = Vec::with_capacity(dataset.n() * d);
        for r in 0..dataset.n() {
            for c in 0..d {
                let v = dataset.value(r, c);
                values.push(if c == self.attr { forward[v as usize] } else { v });
            }
        }
        Dataset::new(new_domain, values)
    }
}

/// Map a synthesized dataset back to the original domain: kept values return
/// to their original indices, dummy occurrences are replaced by grouped
/// values sampled uniformly.
pub fn expand_compressed(synth: &Dataset, map: &RecodeMap, seed: u64) -> Result<Dataset> {
    if map.dummy_index.is_some() && map.grouped.is_empty() {
        return Err(Error::InvalidInput(
            "recode map has a dummy but no grouped values".into(),
        ));
    }
    let compressed_size = map.compressed_size();
    if synth.domain().size(map.attr) != compressed_size {
        return Err(Error::InvalidInput(format!(
            "dataset attribute {} has size {}, recode map expects {}",
            map.attr,
            synth.domain().size(map.attr),
            compressed_size
        )));
    }
    let mut specs = synth.domain().attributes().to_vec();
    specs[map.attr] = map.original_spec.clone();
    let new_domain = Arc::new(Domain::new(specs)?);
    let mut rng = derive_rng(seed, "expand_compressed", &[map.attr]);
    let d = synth.d();
    let mut values = Vec::with_capacity(synth.n() * d);
    for r in 0..synth.n() {
        for c in 0..d {
            let v = synth.value(r, c);
            if c != map.attr {
                values.push(v);
                continue;
            }
            let original = if (v as usize) < map.kept.len() {
                map.kept[v as usize]
            } else {
                map.grouped[rng.random_range(0..map.grouped.len())]
            };
            values.push(original);
        }
    }
    Dataset::new(new_domain, values)
}

/// Restores the attributes combined by [`group_recode`].
#[derive(Debug, Clone)]
pub struct GroupDecodeMap {
    original_domain: Arc<Domain>,
    group: Vec<usize>,
    combos: Vec<Vec<u32>>,
}

impl GroupDecodeMap {
    /// Undo the recoding: rebuild the dataset over the original domain with
    /// every attribute back in its original position.
    pub fn decode(&self, recoded: &Dataset) -> Result<Dataset> {
        let d_orig = self.original_domain.d();
        let kept: Vec<usize> = (0..d_orig).filter(|i| !self.group.contains(i)).collect();
        if recoded.d() != kept.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "recoded dataset has {} attributes, expected {}",
                recoded.d(),
                kept.len() + 1
            )));
        }
        let combined_col = recoded.d() - 1;
        let mut values = vec![0u32; recoded.n() * d_orig];
        for r in 0..recoded.n() {
            for (j, &orig) in kept.iter().enumerate() {
                values[r * d_orig + orig] = recoded.value(r, j);
            }
            let combo = &self.combos[recoded.value(r, combined_col) as usize];
            for (&orig, &v) in self.group.iter().zip(combo) {
                values[r * d_orig + orig] = v;
            }
        }
        Dataset::new(Arc::clone(&self.original_domain), values)
    }
}

/// Recode a group of attributes into one combined attribute whose domain is
/// the set of value combinations observed in the dataset (not the full
/// product). The combined attribute is appended after the remaining ones;
/// the decode map restores the original layout exactly.
pub fn group_recode(
    dataset: &Dataset,
    attrs: &[usize],
) -> Result<(Dataset, AttributeSpec, GroupDecodeMap)> {
    if attrs.len() < 2 {
        return Err(Error::InvalidInput(
            "group recoding needs at least two attributes".into(),
        ));
    }
    let mut sorted = attrs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != attrs.len() {
        return Err(Error::InvalidInput("duplicate attribute in group".into()));
    }
    if sorted.last().copied().unwrap_or(0) >= dataset.d() {
        return Err(Error::InvalidInput("attribute index out of range".into()));
    }
    let mut seen: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
    for r in 0..dataset.n() {
        let combo: Vec<u32> = sorted.iter().map(|&a| dataset.value(r, a)).collect();
        seen.entry(combo).or_insert(0);
    }
    if seen.is_empty() {
        return Err(Error::InvalidInput(
            "cannot recode an empty dataset (no observed combinations)".into(),
        ));
    }
    let combos: Vec<Vec<u32>> = seen.keys().cloned().collect();
    for (i, combo) in combos.iter().enumerate() {
        seen.insert(combo.clone(), i as u32);
    }
    let domain = dataset.domain();
    let name = sorted
        .iter()
        .map(|&a| domain.attr(a).name.as_str())
        .collect::<Vec<_>>()
        .join("+");
    let labels: Vec<String> = combos
        .iter()
        .map(|combo| {
            sorted
                .iter()
                .zip(combo)
                .map(|(&a, &v)| domain.attr(a).decode(v))
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect();
    let combined = AttributeSpec::categorical(name, labels);

    let kept: Vec<usize> = (0..dataset.d()).filter(|i| !sorted.contains(i)).collect();
    let mut specs: Vec<AttributeSpec> = kept.iter().map(|&i| domain.attr(i).clone()).collect();
    specs.push(combined.clone());
    let new_domain = Arc::new(Domain::new(specs)?);
    let d_new = kept.len() + 1;
    let mut values = Vec::with_capacity(dataset.n() * d_new);
    for r in 0..dataset.n() {
        for &i in &kept {
            values.push(dataset.value(r, i));
        }
        let combo: Vec<u32> = sorted.iter().map(|&a| dataset.value(r, a)).collect();
        values.push(seen[&combo]);
    }
    let recoded = Dataset::new(new_domain, values)?;
    let decode = GroupDecodeMap {
        original_domain: dataset.domain_arc(),
        group: sorted,
        combos,
    };
    Ok((recoded, combined, decode))
}

/// The marginal-config document: which marginals to publish, which
/// attributes to compress under which rule, and which groups to recode.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MarginalConfig {
    pub marginals: Vec<Vec<String>>,
    #[serde(default)]
    pub compress: BTreeMap<String, CompressSpec>,
    #[serde(default)]
    pub group_recode: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressSpec {
    pub rule: ThresholdRule,
}

impl MarginalConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(Error::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{load_csv, random_dataset};
    use crate::marginal::compute_marginal;

    fn binary_pair_dataset(rows: &[(u32, u32)]) -> Dataset {
        let domain = Domain::new(vec![
            AttributeSpec::categorical("a", vec!["0".into(), "1".into()]),
            AttributeSpec::categorical("b", vec!["0".into(), "1".into()]),
        ])
        .unwrap();
        let values: Vec<u32> = rows.iter().flat_map(|&(a, b)| [a, b]).collect();
        Dataset::new(Arc::new(domain), values).unwrap()
    }

    #[test]
    fn indif_of_perfectly_correlated_pair() {
        // joint [2,0;0,2] vs product [1,1;1,1]
        let ds = binary_pair_dataset(&[(0, 0), (0, 0), (1, 1), (1, 1)]);
        assert_eq!(indif(&ds, 0, 1).unwrap(), 4.0);
        assert_eq!(indif(&ds, 1, 0).unwrap(), 4.0);
    }

    #[test]
    fn indif_of_product_dataset_is_bounded_by_sampling_noise() {
        // full product construction has InDif 0; an i.i.d. sample stays
        // within 4 sqrt(n)
        let domain = Domain::new(vec![
            AttributeSpec::categorical("a", vec!["0".into(), "1".into(), "2".into()]),
            AttributeSpec::categorical("b", vec!["0".into(), "1".into()]),
        ])
        .unwrap();
        let mut rows = Vec::new();
        for a in 0..3u32 {
            for b in 0..2u32 {
                for _ in 0..50 {
                    rows.push(a);
                    rows.push(b);
                }
            }
        }
        let exact = Dataset::new(Arc::new(domain.clone()), rows).unwrap();
        assert!(indif(&exact, 0, 1).unwrap() < 1e-9);

        let n = 10_000;
        let sampled = random_dataset(&domain, n, None, 17).unwrap();
        let bound = 4.0 * (n as f64).sqrt();
        let v = indif(&sampled, 0, 1).unwrap();
        assert!(v <= bound, "indif {v} above bound {bound}");
    }

    #[test]
    fn indif_is_relabel_invariant() {
        let ds = binary_pair_dataset(&[(0, 0), (0, 1), (1, 1), (1, 1), (0, 0)]);
        // permute attribute b's labels (swap 0 and 1)
        let swapped: Vec<(u32, u32)> = (0..ds.n())
            .map(|r| (ds.value(r, 0), 1 - ds.value(r, 1)))
            .collect();
        let ds2 = binary_pair_dataset(&swapped);
        assert!((indif(&ds, 0, 1).unwrap() - indif(&ds2, 0, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn indif_matrix_sizes_and_ranking() {
        let domain = Domain::new(vec![AttributeSpec::categorical(
            "only",
            vec!["x".into(), "y".into()],
        )])
        .unwrap();
        let ds = random_dataset(&domain, 10, None, 1).unwrap();
        assert!(indif_matrix(&ds).unwrap().is_empty());

        // three attributes: c copies a (planted correlation), b independent
        let domain = Domain::new(vec![
            AttributeSpec::categorical("a", vec!["0".into(), "1".into()]),
            AttributeSpec::categorical("b", vec!["0".into(), "1".into()]),
            AttributeSpec::categorical("c", vec!["0".into(), "1".into()]),
        ])
        .unwrap();
        let base = random_dataset(&domain, 2_000, None, 5).unwrap();
        let values: Vec<u32> = (0..base.n())
            .flat_map(|r| [base.value(r, 0), base.value(r, 1), base.value(r, 0)])
            .collect();
        let planted = Dataset::new(Arc::new(domain), values).unwrap();
        let scores = indif_matrix(&planted).unwrap();
        assert_eq!(scores.len(), 3);
        assert_eq!(scores[0].pair, (0, 2), "planted pair must rank first");
    }

    #[test]
    fn threshold_rules() {
        assert_eq!(threshold(ThresholdRule::Fire, 100.0), 800.0);
        assert_eq!(threshold(ThresholdRule::Fire, 200.0), 900.0);
        assert_eq!(threshold(ThresholdRule::FilterCombine, 50.0), 150.0);
    }

    fn one_way(counts: Vec<f64>, labels: &[&str]) -> (MarginalTable, Domain) {
        let domain = Domain::new(vec![AttributeSpec::categorical(
            "attr",
            labels.iter().map(|s| s.to_string()).collect(),
        )])
        .unwrap();
        let table = MarginalTable::new(
            MarginalSchema::new([0]).unwrap(),
            vec![counts.len()],
            counts,
        )
        .unwrap();
        (table, domain)
    }

    #[test]
    fn compress_drops_group_below_threshold() {
        let (t, domain) = one_way(vec![900.0, 50.0, 40.0], &["a", "b", "c"]);
        let map = compress_attribute(&t, 800.0, &domain).unwrap();
        assert_eq!(map.kept, vec![0]);
        assert_eq!(map.grouped, vec![1, 2]);
        assert_eq!(map.dummy_index, None); // 90 <= 800, dropped
        assert_eq!(map.compressed_size(), 1);
    }

    #[test]
    fn compress_keeps_group_above_threshold() {
        let (t, domain) = one_way(vec![900.0, 500.0, 400.0], &["a", "b", "c"]);
        let map = compress_attribute(&t, 800.0, &domain).unwrap();
        assert_eq!(map.kept, vec![0]);
        assert_eq!(map.dummy_index, Some(1)); // 900 > 800, dummy
        assert_eq!(map.compressed_size(), 2);
    }

    #[test]
    fn compress_zero_threshold_is_identity() {
        let (t, domain) = one_way(vec![10.0, 20.0, 5.0], &["a", "b", "c"]);
        let map = compress_attribute(&t, 0.0, &domain).unwrap();
        assert_eq!(map.kept, vec![0, 1, 2]);
        assert!(map.is_identity());
        assert_eq!(map.dummy_index, None);
    }

    #[test]
    fn compress_everything_below_threshold_is_an_error() {
        let (t, domain) = one_way(vec![1.0, 2.0], &["a", "b"]);
        assert!(matches!(
            compress_attribute(&t, 100.0, &domain),
            Err(Error::EmptyAttribute(_))
        ));
    }

    #[test]
    fn expand_identity_map_is_pure_remap() {
        let (t, domain) = one_way(vec![3.0, 2.0], &["a", "b"]);
        let map = compress_attribute(&t, 0.0, &domain).unwrap();
        let csv = "attr\na\nb\nb\n";
        let ds = load_csv(csv, &domain).unwrap();
        let compressed = map.apply(&ds).unwrap();
        let expanded = expand_compressed(&compressed, &map, 1).unwrap();
        assert_eq!(expanded, ds);
    }

    #[test]
    fn expand_splits_dummy_uniformly() {
        // values {3,4} grouped behind a dummy; 1000 dummy records split
        // roughly in half (binomial, checked at a fixed seed)
        let (t, domain) = one_way(
            vec![5000.0, 4000.0, 3000.0, 400.0, 500.0],
            &["a", "b", "c", "d", "e"],
        );
        let map = compress_attribute(&t, 800.0, &domain).unwrap();
        assert_eq!(map.grouped, vec![3, 4]);
        let dummy = map.dummy_index.unwrap();
        let compressed_domain =
            Domain::new(vec![map.compressed_spec()]).unwrap();
        let values = vec![dummy; 1000];
        let synth = Dataset::new(Arc::new(compressed_domain), values).unwrap();
        let expanded = expand_compressed(&synth, &map, 99).unwrap();
        let m = compute_marginal(&expanded, &MarginalSchema::new([0]).unwrap()).unwrap();
        let d_count = m.counts()[3];
        let e_count = m.counts()[4];
        assert_eq!(d_count + e_count, 1000.0);
        assert!((d_count - 500.0).abs() <= 50.0, "d got {d_count}");
    }

    #[test]
    fn expand_empty_dataset() {
        let (t, domain) = one_way(vec![900.0, 850.0], &["a", "b"]);
        let map = compress_attribute(&t, 800.0, &domain).unwrap();
        let compressed_domain = Domain::new(vec![map.compressed_spec()]).unwrap();
        let synth = Dataset::empty(Arc::new(compressed_domain));
        let expanded = expand_compressed(&synth, &map, 1).unwrap();
        assert_eq!(expanded.n(), 0);
    }

    #[test]
    fn compress_expand_preserves_kept_counts() {
        let (t, domain) = one_way(
            vec![900.0, 850.0, 10.0, 20.0, 900.0],
            &["a", "b", "c", "d", "e"],
        );
        let map = compress_attribute(&t, 800.0, &domain).unwrap();
        assert_eq!(map.kept, vec![0, 1, 4]);
        assert_eq!(map.dummy_index, None); // 30 <= 800
        let csv = "attr\na\na\nb\ne\ne\ne\n";
        let ds = load_csv(csv, &domain).unwrap();
        let compressed = map.apply(&ds).unwrap();
        let expanded = expand_compressed(&compressed, &map, 3).unwrap();
        let before = compute_marginal(&ds, &MarginalSchema::new([0]).unwrap()).unwrap();
        let after = compute_marginal(&expanded, &MarginalSchema::new([0]).unwrap()).unwrap();
        for &v in &map.kept {
            assert_eq!(before.counts()[v as usize], after.counts()[v as usize]);
        }
        assert_eq!(before.total(), after.total());
    }

    #[test]
    fn group_recode_uses_observed_combinations() {
        // two binary attributes, only 3 combos observed
        let ds = binary_pair_dataset(&[(0, 0), (0, 1), (1, 0), (0, 0)]);
        let (recoded, combined, decode) = group_recode(&ds, &[0, 1]).unwrap();
        assert_eq!(combined.domain_size(), 3);
        assert_eq!(recoded.d(), 1);
        let back = decode.decode(&recoded).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn group_recode_full_product_when_all_observed() {
        // sizes 2 and 10 with every combination present -> combined size 20
        let domain = Domain::new(vec![
            AttributeSpec::categorical("als", vec!["no".into(), "yes".into()]),
            AttributeSpec::categorical(
                "unit",
                (0..10).map(|i| format!("u{i}")).collect(),
            ),
        ])
        .unwrap();
        let mut values = Vec::new();
        for a in 0..2u32 {
            for b in 0..10u32 {
                values.push(a);
                values.push(b);
            }
        }
        let ds = Dataset::new(Arc::new(domain), values).unwrap();
        let (_, combined, _) = group_recode(&ds, &[0, 1]).unwrap();
        assert_eq!(combined.domain_size(), 20);
    }

    #[test]
    fn group_recode_marginals_restore_originals() {
        let domain = Domain::new(vec![
            AttributeSpec::categorical("a", vec!["0".into(), "1".into()]),
            AttributeSpec::categorical("b", vec!["0".into(), "1".into(), "2".into()]),
            AttributeSpec::categorical("c", vec!["0".into(), "1".into()]),
        ])
        .unwrap();
        let ds = random_dataset(&domain, 500, None, 21).unwrap();
        let (recoded, _, decode) = group_recode(&ds, &[0, 2]).unwrap();
        let back = decode.decode(&recoded).unwrap();
        for attr in [0usize, 2] {
            let before = compute_marginal(&ds, &MarginalSchema::new([attr]).unwrap()).unwrap();
            let after = compute_marginal(&back, &MarginalSchema::new([attr]).unwrap()).unwrap();
            assert_eq!(before.counts(), after.counts());
        }
    }

    #[test]
    fn marginal_config_parses() {
        let text = r#"{
            "marginals": [["Gender", "Age"], ["Age"]],
            "compress": {"City": {"rule": "fire"}},
            "group_recode": [["ALS", "UnitType"]]
        }"#;
        let cfg = MarginalConfig::from_json(text).unwrap();
        assert_eq!(cfg.marginals.len(), 2);
        assert_eq!(cfg.compress["City"].rule, ThresholdRule::Fire);
        assert_eq!(cfg.group_recode, vec![vec!["ALS", "UnitType"]]);
    }
}
