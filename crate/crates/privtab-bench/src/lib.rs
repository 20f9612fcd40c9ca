//! Shared fixtures for the pipeline benchmarks.

use std::sync::Arc;

use privtab::domain::{AttributeSpec, Dataset, Domain};
use privtab::marginal::{compute_marginal, MarginalSchema, MarginalTable};
use privtab::privacy::{add_noise, NoiseDistribution};
use privtab::rng::derive_rng;
use rand::Rng;

/// Correlated categorical dataset: each attribute nudges the next.
pub fn chain_dataset(sizes: &[usize], n: usize, seed: u64) -> Dataset {
    let domain = Domain::new(
        sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                AttributeSpec::categorical(format!("a{i}"), (0..s).map(|v| format!("v{v}")).collect())
            })
            .collect(),
    )
    .unwrap();
    let mut rng = derive_rng(seed, "bench_source", &[]);
    let mut values = Vec::with_capacity(n * sizes.len());
    for _ in 0..n {
        let mut prev = rng.random_range(0..sizes[0] as u32);
        values.push(prev);
        for &s in &sizes[1..] {
            let v = (prev + rng.random_range(0..2u32)) % s as u32;
            values.push(v);
            prev = v;
        }
    }
    Dataset::new(Arc::new(domain), values).unwrap()
}

/// All 2-way marginals of the dataset, noised at the given std.
pub fn noisy_two_ways(dataset: &Dataset, std: f64, seed: u64) -> Vec<MarginalTable> {
    let d = dataset.d();
    let mut out = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            let exact = compute_marginal(dataset, &MarginalSchema::new([a, b]).unwrap()).unwrap();
            out.push(add_noise(&exact, std, NoiseDistribution::Gaussian, seed).unwrap());
        }
    }
    out
}
