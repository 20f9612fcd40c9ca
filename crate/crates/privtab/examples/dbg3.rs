use privtab::consistency::enforce_consistency;
use privtab::marginal::{MarginalSchema, MarginalTable};
use privtab::rng::{derive_rng, sample_gaussian};
use rand::Rng;

fn clip_mass(t: &MarginalTable) -> f64 {
    t.counts().iter().filter(|c| **c < 0.0).map(|c| -c).sum()
}

fn main() {
    let config_idx = 8u64;
    let mut rng = derive_rng(1000 + config_idx, "acceptance_consistency", &[]);
    let d = rng.random_range(6..=12usize);
    let sizes: Vec<usize> = (0..d).map(|_| rng.random_range(2..=4usize)).collect();
    let n_marginals = rng.random_range(3..=8usize);
    let n = 5000u64;
    let mut schemas: Vec<Vec<usize>> = Vec::new();
    while schemas.len() < n_marginals {
        let arity = rng.random_range(1..=3usize).min(d);
        let mut attrs: Vec<usize> = Vec::new();
        while attrs.len() < arity {
            let a = rng.random_range(0..d);
            if !attrs.contains(&a) { attrs.push(a); }
        }
        attrs.sort_unstable();
        if !schemas.contains(&attrs) { schemas.push(attrs); }
    }
    let mut tables: Vec<MarginalTable> = schemas.iter().map(|attrs| {
        let t_sizes: Vec<usize> = attrs.iter().map(|&a| sizes[a]).collect();
        let len: usize = t_sizes.iter().product();
        let sigma = 1.0 + 99.0 * rng.random::<f64>();
        let mut weights: Vec<f64> = (0..len).map(|_| rng.random::<f64>().powi(3)).collect();
        let wsum: f64 = weights.iter().sum();
        for w in &mut weights { *w = *w / wsum * n as f64 + sample_gaussian(&mut rng, sigma); }
        let mut t = MarginalTable::new(MarginalSchema::new(attrs.clone()).unwrap(), t_sizes, weights).unwrap();
        t.set_noise_std(Some(sigma));
        t
    }).collect();
    println!("config {config_idx}: d={d} sizes={sizes:?}");
    for (i, t) in tables.iter().enumerate() {
        println!("  table {i}: schema {:?} cells {} sigma {:.1} total {:.1}", t.schema().attrs(), t.len(), t.noise_std().unwrap(), t.total());
    }
    enforce_consistency(&mut tables).unwrap();
    let mut prev = f64::INFINITY;
    for round in 0..2000 {
        let max: f64 = tables.iter().map(clip_mass).fold(0.0, f64::max);
        if round % 100 == 0 || max < 1e-10 {
            println!("  round {round}: mass {max:.6e} ratio {:.4}", max / prev);
        }
        if max < 1e-10 { break; }
        prev = max;
        for t in tables.iter_mut() {
            let neg: f64 = clip_mass(t);
            if neg == 0.0 { continue; }
            let pos: f64 = t.counts().iter().filter(|c| **c > 0.0).sum();
            let scale = neg / pos;
            let newc: Vec<f64> = t.counts().iter().map(|c| if *c < 0.0 { 0.0 } else { c - scale * c }).collect();
            let mut nt = MarginalTable::new(t.schema().clone(), t.sizes().to_vec(), newc).unwrap();
            nt.set_noise_std(t.noise_std());
            *t = nt;
        }
        enforce_consistency(&mut tables).unwrap();
    }
}
