//! Deterministic random number generation.
//!
//! Every randomized stage derives its own generator from the single run seed,
//! a stage name, and a stable identifier (usually the attribute indices of a
//! marginal schema). The derivation uses FNV-1a rather than the standard
//! library hasher so that seeds are identical across platforms and compiler
//! versions. Noise is sampled through explicit transforms (inverse CDF for
//! Laplace, Box-Muller for Gaussian) so output streams are byte-reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a sequence of byte slices.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        // separator keeps ("ab","c") distinct from ("a","bc")
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Derive a generator for one stage from the run seed, a stage name, and a
/// stable id (e.g. schema attribute indices).
pub fn derive_rng(seed: u64, stage: &str, id: &[usize]) -> ChaCha12Rng {
    let id_bytes: Vec<u8> = id.iter().flat_map(|&i| (i as u64).to_le_bytes()).collect();
    let h = stable_hash(&[&seed.to_le_bytes(), stage.as_bytes(), &id_bytes]);
    ChaCha12Rng::seed_from_u64(h)
}

/// Laplace sample with the given scale, via inverse CDF.
pub fn sample_laplace<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    let mut u: f64 = rng.random();
    while u == 0.0 {
        u = rng.random();
    }
    let v = u - 0.5;
    -scale * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}

/// Gaussian sample with the given standard deviation, via Box-Muller.
pub fn sample_gaussian<R: Rng>(rng: &mut R, std: f64) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    std * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
