//! Fixed inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schottky_core::marking::{random_marking, template_marking};
use schottky_core::normalize::{random_conjugator, scramble};
use schottky_core::{Marking, MoebiusMap};

pub fn template() -> Marking {
    template_marking()
}

pub fn random(k: usize, seed: u64) -> Marking {
    random_marking(k, seed, 0.6).expect("valid rank and radius")
}

/// Conjugated and scrambled copies of the template.
pub fn scrambled_templates(n: usize, seed: u64) -> Vec<Vec<MoebiusMap>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let h = random_conjugator(&mut rng);
            let base: Vec<MoebiusMap> = template_marking().generators.iter().map(|g| g.conjugate_by(&h)).collect();
            let moves = rng.gen_range(0..=3);
            scramble(&base, moves, &mut rng).0
        })
        .collect()
}
