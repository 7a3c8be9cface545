//! Reproducible per-trial random streams.
//!
//! Every trial `i` of an experiment owns an independent generator seeded with
//! `splitmix64(master_seed + i)`. The generator is xoshiro256++, whose output
//! sequence is fixed by its reference definition, so a given
//! `(master_seed, trial)` pair yields the same samples on every platform and
//! for every thread count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator used for every stochastic step in the crate.
pub type TrialRng = Xoshiro256PlusPlus;

/// One round of the splitmix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngConfig {
    pub master_seed: u64,
}

impl RngConfig {
    pub fn new(master_seed: u64) -> Self {
        RngConfig { master_seed }
    }

    /// Seed of the stream owned by `trial`.
    pub fn trial_seed(&self, trial: u64) -> u64 {
        splitmix64(self.master_seed.wrapping_add(trial))
    }

    pub fn stream(&self, trial: u64) -> TrialRng {
        TrialRng::seed_from_u64(self.trial_seed(trial))
    }

    /// An independent family of streams, e.g. one for graph sampling and
    /// another for seed selection inside the same trial.
    pub fn derive(&self, label: u64) -> RngConfig {
        RngConfig::new(splitmix64(
            self.master_seed ^ label.wrapping_mul(0xD1B5_4A32_D192_ED03),
        ))
    }
}

impl Default for RngConfig {
    fn default() -> Self {
        RngConfig::new(1)
    }
}
