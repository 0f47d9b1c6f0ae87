//! Per-trial random streams.
//!
//! Every trial draws from independent ChaCha8 streams keyed by
//! `(master_seed, sweep index, trial index, purpose)`, so results never depend
//! on how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Separate purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel = 0,
    Phase = 1,
    Data = 2,
    Noise = 3,
    Aux = 4,
}

/// Stream for one `(sweep, trial, purpose)` triple.
pub fn trial_rng(master_seed: u64, sweep_index: u64, trial_index: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let stream = (sweep_index << 44) ^ ((trial_index & ((1 << 40) - 1)) << 4) ^ purpose as u64;
    rng.set_stream(stream);
    rng
}

/// The four streams one simulated frame needs.
pub struct TrialStreams {
    pub channel: ChaCha8Rng,
    pub phase: ChaCha8Rng,
    pub data: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(master_seed: u64, sweep_index: u64, trial_index: u64) -> Self {
        TrialStreams {
            channel: trial_rng(master_seed, sweep_index, trial_index, Purpose::Channel),
            phase: trial_rng(master_seed, sweep_index, trial_index, Purpose::Phase),
            data: trial_rng(master_seed, sweep_index, trial_index, Purpose::Data),
            noise: trial_rng(master_seed, sweep_index, trial_index, Purpose::Noise),
        }
    }
}
