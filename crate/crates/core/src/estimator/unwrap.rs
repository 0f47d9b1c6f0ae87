//! Phase unwrapping along the pilot-group index.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::wiener::{smooth_complex, BoundaryPolicy};
use crate::{wrap_angle, C64};

/// How per-entry angle sequences are made continuous before WLLS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UnwrapPolicy {
    /// Plain successive-difference unwrapping of the raw angles.
    Sequential,
    /// Unwrap a Wiener-smoothed phasor track, then place each raw angle on
    /// the branch nearest that track. Robust to single noisy groups.
    #[default]
    PhasorReference,
}

/// Adds whole turns so successive differences fall in `[-π, π)`; samples
/// that need no correction are returned bit-exact.
pub fn unwrap_sequence(angles: &[f64]) -> Vec<f64> {
    let mut turns = 0.0;
    let mut prev = None;
    angles
        .iter()
        .map(|&a| {
            if let Some(p) = prev {
                let d: f64 = a - p;
                turns -= ((d - wrap_angle(d)) / TAU).round();
            }
            prev = Some(a);
            if turns == 0.0 { a } else { a + turns * TAU }
        })
        .collect()
}

/// Places `raw[i]` on the `2π` branch closest to the unwrapped angle of the
/// smoothed phasors `samples ⊛ taps`.
pub fn phasor_reference_unwrap(raw: &[f64], samples: &[C64], taps: &[f64], boundary: BoundaryPolicy) -> Vec<f64> {
    let smoothed = smooth_complex(samples, taps, boundary);
    let angles: Vec<f64> = smoothed.iter().map(|z| z.arg()).collect();
    let reference = unwrap_sequence(&angles);
    raw.iter()
        .zip(&reference)
        .map(|(&a, &r)| r + wrap_angle(a - r))
        .collect()
}
