//! Pilot-aided phase and channel estimation for MIMO links impaired by
//! per-antenna Wiener phase noise.
//!
//! The crate covers the whole experiment chain: frame layout, channel and
//! oscillator simulation, the four-step estimator (amplitude, weighted least
//! squares phase, Wiener smoothing, recovery), Cramér-Rao bounds, a per-symbol
//! complexity model, MIMO detectors, a per-group least-squares baseline, and a
//! deterministic Monte Carlo runner.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airsim;
pub mod baseline;
pub mod complexity;
pub mod config;
pub mod crlb;
pub mod decoders;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod matjson;
pub mod modem;
pub mod rng;

pub use config::{make_frame_plan, pilot_block, FramePlan, Modulation, PilotBlock, SystemConfig};
pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;
pub type RMat = nalgebra::DMatrix<f64>;

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::PI;
    let r = (x + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::wrap_angle;
    use std::f64::consts::PI;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(PI) + PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        for i in -100..100 {
            let w = wrap_angle(i as f64 * 0.37);
            assert!((-PI..PI).contains(&w));
        }
    }
}
