//! Data-aided reference estimator (reimplemented): each group's LS channel
//! estimate is held for the rest of its cell, with no phase tracking and no
//! averaging across groups.

use crate::config::{FramePlan, PilotBlock, SymbolKind};
use crate::error::{Error, Result};
use crate::estimator::observe_groups;
use crate::CMat;

/// Label used for this estimator in reports.
pub const BASELINE_LABEL: &str = "DAE (reimplemented)";

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineEstimate {
    pub h_per_group: Vec<CMat>,
}

impl BaselineEstimate {
    /// Channel used for storage column `col`: the estimate of the cell that
    /// contains it, the first cell for prefix columns.
    pub fn channel_at(&self, plan: &FramePlan, col: usize) -> &CMat {
        let cell = match plan.symbol_kind(plan.symbol_at(col)) {
            Ok(SymbolKind::Pilot { group, .. }) => group,
            Ok(SymbolKind::Data { cell, .. }) => cell,
            _ => 1,
        };
        &self.h_per_group[cell - 1]
    }
}

pub fn dae_estimate(y: &CMat, plan: &FramePlan, pilot: &PilotBlock) -> Result<BaselineEstimate> {
    if y.ncols() != plan.l_f {
        return Err(Error::ShapeMismatch(format!("frame has {} columns, expected {}", y.ncols(), plan.l_f)));
    }
    let h_per_group = observe_groups(y, plan, pilot)?.into_iter().map(|g| g.h_hat_i).collect();
    Ok(BaselineEstimate { h_per_group })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airsim::{build_tx_frame, sample_channel, transmit};
    use crate::config::{make_frame_plan, pilot_block, SystemConfig};
    use crate::RMat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_static_is_exact() {
        let cfg = SystemConfig { l_f: 400, ..SystemConfig::default() };
        let plan = make_frame_plan(&cfg).unwrap();
        let pilot = pilot_block(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = sample_channel(2, 2, &mut rng);
        let zeros_r = RMat::zeros(2, cfg.l_f);
        let tx = build_tx_frame(&cfg, &plan, &pilot, &mut rng);
        let y = transmit::<ChaCha8Rng>(&h, &zeros_r, &zeros_r, &tx.s, 0.0, None).unwrap().y;
        let est = dae_estimate(&y, &plan, &pilot).unwrap();
        assert_eq!(est.h_per_group.len(), plan.n_c);
        for col in 0..cfg.l_f {
            assert!((est.channel_at(&plan, col) - &h).camax() < 1e-12);
        }
    }

    #[test]
    fn rejects_short_frame() {
        let cfg = SystemConfig::default();
        let plan = make_frame_plan(&cfg).unwrap();
        assert!(dae_estimate(&CMat::zeros(2, 10), &plan, &pilot_block(2)).is_err());
    }
}
