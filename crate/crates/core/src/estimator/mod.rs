//! Four-step pilot-aided estimator: amplitude, WLLS phase, Wiener smoothing,
//! recovery with averaging and per-symbol composition.

pub mod amplitude;
pub mod recovery;
pub mod unwrap;
pub mod wiener;
pub mod wlls;

use serde::{Deserialize, Serialize};

pub use amplitude::{
    amplitude_finalize, amplitude_sq_aggregate, amplitude_sq_online, average_channel_online, observe_groups,
    per_group_ls, GroupObservation, OnlineState,
};
pub use recovery::{average_channel, compose_equivalent_channel, interpolate_beta, recover_group_channel, rotate};
pub use unwrap::{phasor_reference_unwrap, unwrap_sequence, UnwrapPolicy};
pub use wiener::{wiener_coefficients, wiener_smooth, BoundaryPolicy, WienerFilter};
pub use wlls::{build_c_matrix, inter_group_process_variance, wlls_noise_variance, wlls_solve, WllsSystem};

use crate::config::{FramePlan, PilotBlock, SystemConfig};
use crate::error::{Error, Result};
use crate::{CMat, RMat, C64};

/// Batch averaging over the frame, or exponential running averages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum AveragingMode {
    #[default]
    Batch,
    /// `k_factor = None` uses `2 / (n_c + 1)`.
    Online { k_factor: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub unwrap: UnwrapPolicy,
    pub boundary: BoundaryPolicy,
    pub averaging: AveragingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    #[serde(with = "crate::matjson::real")]
    pub amp: RMat,
    #[serde(with = "crate::matjson::real")]
    pub beta_hat: RMat,
    #[serde(with = "crate::matjson::real")]
    pub beta_smooth: RMat,
    #[serde(with = "crate::matjson::complex")]
    pub h_hat: CMat,
    #[serde(with = "crate::matjson::real")]
    pub beta_interp: RMat,
    /// Per-row WLLS noise variance used by the smoother.
    pub noise_var: Vec<f64>,
    /// Per-row inter-group walk variance used by the smoother.
    pub process_var: Vec<f64>,
}

impl EstimateBundle {
    /// Estimated `Φ_m H Ψ_m` at storage column `col`.
    pub fn equivalent_channel(&self, col: usize) -> CMat {
        let beta: Vec<f64> = self.beta_interp.column(col).iter().copied().collect();
        rotate(&self.h_hat, &beta, 1.0).expect("bundle shapes are consistent")
    }
}

/// Unwrapped per-group angle matrices under `policy`.
pub fn unwrap_groups(
    groups: &[GroupObservation],
    amp: &RMat,
    config: &SystemConfig,
    plan: &FramePlan,
    options: &EstimatorOptions,
) -> Result<Vec<RMat>> {
    let (n_r, n_t) = amp.shape();
    let n_c = groups.len();
    let mut out = vec![RMat::zeros(n_r, n_t); n_c];
    let process = plan.l_c as f64 * (config.sigma_dphi_sq + config.sigma_dpsi_sq);
    for k in 0..n_r {
        for l in 0..n_t {
            let raw: Vec<f64> = groups.iter().map(|g| g.a_i[(k, l)]).collect();
            let unwrapped = match options.unwrap {
                UnwrapPolicy::Sequential => unwrap_sequence(&raw),
                UnwrapPolicy::PhasorReference => {
                    let a = amp[(k, l)].max(1e-6);
                    let noise = config.sigma_n_sq / (2.0 * n_t as f64 * a * a);
                    let taps = match wiener_coefficients(config.l_w, process, noise) {
                        Err(Error::SingularK) => wiener::delta_taps(config.l_w),
                        other => other?,
                    };
                    let samples: Vec<C64> = groups.iter().map(|g| g.h_hat_i[(k, l)]).collect();
                    phasor_reference_unwrap(&raw, &samples, &taps, options.boundary)
                }
            };
            for (i, v) in unwrapped.into_iter().enumerate() {
                out[i][(k, l)] = v;
            }
        }
    }
    Ok(out)
}

/// Runs the full pipeline on one received frame.
pub fn estimate_frame(
    y: &CMat,
    plan: &FramePlan,
    config: &SystemConfig,
    pilot: &PilotBlock,
    options: &EstimatorOptions,
) -> Result<EstimateBundle> {
    if y.nrows() != config.n_r || pilot.n_t() != config.n_t {
        return Err(Error::ShapeMismatch(format!(
            "frame has {} rows for n_r = {}, pilot is for n_t = {}",
            y.nrows(),
            config.n_r,
            pilot.n_t()
        )));
    }
    let groups = observe_groups(y, plan, pilot)?;

    // Step 1: amplitude.
    let online_k = match options.averaging {
        AveragingMode::Batch => None,
        AveragingMode::Online { k_factor } => Some(k_factor.unwrap_or_else(|| OnlineState::default_k(plan.n_c))),
    };
    let amp_sq = match online_k {
        None => amplitude_sq_aggregate(&groups, config.sigma_n_sq)?,
        Some(k) => {
            let mut state = OnlineState::new(config.n_r, config.n_t, k)?;
            for g in &groups {
                state = amplitude_sq_online(&state, g, config.sigma_n_sq);
            }
            state.amp_sq
        }
    };
    let amp = amplitude_finalize(&amp_sq);

    // Step 2: WLLS phases per group.
    let process_var = inter_group_process_variance(config, plan);
    let system = WllsSystem::new(&amp, config.sigma_n_sq, process_var)?;
    let unwrapped = unwrap_groups(&groups, &amp, config, plan, options)?;
    let beta_hat = wlls_solve(&system, &unwrapped);

    // Step 3: element-wise Wiener smoothing.
    let filter = WienerFilter::new(config.l_w, &system.process_var, &system.noise_var)?;
    let beta_smooth = wiener_smooth(&beta_hat, &filter, options.boundary)?;

    // Step 4: recovery, averaging, interpolation.
    let recovered: Vec<CMat> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let col: Vec<f64> = beta_smooth.column(i).iter().copied().collect();
            rotate(&g.h_hat_i, &col, -1.0)
        })
        .collect::<Result<_>>()?;
    let h_hat = match online_k {
        None => average_channel(&recovered)?,
        Some(k) => {
            let mut state = OnlineState::new(config.n_r, config.n_t, k)?;
            for h in &recovered {
                state = average_channel_online(&state, h);
            }
            state.h_run
        }
    };
    let beta_interp = interpolate_beta(&beta_smooth, plan)?;

    Ok(EstimateBundle {
        amp,
        beta_hat,
        beta_smooth,
        h_hat,
        beta_interp,
        noise_var: system.noise_var,
        process_var: system.process_var,
    })
}
