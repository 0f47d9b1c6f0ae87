//! One simulated frame and the metrics it contributes.

use nalgebra::DVector;

use super::{Detector, Metric};
use crate::airsim::{build_tx_frame, equivalent_channel, sample_realization, transmit, ChannelRealization};
use crate::baseline::dae_estimate;
use crate::config::{make_frame_plan, pilot_block, FramePlan, PilotBlock, SystemConfig};
use crate::crlb::{crlb_high_snr, crlb_low_snr, fisher_information, wiener_mse_bound, CrlbProblem};
use crate::decoders::{mld_decode, MmseFilter};
use crate::error::Result;
use crate::estimator::{estimate_frame, inter_group_process_variance, rotate, EstimateBundle, EstimatorOptions};
use crate::modem::Constellation;
use crate::rng::TrialStreams;
use crate::{wrap_angle, CMat, RMat};

/// Immutable per-sweep-point state shared by every trial.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub config: SystemConfig,
    pub plan: FramePlan,
    pub pilot: PilotBlock,
    pub metrics: Vec<Metric>,
    pub detector: Detector,
    pub estimator: EstimatorOptions,
    pub constellation: Constellation,
}

impl TrialContext {
    pub fn new(config: SystemConfig, metrics: Vec<Metric>, detector: Detector, estimator: EstimatorOptions) -> Result<Self> {
        config.validate()?;
        let plan = make_frame_plan(&config)?;
        let pilot = pilot_block(config.n_t);
        let constellation = Constellation::new(config.modulation);
        Ok(TrialContext { config, plan, pilot, metrics, detector, estimator, constellation })
    }
}

/// Metric values of one trial, aligned with `TrialContext::metrics`;
/// `None` where a bound is undefined for this draw.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub values: Vec<Option<f64>>,
}

/// Per-row circular mean of `d`, the quasi-static phase bias.
fn row_offsets(d: &RMat) -> Vec<f64> {
    d.row_iter()
        .map(|r| {
            let (s, c) = r.iter().fold((0.0, 0.0), |(s, c), &x| (s + x.sin(), c + x.cos()));
            s.atan2(c)
        })
        .collect()
}

/// Wrapped estimate error at the reference symbols, per row and group.
fn phase_errors(est: &RMat, truth: &ChannelRealization, plan: &FramePlan) -> RMat {
    RMat::from_fn(est.nrows(), est.ncols(), |q, i| {
        let col = plan.column(plan.ref_index[i] as i64);
        wrap_angle(est[(q, i)] - truth.beta[(q, col)])
    })
}

/// MSE after removing the per-row bias.
fn debiased_mse(d: &RMat) -> f64 {
    let off = row_offsets(d);
    let mut acc = 0.0;
    for q in 0..d.nrows() {
        for i in 0..d.ncols() {
            acc += wrap_angle(d[(q, i)] - off[q]).powi(2);
        }
    }
    acc / d.len() as f64
}

fn mean_sq_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / a.len() as f64
}

/// Counts bit errors over all data symbols when detecting with `channel_at`.
fn count_bit_errors(
    ctx: &TrialContext,
    y: &CMat,
    data_index: &[u16],
    mut channel_at: impl FnMut(usize) -> CMat,
) -> Result<f64> {
    let n_t = ctx.config.n_t;
    let c = &ctx.constellation;
    let mut errors = 0u64;
    let mut k = 0;
    for i in 0..ctx.plan.n_c {
        for col in ctx.plan.data_columns(i) {
            let h = channel_at(col);
            let yv = DVector::from_iterator(y.nrows(), y.column(col).iter().copied());
            let decided = match ctx.detector {
                Detector::Mmse => MmseFilter::new(&h, ctx.config.sigma_n_sq)?.decode(&yv, c),
                Detector::Mld => mld_decode(&yv, &h, c)?,
            };
            for (l, &idx) in decided.indices.iter().enumerate().take(n_t) {
                let sent = data_index[k + l] as u32;
                errors += u64::from((c.labels[idx] ^ c.labels[sent as usize]).count_ones());
            }
            k += n_t;
        }
    }
    let bits = data_index.len() * c.bits_per_symbol;
    Ok(errors as f64 / bits as f64)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Simulates trial `trial_index` of sweep point `sweep_index`.
///
/// Estimation failures fail the trial; undefined bounds only blank the
/// affected metric.
pub fn run_trial(ctx: &TrialContext, sweep_index: u64, trial_index: u64) -> Result<TrialOutcome> {
    let cfg = &ctx.config;
    let plan = &ctx.plan;
    let mut streams = TrialStreams::new(cfg.master_seed, sweep_index, trial_index);
    let truth = sample_realization(cfg, &mut streams.channel, &mut streams.phase);
    let tx = build_tx_frame(cfg, plan, &ctx.pilot, &mut streams.data);
    let rx = transmit(&truth.h, &truth.phi, &truth.psi, &tx.s, cfg.sigma_n_sq, Some(&mut streams.noise))?;

    let est: Option<EstimateBundle> = if ctx.metrics.iter().any(|m| m.needs_estimate()) {
        Some(estimate_frame(&rx.y, plan, cfg, &ctx.pilot, &ctx.estimator)?)
    } else {
        None
    };
    let needs_baseline = ctx.metrics.iter().any(|m| matches!(m, Metric::ChannelMseBaseline | Metric::BerBaseline));
    let base = if needs_baseline { Some(dae_estimate(&rx.y, plan, &ctx.pilot)?) } else { None };

    let crlb_problem = || {
        let col = plan.column(plan.ref_index[0] as i64);
        let psi_ref = truth.psi.column(col).iter().copied().collect();
        CrlbProblem::new(truth.h.clone(), psi_ref, cfg.sigma_n_sq, cfg.sigma_dphi_sq, cfg.sigma_dpsi_sq)
    };
    let oneshot = std::cell::OnceCell::new();
    let oneshot_crlb = || oneshot.get_or_init(|| fisher_information(&crlb_problem()).map(|f| f.crlb).ok()).clone();

    let data_cols = || (0..plan.n_c).flat_map(|i| plan.data_columns(i));
    let mut values = Vec::with_capacity(ctx.metrics.len());
    for &metric in &ctx.metrics {
        let v = match metric {
            Metric::PhaseMseOneshot => {
                let e = est.as_ref().expect("estimate computed");
                Some(debiased_mse(&phase_errors(&e.beta_hat, &truth, plan)))
            }
            Metric::PhaseMseWiener => {
                let e = est.as_ref().expect("estimate computed");
                Some(debiased_mse(&phase_errors(&e.beta_smooth, &truth, plan)))
            }
            Metric::ChannelMse => {
                let e = est.as_ref().expect("estimate computed");
                let bias = row_offsets(&phase_errors(&e.beta_smooth, &truth, plan));
                Some(mean_sq_diff(&e.h_hat, &rotate(&truth.h, &bias, -1.0)?))
            }
            Metric::ChannelMseBaseline => {
                let b = base.as_ref().expect("baseline computed");
                let (sum, n) = data_cols().fold((0.0, 0usize), |(s, n), col| {
                    (s + mean_sq_diff(b.channel_at(plan, col), &truth.equivalent_channel(col)), n + 1)
                });
                Some(sum / n as f64)
            }
            Metric::EquivalentChannelMse => {
                let e = est.as_ref().expect("estimate computed");
                let (sum, n) = data_cols().fold((0.0, 0usize), |(s, n), col| {
                    (s + mean_sq_diff(&e.equivalent_channel(col), &truth.equivalent_channel(col)), n + 1)
                });
                Some(sum / n as f64)
            }
            Metric::BerProposed => {
                let e = est.as_ref().expect("estimate computed");
                Some(count_bit_errors(ctx, &rx.y, &tx.data_index, |col| e.equivalent_channel(col))?)
            }
            Metric::BerPerfectCsi => Some(count_bit_errors(ctx, &rx.y, &tx.data_index, |col| {
                equivalent_channel(&truth.h, &truth.phi, &truth.psi, col)
            })?),
            Metric::BerBaseline => {
                let b = base.as_ref().expect("baseline computed");
                Some(count_bit_errors(ctx, &rx.y, &tx.data_index, |col| b.channel_at(plan, col).clone())?)
            }
            Metric::CrlbOneshot => oneshot_crlb().map(|v| mean(&v)),
            Metric::CrlbWiener => oneshot_crlb().and_then(|v| {
                let pw = inter_group_process_variance(cfg, plan);
                let w: Option<Vec<f64>> = v
                    .iter()
                    .zip(&pw)
                    .map(|(&b, &p)| if p == 0.0 { Some(0.0) } else { wiener_mse_bound(b, p).ok() })
                    .collect();
                w.map(|w| mean(&w))
            }),
            Metric::CrlbLowSnr => crlb_low_snr(&crlb_problem()).ok().map(|v| mean(&v)),
            Metric::CrlbHighSnr => crlb_high_snr(&crlb_problem()).ok().map(|v| mean(&v)),
        };
        values.push(v);
    }
    Ok(TrialOutcome { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(cfg: SystemConfig, metrics: Vec<Metric>) -> TrialContext {
        TrialContext::new(cfg, metrics, Detector::Mmse, EstimatorOptions::default()).unwrap()
    }

    #[test]
    fn deterministic() {
        let c = ctx(SystemConfig { l_f: 600, ..SystemConfig::default() }, Metric::ALL.to_vec());
        assert_eq!(run_trial(&c, 0, 5).unwrap(), run_trial(&c, 0, 5).unwrap());
        assert_ne!(run_trial(&c, 0, 5).unwrap(), run_trial(&c, 0, 6).unwrap());
    }

    #[test]
    fn noiseless_limit_phase_mse() {
        let cfg = SystemConfig { sigma_n_sq: 1e-12, ..SystemConfig::default() }.with_phase_noise(0.0);
        let c = ctx(cfg, vec![Metric::PhaseMseOneshot, Metric::PhaseMseWiener, Metric::ChannelMse]);
        let out = run_trial(&c, 0, 1).unwrap();
        for v in out.values {
            assert!(v.unwrap() < 1e-6);
        }
    }

    #[test]
    fn perfect_csi_ber_at_high_snr() {
        let cfg = SystemConfig::default().with_snr_db(30.0);
        let c = ctx(cfg, vec![Metric::BerPerfectCsi]);
        let ber: f64 = (0..20).map(|t| run_trial(&c, 0, t).unwrap().values[0].unwrap()).sum::<f64>() / 20.0;
        assert!(ber < 1e-3, "{ber}");
    }

    #[test]
    fn undefined_bounds_are_blank() {
        let cfg = SystemConfig { l_f: 200, ..SystemConfig::default() }.with_phase_noise(0.0);
        let c = ctx(cfg, vec![Metric::CrlbHighSnr, Metric::CrlbWiener, Metric::CrlbOneshot]);
        let out = run_trial(&c, 0, 0).unwrap();
        assert_eq!(out.values[0], None);
        assert_eq!(out.values[1], Some(0.0));
        assert!(out.values[2].unwrap() > 0.0);
    }
}
