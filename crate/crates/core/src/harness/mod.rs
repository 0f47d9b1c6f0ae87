//! Monte Carlo experiment runner: sweep definitions, per-trial metrics,
//! deterministic aggregation and CSV/JSON output.

mod emit;
mod sweep;
mod threshold;
mod trial;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use emit::{emit, read_json, write_csv, OutputFormat};
pub use sweep::{aggregate, run_sweep, run_sweep_with_threads, MetricsRecord};
pub use threshold::{snr_at_ber, snr_penalty, HD_FEC_BER};
pub use trial::{run_trial, TrialContext, TrialOutcome};

use crate::config::{Modulation, SystemConfig};
use crate::error::{Error, Result};
use crate::estimator::EstimatorOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SnrDb,
    SigmaDeltaSq,
    PilotRate,
    Modulation,
    Antennas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// One-shot WLLS phase MSE at the reference symbols, bias removed.
    PhaseMseOneshot,
    /// Smoothed phase MSE at the reference symbols, bias removed.
    PhaseMseWiener,
    /// `|Ĥ − H_b|²` with `H_b` the channel rotated by the per-row phase bias.
    ChannelMse,
    /// Held per-group LS estimate against `Φ_m H Ψ_m` over data symbols.
    ChannelMseBaseline,
    /// Composed per-symbol estimate against `Φ_m H Ψ_m` over data symbols.
    EquivalentChannelMse,
    BerProposed,
    BerPerfectCsi,
    BerBaseline,
    CrlbOneshot,
    CrlbWiener,
    CrlbLowSnr,
    CrlbHighSnr,
}

impl Metric {
    pub const ALL: [Metric; 12] = [
        Metric::PhaseMseOneshot,
        Metric::PhaseMseWiener,
        Metric::ChannelMse,
        Metric::ChannelMseBaseline,
        Metric::EquivalentChannelMse,
        Metric::BerProposed,
        Metric::BerPerfectCsi,
        Metric::BerBaseline,
        Metric::CrlbOneshot,
        Metric::CrlbWiener,
        Metric::CrlbLowSnr,
        Metric::CrlbHighSnr,
    ];

    /// Metrics for phase and channel MSE runs.
    pub const MSE_SET: [Metric; 9] = [
        Metric::PhaseMseOneshot,
        Metric::PhaseMseWiener,
        Metric::ChannelMse,
        Metric::ChannelMseBaseline,
        Metric::EquivalentChannelMse,
        Metric::CrlbOneshot,
        Metric::CrlbWiener,
        Metric::CrlbLowSnr,
        Metric::CrlbHighSnr,
    ];

    /// Metrics for BER runs.
    pub const BER_SET: [Metric; 3] = [Metric::BerProposed, Metric::BerPerfectCsi, Metric::BerBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Metric::PhaseMseOneshot => "phase_mse_oneshot",
            Metric::PhaseMseWiener => "phase_mse_wiener",
            Metric::ChannelMse => "channel_mse",
            Metric::ChannelMseBaseline => "channel_mse_baseline",
            Metric::EquivalentChannelMse => "equivalent_channel_mse",
            Metric::BerProposed => "ber_proposed",
            Metric::BerPerfectCsi => "ber_perfect_csi",
            Metric::BerBaseline => "ber_baseline",
            Metric::CrlbOneshot => "crlb_oneshot",
            Metric::CrlbWiener => "crlb_wiener",
            Metric::CrlbLowSnr => "crlb_low_snr",
            Metric::CrlbHighSnr => "crlb_high_snr",
        }
    }

    fn needs_estimate(self) -> bool {
        !matches!(
            self,
            Metric::BerPerfectCsi
                | Metric::ChannelMseBaseline
                | Metric::BerBaseline
                | Metric::CrlbOneshot
                | Metric::CrlbWiener
                | Metric::CrlbLowSnr
                | Metric::CrlbHighSnr
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    #[default]
    Mmse,
    Mld,
}

/// A sweep point: numbers for SNR, variance and pilot rate, text for
/// modulation names and `"NrxNt"` antenna layouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Num(f64),
    Text(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Num(x) => write!(f, "{x}"),
            SweepValue::Text(s) => f.write_str(s),
        }
    }
}

impl SweepValue {
    fn as_num(&self) -> Result<f64> {
        match self {
            SweepValue::Num(x) => Ok(*x),
            SweepValue::Text(s) => s
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("expected a number, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub sweep_variable: SweepVariable,
    pub values: Vec<SweepValue>,
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub detector: Detector,
    #[serde(default)]
    pub estimator: EstimatorOptions,
    /// Write wall-clock seconds; turn off for byte-reproducible output.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_true() -> bool {
    true
}

impl SweepSpec {
    pub fn new(base: SystemConfig, sweep_variable: SweepVariable, values: Vec<SweepValue>, metrics: Vec<Metric>) -> Self {
        SweepSpec {
            base,
            sweep_variable,
            values,
            metrics,
            detector: Detector::default(),
            estimator: EstimatorOptions::default(),
            record_timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep has no values".into()));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("sweep has no metrics".into()));
        }
        for v in &self.values {
            self.config_for(v)?;
        }
        Ok(())
    }

    /// The configuration at one sweep point.
    pub fn config_for(&self, value: &SweepValue) -> Result<SystemConfig> {
        let cfg = apply_sweep_value(&self.base, self.sweep_variable, value)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Keeps the payload a whole number of cells by dropping the remainder.
fn fit_frame(mut cfg: SystemConfig) -> Result<SystemConfig> {
    let l_c = cfg.n_t + cfg.l_d;
    let payload = cfg.l_f.saturating_sub(cfg.l_cp) / l_c * l_c;
    if payload == 0 {
        return Err(Error::InvalidConfig(format!("frame too short for one {l_c}-symbol cell")));
    }
    cfg.l_f = cfg.l_cp + payload;
    Ok(cfg)
}

fn data_len_for_rate(n_t: usize, rate: f64) -> Result<usize> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidConfig(format!("pilot rate {rate} outside (0, 1]")));
    }
    let l_c = n_t as f64 / rate;
    let rounded = l_c.round();
    if (l_c - rounded).abs() > 1e-9 * l_c {
        return Err(Error::InvalidConfig(format!("pilot rate {rate} needs a non-integer cell for n_t = {n_t}")));
    }
    Ok(rounded as usize - n_t)
}

pub fn apply_sweep_value(base: &SystemConfig, var: SweepVariable, value: &SweepValue) -> Result<SystemConfig> {
    let cfg = base.clone();
    match var {
        SweepVariable::SnrDb => Ok(cfg.with_snr_db(value.as_num()?)),
        SweepVariable::SigmaDeltaSq => Ok(cfg.with_phase_noise(value.as_num()?)),
        SweepVariable::PilotRate => {
            let l_d = data_len_for_rate(cfg.n_t, value.as_num()?)?;
            fit_frame(SystemConfig { l_d, ..cfg })
        }
        SweepVariable::Modulation => {
            let m: Modulation = match value {
                SweepValue::Text(s) => s.parse()?,
                SweepValue::Num(_) => return Err(Error::InvalidConfig("modulation must be a name".into())),
            };
            Ok(SystemConfig { modulation: m, ..cfg })
        }
        SweepVariable::Antennas => {
            let (n_r, n_t) = match value {
                SweepValue::Num(x) if *x >= 1.0 && x.fract() == 0.0 => (*x as usize, *x as usize),
                SweepValue::Text(s) => {
                    let parts: Vec<&str> = s.split(['x', 'X']).collect();
                    let parse = |p: &str| {
                        p.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::InvalidConfig(format!("bad antenna layout {s:?}")))
                    };
                    match parts.as_slice() {
                        [a] => (parse(a)?, parse(a)?),
                        [a, b] => (parse(a)?, parse(b)?),
                        _ => return Err(Error::InvalidConfig(format!("bad antenna layout {s:?}"))),
                    }
                }
                SweepValue::Num(x) => return Err(Error::InvalidConfig(format!("bad antenna count {x}"))),
            };
            let rate = base.n_t as f64 / (base.n_t + base.l_d) as f64;
            let l_d = ((n_t as f64 / rate).round() as usize).saturating_sub(n_t).max(1);
            fit_frame(SystemConfig { n_r, n_t, l_d, ..cfg })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_apply() {
        let base = SystemConfig::default();
        let c = apply_sweep_value(&base, SweepVariable::SnrDb, &SweepValue::Num(10.0)).unwrap();
        assert!((c.sigma_n_sq - 0.1).abs() < 1e-15);
        let c = apply_sweep_value(&base, SweepVariable::SigmaDeltaSq, &SweepValue::Num(1e-3)).unwrap();
        assert_eq!((c.sigma_dphi_sq, c.sigma_dpsi_sq), (1e-3, 1e-3));
        let c = apply_sweep_value(&base, SweepVariable::PilotRate, &SweepValue::Num(0.05)).unwrap();
        assert_eq!((c.l_d, c.l_f), (38, 3000));
        let c = apply_sweep_value(&base, SweepVariable::PilotRate, &SweepValue::Num(1.0 / 7.0)).unwrap();
        assert_eq!((c.l_d, c.l_f), (12, 2996));
        let c = apply_sweep_value(&base, SweepVariable::Modulation, &SweepValue::Text("QAM16".into())).unwrap();
        assert_eq!(c.modulation, Modulation::Qam16);
        let c = apply_sweep_value(&base, SweepVariable::Antennas, &SweepValue::Text("4x2".into())).unwrap();
        assert_eq!((c.n_r, c.n_t, c.l_d), (4, 2, 18));
        let c = apply_sweep_value(&base, SweepVariable::Antennas, &SweepValue::Num(4.0)).unwrap();
        assert_eq!((c.n_r, c.n_t, c.l_d, c.l_f), (4, 4, 36, 3000));
        assert!(apply_sweep_value(&base, SweepVariable::PilotRate, &SweepValue::Num(0.3)).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SweepSpec::new(
            SystemConfig::default(),
            SweepVariable::SnrDb,
            vec![SweepValue::Num(0.0), SweepValue::Num(5.0)],
            Metric::MSE_SET.to_vec(),
        );
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SweepSpec>(&s).unwrap(), spec);
        assert!(spec.validate().is_ok());
        let empty = SweepSpec { values: vec![], ..spec };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
    }
}
