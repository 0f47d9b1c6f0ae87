//! Experiment configuration, frame geometry and the pilot block.
//!
//! Symbol indices are 1-based: `m = 1` is the first pilot symbol after the
//! cyclic prefix, and the prefix occupies `-l_cp + 1 ..= 0`. Frame matrices
//! store symbol `m` in column `m + l_cp - 1`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbol alphabet used for data symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "BPSK")]
    Bpsk,
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "QAM16")]
    Qam16,
}

impl Modulation {
    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "QAM16",
        }
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BPSK" => Ok(Modulation::Bpsk),
            "QPSK" => Ok(Modulation::Qpsk),
            "QAM16" | "16QAM" | "16-QAM" => Ok(Modulation::Qam16),
            other => Err(Error::InvalidConfig(format!("unknown modulation {other:?}"))),
        }
    }
}

/// Single source of truth for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Receive-oscillator innovation variance (rad²).
    pub sigma_dphi_sq: f64,
    /// Transmit-oscillator innovation variance (rad²).
    pub sigma_dpsi_sq: f64,
    /// Complex AWGN variance, `1 / SNR`.
    pub sigma_n_sq: f64,
    pub modulation: Modulation,
    pub l_f: usize,
    pub l_cp: usize,
    pub l_d: usize,
    /// One-sided Wiener tap count; the filter has `2 * l_w + 1` taps.
    pub l_w: usize,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for SystemConfig {
    /// 2×2 QPSK, σ_Δ² = 1e-4 on every oscillator, 10 % pilots, 101 taps,
    /// 3000-symbol frames at 20 dB.
    fn default() -> Self {
        SystemConfig {
            n_t: 2,
            n_r: 2,
            sigma_dphi_sq: 1e-4,
            sigma_dpsi_sq: 1e-4,
            sigma_n_sq: 1e-2,
            modulation: Modulation::Qpsk,
            l_f: 3000,
            l_cp: 0,
            l_d: 18,
            l_w: 50,
            trials: 10_000,
            master_seed: 2021,
        }
    }
}

impl SystemConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.sigma_n_sq.log10()
    }

    /// Sets `sigma_n_sq = 1 / SNR`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.sigma_n_sq = 10f64.powf(-snr_db / 10.0);
        self
    }

    /// Sets both oscillator innovation variances.
    pub fn with_phase_noise(mut self, sigma_delta_sq: f64) -> Self {
        self.sigma_dphi_sq = sigma_delta_sq;
        self.sigma_dpsi_sq = sigma_delta_sq;
        self
    }

    /// Checks the field invariants, including the integer cell count.
    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 {
            return Err(Error::InvalidConfig("n_t must be at least 1".into()));
        }
        if self.n_r < self.n_t {
            return Err(Error::InvalidConfig(format!(
                "n_r ({}) must be at least n_t ({})",
                self.n_r, self.n_t
            )));
        }
        if !(self.sigma_dphi_sq >= 0.0 && self.sigma_dpsi_sq >= 0.0) {
            return Err(Error::InvalidConfig("phase innovation variances must be >= 0".into()));
        }
        if !(self.sigma_n_sq > 0.0) || !self.sigma_n_sq.is_finite() {
            return Err(Error::InvalidConfig("sigma_n_sq must be positive and finite".into()));
        }
        if self.l_cp >= self.l_f {
            return Err(Error::InvalidConfig("l_cp must be shorter than l_f".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        make_frame_plan(self).map(|_| ())
    }
}

/// Derived frame geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub n_t: usize,
    pub l_f: usize,
    pub l_cp: usize,
    /// Pilot symbols per group (always `n_t`).
    pub l_p: usize,
    pub l_c: usize,
    pub n_c: usize,
    pub r_p: f64,
    /// First symbol of each pilot group (1-based).
    pub group_start: Vec<usize>,
    /// Reference symbol `m_i` of each pilot group (1-based).
    pub ref_index: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    CyclicPrefix,
    /// `group` is 1-based, `offset` in `1..=n_t`.
    Pilot { group: usize, offset: usize },
    /// `cell` is 1-based, `offset` in `1..=l_d`.
    Data { cell: usize, offset: usize },
}

pub fn make_frame_plan(config: &SystemConfig) -> Result<FramePlan> {
    let l_p = config.n_t;
    let l_c = l_p + config.l_d;
    let payload = config.l_f.saturating_sub(config.l_cp);
    if payload == 0 || !payload.is_multiple_of(l_c) {
        return Err(Error::NonIntegerCellCount { payload, cell: l_c });
    }
    let n_c = payload / l_c;
    let half = config.n_t.div_ceil(2);
    let group_start = (0..n_c).map(|i| i * l_c + 1).collect();
    let ref_index = (0..n_c).map(|i| i * l_c + half).collect();
    Ok(FramePlan {
        n_t: config.n_t,
        l_f: config.l_f,
        l_cp: config.l_cp,
        l_p,
        l_c,
        n_c,
        r_p: l_p as f64 / l_c as f64,
        group_start,
        ref_index,
    })
}

impl FramePlan {
    pub fn l_d(&self) -> usize {
        self.l_c - self.l_p
    }

    /// Storage column of symbol `m`.
    pub fn column(&self, m: i64) -> usize {
        (m + self.l_cp as i64 - 1) as usize
    }

    /// Symbol index stored in column `col`.
    pub fn symbol_at(&self, col: usize) -> i64 {
        col as i64 - self.l_cp as i64 + 1
    }

    pub fn symbol_kind(&self, m: i64) -> Result<SymbolKind> {
        let lo = -(self.l_cp as i64) + 1;
        let hi = (self.l_f - self.l_cp) as i64;
        if m < lo || m > hi {
            return Err(Error::IndexOutOfFrame { m, lo, hi });
        }
        if m <= 0 {
            return Ok(SymbolKind::CyclicPrefix);
        }
        let j = (m - 1) as usize;
        let cell = j / self.l_c;
        let off = j % self.l_c;
        Ok(if off < self.l_p {
            SymbolKind::Pilot { group: cell + 1, offset: off + 1 }
        } else {
            SymbolKind::Data { cell: cell + 1, offset: off - self.l_p + 1 }
        })
    }

    /// Storage columns of pilot group `i` (0-based group index).
    pub fn pilot_columns(&self, i: usize) -> std::ops::Range<usize> {
        let first = self.column(self.group_start[i] as i64);
        first..first + self.l_p
    }

    /// Storage columns of the data symbols in cell `i` (0-based).
    pub fn data_columns(&self, i: usize) -> std::ops::Range<usize> {
        let first = self.column(self.group_start[i] as i64) + self.l_p;
        first..first + self.l_d()
    }
}

/// Orthogonal unit-modulus pilot matrix; column `m` is sent at the `m`-th
/// symbol of every pilot group, row `l` by transmit antenna `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    pub s: DMatrix<Complex64>,
}

/// Unit-modulus DFT matrix, entry `(k, l) = exp(-j 2π k l / n_t)`.
pub fn pilot_block(n_t: usize) -> PilotBlock {
    let s = DMatrix::from_fn(n_t, n_t, |k, l| {
        let e = ((k * l) % n_t) as f64;
        Complex64::from_polar(1.0, -2.0 * PI * e / n_t as f64)
    });
    PilotBlock { s }
}

impl PilotBlock {
    pub fn n_t(&self) -> usize {
        self.s.nrows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(l_f: usize, n_t: usize, l_d: usize) -> SystemConfig {
        SystemConfig { l_f, n_t, n_r: n_t, l_d, ..SystemConfig::default() }
    }

    #[test]
    fn default_frame_geometry() {
        let plan = make_frame_plan(&cfg(3000, 2, 18)).unwrap();
        assert_eq!(plan.l_c, 20);
        assert_eq!(plan.n_c, 150);
        assert!((plan.r_p - 0.1).abs() < 1e-15);
        assert_eq!(plan.ref_index[0], 1);
        assert_eq!(plan.ref_index[1], 21);
        assert_eq!(plan.group_start.len(), 150);
    }

    #[test]
    fn four_by_four_long_frame() {
        let plan = make_frame_plan(&cfg(100_000, 4, 36)).unwrap();
        assert_eq!(plan.l_c, 40);
        assert_eq!(plan.n_c, 2500);
        assert!((plan.r_p - 0.1).abs() < 1e-15);
        assert_eq!(plan.ref_index[0], 2);
    }

    #[test]
    fn non_integer_cell_count() {
        assert!(make_frame_plan(&cfg(100, 2, 18)).is_ok());
        assert!(matches!(
            make_frame_plan(&cfg(99, 2, 18)),
            Err(Error::NonIntegerCellCount { .. })
        ));
    }

    #[test]
    fn pilot_block_small_cases() {
        let one = pilot_block(1);
        assert_eq!(one.s[(0, 0)], Complex64::new(1.0, 0.0));
        let two = pilot_block(2);
        let expected = [[1.0, 1.0], [1.0, -1.0]];
        for k in 0..2 {
            for l in 0..2 {
                assert!((two.s[(k, l)] - Complex64::new(expected[k][l], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn symbol_kinds() {
        let plan = make_frame_plan(&cfg(3000, 2, 18)).unwrap();
        assert_eq!(plan.symbol_kind(1).unwrap(), SymbolKind::Pilot { group: 1, offset: 1 });
        assert_eq!(plan.symbol_kind(3).unwrap(), SymbolKind::Data { cell: 1, offset: 1 });
        assert_eq!(plan.symbol_kind(21).unwrap(), SymbolKind::Pilot { group: 2, offset: 1 });
        assert!(matches!(plan.symbol_kind(0), Err(Error::IndexOutOfFrame { .. })));
        assert!(matches!(plan.symbol_kind(3001), Err(Error::IndexOutOfFrame { .. })));
    }

    #[test]
    fn cyclic_prefix_indices() {
        let c = SystemConfig { l_f: 3010, l_cp: 10, ..SystemConfig::default() };
        let plan = make_frame_plan(&c).unwrap();
        assert_eq!(plan.symbol_kind(-9).unwrap(), SymbolKind::CyclicPrefix);
        assert_eq!(plan.symbol_kind(0).unwrap(), SymbolKind::CyclicPrefix);
        assert!(plan.symbol_kind(-10).is_err());
        assert_eq!(plan.column(1), 10);
        assert_eq!(plan.symbol_at(10), 1);
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::default().validate().is_ok());
        let bad = SystemConfig { n_r: 1, ..SystemConfig::default() };
        assert!(bad.validate().unwrap_err().is_config());
        let bad = SystemConfig { sigma_n_sq: 0.0, ..SystemConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SystemConfig { sigma_dpsi_sq: -1.0, ..SystemConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let good = serde_json::to_string(&SystemConfig::default()).unwrap();
        assert_eq!(SystemConfig::from_json_str(&good).unwrap(), SystemConfig::default());
        let bad = good.replacen('{', "{\"extra\":1,", 1);
        assert!(SystemConfig::from_json_str(&bad).is_err());
    }

    #[test]
    fn snr_helpers() {
        let c = SystemConfig::default().with_snr_db(10.0);
        assert!((c.sigma_n_sq - 0.1).abs() < 1e-15);
        assert!((c.snr_db() - 10.0).abs() < 1e-12);
    }
}
