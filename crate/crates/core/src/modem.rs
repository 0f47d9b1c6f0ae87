//! Gray-mapped BPSK, QPSK and 16-QAM with unit average power.
//!
//! Bit groups are read most-significant first, and `points[i]` carries the
//! label `i`, so a point's index is its bit pattern as an integer.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::config::Modulation;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub points: Vec<C64>,
    pub bits_per_symbol: usize,
    /// `labels[i]` is the bit pattern of `points[i]`, MSB = first bit.
    pub labels: Vec<u32>,
}

/// Gray level for a 16-QAM axis from its two bits.
fn qam16_level(b0: u32, b1: u32) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

impl Constellation {
    pub fn new(format: Modulation) -> Self {
        let (bits_per_symbol, points): (usize, Vec<C64>) = match format {
            Modulation::Bpsk => (1, vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]),
            Modulation::Qpsk => (
                2,
                (0..4u32)
                    .map(|i| {
                        let b0 = (i >> 1) & 1;
                        let b1 = i & 1;
                        C64::new(1.0 - 2.0 * b0 as f64, 1.0 - 2.0 * b1 as f64) * FRAC_1_SQRT_2
                    })
                    .collect(),
            ),
            Modulation::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                (
                    4,
                    (0..16u32)
                        .map(|i| {
                            let re = qam16_level((i >> 3) & 1, (i >> 2) & 1);
                            let im = qam16_level((i >> 1) & 1, i & 1);
                            C64::new(re, im) * scale
                        })
                        .collect(),
                )
            }
        };
        let labels = (0..points.len() as u32).collect();
        Constellation { points, bits_per_symbol, labels }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Point index for a bit group (MSB first).
    pub fn index_of_bits(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    /// Appends the bits of `index` to `out`.
    pub fn push_bits(&self, index: usize, out: &mut Vec<u8>) {
        let label = self.labels[index];
        for j in (0..self.bits_per_symbol).rev() {
            out.push(((label >> j) & 1) as u8);
        }
    }
}

pub fn modulate(bits: &[u8], format: Modulation) -> Result<Vec<C64>> {
    let c = Constellation::new(format);
    let b = c.bits_per_symbol;
    if !bits.len().is_multiple_of(b) {
        return Err(Error::BitCountMismatch { bits: bits.len(), per_symbol: b });
    }
    Ok(bits.chunks(b).map(|g| c.points[c.index_of_bits(g)]).collect())
}

pub fn demodulate_hard(symbols: &[C64], format: Modulation) -> Vec<u8> {
    let c = Constellation::new(format);
    let mut out = Vec::with_capacity(symbols.len() * c.bits_per_symbol);
    for &z in symbols {
        c.push_bits(c.nearest(z), &mut out);
    }
    out
}

/// Number of differing positions.
pub fn bit_errors(tx: &[u8], rx: &[u8]) -> Result<usize> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch { left: tx.len(), right: rx.len() });
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| (*a & 1) != (*b & 1)).count())
}

pub fn bit_error_rate(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.is_empty() && rx.is_empty() {
        return Err(Error::EmptyInput("bit streams"));
    }
    Ok(bit_errors(tx, rx)? as f64 / tx.len() as f64)
}
