//! Uniform discretization of a continuous price range, plus the binary
//! expansion of a level index.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PriceGridSpec {
    pub p_min: f64,
    pub p_max: f64,
    pub bits: u32,
    pub delta: f64,
    pub levels: Vec<f64>,
}

impl PriceGridSpec {
    /// Level whose price is closest to `price`; ties go to the lower level.
    pub fn nearest_level(&self, price: f64) -> usize {
        let raw = ((price - self.p_min) / self.delta).round();
        raw.clamp(0.0, (self.levels.len() - 1) as f64) as usize
    }

    /// Same grid for every EN, in the row layout an `Instance` expects.
    pub fn columns(&self, n: usize) -> Vec<Vec<f64>> {
        vec![self.levels.clone(); n]
    }
}

pub fn discretize_range(p_min: f64, p_max: f64, bits: u32) -> Result<PriceGridSpec> {
    if !(p_min.is_finite() && p_max.is_finite() && p_max > p_min) {
        return Err(CoreError::InvalidArgument(format!("price range [{p_min}, {p_max}] is empty")));
    }
    if !(1..=24).contains(&bits) {
        return Err(CoreError::InvalidArgument(format!("bit count must lie in 1..=24, got {bits}")));
    }
    let count = 1usize << bits;
    let delta = (p_max - p_min) / count as f64;
    let levels = (0..count).map(|l| p_min + delta * l as f64).collect();
    Ok(PriceGridSpec { p_min, p_max, bits, delta, levels })
}

/// Returns `bits + 1` digits, least significant first, with `Σ 2^h·b_h = level`.
pub fn binary_expansion_bits(level: usize, bits: u32) -> Result<Vec<u8>> {
    if bits >= usize::BITS || level >= (1usize << bits) {
        return Err(CoreError::InvalidArgument(format!("level {level} is outside 0..2^{bits}")));
    }
    Ok((0..=bits).map(|h| ((level >> h) & 1) as u8).collect())
}

pub fn level_from_bits(b: &[u8]) -> Result<usize> {
    if b.len() > usize::BITS as usize {
        return Err(CoreError::InvalidArgument(format!("{} bits do not fit a level index", b.len())));
    }
    b.iter().enumerate().try_fold(0usize, |acc, (h, &bit)| match bit {
        0 => Ok(acc),
        1 => Ok(acc | (1 << h)),
        other => Err(CoreError::InvalidArgument(format!("bit {h} has value {other}"))),
    })
}
