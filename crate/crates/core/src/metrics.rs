//! Reconstruction quality and channel usage.

use serde::Serialize;

use crate::codec::SymbolFrame;
use crate::error::{Error, Result};
use crate::scene::Image;
use crate::toif::Mask;

pub const MAX_VALUE: f64 = 255.0;

/// Side information is charged at this many bits per channel symbol.
pub const SIDE_BITS_PER_SYMBOL: u64 = 4;

/// One pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub image_id: String,
    pub scheme: String,
    pub eta: f64,
    pub snr_db: f64,
    pub seed: u64,
    pub payload_symbols: usize,
    pub side_symbol_equiv: usize,
    pub cbr: f64,
    pub psnr_db: f64,
    /// NaN when the task mask is empty.
    pub tc_psnr_db: f64,
    pub tc_pixel_count: usize,
}

fn check_dims(a: &Image, b: &Image) -> Result<()> {
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    Ok(())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    let sum: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.pixels.len() as f64)
}

/// `10 log10(MAX^2 / MSE)`; infinite for identical images.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (MAX_VALUE * MAX_VALUE / mse).log10()
    }
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// MSE over masked pixels. Every channel sample of a masked pixel counts, so
/// the denominator is `popcount(m) * channels`.
pub fn mse_tc(a: &Image, b: &Image, m: &Mask) -> Result<f64> {
    check_dims(a, b)?;
    if (m.width, m.height) != (a.width, a.height) {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} vs image {}x{}",
            m.width, m.height, a.width, a.height
        )));
    }
    let count = m.popcount();
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    let ch = a.channels;
    let sum: f64 = m
        .bits
        .iter()
        .enumerate()
        .filter(|(_, bit)| **bit)
        .flat_map(|(i, _)| i * ch..(i + 1) * ch)
        .map(|s| {
            let d = a.pixels[s] as f64 - b.pixels[s] as f64;
            d * d
        })
        .sum();
    Ok(sum / (count * ch) as f64)
}

pub fn tc_psnr(a: &Image, b: &Image, m: &Mask) -> Result<f64> {
    mse_tc(a, b, m).map(psnr_from_mse)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Usage {
    pub payload_symbols: usize,
    pub side_symbol_equiv: usize,
    pub cbr: f64,
}

/// Channel usage of a frame for an image of `dimension` samples (W·H·C).
pub fn account(frame: &SymbolFrame, dimension: usize) -> Usage {
    let payload_symbols = frame.symbols.len();
    let side_symbol_equiv = frame.side_bits.div_ceil(SIDE_BITS_PER_SYMBOL) as usize;
    Usage {
        payload_symbols,
        side_symbol_equiv,
        cbr: (payload_symbols + side_symbol_equiv) as f64 / dimension as f64,
    }
}
