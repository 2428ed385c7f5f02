//! Reference joint source-channel codec.
//!
//! The transmitter splits the (masked) image into 8x8 blocks, applies an
//! orthonormal cosine transform, decides per block how many coefficients to
//! send from an entropy proxy of the block's AC energy, and emits the leading
//! zig-zag coefficients as analog channel symbols scaled to unit average
//! power. Block flags, per-block rates and the gain travel as error-free side
//! information. The receiver undoes the scaling, optionally refines the noisy
//! coefficients with a linear MMSE estimate, and inverts the transform.

pub mod dct;
pub mod zigzag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Image;
use crate::toif::Mask;

use self::zigzag::ZIGZAG;

pub const BLOCK_SIZE: usize = dct::N;
pub const BLOCK_AREA: usize = BLOCK_SIZE * BLOCK_SIZE;

/// Side-information field widths, in bits.
pub const CODED_FLAG_BITS: u64 = 1;
pub const RATE_BITS: u64 = 6;
pub const GAIN_BITS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationScheme {
    /// Entropy-guided per-block rates.
    Variable,
    /// Same rate for every block, mask ignored.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConfig {
    pub eta: f64,
    pub k_min: usize,
    pub scheme: AllocationScheme,
}

impl RateConfig {
    pub fn new(eta: f64, k_min: usize, scheme: AllocationScheme) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be positive, got {eta}"
            )));
        }
        if k_min == 0 || k_min > BLOCK_AREA {
            return Err(Error::InvalidConfig(format!(
                "k_min must lie in [1, {BLOCK_AREA}], got {k_min}"
            )));
        }
        Ok(RateConfig { eta, k_min, scheme })
    }

    pub fn variable(eta: f64) -> Result<Self> {
        Self::new(eta, 1, AllocationScheme::Variable)
    }

    pub fn uniform(eta: f64) -> Result<Self> {
        Self::new(eta, 1, AllocationScheme::Uniform)
    }
}

/// Geometry shared by transmitter and receiver. The receiver is assumed to
/// know it out of band; it is not transmitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
}

impl FrameLayout {
    pub fn for_image(width: usize, height: usize, channels: usize) -> Self {
        FrameLayout {
            width,
            height,
            channels,
            blocks_x: width.div_ceil(BLOCK_SIZE),
            blocks_y: height.div_ceil(BLOCK_SIZE),
        }
    }

    pub fn blocks(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    pub fn padded_width(&self) -> usize {
        self.blocks_x * BLOCK_SIZE
    }

    pub fn padded_height(&self) -> usize {
        self.blocks_y * BLOCK_SIZE
    }
}

/// Transform coefficients of every block, `coeffs[block * channels + ch]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLatents {
    pub layout: FrameLayout,
    pub coeffs: Vec<[f64; BLOCK_AREA]>,
    pub coded: Vec<bool>,
}

impl BlockLatents {
    pub fn block(&self, block: usize, channel: usize) -> &[f64; BLOCK_AREA] {
        &self.coeffs[block * self.layout.channels + channel]
    }

    pub fn coded_blocks(&self) -> usize {
        self.coded.iter().filter(|c| **c).count()
    }

    /// Sum of squared AC coefficients of `block` over all channels.
    pub fn ac_energy(&self, block: usize) -> f64 {
        (0..self.layout.channels)
            .map(|ch| {
                self.block(block, ch)[1..]
                    .iter()
                    .map(|c| c * c)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Maps the image to per-block transform coefficients.
///
/// Edges are padded by replication up to a multiple of the block size and
/// samples are centred on zero before the transform. With a mask, a block is
/// coded iff at least one of its pixels is set; without one every block is.
pub fn analysis(img: &Image, mask: Option<&Mask>) -> Result<BlockLatents> {
    if let Some(m) = mask {
        if (m.width, m.height) != (img.width, img.height) {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs image {}x{}",
                m.width, m.height, img.width, img.height
            )));
        }
    }
    let layout = FrameLayout::for_image(img.width, img.height, img.channels);
    let mut coeffs = Vec::with_capacity(layout.blocks() * layout.channels);
    let mut coded = Vec::with_capacity(layout.blocks());

    for by in 0..layout.blocks_y {
        for bx in 0..layout.blocks_x {
            for ch in 0..img.channels {
                let mut block = [0.0; BLOCK_AREA];
                for y in 0..BLOCK_SIZE {
                    let row = (by * BLOCK_SIZE + y).min(img.height - 1);
                    for x in 0..BLOCK_SIZE {
                        let col = (bx * BLOCK_SIZE + x).min(img.width - 1);
                        block[y * BLOCK_SIZE + x] = img.sample(row, col, ch) as f64 - 128.0;
                    }
                }
                coeffs.push(dct::forward(&block));
            }
            coded.push(match mask {
                None => true,
                Some(m) => block_touches_mask(m, bx, by),
            });
        }
    }
    Ok(BlockLatents {
        layout,
        coeffs,
        coded,
    })
}

fn block_touches_mask(mask: &Mask, bx: usize, by: usize) -> bool {
    let rows = by * BLOCK_SIZE..((by + 1) * BLOCK_SIZE).min(mask.height);
    let cols = bx * BLOCK_SIZE..((bx + 1) * BLOCK_SIZE).min(mask.width);
    rows.into_iter()
        .any(|r| cols.clone().any(|c| mask.get(r, c)))
}

/// Coefficients per block; `None` marks an uncoded block.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    pub rates: Vec<Option<u8>>,
    /// Entropy proxy `log2(1 + E_b)` in bits, zero for uncoded blocks.
    pub entropy_bits: Vec<f64>,
}

impl RateAllocation {
    pub fn total_rate(&self) -> usize {
        self.rates.iter().flatten().map(|k| *k as usize).sum()
    }
}

fn clamp_rate(raw: f64, k_min: usize) -> u8 {
    (raw.round().max(0.0) as usize).clamp(k_min, BLOCK_AREA) as u8
}

/// Chooses how many leading zig-zag coefficients each block sends.
///
/// Variable: `k_b = clamp(round(eta * 64 * H_b / H_max), k_min, 64)` over
/// coded blocks with `H_b = log2(1 + E_b)`. Uniform: `clamp(round(eta * 64))`
/// on every block.
pub fn allocate(lat: &BlockLatents, cfg: &RateConfig) -> Result<RateAllocation> {
    let blocks = lat.layout.blocks();
    match cfg.scheme {
        AllocationScheme::Uniform => {
            let k = clamp_rate(cfg.eta * BLOCK_AREA as f64, cfg.k_min);
            Ok(RateAllocation {
                rates: vec![Some(k); blocks],
                entropy_bits: (0..blocks)
                    .map(|b| (1.0 + lat.ac_energy(b)).log2())
                    .collect(),
            })
        }
        AllocationScheme::Variable => {
            if lat.coded_blocks() == 0 {
                return Err(Error::NoCodedBlocks);
            }
            let entropy_bits: Vec<f64> = (0..blocks)
                .map(|b| {
                    if lat.coded[b] {
                        (1.0 + lat.ac_energy(b)).log2()
                    } else {
                        0.0
                    }
                })
                .collect();
            let h_max = entropy_bits.iter().cloned().fold(0.0, f64::max);
            let rates = (0..blocks)
                .map(|b| {
                    lat.coded[b].then(|| {
                        if h_max > 0.0 {
                            clamp_rate(
                                cfg.eta * BLOCK_AREA as f64 * entropy_bits[b] / h_max,
                                cfg.k_min,
                            )
                        } else {
                            cfg.k_min as u8
                        }
                    })
                })
                .collect();
            Ok(RateAllocation {
                rates,
                entropy_bits,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideInfo {
    pub coded: Vec<bool>,
    /// Rate of each coded block, in block order.
    pub rates: Vec<u8>,
}

impl SideInfo {
    pub fn bits(&self) -> u64 {
        self.coded.len() as u64 * CODED_FLAG_BITS + self.rates.len() as u64 * RATE_BITS + GAIN_BITS
    }
}

/// Power-normalized channel symbols plus the side information needed to
/// place them.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub symbols: Vec<f64>,
    pub gain: f64,
    pub side_info: SideInfo,
    pub side_bits: u64,
}

impl SymbolFrame {
    /// A frame with no coded blocks.
    pub fn empty(blocks: usize) -> Self {
        let side_info = SideInfo {
            coded: vec![false; blocks],
            rates: Vec::new(),
        };
        SymbolFrame {
            symbols: Vec::new(),
            gain: 1.0,
            side_bits: side_info.bits(),
            side_info,
        }
    }

    pub fn mean_power(&self) -> f64 {
        if self.symbols.is_empty() {
            return 0.0;
        }
        self.symbols.iter().map(|s| s * s).sum::<f64>() / self.symbols.len() as f64
    }
}

/// Emits the first `k_b` zig-zag coefficients of each coded block, channel
/// by channel, scaled so the frame has unit mean power.
pub fn encode(lat: &BlockLatents, alloc: &RateAllocation) -> Result<SymbolFrame> {
    let blocks = lat.layout.blocks();
    if alloc.rates.len() != blocks {
        return Err(Error::MalformedSideInfo(format!(
            "allocation covers {} blocks, latents have {blocks}",
            alloc.rates.len()
        )));
    }
    let mut raw = Vec::with_capacity(alloc.total_rate() * lat.layout.channels);
    let mut coded = Vec::with_capacity(blocks);
    let mut rates = Vec::new();
    for (b, rate) in alloc.rates.iter().enumerate() {
        coded.push(rate.is_some());
        if let Some(k) = *rate {
            rates.push(k);
            for ch in 0..lat.layout.channels {
                let block = lat.block(b, ch);
                raw.extend(ZIGZAG[..k as usize].iter().map(|&i| block[i]));
            }
        }
    }
    // Sequential sum keeps the gain bit-reproducible.
    let energy: f64 = raw.iter().map(|s| s * s).sum();
    let gain = if energy > 0.0 {
        (raw.len() as f64 / energy).sqrt()
    } else {
        1.0
    };
    for s in &mut raw {
        *s *= gain;
    }
    let side_info = SideInfo { coded, rates };
    Ok(SymbolFrame {
        symbols: raw,
        gain,
        side_bits: side_info.bits(),
        side_info,
    })
}

/// How the receiver turns noisy symbols back into coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Estimator {
    /// Undo the gain only.
    #[default]
    Descale,
    /// Undo the gain, then shrink each coefficient by a linear MMSE factor
    /// estimated per (channel, zig-zag position) from the received frame.
    /// Needs the channel noise variance per symbol.
    Lmmse { noise_variance: f64 },
}

/// Coefficient estimates for every block of a frame, in the latent layout.
pub fn recover_latents(
    frame: &SymbolFrame,
    layout: &FrameLayout,
    estimator: Estimator,
) -> Result<BlockLatents> {
    let side = &frame.side_info;
    let blocks = layout.blocks();
    if side.coded.len() != blocks {
        return Err(Error::MalformedSideInfo(format!(
            "{} coded flags for {blocks} blocks",
            side.coded.len()
        )));
    }
    let coded_count = side.coded.iter().filter(|c| **c).count();
    if side.rates.len() != coded_count {
        return Err(Error::MalformedSideInfo(format!(
            "{} rates for {coded_count} coded blocks",
            side.rates.len()
        )));
    }
    if let Some(k) = side
        .rates
        .iter()
        .find(|k| **k == 0 || **k as usize > BLOCK_AREA)
    {
        return Err(Error::MalformedSideInfo(format!("rate {k} out of range")));
    }
    let expected: usize = side.rates.iter().map(|k| *k as usize).sum::<usize>() * layout.channels;
    if frame.symbols.len() != expected {
        return Err(Error::MalformedSideInfo(format!(
            "{} symbols, side information describes {expected}",
            frame.symbols.len()
        )));
    }
    if !(frame.gain.is_finite() && frame.gain > 0.0) {
        return Err(Error::MalformedSideInfo(format!("gain {}", frame.gain)));
    }

    let scales = match estimator {
        Estimator::Descale => None,
        Estimator::Lmmse { noise_variance } => Some(shrink_factors(
            frame,
            layout,
            noise_variance / (frame.gain * frame.gain),
        )),
    };

    let mut coeffs = vec![[0.0; BLOCK_AREA]; blocks * layout.channels];
    let mut symbols = frame.symbols.iter();
    let mut rates = side.rates.iter();
    for b in 0..blocks {
        if !side.coded[b] {
            continue;
        }
        let k = *rates.next().expect("rate count checked") as usize;
        for ch in 0..layout.channels {
            let block = &mut coeffs[b * layout.channels + ch];
            for (pos, &idx) in ZIGZAG[..k].iter().enumerate() {
                let s = symbols.next().expect("symbol count checked") / frame.gain;
                block[idx] = match &scales {
                    Some(f) => s * f[ch * BLOCK_AREA + pos],
                    None => s,
                };
            }
        }
    }
    Ok(BlockLatents {
        layout: *layout,
        coeffs,
        coded: side.coded.clone(),
    })
}

/// `max(0, 1 - v / E[r^2])` per (channel, zig-zag position), where `v` is the
/// coefficient-domain noise variance. A coefficient observed as `r = c + e`
/// with second moment `E[c^2] = E[r^2] - v` has LMMSE estimate
/// `E[c^2] / (E[c^2] + v) * r`.
fn shrink_factors(frame: &SymbolFrame, layout: &FrameLayout, noise: f64) -> Vec<f64> {
    let mut sum_sq = vec![0.0; layout.channels * BLOCK_AREA];
    let mut count = vec![0usize; layout.channels * BLOCK_AREA];
    let mut symbols = frame.symbols.iter();
    for &k in &frame.side_info.rates {
        for ch in 0..layout.channels {
            for pos in 0..k as usize {
                let r = symbols.next().expect("symbol count checked") / frame.gain;
                sum_sq[ch * BLOCK_AREA + pos] += r * r;
                count[ch * BLOCK_AREA + pos] += 1;
            }
        }
    }
    sum_sq
        .iter()
        .zip(&count)
        .map(|(s, n)| {
            if noise <= 0.0 {
                1.0
            } else if *n == 0 || *s <= 0.0 {
                0.0
            } else {
                (1.0 - noise * *n as f64 / s).max(0.0)
            }
        })
        .collect()
}

/// Inverse transform of every coded block into padded, unclamped samples
/// (`channels` interleaved, `padded_width` x `padded_height`). Uncoded blocks
/// are left at zero intensity.
pub fn synthesize(lat: &BlockLatents) -> Vec<f64> {
    let layout = &lat.layout;
    let pw = layout.padded_width();
    let mut out = vec![0.0; pw * layout.padded_height() * layout.channels];
    for by in 0..layout.blocks_y {
        for bx in 0..layout.blocks_x {
            let b = by * layout.blocks_x + bx;
            if !lat.coded[b] {
                continue;
            }
            for ch in 0..layout.channels {
                let px = dct::inverse(lat.block(b, ch));
                for y in 0..BLOCK_SIZE {
                    for x in 0..BLOCK_SIZE {
                        let idx = ((by * BLOCK_SIZE + y) * pw + bx * BLOCK_SIZE + x)
                            * layout.channels
                            + ch;
                        out[idx] = px[y * BLOCK_SIZE + x] + 128.0;
                    }
                }
            }
        }
    }
    out
}

/// Receiver: recovers coefficients, inverts the transform, clamps to 8 bits
/// and crops the padding.
pub fn decode(frame: &SymbolFrame, layout: &FrameLayout, estimator: Estimator) -> Result<Image> {
    let lat = recover_latents(frame, layout, estimator)?;
    let samples = synthesize(&lat);
    let pw = layout.padded_width();
    let mut pixels = Vec::with_capacity(layout.width * layout.height * layout.channels);
    for row in 0..layout.height {
        let start = row * pw * layout.channels;
        pixels.extend(
            samples[start..start + layout.width * layout.channels]
                .iter()
                .map(|v| v.round().clamp(0.0, 255.0) as u8),
        );
    }
    Ok(Image {
        width: layout.width,
        height: layout.height,
        channels: layout.channels,
        pixels,
    })
}
