use log::warn;
use serde::{Deserialize, Serialize};

use super::{Scene, Scheme};
use crate::channel::{self, ChannelConfig};
use crate::codec::{self, Estimator, FrameLayout, RateConfig, SymbolFrame};
use crate::error::{Error, Result};
use crate::metrics::{self, TrialResult};
use crate::scene::Image;
use crate::toif::{self, Mask, TaskCriteria};

/// Receiver-side coefficient estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    /// Undo the power normalization only.
    Descale,
    /// Linear MMSE shrinkage using the known channel SNR.
    #[default]
    Lmmse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub k_min: usize,
    pub receiver: ReceiverKind,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            k_min: 1,
            receiver: ReceiverKind::default(),
        }
    }
}

/// Transmitter output for one (scene, scheme, eta), reusable across channel
/// realizations.
#[derive(Debug, Clone)]
pub struct PreparedFrame {
    pub scheme: Scheme,
    pub eta: f64,
    pub frame: SymbolFrame,
    pub layout: FrameLayout,
    /// Evaluation mask derived from the criteria, identical for all schemes.
    pub task_mask: Mask,
}

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub result: TrialResult,
    pub reconstruction: Image,
    pub task_mask: Mask,
    pub note: Option<String>,
}

const EMPTY_MASK_NOTE: &str = "empty task mask";

/// Runs the transmitter side of `scheme` on a scene.
pub fn prepare(
    scene: &Scene,
    crit: &TaskCriteria,
    scheme: Scheme,
    eta: f64,
    opts: &PipelineOptions,
) -> Result<PreparedFrame> {
    let (masked, task_mask) =
        toif::task_mask(&scene.graph, &scene.segmentation, &scene.image, crit)?;
    let layout =
        FrameLayout::for_image(scene.image.width, scene.image.height, scene.image.channels);
    let frame = match scheme {
        Scheme::Inscom => {
            let cfg = RateConfig::new(eta, opts.k_min, codec::AllocationScheme::Variable)?;
            let lat = codec::analysis(&masked, Some(&task_mask))?;
            match codec::allocate(&lat, &cfg) {
                Ok(alloc) => codec::encode(&lat, &alloc)?,
                Err(Error::NoCodedBlocks) => SymbolFrame::empty(layout.blocks()),
                Err(e) => return Err(e),
            }
        }
        Scheme::NtsccLike | Scheme::Uniform => {
            let alloc_scheme = if scheme == Scheme::Uniform {
                codec::AllocationScheme::Uniform
            } else {
                codec::AllocationScheme::Variable
            };
            let cfg = RateConfig::new(eta, opts.k_min, alloc_scheme)?;
            let lat = codec::analysis(&scene.image, None)?;
            codec::encode(&lat, &codec::allocate(&lat, &cfg)?)?
        }
    };
    Ok(PreparedFrame {
        scheme,
        eta,
        frame,
        layout,
        task_mask,
    })
}

impl PreparedFrame {
    /// Sends the frame over the channel, decodes and scores it. `seed` is
    /// reported in the result; `channel_seed` drives the noise.
    pub fn transmit(
        &self,
        scene: &Scene,
        snr_db: f64,
        seed: u64,
        channel_seed: u64,
        opts: &PipelineOptions,
    ) -> Result<TrialOutput> {
        let cfg = ChannelConfig::new(snr_db, channel_seed)?;
        let received = channel::transmit(&self.frame, &cfg);
        let estimator = match opts.receiver {
            ReceiverKind::Descale => Estimator::Descale,
            ReceiverKind::Lmmse => Estimator::Lmmse {
                noise_variance: cfg.noise_variance(),
            },
        };
        let reconstruction = codec::decode(&received, &self.layout, estimator)?;
        let usage = metrics::account(&self.frame, scene.image.dimension());
        let psnr_db = metrics::psnr(&scene.image, &reconstruction)?;
        let tc_pixel_count = self.task_mask.popcount();
        let (tc_psnr_db, note) = if tc_pixel_count == 0 {
            warn!(
                "{}: task mask is empty, tc_psnr undefined ({} eta={} snr={})",
                scene.id, self.scheme, self.eta, snr_db
            );
            (f64::NAN, Some(EMPTY_MASK_NOTE.to_string()))
        } else {
            (
                metrics::tc_psnr(&scene.image, &reconstruction, &self.task_mask)?,
                None,
            )
        };
        Ok(TrialOutput {
            result: TrialResult {
                image_id: scene.id.clone(),
                scheme: self.scheme.to_string(),
                eta: self.eta,
                snr_db,
                seed,
                payload_symbols: usage.payload_symbols,
                side_symbol_equiv: usage.side_symbol_equiv,
                cbr: usage.cbr,
                psnr_db,
                tc_psnr_db,
                tc_pixel_count,
            },
            reconstruction,
            task_mask: self.task_mask.clone(),
            note,
        })
    }
}

/// One full trial: filter (for `inscom`), encode, AWGN, decode, score.
///
/// TC-PSNR is always measured against the source image over the task mask
/// derived from `crit`, whichever scheme transmitted it.
pub fn run_pipeline(
    scene: &Scene,
    crit: &TaskCriteria,
    scheme: Scheme,
    eta: f64,
    snr_db: f64,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<TrialOutput> {
    prepare(scene, crit, scheme, eta, opts)
        .and_then(|p| p.transmit(scene, snr_db, seed, seed, opts))
        .map_err(|e| Error::Trial {
            image_id: scene.id.clone(),
            source: Box::new(e),
        })
}
