//! Real-valued AWGN channel.
//!
//! SNR is defined per real symbol against unit average signal power, so the
//! noise standard deviation is `sqrt(10^(-snr_db / 10))`. The noise stream is
//! drawn from ChaCha8 seeded with the 64-bit trial seed; ChaCha is a counter
//! based generator, so `(seed, symbol index)` fixes every sample.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codec::SymbolFrame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, seed: u64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "snr_db must be finite, got {snr_db}"
            )));
        }
        Ok(ChannelConfig { snr_db, seed })
    }

    pub fn noise_variance(&self) -> f64 {
        noise_variance(self.snr_db)
    }
}

pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn noise_sigma(snr_db: f64) -> f64 {
    noise_variance(snr_db).sqrt()
}

/// Seeded standard-normal stream scaled by `sigma`.
pub fn noise_stream(seed: u64, sigma: f64) -> impl Iterator<Item = f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::repeat_with(move || {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    })
}

/// Adds independent Gaussian noise to every symbol; side information passes
/// through untouched.
pub fn transmit(frame: &SymbolFrame, cfg: &ChannelConfig) -> SymbolFrame {
    let sigma = noise_sigma(cfg.snr_db);
    let symbols = frame
        .symbols
        .iter()
        .zip(noise_stream(cfg.seed, sigma))
        .map(|(u, n)| u + n)
        .collect();
    SymbolFrame {
        symbols,
        ..frame.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_values() {
        assert_eq!(noise_sigma(0.0), 1.0);
        assert!((noise_variance(10.0) - 0.1).abs() < 1e-15);
        // 10^0.3
        assert!((noise_variance(-3.0) - 1.995_262_314_968_879_5).abs() < 1e-12);
    }

    #[test]
    fn high_snr_is_transparent() {
        let frame = SymbolFrame {
            symbols: vec![1.0, -1.0, 0.5, 1.3],
            ..SymbolFrame::empty(1)
        };
        let out = transmit(&frame, &ChannelConfig::new(300.0, 7).unwrap());
        for (a, b) in frame.symbols.iter().zip(&out.symbols) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(out.side_info, frame.side_info);
        assert_eq!(out.gain, frame.gain);
    }

    #[test]
    fn empty_frame_passes_through() {
        let frame = SymbolFrame::empty(3);
        assert_eq!(
            transmit(&frame, &ChannelConfig::new(0.0, 1).unwrap()),
            frame
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let frame = SymbolFrame {
            symbols: vec![0.0; 64],
            ..SymbolFrame::empty(1)
        };
        let a = transmit(&frame, &ChannelConfig::new(3.0, 11).unwrap());
        let b = transmit(&frame, &ChannelConfig::new(3.0, 11).unwrap());
        let c = transmit(&frame, &ChannelConfig::new(3.0, 12).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_non_finite_snr() {
        assert!(ChannelConfig::new(f64::INFINITY, 0).is_err());
    }
}
