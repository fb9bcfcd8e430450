use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Image, ImageError};

/// Seeded random ordering of pixel positions. Swapping a fraction `gamma`
/// uses the first `floor(gamma * pixels)` positions, so masks for the same
/// seed are nested in `gamma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapMask {
    order: Vec<u32>,
}

impl SwapMask {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        let mut order: Vec<u32> = (0..(width * height) as u32).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn active_len(&self, gamma: f64) -> usize {
        ((gamma * self.order.len() as f64).floor() as usize).min(self.order.len())
    }

    /// Pixel indices swapped at `gamma`.
    pub fn active(&self, gamma: f64) -> &[u32] {
        &self.order[..self.active_len(gamma)]
    }

    /// Copies the active pixels (all channels) from `original` into `generated`.
    pub fn apply(
        &self,
        generated: &Image,
        original: &Image,
        gamma: f64,
    ) -> Result<Image, ImageError> {
        generated.same_dims(original)?;
        check_gamma(gamma)?;
        if self.order.len() != original.pixel_count() {
            return Err(ImageError::InvalidArgument(format!(
                "mask covers {} pixels, image has {}",
                self.order.len(),
                original.pixel_count()
            )));
        }
        let c = original.channels();
        let mut samples = generated.samples().to_vec();
        for &p in self.active(gamma) {
            let i = p as usize * c;
            samples[i..i + c].copy_from_slice(&original.samples()[i..i + c]);
        }
        Image::new(original.width(), original.height(), c, samples)
    }
}

fn check_gamma(gamma: f64) -> Result<(), ImageError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ImageError::InvalidArgument(format!(
            "gamma {gamma} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Replaces `floor(gamma * w * h)` uniformly chosen pixels of `generated`
/// with the corresponding pixels of `original`.
pub fn pixel_swap(
    generated: &Image,
    original: &Image,
    gamma: f64,
    seed: u64,
) -> Result<Image, ImageError> {
    generated.same_dims(original)?;
    SwapMask::new(original.width(), original.height(), seed).apply(generated, original, gamma)
}
