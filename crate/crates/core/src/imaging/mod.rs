//! Image content pipeline: a procedural dataset, a JPEG-like baseline codec,
//! an emulated latent codec with a stochastic generative decoder, and pixel
//! swapping.
//!
//! Rates are bits per source pixel (bpp). A raw 8-bit image costs
//! `8 * channels` bpp, see [`raw_bpp`].

mod bits;
mod dataset;
mod jpeg;
mod latent;
mod pnm;
mod prompt;
mod swap;

use thiserror::Error;

pub use dataset::generate_dataset;
pub use jpeg::{jpeg_like_decode, jpeg_like_encode, ENTROPY_TABLES_VERSION};
pub use latent::{generative_decode, latent_encode, LatentTier};
pub use pnm::{read_pnm, write_pnm};
pub use prompt::{bpp_of, combined_bpp, CodecId, EncodedPrompt, PROMPT_HEADER_LEN};
pub use swap::{pixel_swap, SwapMask};

/// Smallest accepted width/height, one codec block.
pub const MIN_DIMENSION: usize = 8;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("invalid image geometry {width}x{height}x{channels} (need >= {MIN_DIMENSION}x{MIN_DIMENSION}, 1 or 3 channels)")]
    InvalidDimensions {
        width: usize,
        height: usize,
        channels: usize,
    },
    #[error("expected {expected} samples, got {actual}")]
    SampleCount { expected: usize, actual: usize },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },
    #[error("quality {0} outside 1..=100")]
    QualityOutOfRange(u32),
    #[error("corrupt payload at byte {offset}: {reason}")]
    CorruptPayload { offset: usize, reason: String },
    #[error("expected a {expected} prompt, got {found}")]
    WrongCodec {
        expected: &'static str,
        found: CodecId,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bad PNM data: {0}")]
    Pnm(String),
    #[error("bad prompt header: {0}")]
    Header(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 8-bit image, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl Image {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<u8>,
    ) -> Result<Self, ImageError> {
        check_geometry(width, height, channels)?;
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(ImageError::SampleCount {
                expected,
                actual: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn filled(
        width: usize,
        height: usize,
        channels: usize,
        value: u8,
    ) -> Result<Self, ImageError> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// Builds an image from `f(x, y, channel)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        check_geometry(width, height, channels)?;
        let mut samples = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    samples.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.samples[(y * self.width + x) * self.channels + c]
    }

    /// Colour inversion `s -> 255 - s`.
    pub fn invert(&self) -> Image {
        Image {
            samples: self.samples.iter().map(|&s| 255 - s).collect(),
            ..*self
        }
    }

    /// Luminance (BT.601 weights) per pixel; the sample itself for grey images.
    pub fn luma(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.samples.iter().map(|&s| s as f64).collect();
        }
        self.samples
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    }

    pub(crate) fn same_dims(&self, other: &Image) -> Result<(), ImageError> {
        if self.dims() != other.dims() {
            return Err(ImageError::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }
}

fn check_geometry(width: usize, height: usize, channels: usize) -> Result<(), ImageError> {
    if width < MIN_DIMENSION || height < MIN_DIMENSION || !(channels == 1 || channels == 3) {
        return Err(ImageError::InvalidDimensions {
            width,
            height,
            channels,
        });
    }
    Ok(())
}

/// Uncompressed size of an 8-bit image in bpp.
pub fn raw_bpp(channels: usize) -> f64 {
    8.0 * channels as f64
}
