use std::fmt;

use super::ImageError;

/// Which encoder produced a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodecId {
    JpegLike,
    LatentLow,
    LatentMed,
    LatentHigh,
}

impl CodecId {
    pub fn as_str(self) -> &'static str {
        match self {
            CodecId::JpegLike => "jpeg-like",
            CodecId::LatentLow => "latent-low",
            CodecId::LatentMed => "latent-med",
            CodecId::LatentHigh => "latent-high",
        }
    }

    fn to_byte(self) -> u8 {
        match self {
            CodecId::JpegLike => 0,
            CodecId::LatentLow => 1,
            CodecId::LatentMed => 2,
            CodecId::LatentHigh => 3,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => CodecId::JpegLike,
            1 => CodecId::LatentLow,
            2 => CodecId::LatentMed,
            3 => CodecId::LatentHigh,
            _ => return None,
        })
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Serialized header: magic `GP`, codec byte, channel count, width and
/// height as little-endian `u16`, generation seed as little-endian `u64`.
pub const PROMPT_HEADER_LEN: usize = 16;
const MAGIC: &[u8; 2] = b"GP";

/// A codec output together with what the receiver needs to use it.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPrompt {
    codec: CodecId,
    payload: Vec<u8>,
    bpp: f64,
    seed: u64,
    width: usize,
    height: usize,
    channels: usize,
}

impl EncodedPrompt {
    pub fn new(
        codec: CodecId,
        payload: Vec<u8>,
        seed: u64,
        width: usize,
        height: usize,
        channels: usize,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(ImageError::Header(format!(
                "unsupported dimensions {width}x{height}"
            )));
        }
        if !(channels == 1 || channels == 3) {
            return Err(ImageError::Header(format!(
                "unsupported channel count {channels}"
            )));
        }
        let bpp = 8.0 * payload.len() as f64 / (width * height) as f64;
        Ok(Self {
            codec,
            payload,
            bpp,
            seed,
            width,
            height,
            channels,
        })
    }

    pub fn codec(&self) -> CodecId {
        self.codec
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn bpp(&self) -> f64 {
        self.bpp
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
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

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PROMPT_HEADER_LEN + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.push(self.codec.to_byte());
        out.push(self.channels as u8);
        out.extend_from_slice(&(self.width as u16).to_le_bytes());
        out.extend_from_slice(&(self.height as u16).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ImageError> {
        if bytes.len() < PROMPT_HEADER_LEN {
            return Err(ImageError::Header(format!(
                "{} bytes is shorter than the {PROMPT_HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if &bytes[..2] != MAGIC {
            return Err(ImageError::Header("bad magic".into()));
        }
        let codec = CodecId::from_byte(bytes[2])
            .ok_or_else(|| ImageError::Header(format!("unknown codec id {}", bytes[2])))?;
        let channels = bytes[3] as usize;
        let width = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
        let height = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
        let seed = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        Self::new(
            codec,
            bytes[PROMPT_HEADER_LEN..].to_vec(),
            seed,
            width,
            height,
            channels,
        )
    }
}

/// `8 * payload bytes / pixel count`.
pub fn bpp_of(prompt: &EncodedPrompt) -> f64 {
    8.0 * prompt.payload().len() as f64 / (prompt.width() * prompt.height()) as f64
}

/// Size of a prompt extended by a fraction `gamma` of the true image,
/// `prompt_bpp + gamma * true_bpp`.
pub fn combined_bpp(prompt_bpp: f64, gamma: f64, true_bpp: f64) -> Result<f64, ImageError> {
    if !(prompt_bpp >= 0.0) || !prompt_bpp.is_finite() {
        return Err(ImageError::InvalidArgument(format!(
            "prompt bpp {prompt_bpp} must be >= 0"
        )));
    }
    if !(true_bpp > 0.0) || !true_bpp.is_finite() {
        return Err(ImageError::InvalidArgument(format!(
            "true-image bpp {true_bpp} must be > 0"
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ImageError::InvalidArgument(format!(
            "gamma {gamma} outside [0, 1]"
        )));
    }
    Ok(prompt_bpp + gamma * true_bpp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bpp_accounting() {
        let p = EncodedPrompt::new(CodecId::LatentLow, vec![0; 512], 9, 64, 64, 3).unwrap();
        assert_eq!(bpp_of(&p), 1.0);
        assert_eq!(p.bpp(), bpp_of(&p));
        let empty = EncodedPrompt::new(CodecId::LatentLow, vec![], 9, 64, 64, 3).unwrap();
        assert_eq!(bpp_of(&empty), 0.0);
    }

    #[test]
    fn combined_examples() {
        assert_eq!(combined_bpp(0.5, 0.0, 24.0).unwrap(), 0.5);
        assert_eq!(combined_bpp(0.5, 1.0, 24.0).unwrap(), 24.5);
        assert!((combined_bpp(1.2, 0.25, 24.0).unwrap() - 7.2).abs() < 1e-12);
        assert!(combined_bpp(-0.1, 0.5, 24.0).is_err());
        assert!(combined_bpp(0.1, 1.5, 24.0).is_err());
        assert!(combined_bpp(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn header_is_sixteen_bytes() {
        let p =
            EncodedPrompt::new(CodecId::JpegLike, vec![1, 2, 3], 0xdead_beef, 640, 480, 3).unwrap();
        let bytes = p.to_bytes();
        assert_eq!(bytes.len(), PROMPT_HEADER_LEN + 3);
        assert_eq!(&bytes[..2], b"GP");
        assert!(EncodedPrompt::from_bytes(&bytes[..10]).is_err());
        let mut bad = bytes.clone();
        bad[2] = 9;
        assert!(EncodedPrompt::from_bytes(&bad).is_err());
    }

    proptest! {
        #[test]
        fn serialization_round_trips(
            codec in 0u8..4,
            payload in prop::collection::vec(any::<u8>(), 0..200),
            seed in any::<u64>(),
            w in 8usize..2000,
            h in 8usize..2000,
            color in any::<bool>(),
        ) {
            let p = EncodedPrompt::new(CodecId::from_byte(codec).unwrap(), payload, seed, w, h, if color { 3 } else { 1 }).unwrap();
            prop_assert_eq!(EncodedPrompt::from_bytes(&p.to_bytes()).unwrap(), p);
        }

        #[test]
        fn combined_is_affine_with_slope_l(lp in 0.0f64..10.0, g1 in 0.0f64..1.0, g2 in 0.0f64..1.0, l in 1.0f64..48.0) {
            let a = combined_bpp(lp, g1, l).unwrap();
            let b = combined_bpp(lp, g2, l).unwrap();
            prop_assert!(((b - a) - (g2 - g1) * l).abs() < 1e-12);
        }
    }
}
