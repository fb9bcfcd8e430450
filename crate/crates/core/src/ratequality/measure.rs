//! Dataset-average sample points for every scheme and strategy.

use serde::{Deserialize, Serialize};

use super::{CurveError, SamplePoint, Scheme, Strategy};
use crate::imaging::{
    generative_decode, jpeg_like_decode, jpeg_like_encode, latent_encode, pixel_swap, raw_bpp,
    EncodedPrompt, Image, LatentTier,
};
use crate::metrics::{embed_all, gaussian_fit, normalized_mse, FrechetReference, MetricKind};
use crate::{derive_seed, par_map};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureConfig {
    /// Swap fractions for the pixel-swapping curves; must contain 0.
    pub gammas: Vec<f64>,
    /// JPEG qualities sampled for the JPEG prompt-extension curve.
    pub jpeg_pe_qualities: Vec<u32>,
    /// JPEG qualities used as the low/med/high prompts for pixel swapping.
    pub jpeg_ps_qualities: [u32; 3],
    /// Base seed for generation noise and swap masks.
    pub seed: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            gammas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            jpeg_pe_qualities: vec![5, 10, 20, 30, 50, 70, 90],
            jpeg_ps_qualities: [5, 20, 50],
            seed: 0,
        }
    }
}

impl MeasureConfig {
    pub fn validate(&self) -> Result<(), CurveError> {
        if !self.gammas.iter().all(|g| (0.0..=1.0).contains(g)) || !self.gammas.contains(&0.0) {
            return Err(CurveError::InvalidSample(
                "gammas must lie in [0, 1] and include 0".into(),
            ));
        }
        let mut g = self.gammas.clone();
        g.sort_by(f64::total_cmp);
        g.dedup();
        if g.len() != self.gammas.len() {
            return Err(CurveError::InvalidSample("duplicate gamma".into()));
        }
        if self.jpeg_pe_qualities.is_empty() {
            return Err(CurveError::InvalidSample("no JPEG qualities".into()));
        }
        Ok(())
    }
}

struct Recorder<'a> {
    images: &'a [Image],
    reference: FrechetReference<f64>,
    jobs: usize,
    true_bpp: f64,
    mask_base: u64,
    out: Vec<SamplePoint>,
}

impl Recorder<'_> {
    fn record(
        &mut self,
        bpp: f64,
        set: &[Image],
        scheme: Scheme,
        strategy: Strategy,
    ) -> Result<(), CurveError> {
        let images = self.images;
        let nmse = par_map(set, self.jobs, |i, img| normalized_mse(&images[i], img))
            .into_iter()
            .collect::<Result<Vec<f64>, _>>()?;
        let distortion = nmse.iter().sum::<f64>() / nmse.len() as f64;
        let fid = self
            .reference
            .distance(&gaussian_fit(&embed_all(set, self.jobs))?)?;
        self.out.push(SamplePoint::new(
            bpp,
            distortion,
            MetricKind::Distortion,
            scheme,
            strategy,
        )?);
        self.out.push(SamplePoint::new(
            bpp,
            fid,
            MetricKind::Perception,
            scheme,
            strategy,
        )?);
        Ok(())
    }

    /// Records `decoded` with each fraction `gamma` of its pixels restored,
    /// at `prompt_bpp + gamma * L`. Masks are fixed per image, so they nest.
    fn record_swaps(
        &mut self,
        gammas: &[f64],
        prompt_bpp: f64,
        decoded: &[Image],
        scheme: Scheme,
        strategy: Strategy,
    ) -> Result<(), CurveError> {
        let (images, mask_base) = (self.images, self.mask_base);
        for &g in gammas {
            let set = par_map(decoded, self.jobs, |i, img| {
                pixel_swap(img, &images[i], g, derive_seed(mask_base, i as u64))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            self.record(prompt_bpp + g * self.true_bpp, &set, scheme, strategy)?;
        }
        Ok(())
    }
}

fn mean_bpp(prompts: &[EncodedPrompt]) -> f64 {
    prompts.iter().map(|p| p.bpp()).sum::<f64>() / prompts.len() as f64
}

/// Perception values are raw FID against `images`; distortion values are
/// dataset-average normalized MSE. `jobs` only affects speed.
pub fn measure_samples(
    images: &[Image],
    cfg: &MeasureConfig,
    jobs: usize,
) -> Result<Vec<SamplePoint>, CurveError> {
    cfg.validate()?;
    let first = images.first().ok_or(CurveError::TooFewSamples {
        needed: 2,
        actual: 0,
    })?;
    let mut rec = Recorder {
        images,
        reference: FrechetReference::new(gaussian_fit(&embed_all(images, jobs))?)?,
        jobs,
        true_bpp: raw_bpp(first.channels()),
        mask_base: derive_seed(cfg.seed, 0),
        out: Vec::new(),
    };

    let mut genai = Vec::with_capacity(3);
    for (t, tier) in LatentTier::ALL.into_iter().enumerate() {
        let gen_base = derive_seed(cfg.seed, 1 + t as u64);
        let prompts = par_map(images, jobs, |_, img| latent_encode(img, tier));
        let decoded = par_map(&prompts, jobs, |i, p| {
            generative_decode(p, derive_seed(gen_base, i as u64))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let bpp = mean_bpp(&prompts);
        rec.record(bpp, &decoded, Scheme::Genai, Strategy::Pe)?;
        genai.push((bpp, decoded));
    }
    for ((bpp, decoded), strategy) in genai.into_iter().zip(Strategy::PS) {
        rec.record_swaps(&cfg.gammas, bpp, &decoded, Scheme::Genai, strategy)?;
    }

    let jpeg = |q: u32| -> Result<(f64, Vec<Image>), CurveError> {
        let prompts = par_map(images, jobs, |_, img| jpeg_like_encode(img, q))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let decoded = par_map(&prompts, jobs, |_, p| jpeg_like_decode(p))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        Ok((mean_bpp(&prompts), decoded))
    };
    for &q in &cfg.jpeg_pe_qualities {
        let (bpp, decoded) = jpeg(q)?;
        rec.record(bpp, &decoded, Scheme::Jpeg, Strategy::Pe)?;
    }
    for (&q, strategy) in cfg.jpeg_ps_qualities.iter().zip(Strategy::PS) {
        let (bpp, decoded) = jpeg(q)?;
        rec.record_swaps(&cfg.gammas, bpp, &decoded, Scheme::Jpeg, strategy)?;
    }
    Ok(rec.out)
}
