//! Seeded synthetic features for exercising the pipeline without an encoder.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};
use crate::types::{VideoFeatures, VideoShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Every value an independent standard normal draw.
    GaussianIid,
    /// Contiguous frame blocks ("events") sharing a per-event mean per patch
    /// and per layer, plus per-frame noise with σ = 0.1.
    PiecewiseEvents { num_events: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub shape: VideoShape,
    pub seed: u64,
    pub kind: GeneratorKind,
}

pub const EVENT_NOISE: f64 = 0.1;

// Stream labels so the patch and cls tensors draw from independent generators.
const PATCH_STREAM: u64 = 1;
const CLS_STREAM: u64 = 2;
const MEAN_STREAM: u64 = 3;

impl SyntheticSpec {
    pub fn gaussian(shape: VideoShape, seed: u64) -> Self {
        Self { shape, seed, kind: GeneratorKind::GaussianIid }
    }

    pub fn events(shape: VideoShape, seed: u64, num_events: usize) -> Self {
        Self { shape, seed, kind: GeneratorKind::PiecewiseEvents { num_events } }
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.check().map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if let GeneratorKind::PiecewiseEvents { num_events } = self.kind {
            if num_events == 0 || num_events > self.shape.frames {
                return Err(Error::InvalidSpec(format!(
                    "num_events must lie in [1, {}], got {num_events}",
                    self.shape.frames
                )));
            }
        }
        Ok(())
    }

    /// Event index of `frame`: frames are split into `num_events` contiguous
    /// blocks with boundaries at `floor(b·T / num_events)`.
    pub fn event_of(&self, frame: usize) -> usize {
        match self.kind {
            GeneratorKind::GaussianIid => 0,
            GeneratorKind::PiecewiseEvents { num_events } => (frame * num_events) / self.shape.frames,
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<VideoFeatures> {
    spec.validate()?;
    let shape = spec.shape;
    let mut patch_rng = Rng::new(derive_seed(spec.seed, &[PATCH_STREAM]));
    let mut cls_rng = Rng::new(derive_seed(spec.seed, &[CLS_STREAM]));
    let (patch, cls) = match spec.kind {
        GeneratorKind::GaussianIid => (
            (0..shape.patch_len()?).map(|_| patch_rng.normal() as f32).collect(),
            (0..shape.cls_len()?).map(|_| cls_rng.normal() as f32).collect(),
        ),
        GeneratorKind::PiecewiseEvents { num_events } => {
            let mut mean_rng = Rng::new(derive_seed(spec.seed, &[MEAN_STREAM]));
            let per_frame_patch = shape.patches * shape.dim;
            let per_frame_cls = shape.layers * shape.dim;
            let patch_means: Vec<Vec<f64>> = (0..num_events)
                .map(|_| (0..per_frame_patch).map(|_| mean_rng.normal()).collect())
                .collect();
            let cls_means: Vec<Vec<f64>> = (0..num_events)
                .map(|_| (0..per_frame_cls).map(|_| mean_rng.normal()).collect())
                .collect();
            let mut patch = Vec::with_capacity(shape.patch_len()?);
            let mut cls = Vec::with_capacity(shape.cls_len()?);
            for t in 0..shape.frames {
                let e = spec.event_of(t);
                patch.extend(
                    patch_means[e].iter().map(|m| (m + EVENT_NOISE * patch_rng.normal()) as f32),
                );
                cls.extend(cls_means[e].iter().map(|m| (m + EVENT_NOISE * cls_rng.normal()) as f32));
            }
            (patch, cls)
        }
    };
    VideoFeatures::new(shape, patch, cls)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(frames: usize, patches: usize, dim: usize, layers: usize) -> VideoShape {
        VideoShape { frames, patches, dim, layers }
    }

    fn cosine(a: &[f32], b: &[f32]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
        let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum();
        let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum();
        dot / (na * nb).sqrt()
    }

    #[test]
    fn deterministic_for_fixed_spec() {
        for spec in [
            SyntheticSpec::gaussian(shape(3, 4, 8, 2), 42),
            SyntheticSpec::events(shape(6, 4, 8, 2), 42, 3),
        ] {
            let a = generate_synthetic(&spec).unwrap();
            let b = generate_synthetic(&spec).unwrap();
            let bits = |f: &VideoFeatures| -> Vec<u32> {
                f.patch_tokens().iter().chain(f.cls_tokens()).map(|v| v.to_bits()).collect()
            };
            assert_eq!(bits(&a), bits(&b));
        }
        let a = generate_synthetic(&SyntheticSpec::gaussian(shape(3, 4, 8, 2), 1)).unwrap();
        let b = generate_synthetic(&SyntheticSpec::gaussian(shape(3, 4, 8, 2), 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn two_events_separate_by_similarity() {
        let spec = SyntheticSpec::events(shape(10, 8, 64, 1), 5, 2);
        let f = generate_synthetic(&spec).unwrap();
        assert_eq!((0..10).map(|t| spec.event_of(t)).collect::<Vec<_>>(), [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);

        let (mut within, mut nw, mut across, mut na) = (0.0, 0, 0.0, 0);
        for t1 in 0..10 {
            for t2 in t1 + 1..10 {
                for n in 0..8 {
                    let c = cosine(f.patch(t1, n), f.patch(t2, n));
                    if spec.event_of(t1) == spec.event_of(t2) {
                        within += c;
                        nw += 1;
                    } else {
                        across += c;
                        na += 1;
                    }
                }
            }
        }
        let (within, across) = (within / nw as f64, across / na as f64);
        assert!(within > 0.95, "within-event similarity {within}");
        assert!(within > across + 0.5, "within {within} vs across {across}");
    }

    #[test]
    fn reference_token_scale() {
        let s = shape(100, 256, 1024, 5);
        assert_eq!(s.total_tokens(), 25_600);
    }

    #[test]
    fn rejects_bad_event_count() {
        assert!(generate_synthetic(&SyntheticSpec::events(shape(4, 1, 2, 1), 0, 5)).is_err());
        assert!(generate_synthetic(&SyntheticSpec::events(shape(4, 1, 2, 1), 0, 0)).is_err());
        assert!(generate_synthetic(&SyntheticSpec::gaussian(shape(0, 1, 2, 1), 0)).is_err());
    }
}
