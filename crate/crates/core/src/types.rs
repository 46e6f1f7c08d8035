use crate::error::{Error, Result, TensorLocation};

/// Extents of an ingested video: `T` frames of `N` patch tokens, `d` channels,
/// and `L_enc` stored encoder layers of [CLS] tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VideoShape {
    pub frames: usize,
    pub patches: usize,
    pub dim: usize,
    pub layers: usize,
}

impl VideoShape {
    pub fn check(&self) -> Result<()> {
        if self.frames == 0 || self.patches == 0 || self.dim == 0 || self.layers == 0 {
            return Err(Error::InvalidShape(format!("all extents must be positive, got {self:?}")));
        }
        self.patch_len()?;
        self.cls_len()?;
        Ok(())
    }

    pub fn patch_len(&self) -> Result<usize> {
        self.frames
            .checked_mul(self.patches)
            .and_then(|x| x.checked_mul(self.dim))
            .ok_or_else(|| Error::InvalidShape(format!("patch tensor too large for {self:?}")))
    }

    pub fn cls_len(&self) -> Result<usize> {
        self.frames
            .checked_mul(self.layers)
            .and_then(|x| x.checked_mul(self.dim))
            .ok_or_else(|| Error::InvalidShape(format!("cls tensor too large for {self:?}")))
    }

    /// `T·N`, the number of patch tokens in the whole video.
    pub fn total_tokens(&self) -> usize {
        self.frames * self.patches
    }
}

/// Per-frame patch tokens and per-layer [CLS] tokens, row-major and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatures {
    shape: VideoShape,
    patch_tokens: Vec<f32>,
    cls_tokens: Vec<f32>,
}

impl VideoFeatures {
    /// `patch_tokens` is `(t, n, c)` row-major, `cls_tokens` is `(t, layer, c)`
    /// row-major with layer 0 the shallowest stored layer.
    pub fn new(shape: VideoShape, patch_tokens: Vec<f32>, cls_tokens: Vec<f32>) -> Result<Self> {
        shape.check()?;
        let (pl, cl) = (shape.patch_len()?, shape.cls_len()?);
        if patch_tokens.len() != pl {
            return Err(Error::InvalidShape(format!(
                "patch tensor has {} values, shape implies {pl}",
                patch_tokens.len()
            )));
        }
        if cls_tokens.len() != cl {
            return Err(Error::InvalidShape(format!(
                "cls tensor has {} values, shape implies {cl}",
                cls_tokens.len()
            )));
        }
        let d = shape.dim;
        if let Some(i) = patch_tokens.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(TensorLocation::Patch {
                frame: i / (shape.patches * d),
                patch: (i / d) % shape.patches,
                channel: i % d,
            }));
        }
        if let Some(i) = cls_tokens.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(TensorLocation::Cls {
                frame: i / (shape.layers * d),
                layer: (i / d) % shape.layers,
                channel: i % d,
            }));
        }
        Ok(Self { shape, patch_tokens, cls_tokens })
    }

    pub fn shape(&self) -> VideoShape {
        self.shape
    }

    pub fn patch(&self, frame: usize, patch: usize) -> &[f32] {
        let d = self.shape.dim;
        let start = (frame * self.shape.patches + patch) * d;
        &self.patch_tokens[start..start + d]
    }

    pub fn cls(&self, frame: usize, layer: usize) -> &[f32] {
        let d = self.shape.dim;
        let start = (frame * self.shape.layers + layer) * d;
        &self.cls_tokens[start..start + d]
    }

    pub fn patch_tokens(&self) -> &[f32] {
        &self.patch_tokens
    }

    pub fn cls_tokens(&self) -> &[f32] {
        &self.cls_tokens
    }

    pub fn into_parts(self) -> (VideoShape, Vec<f32>, Vec<f32>) {
        (self.shape, self.patch_tokens, self.cls_tokens)
    }
}

/// A `(frame_index, patch_index)` pair naming one original patch token.
pub type Origin = (u32, u32);

/// One feature vector together with how many original patch tokens it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub vector: Vec<f32>,
    pub weight: u32,
    pub provenance: Option<Vec<Origin>>,
}

impl Token {
    pub fn new(vector: Vec<f32>) -> Self {
        Self { vector, weight: 1, provenance: None }
    }

    pub fn with_origin(vector: Vec<f32>, origin: Origin) -> Self {
        Self { vector, weight: 1, provenance: Some(vec![origin]) }
    }
}

/// The `M` compact tokens produced for one short-term segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFeature {
    pub segment_index: usize,
    pub tokens: Vec<Token>,
}

/// `E` temporally averaged [CLS] vectors, shallowest selected layer first.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFeature {
    pub tokens: Vec<Vec<f32>>,
}

/// The assembled sequence, both as structured blocks and as a flat row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRepresentation {
    pub global: GlobalFeature,
    pub locals: Vec<SegmentFeature>,
    pub order: crate::config::AssemblyOrder,
    pub dim: usize,
    /// `rows × dim` row-major.
    pub flattened: Vec<f32>,
}

impl VideoRepresentation {
    pub fn rows(&self) -> usize {
        self.flattened.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.flattened[i * self.dim..(i + 1) * self.dim]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_extent_mismatch() {
        let shape = VideoShape { frames: 2, patches: 3, dim: 4, layers: 1 };
        assert!(VideoFeatures::new(shape, vec![0.0; 23], vec![0.0; 8]).is_err());
        assert!(VideoFeatures::new(shape, vec![0.0; 24], vec![0.0; 9]).is_err());
        assert!(VideoFeatures::new(shape, vec![0.0; 24], vec![0.0; 8]).is_ok());
    }

    #[test]
    fn reports_non_finite_location() {
        let shape = VideoShape { frames: 2, patches: 3, dim: 4, layers: 2 };
        let mut patch = vec![0.0; 24];
        patch[(3 + 2) * 4] = f32::NAN;
        let err = VideoFeatures::new(shape, patch, vec![0.0; 16]).unwrap_err();
        assert!(matches!(
            err,
            Error::NonFiniteValue(TensorLocation::Patch { frame: 1, patch: 2, channel: 0 })
        ));

        let mut cls = vec![0.0; 16];
        cls[(2 + 1) * 4 + 3] = f32::INFINITY;
        let err = VideoFeatures::new(shape, vec![0.0; 24], cls).unwrap_err();
        assert!(matches!(
            err,
            Error::NonFiniteValue(TensorLocation::Cls { frame: 1, layer: 1, channel: 3 })
        ));
    }

    #[test]
    fn accessors_index_row_major() {
        let shape = VideoShape { frames: 2, patches: 2, dim: 2, layers: 1 };
        let patch: Vec<f32> = (0..8).map(|x| x as f32).collect();
        let f = VideoFeatures::new(shape, patch, vec![9.0; 4]).unwrap();
        assert_eq!(f.patch(1, 0), &[4.0, 5.0]);
        assert_eq!(f.cls(1, 0), &[9.0, 9.0]);
    }
}
