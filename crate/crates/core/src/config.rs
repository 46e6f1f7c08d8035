//! Pipeline hyperparameters and their validation against a concrete video shape.

use crate::error::{Error, Result};
use crate::types::VideoShape;

/// How a merge step splits the current tokens into the source set `P` and
/// destination set `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PartitionRule {
    /// Positions 0, 2, 4, ... go to `P` until `r` are taken (then 1, 3, 5, ...
    /// if `r` exceeds the even positions).
    #[default]
    Alternating,
    /// An `r`-subset drawn with the crate PRNG, re-seeded per segment and step.
    SeededRandom(u64),
}

/// Per-step reduction counts taking `K·N` tokens down to `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleRule {
    #[default]
    Halving,
    FixedStep(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssemblyOrder {
    /// `[G, L]`: global tokens first, then segments in temporal order.
    #[default]
    GlobalFirst,
    /// `[L, G]`: segments first, global block last.
    LocalFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeWeighting {
    /// Mean weighted by how many original tokens each participant represents.
    #[default]
    SizeWeighted,
    /// Unweighted mean of the participating vectors.
    PlainAverage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeConfig {
    pub num_segments: usize,
    pub tokens_per_segment: usize,
    /// Number of deepest stored encoder layers whose [CLS] tokens form the global block.
    pub num_global_layers: usize,
    pub similarity_heads: usize,
    pub partition: PartitionRule,
    pub schedule: ScheduleRule,
    pub order: AssemblyOrder,
    pub weighting: MergeWeighting,
    /// Drop the trailing `T mod S` frames instead of rejecting the video.
    pub truncate: bool,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self {
            num_segments: 10,
            tokens_per_segment: 30,
            num_global_layers: 5,
            similarity_heads: 16,
            partition: PartitionRule::default(),
            schedule: ScheduleRule::default(),
            order: AssemblyOrder::default(),
            weighting: MergeWeighting::default(),
            truncate: false,
        }
    }
}

impl MergeConfig {
    /// Number of tokens in the assembled representation, `E + M·S`.
    pub fn output_tokens(&self) -> usize {
        self.num_global_layers + self.tokens_per_segment * self.num_segments
    }
}

/// A config that has been checked against a video shape, with `K = T/S` bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedConfig {
    config: MergeConfig,
    shape: VideoShape,
    frames_per_segment: usize,
}

impl ValidatedConfig {
    pub fn config(&self) -> &MergeConfig {
        &self.config
    }

    pub fn shape(&self) -> VideoShape {
        self.shape
    }

    /// `K`, frames per segment.
    pub fn frames_per_segment(&self) -> usize {
        self.frames_per_segment
    }

    /// Frames actually consumed, `S·K` (less than `T` only under truncation).
    pub fn frames_used(&self) -> usize {
        self.frames_per_segment * self.config.num_segments
    }

    /// `K·N`, tokens entering each segment's merge.
    pub fn tokens_per_view(&self) -> usize {
        self.frames_per_segment * self.shape.patches
    }
}

pub fn validate_config(config: &MergeConfig, shape: VideoShape) -> Result<ValidatedConfig> {
    shape.check()?;
    let positive = [
        ("num_segments", config.num_segments),
        ("tokens_per_segment", config.tokens_per_segment),
        ("num_global_layers", config.num_global_layers),
        ("similarity_heads", config.similarity_heads),
    ];
    for (name, value) in positive {
        if value == 0 {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
    }
    if let ScheduleRule::FixedStep(0) = config.schedule {
        return Err(Error::InvalidConfig("fixed step size must be positive".into()));
    }

    let segments = config.num_segments;
    if !shape.frames.is_multiple_of(segments) && !(config.truncate && shape.frames >= segments) {
        return Err(Error::SNotDividingT { frames: shape.frames, segments });
    }
    let frames_per_segment = shape.frames / segments;
    if !shape.dim.is_multiple_of(config.similarity_heads) {
        return Err(Error::CNotDividingD { heads: config.similarity_heads, dim: shape.dim });
    }
    let available = frames_per_segment * shape.patches;
    if config.tokens_per_segment > available {
        return Err(Error::MTooLarge { tokens_per_segment: config.tokens_per_segment, available });
    }
    if config.num_global_layers > shape.layers {
        return Err(Error::ETooLarge {
            global_layers: config.num_global_layers,
            stored: shape.layers,
        });
    }
    Ok(ValidatedConfig { config: config.clone(), shape, frames_per_segment })
}
