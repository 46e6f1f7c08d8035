use std::ops::Range;

use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::types::{Token, VideoFeatures};

/// The patch tokens of one segment, in `(frame, patch)` order, ready to merge.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentView {
    pub segment_index: usize,
    /// Half-open `[s·K, (s+1)·K)`.
    pub frame_range: Range<usize>,
    pub tokens: Vec<Token>,
}

/// Splits the video into `S` contiguous, equal, non-overlapping frame blocks.
pub fn segment_video(features: &VideoFeatures, config: &ValidatedConfig) -> Result<Vec<SegmentView>> {
    if features.shape() != config.shape() {
        return Err(Error::InvalidShape(format!(
            "config validated for {:?}, features are {:?}",
            config.shape(),
            features.shape()
        )));
    }
    let k = config.frames_per_segment();
    let n = features.shape().patches;
    let views = (0..config.config().num_segments)
        .map(|s| {
            let frame_range = s * k..(s + 1) * k;
            let tokens = frame_range
                .clone()
                .flat_map(|t| {
                    (0..n).map(move |p| Token::with_origin(features.patch(t, p).to_vec(), (t as u32, p as u32)))
                })
                .collect();
            SegmentView { segment_index: s, frame_range, tokens }
        })
        .collect();
    Ok(views)
}
