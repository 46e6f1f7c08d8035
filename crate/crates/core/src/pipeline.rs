//! End-to-end compression: validate, segment, merge, aggregate, assemble.

use crate::assembly::assemble;
use crate::config::{validate_config, MergeConfig, ValidatedConfig};
use crate::error::Result;
use crate::global::aggregate_global;
use crate::merge::{merge_segment_with, MergeOptions, MergePlan};
use crate::par::{self, Parallelism};
use crate::segment::{segment_video, SegmentView};
use crate::types::{VideoFeatures, VideoRepresentation};

#[derive(Debug, Clone)]
pub struct Compressed {
    pub config: ValidatedConfig,
    pub representation: VideoRepresentation,
    /// One plan per segment, in segment order.
    pub plans: Vec<MergePlan>,
}

/// Runs the whole pipeline. Segments are merged concurrently on a pool of
/// `parallelism` workers; the result does not depend on the worker count.
pub fn compress(features: &VideoFeatures, config: &MergeConfig, parallelism: Parallelism) -> Result<Compressed> {
    compress_with(features, config, parallelism, MergeOptions::default())
}

/// Validates `config` against `features` and cuts the video into segment views.
pub fn prepare_segments(features: &VideoFeatures, config: &MergeConfig) -> Result<(ValidatedConfig, Vec<SegmentView>)> {
    let validated = validate_config(config, features.shape())?;
    let views = segment_video(features, &validated)?;
    Ok((validated, views))
}

pub fn compress_with(
    features: &VideoFeatures,
    config: &MergeConfig,
    parallelism: Parallelism,
    opts: MergeOptions,
) -> Result<Compressed> {
    let (validated, views) = prepare_segments(features, config)?;
    let global = aggregate_global(features, config.num_global_layers)?;
    let merged = parallelism.install(|| par::map_slice(&views, |v| merge_segment_with(v, config, opts)));
    let (locals, plans) = merged.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    let representation = assemble(global, locals, config.order)?;
    Ok(Compressed { config: validated, representation, plans })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AssemblyOrder;
    use crate::synthetic::{generate_synthetic, SyntheticSpec};
    use crate::types::VideoShape;

    fn small() -> VideoFeatures {
        let shape = VideoShape { frames: 8, patches: 6, dim: 8, layers: 3 };
        generate_synthetic(&SyntheticSpec::events(shape, 3, 2)).unwrap()
    }

    fn cfg() -> MergeConfig {
        MergeConfig {
            num_segments: 4,
            tokens_per_segment: 3,
            num_global_layers: 2,
            similarity_heads: 2,
            ..Default::default()
        }
    }

    #[test]
    fn output_has_budgeted_rows() {
        let out = compress(&small(), &cfg(), Parallelism::Sequential).unwrap();
        assert_eq!(out.representation.rows(), 2 + 3 * 4);
        assert_eq!(out.plans.len(), 4);
        assert!(out.plans.iter().all(|p| p.final_tokens == 3 && p.initial_tokens == 12));
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let a = compress(&small(), &cfg(), Parallelism::Sequential).unwrap();
        let b = compress(&small(), &cfg(), Parallelism::Threads(4)).unwrap();
        assert_eq!(a.representation, b.representation);
        assert_eq!(a.plans, b.plans);
    }

    #[test]
    fn orders_differ_by_block_move() {
        let gl = compress(&small(), &cfg(), Parallelism::Sequential).unwrap().representation;
        let lg = compress(&small(), &MergeConfig { order: AssemblyOrder::LocalFirst, ..cfg() }, Parallelism::Sequential)
            .unwrap()
            .representation;
        let e = 2 * 8;
        assert_eq!(gl.flattened[..e], lg.flattened[lg.flattened.len() - e..]);
        assert_eq!(gl.flattened[e..], lg.flattened[..lg.flattened.len() - e]);
    }

    #[test]
    fn validation_errors_propagate() {
        let bad = MergeConfig { num_segments: 3, ..cfg() };
        assert_eq!(compress(&small(), &bad, Parallelism::Sequential).unwrap_err().code(), "SNotDividingT");
    }
}
