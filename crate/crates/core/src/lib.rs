//! Long-video token compression.
//!
//! A video's per-frame patch tokens are cut into `S` equal segments of `K`
//! frames; each segment's `K·N` tokens are reduced to `M` by repeated
//! bipartite soft matching on head-averaged cosine similarity. The temporal
//! mean of the last `E` layers' [CLS] tokens forms a global block that is
//! placed before (or after) the segment blocks, giving `E + M·S` tokens.
//!
//! The `parallel` feature (on by default) merges segments and scores
//! candidate pairs on a rayon pool; without it everything runs sequentially
//! and produces identical output.

pub mod assembly;
pub mod config;
pub mod error;
pub mod global;
pub mod io;
pub mod merge;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod segment;
pub mod synthetic;
pub mod types;

pub use assembly::{assemble, compression_metrics, conservation_residual, project, CompressionMetrics, ProjectionWeights};
pub use config::{
    validate_config, AssemblyOrder, MergeConfig, MergeWeighting, PartitionRule, ScheduleRule, ValidatedConfig,
};
pub use error::{Error, Result};
pub use global::aggregate_global;
pub use io::{read_compressed, read_features, write_compressed, write_features, Matrix};
pub use merge::{
    bipartition, head_similarity, merge_schedule, merge_segment, merge_step, oracle_merge_segment, MergePlan,
};
pub use par::Parallelism;
pub use pipeline::{compress, prepare_segments, Compressed};
pub use segment::{segment_video, SegmentView};
pub use synthetic::{generate_synthetic, GeneratorKind, SyntheticSpec};
pub use types::{GlobalFeature, SegmentFeature, Token, VideoFeatures, VideoRepresentation, VideoShape};
