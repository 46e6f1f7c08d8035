use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use clap::Args;
use segmerge::{
    AssemblyOrder, MergeConfig, MergeWeighting, Parallelism, PartitionRule, ScheduleRule, SyntheticSpec,
    VideoFeatures, VideoShape,
};

use crate::CliError;

/// Where the input features come from, plus every pipeline hyperparameter.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// LVFT feature container to read.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generate features instead: `T,N,d,L_enc,seed[,events]`.
    #[arg(long, value_parser = parse_synthetic)]
    pub synthetic: Option<SyntheticSpec>,
    #[arg(long, default_value_t = 10)]
    pub segments: usize,
    #[arg(long, default_value_t = 30)]
    pub tokens_per_segment: usize,
    #[arg(long, default_value_t = 5)]
    pub global_layers: usize,
    #[arg(long, default_value_t = 16)]
    pub heads: usize,
    /// `alternating` or `random:<seed>`.
    #[arg(long, default_value = "alternating", value_parser = parse_partition)]
    pub partition: PartitionRule,
    /// `halving` or `fixed:<r>`.
    #[arg(long, default_value = "halving", value_parser = parse_schedule)]
    pub schedule: ScheduleRule,
    /// `gl` (global first) or `lg` (local first).
    #[arg(long, default_value = "gl", value_parser = parse_order)]
    pub order: AssemblyOrder,
    /// `size` or `plain`.
    #[arg(long, default_value = "size", value_parser = parse_weighting)]
    pub weighting: MergeWeighting,
    /// Drop trailing frames when the segment count does not divide the frame count.
    #[arg(long)]
    pub truncate: bool,
    /// Worker threads for segment merging (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl PipelineArgs {
    pub fn config(&self) -> MergeConfig {
        MergeConfig {
            num_segments: self.segments,
            tokens_per_segment: self.tokens_per_segment,
            num_global_layers: self.global_layers,
            similarity_heads: self.heads,
            partition: self.partition,
            schedule: self.schedule,
            order: self.order,
            weighting: self.weighting,
            truncate: self.truncate,
        }
    }

    pub fn parallelism(&self) -> Parallelism {
        match self.threads {
            None => Parallelism::Auto,
            Some(1) => Parallelism::Sequential,
            Some(n) => Parallelism::Threads(n),
        }
    }

    pub fn load(&self) -> Result<VideoFeatures, CliError> {
        match (&self.input, &self.synthetic) {
            (Some(path), _) => {
                let file = File::open(path).map_err(segmerge::Error::from)?;
                Ok(segmerge::read_features(BufReader::new(file))?)
            }
            (None, Some(spec)) => Ok(segmerge::generate_synthetic(spec)?),
            (None, None) => Err(CliError::usage("one of --input or --synthetic is required")),
        }
    }
}

pub fn parse_synthetic(s: &str) -> Result<SyntheticSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if !(5..=6).contains(&parts.len()) {
        return Err("expected T,N,d,L_enc,seed[,events]".into());
    }
    let num = |i: usize| parts[i].parse::<usize>().map_err(|e| format!("field {}: {e}", i + 1));
    let shape = VideoShape { frames: num(0)?, patches: num(1)?, dim: num(2)?, layers: num(3)? };
    let seed = parts[4].parse::<u64>().map_err(|e| format!("seed: {e}"))?;
    Ok(match parts.get(5) {
        Some(_) => SyntheticSpec::events(shape, seed, num(5)?),
        None => SyntheticSpec::gaussian(shape, seed),
    })
}

pub fn parse_partition(s: &str) -> Result<PartitionRule, String> {
    match s.split_once(':') {
        None if s == "alternating" => Ok(PartitionRule::Alternating),
        Some(("random", seed)) => seed.parse().map(PartitionRule::SeededRandom).map_err(|e| format!("seed: {e}")),
        _ => Err("expected alternating or random:<seed>".into()),
    }
}

pub fn parse_schedule(s: &str) -> Result<ScheduleRule, String> {
    match s.split_once(':') {
        None if s == "halving" => Ok(ScheduleRule::Halving),
        Some(("fixed", r)) => match r.parse::<usize>() {
            Ok(0) => Err("fixed step must be positive".into()),
            Ok(r) => Ok(ScheduleRule::FixedStep(r)),
            Err(e) => Err(format!("step: {e}")),
        },
        _ => Err("expected halving or fixed:<r>".into()),
    }
}

pub fn parse_order(s: &str) -> Result<AssemblyOrder, String> {
    match s {
        "gl" => Ok(AssemblyOrder::GlobalFirst),
        "lg" => Ok(AssemblyOrder::LocalFirst),
        _ => Err("expected gl or lg".into()),
    }
}

pub fn parse_weighting(s: &str) -> Result<MergeWeighting, String> {
    match s {
        "size" => Ok(MergeWeighting::SizeWeighted),
        "plain" => Ok(MergeWeighting::PlainAverage),
        _ => Err("expected size or plain".into()),
    }
}
