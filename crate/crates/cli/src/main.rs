use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use segmerge::merge::{merge_segment_with, oracle_merge_segment, MergeOptions, ORACLE_TOKEN_LIMIT};
use segmerge::rng::{derive_seed, Rng};
use segmerge::{
    compress, compression_metrics, io, project, segment_video, validate_config, MergeConfig, MergeWeighting,
    PartitionRule, ProjectionWeights, ScheduleRule, SegmentView, Token,
};

mod args;
mod bench;

use args::PipelineArgs;

#[derive(Debug, Parser)]
#[command(name = "segmerge", version, about = "Compress long-video features into a short token sequence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write the token sequence as an LVCR container.
    Compress {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// `identity` or an LVPW weights file.
        #[arg(long, default_value = "identity")]
        project: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge one segment and print its plan.
    Inspect {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        segment: usize,
        /// Print every selected edge rather than just the reduction sequence.
        #[arg(long)]
        dump_plan: bool,
    },
    /// Compare the merger against the brute-force oracle on seeded random segments.
    OracleCheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 256)]
        max_tokens: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_tiebreak_bug: bool,
    },
    /// Time segment merging.
    Bench(bench::BenchArgs),
}

#[derive(Debug)]
pub struct CliError {
    code: String,
    detail: String,
    exit: u8,
}

impl CliError {
    pub fn new(code: &str, detail: impl Into<String>) -> Self {
        Self { code: code.into(), detail: detail.into(), exit: 1 }
    }

    pub fn usage(detail: impl Into<String>) -> Self {
        Self::new("InvalidArgument", detail)
    }
}

impl From<segmerge::Error> for CliError {
    fn from(e: segmerge::Error) -> Self {
        Self::new(e.code(), e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            eprintln!("ERROR InvalidArgument: {first}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Compress { pipeline, project, out } => run_compress(&pipeline, &project, out),
        Command::Inspect { pipeline, segment, dump_plan } => run_inspect(&pipeline, segment, dump_plan),
        Command::OracleCheck { trials, max_tokens, seed, inject_tiebreak_bug } => {
            run_oracle_check(trials, max_tokens, seed, inject_tiebreak_bug)
        }
        Command::Bench(args) => bench::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code, e.detail.replace('\n', " "));
            ExitCode::from(e.exit)
        }
    }
}

fn run_compress(pipeline: &PipelineArgs, projection: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    let features = pipeline.load()?;
    let weights = match projection {
        "identity" => ProjectionWeights::Identity,
        path => ProjectionWeights::load(path)?,
    };
    let start = Instant::now();
    let compressed = compress(&features, &pipeline.config(), pipeline.parallelism())?;
    let projected = project(&compressed.representation, &weights)?;
    let elapsed = start.elapsed();
    let metrics = pipeline.parallelism().install(|| compression_metrics(&features, &compressed.representation));

    if let Some(path) = out {
        io::write_file_atomic(&path, |f| io::write_compressed(&projected, f))?;
    }
    let zero_norm: u64 = compressed.plans.iter().map(|p| p.zero_norm_pairs).sum();
    if zero_norm > 0 {
        eprintln!("warning: {zero_norm} candidate pairs had a zero-norm head and scored -inf");
    }
    println!(
        "input_tokens={} output_tokens={} ratio={:.4} coverage={:.6} wall_s={:.3}",
        metrics.input_tokens,
        metrics.output_tokens,
        metrics.ratio,
        metrics.coverage,
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn run_inspect(pipeline: &PipelineArgs, segment: usize, dump_plan: bool) -> Result<(), CliError> {
    let features = pipeline.load()?;
    let config = pipeline.config();
    let validated = validate_config(&config, features.shape())?;
    if segment >= config.num_segments {
        return Err(CliError::new(
            "SegmentOutOfRange",
            format!("segment {segment} outside [0, {})", config.num_segments),
        ));
    }
    let view = segment_video(&features, &validated)?.swap_remove(segment);
    let (_, plan) =
        pipeline.parallelism().install(|| merge_segment_with(&view, &config, MergeOptions::default()))?;
    if dump_plan {
        print!("{}", plan.dump());
    } else {
        let rs: Vec<String> = plan.reductions().iter().map(usize::to_string).collect();
        println!(
            "segment={} initial={} final={} steps={} r=[{}]",
            plan.segment_index,
            plan.initial_tokens,
            plan.final_tokens,
            plan.steps.len(),
            rs.join(", ")
        );
    }
    Ok(())
}

/// One random oracle-check instance. Odd trials use small integer values so
/// that equal scores (and therefore tie-breaking) actually occur.
fn oracle_trial(seed: u64, trial: usize, max_tokens: usize) -> (SegmentView, MergeConfig) {
    let mut rng = Rng::new(derive_seed(seed, &[trial as u64]));
    let low = max_tokens.min(8);
    let tokens = low + rng.below((max_tokens - low + 1) as u64) as usize;
    let dim = [8, 32, 64][rng.below(3) as usize];
    let heads = [1, 2, 4][rng.below(3) as usize];
    let m = 1 + rng.below(tokens as u64) as usize;
    let quantize = trial % 2 == 1;
    let partition = if rng.below(2) == 0 { PartitionRule::Alternating } else { PartitionRule::SeededRandom(rng.next_u64()) };
    let vectors: Vec<Token> = (0..tokens)
        .map(|i| {
            let v = (0..dim)
                .map(|_| {
                    let x = rng.normal() as f32;
                    if quantize { x.round().clamp(-1.0, 1.0) } else { x }
                })
                .collect();
            Token::with_origin(v, (0, i as u32))
        })
        .collect();
    let config = MergeConfig {
        tokens_per_segment: m,
        similarity_heads: heads,
        partition,
        schedule: ScheduleRule::Halving,
        weighting: MergeWeighting::SizeWeighted,
        ..Default::default()
    };
    (SegmentView { segment_index: trial, frame_range: 0..1, tokens: vectors }, config)
}

fn run_oracle_check(trials: usize, max_tokens: usize, seed: u64, inject: bool) -> Result<(), CliError> {
    if max_tokens > ORACLE_TOKEN_LIMIT {
        return Err(segmerge::Error::InputTooLargeForOracle { tokens: max_tokens, limit: ORACLE_TOKEN_LIMIT }.into());
    }
    if max_tokens < 2 {
        return Err(CliError::usage("--max-tokens must be at least 2"));
    }
    let opts = MergeOptions { inject_tiebreak_fault: inject };
    let mut first_failure = None;
    for trial in 0..trials {
        let (view, config) = oracle_trial(seed, trial, max_tokens);
        let (fast_seg, fast_plan) = merge_segment_with(&view, &config, opts)?;
        let (slow_seg, slow_plan) = oracle_merge_segment(&view, &config)?;
        let diverged = fast_plan.first_divergence(&slow_plan).or((fast_seg != slow_seg).then_some(fast_plan.steps.len()));
        match diverged {
            None => println!("trial {trial} PASS tokens={} m={}", view.tokens.len(), config.tokens_per_segment),
            Some(step) => {
                println!("trial {trial} FAIL step={step}");
                first_failure.get_or_insert((trial, step));
            }
        }
    }
    match first_failure {
        None => Ok(()),
        Some((trial, step)) => Err(CliError {
            code: "OracleMismatch".into(),
            detail: format!("trial {trial} first diverged at step {step}"),
            exit: 2,
        }),
    }
}
