use std::time::{Duration, Instant};

use clap::Args;
use segmerge::merge::merge_segment;
use segmerge::{par, prepare_segments, MergePlan};
use serde::Serialize;

use crate::args::PipelineArgs;
use crate::CliError;

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 5)]
    repeat: usize,
    /// Print a single JSON object instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    repeat: usize,
    threads: usize,
    segments: usize,
    tokens_in_per_segment: usize,
    tokens_out_per_segment: usize,
    merge_steps: usize,
    similarity_evaluations: u64,
    segment_ms_median: f64,
    segment_ms_p95: f64,
    total_ms_median: f64,
    total_ms_p95: f64,
    tokens_per_second: f64,
    peak_rss_bytes: u64,
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// High-water resident set size from procfs, or `None` off Linux.
fn peak_rss() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    if args.repeat == 0 {
        return Err(CliError::usage("--repeat must be at least 1"));
    }
    if args.pipeline.synthetic.is_none() {
        return Err(CliError::usage("bench requires --synthetic"));
    }
    let features = args.pipeline.load()?;
    let config = args.pipeline.config();
    let (_, views) = prepare_segments(&features, &config)?;
    let parallelism = args.pipeline.parallelism();

    let mut segment_times = Vec::new();
    let mut totals = Vec::new();
    let mut plan: Option<MergePlan> = None;
    for _ in 0..args.repeat {
        let start = Instant::now();
        let results = parallelism.install(|| {
            par::map_slice(&views, |v| {
                let t = Instant::now();
                merge_segment(v, &config).map(|(_, plan)| (plan, t.elapsed()))
            })
        });
        totals.push(ms(start.elapsed()));
        for r in results {
            let (p, took) = r?;
            segment_times.push(ms(took));
            plan.get_or_insert(p);
        }
    }
    segment_times.sort_by(f64::total_cmp);
    totals.sort_by(f64::total_cmp);
    let plan = plan.expect("at least one segment");
    let tokens_in: usize = views.iter().map(|v| v.tokens.len()).sum();
    let input_bytes = (features.patch_tokens().len() + features.cls_tokens().len()) * 4;
    let report = Report {
        repeat: args.repeat,
        threads: parallelism.threads(),
        segments: views.len(),
        tokens_in_per_segment: plan.initial_tokens,
        tokens_out_per_segment: plan.final_tokens,
        merge_steps: plan.steps.len(),
        similarity_evaluations: plan.similarity_evaluations,
        segment_ms_median: percentile(&segment_times, 50.0),
        segment_ms_p95: percentile(&segment_times, 95.0),
        total_ms_median: percentile(&totals, 50.0),
        total_ms_p95: percentile(&totals, 95.0),
        tokens_per_second: tokens_in as f64 / (percentile(&totals, 50.0) / 1e3),
        // Without procfs, fall back to twice the feature payload (input plus segment copies).
        peak_rss_bytes: peak_rss().unwrap_or(2 * input_bytes as u64),
    };
    if args.json {
        println!("{}", serde_json::to_string(&report).map_err(|e| CliError::new("Io", e.to_string()))?);
    } else {
        println!(
            "segments={} threads={} repeat={} steps={} evaluations/segment={}",
            report.segments, report.threads, report.repeat, report.merge_steps, report.similarity_evaluations
        );
        println!("segment merge: median {:.3} ms, p95 {:.3} ms", report.segment_ms_median, report.segment_ms_p95);
        println!("all segments:  median {:.3} ms, p95 {:.3} ms", report.total_ms_median, report.total_ms_p95);
        println!("throughput: {:.0} tokens/s, peak rss {} bytes", report.tokens_per_second, report.peak_rss_bytes);
    }
    Ok(())
}
