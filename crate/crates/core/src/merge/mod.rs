//! Bipartite soft matching within a segment.
//!
//! Each step splits the current `R` tokens into a source set `P` of `r`
//! tokens and a destination set `Q` of `R − r`. Every source proposes its
//! single best destination by head-averaged cosine similarity; the top `r`
//! proposals (all of them when `|P| = r`) are merged, so each step removes
//! exactly `r` tokens. Several sources may land on the same destination.
//!
//! Ties: a source's best destination is the lowest-positioned among equal
//! scores, and proposals are ranked by score descending then source position.

pub mod oracle;
pub mod partition;
pub mod plan;
pub mod schedule;
pub mod similarity;

use crate::config::{MergeConfig, MergeWeighting, PartitionRule};
use crate::error::{Error, Result};
use crate::par;
use crate::segment::SegmentView;
use crate::types::{SegmentFeature, Token};

pub use oracle::{oracle_merge_segment, ORACLE_TOKEN_LIMIT};
pub use partition::{bipartition, Partition};
pub use plan::{Edge, MergePlan, StepRecord};
pub use schedule::merge_schedule;
pub use similarity::head_similarity;

use similarity::{head_norms, score_with_norms};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeOptions {
    /// Test hook: resolve equal-score destinations to the highest position
    /// instead of the lowest. Exists only to prove the oracle check can fail.
    #[doc(hidden)]
    pub inject_tiebreak_fault: bool,
}

/// The partition rule for step `step` of segment `segment`: alternating rules
/// are reused as is, seeded rules get a seed derived from `(seed, segment, step)`.
pub fn step_rule(rule: &PartitionRule, segment: usize, step: usize) -> PartitionRule {
    match rule {
        PartitionRule::Alternating => PartitionRule::Alternating,
        PartitionRule::SeededRandom(seed) => {
            PartitionRule::SeededRandom(crate::rng::derive_seed(*seed, &[segment as u64, step as u64]))
        }
    }
}

pub(crate) fn check_tokens(tokens: &[Token], heads: usize) -> Result<usize> {
    let dim = tokens.first().map_or(0, |t| t.vector.len());
    if dim == 0 {
        return Err(Error::Precondition("tokens must be non-empty vectors".into()));
    }
    if let Some(t) = tokens.iter().find(|t| t.vector.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: t.vector.len() });
    }
    if heads == 0 || !dim.is_multiple_of(heads) {
        return Err(Error::CNotDividingD { heads, dim });
    }
    if tokens.iter().any(|t| t.weight == 0) {
        return Err(Error::Precondition("token weight must be at least 1".into()));
    }
    Ok(dim)
}

/// Folds `sources` into `destination`: `destination` first, then `sources` in
/// the given order, accumulated in `f64`.
pub(crate) fn fold_tokens(destination: Token, sources: &[&Token], weighting: MergeWeighting) -> Token {
    let weight: u32 = destination.weight + sources.iter().map(|t| t.weight).sum::<u32>();
    let vector = match weighting {
        MergeWeighting::SizeWeighted => {
            let total = weight as f64;
            let mut acc: Vec<f64> = destination.vector.iter().map(|&x| destination.weight as f64 * x as f64).collect();
            for s in sources {
                let w = s.weight as f64;
                for (a, &x) in acc.iter_mut().zip(&s.vector) {
                    *a += w * x as f64;
                }
            }
            acc.into_iter().map(|a| (a / total) as f32).collect()
        }
        MergeWeighting::PlainAverage => {
            let count = (sources.len() + 1) as f64;
            let mut acc: Vec<f64> = destination.vector.iter().map(|&x| x as f64).collect();
            for s in sources {
                for (a, &x) in acc.iter_mut().zip(&s.vector) {
                    *a += x as f64;
                }
            }
            acc.into_iter().map(|a| (a / count) as f32).collect()
        }
    };
    let provenance = destination.provenance.and_then(|mut p| {
        for s in sources {
            p.extend_from_slice(s.provenance.as_deref()?);
        }
        Some(p)
    });
    Token { vector, weight, provenance }
}

/// Token list plus cached per-head squared norms.
struct Workspace {
    tokens: Vec<Token>,
    norms: Vec<Vec<f64>>,
    heads: usize,
}

#[derive(Default)]
struct Counters {
    zero_norm_pairs: u64,
    evaluations: u64,
}

impl Workspace {
    fn new(tokens: Vec<Token>, heads: usize) -> Self {
        let norms = par::map_slice(&tokens, |t| head_norms(&t.vector, heads));
        Self { tokens, norms, heads }
    }

    /// Best destination for each source, in source order, with the count of
    /// `-inf` scores seen.
    ///
    /// Sources are processed in tiles against cache-sized blocks of
    /// destinations; destinations are still visited in ascending order per
    /// source, so the result is the same as a plain double loop.
    fn best_edges(&self, partition: &Partition, opts: MergeOptions) -> Vec<(Edge, u64)> {
        const SOURCE_TILE: usize = 16;
        const DEST_TILE: usize = 48;
        let dests = &partition.destinations;
        let dim = self.tokens[0].vector.len();
        // Destinations packed contiguously in visiting order.
        let mut packed = Vec::with_capacity(dests.len() * dim);
        let mut packed_norms = Vec::with_capacity(dests.len() * self.heads);
        for &q in dests {
            packed.extend_from_slice(&self.tokens[q].vector);
            packed_norms.extend_from_slice(&self.norms[q]);
        }
        let tiles: Vec<&[usize]> = partition.sources.chunks(SOURCE_TILE).collect();
        let per_tile = par::map_slice(&tiles, |tile| {
            let mut best: Vec<(Edge, u64)> = tile
                .iter()
                .map(|&p| (Edge { source: p, destination: dests[0], score: f64::NEG_INFINITY }, 0))
                .collect();
            for (b, block) in dests.chunks(DEST_TILE).enumerate() {
                let base = b * DEST_TILE;
                for (slot, &p) in best.iter_mut().zip(tile.iter()) {
                    let pv = &self.tokens[p].vector;
                    let pn = &self.norms[p];
                    for (j, &q) in block.iter().enumerate() {
                        let k = base + j;
                        let qv = &packed[k * dim..(k + 1) * dim];
                        let qn = &packed_norms[k * self.heads..(k + 1) * self.heads];
                        let s = score_with_norms(pv, qv, pn, qn);
                        if s == f64::NEG_INFINITY {
                            slot.1 += 1;
                        }
                        let better = if opts.inject_tiebreak_fault { s >= slot.0.score } else { s > slot.0.score };
                        if (b == 0 && j == 0) || better {
                            slot.0 = Edge { source: p, destination: q, score: s };
                        }
                    }
                }
            }
            best
        });
        per_tile.into_iter().flatten().collect()
    }

    fn step(
        &mut self,
        partition: &Partition,
        r: usize,
        weighting: MergeWeighting,
        opts: MergeOptions,
        counters: &mut Counters,
    ) -> StepRecord {
        let len = self.tokens.len();
        let mut edges = Vec::with_capacity(partition.sources.len());
        for (edge, zero) in self.best_edges(partition, opts) {
            counters.zero_norm_pairs += zero;
            edges.push(edge);
        }
        counters.evaluations += (partition.sources.len() * partition.destinations.len()) as u64;
        edges.sort_by(|a, b| {
            b.score.total_cmp(&a.score).then(a.source.cmp(&b.source)).then(a.destination.cmp(&b.destination))
        });
        edges.truncate(r);

        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); len];
        let mut removed = vec![false; len];
        for e in &edges {
            incoming[e.destination].push(e.source);
            removed[e.source] = true;
        }
        for list in &mut incoming {
            list.sort_unstable();
        }

        let old_tokens = std::mem::take(&mut self.tokens);
        let old_norms = std::mem::take(&mut self.norms);
        let mut tokens = Vec::with_capacity(len - r);
        let mut norms = Vec::with_capacity(len - r);
        for (i, (token, norm)) in old_tokens.iter().zip(old_norms).enumerate() {
            if removed[i] {
                continue;
            }
            if incoming[i].is_empty() {
                tokens.push(token.clone());
                norms.push(norm);
            } else {
                let sources: Vec<&Token> = incoming[i].iter().map(|&p| &old_tokens[p]).collect();
                let merged = fold_tokens(token.clone(), &sources, weighting);
                norms.push(head_norms(&merged.vector, self.heads));
                tokens.push(merged);
            }
        }
        self.tokens = tokens;
        self.norms = norms;
        StepRecord { tokens_before: len, reduction: r, edges }
    }
}

/// One merge step with an explicit partition; selects the top `r` source proposals.
pub fn merge_partitioned(
    tokens: &[Token],
    partition: &Partition,
    r: usize,
    heads: usize,
    weighting: MergeWeighting,
) -> Result<(Vec<Token>, StepRecord)> {
    check_tokens(tokens, heads)?;
    let len = tokens.len();
    if r == 0 || r > partition.sources.len() || partition.sources.len() + partition.destinations.len() != len {
        return Err(Error::Precondition(format!(
            "cannot merge {r} of {} sources over {len} tokens",
            partition.sources.len()
        )));
    }
    let mut ws = Workspace::new(tokens.to_vec(), heads);
    let record = ws.step(partition, r, weighting, MergeOptions::default(), &mut Counters::default());
    Ok((ws.tokens, record))
}

/// One merge step removing exactly `r` tokens, with `P` drawn by `rule`.
pub fn merge_step(
    tokens: &[Token],
    r: usize,
    rule: &PartitionRule,
    heads: usize,
    weighting: MergeWeighting,
) -> Result<(Vec<Token>, StepRecord)> {
    let partition = bipartition(tokens.len(), r, rule)?;
    merge_partitioned(tokens, &partition, r, heads, weighting)
}

pub fn merge_segment(view: &SegmentView, config: &MergeConfig) -> Result<(SegmentFeature, MergePlan)> {
    merge_segment_with(view, config, MergeOptions::default())
}

/// Reduces a segment's tokens to exactly `M` following the configured schedule.
pub fn merge_segment_with(
    view: &SegmentView,
    config: &MergeConfig,
    opts: MergeOptions,
) -> Result<(SegmentFeature, MergePlan)> {
    let heads = config.similarity_heads;
    check_tokens(&view.tokens, heads)?;
    let initial = view.tokens.len();
    let target = config.tokens_per_segment;
    if target == 0 || target > initial {
        return Err(Error::MTooLarge { tokens_per_segment: target, available: initial });
    }
    let schedule = merge_schedule(initial, target, config.schedule)?;

    let mut ws = Workspace::new(view.tokens.clone(), heads);
    let mut counters = Counters::default();
    let mut steps = Vec::with_capacity(schedule.len());
    for (i, &r) in schedule.iter().enumerate() {
        let rule = step_rule(&config.partition, view.segment_index, i);
        let partition = bipartition(ws.tokens.len(), r, &rule)?;
        steps.push(ws.step(&partition, r, config.weighting, opts, &mut counters));
    }
    debug_assert_eq!(ws.tokens.len(), target);
    let plan = MergePlan {
        segment_index: view.segment_index,
        initial_tokens: initial,
        final_tokens: ws.tokens.len(),
        steps,
        zero_norm_pairs: counters.zero_norm_pairs,
        similarity_evaluations: counters.evaluations,
    };
    Ok((SegmentFeature { segment_index: view.segment_index, tokens: ws.tokens }, plan))
}
