//! Brute-force reference for [`merge_segment`](super::merge_segment).
//!
//! Nothing is cached between steps: every pair score is recomputed from the
//! raw vectors (norms included), candidates are materialized as a full list
//! and ordered with stable sorts, and the next token list is rebuilt by a
//! plain scan. Only the pair-score arithmetic is shared with the optimized
//! path, because the two must agree bit for bit.

use super::similarity::{channel_dot, combine_heads};
use super::{bipartition, check_tokens, merge_schedule, step_rule, Edge, MergePlan, StepRecord};
use crate::config::{MergeConfig, MergeWeighting};
use crate::error::{Error, Result};
use crate::segment::SegmentView;
use crate::types::{SegmentFeature, Token};

pub const ORACLE_TOKEN_LIMIT: usize = 4096;

fn oracle_score(p: &[f32], q: &[f32], heads: usize) -> f64 {
    let width = p.len() / heads;
    let mut dots = Vec::new();
    let mut pn = Vec::new();
    let mut qn = Vec::new();
    for c in 0..heads {
        let ph = &p[c * width..(c + 1) * width];
        let qh = &q[c * width..(c + 1) * width];
        dots.push(channel_dot(ph, qh));
        pn.push(channel_dot(ph, ph));
        qn.push(channel_dot(qh, qh));
    }
    combine_heads(dots.into_iter(), &pn, &qn)
}

fn oracle_merge(dest: &Token, sources: &[&Token], weighting: MergeWeighting) -> Token {
    let d = dest.vector.len();
    let mut vector = vec![0.0f32; d];
    let mut weight = dest.weight;
    for s in sources {
        weight += s.weight;
    }
    for (c, out) in vector.iter_mut().enumerate() {
        let value = match weighting {
            MergeWeighting::SizeWeighted => {
                let mut acc = dest.weight as f64 * dest.vector[c] as f64;
                for s in sources {
                    acc += s.weight as f64 * s.vector[c] as f64;
                }
                acc / weight as f64
            }
            MergeWeighting::PlainAverage => {
                let mut acc = dest.vector[c] as f64;
                for s in sources {
                    acc += s.vector[c] as f64;
                }
                acc / (sources.len() + 1) as f64
            }
        };
        *out = value as f32;
    }
    let mut provenance = dest.provenance.clone();
    for s in sources {
        provenance = match (provenance, &s.provenance) {
            (Some(mut p), Some(extra)) => {
                p.extend(extra.iter().copied());
                Some(p)
            }
            _ => None,
        };
    }
    Token { vector, weight, provenance }
}

pub fn oracle_merge_segment(view: &SegmentView, config: &MergeConfig) -> Result<(SegmentFeature, MergePlan)> {
    let initial = view.tokens.len();
    if initial > ORACLE_TOKEN_LIMIT {
        return Err(Error::InputTooLargeForOracle { tokens: initial, limit: ORACLE_TOKEN_LIMIT });
    }
    let heads = config.similarity_heads;
    check_tokens(&view.tokens, heads)?;
    let target = config.tokens_per_segment;
    if target == 0 || target > initial {
        return Err(Error::MTooLarge { tokens_per_segment: target, available: initial });
    }

    let mut tokens = view.tokens.clone();
    let mut steps = Vec::new();
    let mut zero_norm_pairs = 0u64;
    let mut evaluations = 0u64;
    for (i, r) in merge_schedule(initial, target, config.schedule)?.into_iter().enumerate() {
        let rule = step_rule(&config.partition, view.segment_index, i);
        let partition = bipartition(tokens.len(), r, &rule)?;

        // Every (source, destination) pair, scored from scratch.
        let mut candidates: Vec<Edge> = Vec::new();
        for &p in &partition.sources {
            for &q in &partition.destinations {
                let score = oracle_score(&tokens[p].vector, &tokens[q].vector, heads);
                evaluations += 1;
                if score == f64::NEG_INFINITY {
                    zero_norm_pairs += 1;
                }
                candidates.push(Edge { source: p, destination: q, score });
            }
        }
        // Order by (source, score desc, destination) and keep the first per source.
        candidates.sort_by_key(|a| a.destination);
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
        candidates.sort_by_key(|a| a.source);
        let mut best: Vec<Edge> = Vec::new();
        for e in candidates {
            if best.last().is_none_or(|b| b.source != e.source) {
                best.push(e);
            }
        }
        best.sort_by_key(|a| a.source);
        best.sort_by(|a, b| b.score.total_cmp(&a.score));
        best.truncate(r);

        let mut next = Vec::new();
        for (pos, token) in tokens.iter().enumerate() {
            if best.iter().any(|e| e.source == pos) {
                continue;
            }
            let mut sources: Vec<usize> = best.iter().filter(|e| e.destination == pos).map(|e| e.source).collect();
            sources.sort();
            if sources.is_empty() {
                next.push(token.clone());
            } else {
                let refs: Vec<&Token> = sources.iter().map(|&s| &tokens[s]).collect();
                next.push(oracle_merge(token, &refs, config.weighting));
            }
        }
        steps.push(StepRecord { tokens_before: tokens.len(), reduction: r, edges: best });
        tokens = next;
    }
    let plan = MergePlan {
        segment_index: view.segment_index,
        initial_tokens: initial,
        final_tokens: tokens.len(),
        steps,
        zero_norm_pairs,
        similarity_evaluations: evaluations,
    };
    Ok((SegmentFeature { segment_index: view.segment_index, tokens }, plan))
}
