use std::fmt::Write as _;

/// One selected merge: the source at `source` folds into the destination at
/// `destination`. Positions index the token list as it was before the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub destination: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub tokens_before: usize,
    pub reduction: usize,
    /// Selected edges in rank order (score descending, then source, then destination).
    pub edges: Vec<Edge>,
}

impl StepRecord {
    pub fn tokens_after(&self) -> usize {
        self.tokens_before - self.reduction
    }
}

/// The full trace of one segment's merge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergePlan {
    pub segment_index: usize,
    pub initial_tokens: usize,
    pub final_tokens: usize,
    pub steps: Vec<StepRecord>,
    /// Pair scores that came out `-inf` because a head slice had zero norm.
    pub zero_norm_pairs: u64,
    /// Number of pair scores evaluated across all steps.
    pub similarity_evaluations: u64,
}

impl MergePlan {
    pub fn reductions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.reduction).collect()
    }

    /// Line-oriented text dump:
    ///
    /// ```text
    /// plan segment=<s> initial=<R0> final=<M> steps=<n>
    /// step <i> R=<R> r=<r>
    ///   <source> -> <destination> <score with 6 decimals, or -inf>
    /// ```
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "plan segment={} initial={} final={} steps={}",
            self.segment_index,
            self.initial_tokens,
            self.final_tokens,
            self.steps.len()
        )
        .unwrap();
        for (i, step) in self.steps.iter().enumerate() {
            writeln!(out, "step {i} R={} r={}", step.tokens_before, step.reduction).unwrap();
            for e in &step.edges {
                if e.score == f64::NEG_INFINITY {
                    writeln!(out, "  {} -> {} -inf", e.source, e.destination).unwrap();
                } else {
                    writeln!(out, "  {} -> {} {:.6}", e.source, e.destination, e.score).unwrap();
                }
            }
        }
        out
    }

    /// Index of the first step where `self` and `other` disagree, if any.
    pub fn first_divergence(&self, other: &MergePlan) -> Option<usize> {
        let common = self.steps.len().min(other.steps.len());
        (0..common)
            .find(|&i| self.steps[i] != other.steps[i])
            .or((self.steps.len() != other.steps.len()).then_some(common))
    }
}
