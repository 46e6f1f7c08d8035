//! Head-averaged cosine similarity.
//!
//! A `d`-channel vector is cut into `C` contiguous heads of `d/C` channels;
//! the score of a pair is the mean over heads of the per-head cosine. Every
//! path that scores pairs (the merger, the oracle, the public function) goes
//! through [`channel_dot`] and [`combine_heads`], so scores agree to the bit.

use crate::error::{Error, Result};

const LANES: usize = 8;

/// Dot product with `f64` accumulation over eight interleaved lanes, reduced in
/// a fixed order.
#[inline]
pub fn channel_dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..LANES {
            acc[i] += x[i] as f64 * y[i] as f64;
        }
    }
    for (i, (x, y)) in ra.iter().zip(rb).enumerate() {
        acc[i] += *x as f64 * *y as f64;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

/// Squared norm of each head of `v`.
pub fn head_norms(v: &[f32], heads: usize) -> Vec<f64> {
    v.chunks_exact(v.len() / heads).map(|h| channel_dot(h, h)).collect()
}

/// Mean of per-head cosines given per-head dots and squared norms.
///
/// Returns `-inf` if any head of either side has zero norm, and clamps to
/// `[-1, 1]` otherwise.
#[inline]
pub fn combine_heads(dots: impl Iterator<Item = f64>, p_norms: &[f64], q_norms: &[f64]) -> f64 {
    let mut sum = 0.0;
    for ((dot, np), nq) in dots.zip(p_norms).zip(q_norms) {
        if *np == 0.0 || *nq == 0.0 {
            return f64::NEG_INFINITY;
        }
        sum += dot / (np * nq).sqrt();
    }
    let score = sum / p_norms.len() as f64;
    if score.is_nan() {
        f64::NEG_INFINITY
    } else {
        score.clamp(-1.0, 1.0)
    }
}

/// Score with precomputed head norms; `-inf` marks an undefined cosine.
#[inline]
pub(crate) fn score_with_norms(p: &[f32], q: &[f32], p_norms: &[f64], q_norms: &[f64]) -> f64 {
    let width = p.len() / p_norms.len();
    let dots = p.chunks_exact(width).zip(q.chunks_exact(width)).map(|(a, b)| channel_dot(a, b));
    combine_heads(dots, p_norms, q_norms)
}

/// `(1/C) Σ_c cos(p_c, q_c)` over `C` contiguous channel heads.
pub fn head_similarity(p: &[f32], q: &[f32], heads: usize) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: q.len() });
    }
    if heads == 0 || p.is_empty() || !p.len().is_multiple_of(heads) {
        return Err(Error::CNotDividingD { heads, dim: p.len() });
    }
    let (pn, qn) = (head_norms(p, heads), head_norms(q, heads));
    if let Some(head) = pn.iter().zip(&qn).position(|(a, b)| *a == 0.0 || *b == 0.0) {
        return Err(Error::ZeroNormHead { head });
    }
    Ok(score_with_norms(p, q, &pn, &qn))
}
