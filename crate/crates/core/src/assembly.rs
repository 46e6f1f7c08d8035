//! Final sequence assembly, projection, and compression metrics.

use std::path::PathBuf;

use crate::config::AssemblyOrder;
use crate::error::{Error, Result};
use crate::io::Matrix;
use crate::merge::similarity::channel_dot;
use crate::par;
use crate::types::{GlobalFeature, SegmentFeature, Token, VideoFeatures, VideoRepresentation};

/// Concatenates the global block and the segment blocks in `order`.
///
/// `locals` must be in ascending segment order (indices `0..S`) and hold the
/// same number of tokens each.
pub fn assemble(global: GlobalFeature, locals: Vec<SegmentFeature>, order: AssemblyOrder) -> Result<VideoRepresentation> {
    let dim = global
        .tokens
        .first()
        .or_else(|| locals.first().and_then(|s| s.tokens.first()).map(|t| &t.vector))
        .map(Vec::len)
        .ok_or_else(|| Error::SegmentMismatch("nothing to assemble".into()))?;
    let per_segment = locals.first().map_or(0, |s| s.tokens.len());
    for (i, seg) in locals.iter().enumerate() {
        if seg.segment_index != i {
            return Err(Error::SegmentMismatch(format!(
                "segment at position {i} has index {}",
                seg.segment_index
            )));
        }
        if seg.tokens.len() != per_segment || per_segment == 0 {
            return Err(Error::SegmentMismatch(format!(
                "segment {i} has {} tokens, expected {per_segment}",
                seg.tokens.len()
            )));
        }
    }
    let rows_global = global.tokens.iter().map(|v| v.as_slice());
    let rows_local = locals.iter().flat_map(|s| s.tokens.iter().map(|t| t.vector.as_slice()));
    let rows: Vec<&[f32]> = match order {
        AssemblyOrder::GlobalFirst => rows_global.chain(rows_local).collect(),
        AssemblyOrder::LocalFirst => rows_local.chain(rows_global).collect(),
    };
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
    }
    let flattened = rows.concat();
    Ok(VideoRepresentation { global, locals, order, dim, flattened })
}

/// An affine map `x ↦ W·x + b` from `d` to `d_out` channels, or the identity.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionWeights {
    Identity,
    Affine {
        d_out: usize,
        d: usize,
        /// `d_out × d` row-major.
        matrix: Vec<f32>,
        bias: Vec<f32>,
        source: Option<PathBuf>,
    },
}

impl ProjectionWeights {
    pub fn affine(d_out: usize, d: usize, matrix: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if d_out == 0 || d == 0 || matrix.len() != d_out * d || bias.len() != d_out {
            return Err(Error::InvalidShape(format!(
                "affine map {d_out}x{d} with {} weights and {} biases",
                matrix.len(),
                bias.len()
            )));
        }
        Ok(Self::Affine { d_out, d, matrix, bias, source: None })
    }

    pub fn load(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = std::fs::File::open(&path)?;
        let (d_out, d, matrix, bias) = crate::io::read_weights(std::io::BufReader::new(file))?;
        Ok(Self::Affine { d_out, d, matrix, bias, source: Some(path) })
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            ProjectionWeights::Identity => input_dim,
            ProjectionWeights::Affine { d_out, .. } => *d_out,
        }
    }
}

/// Applies `weights` to every row of the flattened representation.
pub fn project(repr: &VideoRepresentation, weights: &ProjectionWeights) -> Result<Matrix> {
    let rows = repr.rows();
    match weights {
        ProjectionWeights::Identity => Ok(Matrix { rows, cols: repr.dim, data: repr.flattened.clone() }),
        ProjectionWeights::Affine { d_out, d, matrix, bias, .. } => {
            if *d != repr.dim {
                return Err(Error::DimensionMismatch { expected: *d, actual: repr.dim });
            }
            let out_rows = par::map_range(rows, |i| {
                let x = repr.row(i);
                matrix
                    .chunks_exact(*d)
                    .zip(bias)
                    .map(|(w, b)| (channel_dot(w, x) + *b as f64) as f32)
                    .collect::<Vec<f32>>()
            });
            Ok(Matrix { rows, cols: *d_out, data: out_rows.concat() })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionMetrics {
    pub input_tokens: usize,
    pub output_tokens: usize,
    pub ratio: f64,
    /// Mean over original patch tokens of the best full-vector cosine to any
    /// local output token. Zero-norm vectors contribute a cosine of 0.
    pub coverage: f64,
    /// Per segment, `‖Σ w·z − Σ v‖ / ‖Σ v‖` over that segment's original tokens.
    pub conservation_residuals: Vec<f64>,
}

/// Relative L2 gap between the weighted sum of `outputs` and the plain sum of
/// the original vectors, accumulated in `f64`.
pub fn conservation_residual<'a>(originals: impl IntoIterator<Item = &'a [f32]>, outputs: &[Token]) -> f64 {
    let dim = outputs.first().map_or(0, |t| t.vector.len());
    let mut input = vec![0.0f64; dim];
    for v in originals {
        for (a, &x) in input.iter_mut().zip(v) {
            *a += x as f64;
        }
    }
    let mut output = vec![0.0f64; dim];
    for t in outputs {
        for (a, &x) in output.iter_mut().zip(&t.vector) {
            *a += t.weight as f64 * x as f64;
        }
    }
    let diff = input.iter().zip(&output).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = input.iter().map(|a| a * a).sum::<f64>().sqrt();
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

pub fn compression_metrics(original: &VideoFeatures, repr: &VideoRepresentation) -> CompressionMetrics {
    let shape = original.shape();
    let input_tokens = shape.total_tokens();
    let output_tokens = repr.rows();

    let outputs: Vec<&[f32]> = repr.locals.iter().flat_map(|s| s.tokens.iter().map(|t| t.vector.as_slice())).collect();
    let output_norms: Vec<f64> = outputs.iter().map(|v| channel_dot(v, v).sqrt()).collect();
    let best = par::map_range(input_tokens, |i| {
        let v = original.patch(i / shape.patches, i % shape.patches);
        let nv = channel_dot(v, v).sqrt();
        if nv == 0.0 {
            return 0.0;
        }
        outputs
            .iter()
            .zip(&output_norms)
            .map(|(o, &no)| if no == 0.0 { 0.0 } else { channel_dot(v, o) / (nv * no) })
            .fold(f64::NEG_INFINITY, f64::max)
            .clamp(-1.0, 1.0)
    });
    let coverage = if outputs.is_empty() { 0.0 } else { best.iter().sum::<f64>() / input_tokens as f64 };

    let segments = repr.locals.len().max(1);
    let k = shape.frames / segments;
    let conservation_residuals = repr
        .locals
        .iter()
        .map(|seg| {
            let s = seg.segment_index;
            let originals = (s * k..(s + 1) * k).flat_map(|t| (0..shape.patches).map(move |n| (t, n)));
            conservation_residual(originals.map(|(t, n)| original.patch(t, n)), &seg.tokens)
        })
        .collect();

    CompressionMetrics {
        input_tokens,
        output_tokens,
        ratio: input_tokens as f64 / output_tokens.max(1) as f64,
        coverage,
        conservation_residuals,
    }
}
