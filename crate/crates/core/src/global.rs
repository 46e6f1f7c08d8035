use crate::error::{Error, Result};
use crate::types::{GlobalFeature, VideoFeatures};

/// Temporal mean of the [CLS] tokens of the last `layers` stored encoder layers.
///
/// Token `e` averages layer `L_enc − layers + e`, so the shallowest selected
/// layer comes first. Sums are accumulated in `f64` in frame order.
pub fn aggregate_global(features: &VideoFeatures, layers: usize) -> Result<GlobalFeature> {
    let shape = features.shape();
    if layers == 0 || layers > shape.layers {
        return Err(Error::ETooLarge { global_layers: layers, stored: shape.layers });
    }
    let first = shape.layers - layers;
    let frames = shape.frames as f64;
    let tokens = (first..shape.layers)
        .map(|layer| {
            let mut acc = vec![0.0f64; shape.dim];
            for t in 0..shape.frames {
                for (a, &x) in acc.iter_mut().zip(features.cls(t, layer)) {
                    *a += x as f64;
                }
            }
            acc.into_iter().map(|a| (a / frames) as f32).collect()
        })
        .collect();
    Ok(GlobalFeature { tokens })
}
