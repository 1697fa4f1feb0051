//! Temporal self-attention and gated spatial attention blocks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::nn::{xavier_uniform, LayerNorm};
use crate::numcore::ops::causal_mask;
use crate::numcore::{Graph, NodeId, ParamId, ParamStore, Tensor};

/// Sinusoidal position table: row `p`, columns `(2i, 2i+1)` hold
/// `sin`/`cos` of `p / 10000^(2i/d_model)`.
pub fn positional_encoding(t_max: usize, d_model: usize) -> Result<Tensor> {
    if !d_model.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "d_model must be even, got {d_model}"
        )));
    }
    let mut vals = vec![0.0; t_max * d_model];
    for p in 0..t_max {
        for i in 0..d_model / 2 {
            let angle = p as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            vals[p * d_model + 2 * i] = angle.sin();
            vals[p * d_model + 2 * i + 1] = angle.cos();
        }
    }
    Tensor::matrix(t_max, d_model, vals)
}

#[derive(Debug, Clone, Copy)]
struct HeadWeights {
    query: ParamId,
    key: ParamId,
    value: ParamId,
    output: ParamId,
}

/// Multi-head attention projections with a residual layer norm.
#[derive(Debug, Clone)]
pub struct AttentionBlock {
    heads: Vec<HeadWeights>,
    head_dim: usize,
    norm: LayerNorm,
}

/// Nodes produced by [`AttentionBlock::temporal`].
#[derive(Debug, Clone)]
pub struct TemporalOutput {
    pub output: NodeId,
    pub head_weights: Vec<NodeId>,
    pub mean_weights: NodeId,
}

/// Nodes produced by [`AttentionBlock::gated`].
#[derive(Debug, Clone)]
pub struct GatedOutput {
    pub output: NodeId,
    /// Gated spatial weights per head; empty when there is no spatial cache.
    pub head_weights: Vec<NodeId>,
}

impl AttentionBlock {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_model: usize,
        heads: usize,
        head_dim: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if heads == 0 || head_dim == 0 {
            return Err(Error::InvalidArgument(
                "attention needs heads and head_dim > 0".into(),
            ));
        }
        let mut hw = Vec::with_capacity(heads);
        for h in 0..heads {
            let mut mat = |part: &str, i: usize, o: usize| {
                store.insert(format!("{name}.head{h}.{part}"), xavier_uniform(rng, i, o))
            };
            hw.push(HeadWeights {
                query: mat("query", d_model, head_dim)?,
                key: mat("key", d_model, head_dim)?,
                value: mat("value", d_model, head_dim)?,
                output: mat("output", head_dim, d_model)?,
            });
        }
        Ok(Self {
            heads: hw,
            head_dim,
            norm: LayerNorm::new(store, &format!("{name}.norm"), d_model)?,
        })
    }

    pub fn num_heads(&self) -> usize {
        self.heads.len()
    }

    /// Causal multi-head self-attention over the temporal rows:
    /// `layer_norm(x + attention(x))`.
    pub fn temporal(&self, g: &mut Graph, store: &ParamStore, x: NodeId) -> Result<TemporalOutput> {
        let t = g.value(x).rows();
        let mask = causal_mask(t);
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let mut attn = None;
        let mut head_weights = Vec::with_capacity(self.heads.len());
        for hw in &self.heads {
            let (wq, wk, wv, wo) = (
                g.param(store, hw.query),
                g.param(store, hw.key),
                g.param(store, hw.value),
                g.param(store, hw.output),
            );
            let q = g.matmul(x, wq)?;
            let k = g.matmul(x, wk)?;
            let v = g.matmul(x, wv)?;
            let scores = g.matmul_nt(q, k)?;
            let scores = g.scale(scores, scale);
            let w = g.masked_softmax(scores, &mask)?;
            head_weights.push(w);
            let ctx = g.matmul(w, v)?;
            let proj = g.matmul(ctx, wo)?;
            attn = Some(match attn {
                None => proj,
                Some(acc) => g.add(acc, proj)?,
            });
        }
        let residual = g.add(x, attn.expect("at least one head"))?;
        let output = self.norm.forward(g, store, residual)?;
        let mut mean = head_weights[0];
        for &w in &head_weights[1..] {
            mean = g.add(mean, w)?;
        }
        let mean_weights = g.scale(mean, 1.0 / head_weights.len() as f64);
        Ok(TemporalOutput {
            output,
            head_weights,
            mean_weights,
        })
    }

    /// Temporal rows attend over the spatial cache with weights rescaled by
    /// the temporal attention each spatial row's source element received.
    ///
    /// Query `t` only sees spatial rows whose origin is `<= t`. Without any
    /// admissible row the attention term is zero and the block reduces to
    /// `layer_norm(x)`.
    pub fn gated(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        x: NodeId,
        spatial: Option<NodeId>,
        origin_map: &[usize],
        temporal_weights: NodeId,
    ) -> Result<GatedOutput> {
        let Some(spatial) = spatial else {
            let output = self.norm.forward(g, store, x)?;
            return Ok(GatedOutput {
                output,
                head_weights: Vec::new(),
            });
        };
        let t = g.value(x).rows();
        let s = origin_map.len();
        let mask: Vec<bool> = (0..t * s).map(|qk| origin_map[qk % s] <= qk / s).collect();
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let mut attn = None;
        let mut head_weights = Vec::with_capacity(self.heads.len());
        for hw in &self.heads {
            let (wq, wk, wv, wo) = (
                g.param(store, hw.query),
                g.param(store, hw.key),
                g.param(store, hw.value),
                g.param(store, hw.output),
            );
            let q = g.matmul(x, wq)?;
            let k = g.matmul(spatial, wk)?;
            let v = g.matmul(spatial, wv)?;
            let scores = g.matmul_nt(q, k)?;
            let scores = g.scale(scores, scale);
            let raw = g.masked_softmax(scores, &mask)?;
            let gated = gate_weights(g, raw, temporal_weights, origin_map)?;
            head_weights.push(gated);
            let ctx = g.matmul(gated, v)?;
            let proj = g.matmul(ctx, wo)?;
            attn = Some(match attn {
                None => proj,
                Some(acc) => g.add(acc, proj)?,
            });
        }
        let residual = g.add(x, attn.expect("at least one head"))?;
        let output = self.norm.forward(g, store, residual)?;
        Ok(GatedOutput {
            output,
            head_weights,
        })
    }
}

/// `p'[q, k] ∝ p[q, k] · w[q, origin[k]]`, renormalized per row.
pub fn gate_weights(
    g: &mut Graph,
    raw: NodeId,
    temporal_weights: NodeId,
    origin_map: &[usize],
) -> Result<NodeId> {
    let per_row = g.gather_cols(temporal_weights, origin_map)?;
    let scaled = g.mul(raw, per_row)?;
    Ok(g.normalize_rows(scaled))
}

/// Eager form of [`gate_weights`].
pub fn gate_spatial_weights(
    raw: &Tensor,
    temporal_weights: &Tensor,
    origin_map: &[usize],
) -> Result<Tensor> {
    let mut g = Graph::new();
    let r = g.constant(raw.clone());
    let w = g.constant(temporal_weights.clone());
    let out = gate_weights(&mut g, r, w, origin_map)?;
    Ok(g.value(out).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_position_alternates_zero_one() {
        let pe = positional_encoding(3, 6).unwrap();
        assert_eq!(pe.row(0), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn encoding_is_bounded() {
        let pe = positional_encoding(50, 16).unwrap();
        assert!(pe.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn encoding_direct_value() {
        let pe = positional_encoding(2, 4).unwrap();
        assert!((pe.get(1, 0) - 1f64.sin()).abs() < 1e-15);
        assert!((pe.get(1, 1) - 1f64.cos()).abs() < 1e-15);
        assert!((pe.get(1, 0) - 0.8415).abs() < 1e-4);
        assert!((pe.get(1, 1) - 0.5403).abs() < 1e-4);
        // i = 1 uses 10000^(2/4) = 100
        assert!((pe.get(1, 2) - 0.01f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn odd_width_is_rejected() {
        assert!(positional_encoding(4, 5).is_err());
    }

    #[test]
    fn gating_by_hand() {
        // query attends two images with two spatial rows each
        let raw = Tensor::from_rows(&[vec![0.25; 4]]).unwrap();
        let w = Tensor::from_rows(&[vec![0.8, 0.2]]).unwrap();
        let gated = gate_spatial_weights(&raw, &w, &[0, 0, 1, 1]).unwrap();
        let expected = [0.4, 0.4, 0.1, 0.1];
        for (a, b) in gated.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_gate_is_identity() {
        let raw = Tensor::from_rows(&[vec![0.1, 0.2, 0.3, 0.4]]).unwrap();
        let w = Tensor::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let gated = gate_spatial_weights(&raw, &w, &[0, 0, 1, 1]).unwrap();
        assert!(gated.max_abs_diff(&raw) < 1e-15);
    }
}
