//! Modality peripherals and temporal/spatial cache construction.
//!
//! Every element goes through the peripheral registered for its modality,
//! producing a `(d_s, d_model)` block. Spatial blocks (`d_s > 1`) are
//! appended to the spatial cache row by row; every element contributes
//! one row to the temporal cache, the mean of its block.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{Element, Payload};
use crate::error::{shape_err, Error, Result};
use crate::numcore::nn::Linear;
use crate::numcore::{Graph, NodeId, ParamId, ParamStore, Tensor};

/// Feature extractor placed in front of a modality's projector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Extractor {
    /// Mean of learned token embeddings.
    TokenEmbedding { vocab: usize, embed_dim: usize },
    /// Non-overlapping `patch × patch` tiles of an `h × w` grid, flattened.
    PatchGrid { h: usize, w: usize, patch: usize },
    /// Concatenated one-hot codes, each with an extra MISSING slot.
    CategoricalOneHot { cardinalities: Vec<usize> },
    /// Precomputed vectors of a fixed length.
    Passthrough { dim: usize },
}

impl Extractor {
    /// Width of the extracted features before projection.
    pub fn feature_dim(&self) -> usize {
        match self {
            Extractor::TokenEmbedding { embed_dim, .. } => *embed_dim,
            Extractor::PatchGrid { patch, .. } => patch * patch,
            Extractor::CategoricalOneHot { cardinalities } => {
                cardinalities.iter().map(|c| c + 1).sum()
            }
            Extractor::Passthrough { dim } => *dim,
        }
    }

    /// Rows emitted per element.
    pub fn spatial_extent(&self) -> usize {
        match self {
            Extractor::PatchGrid { h, w, patch } => (h / patch) * (w / patch),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeripheralSpec {
    pub modality: String,
    pub extractor: Extractor,
}

impl PeripheralSpec {
    pub fn new(modality: impl Into<String>, extractor: Extractor) -> Self {
        Self {
            modality: modality.into(),
            extractor,
        }
    }
}

#[derive(Debug, Clone)]
struct Peripheral {
    spec: PeripheralSpec,
    embedding: Option<ParamId>,
    projector: Linear,
}

/// One peripheral per registered modality, with parameters in a shared store.
#[derive(Debug, Clone)]
pub struct PeripheralSet {
    d_model: usize,
    peripherals: Vec<Peripheral>,
}

impl PeripheralSet {
    pub fn new(
        specs: &[PeripheralSpec],
        d_model: usize,
        store: &mut ParamStore,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut peripherals: Vec<Peripheral> = Vec::with_capacity(specs.len());
        for spec in specs {
            if peripherals.iter().any(|p| p.spec.modality == spec.modality) {
                return Err(Error::InvalidArgument(format!(
                    "two peripherals for modality `{}`",
                    spec.modality
                )));
            }
            let prefix = format!("periph.{}", spec.modality);
            let embedding = match &spec.extractor {
                Extractor::TokenEmbedding { vocab, embed_dim } => {
                    let vals = (0..vocab * embed_dim)
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect();
                    let table = Tensor::matrix(*vocab, *embed_dim, vals)?;
                    Some(store.insert(format!("{prefix}.embed"), table)?)
                }
                Extractor::PatchGrid { h, w, patch } => {
                    if *patch == 0 || h % patch != 0 || w % patch != 0 {
                        return Err(Error::InvalidArgument(format!(
                            "grid {h}x{w} is not tiled by patch {patch}"
                        )));
                    }
                    None
                }
                _ => None,
            };
            let projector = Linear::new(
                store,
                &format!("{prefix}.proj"),
                spec.extractor.feature_dim(),
                d_model,
                rng,
            )?;
            peripherals.push(Peripheral {
                spec: spec.clone(),
                embedding,
                projector,
            });
        }
        Ok(Self {
            d_model,
            peripherals,
        })
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn specs(&self) -> impl Iterator<Item = &PeripheralSpec> {
        self.peripherals.iter().map(|p| &p.spec)
    }

    /// Projector of a modality, if registered.
    pub fn projector(&self, modality: &str) -> Option<Linear> {
        self.find(modality).ok().map(|p| p.projector)
    }

    fn find(&self, modality: &str) -> Result<&Peripheral> {
        self.peripherals
            .iter()
            .find(|p| p.spec.modality == modality)
            .ok_or_else(|| Error::UnknownModality(modality.to_string()))
    }

    /// Records the peripheral of `element` on `g`; the node is `(d_s, d_model)`.
    pub fn apply(&self, g: &mut Graph, store: &ParamStore, element: &Element) -> Result<NodeId> {
        let p = self.find(&element.modality)?;
        let features = match (&p.spec.extractor, &element.payload) {
            (Extractor::TokenEmbedding { vocab, .. }, Payload::Tokens(ids)) => {
                if ids.is_empty() {
                    return Err(Error::InvalidSequence("text element without tokens".into()));
                }
                if let Some(&id) = ids.iter().find(|&&id| id as usize >= *vocab) {
                    return Err(Error::TokenOutOfRange { id, vocab: *vocab });
                }
                let idx: Vec<usize> = ids.iter().map(|&i| i as usize).collect();
                let table = g.param(store, p.embedding.expect("token peripheral has a table"));
                let rows = g.gather_rows(table, &idx)?;
                if idx.len() == 1 {
                    rows
                } else {
                    g.mean_rows(rows)
                }
            }
            (
                &Extractor::PatchGrid { h, w, patch },
                Payload::Grid {
                    h: gh,
                    w: gw,
                    pixels,
                },
            ) => {
                if (h, w) != (*gh, *gw) {
                    return Err(shape_err(
                        "patch_grid",
                        format!("expected {h}x{w} grid, got {gh}x{gw}"),
                    ));
                }
                g.constant(patchify(pixels, h, w, patch))
            }
            (Extractor::CategoricalOneHot { cardinalities }, Payload::Categorical(values)) => {
                g.constant(one_hot_with_missing(values, cardinalities)?)
            }
            (&Extractor::Passthrough { dim }, Payload::Embedding(v)) => {
                if v.len() != dim {
                    return Err(shape_err(
                        "passthrough",
                        format!("expected {dim}, got {}", v.len()),
                    ));
                }
                g.constant(Tensor::matrix(1, dim, v.clone())?)
            }
            (extractor, payload) => {
                return Err(Error::InvalidArgument(format!(
                    "`{}` peripheral ({extractor:?}) cannot read a {:?} payload",
                    element.modality,
                    payload.kind()
                )))
            }
        };
        let out = p.projector.forward(g, store, features)?;
        let rows = g.value(out).rows();
        if rows != element.d_s {
            return Err(shape_err(
                "peripheral",
                format!(
                    "element declares d_s = {} but peripheral emits {rows}",
                    element.d_s
                ),
            ));
        }
        Ok(out)
    }

    /// Eager peripheral output for one element.
    pub fn apply_peripheral(&self, store: &ParamStore, element: &Element) -> Result<Tensor> {
        let mut g = Graph::new();
        let n = self.apply(&mut g, store, element)?;
        Ok(g.value(n).clone())
    }

    /// Same as [`PeripheralSet::apply_peripheral`] but checks the element
    /// against an explicitly chosen spec.
    pub fn apply_with_spec(
        &self,
        store: &ParamStore,
        element: &Element,
        spec: &PeripheralSpec,
    ) -> Result<Tensor> {
        if element.modality != spec.modality {
            return Err(Error::ModalityMismatch {
                element: element.modality.clone(),
                peripheral: spec.modality.clone(),
            });
        }
        self.apply_peripheral(store, element)
    }
}

/// `(h/p · w/p, p²)` matrix of flattened tiles in row-major tile order.
fn patchify(pixels: &[f64], h: usize, w: usize, patch: usize) -> Tensor {
    let (ph, pw) = (h / patch, w / patch);
    let mut out = Vec::with_capacity(h * w);
    for ti in 0..ph {
        for tj in 0..pw {
            for r in 0..patch {
                let start = (ti * patch + r) * w + tj * patch;
                out.extend_from_slice(&pixels[start..start + patch]);
            }
        }
    }
    Tensor::matrix(ph * pw, patch * patch, out).expect("tiles cover the grid")
}

fn one_hot_with_missing(values: &[Option<u32>], cardinalities: &[usize]) -> Result<Tensor> {
    if values.len() != cardinalities.len() {
        return Err(shape_err(
            "categorical",
            format!(
                "{} features for {} cardinalities",
                values.len(),
                cardinalities.len()
            ),
        ));
    }
    let width: usize = cardinalities.iter().map(|c| c + 1).sum();
    let mut row = vec![0.0; width];
    let mut offset = 0;
    for (v, &card) in values.iter().zip(cardinalities) {
        let slot = match v {
            Some(x) if (*x as usize) < card => *x as usize,
            Some(x) => {
                return Err(Error::InvalidArgument(format!(
                    "categorical value {x} outside 0..{card}"
                )))
            }
            None => card,
        };
        row[offset + slot] = 1.0;
        offset += card + 1;
    }
    Tensor::matrix(1, width, row)
}

/// Temporal cache, spatial cache and the temporal origin of each spatial row.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheSet {
    pub temporal: Tensor,
    pub spatial: Tensor,
    pub origin_map: Vec<usize>,
}

impl CacheSet {
    pub fn empty(d_model: usize) -> Self {
        Self {
            temporal: Tensor::zeros(&[0, d_model]),
            spatial: Tensor::zeros(&[0, d_model]),
            origin_map: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.temporal.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cache nodes recorded on a graph.
#[derive(Debug, Clone)]
pub struct GraphCaches {
    pub temporal: NodeId,
    pub spatial: Option<NodeId>,
    pub origin_map: Vec<usize>,
}

/// Builds both caches for `elements` on `g`.
pub fn build_caches_graph(
    g: &mut Graph,
    store: &ParamStore,
    peripherals: &PeripheralSet,
    elements: &[Element],
) -> Result<GraphCaches> {
    if elements.is_empty() {
        return Err(Error::InvalidSequence(
            "cannot build caches for an empty state".into(),
        ));
    }
    let mut temporal = Vec::with_capacity(elements.len());
    let mut spatial = Vec::new();
    let mut origin_map = Vec::new();
    for (t, el) in elements.iter().enumerate() {
        let x = peripherals.apply(g, store, el)?;
        let d_s = g.value(x).rows();
        if d_s > 1 {
            spatial.push(x);
            origin_map.extend(std::iter::repeat_n(t, d_s));
            temporal.push(g.mean_rows(x));
        } else {
            temporal.push(x);
        }
    }
    let temporal = g.concat_rows(&temporal)?;
    let spatial = if spatial.is_empty() {
        None
    } else {
        Some(g.concat_rows(&spatial)?)
    };
    Ok(GraphCaches {
        temporal,
        spatial,
        origin_map,
    })
}

/// Eager cache construction over the state `elements`.
pub fn build_caches(
    store: &ParamStore,
    peripherals: &PeripheralSet,
    elements: &[Element],
) -> Result<CacheSet> {
    let mut g = Graph::new();
    let c = build_caches_graph(&mut g, store, peripherals, elements)?;
    let d = peripherals.d_model();
    Ok(CacheSet {
        temporal: g.value(c.temporal).clone(),
        spatial: c
            .spatial
            .map_or_else(|| Tensor::zeros(&[0, d]), |s| g.value(s).clone()),
        origin_map: c.origin_map,
    })
}

/// Appends one element to existing caches.
pub fn extend_caches(
    cache: &CacheSet,
    store: &ParamStore,
    peripherals: &PeripheralSet,
    element: &Element,
) -> Result<CacheSet> {
    let x = peripherals.apply_peripheral(store, element)?;
    let t = cache.len();
    let mut next = cache.clone();
    if x.rows() > 1 {
        next.spatial = Tensor::concat_rows(&[&cache.spatial, &x])?;
        next.origin_map.extend(std::iter::repeat_n(t, x.rows()));
        next.temporal = Tensor::concat_rows(&[&cache.temporal, &x.mean_rows()])?;
    } else {
        next.temporal = Tensor::concat_rows(&[&cache.temporal, &x])?;
    }
    Ok(next)
}
