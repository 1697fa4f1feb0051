use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attention::{positional_encoding, AttentionBlock};
use crate::datagen::{Element, MultimodalSequence, PairedConfig, Payload, StructuredConfig};
use crate::encoder::{build_caches_graph, Extractor, PeripheralSet, PeripheralSpec};
use crate::error::{Error, Result};
use crate::numcore::nn::Linear;
use crate::numcore::{Graph, NodeId, ParamStore, Tensor};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub heads: usize,
    pub head_dim: usize,
    /// Hidden width of the classifier and policy heads.
    pub head_hidden: usize,
    pub classes: usize,
    /// Number of (temporal, gated) block pairs.
    pub depth: usize,
    pub peripherals: Vec<PeripheralSpec>,
}

impl ModelConfig {
    /// Peripherals for the pairing task: patch grid for the image, token
    /// embedding for words.
    pub fn for_paired(task: &PairedConfig, d_model: usize, heads: usize, head_dim: usize) -> Self {
        Self {
            d_model,
            heads,
            head_dim,
            peripherals: vec![
                PeripheralSpec::new(
                    "image",
                    Extractor::PatchGrid {
                        h: task.grid,
                        w: task.grid,
                        patch: task.patch,
                    },
                ),
                PeripheralSpec::new(
                    "text",
                    Extractor::TokenEmbedding {
                        vocab: task.vocab_size(),
                        embed_dim: d_model,
                    },
                ),
            ],
            ..Self::default()
        }
    }

    /// Peripherals for the structured-arrival task.
    pub fn for_structured(
        task: &StructuredConfig,
        d_model: usize,
        heads: usize,
        head_dim: usize,
    ) -> Self {
        let grid = |tag: &str| {
            PeripheralSpec::new(
                tag,
                Extractor::PatchGrid {
                    h: task.grid,
                    w: task.grid,
                    patch: task.patch,
                },
            )
        };
        Self {
            d_model,
            heads,
            head_dim,
            peripherals: vec![
                PeripheralSpec::new(
                    "structured",
                    Extractor::CategoricalOneHot {
                        cardinalities: vec![task.cardinality; task.features],
                    },
                ),
                PeripheralSpec::new(
                    "text",
                    Extractor::TokenEmbedding {
                        vocab: task.text_vocab,
                        embed_dim: d_model,
                    },
                ),
                grid("images_a"),
                grid("images_b"),
            ],
            ..Self::default()
        }
    }
}

impl ModelConfig {
    /// Derives peripherals and the class count from a dataset: token
    /// vocabularies and categorical cardinalities from the largest observed
    /// ids, patch sizes from each grid's `d_s`.
    pub fn infer(
        data: &[MultimodalSequence],
        d_model: usize,
        heads: usize,
        head_dim: usize,
    ) -> Result<Self> {
        let first = data
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot infer a model from no data".into()))?;
        let mut specs: Vec<PeripheralSpec> = Vec::new();
        for el in data.iter().flat_map(|s| &s.elements) {
            let observed = match &el.payload {
                Payload::Tokens(ids) => Extractor::TokenEmbedding {
                    vocab: ids.iter().max().map_or(1, |&m| m as usize + 1),
                    embed_dim: d_model,
                },
                Payload::Grid { h, w, .. } => Extractor::PatchGrid {
                    h: *h,
                    w: *w,
                    patch: (1..=*h.min(w))
                        .find(|p| h % p == 0 && w % p == 0 && (h / p) * (w / p) == el.d_s)
                        .ok_or_else(|| {
                            Error::InvalidSequence(format!(
                                "no square patch tiles a {h}x{w} grid into {} regions",
                                el.d_s
                            ))
                        })?,
                },
                Payload::Categorical(values) => Extractor::CategoricalOneHot {
                    cardinalities: values
                        .iter()
                        .map(|v| v.map_or(1, |c| c as usize + 1))
                        .collect(),
                },
                Payload::Embedding(v) => Extractor::Passthrough { dim: v.len() },
            };
            match specs.iter_mut().find(|s| s.modality == el.modality) {
                None => specs.push(PeripheralSpec::new(el.modality.clone(), observed)),
                Some(spec) => merge_extractor(&el.modality, &mut spec.extractor, observed)?,
            }
        }
        Ok(Self {
            d_model,
            heads,
            head_dim,
            classes: first.num_classes(),
            peripherals: specs,
            ..Self::default()
        })
    }
}

fn merge_extractor(modality: &str, into: &mut Extractor, seen: Extractor) -> Result<()> {
    match (into, seen) {
        (Extractor::TokenEmbedding { vocab, .. }, Extractor::TokenEmbedding { vocab: v, .. }) => {
            *vocab = (*vocab).max(v);
        }
        (
            Extractor::CategoricalOneHot { cardinalities },
            Extractor::CategoricalOneHot { cardinalities: c },
        ) if cardinalities.len() == c.len() => {
            for (a, b) in cardinalities.iter_mut().zip(c) {
                *a = (*a).max(b);
            }
        }
        (a, b) if *a == b => {}
        (a, b) => {
            return Err(Error::InvalidSequence(format!(
                "modality `{modality}` has inconsistent payloads: {a:?} vs {b:?}"
            )))
        }
    }
    Ok(())
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 32,
            heads: 8,
            head_dim: 64,
            head_hidden: 100,
            classes: 2,
            depth: 1,
            peripherals: Vec::new(),
        }
    }
}

/// Per-step class distributions and wait/stop policies for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutputs {
    /// `(T_end, C)`; row `t` is `ŷ(·|s_t)`.
    pub y_hat: Tensor,
    /// `(T_end, 2)`; row `t` is `π(·|s_t)` with column 0 = wait, 1 = stop.
    pub pi: Tensor,
}

impl StepOutputs {
    pub fn steps(&self) -> usize {
        self.y_hat.rows()
    }

    pub fn wait(&self, t: usize) -> f64 {
        self.pi.get(t, 0)
    }

    pub fn stop(&self, t: usize) -> f64 {
        self.pi.get(t, 1)
    }
}

/// Anything that maps a sequence to per-step outputs.
pub trait EarlyClassifier {
    fn step_outputs(&self, seq: &MultimodalSequence) -> Result<StepOutputs>;
}

#[derive(Debug, Clone)]
struct Head {
    hidden: Linear,
    out: Linear,
}

impl Head {
    fn forward(&self, g: &mut Graph, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let h = self.hidden.forward(g, store, x)?;
        let h = g.relu(h);
        let logits = self.out.forward(g, store, h)?;
        g.softmax(logits)
    }
}

#[derive(Debug, Clone)]
struct BodyBlock {
    temporal: AttentionBlock,
    gated: AttentionBlock,
}

/// Nodes of one forward pass, kept for losses and inspection.
#[derive(Debug, Clone)]
pub struct ForwardNodes {
    pub y_hat: NodeId,
    pub pi: NodeId,
    pub body: NodeId,
    /// Head-averaged temporal weights of each block.
    pub temporal_weights: Vec<NodeId>,
    /// Per-head temporal weights of each block.
    pub temporal_head_weights: Vec<Vec<NodeId>>,
    /// Per-head gated spatial weights of each block.
    pub gated_head_weights: Vec<Vec<NodeId>>,
    pub origin_map: Vec<usize>,
}

/// Spatial-temporal transformer with classifier and policy heads.
///
/// Both heads read the body output at every temporal position, so a single
/// causal pass over the full sequence yields the outputs for every prefix.
#[derive(Debug, Clone)]
pub struct SpatialTemporalModel {
    config: ModelConfig,
    store: ParamStore,
    peripherals: PeripheralSet,
    blocks: Vec<BodyBlock>,
    classifier: Head,
    policy: Head,
}

impl SpatialTemporalModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        if !config.d_model.is_multiple_of(2) || config.d_model < 2 {
            return Err(Error::InvalidArgument(format!(
                "d_model must be even and >= 2, got {}",
                config.d_model
            )));
        }
        if config.classes < 2 || config.depth == 0 || config.head_hidden == 0 {
            return Err(Error::InvalidArgument(
                "need classes >= 2, depth >= 1 and head_hidden >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let d = config.d_model;
        let peripherals = PeripheralSet::new(&config.peripherals, d, &mut store, &mut rng)?;
        let blocks = (0..config.depth)
            .map(|i| {
                Ok(BodyBlock {
                    temporal: AttentionBlock::new(
                        &mut store,
                        &format!("block{i}.temporal"),
                        d,
                        config.heads,
                        config.head_dim,
                        &mut rng,
                    )?,
                    gated: AttentionBlock::new(
                        &mut store,
                        &format!("block{i}.gated"),
                        d,
                        config.heads,
                        config.head_dim,
                        &mut rng,
                    )?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut head = |name: &str, out: usize| -> Result<Head> {
            Ok(Head {
                hidden: Linear::new(
                    &mut store,
                    &format!("{name}.hidden"),
                    d,
                    config.head_hidden,
                    &mut rng,
                )?,
                out: Linear::new(
                    &mut store,
                    &format!("{name}.out"),
                    config.head_hidden,
                    out,
                    &mut rng,
                )?,
            })
        };
        let classifier = head("classifier", config.classes)?;
        let policy = head("policy", 2)?;
        Ok(Self {
            config,
            store,
            peripherals,
            blocks,
            classifier,
            policy,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn peripherals(&self) -> &PeripheralSet {
        &self.peripherals
    }

    /// Names of the policy head's parameters (β); classifier-head names
    /// start with `classifier.` (α) and everything else is shared body.
    pub fn policy_param_names(&self) -> Vec<String> {
        self.store
            .iter()
            .filter(|(_, p)| p.name.starts_with("policy."))
            .map(|(_, p)| p.name.clone())
            .collect()
    }

    /// Records a full forward pass over `elements` on `g`, reading
    /// parameters from `store` (normally [`Self::params`]).
    pub fn forward_graph(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        elements: &[Element],
    ) -> Result<ForwardNodes> {
        let caches = build_caches_graph(g, store, &self.peripherals, elements)?;
        let t = elements.len();
        let pe = g.constant(positional_encoding(t, self.config.d_model)?);
        let mut x = g.add(caches.temporal, pe)?;
        let mut temporal_weights = Vec::new();
        let mut temporal_head_weights = Vec::new();
        let mut gated_head_weights = Vec::new();
        for block in &self.blocks {
            let tout = block.temporal.temporal(g, store, x)?;
            let gout = block.gated.gated(
                g,
                store,
                tout.output,
                caches.spatial,
                &caches.origin_map,
                tout.mean_weights,
            )?;
            temporal_weights.push(tout.mean_weights);
            temporal_head_weights.push(tout.head_weights);
            gated_head_weights.push(gout.head_weights);
            x = gout.output;
        }
        let y_hat = self.classifier.forward(g, store, x)?;
        let pi = self.policy.forward(g, store, x)?;
        Ok(ForwardNodes {
            y_hat,
            pi,
            body: x,
            temporal_weights,
            temporal_head_weights,
            gated_head_weights,
            origin_map: caches.origin_map,
        })
    }

    /// Eager outputs for every prefix of `elements`.
    pub fn forward_all_t(&self, elements: &[Element]) -> Result<StepOutputs> {
        let mut g = Graph::new();
        let n = self.forward_graph(&mut g, &self.store, elements)?;
        Ok(StepOutputs {
            y_hat: g.value(n.y_hat).clone(),
            pi: g.value(n.pi).clone(),
        })
    }
}

impl EarlyClassifier for SpatialTemporalModel {
    fn step_outputs(&self, seq: &MultimodalSequence) -> Result<StepOutputs> {
        let out = self.forward_all_t(&seq.elements)?;
        if out.y_hat.cols() != seq.num_classes() {
            return Err(Error::InvalidSequence(format!(
                "model predicts {} classes, label has {}",
                out.y_hat.cols(),
                seq.num_classes()
            )));
        }
        Ok(out)
    }
}
