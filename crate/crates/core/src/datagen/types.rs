use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Payload kinds a modality can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Tokens,
    Grid,
    Categorical,
    Embedding,
}

/// Raw content of one sequence element.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Token ids into a modality vocabulary.
    Tokens(Vec<u32>),
    /// Single-channel image proxy in row-major order.
    Grid {
        h: usize,
        w: usize,
        pixels: Vec<f64>,
    },
    /// Categorical features; `None` is the MISSING code.
    Categorical(Vec<Option<u32>>),
    /// Precomputed feature vector.
    Embedding(Vec<f64>),
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Tokens(_) => PayloadKind::Tokens,
            Payload::Grid { .. } => PayloadKind::Grid,
            Payload::Categorical(_) => PayloadKind::Categorical,
            Payload::Embedding(_) => PayloadKind::Embedding,
        }
    }

    pub fn missing_count(&self) -> usize {
        match self {
            Payload::Categorical(v) => v.iter().filter(|x| x.is_none()).count(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub modality: String,
    pub payload: Payload,
    /// Number of spatial rows the element's peripheral emits; 1 if non-spatial.
    pub d_s: usize,
}

impl Element {
    pub fn new(modality: impl Into<String>, payload: Payload, d_s: usize) -> Self {
        Self {
            modality: modality.into(),
            payload,
            d_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_s == 0 {
            return Err(Error::InvalidSequence("d_s must be positive".into()));
        }
        if self.d_s > 1 && self.payload.kind() != PayloadKind::Grid {
            return Err(Error::InvalidSequence(format!(
                "d_s = {} on non-spatial `{}` element",
                self.d_s, self.modality
            )));
        }
        if let Payload::Grid { h, w, pixels } = &self.payload {
            if h * w != pixels.len() || *h == 0 || *w == 0 {
                return Err(Error::InvalidSequence(format!(
                    "grid {h}x{w} with {} pixels",
                    pixels.len()
                )));
            }
        }
        Ok(())
    }
}

/// One labelled multimodal sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalSequence {
    pub elements: Vec<Element>,
    /// One-hot class label.
    pub label: Vec<f64>,
}

impl MultimodalSequence {
    pub fn new(elements: Vec<Element>, label: Vec<f64>) -> Result<Self> {
        let s = Self { elements, label };
        s.validate()?;
        Ok(s)
    }

    pub fn one_hot(class: usize, classes: usize) -> Vec<f64> {
        let mut v = vec![0.0; classes];
        v[class] = 1.0;
        v
    }

    pub fn t_end(&self) -> usize {
        self.elements.len()
    }

    pub fn num_classes(&self) -> usize {
        self.label.len()
    }

    pub fn class_index(&self) -> usize {
        self.label
            .iter()
            .position(|&v| v == 1.0)
            .expect("validated one-hot label")
    }

    /// Modality order, e.g. `structured>text>images_a`.
    pub fn signature(&self) -> String {
        self.elements
            .iter()
            .map(|e| e.modality.as_str())
            .collect::<Vec<_>>()
            .join(">")
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::InvalidSequence("sequence has no elements".into()));
        }
        if self.label.len() < 2 {
            return Err(Error::InvalidSequence("need at least two classes".into()));
        }
        let sum: f64 = self.label.iter().sum();
        let hot = self.label.iter().filter(|&&v| v == 1.0).count();
        let zeros = self.label.iter().filter(|&&v| v == 0.0).count();
        if (sum - 1.0).abs() > 1e-9 || hot != 1 || hot + zeros != self.label.len() {
            return Err(Error::InvalidSequence(format!(
                "label {:?} is not one-hot (sum {sum})",
                self.label
            )));
        }
        self.elements.iter().try_for_each(Element::validate)
    }
}

/// Registered modality tags and the payload kind each carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityRegistry {
    kinds: BTreeMap<String, PayloadKind>,
}

impl ModalityRegistry {
    pub fn new() -> Self {
        Self {
            kinds: BTreeMap::new(),
        }
    }

    /// Tags used by the bundled generators plus a generic `embedding` tag.
    pub fn standard() -> Self {
        let mut r = Self::new();
        r.register("image", PayloadKind::Grid);
        r.register("text", PayloadKind::Tokens);
        r.register("structured", PayloadKind::Categorical);
        r.register("images_a", PayloadKind::Grid);
        r.register("images_b", PayloadKind::Grid);
        r.register("embedding", PayloadKind::Embedding);
        r
    }

    pub fn register(&mut self, tag: impl Into<String>, kind: PayloadKind) -> &mut Self {
        self.kinds.insert(tag.into(), kind);
        self
    }

    pub fn kind(&self, tag: &str) -> Result<PayloadKind> {
        self.kinds
            .get(tag)
            .copied()
            .ok_or_else(|| Error::UnknownModality(tag.to_string()))
    }

    pub fn tags(&self) -> impl Iterator<Item = (&str, PayloadKind)> {
        self.kinds.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl Default for ModalityRegistry {
    fn default() -> Self {
        Self::standard()
    }
}
