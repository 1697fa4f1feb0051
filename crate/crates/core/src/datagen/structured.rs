//! Structured-arrival task.
//!
//! A sample has four base elements (structured record, text, two image
//! bags) in a variable order. The structured record is split into three
//! progressively revealed arrivals: the first hides features according to
//! their importance tier, each later arrival copies the previous one and
//! reveals hidden values at random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::types::{Element, MultimodalSequence, Payload};
use crate::error::{Error, Result};

/// Feature importance bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    None,
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseElement {
    Structured,
    Text,
    ImagesA,
    ImagesB,
}

/// Position of an element after the structured record is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Structured arrival 1, 2 or 3.
    Structured(u8),
    Text,
    ImagesA,
    ImagesB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructuredConfig {
    pub seed: u64,
    pub samples: usize,
    pub features: usize,
    /// Importance tier of each feature; must cover every feature.
    pub tiers: Vec<Tier>,
    /// Values per categorical feature (excluding MISSING).
    pub cardinality: usize,
    pub missing_none: f64,
    pub missing_low: f64,
    pub missing_high: f64,
    /// Chance that a MISSING value is revealed in each later arrival.
    pub reveal: f64,
    /// Preferred distance between consecutive structured arrivals.
    pub insertion_gap: usize,
    /// Chance a feature takes its class-specific value, by tier.
    pub signal_none: f64,
    pub signal_low: f64,
    pub signal_high: f64,
    pub text_vocab: usize,
    pub text_tokens: usize,
    pub text_signal: f64,
    pub grid: usize,
    pub patch: usize,
    pub image_noise: f64,
    pub positive_probability: f64,
    /// Base orders to draw from uniformly.
    pub orders: Vec<Vec<BaseElement>>,
}

impl Default for StructuredConfig {
    fn default() -> Self {
        use BaseElement::*;
        let tiers = [Tier::None, Tier::Low, Tier::High]
            .into_iter()
            .flat_map(|t| std::iter::repeat_n(t, 4))
            .collect();
        Self {
            seed: 11,
            samples: 1000,
            features: 12,
            tiers,
            cardinality: 4,
            missing_none: 0.90,
            missing_low: 0.95,
            missing_high: 0.99,
            reveal: 0.20,
            insertion_gap: 2,
            signal_none: 0.0,
            signal_low: 0.5,
            signal_high: 0.9,
            text_vocab: 16,
            text_tokens: 6,
            text_signal: 0.4,
            grid: 8,
            patch: 4,
            image_noise: 0.8,
            positive_probability: 0.5,
            orders: vec![
                vec![Structured, Text, ImagesA, ImagesB],
                vec![Structured, ImagesA, Text, ImagesB],
                vec![Text, Structured, ImagesA, ImagesB],
                vec![ImagesA, ImagesB, Structured, Text],
            ],
        }
    }
}

impl StructuredConfig {
    pub fn missing_probability(&self, tier: Tier) -> f64 {
        match tier {
            Tier::None => self.missing_none,
            Tier::Low => self.missing_low,
            Tier::High => self.missing_high,
        }
    }

    fn signal(&self, tier: Tier) -> f64 {
        match tier {
            Tier::None => self.signal_none,
            Tier::Low => self.signal_low,
            Tier::High => self.signal_high,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.tiers.len() < self.features {
            return bad(format!(
                "feature {} has no tier assignment",
                self.tiers.len()
            ));
        }
        if self.tiers.len() > self.features {
            return bad(format!(
                "{} tiers given for {} features",
                self.tiers.len(),
                self.features
            ));
        }
        let probs = [
            self.missing_none,
            self.missing_low,
            self.missing_high,
            self.reveal,
            self.signal_none,
            self.signal_low,
            self.signal_high,
            self.text_signal,
            self.positive_probability,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if self.cardinality == 0 || self.text_vocab < 2 || self.text_tokens == 0 {
            return bad("cardinality, text_vocab and text_tokens must be positive".into());
        }
        if self.patch == 0 || !self.grid.is_multiple_of(self.patch) {
            return bad("grid must be a multiple of patch".into());
        }
        if self.orders.is_empty() {
            return bad("at least one base order is required".into());
        }
        for o in &self.orders {
            let mut sorted = o.clone();
            sorted.sort_by_key(|b| *b as u8);
            sorted.dedup();
            if o.len() != 4 || sorted.len() != 4 {
                return bad(format!(
                    "{o:?} is not a permutation of the four base elements"
                ));
            }
        }
        Ok(())
    }
}

/// Places the three structured arrivals into a base order.
///
/// Arrival 1 takes the structured element's position; each later arrival
/// goes `gap` positions after the previous one when that fits, otherwise
/// immediately after it.
pub fn arrival_layout(base: &[BaseElement], gap: usize) -> Result<Vec<Slot>> {
    let mut seq: Vec<Slot> = base
        .iter()
        .map(|b| match b {
            BaseElement::Structured => Slot::Structured(1),
            BaseElement::Text => Slot::Text,
            BaseElement::ImagesA => Slot::ImagesA,
            BaseElement::ImagesB => Slot::ImagesB,
        })
        .collect();
    let mut pos = seq
        .iter()
        .position(|s| *s == Slot::Structured(1))
        .ok_or_else(|| Error::InvalidArgument("base order has no structured element".into()))?;
    for arrival in 2..=3u8 {
        let target = pos + gap.max(1);
        pos = if target <= seq.len() { target } else { pos + 1 };
        seq.insert(pos, Slot::Structured(arrival));
    }
    Ok(seq)
}

/// The three arrivals of one structured record.
pub fn mask_arrivals(
    values: &[u32],
    tiers: &[Tier],
    cfg: &StructuredConfig,
    rng: &mut impl Rng,
) -> [Vec<Option<u32>>; 3] {
    let first: Vec<Option<u32>> = values
        .iter()
        .zip(tiers)
        .map(|(&v, &t)| (!rng.random_bool(cfg.missing_probability(t))).then_some(v))
        .collect();
    let mut reveal = |prev: &[Option<u32>]| -> Vec<Option<u32>> {
        prev.iter()
            .zip(values)
            .map(|(p, &v)| match p {
                Some(x) => Some(*x),
                None => rng.random_bool(cfg.reveal).then_some(v),
            })
            .collect()
    };
    let second = reveal(&first);
    let third = reveal(&second);
    [first, second, third]
}

/// Generates the structured-arrival dataset for `cfg`.
pub fn generate_structured_arrival_dataset(
    cfg: &StructuredConfig,
) -> Result<Vec<MultimodalSequence>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let class_values: Vec<[u32; 2]> = (0..cfg.features)
        .map(|_| {
            [
                rng.random_range(0..cfg.cardinality as u32),
                rng.random_range(0..cfg.cardinality as u32),
            ]
        })
        .collect();
    let px = cfg.grid * cfg.grid;
    let image_protos: Vec<[Vec<f64>; 2]> = (0..2)
        .map(|_| {
            [
                (0..px).map(|_| rng.random::<f64>()).collect(),
                (0..px).map(|_| rng.random::<f64>()).collect(),
            ]
        })
        .collect();
    let d_s = (cfg.grid / cfg.patch).pow(2);
    let half = cfg.text_vocab as u32 / 2;

    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let class = usize::from(rng.random_bool(cfg.positive_probability));
        let values: Vec<u32> = (0..cfg.features)
            .map(|f| {
                if rng.random_bool(cfg.signal(cfg.tiers[f])) {
                    class_values[f][class]
                } else {
                    rng.random_range(0..cfg.cardinality as u32)
                }
            })
            .collect();
        let arrivals = mask_arrivals(&values, &cfg.tiers, cfg, &mut rng);
        let text: Vec<u32> = (0..cfg.text_tokens)
            .map(|_| {
                if rng.random_bool(cfg.text_signal) {
                    class as u32 * half + rng.random_range(0..half)
                } else {
                    rng.random_range(0..cfg.text_vocab as u32)
                }
            })
            .collect();
        let image = |bag: usize, rng: &mut ChaCha8Rng| -> Element {
            let pixels = image_protos[bag][class]
                .iter()
                .map(|p| p + cfg.image_noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let tag = if bag == 0 { "images_a" } else { "images_b" };
            let grid = Payload::Grid {
                h: cfg.grid,
                w: cfg.grid,
                pixels,
            };
            Element::new(tag, grid, d_s)
        };
        let img_a = image(0, &mut rng);
        let img_b = image(1, &mut rng);
        let order = &cfg.orders[rng.random_range(0..cfg.orders.len())];
        let elements = arrival_layout(order, cfg.insertion_gap)?
            .into_iter()
            .map(|slot| match slot {
                Slot::Structured(k) => Element::new(
                    "structured",
                    Payload::Categorical(arrivals[k as usize - 1].clone()),
                    1,
                ),
                Slot::Text => Element::new("text", Payload::Tokens(text.clone()), 1),
                Slot::ImagesA => img_a.clone(),
                Slot::ImagesB => img_b.clone(),
            })
            .collect();
        out.push(MultimodalSequence::new(
            elements,
            MultimodalSequence::one_hot(class, 2),
        )?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BaseElement::*;

    #[test]
    fn most_common_order_layout() {
        let layout = arrival_layout(&[Structured, Text, ImagesA, ImagesB], 2).unwrap();
        assert_eq!(
            layout,
            vec![
                Slot::Structured(1),
                Slot::Text,
                Slot::Structured(2),
                Slot::ImagesA,
                Slot::Structured(3),
                Slot::ImagesB
            ]
        );
    }

    #[test]
    fn arrivals_fall_back_to_immediately_after() {
        let layout = arrival_layout(&[Text, ImagesA, ImagesB, Structured], 2).unwrap();
        assert_eq!(
            layout,
            vec![
                Slot::Text,
                Slot::ImagesA,
                Slot::ImagesB,
                Slot::Structured(1),
                Slot::Structured(2),
                Slot::Structured(3)
            ]
        );
        // Appending at the very end still counts as two positions after.
        let layout = arrival_layout(&[Text, ImagesA, Structured, ImagesB], 2).unwrap();
        assert_eq!(
            layout,
            vec![
                Slot::Text,
                Slot::ImagesA,
                Slot::Structured(1),
                Slot::ImagesB,
                Slot::Structured(2),
                Slot::Structured(3)
            ]
        );
    }

    #[test]
    fn missing_tier_assignment_is_an_error() {
        let mut cfg = StructuredConfig::default();
        cfg.tiers.pop();
        let err = generate_structured_arrival_dataset(&cfg).unwrap_err();
        assert!(err.to_string().contains("no tier assignment"), "{err}");
    }

    fn structured_arrivals(s: &MultimodalSequence) -> Vec<&Vec<Option<u32>>> {
        s.elements
            .iter()
            .filter_map(|e| match &e.payload {
                Payload::Categorical(v) => Some(v),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn forced_reveal_uncovers_everything() {
        let cfg = StructuredConfig {
            reveal: 1.0,
            samples: 50,
            ..Default::default()
        };
        for s in generate_structured_arrival_dataset(&cfg).unwrap() {
            let a = structured_arrivals(&s);
            assert_eq!(a.len(), 3);
            assert!(a[1].iter().all(Option::is_some));
            assert!(a[2].iter().all(Option::is_some));
        }
    }

    #[test]
    fn no_masking_gives_identical_arrivals() {
        let cfg = StructuredConfig {
            missing_none: 0.0,
            missing_low: 0.0,
            missing_high: 0.0,
            samples: 50,
            ..Default::default()
        };
        for s in generate_structured_arrival_dataset(&cfg).unwrap() {
            let a = structured_arrivals(&s);
            assert!(a[0].iter().all(Option::is_some));
            assert_eq!(a[0], a[1]);
            assert_eq!(a[1], a[2]);
        }
    }

    #[test]
    fn missingness_never_increases() {
        let cfg = StructuredConfig {
            samples: 300,
            ..Default::default()
        };
        for s in generate_structured_arrival_dataset(&cfg).unwrap() {
            let counts: Vec<usize> = structured_arrivals(&s)
                .iter()
                .map(|a| a.iter().filter(|x| x.is_none()).count())
                .collect();
            assert!(counts[0] >= counts[1] && counts[1] >= counts[2]);
        }
    }

    #[test]
    fn sequences_have_six_elements_and_balanced_labels() {
        let cfg = StructuredConfig {
            samples: 4000,
            ..Default::default()
        };
        let data = generate_structured_arrival_dataset(&cfg).unwrap();
        assert!(data.iter().all(|s| s.t_end() == 6));
        let pos = data.iter().filter(|s| s.class_index() == 1).count() as f64;
        assert!((pos / 4000.0 - 0.5).abs() < 0.03);
    }
}
