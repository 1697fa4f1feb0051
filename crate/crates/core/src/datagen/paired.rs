//! Image/word-list pairing task.
//!
//! Each sequence shows an image proxy followed by a padded list of word
//! tokens. The label says whether the words describe the image's concept
//! (class 0) or were swapped in from another concept (class 1).
//! Concept-specific words reveal the answer and are placed after the
//! generic ones. Generic words are uninformative unless `generic_affinity`
//! is positive, in which case each concept favors its own share of the
//! generic vocabulary and early words carry partial evidence.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::types::{Element, MultimodalSequence, Payload};
use crate::error::{Error, Result};

pub const PAD_TOKEN: u32 = 0;
pub const MATCHED: usize = 0;
pub const MISMATCHED: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairedConfig {
    pub seed: u64,
    pub samples: usize,
    pub concepts: usize,
    pub generic_vocab: usize,
    pub specific_per_concept: usize,
    /// Side length of the square image proxy.
    pub grid: usize,
    pub patch: usize,
    /// Standard deviation of pixel noise around the concept prototype.
    pub noise: f64,
    pub max_generic: usize,
    /// Upper bound on concept-specific words per sample (at least one is drawn).
    pub max_specific: usize,
    /// Padded word-list length; sequences have `1 + words` elements.
    pub words: usize,
    pub match_probability: f64,
    /// Extra weight a concept puts on its own generic words (token `g` belongs
    /// to concept `(g - 1) % concepts`); 0 makes generic words uninformative.
    pub generic_affinity: f64,
}

impl Default for PairedConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            samples: 1000,
            concepts: 4,
            generic_vocab: 20,
            specific_per_concept: 6,
            grid: 8,
            patch: 4,
            noise: 0.1,
            max_generic: 4,
            max_specific: 3,
            words: 7,
            match_probability: 0.5,
            generic_affinity: 0.0,
        }
    }
}

impl PairedConfig {
    pub fn vocab_size(&self) -> usize {
        1 + self.generic_vocab + self.concepts * self.specific_per_concept
    }

    pub fn spatial_extent(&self) -> usize {
        (self.grid / self.patch).pow(2)
    }

    pub fn t_end(&self) -> usize {
        1 + self.words
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.concepts < 2 {
            return bad(format!("concept_count must be >= 2, got {}", self.concepts));
        }
        if !(0.0..=1.0).contains(&self.match_probability) {
            return bad("match_probability outside [0, 1]".into());
        }
        if self.max_specific == 0 || self.max_specific > self.specific_per_concept {
            return bad("max_specific must be in 1..=specific_per_concept".into());
        }
        if self.max_generic > self.generic_vocab {
            return bad("max_generic exceeds generic_vocab".into());
        }
        if self.max_generic + self.max_specific > self.words {
            return bad("word list length too short for max_generic + max_specific".into());
        }
        if self.patch == 0 || !self.grid.is_multiple_of(self.patch) {
            return bad("grid must be a multiple of patch".into());
        }
        if self.noise < 0.0 {
            return bad("noise must be nonnegative".into());
        }
        if !(self.generic_affinity >= 0.0 && self.generic_affinity.is_finite()) {
            return bad("generic_affinity must be a finite value >= 0".into());
        }
        Ok(())
    }
}

/// Concept prototypes and vocabulary layout for one configuration.
#[derive(Debug, Clone)]
pub struct PairedTask {
    cfg: PairedConfig,
    prototypes: Vec<Vec<f64>>,
}

impl PairedTask {
    pub fn new(cfg: PairedConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let px = cfg.grid * cfg.grid;
        let prototypes = (0..cfg.concepts)
            .map(|_| (0..px).map(|_| rng.random::<f64>()).collect())
            .collect();
        Ok(Self { cfg, prototypes })
    }

    pub fn config(&self) -> &PairedConfig {
        &self.cfg
    }

    pub fn prototype(&self, concept: usize) -> &[f64] {
        &self.prototypes[concept]
    }

    pub fn is_generic(&self, token: u32) -> bool {
        token >= 1 && (token as usize) <= self.cfg.generic_vocab
    }

    /// Concept owning a concept-specific token.
    pub fn concept_of_token(&self, token: u32) -> Option<usize> {
        let first = 1 + self.cfg.generic_vocab;
        let t = token as usize;
        (t >= first && t < self.cfg.vocab_size())
            .then(|| (t - first) / self.cfg.specific_per_concept)
    }

    fn specific_token(&self, concept: usize, k: usize) -> u32 {
        (1 + self.cfg.generic_vocab + concept * self.cfg.specific_per_concept + k) as u32
    }

    pub fn generate(&self) -> Result<Vec<MultimodalSequence>> {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        // Zipf-like popularity over generic words, tilted toward the word
        // concept's own share.
        let generic: Vec<_> = (0..cfg.concepts)
            .map(|c| {
                WeightedIndex::new((0..cfg.generic_vocab).map(|i| {
                    let own = if i % cfg.concepts == c {
                        1.0 + cfg.generic_affinity
                    } else {
                        1.0
                    };
                    own / (i + 1) as f64
                }))
                .ok()
            })
            .collect();

        struct Draft {
            matched: bool,
            pixels: Vec<f64>,
            generic: Vec<u32>,
            specific: Vec<u32>,
        }

        let mut drafts = Vec::with_capacity(cfg.samples);
        for _ in 0..cfg.samples {
            let concept = rng.random_range(0..cfg.concepts);
            let matched = rng.random_bool(cfg.match_probability);
            let word_concept = if matched {
                concept
            } else {
                let other = rng.random_range(0..cfg.concepts - 1);
                if other >= concept {
                    other + 1
                } else {
                    other
                }
            };
            let pixels = self.prototypes[concept]
                .iter()
                .map(|p| p + cfg.noise * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let n_generic = rng.random_range(0..=cfg.max_generic);
            let mut gen_tokens = Vec::with_capacity(n_generic);
            if let Some(dist) = &generic[word_concept] {
                while gen_tokens.len() < n_generic {
                    let t = 1 + dist.sample(&mut rng) as u32;
                    if !gen_tokens.contains(&t) {
                        gen_tokens.push(t);
                    }
                }
            }
            let n_specific = rng.random_range(1..=cfg.max_specific);
            let specific = rand::seq::index::sample(&mut rng, cfg.specific_per_concept, n_specific)
                .into_iter()
                .map(|k| self.specific_token(word_concept, k))
                .collect();
            drafts.push(Draft {
                matched,
                pixels,
                generic: gen_tokens,
                specific,
            });
        }

        let mut freq: HashMap<u32, usize> = HashMap::new();
        for d in &drafts {
            for &t in d.generic.iter().chain(&d.specific) {
                *freq.entry(t).or_default() += 1;
            }
        }
        // Increasing uniqueness: most frequent first, ties by token id.
        let order = |tokens: &mut Vec<u32>| {
            tokens.sort_by(|a, b| freq[b].cmp(&freq[a]).then(a.cmp(b)));
        };

        let side = cfg.grid;
        let d_s = cfg.spatial_extent();
        drafts
            .into_iter()
            .map(|mut d| {
                order(&mut d.generic);
                order(&mut d.specific);
                let mut elements = Vec::with_capacity(cfg.t_end());
                elements.push(Element::new(
                    "image",
                    Payload::Grid {
                        h: side,
                        w: side,
                        pixels: d.pixels,
                    },
                    d_s,
                ));
                let words = d.generic.into_iter().chain(d.specific);
                let padded = words.chain(std::iter::repeat(PAD_TOKEN)).take(cfg.words);
                elements.extend(padded.map(|t| Element::new("text", Payload::Tokens(vec![t]), 1)));
                let class = if d.matched { MATCHED } else { MISMATCHED };
                MultimodalSequence::new(elements, MultimodalSequence::one_hot(class, 2))
            })
            .collect()
    }
}

/// Generates the pairing dataset for `cfg`.
pub fn generate_paired_dataset(cfg: &PairedConfig) -> Result<Vec<MultimodalSequence>> {
    PairedTask::new(cfg.clone())?.generate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(e: &Element) -> u32 {
        match &e.payload {
            Payload::Tokens(t) => t[0],
            _ => panic!("not text"),
        }
    }

    #[test]
    fn needs_two_concepts() {
        let cfg = PairedConfig {
            concepts: 1,
            ..Default::default()
        };
        assert!(generate_paired_dataset(&cfg).is_err());
    }

    #[test]
    fn labels_are_balanced() {
        let cfg = PairedConfig {
            samples: 10_000,
            ..Default::default()
        };
        let data = generate_paired_dataset(&cfg).unwrap();
        let matched = data.iter().filter(|s| s.class_index() == MATCHED).count();
        let frac = matched as f64 / data.len() as f64;
        assert!((frac - 0.5).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn layout_is_image_then_ordered_padded_words() {
        let cfg = PairedConfig::default();
        let task = PairedTask::new(cfg.clone()).unwrap();
        for s in task.generate().unwrap() {
            assert_eq!(s.t_end(), cfg.t_end());
            assert_eq!(s.elements[0].modality, "image");
            assert_eq!(s.elements[0].d_s, 4);
            let words: Vec<u32> = s.elements[1..].iter().map(tokens).collect();
            let kinds: Vec<u8> = words
                .iter()
                .map(|&t| match () {
                    _ if task.is_generic(t) => 0,
                    _ if t == PAD_TOKEN => 2,
                    _ => 1,
                })
                .collect();
            assert!(kinds.windows(2).all(|w| w[0] <= w[1]), "{kinds:?}");
            assert!(kinds.contains(&1));
        }
    }

    #[test]
    fn mismatched_words_come_from_another_concept() {
        let cfg = PairedConfig {
            noise: 0.0,
            ..Default::default()
        };
        let task = PairedTask::new(cfg).unwrap();
        for s in task.generate().unwrap() {
            let Payload::Grid { pixels, .. } = &s.elements[0].payload else {
                panic!()
            };
            let image_concept = (0..4)
                .find(|&c| task.prototype(c) == pixels.as_slice())
                .unwrap();
            let word_concept = s.elements[1..]
                .iter()
                .find_map(|e| task.concept_of_token(tokens(e)))
                .unwrap();
            assert_eq!(image_concept == word_concept, s.class_index() == MATCHED);
        }
    }

    #[test]
    fn noiseless_scan_classifier_is_perfect_after_first_specific_word() {
        let cfg = PairedConfig {
            noise: 0.0,
            max_generic: 0,
            samples: 500,
            ..Default::default()
        };
        let task = PairedTask::new(cfg.clone()).unwrap();
        let data = task.generate().unwrap();
        let mut correct = 0;
        for s in &data {
            let Payload::Grid { pixels, .. } = &s.elements[0].payload else {
                panic!()
            };
            // nearest prototype by squared distance
            let image_concept = (0..cfg.concepts)
                .min_by(|&a, &b| {
                    let d = |c: usize| -> f64 {
                        task.prototype(c)
                            .iter()
                            .zip(pixels)
                            .map(|(p, x)| (p - x).powi(2))
                            .sum()
                    };
                    d(a).total_cmp(&d(b))
                })
                .unwrap();
            let first_word = tokens(&s.elements[1]);
            let word_concept = task
                .concept_of_token(first_word)
                .expect("first word is specific");
            let predicted = if image_concept == word_concept {
                MATCHED
            } else {
                MISMATCHED
            };
            correct += usize::from(predicted == s.class_index());
        }
        assert_eq!(correct, data.len());
    }

    #[test]
    fn regeneration_is_identical() {
        let cfg = PairedConfig {
            seed: 7,
            ..Default::default()
        };
        assert_eq!(
            generate_paired_dataset(&cfg).unwrap(),
            generate_paired_dataset(&cfg).unwrap()
        );
    }

    #[test]
    fn generic_affinity_makes_generic_words_informative() {
        let share = |affinity: f64| {
            let cfg = PairedConfig {
                samples: 4000,
                generic_affinity: affinity,
                ..Default::default()
            };
            let task = PairedTask::new(cfg.clone()).unwrap();
            let (mut own, mut total) = (0usize, 0usize);
            for s in task.generate().unwrap() {
                let words: Vec<u32> = s.elements[1..].iter().map(tokens).collect();
                let concept = words
                    .iter()
                    .find_map(|&t| task.concept_of_token(t))
                    .unwrap();
                for &t in words.iter().filter(|&&t| task.is_generic(t)) {
                    total += 1;
                    own += usize::from((t as usize - 1) % cfg.concepts == concept);
                }
            }
            own as f64 / total as f64
        };
        let flat = share(0.0);
        let tilted = share(3.0);
        // untilted share is the Zipf mass of one residue class, about 1/4
        assert!((0.2..0.35).contains(&flat), "{flat}");
        assert!(tilted > flat + 0.25, "{flat} vs {tilted}");
    }
}
