use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::MultimodalSequence;
use crate::error::{Error, Result};
use crate::sttransformer::{EarlyClassifier, StepOutputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cis,
    Larm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cis => "cis",
            Method::Larm => "larm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cis" => Ok(Method::Cis),
            "larm" => Ok(Method::Larm),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected cis or larm)"
            ))),
        }
    }
}

/// Outcome of one rollout. `stop` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rollout {
    pub stop: usize,
    pub predicted: usize,
    pub correct: bool,
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Greedy rollout: stop at the first step whose stop probability strictly
/// exceeds the wait probability, else at `T_end`. Returns `(T, class)`.
pub fn rollout_cis_outputs(out: &StepOutputs) -> (usize, usize) {
    let steps = out.steps();
    let stop = (1..=steps)
        .find(|&t| out.stop(t - 1) > out.wait(t - 1))
        .unwrap_or(steps);
    (stop, argmax(out.y_hat.row(stop - 1)))
}

/// Sampled rollout: draw stop with probability `π(stop|s_t)` each step.
pub fn rollout_larm_outputs(out: &StepOutputs, rng: &mut impl Rng) -> (usize, usize) {
    let steps = out.steps();
    let stop = (1..=steps)
        .find(|&t| rng.random::<f64>() < out.stop(t - 1))
        .unwrap_or(steps);
    (stop, argmax(out.y_hat.row(stop - 1)))
}

fn finish(seq: &MultimodalSequence, (stop, predicted): (usize, usize)) -> Rollout {
    Rollout {
        stop,
        predicted,
        correct: predicted == seq.class_index(),
    }
}

pub fn rollout_cis(model: &impl EarlyClassifier, seq: &MultimodalSequence) -> Result<Rollout> {
    Ok(finish(seq, rollout_cis_outputs(&model.step_outputs(seq)?)))
}

pub fn rollout_larm(
    model: &impl EarlyClassifier,
    seq: &MultimodalSequence,
    rng: &mut impl Rng,
) -> Result<Rollout> {
    Ok(finish(
        seq,
        rollout_larm_outputs(&model.step_outputs(seq)?, rng),
    ))
}

pub fn rollout(
    model: &impl EarlyClassifier,
    seq: &MultimodalSequence,
    method: Method,
    rng: &mut impl Rng,
) -> Result<Rollout> {
    match method {
        Method::Cis => rollout_cis(model, seq),
        Method::Larm => rollout_larm(model, seq, rng),
    }
}

pub fn rollouts(
    model: &impl EarlyClassifier,
    data: &[MultimodalSequence],
    method: Method,
    rng: &mut impl Rng,
) -> Result<Vec<Rollout>> {
    data.iter()
        .map(|s| rollout(model, s, method, rng))
        .collect()
}

/// Validation summary for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub mean_t: f64,
    pub accuracy: f64,
    /// Mean over samples and steps of `CE(y, ŷ_t)`.
    pub step_ce: f64,
}

/// One rollout per sample.
pub fn evaluate(
    model: &impl EarlyClassifier,
    data: &[MultimodalSequence],
    method: Method,
    rng: &mut impl Rng,
) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty validation set".into()));
    }
    let (mut stops, mut correct, mut ce) = (0usize, 0usize, 0.0);
    for seq in data {
        let out = model.step_outputs(seq)?;
        let (stop, predicted) = match method {
            Method::Cis => rollout_cis_outputs(&out),
            Method::Larm => rollout_larm_outputs(&out, rng),
        };
        stops += stop;
        correct += usize::from(predicted == seq.class_index());
        let steps = out.steps();
        ce += (0..steps)
            .map(|t| crate::numcore::cross_entropy(&seq.label, out.y_hat.row(t)))
            .sum::<Result<f64>>()?
            / steps as f64;
    }
    let n = data.len() as f64;
    Ok(Evaluation {
        mean_t: stops as f64 / n,
        accuracy: correct as f64 / n,
        step_ce: ce / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{Element, Payload};
    use crate::numcore::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Fixed outputs regardless of input.
    struct Constant(StepOutputs);

    impl EarlyClassifier for Constant {
        fn step_outputs(&self, seq: &MultimodalSequence) -> Result<StepOutputs> {
            let t = seq.t_end();
            Ok(StepOutputs {
                y_hat: self.0.y_hat.slice_rows(0, t),
                pi: self.0.pi.slice_rows(0, t),
            })
        }
    }

    fn constant(t_end: usize, y: [f64; 2], pi: [f64; 2]) -> Constant {
        Constant(StepOutputs {
            y_hat: Tensor::from_rows(&vec![y.to_vec(); t_end]).unwrap(),
            pi: Tensor::from_rows(&vec![pi.to_vec(); t_end]).unwrap(),
        })
    }

    fn seq(t_end: usize, class: usize) -> MultimodalSequence {
        let el = Element::new("embedding", Payload::Embedding(vec![0.0]), 1);
        MultimodalSequence::new(vec![el; t_end], MultimodalSequence::one_hot(class, 2)).unwrap()
    }

    #[test]
    fn cis_rollout_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = seq(5, 0);
        let m = constant(5, [0.8, 0.2], [0.9, 0.1]);
        assert_eq!(rollout(&m, &s, Method::Cis, &mut rng).unwrap().stop, 5);
        let m = constant(5, [0.8, 0.2], [0.1, 0.9]);
        assert_eq!(rollout(&m, &s, Method::Cis, &mut rng).unwrap().stop, 1);
        let m = constant(5, [0.8, 0.2], [0.5, 0.5]);
        let r = rollout(&m, &s, Method::Cis, &mut rng).unwrap();
        assert_eq!((r.stop, r.predicted, r.correct), (5, 0, true));
    }

    #[test]
    fn cis_stop_is_first_strict_majority() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let steps = rng.random_range(1..9);
            let stops: Vec<f64> = (0..steps).map(|_| rng.random_range(0.0..1.0)).collect();
            let out = StepOutputs {
                y_hat: Tensor::from_rows(&vec![vec![0.5, 0.5]; steps]).unwrap(),
                pi: Tensor::from_rows(&stops.iter().map(|s| vec![1.0 - s, *s]).collect::<Vec<_>>())
                    .unwrap(),
            };
            let expect = stops.iter().position(|&s| s > 0.5).map_or(steps, |i| i + 1);
            assert_eq!(rollout_cis_outputs(&out).0, expect);
        }
    }

    #[test]
    fn larm_rollout_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = seq(6, 1);
        let stop_now = constant(6, [0.3, 0.7], [0.0, 1.0]);
        let never = constant(6, [0.3, 0.7], [1.0, 0.0]);
        for _ in 0..100 {
            assert_eq!(rollout_larm(&stop_now, &s, &mut rng).unwrap().stop, 1);
            assert_eq!(rollout_larm(&never, &s, &mut rng).unwrap().stop, 6);
        }
    }

    #[test]
    fn larm_geometric_mean_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = constant(60, [0.5, 0.5], [0.5, 0.5]);
        let data = vec![seq(60, 0); 10_000];
        let e = evaluate(&m, &data, Method::Larm, &mut rng).unwrap();
        assert!((e.mean_t - 2.0).abs() <= 0.05, "{}", e.mean_t);
    }

    #[test]
    fn evaluate_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<_> = (0..10).map(|_| seq(4, 0)).collect();
        let perfect = constant(4, [1.0, 0.0], [0.0, 1.0]);
        let e = evaluate(&perfect, &data, Method::Cis, &mut rng).unwrap();
        assert_eq!((e.mean_t, e.accuracy), (1.0, 1.0));
        let waiting = constant(4, [1.0, 0.0], [1.0, 0.0]);
        assert_eq!(
            evaluate(&waiting, &data, Method::Larm, &mut rng)
                .unwrap()
                .mean_t,
            4.0
        );
        assert!(evaluate(&perfect, &[], Method::Cis, &mut rng).is_err());
    }

    #[test]
    fn random_classifier_is_at_chance() {
        struct Coin(std::cell::RefCell<ChaCha8Rng>);
        impl EarlyClassifier for Coin {
            fn step_outputs(&self, seq: &MultimodalSequence) -> Result<StepOutputs> {
                let p: f64 = self.0.borrow_mut().random();
                let t = seq.t_end();
                Ok(StepOutputs {
                    y_hat: Tensor::from_rows(&vec![vec![p, 1.0 - p]; t])?,
                    pi: Tensor::from_rows(&vec![vec![0.0, 1.0]; t])?,
                })
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<_> = (0..10_000).map(|i| seq(2, i % 2)).collect();
        let coin = Coin(ChaCha8Rng::seed_from_u64(6).into());
        let e = evaluate(&coin, &data, Method::Cis, &mut rng).unwrap();
        assert!((e.accuracy - 0.5).abs() <= 0.02, "{}", e.accuracy);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("larm".parse::<Method>().unwrap(), Method::Larm);
        assert!("ppo".parse::<Method>().is_err());
        assert_eq!(Method::Cis.to_string(), "cis");
    }
}
