//! Rewards and the two training objectives.
//!
//! Time indices in this module are 1-based: `T = 1` means stopping after
//! the first element, `T = T_end` after the whole sequence.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::numcore::{cross_entropy, stop_probabilities, Graph, NodeId, Tensor};
use crate::sttransformer::StepOutputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Wait,
    Stop,
}

/// Time penalty per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub mu: f64,
}

impl RewardParams {
    pub fn new(mu: f64) -> Result<Self> {
        if mu >= 0.0 && mu.is_finite() {
            Ok(Self { mu })
        } else {
            Err(Error::InvalidArgument(format!("mu must be >= 0, got {mu}")))
        }
    }
}

/// Scale of the policy term in the CIS loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CisConfig {
    pub lambda: f64,
}

impl CisConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda >= 0.0 && lambda.is_finite() {
            Ok(Self { lambda })
        } else {
            Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {lambda}"
            )))
        }
    }
}

impl Default for CisConfig {
    fn default() -> Self {
        Self { lambda: 1.0 }
    }
}

/// Probability of forcing a wait factor to 1 during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LarmConfig {
    pub rho: f64,
}

impl LarmConfig {
    pub fn new(rho: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&rho) {
            Ok(Self { rho })
        } else {
            Err(Error::InvalidArgument(format!(
                "rho must lie in [0, 1], got {rho}"
            )))
        }
    }
}

impl Default for LarmConfig {
    fn default() -> Self {
        Self { rho: 0.9 }
    }
}

/// Reward at step `t`: `−μ` for waiting, `−μ − CE(y, ŷ)` when stopping or
/// at `t = T_end` (a wait at the last step is a forced stop).
pub fn step_reward(
    y: &[f64],
    y_hat: &[f64],
    action: Action,
    t: usize,
    t_end: usize,
    mu: f64,
) -> Result<f64> {
    if t == 0 || t > t_end {
        return Err(Error::InvalidArgument(format!(
            "step {t} outside 1..={t_end}"
        )));
    }
    if action == Action::Wait && t < t_end {
        Ok(-mu)
    } else {
        Ok(-mu - cross_entropy(y, y_hat)?)
    }
}

/// `r(y, ŷ_T, T) = −CE(y, ŷ_T) − μT` for stopping at `T`.
pub fn episode_return(y: &[f64], y_hat: &Tensor, stop_at: usize, mu: f64) -> Result<f64> {
    if stop_at == 0 || stop_at > y_hat.rows() {
        return Err(Error::InvalidArgument(format!(
            "stop time {stop_at} outside 1..={}",
            y_hat.rows()
        )));
    }
    Ok(-cross_entropy(y, y_hat.row(stop_at - 1))? - mu * stop_at as f64)
}

/// Earliest `T` maximizing `r(y, ŷ_T, T)`.
pub fn cis_optimal_stop(y: &[f64], y_hat: &Tensor, mu: f64) -> Result<usize> {
    let mut best = (f64::NEG_INFINITY, 0);
    for t in 1..=y_hat.rows() {
        let r = episode_return(y, y_hat, t, mu)?;
        if r > best.0 {
            best = (r, t);
        }
    }
    if best.1 == 0 {
        return Err(Error::InvalidArgument("empty prediction sequence".into()));
    }
    Ok(best.1)
}

/// Same as [`cis_optimal_stop`] from a precomputed CE vector.
pub fn optimal_stop_from_ce(ce: &[f64], mu: f64) -> usize {
    let mut best = (f64::NEG_INFINITY, 1);
    for (i, c) in ce.iter().enumerate() {
        let r = -c - mu * (i + 1) as f64;
        if r > best.0 {
            best = (r, i + 1);
        }
    }
    best.1
}

/// Target policy: wait before `t_tilde`, stop from `t_tilde` on.
pub fn cis_target_policy(t_tilde: usize, t_end: usize) -> Result<Tensor> {
    if t_tilde == 0 || t_tilde > t_end {
        return Err(Error::InvalidArgument(format!(
            "target stop {t_tilde} outside 1..={t_end}"
        )));
    }
    let vals = (1..=t_end)
        .flat_map(|t| if t < t_tilde { [1.0, 0.0] } else { [0.0, 1.0] })
        .collect();
    Tensor::matrix(t_end, 2, vals)
}

fn class_of(y: &[f64]) -> Result<usize> {
    y.iter()
        .position(|&v| v == 1.0)
        .ok_or_else(|| Error::InvalidArgument(format!("label {y:?} is not one-hot")))
}

fn check_outputs(g: &Graph, y: &[f64], y_hat: NodeId, pi: NodeId) -> Result<(usize, usize)> {
    let (t_end, c) = g.value(y_hat).dims2();
    if c != y.len() {
        return Err(shape_err(
            "loss",
            format!("{c} predicted classes, label has {}", y.len()),
        ));
    }
    if g.value(pi).dims2() != (t_end, 2) {
        return Err(shape_err("loss", "policy must be (T_end, 2)"));
    }
    Ok((t_end, c))
}

/// CIS loss `L_ŷ + λ·L_π` on graph nodes `y_hat: (T, C)`, `pi: (T, 2)`.
///
/// The stopping target is derived from the current values of `y_hat` and
/// enters the graph as a constant.
pub fn cis_loss_graph(
    g: &mut Graph,
    y: &[f64],
    y_hat: NodeId,
    pi: NodeId,
    mu: f64,
    lambda: f64,
) -> Result<NodeId> {
    let (t_end, c) = check_outputs(g, y, y_hat, pi)?;
    let class = class_of(y)?;
    let t_tilde = cis_optimal_stop(y, g.value(y_hat), mu)?;
    let target = g.constant(cis_target_policy(t_tilde, t_end)?);

    let picked = g.pick(
        y_hat,
        &(0..t_end).map(|t| t * c + class).collect::<Vec<_>>(),
    )?;
    let log_p = g.ln_clamped(picked);
    let sum_p = g.sum(log_p);
    let l_y = g.scale(sum_p, -1.0 / t_end as f64);

    let log_pi = g.ln_clamped(pi);
    let weighted = g.mul(target, log_pi)?;
    let sum_pi = g.sum(weighted);
    let l_pi = g.scale(sum_pi, -lambda / t_end as f64);
    g.add(l_y, l_pi)
}

pub fn cis_loss(y: &[f64], outputs: &StepOutputs, mu: f64, lambda: f64) -> Result<f64> {
    let mut g = Graph::new();
    let yh = g.constant(outputs.y_hat.clone());
    let pi = g.constant(outputs.pi.clone());
    let l = cis_loss_graph(&mut g, y, yh, pi, mu, lambda)?;
    g.value(l).item()
}

/// `P(A_T)` for `T = 1..=T_end`. A forced step waits with certainty (wait
/// factor 1, stop factor 0) and the last step always stops, so the result
/// sums to 1 for any mask.
pub fn larm_stop_probabilities(pi: &Tensor, wait_force_mask: Option<&[bool]>) -> Result<Vec<f64>> {
    let steps = pi.rows();
    if pi.cols() != 2 {
        return Err(shape_err(
            "larm_stop_probabilities",
            "policy must have two columns",
        ));
    }
    let none = vec![false; steps];
    let mask = wait_force_mask.unwrap_or(&none);
    if mask.len() != steps {
        return Err(shape_err(
            "larm_stop_probabilities",
            "mask length differs from T_end",
        ));
    }
    Ok(stop_probabilities(pi, mask))
}

/// Each step is forced to wait independently with probability `rho`.
pub fn sample_wait_force_mask(t_end: usize, rho: f64, rng: &mut impl Rng) -> Vec<bool> {
    (0..t_end).map(|_| rng.random_bool(rho)).collect()
}

/// LARM loss `CE(y, Σ_T ŷ_T P(A_T)) + μ Σ_T T·P(A_T)` for a fixed force mask.
pub fn larm_loss_graph(
    g: &mut Graph,
    y: &[f64],
    y_hat: NodeId,
    pi: NodeId,
    mu: f64,
    wait_force_mask: &[bool],
) -> Result<NodeId> {
    let (t_end, _) = check_outputs(g, y, y_hat, pi)?;
    let class = class_of(y)?;
    let p = g.stop_distribution(pi, wait_force_mask)?;
    let mixture = g.matmul(p, y_hat)?;
    let picked = g.pick(mixture, &[class])?;
    let log_m = g.ln_clamped(picked);
    let ce = g.scale(log_m, -1.0);
    let times = g.constant(Tensor::matrix(
        t_end,
        1,
        (1..=t_end).map(|t| t as f64).collect(),
    )?);
    let expected_t = g.matmul(p, times)?;
    let penalty = g.scale(expected_t, mu);
    let ce = g.sum(ce);
    let penalty = g.sum(penalty);
    g.add(ce, penalty)
}

pub fn larm_loss_with_mask(
    y: &[f64],
    outputs: &StepOutputs,
    mu: f64,
    wait_force_mask: &[bool],
) -> Result<f64> {
    let mut g = Graph::new();
    let yh = g.constant(outputs.y_hat.clone());
    let pi = g.constant(outputs.pi.clone());
    let l = larm_loss_graph(&mut g, y, yh, pi, mu, wait_force_mask)?;
    g.value(l).item()
}

/// Samples a force mask with probability `rho` per step, then evaluates the loss.
pub fn larm_loss(
    y: &[f64],
    outputs: &StepOutputs,
    mu: f64,
    rho: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    LarmConfig::new(rho)?;
    let mask = sample_wait_force_mask(outputs.steps(), rho, rng);
    larm_loss_with_mask(y, outputs, mu, &mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn outputs(y_hat: &[[f64; 2]], pi: &[[f64; 2]]) -> StepOutputs {
        StepOutputs {
            y_hat: Tensor::from_rows(&y_hat.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
                .unwrap(),
            pi: Tensor::from_rows(&pi.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap(),
        }
    }

    #[test]
    fn step_reward_cases() {
        let y = [1.0, 0.0];
        assert_eq!(
            step_reward(&y, &[0.5, 0.5], Action::Wait, 1, 3, 0.01).unwrap(),
            -0.01
        );
        // CE = 0.5 via ŷ = e^-0.5
        let p = (-0.5f64).exp();
        let r = step_reward(&y, &[p, 1.0 - p], Action::Stop, 2, 3, 0.1).unwrap();
        assert!(close(r, -0.6, 1e-12));
        assert_eq!(
            step_reward(&y, &[1.0, 0.0], Action::Stop, 1, 3, 0.0).unwrap(),
            0.0
        );
        // waiting at the end is a forced stop
        let forced = step_reward(&y, &[0.5, 0.5], Action::Wait, 3, 3, 0.0).unwrap();
        assert!(close(forced, -(2f64.ln()), 1e-12));
    }

    #[test]
    fn episode_return_cases() {
        let y = [1.0, 0.0];
        let p3 = (-0.3f64).exp();
        let yh = Tensor::from_rows(&[vec![p3, 1.0 - p3]]).unwrap();
        assert!(close(episode_return(&y, &yh, 1, 0.0).unwrap(), -0.3, 1e-12));
        let p2 = (-0.2f64).exp();
        let yh = Tensor::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5], vec![p2, 1.0 - p2]]).unwrap();
        assert!(close(episode_return(&y, &yh, 3, 0.1).unwrap(), -0.5, 1e-12));
    }

    #[test]
    fn episode_return_telescopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let t_end = rng.random_range(1..8);
            let rows: Vec<Vec<f64>> = (0..t_end)
                .map(|_| {
                    let p = rng.random::<f64>();
                    vec![p, 1.0 - p]
                })
                .collect();
            let yh = Tensor::from_rows(&rows).unwrap();
            let y = [0.0, 1.0];
            let mu = rng.random::<f64>() * 0.2;
            let stop = rng.random_range(1..=t_end);
            let summed: f64 = (1..=stop)
                .map(|t| {
                    let a = if t == stop {
                        Action::Stop
                    } else {
                        Action::Wait
                    };
                    step_reward(&y, yh.row(t - 1), a, t, t_end, mu).unwrap()
                })
                .sum();
            assert!(close(
                summed,
                episode_return(&y, &yh, stop, mu).unwrap(),
                1e-12
            ));
        }
    }

    fn y_hat_with_ce(ce: &[f64]) -> Tensor {
        let rows: Vec<Vec<f64>> = ce
            .iter()
            .map(|c| {
                let p = (-c).exp();
                vec![p, 1.0 - p]
            })
            .collect();
        Tensor::from_rows(&rows).unwrap()
    }

    #[test]
    fn optimal_stop_examples() {
        let y = [1.0, 0.0];
        assert_eq!(
            cis_optimal_stop(&y, &y_hat_with_ce(&[1.0, 0.4, 0.35]), 0.1).unwrap(),
            2
        );
        assert_eq!(
            cis_optimal_stop(&y, &y_hat_with_ce(&[0.7, 0.7, 0.7]), 0.05).unwrap(),
            1
        );
        assert_eq!(
            cis_optimal_stop(&y, &y_hat_with_ce(&[0.5, 0.5]), 0.0).unwrap(),
            1
        );
        assert_eq!(optimal_stop_from_ce(&[1.0, 0.4, 0.35], 0.1), 2);
    }

    #[test]
    fn target_policy_examples() {
        assert_eq!(
            cis_target_policy(2, 3).unwrap().values(),
            &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]
        );
        assert_eq!(
            cis_target_policy(1, 2).unwrap().values(),
            &[0.0, 1.0, 0.0, 1.0]
        );
        assert_eq!(
            cis_target_policy(3, 3).unwrap().values(),
            &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]
        );
        assert!(cis_target_policy(0, 3).is_err());
        assert!(cis_target_policy(4, 3).is_err());
    }

    #[test]
    fn cis_loss_perfect_is_zero() {
        let out = outputs(&[[1.0, 0.0], [1.0, 0.0]], &[[0.0, 1.0], [0.0, 1.0]]);
        assert_eq!(cis_loss(&[1.0, 0.0], &out, 0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cis_loss_lambda_zero_is_mean_ce() {
        let out = outputs(&[[0.7, 0.3], [0.2, 0.8]], &[[0.4, 0.6], [0.9, 0.1]]);
        let l = cis_loss(&[1.0, 0.0], &out, 0.01, 0.0).unwrap();
        assert!(close(l, -(0.7f64.ln() + 0.2f64.ln()) / 2.0, 1e-12));
    }

    #[test]
    fn cis_loss_two_step_hand_case() {
        let out = outputs(&[[0.5, 0.5], [0.9, 0.1]], &[[0.5, 0.5], [0.5, 0.5]]);
        let y = [1.0, 0.0];
        assert_eq!(cis_optimal_stop(&y, &out.y_hat, 0.01).unwrap(), 2);
        let l_y = (2f64.ln() + (10.0f64 / 9.0).ln()) / 2.0;
        let l_pi = 2f64.ln();
        assert!(close(l_y, 0.3993, 1e-4));
        let l = cis_loss(&y, &out, 0.01, 1.0).unwrap();
        assert!(close(l, l_y + l_pi, 1e-12));
        assert!(close(l, 1.0924, 1e-4));
    }

    #[test]
    fn stop_probability_examples() {
        let half = Tensor::from_rows(&vec![vec![0.5, 0.5]; 3]).unwrap();
        assert_eq!(
            larm_stop_probabilities(&half, None).unwrap(),
            vec![0.5, 0.25, 0.25]
        );
        let first = Tensor::from_rows(&[vec![0.0, 1.0], vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        assert_eq!(
            larm_stop_probabilities(&first, None).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        let forced = larm_stop_probabilities(&first, Some(&[true; 3])).unwrap();
        assert_eq!(forced, vec![0.0, 0.0, 1.0]);
        let partial = larm_stop_probabilities(&half, Some(&[true, false, false])).unwrap();
        assert_eq!(partial, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn larm_degenerate_cases() {
        let y = [1.0, 0.0];
        let out = outputs(
            &[[0.8, 0.2], [0.3, 0.7], [0.6, 0.4]],
            &[[0.0, 1.0], [0.5, 0.5], [0.5, 0.5]],
        );
        let l = larm_loss_with_mask(&y, &out, 0.1, &[false; 3]).unwrap();
        assert!(close(l, -(0.8f64.ln()) + 0.1, 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = larm_loss(&y, &out, 0.1, 1.0, &mut rng).unwrap();
        assert!(close(l, -(0.6f64.ln()) + 0.3, 1e-12));

        let uniform = outputs(&[[1.0, 0.0], [0.0, 1.0]], &[[0.5, 0.5], [0.5, 0.5]]);
        let l = larm_loss_with_mask(&y, &uniform, 0.1, &[false; 2]).unwrap();
        assert!(close(l, 2f64.ln() + 0.15, 1e-12));
        assert!(close(l, 0.8431, 1e-4));
    }

    #[test]
    fn config_validation() {
        assert!(RewardParams::new(-0.1).is_err());
        assert!(CisConfig::new(-1.0).is_err());
        assert!(LarmConfig::new(1.5).is_err());
        assert!(LarmConfig::new(0.9).is_ok());
    }

    #[test]
    fn both_losses_match_finite_differences() {
        use crate::numcore::{grad_check, GradCheckOptions, ParamStore};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t_end in [1, 2, 5] {
            let mut store = ParamStore::new();
            let rand_t = |rng: &mut ChaCha8Rng, c| {
                Tensor::matrix(
                    t_end,
                    c,
                    (0..t_end * c)
                        .map(|_| rng.random_range(-2.0..2.0))
                        .collect(),
                )
                .unwrap()
            };
            let cls = store.insert("cls", rand_t(&mut rng, 3)).unwrap();
            let pol = store.insert("pol", rand_t(&mut rng, 2)).unwrap();
            let y = [0.0, 0.0, 1.0];
            let mask = sample_wait_force_mask(t_end, 0.4, &mut rng);
            for larm in [false, true] {
                let report = grad_check(
                    &mut store,
                    |g, s| {
                        let a = g.param(s, cls);
                        let b = g.param(s, pol);
                        let yh = g.softmax(a)?;
                        let pi = g.softmax(b)?;
                        if larm {
                            larm_loss_graph(g, &y, yh, pi, 0.05, &mask)
                        } else {
                            cis_loss_graph(g, &y, yh, pi, 0.05, 0.7)
                        }
                    },
                    &GradCheckOptions::default(),
                )
                .unwrap();
                assert!(
                    report.max_rel_error < 1e-6,
                    "T={t_end} larm={larm}: {report:?}"
                );
            }
        }
    }
}
