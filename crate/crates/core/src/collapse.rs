//! Reduced model of N well-separated pointer packets: the conditioned state
//! is summarized by packet weights and centers. Between jumps the weights
//! drift deterministically (the largest one grows); a jump reweights the
//! packets, which for two packets is an exact swap. The winner statistics
//! reproduce the Born rule.

use crate::numerics::RngStream;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Winner declaration threshold: the drift reaches 1 only asymptotically.
pub const WINNER_THRESHOLD: f64 = 1.0 - 1e-6;
/// Per-step jump probability cap for the collapse sampler.
pub const COLLAPSE_PROBABILITY_CAP: f64 = 0.05;

/// Weights and centers of well-separated packets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightState {
    weights: Vec<f64>,
    positions: Vec<f64>,
    lambda: f64,
}

impl WeightState {
    pub fn new(weights: Vec<f64>, positions: Vec<f64>, lambda: f64) -> Result<Self> {
        if weights.len() != positions.len() || weights.len() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} positions",
                weights.len(),
                positions.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "negative or non-finite weight".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
        }
        Ok(Self {
            weights,
            positions,
            lambda,
        })
    }

    /// Two packets separated by `l`, weights (w1, 1 - w1).
    pub fn pair(w1: f64, l: f64, lambda: f64) -> Result<Self> {
        Self::new(vec![w1, 1.0 - w1], vec![-0.5 * l, 0.5 * l], lambda)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_packets(&self) -> usize {
        self.weights.len()
    }

    pub fn mean_x(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.positions)
            .map(|(w, x)| w * x)
            .sum()
    }

    pub fn var_x(&self) -> f64 {
        let mx = self.mean_x();
        self.weights
            .iter()
            .zip(&self.positions)
            .map(|(w, x)| w * (x - mx) * (x - mx))
            .sum()
    }

    /// Jump rate r = 2 lambda var_x (= 2 lambda L^2 w1 w2 for two packets).
    pub fn jump_rate(&self) -> f64 {
        2.0 * self.lambda * self.var_x()
    }

    /// Packet separation |x1 - x2| (two packets only).
    pub fn separation(&self) -> Result<f64> {
        if self.n_packets() != 2 {
            return Err(Error::InvalidParameter(
                "separation defined for two packets".into(),
            ));
        }
        Ok((self.positions[0] - self.positions[1]).abs())
    }
}

/// One RK4 step of the two-packet weight drift
/// dw1/dt = 2 lambda L^2 w1 (1 - w1)(2 w1 - 1), with w2 = 1 - w1.
pub fn weight_drift_step(s: &WeightState, dt: f64) -> Result<WeightState> {
    if s.n_packets() != 2 {
        return Err(Error::InvalidParameter(
            "weight drift is implemented for two packets".into(),
        ));
    }
    let l = s.separation()?;
    let c = 2.0 * s.lambda * l * l;
    let f = |w: f64| c * w * (1.0 - w) * (2.0 * w - 1.0);
    let w = s.weights[0];
    let k1 = f(w);
    let k2 = f(w + 0.5 * dt * k1);
    let k3 = f(w + 0.5 * dt * k2);
    let k4 = f(w + dt * k3);
    let w1 = (w + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
    WeightState::new(vec![w1, 1.0 - w1], s.positions.clone(), s.lambda)
}

/// Closed-form solution of the two-packet drift: weight after `delta_t`
/// given the combination `lam_l2` = lambda * L^2.
///
/// w' = 1/2 (1 + sign(2w - 1) sqrt(y / (4 + y))),
/// y = (1 - 2w)^2 / (w (1 - w)) * exp(2 lam_l2 delta_t).
/// The endpoints w in {0, 1} are absorbing.
pub fn analytic_weights(w0: f64, delta_t: f64, lam_l2: f64) -> f64 {
    if w0 <= 0.0 || w0 >= 1.0 {
        return w0.clamp(0.0, 1.0);
    }
    let u = 2.0 * w0 - 1.0;
    let y = u * u / (w0 * (1.0 - w0)) * (2.0 * lam_l2 * delta_t).exp();
    let root = (y / (4.0 + y)).sqrt();
    0.5 * (1.0 + u.signum() * root)
}

/// Jump reweighting w_i -> w_i (x_i - <x>)^2 / sum_j w_j (x_j - <x>)^2.
/// For two packets this is an exact swap.
pub fn collapse_jump(s: &WeightState) -> Result<WeightState> {
    let mx = s.mean_x();
    let mut reweighted: Vec<f64> = s
        .weights
        .iter()
        .zip(&s.positions)
        .map(|(w, x)| w * (x - mx) * (x - mx))
        .collect();
    let denom: f64 = reweighted.iter().sum();
    if denom < 1e-300 {
        return Err(Error::CoincidentPackets);
    }
    for w in reweighted.iter_mut() {
        *w /= denom;
    }
    // renormalize exactly against rounding drift
    let sum: f64 = reweighted.iter().sum();
    for w in reweighted.iter_mut() {
        *w /= sum;
    }
    WeightState::new(reweighted, s.positions.clone(), s.lambda)
}

/// Sample on a weight path: (time, w1, whether the step ending here jumped).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub w1: f64,
    pub jumped: bool,
}

/// Result of a single collapse run.
#[derive(Clone, Debug)]
pub struct CollapseOutcome {
    /// Index of the packet whose weight crossed the winner threshold.
    pub winner: usize,
    pub n_jumps: usize,
    pub t_final: f64,
    pub path: Vec<PathSample>,
}

/// Run the two-packet collapse: alternate drift steps and Bernoulli(r dt)
/// swap jumps until one weight exceeds the winner threshold.
///
/// `dt_max` caps the step; the actual step keeps r*dt <= 0.05. A run that
/// has not resolved by t = 50 / (2 lambda L^2) errors, except for the
/// symmetric stationary point w = 1/2 exactly, where the winner is decided
/// by a fair draw (the limit of any infinitesimal asymmetry).
pub fn simulate_collapse(
    s0: &WeightState,
    dt_max: f64,
    rng: &mut RngStream,
) -> Result<CollapseOutcome> {
    if s0.n_packets() != 2 {
        return Err(Error::InvalidParameter(
            "collapse sampler is implemented for two packets".into(),
        ));
    }
    if !(dt_max > 0.0) {
        return Err(Error::InvalidParameter(format!("dt_max = {dt_max}")));
    }
    let l = s0.separation()?;
    let full_rate = 2.0 * s0.lambda * l * l;
    let t_guard = 50.0 / full_rate;

    let mut s = s0.clone();
    let mut t = 0.0;
    let mut n_jumps = 0usize;
    let mut path = vec![PathSample {
        t: 0.0,
        w1: s.weights[0],
        jumped: false,
    }];

    loop {
        if let Some(winner) = s.weights.iter().position(|&w| w > WINNER_THRESHOLD) {
            return Ok(CollapseOutcome {
                winner,
                n_jumps,
                t_final: t,
                path,
            });
        }
        if t > t_guard {
            let (w1, w2) = (s.weights[0], s.weights[1]);
            if (w1 - w2).abs() < 1e-9 {
                // exactly balanced superposition: drift and swap both leave
                // it fixed; resolve by the symmetric limit
                let winner = usize::from(rng.uniform() < 0.5);
                return Ok(CollapseOutcome {
                    winner,
                    n_jumps,
                    t_final: t,
                    path,
                });
            }
            return Err(Error::CollapseTimeout(t_guard));
        }
        let r = s.jump_rate();
        let dt = dt_max.min(COLLAPSE_PROBABILITY_CAP / full_rate.max(r));
        // The swap is instantaneous; the drift runs through the whole step.
        // This keeps the resolution time independent of the jump count, as
        // the invariant |2 w1 - 1| flow requires.
        let jumped = rng.uniform() < r * dt;
        if jumped {
            n_jumps += 1;
            s = collapse_jump(&s)?;
        }
        s = weight_drift_step(&s, dt)?;
        t += dt;
        path.push(PathSample {
            t,
            w1: s.weights[0],
            jumped,
        });
    }
}

/// Mean number of jumps predicted for a two-packet collapse starting from
/// weights (w1, 1 - w1): (1/2) log(1 / |w1 - w2|).
pub fn mean_jump_count(w1: f64) -> f64 {
    let diff = (2.0 * w1 - 1.0).abs();
    0.5 * (1.0 / diff).ln()
}

/// Winner index frequencies and jump statistics over an ensemble of runs,
/// one RNG stream per run index.
#[derive(Clone, Debug)]
pub struct CollapseEnsemble {
    pub n_runs: usize,
    pub winner2_frequency: f64,
    pub mean_jumps: f64,
    pub mean_t_final: f64,
    pub outcomes: Vec<CollapseOutcome>,
}

pub fn collapse_ensemble(
    s0: &WeightState,
    dt_max: f64,
    n_runs: usize,
    seed: u64,
) -> Result<CollapseEnsemble> {
    use rayon::prelude::*;
    let outcomes: Result<Vec<CollapseOutcome>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            simulate_collapse(s0, dt_max, &mut rng)
        })
        .collect();
    let outcomes = outcomes?;
    let winner2 = outcomes.iter().filter(|o| o.winner == 1).count();
    let jumps: usize = outcomes.iter().map(|o| o.n_jumps).sum();
    let t_sum: f64 = outcomes.iter().map(|o| o.t_final).sum();
    Ok(CollapseEnsemble {
        n_runs,
        winner2_frequency: winner2 as f64 / n_runs as f64,
        mean_jumps: jumps as f64 / n_runs as f64,
        mean_t_final: t_sum / n_runs as f64,
        outcomes,
    })
}

/// CSV dump of a weight path: `t,w1,jumped`.
pub fn path_to_csv(path: &[PathSample]) -> String {
    let mut out = String::from("t,w1,jumped\n");
    for p in path {
        out.push_str(&format!("{},{},{}\n", p.t, p.w1, u8::from(p.jumped)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(w1: f64) -> WeightState {
        WeightState::pair(w1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn fixed_points_are_stationary() {
        for w in [0.5, 1.0, 0.0] {
            let s = WeightState::new(vec![w, 1.0 - w], vec![-0.5, 0.5], 1.0).unwrap();
            let next = weight_drift_step(&s, 0.01).unwrap();
            assert_eq!(next.weights()[0], w);
        }
    }

    #[test]
    fn drift_matches_analytic_solution() {
        // lambda L^2 = 1, w0 = 0.6, t = 1
        let mut s = pair(0.6);
        let dt = 1e-3;
        for _ in 0..1000 {
            s = weight_drift_step(&s, dt).unwrap();
        }
        let expect = analytic_weights(0.6, 1.0, 1.0);
        assert!(
            (s.weights()[0] - expect).abs() < 1e-8,
            "rk4 {} vs analytic {}",
            s.weights()[0],
            expect
        );
    }

    #[test]
    fn drift_analytic_agreement_over_ten_time_units() {
        let mut s = pair(0.52);
        let dt = 5e-3;
        let mut t = 0.0;
        for _ in 0..2000 {
            s = weight_drift_step(&s, dt).unwrap();
            t += dt;
            let expect = analytic_weights(0.52, t, 1.0);
            assert!(
                (s.weights()[0] - expect).abs() < 1e-8,
                "t = {t}: {} vs {}",
                s.weights()[0],
                expect
            );
        }
    }

    #[test]
    fn analytic_weights_edge_cases() {
        assert_eq!(analytic_weights(0.5, 5.0, 1.0), 0.5);
        assert!((analytic_weights(0.3, 0.0, 1.0) - 0.3).abs() < 1e-12);
        // long-time limit: the larger weight goes to 1
        assert!((analytic_weights(0.7, 100.0, 1.0) - 1.0).abs() < 1e-12);
        assert!(analytic_weights(0.3, 100.0, 1.0) < 1e-12);
        // absorbing endpoints
        assert_eq!(analytic_weights(1.0, 3.0, 1.0), 1.0);
        assert_eq!(analytic_weights(0.0, 3.0, 1.0), 0.0);
    }

    #[test]
    fn two_packet_jump_is_a_swap() {
        let s = pair(0.3);
        let j = collapse_jump(&s).unwrap();
        assert!((j.weights()[0] - 0.7).abs() < 1e-12);
        assert!((j.weights()[1] - 0.3).abs() < 1e-12);
        let jj = collapse_jump(&j).unwrap();
        assert!((jj.weights()[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn three_packet_jump_reweighting() {
        // equal weights at (-1, 0, 1): <x> = 0, center packet is killed
        let s = WeightState::new(
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![-1.0, 0.0, 1.0],
            1.0,
        )
        .unwrap();
        let j = collapse_jump(&s).unwrap();
        assert!((j.weights()[0] - 0.5).abs() < 1e-12);
        assert!(j.weights()[1].abs() < 1e-12);
        assert!((j.weights()[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coincident_packets_error() {
        let s = WeightState::new(vec![0.5, 0.5], vec![2.0, 2.0], 1.0).unwrap();
        assert!(matches!(collapse_jump(&s), Err(Error::CoincidentPackets)));
    }

    #[test]
    fn weight_sum_conserved_through_dynamics() {
        let mut rng = RngStream::new(13, 0);
        let out = simulate_collapse(&pair(0.37), 0.05, &mut rng).unwrap();
        for p in &out.path {
            assert!(p.w1 >= 0.0 && p.w1 <= 1.0);
        }
    }

    #[test]
    fn degenerate_start_resolves_by_fair_draw() {
        let mut wins = 0usize;
        for i in 0..200 {
            let mut rng = RngStream::new(77, i);
            let out = simulate_collapse(&pair(0.5), 0.05, &mut rng).unwrap();
            if out.winner == 1 {
                wins += 1;
            }
        }
        assert!(wins > 60 && wins < 140, "wins {wins}");
    }

    #[test]
    fn certain_initial_state_wins_immediately() {
        let s = WeightState::new(vec![1.0, 0.0], vec![-0.5, 0.5], 1.0).unwrap();
        let mut rng = RngStream::new(14, 0);
        let out = simulate_collapse(&s, 0.05, &mut rng).unwrap();
        assert_eq!(out.winner, 0);
        assert_eq!(out.n_jumps, 0);
        assert_eq!(out.t_final, 0.0);
    }

    #[test]
    fn born_rule_small_ensemble() {
        let ens = collapse_ensemble(&pair(0.3), 0.05, 2000, 99).unwrap();
        // winner-2 frequency ~ 0.7 within ~3.5 sigma of binomial error
        let sigma = (0.7f64 * 0.3 / 2000.0).sqrt();
        assert!(
            (ens.winner2_frequency - 0.7).abs() < 3.5 * sigma,
            "freq {}",
            ens.winner2_frequency
        );
    }

    #[test]
    fn mean_jump_count_formula() {
        assert!((mean_jump_count(0.75) - 0.5 * 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn localization_time_does_not_depend_on_jumps() {
        // |2w - 1| follows a deterministic flow and jumps leave it
        // invariant, so resolution times coincide across runs
        let ens = collapse_ensemble(&pair(0.3), 0.05, 300, 5).unwrap();
        let t0 = ens.outcomes[0].t_final;
        for o in &ens.outcomes {
            assert!((o.t_final - t0).abs() < 1e-9);
        }
        // and jump counts still vary
        let min = ens.outcomes.iter().map(|o| o.n_jumps).min().unwrap();
        let max = ens.outcomes.iter().map(|o| o.n_jumps).max().unwrap();
        assert!(max > min);
    }

    #[test]
    fn martingale_mean_weight_is_conserved() {
        let w0 = 0.35;
        let ens = collapse_ensemble(&pair(w0), 0.05, 4000, 7).unwrap();
        // sample w1 at a mid-trajectory checkpoint via the paths
        let t_res = ens.outcomes[0].t_final;
        for frac in [0.25, 0.5, 0.75] {
            let t_check = frac * t_res;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for o in &ens.outcomes {
                let w = o
                    .path
                    .iter()
                    .take_while(|p| p.t <= t_check)
                    .last()
                    .unwrap()
                    .w1;
                sum += w;
                sq += w * w;
            }
            let n = ens.n_runs as f64;
            let mean = sum / n;
            let std_err = ((sq / n - mean * mean).max(0.0) / n).sqrt();
            assert!(
                (mean - w0).abs() <= 3.0 * std_err.max(1e-4),
                "t = {t_check}: mean {mean} vs {w0} (se {std_err})"
            );
        }
    }

    #[test]
    fn rejects_bad_weight_states() {
        assert!(WeightState::new(vec![0.6, 0.6], vec![0.0, 1.0], 1.0).is_err());
        assert!(WeightState::new(vec![1.2, -0.2], vec![0.0, 1.0], 1.0).is_err());
        assert!(WeightState::new(vec![1.0], vec![0.0], 1.0).is_err());
    }
}
