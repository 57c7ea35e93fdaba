//! Repeated-game engine: runs episodes of the pricing game under the
//! optimistic learning policy or a UCB1 baseline leader, producing
//! deterministic trajectories.
//!
//! Both agents act on one shared estimator (demand history is public).
//! A learning episode has two regimes:
//!
//! - While the demand slope is not yet identified, the retailer stocks
//!   nothing and posts a bounded probe price that hunts the demand curve's
//!   zero crossing multiplicatively. Echoing the wholesale price instead
//!   (the naive opt-out) injects high-leverage censored samples whenever
//!   the wholesale price sits far beyond the crossing, which permanently
//!   biases the shared linear fit and derails both agents.
//! - Once identified, the supplier grid-searches her optimistic value and
//!   the retailer plays the optimistic riskless-price strategy.

use rand_chacha::ChaCha12Rng;
use rand::SeedableRng;

use crate::bandit::{h_max_cap, optimistic_h, optimistic_theta_for_action, order_bounds, ConfidenceBall, EstimatorState};
use crate::demand::{sample_demand, DemandParams, Price, Quantity};
use crate::error::Result;
use crate::numeric::golden_max;

/// One round's `(a, p, b)`.
#[derive(Debug, Clone, Copy)]
pub struct JointAction {
    pub a: Price,
    pub p: Price,
    pub b: Quantity,
}

/// Per-round record: actions, realized demand, both payoffs.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub t: u64,
    pub action: JointAction,
    pub demand: Quantity,
    /// Supplier payoff `a * b`.
    pub g_a: f64,
    /// Retailer payoff `p * min(d, b) - a * b`.
    pub g_b: f64,
}

/// Ordered per-round records for one episode.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub seed: u64,
    pub fingerprint: String,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

/// Engine inputs for one episode.
#[derive(Debug, Clone)]
pub struct GameConfig {
    pub params: DemandParams,
    pub kappa: f64,
    pub lambda: f64,
    pub horizon: u64,
    pub price_lo: f64,
    pub price_hi: f64,
    pub grid_n: usize,
    pub ucb_arms: usize,
}

impl GameConfig {
    fn grid_step(&self) -> f64 {
        (self.price_hi - self.price_lo) / self.grid_n as f64
    }

    pub(crate) fn fingerprint(&self) -> String {
        format!(
            "theta0={};theta1={};sigma={};kappa={};lambda={};T={};range=[{},{}];grid={};arms={}",
            self.params.theta0,
            self.params.theta1,
            self.params.sigma,
            self.kappa,
            self.lambda,
            self.horizon,
            self.price_lo,
            self.price_hi,
            self.grid_n,
            self.ucb_arms,
        )
    }
}

// Probe prices grow while observed demand clearly exceeds the noise floor
// (three sigmas: beyond that the zero-clamp would bias the regression
// target) and back off once it does not.
const PROBE_GROW: f64 = 1.6;
const PROBE_SHRINK: f64 = 0.55;
const PROBE_NOISE_SIGMAS: f64 = 3.0;
const PROBE_ANCHOR_EVERY: u64 = 4;

// Slope identification: the gram-matrix standard error of the slope must
// clear the estimate by this factor before the optimism machinery acts.
const SLOPE_ID_FACTOR: f64 = 24.0;

/// Demand-crossing hunt posted by the retailer on rounds it stocks nothing.
#[derive(Debug, Clone)]
struct ProbeState {
    price: f64,
    floor: f64,
    ceil: f64,
    count: u64,
    last: Option<(f64, f64)>,
}

impl ProbeState {
    fn new(floor: f64, ceil: f64) -> Self {
        Self { price: floor, floor, ceil, count: 0, last: None }
    }

    fn next_price(&mut self, sigma: f64) -> f64 {
        self.count += 1;
        if self.count % PROBE_ANCHOR_EVERY == 0 {
            return 2.0 * self.floor;
        }
        if let Some((p, d)) = self.last {
            self.price = if d > PROBE_NOISE_SIGMAS * sigma {
                (p * PROBE_GROW).clamp(self.floor, self.ceil)
            } else {
                (p * PROBE_SHRINK).max(self.floor)
            };
        }
        self.price
    }

    fn observe(&mut self, p: f64, d: f64) {
        if (p - 2.0 * self.floor).abs() > 1e-12 || self.count % PROBE_ANCHOR_EVERY != 0 {
            self.last = Some((p, d));
        }
    }
}

fn slope_identified(est: &EstimatorState, sigma: f64) -> bool {
    let (_, t1) = est.theta_hat();
    t1 > 0.0 && est.confidence_radius() < t1 && SLOPE_ID_FACTOR * est.slope_std_error(sigma) <= t1
}

/// Outcome of the supplier's action selection for one round.
#[derive(Debug, Clone, Copy)]
pub struct LeaderDecision {
    pub action: Price,
    /// No feasible optimistic market this round; the action is a floor
    /// probe and the retailer will not order.
    pub degenerate: bool,
}

/// Supplier's optimistic grid argmax of `a * b_upper(a)` over
/// `(a_lo, min(a_hi, H_opt)]`, golden-refined, ties toward the smaller
/// price. Degenerate when no optimistic margin exists.
pub fn lnpg_leader_action(
    ball: &ConfidenceBall,
    sigma: f64,
    a_range: (f64, f64),
    grid_n: usize,
    h_max: f64,
) -> LeaderDecision {
    let (lo, hi) = a_range;
    let step = (hi - lo) / grid_n as f64;
    let h_opt = optimistic_h(ball, h_max).min(h_max);
    let ub = hi.min(h_opt * (1.0 - 1e-6));
    if ub <= lo + step {
        return LeaderDecision { action: Price::new(lo + step).unwrap(), degenerate: true };
    }
    let score = |a: f64| -> f64 {
        if a <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let (_, b_upper) = order_bounds(ball, Price::new(a).unwrap(), sigma, h_max);
        a * b_upper.value()
    };
    let gstep = (ub - lo) / grid_n as f64;
    let mut best_i = 1;
    let mut best_v = f64::NEG_INFINITY;
    for i in 1..=grid_n {
        let v = score(lo + i as f64 * gstep);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_v <= 0.0 {
        return LeaderDecision { action: Price::new(lo + step).unwrap(), degenerate: true };
    }
    let blo = lo + best_i.saturating_sub(1) as f64 * gstep;
    let bhi = lo + (best_i + 1).min(grid_n) as f64 * gstep;
    let (a_ref, v_ref) = golden_max(&score, blo, bhi, 1e-7 * (ub - lo));
    let action = if v_ref > best_v { a_ref } else { lo + best_i as f64 * gstep };
    LeaderDecision { action: Price::new(action).unwrap(), degenerate: false }
}

/// Retailer's optimistic response: price at the optimist's riskless price,
/// order the optimistic critical fractile. `None` when no margin exists
/// even optimistically (the caller falls back to a probe round).
pub fn lnpg_follower_action(
    ball: &ConfidenceBall,
    a: Price,
    sigma: f64,
    h_max: f64,
) -> Option<(Price, Quantity)> {
    let theta = optimistic_theta_for_action(ball, a, sigma, h_max);
    let h = if theta.1 > 0.0 { (theta.0 / theta.1).min(h_max) } else { h_max };
    if h <= a.value() {
        return None;
    }
    let (_, b_upper) = order_bounds(ball, a, sigma, h_max);
    if b_upper.value() <= 0.0 {
        return None;
    }
    let p = Price::new(0.5 * (h + a.value())).unwrap();
    Some((p, b_upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LeaderKind {
    Lnpg,
    Ucb,
}

/// UCB1 state over discretized wholesale prices, rewards normalized by the
/// running absolute maximum.
#[derive(Debug, Clone)]
pub struct UcbState {
    counts: Vec<u64>,
    sums: Vec<f64>,
    max_abs: f64,
    arms: Vec<f64>,
    c: f64,
}

impl UcbState {
    pub fn new(k: usize, lo: f64, hi: f64) -> Self {
        // Arms sit at cell midpoints so the zero price is never an arm.
        let arms = (0..k)
            .map(|i| lo + (i as f64 + 0.5) * (hi - lo) / k as f64)
            .collect();
        Self { counts: vec![0; k], sums: vec![0.0; k], max_abs: 0.0, arms, c: 1.0 }
    }

    pub fn select(&self, t: u64) -> usize {
        if let Some(i) = self.counts.iter().position(|&n| n == 0) {
            return i;
        }
        let scale = self.max_abs.max(1e-12);
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..self.arms.len() {
            let mean = self.sums[i] / self.counts[i] as f64 / scale;
            let bonus = self.c * (2.0 * (t as f64).ln() / self.counts[i] as f64).sqrt();
            let v = mean + bonus;
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.max_abs = self.max_abs.max(reward.abs());
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn arm_price(&self, arm: usize) -> f64 {
        self.arms[arm]
    }
}

fn run_episode(
    config: &GameConfig,
    seed: u64,
    kind: LeaderKind,
    warm: Option<EstimatorState>,
) -> Trajectory {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut est = warm
        .unwrap_or_else(|| EstimatorState::new(config.lambda, config.kappa).expect("validated"));
    let step = config.grid_step();
    let mut probe = ProbeState::new(step, config.price_hi);
    let mut ucb = UcbState::new(config.ucb_arms, config.price_lo, config.price_hi);
    let sigma = config.params.sigma;
    let mut steps = Vec::with_capacity(config.horizon as usize);

    for t in 1..=config.horizon {
        let ball = est.ball();
        let h_max = h_max_cap(ball.center, config.price_hi);
        let identified = slope_identified(&est, sigma);

        let (a, arm) = match kind {
            LeaderKind::Lnpg => {
                if identified {
                    let d = lnpg_leader_action(
                        &ball,
                        sigma,
                        (config.price_lo, config.price_hi),
                        config.grid_n,
                        h_max,
                    );
                    (d.action, None)
                } else {
                    (Price::new(config.price_lo + step).unwrap(), None)
                }
            }
            LeaderKind::Ucb => {
                let arm = ucb.select(t);
                (Price::new(ucb.arm_price(arm)).unwrap(), Some(arm))
            }
        };

        let follower = if identified {
            lnpg_follower_action(&ball, a, sigma, h_max)
        } else {
            None
        };
        let (p, b, probing) = match follower {
            Some((p, b)) => (p, b, false),
            None => {
                let p = probe.next_price(sigma);
                (Price::new(p).unwrap(), Quantity::new(0.0).unwrap(), true)
            }
        };

        let d = sample_demand(&config.params, p, &mut rng);
        if probing {
            probe.observe(p.value(), d.value());
        }
        let g_a = a.value() * b.value();
        let g_b = p.value() * d.value().min(b.value()) - g_a;
        if let Some(arm) = arm {
            ucb.update(arm, g_a);
        }
        steps.push(StepRecord {
            t,
            action: JointAction { a, p, b },
            demand: d,
            g_a,
            g_b,
        });
        est.update(p, d);
    }

    Trajectory { steps, seed, fingerprint: config.fingerprint() }
}

/// One learning-policy episode, deterministic in `(config, seed)`.
pub fn run_episode_lnpg(config: &GameConfig, seed: u64) -> Trajectory {
    run_episode(config, seed, LeaderKind::Lnpg, None)
}

/// Like `run_episode_lnpg`, from a caller-provided estimator state.
pub fn run_episode_lnpg_warm(config: &GameConfig, seed: u64, est: EstimatorState) -> Trajectory {
    run_episode(config, seed, LeaderKind::Lnpg, Some(est))
}

/// One UCB1-leader episode against the same retailer policy.
pub fn run_episode_ucb(config: &GameConfig, seed: u64) -> Trajectory {
    run_episode(config, seed, LeaderKind::Ucb, None)
}

/// SplitMix64 step: derives independent per-trial seeds from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Validates the pieces of a [`GameConfig`] that the engine relies on.
pub fn validate_config(config: &GameConfig) -> Result<()> {
    use crate::error::Error;
    if config.horizon < 1 {
        return Err(Error::InvalidParams("horizon must be >= 1".into()));
    }
    if config.grid_n < 64 {
        return Err(Error::InvalidParams("leader grid needs >= 64 points".into()));
    }
    if config.ucb_arms < 2 {
        return Err(Error::InvalidParams("ucb needs >= 2 arms".into()));
    }
    if !(config.price_lo < config.price_hi) {
        return Err(Error::InvalidParams("price range must be ordered".into()));
    }
    if !(config.kappa >= 0.0) {
        return Err(Error::InvalidParams("kappa must be >= 0".into()));
    }
    EstimatorState::new(config.lambda, config.kappa).map(|_| ())
}
