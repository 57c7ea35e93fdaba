//! Regret measurement: Stackelberg (supplier) regret against the
//! hindsight-optimal wholesale price, expected-value (retailer) regret
//! against the exact best response, the alternative-response penalty, and
//! cross-trial aggregation with quartile bands.

use rayon::prelude::*;

use crate::demand::{expected_profit, DemandParams, Price, Quantity};
use crate::econ::{best_response, EquilibriumOracle};
use crate::error::{Error, Result};
use crate::game::Trajectory;

/// Per-round instantaneous and cumulative regret for one trajectory.
#[derive(Debug, Clone)]
pub struct RegretCurve {
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretCurve {
    fn from_instantaneous(instantaneous: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(instantaneous.len());
        let mut acc = 0.0;
        for v in &instantaneous {
            acc += v;
            cumulative.push(acc);
        }
        Self { instantaneous, cumulative }
    }

    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }
}

/// Per-round mean and quartiles across trials.
#[derive(Debug, Clone)]
pub struct AggregateBand {
    pub mean: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

/// Supplier regret: per-round shortfall of `a^t b^t` against the
/// hindsight-optimal value achievable against the deployed retailer policy
/// (`oracle.benchmark_value`). Negative rounds are kept: optimistic
/// over-ordering can pay the supplier more than the benchmark.
pub fn stackelberg_regret(traj: &Trajectory, oracle: &EquilibriumOracle) -> RegretCurve {
    let inst = traj
        .steps
        .iter()
        .map(|s| oracle.benchmark_value - s.g_a)
        .collect();
    RegretCurve::from_instantaneous(inst)
}

/// Retailer regret in expectation: per-round gap between the exact best
/// response's expected profit and the expected profit of the played
/// `(p, b)`, both under the true demand parameters.
pub fn follower_regret(traj: &Trajectory, params: &DemandParams) -> RegretCurve {
    let inst = traj
        .steps
        .iter()
        .map(|s| follower_instantaneous(params, s.action.a, s.action.p, s.action.b))
        .collect();
    RegretCurve::from_instantaneous(inst)
}

/// One round of the expected-value retailer regret.
pub fn follower_instantaneous(params: &DemandParams, a: Price, p: Price, b: Quantity) -> f64 {
    let best = best_response(params, a).expected_profit;
    best - expected_profit(params, a, p, b)
}

/// Penalty the supplier pays for a retailer deviating to `alt_response`:
/// the alternative-response value at its own maximizer minus at the
/// exact-response maximizer, over the grid. Nonnegative by construction.
pub fn alt_br_penalty<F>(params: &DemandParams, alt_response: F, a_grid: &[f64]) -> f64
where
    F: Fn(Price) -> (Price, Quantity) + Sync,
{
    let alt_value = |a: f64| -> f64 {
        let (_, b) = alt_response(Price::new(a).unwrap());
        a * b.value()
    };
    let scored: Vec<(f64, f64, f64)> = a_grid
        .par_iter()
        .filter(|&&a| a > 0.0)
        .map(|&a| {
            let ev = a * best_response(params, Price::new(a).unwrap()).b_star.value();
            (a, alt_value(a), ev)
        })
        .collect();
    let mut alt_best = f64::NEG_INFINITY;
    let mut exact_best = f64::NEG_INFINITY;
    let mut exact_arg = a_grid[0];
    for &(a, av, ev) in &scored {
        alt_best = alt_best.max(av);
        if ev > exact_best {
            exact_best = ev;
            exact_arg = a;
        }
    }
    alt_best - alt_value(exact_arg)
}

/// Nearest-rank percentile of already-sorted values.
fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = (pct * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Per-round mean, 25th and 75th nearest-rank percentiles across series of
/// equal length.
pub fn aggregate_series(series: &[&[f64]]) -> Result<AggregateBand> {
    if series.is_empty() {
        return Ok(AggregateBand { mean: vec![], q25: vec![], q75: vec![] });
    }
    let len = series[0].len();
    for s in series {
        if s.len() != len {
            return Err(Error::CurveLengthMismatch { expected: len, got: s.len() });
        }
    }
    let n = series.len();
    let mut mean = Vec::with_capacity(len);
    let mut q25 = Vec::with_capacity(len);
    let mut q75 = Vec::with_capacity(len);
    let mut column = vec![0.0; n];
    for t in 0..len {
        for (i, s) in series.iter().enumerate() {
            column[i] = s[t];
        }
        mean.push(column.iter().sum::<f64>() / n as f64);
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        q25.push(nearest_rank(&column, 0.25));
        q75.push(nearest_rank(&column, 0.75));
    }
    Ok(AggregateBand { mean, q25, q75 })
}

/// Aggregates the cumulative curves of many trials.
pub fn aggregate_trials(curves: &[RegretCurve]) -> Result<AggregateBand> {
    let series: Vec<&[f64]> = curves.iter().map(|c| c.cumulative.as_slice()).collect();
    aggregate_series(&series)
}
