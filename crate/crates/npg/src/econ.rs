//! Perfect-information economics of the pricing game: critical-fractile
//! ordering, riskless and Mills-corrected pricing, the retailer's best
//! response, and the supplier's equilibrium oracle.
//!
//! The best-response search runs over standardized surplus `z = b - Gamma(p)`
//! rather than the joint `(p, b)` plane: the expected-shortage term depends
//! on the demand parameters only through `z` (see `psi_loss`), so the Mills
//! price is a function of `z` alone and the search is one-dimensional.

use crate::demand::{
    expected_demand, expected_profit, psi_loss, std_normal_quantile,
    DemandParams, Price, Quantity,
};
use crate::error::{Error, Result};
use crate::numeric::golden_max;

/// Retailer's profit-maximizing reaction to a wholesale price.
#[derive(Debug, Clone, Copy)]
pub struct BestResponse {
    pub p_star: Price,
    pub b_star: Quantity,
    pub expected_profit: f64,
}

/// Perfect-information equilibrium quantities, computed once per
/// configuration and reused by every regret metric.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumOracle {
    /// Wholesale price maximizing `a * best_response(a).b_star`.
    pub a_star: Price,
    /// The retailer's best response at `a_star`.
    pub response: BestResponse,
    /// `a_star * b_star`: the supplier's value at the equilibrium.
    pub leader_value: f64,
    /// Retailer's expected profit at the equilibrium.
    pub follower_value: f64,
    /// Worst-case gap between the exact best response and the
    /// riskless-price response, over the searched wholesale range.
    pub epsilon_b: f64,
    /// Wholesale price maximizing the supplier's value against the
    /// riskless-price retailer.
    pub benchmark_a: Price,
    /// Supplier's hindsight-optimal value against the riskless-price
    /// retailer. This is the reference the learning analysis competes
    /// with, and the per-round benchmark for Stackelberg regret.
    pub benchmark_value: f64,
}

/// Service level `(p - a) / p`. Requires a positive margin `p > a > 0`.
pub fn critical_fractile(p: Price, a: Price) -> Result<f64> {
    let (p, a) = (p.value(), a.value());
    if !(p > a && a > 0.0) {
        return Err(Error::NonPositiveMargin { p, a });
    }
    Ok((p - a) / p)
}

/// Critical-fractile order `max(0, Gamma(p) + sigma * Phi^-1((p-a)/p))`.
pub fn order_quantity(params: &DemandParams, p: Price, a: Price) -> Result<Quantity> {
    let gamma = critical_fractile(p, a)?;
    let z = std_normal_quantile(gamma)?;
    let b = expected_demand(params, p).value() + params.sigma * z;
    Quantity::new(b.max(0.0))
}

/// Margin-maximizing price ignoring inventory risk: `(theta0/theta1 + a) / 2`.
pub fn riskless_price(params: &DemandParams, a: Price) -> Result<Price> {
    let h = params.price_ratio();
    if a.value() >= h {
        return Err(Error::InfeasibleMarket { a: a.value(), h });
    }
    Price::new(0.5 * (h + a.value()))
}

/// Mills-corrected price for a stock level `z` above the expected demand:
/// the riskless price discounted by the expected shortage at `z`.
pub fn mills_price_of_stock(params: &DemandParams, a: Price, z: f64) -> Result<Price> {
    let p0 = riskless_price(params, a)?;
    Price::new(p0.value() - psi_loss(0.0, params.sigma, z) / (2.0 * params.theta1))
}

const Z_GRID: usize = 2001;
const GOLDEN_REL_TOL: f64 = 1e-7;

// Profit of the Mills-priced strategy at standardized surplus z.
fn profit_at_surplus(params: &DemandParams, a: Price, z: f64) -> (Price, Quantity, f64) {
    let p0 = 0.5 * (params.price_ratio() + a.value());
    let p = Price::new((p0 - psi_loss(0.0, params.sigma, z) / (2.0 * params.theta1)).max(0.0))
        .unwrap();
    let b = Quantity::new((expected_demand(params, p).value() + z).max(0.0)).unwrap();
    (p, b, expected_profit(params, a, p, b))
}

/// Retailer's exact best response: scans standardized surplus over
/// `[-6 sigma, 6 sigma]`, prices each stock level by the Mills correction,
/// and refines the best bracket by golden section. Infeasible markets
/// (`a >= theta0/theta1`) answer with the zero order.
pub fn best_response(params: &DemandParams, a: Price) -> BestResponse {
    let h = params.price_ratio();
    if a.value() >= h {
        return BestResponse {
            p_star: a,
            b_star: Quantity::new(0.0).unwrap(),
            expected_profit: 0.0,
        };
    }
    if params.sigma == 0.0 {
        let p0 = riskless_price(params, a).unwrap();
        let b = expected_demand(params, p0);
        return BestResponse {
            p_star: p0,
            b_star: b,
            expected_profit: b.value() * (p0.value() - a.value()),
        };
    }
    let half_span = 6.0 * params.sigma;
    let step = 2.0 * half_span / (Z_GRID - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..Z_GRID {
        let z = -half_span + i as f64 * step;
        let (_, _, v) = profit_at_surplus(params, a, z);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = -half_span + best_i.saturating_sub(1) as f64 * step;
    let hi = (-half_span + (best_i + 1).min(Z_GRID - 1) as f64 * step).min(half_span);
    let (z_ref, v_ref) = golden_max(
        &|z| profit_at_surplus(params, a, z).2,
        lo,
        hi,
        GOLDEN_REL_TOL * 2.0 * half_span,
    );
    let z_best = if v_ref > best_v {
        z_ref
    } else {
        -half_span + best_i as f64 * step
    };
    let (p, b, v) = profit_at_surplus(params, a, z_best);
    // The Mills relation is exact for the untruncated normal; integrating
    // demand from zero moves the optimum slightly off the surplus curve
    // once the mean sits within a couple of sigmas of zero. A local
    // coordinate polish recovers the argmax of the implemented functional.
    let (p, b, v) = polish_response(params, a, p.value(), b.value(), v);
    if v <= 0.0 {
        // Margin too thin against the demand noise: every stocking level
        // loses money in expectation, so the retailer orders nothing.
        return BestResponse {
            p_star: a,
            b_star: Quantity::new(0.0).unwrap(),
            expected_profit: 0.0,
        };
    }
    BestResponse {
        p_star: Price::new(p).unwrap(),
        b_star: Quantity::new(b).unwrap(),
        expected_profit: v,
    }
}

fn polish_response(
    params: &DemandParams,
    a: Price,
    mut p: f64,
    mut b: f64,
    mut v: f64,
) -> (f64, f64, f64) {
    let span_p = 0.25 * (params.price_ratio() - a.value()).max(0.0);
    let span_b = params.sigma;
    for _ in 0..3 {
        let before = v;
        let (bp, vp) = golden_max(
            &|x| {
                expected_profit(
                    params,
                    a,
                    Price::new(x.max(0.0)).unwrap(),
                    Quantity::new(b).unwrap(),
                )
            },
            (p - span_p).max(a.value()),
            p + span_p,
            1e-9,
        );
        if vp > v {
            p = bp;
            v = vp;
        }
        let (bb, vb) = golden_max(
            &|x| {
                expected_profit(
                    params,
                    a,
                    Price::new(p).unwrap(),
                    Quantity::new(x.max(0.0)).unwrap(),
                )
            },
            (b - span_b).max(0.0),
            b + span_b,
            1e-9,
        );
        if vb > v {
            b = bb;
            v = vb;
        }
        if v - before < 1e-12 {
            break;
        }
    }
    (p, b, v)
}

/// The riskless-price strategy: price at `riskless_price(a)`, order the
/// critical fractile at that price. This is the retailer the learning
/// algorithm deploys, evaluated under perfect information.
pub fn riskless_response(params: &DemandParams, a: Price) -> (Price, Quantity) {
    if a.value() >= params.price_ratio() || a.value() <= 0.0 {
        return (a, Quantity::new(0.0).unwrap());
    }
    let p0 = riskless_price(params, a).unwrap();
    let b = order_quantity(params, p0, a).unwrap();
    (p0, b)
}

fn scan_grid(a_lo: f64, hi: f64, grid_n: usize) -> Vec<f64> {
    (0..=grid_n)
        .map(|i| a_lo + (hi - a_lo) * i as f64 / grid_n as f64)
        .filter(|a| *a > 0.0)
        .collect()
}

/// Grid-plus-golden search for the supplier's optimum, with the
/// perfect-information equilibrium quantities filled in. Ties break toward
/// the smaller wholesale price.
pub fn leader_optimum(
    params: &DemandParams,
    a_lo: Price,
    a_hi: Price,
    grid_n: usize,
) -> Result<EquilibriumOracle> {
    if grid_n < 64 {
        return Err(Error::InvalidParams(format!(
            "leader grid needs at least 64 points, got {grid_n}"
        )));
    }
    let h = params.price_ratio();
    let hi = a_hi.value().min(h);
    if a_lo.value() >= hi {
        return Err(Error::InfeasibleMarket {
            a: a_lo.value(),
            h,
        });
    }
    let grid = scan_grid(a_lo.value(), hi, grid_n);
    let responses: Vec<BestResponse> = grid
        .iter()
        .map(|&a| best_response(params, Price::new(a).unwrap()))
        .collect();

    let leader_at = |a: f64| -> f64 {
        a * best_response(params, Price::new(a).unwrap()).b_star.value()
    };
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, (a, resp)) in grid.iter().zip(&responses).enumerate() {
        let v = a * resp.b_star.value();
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let blo = grid[best_i.saturating_sub(1)];
    let bhi = grid[(best_i + 1).min(grid.len() - 1)];
    let (a_ref, v_ref) = golden_max(&leader_at, blo, bhi, GOLDEN_REL_TOL * (hi - a_lo.value()));
    let a_star = if v_ref > best_v { a_ref } else { grid[best_i] };
    let response = best_response(params, Price::new(a_star).unwrap());
    let leader_value = a_star * response.b_star.value();

    // Hindsight optimum against the riskless-price retailer.
    let bench_at = |a: f64| -> f64 {
        a * riskless_response(params, Price::new(a).unwrap()).1.value()
    };
    let mut bench_i = 0;
    let mut bench_v = f64::NEG_INFINITY;
    for (i, &a) in grid.iter().enumerate() {
        let v = bench_at(a);
        if v > bench_v {
            bench_v = v;
            bench_i = i;
        }
    }
    let blo = grid[bench_i.saturating_sub(1)];
    let bhi = grid[(bench_i + 1).min(grid.len() - 1)];
    let (ba_ref, bv_ref) = golden_max(&bench_at, blo, bhi, GOLDEN_REL_TOL * (hi - a_lo.value()));
    let (benchmark_a, benchmark_value) = if bv_ref > bench_v {
        (ba_ref, bv_ref)
    } else {
        (grid[bench_i], bench_v)
    };

    let epsilon_b = epsilon_b_gap_with(params, &grid, Some(&responses));

    Ok(EquilibriumOracle {
        a_star: Price::new(a_star)?,
        response,
        leader_value,
        follower_value: response.expected_profit,
        epsilon_b,
        benchmark_a: Price::new(benchmark_a)?,
        benchmark_value,
    })
}

/// Worst-case expected-profit loss of the riskless-price strategy against
/// the exact best response, over the given wholesale grid. Clamped at zero.
pub fn epsilon_b_gap(params: &DemandParams, a_grid: &[f64]) -> f64 {
    epsilon_b_gap_with(params, a_grid, None)
}

fn epsilon_b_gap_with(
    params: &DemandParams,
    a_grid: &[f64],
    responses: Option<&[BestResponse]>,
) -> f64 {
    let mut sup = 0.0_f64;
    for (i, &a) in a_grid.iter().enumerate() {
        if a <= 0.0 {
            continue;
        }
        let price = Price::new(a).unwrap();
        let exact = match responses {
            Some(rs) => rs[i].expected_profit,
            None => best_response(params, price).expected_profit,
        };
        let (pt, bt) = riskless_response(params, price);
        let approx = expected_profit(params, price, pt, bt);
        sup = sup.max(exact - approx);
    }
    sup.max(0.0)
}

/// True iff the best-response order is nonincreasing along an ascending
/// wholesale grid, wherever it is positive.
pub fn fractile_monotonicity_check(params: &DemandParams, a_grid: &[f64]) -> bool {
    let mut prev: Option<f64> = None;
    for &a in a_grid {
        if a <= 0.0 {
            continue;
        }
        let b = best_response(params, Price::new(a).unwrap()).b_star.value();
        if let Some(pb) = prev {
            if pb > 0.0 && b > pb + 1e-9 {
                return false;
            }
        }
        prev = Some(b);
    }
    true
}
