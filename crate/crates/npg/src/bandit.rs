//! Shared demand-parameter estimation and the optimism machinery built on
//! the Euclidean confidence ball.
//!
//! Both agents estimate the demand line by ridge regression of realized
//! demand on features `(1, -p)` and act on a ball of radius
//! `kappa * sqrt(log t / t)` around the estimate. The full design matrix is
//! kept so callers can read the ellipsoidal (directional) uncertainty as a
//! diagnostic, but every acting quantity is derived from the ball.

use std::sync::LazyLock;

use crate::demand::{std_normal_quantile, Price, Quantity};
use crate::error::{Error, Result};
use crate::numeric::{golden_max, norm_quantile_approx};

/// Ridge-regression state for the demand line: `gram = lambda I + sum x x^T`
/// and `moment = sum x y` over features `x = (1, -p)`, target realized
/// demand.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    g00: f64,
    g01: f64,
    g11: f64,
    m0: f64,
    m1: f64,
    t: u64,
    lambda: f64,
    kappa: f64,
}

/// Euclidean confidence ball around the ridge estimate.
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceBall {
    /// Estimated `(theta0, theta1)`.
    pub center: (f64, f64),
    /// 2-norm radius.
    pub radius: f64,
}

impl EstimatorState {
    pub fn new(lambda: f64, kappa: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("lambda must be > 0, got {lambda}")));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParams(format!("kappa must be >= 0, got {kappa}")));
        }
        Ok(Self {
            g00: lambda,
            g01: 0.0,
            g11: lambda,
            m0: 0.0,
            m1: 0.0,
            t: 0,
            lambda,
            kappa,
        })
    }

    /// Rank-one update with one observed `(price, demand)` pair.
    pub fn update(&mut self, p: Price, d: Quantity) {
        let (p, d) = (p.value(), d.value());
        self.g00 += 1.0;
        self.g01 += -p;
        self.g11 += p * p;
        self.m0 += d;
        self.m1 += -p * d;
        self.t += 1;
    }

    /// Ridge solution of `gram * theta = moment`. The slope is reported in
    /// the `d = theta0 - theta1 * p` convention.
    pub fn theta_hat(&self) -> (f64, f64) {
        let det = self.g00 * self.g11 - self.g01 * self.g01;
        (
            (self.g11 * self.m0 - self.g01 * self.m1) / det,
            (-self.g01 * self.m0 + self.g00 * self.m1) / det,
        )
    }

    /// Ball radius `kappa * sqrt(log t / t)`, held at `kappa` for the first
    /// two samples where the bound is vacuous.
    pub fn confidence_radius(&self) -> f64 {
        if self.t < 3 {
            self.kappa
        } else {
            let t = self.t as f64;
            self.kappa * (t.ln() / t).sqrt()
        }
    }

    pub fn ball(&self) -> ConfidenceBall {
        ConfidenceBall {
            center: self.theta_hat(),
            radius: self.confidence_radius(),
        }
    }

    pub fn samples(&self) -> u64 {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Design matrix `lambda I + sum x x^T`, exposed for diagnostics.
    pub fn gram(&self) -> [[f64; 2]; 2] {
        [[self.g00, self.g01], [self.g01, self.g11]]
    }

    /// Standard error of the slope estimate under noise scale `sigma`:
    /// the slope axis of the ellipsoid the ball discards.
    pub fn slope_std_error(&self, sigma: f64) -> f64 {
        let det = self.g00 * self.g11 - self.g01 * self.g01;
        sigma * (self.g00 / det).sqrt()
    }
}

/// Cap applied to the optimistic price ratio when the ball admits a
/// nonpositive slope and the ratio is otherwise unbounded.
pub fn h_max_cap(center: (f64, f64), price_hi: f64) -> f64 {
    (4.0 * center.0.max(0.0) / center.1.max(0.1)).min(2.0 * price_hi)
}

/// Largest price ratio `theta0 / theta1` over the ball: the closed form
/// `(c0 c1 + sqrt(r^2 (c0^2 + c1^2) - r^4)) / (c1^2 - r^2)` when the ball
/// stays inside the positive-slope half plane, the cap otherwise.
pub fn optimistic_h(ball: &ConfidenceBall, h_max: f64) -> f64 {
    let (c0, c1) = ball.center;
    let r = ball.radius;
    if r < c1 {
        (c0 * c1 + (r * r * (c0 * c0 + c1 * c1) - r.powi(4)).sqrt()) / (c1 * c1 - r * r)
    } else {
        h_max
    }
}

const BOUNDARY_SAMPLES: usize = 256;
// Quarter arc with cos >= 0, sin <= 0. The optimism objective increases in
// theta0 and decreases in theta1, so every boundary sample outside this arc
// is dominated by its reflection into it.
const ARC_START: usize = 192;

static ANGLE_TABLE: LazyLock<[(f64, f64); BOUNDARY_SAMPLES]> = LazyLock::new(|| {
    let mut table = [(0.0, 0.0); BOUNDARY_SAMPLES];
    for (k, entry) in table.iter_mut().enumerate() {
        let alpha = 2.0 * std::f64::consts::PI * k as f64 / BOUNDARY_SAMPLES as f64;
        *entry = alpha.sin_cos();
    }
    table
});

// Optimistic-profit surrogate at a boundary point: the riskless price for
// the point's price ratio times the critical-fractile order there.
// Uses the unrefined quantile; selection is insensitive at that accuracy.
#[inline]
fn surrogate_objective(theta: (f64, f64), a: f64, sigma: f64, h_max: f64) -> f64 {
    let (t0, t1) = theta;
    let h = if t1 > 0.0 { (t0 / t1).min(h_max) } else { h_max };
    if h <= a {
        return f64::NEG_INFINITY;
    }
    let p0 = 0.5 * (h + a);
    let gamma = (1.0 - 2.0 * a / (h + a)).clamp(1e-15, 1.0 - 1e-15);
    let z = norm_quantile_approx(gamma);
    p0 * ((t0 - t1 * p0) + sigma * z)
}

/// Boundary point of the ball maximizing the optimistic profit surrogate
/// for wholesale price `a`: 256-sample angular sweep (reduced to the
/// dominant quarter arc) plus one golden-section pass on the best arc.
/// Returns the center when the surrogate is nonpositive everywhere.
pub fn optimistic_theta_for_action(
    ball: &ConfidenceBall,
    a: Price,
    sigma: f64,
    h_max: f64,
) -> (f64, f64) {
    let (c0, c1) = ball.center;
    let r = ball.radius;
    let a = a.value();
    if r <= 0.0 {
        return (c0, c1);
    }
    let table = &*ANGLE_TABLE;
    let mut best_k = ARC_START;
    let mut best_v = f64::NEG_INFINITY;
    let mut k = ARC_START;
    loop {
        let (sin, cos) = table[k % BOUNDARY_SAMPLES];
        let v = surrogate_objective((c0 + r * cos, c1 + r * sin), a, sigma, h_max);
        if v > best_v {
            best_v = v;
            best_k = k;
        }
        if k == BOUNDARY_SAMPLES {
            break;
        }
        k += 1;
    }
    if best_v <= 0.0 {
        return (c0, c1);
    }
    let step = 2.0 * std::f64::consts::PI / BOUNDARY_SAMPLES as f64;
    let alpha_best = best_k as f64 * step;
    let at_angle = |alpha: f64| {
        let (sin, cos) = alpha.sin_cos();
        surrogate_objective((c0 + r * cos, c1 + r * sin), a, sigma, h_max)
    };
    let (alpha_ref, v_ref) = golden_max(
        &at_angle,
        alpha_best - step,
        alpha_best + step,
        2.0 * step * 1e-7,
    );
    let alpha = if v_ref > best_v { alpha_ref } else { alpha_best };
    let (sin, cos) = alpha.sin_cos();
    (c0 + r * cos, c1 + r * sin)
}

/// Pessimistic and optimistic critical-fractile orders for wholesale `a`:
/// the center's riskless-price order and the order at the boundary
/// optimist. Returns `(0, 0)` when even the optimist finds no margin.
pub fn order_bounds(
    ball: &ConfidenceBall,
    a: Price,
    sigma: f64,
    h_max: f64,
) -> (Quantity, Quantity) {
    let zero = Quantity::new(0.0).unwrap();
    let b_lower = riskless_order_for(ball.center, a.value(), sigma, h_max).unwrap_or(0.0);
    let theta_bar = optimistic_theta_for_action(ball, a, sigma, h_max);
    let b_upper = riskless_order_for(theta_bar, a.value(), sigma, h_max).unwrap_or(0.0);
    (
        Quantity::new(b_lower).unwrap(),
        // The optimist dominates the center coordinatewise on the searched
        // arc, so the upper order can fall below the lower one only by the
        // center fallback; keep the contract explicit.
        Quantity::new(b_upper.max(b_lower)).unwrap_or(zero),
    )
}

// Critical-fractile order at the riskless price for a (possibly
// optimistic) parameter point; None when the point prices itself out.
fn riskless_order_for(theta: (f64, f64), a: f64, sigma: f64, h_max: f64) -> Option<f64> {
    let (t0, t1) = theta;
    let h = if t1 > 0.0 { (t0 / t1).min(h_max) } else { h_max };
    if h <= a || a <= 0.0 {
        return None;
    }
    let p0 = 0.5 * (h + a);
    let gamma = ((p0 - a) / p0).clamp(1e-15, 1.0 - 1e-15);
    let z = std_normal_quantile(gamma).ok()?;
    let expected = (t0 - t1 * p0).max(0.0);
    Some((expected + sigma * z).max(0.0))
}
