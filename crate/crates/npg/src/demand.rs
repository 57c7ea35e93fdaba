//! Linear additive demand under Gaussian noise, the standard-normal
//! helpers it needs, and the retailer's two profit functionals.
//!
//! Expected demand is `max(0, theta0 - theta1 * p)`; realized demand adds
//! `Normal(0, sigma)` noise and is clamped at zero (negative sales are
//! physically meaningless). Expected profit integrates revenue against the
//! demand density from zero, so the clamp is consistent with the profit
//! functional.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::{adaptive_quad, norm_cdf, norm_pdf, norm_quantile_approx};

/// Demand-curve parameters plus the noise scale: the environment's ground
/// truth, and also the shape the learners estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandParams {
    /// Demand intercept (units of quantity), nonnegative.
    pub theta0: f64,
    /// Demand slope (quantity per currency), strictly positive.
    pub theta1: f64,
    /// Noise standard deviation (quantity), nonnegative.
    pub sigma: f64,
}

impl DemandParams {
    pub fn new(theta0: f64, theta1: f64, sigma: f64) -> Result<Self> {
        if !(theta0 >= 0.0 && theta0.is_finite()) {
            return Err(Error::InvalidParams(format!("theta0 must be >= 0, got {theta0}")));
        }
        if !(theta1 > 0.0 && theta1.is_finite()) {
            return Err(Error::InvalidParams(format!("theta1 must be > 0, got {theta1}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { theta0, theta1, sigma })
    }

    /// The demand line's zero-crossing price `theta0 / theta1`.
    #[inline]
    pub fn price_ratio(&self) -> f64 {
        self.theta0 / self.theta1
    }
}

/// Nonnegative price in currency per unit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Price(f64);

impl Price {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParams(format!("price must be >= 0, got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Nonnegative quantity in units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Quantity(f64);

impl Quantity {
    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParams(format!("quantity must be >= 0, got {value}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Expected demand `max(0, theta0 - theta1 * p)`.
#[inline]
pub fn expected_demand(params: &DemandParams, p: Price) -> Quantity {
    Quantity((params.theta0 - params.theta1 * p.value()).max(0.0))
}

/// Draws one realized demand `max(0, expected + Normal(0, sigma))` from the
/// caller's stream.
pub fn sample_demand<R: Rng + ?Sized>(params: &DemandParams, p: Price, rng: &mut R) -> Quantity {
    let eps: f64 = rng.sample(StandardNormal);
    let d = expected_demand(params, p).value() + params.sigma * eps;
    Quantity(d.max(0.0))
}

/// Standard normal CDF, absolute error below 1e-15.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    norm_cdf(z)
}

/// Standard normal quantile: rational approximation refined with one
/// Newton step on the CDF. Errors for `gamma` outside (0, 1).
pub fn std_normal_quantile(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::QuantileDomain(gamma));
    }
    let z = norm_quantile_approx(gamma);
    let pdf = norm_pdf(z);
    // Deep in the tails the density underflows; the raw approximation is
    // already the best available there.
    if pdf > 1e-300 {
        Ok(z - (norm_cdf(z) - gamma) / pdf)
    } else {
        Ok(z)
    }
}

/// Expected shortage of a `Normal(mu, sigma)` demand against stock `b`:
/// the normal-loss closed form `sigma * (pdf(z) - z * (1 - cdf(z)))` with
/// `z = (b - mu) / sigma`. At `sigma = 0` the shortage is `max(0, mu - b)`.
///
/// `b` is a stock level on the demand axis and may sit below zero when
/// callers work in standardized surplus units.
pub fn psi_loss(mu: f64, sigma: f64, b: f64) -> f64 {
    if sigma == 0.0 {
        return (mu - b).max(0.0);
    }
    let z = (b - mu) / sigma;
    (sigma * (norm_pdf(z) - z * (1.0 - norm_cdf(z)))).max(0.0)
}

// Demand mass below zero is under 3e-7 once the mean clears five sigmas,
// at which point the full-line normal-loss form is indistinguishable from
// the truncated integral at the 1e-8 tolerance.
const FAST_PATH_SIGMAS: f64 = 5.0;
const QUAD_TOL: f64 = 1e-10;

/// Retailer expected profit
/// `p * int_0^b x f(x) dx + p * b * (1 - F(b)) - a * b`
/// with `f = Normal(expected_demand(p), sigma)`, by adaptive quadrature.
/// A normal-loss fast path is taken only when the mean clears five sigmas.
pub fn expected_profit(params: &DemandParams, a: Price, p: Price, b: Quantity) -> f64 {
    let (a, p, b) = (a.value(), p.value(), b.value());
    let mu = (params.theta0 - params.theta1 * p).max(0.0);
    let sigma = params.sigma;
    if b == 0.0 {
        return 0.0;
    }
    if sigma == 0.0 {
        return p * mu.min(b) - a * b;
    }
    if mu >= FAST_PATH_SIGMAS * sigma {
        return p * (mu - psi_loss(mu, sigma, b)) - a * b;
    }
    // The density is negligible outside mu +- 9 sigma; clipping the range
    // keeps the subdivision shallow without moving the value at 1e-10.
    let lo = (mu - 9.0 * sigma).max(0.0);
    let hi = (mu + 9.0 * sigma).min(b);
    let inv_sigma = 1.0 / sigma;
    let sold = adaptive_quad(
        &|x| x * norm_pdf((x - mu) * inv_sigma) * inv_sigma,
        lo,
        hi,
        QUAD_TOL,
    );
    let tail = 1.0 - norm_cdf((b - mu) * inv_sigma);
    p * (sold + b * tail) - a * b
}

/// Riskless profit `(theta0 - theta1 * p) * (p - a)`: margin times the
/// unclamped demand line, ignoring inventory risk.
#[inline]
pub fn riskless_profit(params: &DemandParams, a: Price, p: Price) -> f64 {
    (params.theta0 - params.theta1 * p.value()) * (p.value() - a.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn fig4() -> DemandParams {
        DemandParams::new(18.0, 7.0, 3.2).unwrap()
    }

    fn pr(v: f64) -> Price {
        Price::new(v).unwrap()
    }

    fn qt(v: f64) -> Quantity {
        Quantity::new(v).unwrap()
    }

    #[test]
    fn expected_demand_line_and_clamp() {
        let params = fig4();
        assert_eq!(expected_demand(&params, pr(0.0)).value(), 18.0);
        assert!(expected_demand(&params, pr(18.0 / 7.0)).value().abs() < 1e-12);
        assert_eq!(expected_demand(&params, pr(10.0)).value(), 0.0);
    }

    #[test]
    fn sample_demand_noiseless_and_clamped() {
        let params = DemandParams::new(18.0, 7.0, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for p in [0.0, 1.0, 2.0, 10.0] {
            let d = sample_demand(&params, pr(p), &mut rng);
            assert_eq!(d.value(), expected_demand(&params, pr(p)).value());
        }
        let noisy = fig4();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            assert!(sample_demand(&noisy, pr(5.0), &mut rng).value() >= 0.0);
        }
    }

    #[test]
    fn sample_demand_monte_carlo_mean() {
        // Gamma(1) = 11 with sigma = 3.2; clamp mass is negligible at
        // Gamma/sigma ~ 3.4, so the sample mean must recover the line.
        let params = fig4();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 1_000_000;
        let mean: f64 = (0..n)
            .map(|_| sample_demand(&params, pr(1.0), &mut rng).value())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 11.0).abs() < 0.02, "mean = {mean}");
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        // Derived by quadrature of the density over [0, z].
        let z = 1.959_964;
        let quad = 0.5 + adaptive_quad(&norm_pdf, 0.0, z, 1e-13);
        assert!((std_normal_cdf(z) - quad).abs() < 1e-12);
        assert!((std_normal_cdf(z) - 0.975).abs() < 1e-8);
        assert!(std_normal_cdf(-40.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_monotone_in_range() {
        let mut prev = 0.0;
        let mut x = -8.0;
        while x <= 8.0 {
            let c = std_normal_cdf(x);
            assert!((0.0..=1.0).contains(&c));
            assert!(c >= prev);
            prev = c;
            x += 1.0 / 64.0;
        }
    }

    // Bisection on the CDF: the independent route to the quantile.
    fn quantile_by_bisection(gamma: f64) -> f64 {
        let (mut lo, mut hi) = (-42.0, 42.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid) < gamma {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_reference_points() {
        assert!(std_normal_quantile(0.5).unwrap().abs() < 1e-12);
        let z = std_normal_quantile(0.975).unwrap();
        assert!((z - quantile_by_bisection(0.975)).abs() < 1e-10);
        assert!((z - 1.959_964).abs() < 1e-6);
        let lo = std_normal_quantile(0.025).unwrap();
        assert!((lo + z).abs() < 1e-10, "antisymmetry");
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(-0.3).is_err());
    }

    #[test]
    fn quantile_cdf_round_trip() {
        let mut z = -6.0;
        while z <= 6.0 {
            let back = std_normal_quantile(std_normal_cdf(z)).unwrap();
            assert!((back - z).abs() < 1e-8, "z = {z}, back = {back}");
            z += 0.125;
        }
    }

    // Independent oracle: adaptive quadrature of the defining shortage
    // integral int_b^inf (x - b) f(x) dx.
    fn psi_by_quadrature(mu: f64, sigma: f64, b: f64) -> f64 {
        let hi = mu.max(b) + 14.0 * sigma;
        let inv_sigma = 1.0 / sigma;
        adaptive_quad(
            &|x| (x - b) * norm_pdf((x - mu) * inv_sigma) * inv_sigma,
            b,
            hi,
            1e-12,
        )
    }

    #[test]
    fn psi_reference_points() {
        // sigma * pdf(0) at b = mu; frozen from the quadrature oracle.
        let v = psi_loss(10.0, 3.2, 10.0);
        assert!((v - 1.276_615_297_284_585).abs() < 1e-12);
        assert!((v - psi_by_quadrature(10.0, 3.2, 10.0)).abs() < 1e-10);
        assert!(psi_loss(10.0, 3.2, 10.0 + 6.0 * 3.2) < 1e-8);
        let deep = psi_loss(10.0, 3.2, 10.0 - 6.0 * 3.2);
        assert!((deep - 19.2).abs() < 1e-8);
        assert_eq!(psi_loss(10.0, 0.0, 4.0), 6.0);
        assert_eq!(psi_loss(10.0, 0.0, 14.0), 0.0);
    }

    #[test]
    fn psi_strictly_decreasing_in_stock() {
        let mut prev = f64::INFINITY;
        let mut b = -10.0;
        while b <= 30.0 {
            let v = psi_loss(10.0, 3.2, b);
            assert!(v >= 0.0);
            assert!(v < prev);
            prev = v;
            b += 0.25;
        }
    }

    #[test]
    fn psi_invariance_across_theta_sets() {
        // Psi at fixed standardized surplus must not depend on which
        // demand line generated the mean.
        let sets = [(18.0, 7.0), (73.0, 7.0), (80.0, 11.0), (40.0, 5.0)];
        let sigma = 3.2;
        for z in [-5.0, -1.0, 0.0, 0.7, 4.0] {
            let vals: Vec<f64> = sets
                .iter()
                .map(|&(t0, t1)| {
                    let params = DemandParams::new(t0, t1, sigma).unwrap();
                    let p = pr(0.25 * t0 / t1);
                    let mu = expected_demand(&params, p).value();
                    assert!(mu > 0.0);
                    psi_loss(mu, sigma, mu + z)
                })
                .collect();
            let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread <= 1e-12, "z = {z}, spread = {spread}");
        }
    }

    // Fixed-order Gauss-Legendre nodes/weights on [-1, 1] by Newton
    // iteration on the Legendre polynomial: the independent profit oracle.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    }

    fn profit_by_gauss_legendre(params: &DemandParams, a: f64, p: f64, b: f64) -> f64 {
        let mu = (params.theta0 - params.theta1 * p).max(0.0);
        let sigma = params.sigma;
        let hi = b.min(mu + 8.0 * sigma);
        let rule = gauss_legendre(200);
        let (c, h) = (0.5 * hi, 0.5 * hi);
        let inv_sigma = 1.0 / sigma;
        let sold: f64 = rule
            .iter()
            .map(|&(x, w)| {
                let t = c + h * x;
                w * t * norm_pdf((t - mu) * inv_sigma) * inv_sigma
            })
            .sum::<f64>()
            * h;
        let tail = 1.0 - std_normal_cdf((b - mu) * inv_sigma);
        p * (sold + b * tail) - a * b
    }

    #[test]
    fn profit_zero_order_and_deterministic_limit() {
        let params = fig4();
        assert_eq!(expected_profit(&params, pr(1.0), pr(1.5), qt(0.0)), 0.0);
        let det = DemandParams::new(18.0, 7.0, 0.0).unwrap();
        let p = 1.5;
        let g = expected_demand(&det, pr(p)).value();
        let v = expected_profit(&det, pr(1.0), pr(p), qt(g));
        assert!((v - g * (p - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn profit_matches_gauss_legendre_oracle() {
        let params = fig4();
        let v = expected_profit(&params, pr(1.0), pr(1.7857), qt(5.0169));
        let oracle = profit_by_gauss_legendre(&params, 1.0, 1.7857, 5.0169);
        assert!((v - oracle).abs() < 1e-8, "impl = {v}, oracle = {oracle}");

        // Fast-path regime: mean clears five sigmas.
        let narrow = DemandParams::new(18.0, 7.0, 0.4).unwrap();
        let v = expected_profit(&narrow, pr(1.0), pr(1.7857), qt(5.4));
        let oracle = profit_by_gauss_legendre(&narrow, 1.0, 1.7857, 5.4);
        assert!((v - oracle).abs() < 1e-8);
    }

    #[test]
    fn riskless_reference_points() {
        let params = fig4();
        assert_eq!(riskless_profit(&params, pr(1.3), pr(1.3)), 0.0);
        let vertex = (18.0 / 7.0 + 1.0) / 2.0;
        let v = riskless_profit(&params, pr(1.0), pr(vertex));
        assert!((v - 4.321_428_571_428_571).abs() < 1e-12);
        // Vertex of the concave quadratic.
        for dp in [-0.3, -0.05, 0.05, 0.3] {
            assert!(riskless_profit(&params, pr(1.0), pr(vertex + dp)) < v);
        }
        // Not clamped: past the zero-crossing the polynomial goes negative.
        assert!(riskless_profit(&params, pr(1.0), pr(3.0)) < 0.0);
    }

    proptest! {
        #[test]
        fn demand_monotone_in_price(
            t0 in 1.0..100.0f64,
            t1 in 0.5..12.0f64,
            p1 in 0.0..20.0f64,
            dp in 0.0..20.0f64,
        ) {
            let params = DemandParams::new(t0, t1, 1.0).unwrap();
            let d1 = expected_demand(&params, pr(p1)).value();
            let d2 = expected_demand(&params, pr(p1 + dp)).value();
            prop_assert!(d1 >= d2);
        }

        #[test]
        fn psi_closed_form_matches_quadrature(
            mu in 0.0..100.0f64,
            sigma in 0.5..10.0f64,
            zs in -6.0..6.0f64,
        ) {
            let b = mu + zs * sigma;
            let closed = psi_loss(mu, sigma, b);
            let quad = psi_by_quadrature(mu, sigma, b);
            prop_assert!((closed - quad).abs() < 1e-8);
        }

        #[test]
        fn profit_below_riskless_when_clamp_inactive(
            a in 0.1..2.0f64,
            dp in 0.01..0.8f64,
            b in 0.0..20.0f64,
        ) {
            let params = DemandParams::new(18.0, 7.0, 0.5).unwrap();
            let p = a + dp;
            let mu = expected_demand(&params, pr(p)).value();
            prop_assume!(mu >= 5.0 * params.sigma);
            let ep = expected_profit(&params, pr(a), pr(p), qt(b));
            let rl = riskless_profit(&params, pr(a), pr(p));
            prop_assert!(ep <= rl + 1e-9);
        }
    }
}
