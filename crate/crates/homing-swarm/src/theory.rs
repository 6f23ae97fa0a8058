//! Closed-form approximations for the noisy homing collective: the random
//! distance law on the torus, walk extension, travel time, collision
//! frequency, two-body jam escape time, team goal attainment, jam entry and
//! exit times, and the critical noise level where they balance.
//!
//! All formulas assume periodic boundaries, small step length, instantaneous
//! turning, and (for the dilute-regime quantities) purely two-body
//! collisions.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use crate::erf::{erf, erf_inv, erfc};
use crate::error::{Error, Result};

/// Mean distance between two uniform random points on the unit torus,
/// `(ln(3 + 2 sqrt 2) + 2^{3/2}) / 12`. Kept in closed form; never the
/// rounded 0.3826 literal, so nothing compounds through the composed
/// formulas.
#[inline]
pub fn goal_distance_coeff() -> f64 {
    ((3.0 + 2.0 * SQRT_2).ln() + 8.0f64.sqrt()) / 12.0
}

/// The full symbol set consumed by the closed forms.
#[derive(Clone, Copy, Debug)]
pub struct TheoryParams {
    /// team size
    pub n: u32,
    /// rotational noise std dev (radians)
    pub sigma: f64,
    /// arena side length
    pub l: f64,
    /// sensing cone radius
    pub r: f64,
    /// sensing cone opening angle (radians)
    pub gamma: f64,
    /// mean step length
    pub b: f64,
    /// cruising speed
    pub v: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::invalid("sigma must be >= 0"));
        }
        for (name, value) in [("l", self.l), ("r", self.r), ("gamma", self.gamma), ("b", self.b), ("v", self.v)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }
}

/// Mean straight-line (minimal-image) distance between an agent and a fresh
/// uniform goal on the `l x l` torus.
pub fn expected_goal_distance(l: f64) -> f64 {
    goal_distance_coeff() * l
}

/// CDF of the distance between two uniform random points on the torus.
pub fn torus_distance_cdf(x: f64, l: f64) -> f64 {
    if l <= 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    let half = l / 2.0;
    let diag = SQRT_2 * l / 2.0;
    if x <= 0.0 {
        0.0
    } else if x <= half {
        PI * x * x / (l * l)
    } else if x <= diag {
        (PI * x * x - 4.0 * x * x * (l / (2.0 * x)).acos()
            + 2.0 * l * (x * x - l * l / 4.0).sqrt())
            / (l * l)
    } else {
        1.0
    }
}

/// PDF of the torus distance (derivative of [`torus_distance_cdf`]);
/// continuous at `l/2` and zero beyond the half-diagonal.
pub fn torus_distance_pdf(x: f64, l: f64) -> f64 {
    if l <= 0.0 || x < 0.0 {
        return 0.0;
    }
    let half = l / 2.0;
    let diag = SQRT_2 * l / 2.0;
    if x <= half {
        2.0 * PI * x / (l * l)
    } else if x <= diag {
        (2.0 * PI * x - 8.0 * x * (l / (2.0 * x)).acos()) / (l * l)
    } else {
        0.0
    }
}

/// Walk extension: expected ratio of noisy homing-walk length to the
/// straight-line distance, `exp(sigma^2 / 2)`.
pub fn walk_extension(sigma: f64) -> f64 {
    (sigma * sigma / 2.0).exp()
}

/// Expected unobstructed travel time to a fresh goal.
pub fn expected_travel_time(sigma: f64, l: f64, v: f64) -> Result<f64> {
    if v <= 0.0 || !v.is_finite() {
        return Err(Error::invalid(format!("speed must be > 0, got {v}")));
    }
    Ok(expected_goal_distance(l) * walk_extension(sigma) / v)
}

/// Expected number of collisions an agent suffers per goal in the dilute
/// regime: density of other agents, times steps per goal, times sensing-cone
/// area coverage per step.
pub fn expected_collisions_per_goal(p: &TheoryParams) -> f64 {
    if p.n <= 1 {
        return 0.0;
    }
    let density = (p.n as f64 - 1.0) / (p.l * p.l);
    let steps_per_goal = expected_goal_distance(p.l) * walk_extension(p.sigma) / p.b;
    let cone_area = (p.gamma / (2.0 * PI)) * PI * p.r * p.r;
    let elongation = 2.0 * SQRT_2 * p.b * p.r * (p.gamma / 2.0).sin();
    density * steps_per_goal * (cone_area + elongation)
}

/// Expected time a pair of head-on colliding agents stays mutually blocked:
/// one step time over the probability that at least one of the pair draws a
/// freeing angle. Diverges at zero noise (a head-on pair never escapes).
pub fn expected_jam_time(sigma: f64, gamma: f64, b: f64, v: f64) -> Result<f64> {
    if sigma <= 0.0 {
        return Err(Error::Divergent("two-body jam escape time"));
    }
    let x = gamma / (2.0 * SQRT_2 * sigma);
    // 1 - erf(x)^2 = erfc(x) (1 + erf(x)); the factored form survives far
    // into the low-noise tail instead of cancelling to zero
    Ok((b / v) / (erfc(x) * (1.0 + erf(x))))
}

/// Team goal attainment rate in the dilute regime:
/// `n / (E(travel time) + E(collisions) * E(jam time))`.
///
/// For `n = 1` the collision term vanishes and the rate is defined even at
/// zero noise; for `n >= 2` a zero-noise divergence propagates.
pub fn goal_attainment_rate(p: &TheoryParams) -> Result<f64> {
    let travel = expected_travel_time(p.sigma, p.l, p.v)?;
    let time_per_goal = if p.n <= 1 {
        travel
    } else {
        travel + expected_collisions_per_goal(p) * expected_jam_time(p.sigma, p.gamma, p.b, p.v)?
    };
    Ok(p.n as f64 / time_per_goal)
}

/// Expected time for an agent to run into the single large jam of the
/// jammed regime, starting from a random location.
pub fn jam_entry_time(p: &TheoryParams) -> f64 {
    let ext = walk_extension(p.sigma);
    4.0 * goal_distance_coeff() * p.l.powi(3) * ext / (p.v * p.n as f64 * PI * p.r * p.r)
}

/// Probability that a fresh step angle frees an agent stuck on the large
/// jam's perimeter: a turn away from the jam past `pi/4 + gamma/2`.
pub fn unblock_probability(sigma: f64, gamma: f64) -> f64 {
    let threshold = FRAC_PI_4 + gamma / 2.0;
    0.5 * erfc(threshold / (SQRT_2 * sigma))
}

/// Unblock probability including the large-turn-toward-jam term
/// `P(angle < -(3pi/4 + gamma/2))`, which keeps the corrected critical
/// noise finite at high density.
pub fn unblock_probability_corrected(sigma: f64, gamma: f64) -> f64 {
    let far_side = 3.0 * FRAC_PI_4 + gamma / 2.0;
    unblock_probability(sigma, gamma) + 0.5 * erfc(far_side / (SQRT_2 * sigma))
}

/// Expected time to escape the large jam: a quarter-perimeter walk scaled by
/// the walk extension and the reciprocal unblock probability.
pub fn jam_exit_time(p: &TheoryParams) -> Result<f64> {
    if p.sigma <= 0.0 {
        return Err(Error::Divergent("jam exit time"));
    }
    let ext = walk_extension(p.sigma);
    let threshold = FRAC_PI_4 + p.gamma / 2.0;
    let denom = erfc(threshold / (SQRT_2 * p.sigma));
    Ok(0.5 * PI * p.r * (p.n as f64).sqrt() * ext / (p.v * denom))
}

/// Critical noise level where jam entry and exit times balance:
///
/// `sigma*(n) = (pi/4 + gamma/2) / (sqrt 2 * erfinv(1 - pi^2 r^3 n^{3/2} / (8 K L^3)))`
///
/// Returns `None` when the erfinv argument is non-positive: the theory then
/// predicts no finite noise level dissolves the jam.
pub fn sigma_star(n: u32, p: &TheoryParams) -> Option<f64> {
    let arg = 1.0
        - 0.125 * PI * PI * p.r.powi(3) * (n as f64).powf(1.5)
            / (goal_distance_coeff() * p.l.powi(3));
    if arg <= 0.0 {
        return None;
    }
    Some((FRAC_PI_4 + p.gamma / 2.0) / (SQRT_2 * erf_inv(arg)))
}

/// Critical noise with the corrected unblock probability. No closed form:
/// solved as the root of `entry(sigma) = corrected exit(sigma)`, which
/// reduces (the walk extension cancels) to
/// `P_corrected(sigma) = pi^2 r^3 n^{3/2} / (16 K L^3)`,
/// found by bisection on the monotone left side to relative width 1e-9.
pub fn sigma_star_corrected(n: u32, p: &TheoryParams) -> Result<f64> {
    let target =
        PI * PI * p.r.powi(3) * (n as f64).powf(1.5) / (16.0 * goal_distance_coeff() * p.l.powi(3));
    let prob = |sigma: f64| unblock_probability_corrected(sigma, p.gamma);

    let mut lo = 1e-9;
    if prob(lo) >= target {
        return Ok(lo);
    }
    let mut hi = 1.0;
    let mut expand = 0;
    while prob(hi) < target {
        hi *= 2.0;
        expand += 1;
        if expand > 60 {
            return Err(Error::SolverFailure(format!(
                "no sign change: corrected unblock probability never reaches {target:.6e}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prob(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * mid {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
