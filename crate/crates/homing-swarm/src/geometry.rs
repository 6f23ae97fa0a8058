//! Primitive spatial operations: minimal-image torus metrics, sensing-cone
//! membership, noisy step sampling, and segment/disk intersection for the
//! partial final step of a walk.
//!
//! All angles are canonicalized into `(-pi, pi]` at construction and angle
//! differences are taken as minimal signed differences, so downstream code
//! never sees wrapped-angle artifacts.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Reduce an angle to the canonical interval `(-pi, pi]`.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Minimal signed difference `a - b`, in `(-pi, pi]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// Wrap one displacement component into `[-l/2, l/2)`.
#[inline]
pub(crate) fn min_image(d: f64, l: f64) -> f64 {
    (d + 0.5 * l).rem_euclid(l) - 0.5 * l
}

/// Wrap a coordinate into `[0, l)`.
#[inline]
pub(crate) fn wrap_coord(x: f64, l: f64) -> f64 {
    x.rem_euclid(l)
}

/// A position in the arena, in arena units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Canonicalize into `[0, l)^2` (periodic arenas).
    #[inline]
    pub fn wrapped(&self, l: f64) -> Point2 {
        Point2::new(wrap_coord(self.x, l), wrap_coord(self.y, l))
    }
}

/// A plain displacement vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dot(&self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Bearing of this vector, in `(-pi, pi]`. Zero vector maps to 0.
    #[inline]
    pub fn bearing(&self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            self.y.atan2(self.x)
        }
    }
}

/// Position plus heading. Heading is kept in `(-pi, pi]`.
#[derive(Clone, Copy, Debug)]
pub struct Pose {
    pub position: Point2,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Point2, heading: f64) -> Self {
        Pose {
            position,
            heading: wrap_angle(heading),
        }
    }
}

/// Forward sensing cone: a sector of `full_angle` radians (gamma) and the
/// given radius, centered on the owner's heading.
#[derive(Clone, Copy, Debug)]
pub struct ConeSpec {
    radius: f64,
    half_angle: f64,
    // cached for the hot membership test
    radius_sq: f64,
    cos_half: f64,
}

impl ConeSpec {
    /// `full_angle` is the total opening angle gamma, with `0 < gamma <= 2pi`.
    pub fn new(radius: f64, full_angle: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("cone radius must be > 0, got {radius}")));
        }
        if !(full_angle.is_finite() && full_angle > 0.0 && full_angle <= TAU) {
            return Err(Error::invalid(format!(
                "cone angle must lie in (0, 2pi], got {full_angle}"
            )));
        }
        let half_angle = full_angle / 2.0;
        Ok(ConeSpec {
            radius,
            half_angle,
            radius_sq: radius * radius,
            cos_half: half_angle.cos(),
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }
}

/// One random-walk step: travel direction, total duration, and time left.
#[derive(Clone, Copy, Debug)]
pub struct StepPlan {
    pub travel_angle: f64,
    pub duration: f64,
    pub remaining: f64,
}

impl StepPlan {
    /// A step that is already exhausted; forces a fresh draw on next update.
    pub fn exhausted() -> Self {
        StepPlan {
            travel_angle: 0.0,
            duration: 0.0,
            remaining: 0.0,
        }
    }
}

fn check_finite(points: &[Point2], l: f64) -> Result<()> {
    if !l.is_finite() || l <= 0.0 {
        return Err(Error::invalid(format!("arena side must be finite and > 0, got {l}")));
    }
    for p in points {
        if !p.is_finite() {
            return Err(Error::invalid(format!("non-finite point ({}, {})", p.x, p.y)));
        }
    }
    Ok(())
}

/// Displacement `b - a`. In periodic mode this is the minimal-image
/// displacement with each component in `[-l/2, l/2)`; otherwise the plain
/// difference.
pub fn torus_delta(a: Point2, b: Point2, l: f64, periodic: bool) -> Result<Vec2> {
    check_finite(&[a, b], l)?;
    Ok(delta_unchecked(a, b, l, periodic))
}

#[inline]
pub(crate) fn delta_unchecked(a: Point2, b: Point2, l: f64, periodic: bool) -> Vec2 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    if periodic {
        Vec2::new(min_image(dx, l), min_image(dy, l))
    } else {
        Vec2::new(dx, dy)
    }
}

/// Shortest distance between two points, accounting for wraparound in
/// periodic mode. Bounded by `sqrt(2) * l / 2` on the torus.
pub fn torus_distance(a: Point2, b: Point2, l: f64, periodic: bool) -> Result<f64> {
    Ok(torus_delta(a, b, l, periodic)?.norm())
}

/// True iff `target` lies within the observer's sensing cone: minimal-image
/// distance at most the cone radius and bearing within the half-angle of the
/// heading (both boundaries inclusive). A target coincident with the
/// observer counts as contained.
#[inline]
pub fn cone_contains(
    observer: &Pose,
    target: Point2,
    cone: &ConeSpec,
    l: f64,
    periodic: bool,
) -> bool {
    cone_contains_dir(
        observer.position,
        observer.heading.cos(),
        observer.heading.sin(),
        target,
        cone,
        l,
        periodic,
    )
}

/// Cone test with the heading direction passed as a precomputed unit vector;
/// the world stepper caches (cos, sin) per agent to keep this hot path free
/// of trigonometry.
#[inline]
pub(crate) fn cone_contains_dir(
    position: Point2,
    heading_cos: f64,
    heading_sin: f64,
    target: Point2,
    cone: &ConeSpec,
    l: f64,
    periodic: bool,
) -> bool {
    let d = delta_unchecked(position, target, l, periodic);
    let d2 = d.norm_sq();
    if d2 > cone.radius_sq {
        return false;
    }
    if d2 == 0.0 {
        return true;
    }
    // |angular offset| <= half_angle  <=>  cos(offset) >= cos(half_angle),
    // since both lie in [0, pi].
    let along = heading_cos * d.x + heading_sin * d.y;
    along >= d2.sqrt() * cone.cos_half
}

/// Draw one random-walk step: duration from `Unif(b/2v, 3b/2v)` and travel
/// angle from a wrapped Gaussian centered on `toward` with std dev `sigma`.
/// At `sigma = 0` the travel angle is exactly `toward` and no noise draw is
/// consumed from the stream.
pub fn sample_step<R: Rng + ?Sized>(
    rng: &mut R,
    toward: f64,
    sigma: f64,
    b: f64,
    v: f64,
) -> StepPlan {
    debug_assert!(sigma >= 0.0 && b > 0.0 && v > 0.0);
    let duration = rng.random_range(0.5 * b / v..1.5 * b / v);
    let travel_angle = if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        wrap_angle(toward + sigma * z)
    } else {
        wrap_angle(toward)
    };
    StepPlan {
        travel_angle,
        duration,
        remaining: duration,
    }
}

/// Smallest parameter `t` in `[0, 1]` at which the segment `p0 -> p1` enters
/// the closed disk of radius `rho` about `center`, or `None` if it misses.
/// A start point already inside yields `Some(0.0)`.
///
/// In periodic mode the test runs on the minimal-image frame anchored at
/// `p0`, which is exact as long as the segment plus disk span less than half
/// the arena (always true for per-tick motion).
pub fn segment_disk_hit_fraction(
    p0: Point2,
    p1: Point2,
    center: Point2,
    rho: f64,
    l: f64,
    periodic: bool,
) -> Option<f64> {
    debug_assert!(rho >= 0.0);
    let m = delta_unchecked(p0, p1, l, periodic);
    let c = delta_unchecked(p0, center, l, periodic);
    let c2 = c.norm_sq();
    let rho2 = rho * rho;
    if c2 <= rho2 {
        return Some(0.0);
    }
    let a = m.norm_sq();
    if a == 0.0 {
        return None;
    }
    let along = m.dot(c);
    let disc = along * along - a * (c2 - rho2);
    if disc < 0.0 {
        return None;
    }
    let t = (along - disc.sqrt()) / a;
    if (0.0..=1.0).contains(&t) {
        Some(t)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrap_angle_canonical_interval() {
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(-7.0 * PI), PI, epsilon = 1e-9);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn delta_prefers_wrapped_path() {
        let d = torus_delta(Point2::new(0.1, 0.1), Point2::new(0.9, 0.1), 1.0, true).unwrap();
        assert_relative_eq!(d.x, -0.2, epsilon = 1e-12);
        assert_relative_eq!(d.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn delta_identity_is_zero() {
        let p = Point2::new(0.42, 0.17);
        let d = torus_delta(p, p, 1.0, true).unwrap();
        assert_eq!((d.x, d.y), (0.0, 0.0));
    }

    #[test]
    fn delta_half_diagonal_is_max() {
        let d = torus_delta(Point2::new(0.0, 0.0), Point2::new(0.5, 0.5), 1.0, true).unwrap();
        assert_relative_eq!(d.norm(), (2.0f64).sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn delta_rejects_non_finite() {
        let bad = Point2::new(f64::NAN, 0.0);
        assert!(torus_delta(bad, Point2::new(0.0, 0.0), 1.0, true).is_err());
        assert!(torus_distance(Point2::new(0.0, 0.0), bad, 1.0, false).is_err());
    }

    #[test]
    fn distance_examples() {
        let d = torus_distance(Point2::new(0.1, 0.1), Point2::new(0.9, 0.1), 1.0, true).unwrap();
        assert_relative_eq!(d, 0.2, epsilon = 1e-12);
        let p = Point2::new(0.3, 0.8);
        assert_eq!(torus_distance(p, p, 1.0, true).unwrap(), 0.0);
    }

    #[test]
    fn non_periodic_is_plain_difference() {
        let d = torus_delta(Point2::new(0.1, 0.1), Point2::new(0.9, 0.1), 1.0, false).unwrap();
        assert_relative_eq!(d.x, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn mean_random_pair_distance_matches_torus_law() {
        // Independent oracle for the mean: (ln(3 + 2 sqrt 2) + 2^{3/2}) / 12.
        let expected = ((3.0 + 2.0 * 2.0f64.sqrt()).ln() + 8.0f64.sqrt()) / 12.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0xD15_7A);
        let n = 50_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let a = Point2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let b = Point2::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let d = torus_distance(a, b, 1.0, true).unwrap();
            sum += d;
            sum_sq += d * d;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let stderr = (var / n as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * stderr,
            "mean {mean} vs expected {expected} (3 SE = {})",
            3.0 * stderr
        );
        assert_relative_eq!(mean, expected, max_relative = 0.01);
    }

    #[test]
    fn cone_examples() {
        let cone = ConeSpec::new(2.0, 2.0 * PI / 3.0).unwrap();
        let obs = Pose::new(Point2::new(0.0, 0.0), 0.0);
        assert!(cone_contains(&obs, Point2::new(1.0, 0.0), &cone, 100.0, false));
        assert!(!cone_contains(&obs, Point2::new(3.0, 0.0), &cone, 100.0, false));
        // bearing 70 degrees > half angle 60 degrees
        let t = Point2::new((70f64).to_radians().cos(), (70f64).to_radians().sin());
        assert!(!cone_contains(&obs, t, &cone, 100.0, false));
        // exactly on the 60-degree boundary counts as inside
        let edge = Point2::new(0.5, 3.0f64.sqrt() / 2.0);
        assert!(cone_contains(&obs, edge, &cone, 100.0, false));
    }

    #[test]
    fn cone_wraps_across_boundary() {
        let cone = ConeSpec::new(2.0, 2.0 * PI / 3.0).unwrap();
        let obs = Pose::new(Point2::new(39.5, 0.0), 0.0);
        // a target just across the periodic seam sits 1.0 ahead
        assert!(cone_contains(&obs, Point2::new(0.5, 0.0), &cone, 40.0, true));
        assert!(!cone_contains(&obs, Point2::new(0.5, 0.0), &cone, 40.0, false));
    }

    #[test]
    fn cone_rejects_bad_spec() {
        assert!(ConeSpec::new(0.0, 1.0).is_err());
        assert!(ConeSpec::new(1.0, 0.0).is_err());
        assert!(ConeSpec::new(1.0, TAU + 0.1).is_err());
    }

    #[test]
    fn sample_step_zero_noise_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let step = sample_step(&mut rng, 1.234, 0.0, 0.5, 0.5);
            assert_eq!(step.travel_angle, 1.234);
            assert!(step.duration >= 0.5 && step.duration < 1.5);
            assert_eq!(step.remaining, step.duration);
        }
    }

    #[test]
    fn sample_step_cosine_mean_matches_wrapped_gaussian() {
        // E[cos(theta - theta*)] = exp(-sigma^2/2); cos is 2pi-periodic so
        // wrapping does not change it.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let step = sample_step(&mut rng, 0.7, 1.0, 0.5, 0.5);
            sum += (step.travel_angle - 0.7).cos();
        }
        let mean = sum / n as f64;
        assert_relative_eq!(mean, (-0.5f64).exp(), max_relative = 0.01);
    }

    #[test]
    fn sample_step_duration_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_step(&mut rng, 0.0, 0.5, 0.5, 0.5).duration;
        }
        assert_relative_eq!(sum / n as f64, 1.0, max_relative = 0.01);
    }

    #[test]
    fn segment_disk_examples() {
        let t = segment_disk_hit_fraction(
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.0),
            0.5,
            100.0,
            false,
        );
        assert_relative_eq!(t.unwrap(), 0.25, epsilon = 1e-12);

        assert_eq!(
            segment_disk_hit_fraction(
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(5.0, 5.0),
                0.1,
                100.0,
                false,
            ),
            None
        );

        let inside = segment_disk_hit_fraction(
            Point2::new(1.1, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.0),
            0.5,
            100.0,
            false,
        );
        assert_eq!(inside, Some(0.0));
    }

    #[test]
    fn segment_disk_minimal_image() {
        // goal just across the seam; the segment crosses it in the wrapped frame
        let t = segment_disk_hit_fraction(
            Point2::new(9.9, 0.0),
            Point2::new(9.9 + 0.4, 0.0), // caller integrates before wrapping
            Point2::new(0.2, 0.0),
            0.1,
            10.0,
            true,
        );
        assert_relative_eq!(t.unwrap(), 0.5, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn torus_distance_symmetric(
            ax in 0.0..1.0f64, ay in 0.0..1.0f64,
            bx in 0.0..1.0f64, by in 0.0..1.0f64,
        ) {
            let a = Point2::new(ax, ay);
            let b = Point2::new(bx, by);
            let d1 = torus_distance(a, b, 1.0, true).unwrap();
            let d2 = torus_distance(b, a, 1.0, true).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-12);
        }

        #[test]
        fn torus_distance_bounded_by_half_diagonal(
            ax in 0.0..1.0f64, ay in 0.0..1.0f64,
            bx in 0.0..1.0f64, by in 0.0..1.0f64,
        ) {
            let d = torus_distance(Point2::new(ax, ay), Point2::new(bx, by), 1.0, true).unwrap();
            prop_assert!(d <= (2.0f64).sqrt() / 2.0 + 1e-12);
        }

        #[test]
        fn cone_invariant_under_rigid_rotation(
            heading in -3.0..3.0f64,
            dist in 0.01..4.0f64,
            offset in -3.0..3.0f64,
            rot in -3.0..3.0f64,
        ) {
            // keep clear of the float knife edge at the cone boundary
            prop_assume!((offset.abs() - PI / 3.0).abs() > 1e-6);
            prop_assume!((dist - 2.0).abs() > 1e-9);
            let cone = ConeSpec::new(2.0, 2.0 * PI / 3.0).unwrap();
            let obs = Pose::new(Point2::new(0.0, 0.0), heading);
            let target = Point2::new(
                dist * (heading + offset).cos(),
                dist * (heading + offset).sin(),
            );
            let before = cone_contains(&obs, target, &cone, 1000.0, false);

            let obs2 = Pose::new(Point2::new(0.0, 0.0), heading + rot);
            let target2 = Point2::new(
                dist * (heading + rot + offset).cos(),
                dist * (heading + rot + offset).sin(),
            );
            let after = cone_contains(&obs2, target2, &cone, 1000.0, false);
            prop_assert_eq!(before, after);
        }
    }
}
