//! Engagement geometry and exact unicycle propagation.
//!
//! Angles are radians wrapped to `(-pi, pi]`. The lead angle is measured from
//! the heading to the line of sight, counter-clockwise positive, so a positive
//! lead angle needs a positive (counter-clockwise) lateral acceleration to
//! close on the target along the tangent circle.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PursuerId;

/// Guard on |theta| (and |sin theta|) below which the lead angle is treated as zero.
pub const THETA_EPS: f64 = 1e-8;

/// Accelerations below this magnitude propagate as straight lines.
pub const ACCEL_EPS: f64 = 1e-12;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = (angle + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub x: f64,
    pub y: f64,
}

impl TargetState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A constant-speed unicycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PursuerState {
    pub id: PursuerId,
    pub x: f64,
    pub y: f64,
    pub gamma: f64,
    pub speed: f64,
    pub intercepted_at: Option<f64>,
}

impl PursuerState {
    pub fn new(id: PursuerId, x: f64, y: f64, gamma: f64, speed: f64) -> Result<Self> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pursuer {id}: speed must be positive and finite, got {speed}"
            )));
        }
        if !(x.is_finite() && y.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pursuer {id}: pose must be finite"
            )));
        }
        Ok(Self {
            id,
            x,
            y,
            gamma: wrap_angle(gamma),
            speed,
            intercepted_at: None,
        })
    }

    /// Builds a pursuer from its lead angle rather than its heading.
    pub fn with_lead_angle(
        id: PursuerId,
        x: f64,
        y: f64,
        lead: f64,
        speed: f64,
        target: &TargetState,
    ) -> Result<Self> {
        if x == target.x && y == target.y {
            return Err(Error::AtTarget(id));
        }
        Self::new(id, x, y, heading_for_lead_angle(x, y, lead, target), speed)
    }

    pub fn is_active(&self) -> bool {
        self.intercepted_at.is_none()
    }

    pub fn range_to(&self, target: &TargetState) -> f64 {
        (target.x - self.x).hypot(target.y - self.y)
    }

    pub fn geometry(&self, target: &TargetState) -> Result<EngagementGeometry> {
        EngagementGeometry::of(self, target)
    }

    /// Marks the pursuer intercepted. The first recorded time wins.
    pub fn mark_intercepted(&mut self, time: f64) {
        if self.intercepted_at.is_none() {
            self.intercepted_at = Some(time);
        }
    }
}

/// Derived per-pursuer quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementGeometry {
    pub range: f64,
    pub lead_angle: f64,
    /// Estimated time of interception; `f64::INFINITY` when the target is astern.
    pub t_tilde: f64,
    /// Lateral acceleration that holds the tangent circle through the target.
    pub a_circ: f64,
}

impl EngagementGeometry {
    pub fn of(state: &PursuerState, target: &TargetState) -> Result<Self> {
        let range = state.range_to(target);
        let lead = lead_angle(state, target)?;
        Ok(Self {
            range,
            lead_angle: lead,
            t_tilde: estimated_time_of_interception(range, lead, state.speed),
            a_circ: 2.0 * state.speed * state.speed * lead.sin() / range,
        })
    }

    /// True when the lead angle sits on 0 or +-pi within the guard.
    pub fn is_degenerate(&self) -> bool {
        self.lead_angle.abs() < THETA_EPS || self.lead_angle.abs() > PI - THETA_EPS
    }
}

pub fn line_of_sight(x: f64, y: f64, target: &TargetState) -> f64 {
    (target.y - y).atan2(target.x - x)
}

pub fn heading_for_lead_angle(x: f64, y: f64, lead: f64, target: &TargetState) -> f64 {
    wrap_angle(line_of_sight(x, y, target) - lead)
}

/// Angle from the heading to the line of sight.
pub fn lead_angle(state: &PursuerState, target: &TargetState) -> Result<f64> {
    if state.range_to(target) == 0.0 {
        return Err(Error::AtTarget(state.id));
    }
    Ok(wrap_angle(
        line_of_sight(state.x, state.y, target) - state.gamma,
    ))
}

/// Time to reach the target along the tangent circle, `R theta / (V sin theta)`.
pub fn estimated_time_of_interception(range: f64, lead: f64, speed: f64) -> f64 {
    if range == 0.0 {
        return 0.0;
    }
    let a = lead.abs();
    if a >= PI - THETA_EPS {
        f64::INFINITY
    } else if a < THETA_EPS {
        range / speed
    } else {
        range * a / (speed * a.sin())
    }
}

pub fn circular_lateral_acceleration(range: f64, lead: f64, speed: f64) -> Result<f64> {
    let s = lead.sin();
    if s.abs() < THETA_EPS || lead.abs() > PI - THETA_EPS {
        return Err(Error::DegenerateHeading(s.abs()));
    }
    if range <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "circular acceleration needs a positive range, got {range}"
        )));
    }
    Ok(2.0 * speed * speed * s / range)
}

/// Rate of change of the estimated time of interception along a straight line,
/// `1 - 2 theta cot theta`.
pub fn straight_line_ttilde_rate(lead: f64) -> f64 {
    if lead.abs() < 1e-4 {
        // series: 1 - 2(1 - theta^2/3 - theta^4/45)
        let t2 = lead * lead;
        return -1.0 + 2.0 * t2 / 3.0 + 2.0 * t2 * t2 / 45.0;
    }
    1.0 - 2.0 * lead / lead.tan()
}

/// Closed-form update under constant lateral acceleration for `dt` seconds.
pub fn propagate(state: &PursuerState, accel: f64, dt: f64) -> PursuerState {
    let mut next = *state;
    let v = state.speed;
    if accel.abs() < ACCEL_EPS {
        next.x += v * state.gamma.cos() * dt;
        next.y += v * state.gamma.sin() * dt;
    } else {
        let omega = accel / v;
        let g1 = state.gamma + omega * dt;
        let r = v / omega;
        next.x += r * (g1.sin() - state.gamma.sin());
        next.y -= r * (g1.cos() - state.gamma.cos());
        next.gamma = wrap_angle(g1);
    }
    next
}

/// Lead angle in `[0, pi)` that makes the tangent-circle time equal `time`.
///
/// Returns `None` when `time < range / speed` (no circle is that short).
pub fn lead_angle_for_time(range: f64, speed: f64, time: f64) -> Option<f64> {
    let ratio = speed * time / range;
    if !(ratio >= 1.0) || !ratio.is_finite() {
        return None;
    }
    if ratio == 1.0 {
        return Some(0.0);
    }
    // theta / sin(theta) is increasing on (0, pi)
    let (mut lo, mut hi) = (0.0_f64, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid / mid.sin() < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORIGIN: TargetState = TargetState { x: 0.0, y: 0.0 };

    fn pid(i: u32) -> PursuerId {
        PursuerId(i)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!(close(wrap_angle(3.0 * PI), PI, 1e-12));
        assert!(close(wrap_angle(-PI / 2.0 + TAU), -PI / 2.0, 1e-12));
    }

    #[test]
    fn lead_angle_heading_at_target_is_zero() {
        let s = PursuerState::new(pid(1), 1.0, 0.0, PI, 1.0).unwrap();
        assert_eq!(lead_angle(&s, &ORIGIN).unwrap(), 0.0);
    }

    #[test]
    fn lead_angle_quarter_turn() {
        // LOS points along pi, heading pi/2: the LOS is a quarter turn
        // counter-clockwise from the heading.
        let s = PursuerState::new(pid(1), 1.0, 0.0, PI / 2.0, 1.0).unwrap();
        assert!(close(lead_angle(&s, &ORIGIN).unwrap(), PI / 2.0, 1e-15));
    }

    #[test]
    fn lead_angle_round_trip() {
        let want = 60f64.to_radians();
        let s = PursuerState::with_lead_angle(pid(1), 81.0, -101.0, want, 92.0, &ORIGIN).unwrap();
        assert!(close(lead_angle(&s, &ORIGIN).unwrap(), want, 1e-12));
    }

    #[test]
    fn lead_angle_at_target_errors() {
        let s = PursuerState::new(pid(3), 0.0, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(lead_angle(&s, &ORIGIN), Err(Error::AtTarget(_))));
    }

    #[test]
    fn ttilde_semicircle() {
        assert!(close(
            estimated_time_of_interception(2.0, PI / 2.0, 1.0),
            PI,
            1e-15
        ));
    }

    #[test]
    fn ttilde_sinc_limit() {
        assert_eq!(estimated_time_of_interception(100.0, 1e-12, 50.0), 2.0);
        let r = 100.0;
        let v = 50.0;
        let at_eps = estimated_time_of_interception(r, THETA_EPS * 1.0001, v);
        assert!((at_eps - r / v).abs() <= 1e-6 * r / v);
    }

    #[test]
    fn ttilde_sentinels() {
        assert_eq!(estimated_time_of_interception(0.0, 1.0, 3.0), 0.0);
        assert!(estimated_time_of_interception(5.0, PI, 3.0).is_infinite());
        assert!(estimated_time_of_interception(5.0, -PI + 1e-9, 3.0).is_infinite());
    }

    #[test]
    fn circular_acceleration_examples() {
        assert!(close(
            circular_lateral_acceleration(2.0, PI / 2.0, 1.0).unwrap(),
            1.0,
            1e-15
        ));
        assert!(close(
            circular_lateral_acceleration(2.0, -PI / 2.0, 1.0).unwrap(),
            -1.0,
            1e-15
        ));
        let r = 81f64.hypot(101.0);
        let a = circular_lateral_acceleration(r, 60f64.to_radians(), 92.0).unwrap();
        assert!(close(a, 2.0 * 92.0 * 92.0 * 60f64.to_radians().sin() / r, 1e-12));
        assert!(close(a, 113.23, 5e-3));
    }

    #[test]
    fn circular_acceleration_rejects_degenerate() {
        assert!(matches!(
            circular_lateral_acceleration(2.0, 0.0, 1.0),
            Err(Error::DegenerateHeading(_))
        ));
        assert!(matches!(
            circular_lateral_acceleration(2.0, PI, 1.0),
            Err(Error::DegenerateHeading(_))
        ));
    }

    #[test]
    fn straight_rate_values() {
        assert!(close(straight_line_ttilde_rate(PI / 2.0), 1.0, 1e-15));
        assert!(close(straight_line_ttilde_rate(1e-9), -1.0, 1e-15));
        assert!(close(straight_line_ttilde_rate(0.0), -1.0, 0.0));
        assert!(close(straight_line_ttilde_rate(2.8), 16.751_139_571, 1e-9));
        // series and closed form agree at the hand-over point
        let a = 1e-4;
        assert!(close(
            straight_line_ttilde_rate(a * 0.999_999),
            1.0 - 2.0 * a / a.tan(),
            1e-10
        ));
    }

    #[test]
    fn propagate_straight() {
        let s = PursuerState::new(pid(1), 0.0, 0.0, 0.0, 1.0).unwrap();
        let n = propagate(&s, 0.0, 2.0);
        assert_eq!((n.x, n.y, n.gamma), (2.0, 0.0, 0.0));
    }

    #[test]
    fn propagate_half_circle() {
        let s = PursuerState::new(pid(1), 0.0, 0.0, 0.0, 1.0).unwrap();
        let n = propagate(&s, 1.0, PI);
        assert!(close(n.x, 0.0, 1e-12));
        assert!(close(n.y, 2.0, 1e-12));
        assert!(close(n.gamma, PI, 1e-12));
        assert_eq!(n.speed, 1.0);
    }

    #[test]
    fn lead_angle_for_time_inverts() {
        let r = 100f64.hypot(150.0);
        let theta = 55f64.to_radians();
        let t = estimated_time_of_interception(r, theta, 30.0);
        let back = lead_angle_for_time(r, 30.0, t).unwrap();
        assert!(close(back, theta, 1e-12));
        assert!(lead_angle_for_time(r, 30.0, r / 30.0 * 0.5).is_none());
    }

    #[test]
    fn rejects_non_positive_speed() {
        assert!(PursuerState::new(pid(1), 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(PursuerState::new(pid(1), 0.0, 0.0, 0.0, -3.0).is_err());
    }

    #[test]
    fn intercepted_at_is_sticky() {
        let mut s = PursuerState::new(pid(1), 1.0, 0.0, 0.0, 1.0).unwrap();
        s.mark_intercepted(2.0);
        s.mark_intercepted(3.0);
        assert_eq!(s.intercepted_at, Some(2.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn speed_preserved(
                x in -300.0..300.0f64, y in -300.0..300.0f64, g in -PI..PI,
                v in 1.0..120.0f64, a in -200.0..200.0f64, dt in 1e-4..0.5f64,
            ) {
                let s = PursuerState::new(PursuerId(1), x, y, g, v).unwrap();
                let n = propagate(&s, a, dt);
                prop_assert_eq!(n.speed, v);
                prop_assert!(n.gamma > -PI && n.gamma <= PI);
                // closed-form chord length never exceeds the path length
                let chord = (n.x - x).hypot(n.y - y);
                prop_assert!(chord <= v * dt * (1.0 + 1e-12) + 1e-12);
            }

            #[test]
            fn mirror_symmetry(r in 1.0..500.0f64, th in 1e-3..3.1f64, v in 1.0..100.0f64) {
                let tp = estimated_time_of_interception(r, th, v);
                let tm = estimated_time_of_interception(r, -th, v);
                prop_assert_eq!(tp, tm);
                let ap = circular_lateral_acceleration(r, th, v).unwrap();
                let am = circular_lateral_acceleration(r, -th, v).unwrap();
                prop_assert!((ap + am).abs() <= 1e-12 * ap.abs());
                prop_assert!(tp > 0.0);
            }

            #[test]
            fn committed_arc_keeps_its_acceleration(
                x in -300.0..300.0f64, y in -300.0..300.0f64, th in 0.05..3.0f64,
                sign in prop::bool::ANY, v in 10.0..100.0f64, frac in 0.01..0.9f64,
            ) {
                prop_assume!(x.hypot(y) > 10.0);
                let lead = if sign { th } else { -th };
                let s = PursuerState::with_lead_angle(PursuerId(1), x, y, lead, v, &TargetState::new(0.0, 0.0)).unwrap();
                let g0 = s.geometry(&TargetState::new(0.0, 0.0)).unwrap();
                let n = propagate(&s, g0.a_circ, frac * g0.t_tilde);
                let g1 = n.geometry(&TargetState::new(0.0, 0.0)).unwrap();
                prop_assert!((g1.a_circ - g0.a_circ).abs() <= 1e-9 * g0.a_circ.abs());
            }
        }
    }
}
