//! The distributed guidance decision: fly straight while some sensed pursuer
//! needs longer, otherwise hold the tangent circle through the target.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{propagate, EngagementGeometry, PursuerState, TargetState};
use crate::graph::{argmax_by_ttilde, Digraph, TtildeMap};
use crate::PursuerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    StraightLine,
    CircularArc,
    Perturbation,
    Frozen,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::StraightLine => "straight_line",
            Regime::CircularArc => "circular_arc",
            Regime::Perturbation => "perturbation",
            Regime::Frozen => "frozen",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "straight_line" => Some(Regime::StraightLine),
            "circular_arc" => Some(Regime::CircularArc),
            "perturbation" => Some(Regime::Perturbation),
            "frozen" => Some(Regime::Frozen),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceOptions {
    /// Keep a pursuer on its circle while it stays within `lock_eps` of the
    /// neighbourhood max. Suppresses discrete-time chatter at equality.
    pub lock_enabled: bool,
    pub lock_eps: f64,
    /// Escape acceleration for a degenerate heading. `None` uses 10% of `2V^2/R`.
    pub perturb_c: Option<f64>,
    /// Longest escape manoeuvre (seconds).
    pub perturb_ts: f64,
}

impl GuidanceOptions {
    pub fn for_step(dt: f64) -> Self {
        Self {
            lock_enabled: true,
            lock_eps: 2.0 * dt,
            perturb_c: None,
            perturb_ts: dt,
        }
    }

    fn escape_accel(&self, state: &PursuerState, range: f64) -> f64 {
        self.perturb_c
            .unwrap_or(0.1 * 2.0 * state.speed * state.speed / range)
    }
}

impl Default for GuidanceOptions {
    fn default() -> Self {
        Self::for_step(1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceDecision {
    pub pursuer_id: PursuerId,
    pub regime: Regime,
    pub accel: f64,
    /// Max estimated time over the pursuer itself and its active out-neighbours.
    pub neighbor_max_ttilde: f64,
}

/// The pursuer with the largest estimate; ties go to the smallest id.
pub fn current_leader(t_tilde: &TtildeMap) -> Result<PursuerId> {
    argmax_by_ttilde(t_tilde.keys().copied(), t_tilde)?
        .map(|(id, _)| id)
        .ok_or(Error::NoActivePursuers)
}

/// Evaluates the law for pursuer `i` against a snapshot of every pursuer.
///
/// Intercepted pursuers are `Frozen` and drop out of everyone's max.
/// `previous` is `i`'s regime on the last step, used by the consensus lock.
pub fn decide(
    i: PursuerId,
    states: &BTreeMap<PursuerId, PursuerState>,
    target: &TargetState,
    g: &Digraph,
    opts: &GuidanceOptions,
    previous: Option<Regime>,
) -> Result<GuidanceDecision> {
    let me = states.get(&i).ok_or(Error::NoSuchNode(i))?;
    if !me.is_active() {
        return Ok(GuidanceDecision {
            pursuer_id: i,
            regime: Regime::Frozen,
            accel: 0.0,
            neighbor_max_ttilde: 0.0,
        });
    }
    let geo = me.geometry(target)?;

    let mut m = geo.t_tilde;
    for j in g.out_neighbors(i)? {
        match states.get(&j) {
            Some(s) if s.is_active() => m = m.max(s.geometry(target)?.t_tilde),
            Some(_) => {}
            None => return Err(Error::IncompleteState(j)),
        }
    }

    let decision = |regime, accel| GuidanceDecision {
        pursuer_id: i,
        regime,
        accel,
        neighbor_max_ttilde: m,
    };

    if geo.is_degenerate() {
        return Ok(decision(
            Regime::Perturbation,
            opts.escape_accel(me, geo.range),
        ));
    }

    let locked = opts.lock_enabled
        && previous == Some(Regime::CircularArc)
        && geo.t_tilde >= m - opts.lock_eps;
    if geo.t_tilde >= m || locked {
        Ok(decision(Regime::CircularArc, geo.a_circ))
    } else {
        Ok(decision(Regime::StraightLine, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationStep {
    pub pursuer_id: PursuerId,
    pub accel: f64,
    pub duration: f64,
}

/// Short escape manoeuvres for pursuers heading straight at or away from the target.
///
/// The duration starts at `opts.perturb_ts` and is halved until no strict
/// ordering between predicted arrival times (elapsed plus estimate) is reversed.
pub fn perturbation_plan(
    states: &[PursuerState],
    target: &TargetState,
    opts: &GuidanceOptions,
) -> Result<Vec<PerturbationStep>> {
    const MAX_HALVINGS: u32 = 20;

    let geos: Vec<EngagementGeometry> = states
        .iter()
        .map(|s| s.geometry(target))
        .collect::<Result<_>>()?;
    let degenerate: Vec<usize> = (0..states.len())
        .filter(|&k| states[k].is_active() && geos[k].is_degenerate())
        .collect();
    if degenerate.is_empty() {
        return Ok(Vec::new());
    }

    let accels: Vec<f64> = degenerate
        .iter()
        .map(|&k| opts.escape_accel(&states[k], geos[k].range))
        .collect();
    let before: Vec<f64> = geos.iter().map(|g| g.t_tilde).collect();

    let mut ts = opts.perturb_ts;
    for _ in 0..=MAX_HALVINGS {
        let mut after = before.clone();
        for (&k, &a) in degenerate.iter().zip(&accels) {
            after[k] = ts + propagate(&states[k], a, ts).geometry(target)?.t_tilde;
        }
        if ordering_preserved(&before, &after) {
            return Ok(degenerate
                .iter()
                .zip(&accels)
                .map(|(&k, &a)| PerturbationStep {
                    pursuer_id: states[k].id,
                    accel: a,
                    duration: ts,
                })
                .collect());
        }
        ts *= 0.5;
    }
    let id = states[degenerate[0]].id;
    Err(Error::PerturbationFailed(id, MAX_HALVINGS))
}

fn ordering_preserved(before: &[f64], after: &[f64]) -> bool {
    for a in 0..before.len() {
        for b in 0..before.len() {
            if before[a] < before[b] && after[a] > after[b] {
                return false;
            }
        }
    }
    true
}
