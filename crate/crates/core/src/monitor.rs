//! Invariant monitors evaluated over a finished run.
//!
//! Each monitor reports the worst excess it saw over its limit and passes
//! when that excess stays within its tolerance. Monitors whose preconditions
//! do not hold report `NotApplicable` rather than a verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::guidance::Regime;
use crate::sim::{RunStatus, SimulationResult, TrajectoryRecord};
use crate::PursuerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    pub name: String,
    pub status: MonitorStatus,
    /// Largest excess over the limit; `None` when nothing was measured.
    pub worst: Option<f64>,
    pub tolerance: f64,
    /// When the worst excess occurred (or the found time, for phase monitors).
    pub time: Option<f64>,
    pub pursuer: Option<PursuerId>,
    pub detail: String,
}

impl MonitorVerdict {
    fn na(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: MonitorStatus::NotApplicable,
            worst: None,
            tolerance: 0.0,
            time: None,
            pursuer: None,
            detail: detail.into(),
        }
    }

    fn judged(name: &str, worst: Worst, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = match worst.value {
            Some(v) if v > tolerance => MonitorStatus::Fail,
            _ => MonitorStatus::Pass,
        };
        Self {
            name: name.into(),
            status,
            worst: worst.value,
            tolerance,
            time: worst.time,
            pursuer: worst.pursuer,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == MonitorStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == MonitorStatus::Fail
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Worst {
    value: Option<f64>,
    time: Option<f64>,
    pursuer: Option<PursuerId>,
}

impl Worst {
    fn see(&mut self, v: f64, t: f64, id: PursuerId) {
        if v.is_nan() {
            return;
        }
        if self.value.is_none_or(|w| v > w) {
            *self = Worst {
                value: Some(v),
                time: Some(t),
                pursuer: Some(id),
            };
        }
    }
}

pub const MONITOR_NAMES: [&str; 10] = [
    "omega_region",
    "leader_slope",
    "fastest_decrease",
    "terminal_circular_phase",
    "switch_count",
    "local_ordering",
    "finite_time_meet",
    "global_ordering",
    "simultaneity",
    "capture_ordering",
];

pub fn evaluate_all(r: &SimulationResult) -> Vec<MonitorVerdict> {
    vec![
        omega_region(r),
        leader_slope(r),
        fastest_decrease(r),
        terminal_circular_phase(r),
        switch_count(r),
        local_ordering(r),
        finite_time_meet(r),
        global_ordering(r),
        simultaneity(r),
        capture_ordering(r),
    ]
}

/// Active (non-frozen) samples of a record as `(id, t_tilde)`.
fn live(rec: &TrajectoryRecord) -> impl Iterator<Item = (PursuerId, f64)> + '_ {
    rec.samples
        .iter()
        .filter(|s| s.regime != Regime::Frozen)
        .map(|s| (s.id, s.t_tilde))
}

fn live_ttilde(rec: &TrajectoryRecord, id: PursuerId) -> Option<f64> {
    rec.sample(id)
        .filter(|s| s.regime != Regime::Frozen)
        .map(|s| s.t_tilde)
}

/// Every estimate plus elapsed time stays under the latest predicted arrival.
pub fn omega_region(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "omega_region";
    if r.records.is_empty() {
        return MonitorVerdict::na(NAME, "no records");
    }
    let mut w = Worst::default();
    for rec in &r.records {
        let Some((_, lead)) = r.designated_leader(rec.time) else {
            continue;
        };
        let bound = lead.arrival();
        for (id, tt) in live(rec) {
            w.see(tt + rec.time - bound, rec.time, id);
        }
    }
    MonitorVerdict::judged(NAME, w, r.tolerance, "max of t_tilde + t - leader arrival")
}

/// The leader's estimate falls at exactly unit rate.
pub fn leader_slope(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "leader_slope";
    let mut w = Worst::default();
    for rec in &r.records {
        let Some((l, join)) = r.designated_leader(rec.time) else {
            continue;
        };
        if let Some(tt) = live_ttilde(rec, l) {
            let ideal = join.t_tilde - (rec.time - join.time);
            w.see((tt - ideal).abs(), rec.time, l);
        }
    }
    if w.value.is_none() {
        return MonitorVerdict::na(NAME, "leader never observed");
    }
    MonitorVerdict::judged(NAME, w, r.tolerance, "max |t_tilde_l(t) - (t_tilde_l(0) - t)|")
}

/// No estimate falls faster than unit rate between consecutive steps.
pub fn fastest_decrease(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "fastest_decrease";
    let mut w = Worst::default();
    for pair in r.records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let h = b.time - a.time;
        for (id, t0) in live(a) {
            let Some(t1) = live_ttilde(b, id) else {
                continue;
            };
            if t0.is_finite() && t1.is_finite() {
                w.see(-1.0 - (t1 - t0) / h, a.time, id);
            }
        }
    }
    if w.value.is_none() {
        return MonitorVerdict::na(NAME, "fewer than two samples per pursuer");
    }
    MonitorVerdict::judged(NAME, w, r.slope_tol, "max of -1 - slope")
}

/// Some time before interception after which every pursuer holds its circle.
pub fn terminal_circular_phase(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "terminal_circular_phase";
    if r.status != RunStatus::Complete {
        return MonitorVerdict::na(NAME, "not every pursuer was captured");
    }
    let Some(t_f) = r.t_f() else {
        return MonitorVerdict::na(NAME, "no interception");
    };
    let all_arc = |rec: &TrajectoryRecord| {
        rec.samples
            .iter()
            .all(|s| matches!(s.regime, Regime::CircularArc | Regime::Frozen))
    };
    let start = r
        .records
        .iter()
        .rposition(|rec| !all_arc(rec))
        .map_or(0, |k| k + 1);
    let Some(first) = r.records.get(start) else {
        return MonitorVerdict {
            name: NAME.into(),
            status: MonitorStatus::Fail,
            worst: None,
            tolerance: 0.0,
            time: None,
            pursuer: None,
            detail: "a pursuer left its circle at the last step".into(),
        };
    };
    let t_alpha = first.time;
    let w = Worst {
        value: Some(t_alpha - t_f),
        time: Some(t_alpha),
        pursuer: None,
    };
    let mut v = MonitorVerdict::judged(NAME, w, 0.0, format!("t_alpha={t_alpha}"));
    if t_alpha >= t_f {
        v.status = MonitorStatus::Fail;
    }
    v
}

/// On a fixed complete graph each follower turns onto its circle exactly once.
pub fn switch_count(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "switch_count";
    if !r.static_topology || !r.lock_enabled {
        return MonitorVerdict::na(NAME, "needs a static graph and the consensus lock");
    }
    if r.graphs.is_empty() || !r.graphs.iter().all(|g| g.is_complete()) {
        return MonitorVerdict::na(NAME, "graph is not complete");
    }
    let Some((leader, lj)) = r.designated_leader(0.0) else {
        return MonitorVerdict::na(NAME, "no pursuers");
    };
    let mut counts: BTreeMap<PursuerId, (u32, u32)> =
        r.joins.keys().map(|&id| (id, (0, 0))).collect();
    for e in &r.switch_events {
        let c = counts.entry(e.pursuer).or_default();
        match (e.from, e.to) {
            (Regime::StraightLine, Regime::CircularArc) => c.0 += 1,
            (Regime::CircularArc, Regime::StraightLine) => c.1 += 1,
            _ => {}
        }
    }
    let mut wrong = Vec::new();
    for (&id, &(up, down)) in &counts {
        let tied = r.joins[&id].t_tilde == lj.t_tilde;
        let expect = if id == leader || tied { 0 } else { 1 };
        if up != expect || down != 0 {
            wrong.push(format!("{id}:{up}up/{down}down"));
        }
    }
    let w = Worst {
        value: Some(wrong.len() as f64),
        time: None,
        pursuer: None,
    };
    let detail = if wrong.is_empty() {
        format!("leader {leader} never switched; followers switched once")
    } else {
        wrong.join(",")
    };
    MonitorVerdict::judged(NAME, w, 0.0, detail)
}

/// `(time, own t_tilde, max over active out-neighbours)` for pursuer `m`.
fn neighbour_series(r: &SimulationResult, m: PursuerId) -> Vec<(f64, f64, Option<f64>)> {
    r.records
        .iter()
        .filter_map(|rec| {
            let own = live_ttilde(rec, m)?;
            let g = &r.graphs[rec.graph];
            let nbr = g
                .out_neighbors(m)
                .ok()?
                .into_iter()
                .filter_map(|j| live_ttilde(rec, j))
                .reduce(f64::max);
            Some((rec.time, own, nbr))
        })
        .collect()
}

/// A pursuer that starts at or below its largest out-neighbour stays there.
pub fn local_ordering(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "local_ordering";
    if !r.static_topology {
        return MonitorVerdict::na(NAME, "graph switches during the run");
    }
    let mut w = Worst::default();
    let mut covered = 0;
    for &m in r.joins.keys() {
        let s = neighbour_series(r, m);
        let Some(&(_, own0, Some(n0))) = s.first() else {
            continue;
        };
        if n0 < own0 {
            continue;
        }
        covered += 1;
        for &(t, own, nbr) in &s {
            if let Some(n) = nbr {
                w.see(own - n, t, m);
            }
        }
    }
    if covered == 0 {
        return MonitorVerdict::na(NAME, "no pursuer starts below a neighbour");
    }
    MonitorVerdict::judged(NAME, w, r.tolerance, format!("{covered} pursuers checked"))
}

/// A pursuer ahead of its straight-flying largest neighbour is met in finite
/// time and never pulls ahead again.
pub fn finite_time_meet(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "finite_time_meet";
    if !r.static_topology {
        return MonitorVerdict::na(NAME, "graph switches during the run");
    }
    let Some(first) = r.records.first() else {
        return MonitorVerdict::na(NAME, "no records");
    };
    let g0 = &r.graphs[first.graph];
    let mut w = Worst::default();
    let mut covered = 0;
    let mut unmet = Vec::new();
    for &m in r.joins.keys() {
        let Some(own0) = live_ttilde(first, m) else {
            continue;
        };
        let Ok(nbrs) = g0.out_neighbors(m) else {
            continue;
        };
        let q = nbrs
            .into_iter()
            .filter_map(|j| first.sample(j).map(|s| (j, s.t_tilde, s.regime)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((_, q0, q_regime)) = q else {
            continue;
        };
        if !(q0 < own0 && q_regime == Regime::StraightLine) {
            continue;
        }
        covered += 1;
        let s = neighbour_series(r, m);
        let met = s.windows(2).position(|p| match (p[0].2, p[1].2) {
            (Some(n0), Some(n1)) => {
                (p[0].1 - n0).abs() <= r.tolerance || (p[0].1 - n0).signum() != (p[1].1 - n1).signum()
            }
            _ => false,
        });
        match met {
            Some(k) => {
                for &(t, own, nbr) in &s[k + 1..] {
                    if let Some(n) = nbr {
                        w.see(own - n, t, m);
                    }
                }
            }
            None => unmet.push(m.to_string()),
        }
    }
    if covered == 0 {
        return MonitorVerdict::na(NAME, "no pursuer starts ahead of a straight-flying neighbour");
    }
    let mut v = MonitorVerdict::judged(NAME, w, r.tolerance, format!("{covered} pursuers checked"));
    if !unmet.is_empty() {
        v.status = MonitorStatus::Fail;
        v.detail = format!("never met: {}", unmet.join(","));
    }
    v
}

/// Nobody's estimate exceeds the leader's while the leader stays reachable.
pub fn global_ordering(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "global_ordering";
    if r.records.is_empty() {
        return MonitorVerdict::na(NAME, "no records");
    }
    if !r.records.iter().all(|rec| rec.leader_reachable) {
        return MonitorVerdict::na(NAME, "leader not globally reachable at some step");
    }
    let mut w = Worst::default();
    for rec in &r.records {
        let Some((l, _)) = r.designated_leader(rec.time) else {
            continue;
        };
        let Some(tl) = live_ttilde(rec, l) else {
            continue;
        };
        for (id, tt) in live(rec) {
            w.see(tt - tl, rec.time, id);
        }
    }
    MonitorVerdict::judged(NAME, w, r.tolerance, "max of t_tilde_j - t_tilde_l")
}

/// Spread of interception times.
pub fn simultaneity(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "simultaneity";
    if r.status != RunStatus::Complete {
        return MonitorVerdict::na(NAME, "not every pursuer was captured");
    }
    let Some(spread) = r.spread() else {
        return MonitorVerdict::na(NAME, "no interception");
    };
    let w = Worst {
        value: Some(spread),
        time: r.t_f(),
        pursuer: None,
    };
    MonitorVerdict::judged(NAME, w, r.tolerance, "max - min interception time")
}

/// No pursuer arrives before the leader.
pub fn capture_ordering(r: &SimulationResult) -> MonitorVerdict {
    const NAME: &str = "capture_ordering";
    let end = r.records.last().map_or(0.0, |rec| rec.time);
    let Some((l, _)) = r.designated_leader(end) else {
        return MonitorVerdict::na(NAME, "no leader");
    };
    let Some(&tl) = r.interception_times.get(&l) else {
        return MonitorVerdict::na(NAME, "leader not captured");
    };
    let mut w = Worst::default();
    for (&id, &t) in &r.interception_times {
        w.see(tl - t, t, id);
    }
    MonitorVerdict::judged(NAME, w, r.tolerance, format!("leader {l} arrives at {tl}"))
}
