//! Directed communication graphs: reachability, condensation, local leaders
//! and the disconnection-duration bounds derived from them.
//!
//! An edge `(i, j)` means pursuer `i` senses pursuer `j`. Self-loops are
//! implicit and never stored.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PursuerId;

pub type TtildeMap = BTreeMap<PursuerId, f64>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    nodes: BTreeSet<PursuerId>,
    edges: BTreeSet<(PursuerId, PursuerId)>,
}

impl Digraph {
    /// Builds a graph, dropping self-loops and rejecting edges to unknown nodes.
    pub fn new(
        nodes: impl IntoIterator<Item = PursuerId>,
        edges: impl IntoIterator<Item = (PursuerId, PursuerId)>,
    ) -> Result<Self> {
        let nodes: BTreeSet<_> = nodes.into_iter().collect();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if !nodes.contains(&a) || !nodes.contains(&b) {
                return Err(Error::UnknownNode(a, b));
            }
            if a != b {
                set.insert((a, b));
            }
        }
        Ok(Self { nodes, edges: set })
    }

    pub fn complete(nodes: impl IntoIterator<Item = PursuerId>) -> Self {
        let nodes: BTreeSet<_> = nodes.into_iter().collect();
        let edges = nodes
            .iter()
            .flat_map(|&a| nodes.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .collect();
        Self { nodes, edges }
    }

    pub fn nodes(&self) -> &BTreeSet<PursuerId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(PursuerId, PursuerId)> {
        &self.edges
    }

    pub fn contains(&self, id: PursuerId) -> bool {
        self.nodes.contains(&id)
    }

    pub fn is_complete(&self) -> bool {
        let n = self.nodes.len();
        self.edges.len() == n * n.saturating_sub(1)
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<PursuerId>) -> Self {
        Self {
            nodes: self.nodes.intersection(keep).copied().collect(),
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .copied()
                .collect(),
        }
    }

    pub fn with_node(&self, id: PursuerId, edges: &[(PursuerId, PursuerId)]) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        nodes.insert(id);
        Digraph::new(nodes, self.edges.iter().copied().chain(edges.iter().copied()))
    }

    pub fn without_node(&self, id: PursuerId) -> Self {
        let mut keep = self.nodes.clone();
        keep.remove(&id);
        self.induced(&keep)
    }

    fn check(&self, id: PursuerId) -> Result<()> {
        if self.nodes.contains(&id) {
            Ok(())
        } else {
            Err(Error::NoSuchNode(id))
        }
    }

    pub fn out_neighbors(&self, id: PursuerId) -> Result<BTreeSet<PursuerId>> {
        self.check(id)?;
        Ok(self
            .edges
            .range((id, PursuerId(u32::MIN))..=(id, PursuerId(u32::MAX)))
            .map(|&(_, b)| b)
            .collect())
    }

    /// True when every node has a directed path to `id`.
    pub fn is_globally_reachable(&self, id: PursuerId) -> Result<bool> {
        self.check(id)?;
        let mut reverse: BTreeMap<PursuerId, Vec<PursuerId>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            reverse.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::from([id]);
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            for &u in reverse.get(&v).into_iter().flatten() {
                if seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        Ok(seen.len() == self.nodes.len())
    }

    pub fn strongly_connected_components(&self) -> CondensationGraph {
        let ids: Vec<PursuerId> = self.nodes.iter().copied().collect();
        let index: BTreeMap<PursuerId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for &(a, b) in &self.edges {
            adj[index[&a]].push(index[&b]);
        }

        let raw = tarjan(&adj);
        let mut components: Vec<BTreeSet<PursuerId>> = raw
            .into_iter()
            .map(|c| c.into_iter().map(|v| ids[v]).collect())
            .collect();
        components.sort_by_key(|c| *c.iter().next().expect("non-empty component"));

        let mut owner = BTreeMap::new();
        for (k, comp) in components.iter().enumerate() {
            for &id in comp {
                owner.insert(id, k);
            }
        }
        let dag_edges = self
            .edges
            .iter()
            .map(|(a, b)| (owner[a], owner[b]))
            .filter(|(ca, cb)| ca != cb)
            .collect();
        CondensationGraph {
            components,
            dag_edges,
        }
    }
}

struct Tarjan<'a> {
    adj: &'a [Vec<usize>],
    next: usize,
    index: Vec<Option<usize>>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    out: Vec<Vec<usize>>,
}

fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut t = Tarjan {
        adj,
        next: 0,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        out: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.out
}

impl Tarjan<'_> {
    fn visit(&mut self, v: usize) {
        self.index[v] = Some(self.next);
        self.low[v] = self.next;
        self.next += 1;
        self.stack.push(v);
        self.on_stack[v] = true;

        for &w in &self.adj[v] {
            match self.index[w] {
                None => {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                }
                Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                Some(_) => {}
            }
        }

        if Some(self.low[v]) == self.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = self.stack.pop().expect("tarjan stack underflow");
                self.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            self.out.push(comp);
        }
    }
}

/// Strongly connected components and the DAG between them.
///
/// Components are ordered by their smallest member id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensationGraph {
    pub components: Vec<BTreeSet<PursuerId>>,
    pub dag_edges: BTreeSet<(usize, usize)>,
}

impl CondensationGraph {
    /// Components with no outgoing DAG edge (isolated components included).
    pub fn sink_and_singleton_components(&self) -> BTreeSet<usize> {
        let sources: BTreeSet<usize> = self.dag_edges.iter().map(|&(a, _)| a).collect();
        (0..self.components.len())
            .filter(|k| !sources.contains(k))
            .collect()
    }

    pub fn component_of(&self, id: PursuerId) -> Option<usize> {
        self.components.iter().position(|c| c.contains(&id))
    }
}

fn lookup(t_tilde: &TtildeMap, id: PursuerId) -> Result<f64> {
    t_tilde.get(&id).copied().ok_or(Error::IncompleteState(id))
}

/// Largest value wins; ties go to the smallest id.
pub(crate) fn argmax_by_ttilde(
    ids: impl IntoIterator<Item = PursuerId>,
    t_tilde: &TtildeMap,
) -> Result<Option<(PursuerId, f64)>> {
    let mut best: Option<(PursuerId, f64)> = None;
    for id in ids {
        let v = lookup(t_tilde, id)?;
        match best {
            Some((bid, bv)) if v > bv || (v == bv && id < bid) => best = Some((id, v)),
            None => best = Some((id, v)),
            _ => {}
        }
    }
    Ok(best)
}

fn argmin_by_ttilde(
    ids: impl IntoIterator<Item = PursuerId>,
    t_tilde: &TtildeMap,
) -> Result<Option<(PursuerId, f64)>> {
    let mut best: Option<(PursuerId, f64)> = None;
    for id in ids {
        let v = lookup(t_tilde, id)?;
        match best {
            Some((bid, bv)) if v < bv || (v == bv && id < bid) => best = Some((id, v)),
            None => best = Some((id, v)),
            _ => {}
        }
    }
    Ok(best)
}

/// Local leaders: the max-`t_tilde` member of every sink or singleton component.
pub fn local_leader_set(g: &Digraph, t_tilde: &TtildeMap) -> Result<BTreeSet<PursuerId>> {
    for &id in g.nodes() {
        lookup(t_tilde, id)?;
    }
    let cond = g.strongly_connected_components();
    let mut leaders = BTreeSet::new();
    for k in cond.sink_and_singleton_components() {
        if let Some((id, _)) = argmax_by_ttilde(cond.components[k].iter().copied(), t_tilde)? {
            leaders.insert(id);
        }
    }
    Ok(leaders)
}

/// The local leader with the smallest `t_tilde`; it intercepts first, at that time.
pub fn predicted_first_interceptor(g: &Digraph, t_tilde: &TtildeMap) -> Result<(PursuerId, f64)> {
    let leaders = local_leader_set(g, t_tilde)?;
    argmin_by_ttilde(leaders, t_tilde)?.ok_or(Error::NoActivePursuers)
}

fn check_positive(t_tilde: &TtildeMap) -> Result<()> {
    if t_tilde.is_empty() {
        return Err(Error::NoActivePursuers);
    }
    match t_tilde.iter().find(|(_, &v)| !(v > 0.0)) {
        Some((&id, &v)) => Err(Error::AlreadyIntercepted(id, v)),
        None => Ok(()),
    }
}

/// Open upper bound on a disconnection duration using every pursuer.
pub fn delta_bound_min(t_tilde: &TtildeMap) -> Result<f64> {
    check_positive(t_tilde)?;
    Ok(t_tilde.values().copied().fold(f64::INFINITY, f64::min))
}

/// Open upper bound when sinks and singletons do not multiply during the window.
pub fn delta_bound_sink(g: &Digraph, t_tilde: &TtildeMap) -> Result<f64> {
    let restricted: TtildeMap = g
        .nodes()
        .iter()
        .map(|&id| lookup(t_tilde, id).map(|v| (id, v)))
        .collect::<Result<_>>()?;
    check_positive(&restricted)?;
    predicted_first_interceptor(g, &restricted).map(|(_, v)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(i: u32) -> PursuerId {
        PursuerId(i)
    }

    fn graph(n: u32, edges: &[(u32, u32)]) -> Digraph {
        Digraph::new((1..=n).map(p), edges.iter().map(|&(a, b)| (p(a), p(b)))).unwrap()
    }

    fn tt(values: &[(u32, f64)]) -> TtildeMap {
        values.iter().map(|&(i, v)| (p(i), v)).collect()
    }

    #[test]
    fn out_neighbors_basic() {
        assert!(graph(3, &[]).out_neighbors(p(1)).unwrap().is_empty());
        let g = graph(3, &[(1, 2), (1, 3), (2, 3)]);
        assert_eq!(g.out_neighbors(p(1)).unwrap(), BTreeSet::from([p(2), p(3)]));
        assert!(matches!(g.out_neighbors(p(9)), Err(Error::NoSuchNode(_))));
    }

    #[test]
    fn self_loops_dropped_and_unknown_rejected() {
        let g = graph(2, &[(1, 1), (1, 2)]);
        assert_eq!(g.edges().len(), 1);
        assert!(matches!(
            Digraph::new([p(1)], [(p(1), p(2))]),
            Err(Error::UnknownNode(..))
        ));
    }

    #[test]
    fn reachability_examples() {
        assert!(graph(1, &[]).is_globally_reachable(p(1)).unwrap());
        let chain = graph(3, &[(1, 2), (2, 3)]);
        assert!(chain.is_globally_reachable(p(3)).unwrap());
        assert!(!chain.is_globally_reachable(p(1)).unwrap());
    }

    #[test]
    fn scc_examples() {
        let dag = graph(4, &[(1, 2), (2, 3), (1, 4), (4, 3)]);
        assert_eq!(dag.strongly_connected_components().components.len(), 4);

        let g = graph(4, &[(1, 2), (2, 3), (3, 1), (4, 1)]);
        let c = g.strongly_connected_components();
        assert_eq!(c.components.len(), 2);
        assert_eq!(c.components[0], BTreeSet::from([p(1), p(2), p(3)]));
        assert_eq!(c.sink_and_singleton_components(), BTreeSet::from([0]));
    }

    #[test]
    fn sinks_examples() {
        let c = graph(3, &[(1, 2), (2, 3)]).strongly_connected_components();
        let sinks = c.sink_and_singleton_components();
        assert_eq!(sinks.len(), 1);
        assert_eq!(c.components[*sinks.iter().next().unwrap()], BTreeSet::from([p(3)]));

        let two = graph(4, &[(1, 2), (2, 1), (3, 4), (4, 3)]).strongly_connected_components();
        assert_eq!(two.sink_and_singleton_components().len(), 2);
    }

    #[test]
    fn local_leaders_and_first_interceptor() {
        let ring = graph(3, &[(1, 2), (2, 3), (3, 1)]);
        let t = tt(&[(1, 3.0), (2, 5.0), (3, 7.0)]);
        assert_eq!(local_leader_set(&ring, &t).unwrap(), BTreeSet::from([p(3)]));
        assert_eq!(predicted_first_interceptor(&ring, &t).unwrap(), (p(3), 7.0));

        let apart = graph(2, &[]);
        let t = tt(&[(1, 3.0), (2, 5.0)]);
        assert_eq!(local_leader_set(&apart, &t).unwrap(), BTreeSet::from([p(1), p(2)]));
        assert_eq!(predicted_first_interceptor(&apart, &t).unwrap(), (p(1), 3.0));

        assert!(matches!(
            local_leader_set(&apart, &tt(&[(1, 3.0)])),
            Err(Error::IncompleteState(_))
        ));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let g = graph(3, &[(1, 2), (2, 3), (3, 1)]);
        let t = tt(&[(1, 4.0), (2, 4.0), (3, 1.0)]);
        assert_eq!(local_leader_set(&g, &t).unwrap(), BTreeSet::from([p(1)]));
    }

    #[test]
    fn delta_bounds() {
        assert_eq!(delta_bound_min(&tt(&[(1, 3.0), (2, 5.0), (3, 7.0)])).unwrap(), 3.0);
        assert_eq!(delta_bound_min(&tt(&[(1, 4.2)])).unwrap(), 4.2);
        assert!(matches!(
            delta_bound_min(&tt(&[(1, 0.0)])),
            Err(Error::AlreadyIntercepted(..))
        ));

        let ring = graph(3, &[(1, 2), (2, 3), (3, 1)]);
        let t = tt(&[(1, 3.0), (2, 5.0), (3, 7.0)]);
        assert_eq!(delta_bound_sink(&ring, &t).unwrap(), 7.0);
        assert_eq!(
            delta_bound_sink(&graph(2, &[]), &tt(&[(1, 3.0), (2, 5.0)])).unwrap(),
            3.0
        );
    }

    #[test]
    fn complete_graph() {
        let g = Digraph::complete((1..=4).map(p));
        assert!(g.is_complete());
        assert_eq!(g.edges().len(), 12);
        assert!(!graph(3, &[(1, 2)]).is_complete());
    }
}
