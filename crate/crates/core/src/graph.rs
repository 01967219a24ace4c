//! Screen trees and their directed navigation map.
//!
//! A [`NavGraph`] is a rooted tree numbered in breadth-first order. The
//! [`TransitionMap`] derived from it adds the system edges every screen
//! offers: `Back` to the parent and `Home` to the root (for screens at
//! depth two or deeper).

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("branching specification is empty")]
    EmptySpec,
    #[error("branching specification must end with 0, got {0}")]
    NonTerminatedSpec(usize),
    #[error("no path from {from} to {to}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("split assignment has {got} roles but the root has {expected} children")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid branching entry {0:?}")]
    BadEntry(String),
}

/// Screen identifier, rendered as `page_<index>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "page_{}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix("page_").unwrap_or(s);
        digits
            .parse::<u32>()
            .map(NodeId)
            .map_err(|_| GraphError::BadEntry(s.to_string()))
    }
}

/// Number of children for every node at each depth level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchingSpec(pub Vec<usize>);

impl BranchingSpec {
    /// The five-subtree tree used for the base environment.
    pub fn env_base() -> Self {
        BranchingSpec(vec![5, 3, 2, 2, 1, 1, 0])
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        match self.0.last() {
            None => Err(GraphError::EmptySpec),
            Some(&0) => Ok(()),
            Some(&n) => Err(GraphError::NonTerminatedSpec(n)),
        }
    }

    /// Total node count: the sum of the running products of the branching
    /// factors, one term per level.
    pub fn node_count(&self) -> usize {
        let mut total = 0;
        let mut level = 1usize;
        for &b in &self.0 {
            total += level;
            level *= b;
        }
        total
    }
}

impl FromStr for BranchingSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let entries = s
            .split(',')
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| GraphError::BadEntry(p.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let spec = BranchingSpec(entries);
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for BranchingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub depth: u32,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavGraph {
    pub nodes: Vec<Node>,
    pub root: NodeId,
}

impl NavGraph {
    /// Builds the tree level by level; node ids follow breadth-first
    /// construction order with the root at 0.
    pub fn build(spec: &BranchingSpec) -> Result<Self, GraphError> {
        spec.validate()?;
        let mut nodes = vec![Node {
            id: NodeId::ROOT,
            parent: None,
            depth: 0,
            children: Vec::new(),
        }];
        let mut queue = VecDeque::from([NodeId::ROOT]);
        while let Some(id) = queue.pop_front() {
            let depth = nodes[id.index()].depth;
            let fanout = spec.0.get(depth as usize).copied().unwrap_or(0);
            for _ in 0..fanout {
                let child = NodeId(nodes.len() as u32);
                nodes.push(Node {
                    id: child,
                    parent: Some(id),
                    depth: depth + 1,
                    children: Vec::new(),
                });
                nodes[id.index()].children.push(child);
                queue.push_back(child);
            }
        }
        Ok(NavGraph {
            nodes,
            root: NodeId::ROOT,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    /// Levels in the tree (root level counts as one).
    pub fn max_depth(&self) -> u32 {
        self.nodes
            .iter()
            .map(|n| n.depth)
            .max()
            .map_or(0, |d| d + 1)
    }

    /// Depth-1 ancestor of `id`, or `None` for the root.
    pub fn top_ancestor(&self, id: NodeId) -> Option<NodeId> {
        let mut cur = self.node(id)?;
        cur.parent?;
        while cur.depth > 1 {
            cur = &self.nodes[cur.parent?.index()];
        }
        Some(cur.id)
    }

    /// `root` followed by every descendant, in id order.
    pub fn subtree(&self, root: NodeId) -> Vec<NodeId> {
        let mut out = vec![root];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.nodes[out[i].index()].children);
            i += 1;
        }
        out.sort();
        out
    }

    pub fn transitions(&self) -> TransitionMap {
        TransitionMap::from_graph(self)
    }

    /// Assigns a role to each depth-1 subtree.
    pub fn partition_subtrees(&self, roles: &[Role]) -> Result<SplitAssignment, GraphError> {
        let tops = &self.nodes[self.root.index()].children;
        if tops.len() != roles.len() {
            return Err(GraphError::LengthMismatch {
                expected: tops.len(),
                got: roles.len(),
            });
        }
        let mut node_roles = vec![None; self.len()];
        for (&top, &role) in tops.iter().zip(roles) {
            for id in self.subtree(top) {
                node_roles[id.index()] = Some(role);
            }
        }
        Ok(SplitAssignment {
            root: self.root,
            subtrees: tops.iter().copied().zip(roles.iter().copied()).collect(),
            node_roles,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    Forward,
    Back,
    Home,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub kind: EdgeKind,
    pub target: NodeId,
}

/// Outgoing transitions per node: Forward edges in child order, then Back,
/// then Home.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMap {
    edges: Vec<Vec<Transition>>,
}

impl TransitionMap {
    pub fn from_graph(g: &NavGraph) -> Self {
        let edges = g
            .nodes
            .iter()
            .map(|n| {
                let mut out: Vec<Transition> = n
                    .children
                    .iter()
                    .map(|&c| Transition {
                        kind: EdgeKind::Forward,
                        target: c,
                    })
                    .collect();
                if let Some(p) = n.parent {
                    out.push(Transition {
                        kind: EdgeKind::Back,
                        target: p,
                    });
                }
                if n.depth >= 2 {
                    out.push(Transition {
                        kind: EdgeKind::Home,
                        target: g.root,
                    });
                }
                out
            })
            .collect();
        TransitionMap { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn out(&self, id: NodeId) -> &[Transition] {
        &self.edges[id.index()]
    }

    pub fn total_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    fn check(&self, id: NodeId) -> Result<(), GraphError> {
        if id.index() < self.edges.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(id))
        }
    }

    /// Breadth-first distances from `from` to every node (`u32::MAX` when
    /// unreachable).
    pub fn distances_from(&self, from: NodeId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.edges.len()];
        dist[from.index()] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            for t in &self.edges[n.index()] {
                if dist[t.target.index()] == u32::MAX {
                    dist[t.target.index()] = dist[n.index()] + 1;
                    queue.push_back(t.target);
                }
            }
        }
        dist
    }

    /// Shortest path as the list of transitions to take. The first path
    /// discovered by a breadth-first search visiting edges in map order wins
    /// ties.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Result<Vec<Transition>, GraphError> {
        self.check(from)?;
        self.check(to)?;
        if from == to {
            return Ok(Vec::new());
        }
        let mut via: Vec<Option<(NodeId, Transition)>> = vec![None; self.edges.len()];
        let mut seen = vec![false; self.edges.len()];
        seen[from.index()] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            for &t in &self.edges[n.index()] {
                if seen[t.target.index()] {
                    continue;
                }
                seen[t.target.index()] = true;
                via[t.target.index()] = Some((n, t));
                if t.target == to {
                    let mut path = Vec::new();
                    let mut cur = to;
                    while let Some((prev, t)) = via[cur.index()] {
                        path.push(t);
                        cur = prev;
                    }
                    path.reverse();
                    return Ok(path);
                }
                queue.push_back(t.target);
            }
        }
        Err(GraphError::Unreachable { from, to })
    }

    /// Counts ordered pairs of distinct nodes in `node_set` by shortest-path
    /// length.
    pub fn distance_histogram(
        &self,
        node_set: &[NodeId],
    ) -> Result<BTreeMap<u32, usize>, GraphError> {
        let mut hist = BTreeMap::new();
        for &a in node_set {
            self.check(a)?;
            let dist = self.distances_from(a);
            for &b in node_set {
                if a == b {
                    continue;
                }
                match dist[b.index()] {
                    u32::MAX => return Err(GraphError::Unreachable { from: a, to: b }),
                    d => *hist.entry(d).or_insert(0) += 1,
                }
            }
        }
        Ok(hist)
    }
}

/// All-pairs distance table with the next-hop of the canonical shortest path.
#[derive(Debug, Clone)]
pub struct Navigator {
    pub transitions: TransitionMap,
    dist: Vec<Vec<u32>>,
}

impl Navigator {
    pub fn new(g: &NavGraph) -> Self {
        let transitions = g.transitions();
        let dist = (0..g.len())
            .map(|i| transitions.distances_from(NodeId(i as u32)))
            .collect();
        Navigator { transitions, dist }
    }

    pub fn distance(&self, from: NodeId, to: NodeId) -> u32 {
        self.dist[from.index()][to.index()]
    }

    pub fn max_distance(&self) -> u32 {
        self.dist
            .iter()
            .flatten()
            .copied()
            .filter(|&d| d != u32::MAX)
            .max()
            .unwrap_or(0)
    }

    /// First transition of the canonical shortest path. Breadth-first search
    /// in map order always routes through the earliest transition that keeps
    /// a shortest distance, so this agrees with [`TransitionMap::shortest_path`].
    pub fn next_hop(&self, from: NodeId, to: NodeId) -> Option<Transition> {
        let d = self.distance(from, to);
        if d == 0 || d == u32::MAX {
            return None;
        }
        self.transitions
            .out(from)
            .iter()
            .copied()
            .find(|t| self.distance(t.target, to) + 1 == d)
    }

    /// Whether taking `t` from `from` keeps a shortest route to `to`.
    pub fn is_shortest_step(&self, from: NodeId, t: Transition, to: NodeId) -> bool {
        self.distance(t.target, to) + 1 == self.distance(from, to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Sft,
    Rl,
    Test,
}

impl FromStr for Role {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sft" => Ok(Role::Sft),
            "rl" => Ok(Role::Rl),
            "test" => Ok(Role::Test),
            _ => Err(GraphError::BadEntry(s.to_string())),
        }
    }
}

impl Role {
    /// The 2:2:1 assignment used for the base environment.
    pub fn env_base_split() -> Vec<Role> {
        vec![Role::Sft, Role::Sft, Role::Rl, Role::Rl, Role::Test]
    }
}

#[derive(Debug, Clone)]
pub struct SplitAssignment {
    pub root: NodeId,
    pub subtrees: Vec<(NodeId, Role)>,
    node_roles: Vec<Option<Role>>,
}

impl SplitAssignment {
    /// Role of a node; `None` for the root, which belongs to every role.
    pub fn role_of(&self, id: NodeId) -> Option<Role> {
        self.node_roles.get(id.index()).copied().flatten()
    }

    pub fn belongs(&self, id: NodeId, role: Role) -> bool {
        id == self.root || self.role_of(id) == Some(role)
    }

    /// Non-root nodes assigned to `role`.
    pub fn nodes(&self, role: Role) -> Vec<NodeId> {
        (0..self.node_roles.len())
            .map(|i| NodeId(i as u32))
            .filter(|&id| self.role_of(id) == Some(role))
            .collect()
    }

    pub fn nodes_with_root(&self, role: Role) -> Vec<NodeId> {
        let mut v = vec![self.root];
        v.extend(self.nodes(role));
        v
    }

    /// One node set per subtree of `role`, each including the root.
    pub fn subtree_sets(&self, g: &NavGraph, role: Role) -> Vec<Vec<NodeId>> {
        self.subtrees
            .iter()
            .filter(|(_, r)| *r == role)
            .map(|&(top, _)| {
                let mut v = vec![self.root];
                v.extend(g.subtree(top));
                v
            })
            .collect()
    }
}
