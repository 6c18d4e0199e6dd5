use crate::collision::SafeInterval;
use crate::geometry::Configuration;

use super::nn::NearestNeighbors;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Grown forward in time from the start; node time is the earliest arrival.
    Start,
    /// Grown backward in time from the goal; node time is the latest departure.
    Goal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub q: Configuration,
    pub interval: SafeInterval,
    pub time: f64,
    pub parent: Option<usize>,
    /// Departure and arrival of the move between this node and its parent,
    /// in forward time (parent -> node for the start tree, node -> parent
    /// for the goal tree).
    pub depart: f64,
    pub arrive: f64,
}

impl Node {
    pub fn root(q: Configuration, interval: SafeInterval, time: f64) -> Self {
        Self { q, interval, time, parent: None, depart: time, arrive: time }
    }
}

#[derive(Debug, Clone)]
pub struct Tree {
    pub direction: Direction,
    nodes: Vec<Node>,
    nn: NearestNeighbors,
}

impl Tree {
    pub fn new(direction: Direction, root: Node) -> Self {
        let mut tree = Self {
            direction,
            nodes: Vec::new(),
            nn: NearestNeighbors::new(root.q.len()),
        };
        tree.add(root);
        tree
    }

    pub fn add(&mut self, node: Node) -> usize {
        debug_assert!(node.interval.contains(node.time));
        let id = self.nodes.len();
        self.nn.insert(node.q.as_slice());
        self.nodes.push(node);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn nearest(&self, q: &Configuration) -> Option<usize> {
        self.nn.nearest(q.as_slice())
    }

    /// Nodes within `radius` of `q`, closest first, lower index on ties.
    pub fn near(&self, q: &Configuration, radius: f64) -> Vec<(usize, f64)> {
        self.nn.within(q.as_slice(), radius)
    }

    /// Node ids from `id` up to the root, `id` first.
    pub fn branch(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }
}
