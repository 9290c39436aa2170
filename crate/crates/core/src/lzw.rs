//! LZW dictionary tree over the triplet stream.
//!
//! Each node is labelled with a triplet; a root-to-node path is a phrase of
//! consecutive triplets seen before. The children of the node the cursor
//! sits on are the triplets that have followed the current phrase, which is
//! what the Q-engine uses to narrow its candidate actions.

use std::collections::HashMap;

use crate::triplet::Triplet;
use crate::{Error, Result};

pub type NodeId = usize;

pub const ROOT: NodeId = 0;
pub const DEFAULT_MAX_DEPTH: usize = 10;

#[derive(Clone, Debug)]
struct Node {
    label: Option<Triplet>,
    parent: NodeId,
    depth: usize,
    children: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct LzwTree {
    nodes: Vec<Node>,
    index: HashMap<(NodeId, Triplet), NodeId>,
    cursor: NodeId,
    max_depth: usize,
}

impl Default for LzwTree {
    fn default() -> Self {
        LzwTree::new(DEFAULT_MAX_DEPTH)
    }
}

impl LzwTree {
    pub fn new(max_depth: usize) -> Self {
        LzwTree {
            nodes: vec![Node {
                label: None,
                parent: ROOT,
                depth: 0,
                children: Vec::new(),
            }],
            index: HashMap::new(),
            cursor: ROOT,
            max_depth,
        }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn cursor(&self) -> NodeId {
        self.cursor
    }

    /// Number of nodes, root included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.nodes[node].depth
    }

    pub fn label(&self, node: NodeId) -> Option<&Triplet> {
        self.nodes[node].label.as_ref()
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        (node != ROOT).then(|| self.nodes[node].parent)
    }

    pub fn child(&self, node: NodeId, t: &Triplet) -> Option<NodeId> {
        self.index.get(&(node, t.clone())).copied()
    }

    /// Feeds one triplet. The cursor descends when the current node already
    /// has a child `t`; otherwise `t` is added under the cursor (unless that
    /// would exceed the depth cap) and the cursor returns to the root.
    /// Returns the cursor after the update.
    pub fn build_step(&mut self, t: &Triplet) -> NodeId {
        if let Some(next) = self.child(self.cursor, t) {
            self.cursor = next;
        } else {
            let depth = self.nodes[self.cursor].depth + 1;
            if depth <= self.max_depth {
                self.insert(self.cursor, t.clone());
            }
            self.cursor = ROOT;
        }
        self.cursor
    }

    fn insert(&mut self, parent: NodeId, t: Triplet) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            label: Some(t.clone()),
            parent,
            depth: self.nodes[parent].depth + 1,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        self.index.insert((parent, t), id);
        id
    }

    /// Moves the cursor back to the root without touching the tree.
    pub fn reset_cursor(&mut self) {
        self.cursor = ROOT;
    }

    /// Child labels of `node` in insertion order.
    pub fn children(&self, node: NodeId) -> Vec<&Triplet> {
        self.nodes[node]
            .children
            .iter()
            .filter_map(|&c| self.nodes[c].label.as_ref())
            .collect()
    }

    /// The triplets on the path from the root to `node`.
    pub fn phrase(&self, mut node: NodeId) -> Vec<Triplet> {
        let mut out = Vec::new();
        while node != ROOT {
            out.extend(self.nodes[node].label.clone());
            node = self.nodes[node].parent;
        }
        out.reverse();
        out
    }

    fn dump_line(&self, node: NodeId) -> String {
        let n = &self.nodes[node];
        let label = n.label.as_ref().map(Triplet::to_string).unwrap_or_default();
        format!("{}{}__ {}", "_".repeat(2 * n.depth), n.depth, label)
    }

    /// Depth-first dump, children before their parent and siblings in
    /// insertion order, so the root line `0__ ` comes last:
    ///
    /// ```text
    /// ____2__ son was Jacob
    /// __1__ son was Isaac
    /// 0__
    /// ```
    pub fn dump_lines(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.nodes.len());
        // iterative post-order: (node, children already emitted)
        let mut stack = vec![(ROOT, false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded {
                out.push(self.dump_line(node));
            } else {
                stack.push((node, true));
                for &c in self.nodes[node].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    pub fn dump(&self) -> String {
        let mut s = self.dump_lines().join("\n");
        s.push('\n');
        s
    }

    /// Nodes other than the root as `(parent, label)` in creation order; a
    /// parent always precedes its children.
    pub fn export_nodes(&self) -> Vec<(NodeId, Triplet)> {
        self.nodes[1..]
            .iter()
            .map(|n| (n.parent, n.label.clone().expect("non-root nodes are labelled")))
            .collect()
    }

    /// Rebuilds a tree from [`LzwTree::export_nodes`] output.
    pub fn from_nodes(max_depth: usize, nodes: Vec<(NodeId, Triplet)>, cursor: NodeId) -> Result<Self> {
        let mut tree = LzwTree::new(max_depth);
        for (i, (parent, label)) in nodes.into_iter().enumerate() {
            let id = i + 1;
            if parent >= id {
                return Err(Error::Config(format!("lzw node {id} refers to later parent {parent}")));
            }
            if tree.child(parent, &label).is_some() {
                return Err(Error::Config(format!("lzw node {id} duplicates a sibling label")));
            }
            if tree.nodes[parent].depth + 1 > max_depth {
                return Err(Error::Config(format!("lzw node {id} exceeds depth cap {max_depth}")));
            }
            tree.insert(parent, label);
        }
        if cursor >= tree.nodes.len() {
            return Err(Error::Config(format!("lzw cursor {cursor} out of range")));
        }
        tree.cursor = cursor;
        Ok(tree)
    }
}
