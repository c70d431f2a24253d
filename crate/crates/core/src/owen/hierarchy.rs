use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::CoalitionMask;

/// One node of a serialized hierarchy. `members` may be omitted on internal nodes, in
/// which case it is the union of the children.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyNode {
    #[serde(default)]
    pub members: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<HierarchyNode>,
}

impl HierarchyNode {
    pub fn leaf(feature: usize) -> Self {
        Self {
            members: vec![feature],
            children: Vec::new(),
        }
    }

    pub fn group(members: Vec<usize>, children: Vec<HierarchyNode>) -> Self {
        Self { members, children }
    }

    /// Node whose children are the given groups; members are inferred.
    pub fn of_children(children: Vec<HierarchyNode>) -> Self {
        Self {
            members: Vec::new(),
            children,
        }
    }

    fn effective_members(&self) -> Vec<usize> {
        if !self.members.is_empty() || self.children.is_empty() {
            return self.members.clone();
        }
        let mut all: Vec<usize> = self.children.iter().flat_map(|c| c.effective_members()).collect();
        all.sort_unstable();
        all
    }
}

/// On-disk hierarchy format: `{"n_features": N, "root": {"members": [...], "children": [...]}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyDocument {
    pub n_features: usize,
    pub root: HierarchyNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl HierarchyDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    /// Feature index `>= n_features`.
    OutOfRange {
        feature: usize,
        node: String,
    },
    /// Feature listed twice in one node or in two siblings.
    Overlap {
        feature: usize,
        node: String,
    },
    /// Feature of `0..n_features` missing from the root.
    Uncovered {
        feature: usize,
    },
    EmptyNode {
        node: String,
    },
    /// Children do not union to their parent.
    ChildrenMismatch {
        node: String,
    },
    NonSingletonLeaf {
        node: String,
    },
    NonUniformDepth {
        min: usize,
        max: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn overlaps(&self) -> Vec<usize> {
        self.issues
            .iter()
            .filter_map(|i| match i {
                Issue::Overlap { feature, .. } => Some(*feature),
                _ => None,
            })
            .collect()
    }

    pub fn uncovered(&self) -> Vec<usize> {
        self.issues
            .iter()
            .filter_map(|i| match i {
                Issue::Uncovered { feature } => Some(*feature),
                _ => None,
            })
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.issues.iter().map(|i| format!("{i:?}")).collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn path_name(path: &[usize]) -> String {
    let mut s = String::from("root");
    for p in path {
        s.push('/');
        s.push_str(&p.to_string());
    }
    s
}

/// Reports overlaps, coverage gaps, malformed nodes and non-uniform leaf depth.
pub fn validate_hierarchy(root: &HierarchyNode, n_features: usize) -> ValidationReport {
    let mut issues = BTreeSet::new();
    let mut depths = BTreeSet::new();
    let mut path = Vec::new();
    validate_node(root, n_features, &mut path, 0, &mut issues, &mut depths);

    let root_members: BTreeSet<usize> = root.effective_members().into_iter().collect();
    for f in 0..n_features {
        if !root_members.contains(&f) {
            issues.insert(Issue::Uncovered { feature: f });
        }
    }
    if depths.len() > 1 {
        issues.insert(Issue::NonUniformDepth {
            min: *depths.first().unwrap(),
            max: *depths.last().unwrap(),
        });
    }
    ValidationReport {
        issues: issues.into_iter().collect(),
    }
}

fn validate_node(
    node: &HierarchyNode,
    n: usize,
    path: &mut Vec<usize>,
    depth: usize,
    issues: &mut BTreeSet<Issue>,
    depths: &mut BTreeSet<usize>,
) {
    let members = node.effective_members();
    let name = path_name(path);
    if members.is_empty() {
        issues.insert(Issue::EmptyNode { node: name.clone() });
    }
    let mut seen = BTreeSet::new();
    for &m in &members {
        if m >= n {
            issues.insert(Issue::OutOfRange {
                feature: m,
                node: name.clone(),
            });
        }
        if !seen.insert(m) {
            issues.insert(Issue::Overlap {
                feature: m,
                node: name.clone(),
            });
        }
    }
    if node.children.is_empty() {
        depths.insert(depth);
        if members.len() != 1 {
            issues.insert(Issue::NonSingletonLeaf { node: name });
        }
        return;
    }
    let mut union = BTreeSet::new();
    for child in &node.children {
        for m in child.effective_members() {
            if !union.insert(m) {
                issues.insert(Issue::Overlap {
                    feature: m,
                    node: name.clone(),
                });
            }
        }
    }
    if union != seen {
        issues.insert(Issue::ChildrenMismatch { node: name });
    }
    for (k, child) in node.children.iter().enumerate() {
        path.push(k);
        validate_node(child, n, path, depth + 1, issues, depths);
        path.pop();
    }
}

/// Fills inferred members, expands multi-member leaves into singletons and pads shallow
/// leaves with pass-through nodes so every leaf sits at the same depth.
pub fn normalize_tree(root: &HierarchyNode) -> HierarchyNode {
    fn fill(node: &HierarchyNode, is_root: bool) -> HierarchyNode {
        let mut members = node.effective_members();
        members.sort_unstable();
        let children: Vec<HierarchyNode> = if node.children.is_empty() {
            if members.len() > 1 || is_root {
                members.iter().map(|&m| HierarchyNode::leaf(m)).collect()
            } else {
                Vec::new()
            }
        } else {
            node.children.iter().map(|c| fill(c, false)).collect()
        };
        HierarchyNode { members, children }
    }
    fn max_depth(node: &HierarchyNode) -> usize {
        node.children.iter().map(|c| 1 + max_depth(c)).max().unwrap_or(0)
    }
    fn pad(node: HierarchyNode, depth: usize, target: usize) -> HierarchyNode {
        if node.children.is_empty() {
            let mut cur = node;
            for _ in depth..target {
                cur = HierarchyNode {
                    members: cur.members.clone(),
                    children: vec![cur],
                };
            }
            return cur;
        }
        HierarchyNode {
            members: node.members,
            children: node.children.into_iter().map(|c| pad(c, depth + 1, target)).collect(),
        }
    }
    let filled = fill(root, true);
    let target = max_depth(&filled);
    pad(filled, 0, target)
}

/// Arena node of a [`PartitionHierarchy`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub members: Vec<usize>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    /// 0 for the root, `levels()` for the leaves.
    pub level: usize,
    /// Range of this node's leaves in depth-first leaf order.
    pub leaf_range: (usize, usize),
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Rooted tree of nested feature groups with singleton leaves at a uniform depth.
///
/// Level 1 holds the root's children (the coarsest coalitions) and level `levels()` the
/// single features. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionHierarchy {
    n_features: usize,
    nodes: Vec<Node>,
    leaf_of: Vec<usize>,
    leaf_order: Vec<usize>,
    levels: usize,
}

/// Chain of a feature's ancestors and, per level, the sibling set its ancestor belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiblingContext {
    pub feature: usize,
    pub levels: Vec<LevelContext>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelContext {
    pub level: usize,
    pub ancestor: usize,
    /// All children of the ancestor's parent, the ancestor included.
    pub siblings: Vec<usize>,
}

impl PartitionHierarchy {
    /// Normalizes and validates a raw tree.
    pub fn from_tree(root: &HierarchyNode, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::invalid("hierarchy needs at least one feature"));
        }
        let normalized = normalize_tree(root);
        let report = validate_hierarchy(&normalized, n_features);
        if !report.is_valid() {
            return Err(Error::InvalidHierarchy(report));
        }
        Ok(Self::build(&normalized, n_features))
    }

    pub fn from_document(doc: &HierarchyDocument) -> Result<Self> {
        Self::from_tree(&doc.root, doc.n_features)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_document(&HierarchyDocument::load(path)?)
    }

    /// Single-level partition: root -> groups -> singleton features.
    pub fn from_groups(n_features: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let root = HierarchyNode::of_children(
            groups
                .iter()
                .map(|g| HierarchyNode::group(g.clone(), Vec::new()))
                .collect(),
        );
        Self::from_tree(&root, n_features)
    }

    /// Root with every feature as its own level-1 coalition.
    pub fn all_singletons(n_features: usize) -> Result<Self> {
        let root = HierarchyNode::of_children((0..n_features).map(HierarchyNode::leaf).collect());
        Self::from_tree(&root, n_features)
    }

    /// Balanced tree over contiguous features; `fanouts[l]` is the branching at level `l+1`.
    pub fn balanced(fanouts: &[usize]) -> Result<Self> {
        if fanouts.is_empty() || fanouts.contains(&0) {
            return Err(Error::invalid("fan-outs must be a non-empty list of positive sizes"));
        }
        fn build(fanouts: &[usize], next: &mut usize) -> HierarchyNode {
            match fanouts.split_first() {
                None => {
                    let f = *next;
                    *next += 1;
                    HierarchyNode::leaf(f)
                }
                Some((&k, rest)) => HierarchyNode::of_children((0..k).map(|_| build(rest, next)).collect()),
            }
        }
        let mut next = 0;
        let root = build(fanouts, &mut next);
        Self::from_tree(&root, next)
    }

    fn build(root: &HierarchyNode, n_features: usize) -> Self {
        let mut h = Self {
            n_features,
            nodes: Vec::new(),
            leaf_of: vec![usize::MAX; n_features],
            leaf_order: Vec::with_capacity(n_features),
            levels: 0,
        };
        h.push(root, None, 0);
        h
    }

    fn push(&mut self, node: &HierarchyNode, parent: Option<usize>, level: usize) -> usize {
        let id = self.nodes.len();
        let start = self.leaf_order.len();
        self.nodes.push(Node {
            members: node.members.clone(),
            children: Vec::new(),
            parent,
            level,
            leaf_range: (start, start),
        });
        if node.children.is_empty() {
            let f = node.members[0];
            self.leaf_of[f] = id;
            self.leaf_order.push(f);
            self.levels = self.levels.max(level);
        } else {
            let kids: Vec<usize> = node
                .children
                .iter()
                .map(|c| self.push(c, Some(id), level + 1))
                .collect();
            self.nodes[id].children = kids;
        }
        self.nodes[id].leaf_range.1 = self.leaf_order.len();
        id
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Depth `L` of the leaves below the root.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_of(&self, feature: usize) -> usize {
        self.leaf_of[feature]
    }

    /// Features in depth-first leaf order; every node covers a contiguous slice of it.
    pub fn leaf_order(&self) -> &[usize] {
        &self.leaf_order
    }

    pub fn nodes_at_level(&self, level: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].level == level)
            .collect()
    }

    pub fn mask_of(&self, id: usize) -> CoalitionMask {
        CoalitionMask::from_indices(self.n_features, self.nodes[id].members.iter().copied())
    }

    pub fn sibling_context(&self, feature: usize) -> SiblingContext {
        let mut chain = Vec::new();
        let mut cur = self.leaf_of[feature];
        while let Some(p) = self.nodes[cur].parent {
            chain.push(LevelContext {
                level: self.nodes[cur].level,
                ancestor: cur,
                siblings: self.nodes[p].children.clone(),
            });
            cur = p;
        }
        chain.reverse();
        SiblingContext { feature, levels: chain }
    }

    /// Level-1 coalitions as member lists.
    pub fn top_groups(&self) -> Vec<Vec<usize>> {
        self.nodes[0]
            .children
            .iter()
            .map(|&c| self.nodes[c].members.clone())
            .collect()
    }

    pub fn to_tree(&self) -> HierarchyNode {
        fn rec(h: &PartitionHierarchy, id: usize) -> HierarchyNode {
            let n = &h.nodes[id];
            HierarchyNode {
                members: n.members.clone(),
                children: n.children.iter().map(|&c| rec(h, c)).collect(),
            }
        }
        rec(self, 0)
    }

    pub fn to_document(&self) -> HierarchyDocument {
        HierarchyDocument {
            n_features: self.n_features,
            root: self.to_tree(),
            metadata: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(groups: &[&[usize]]) -> HierarchyNode {
        HierarchyNode::of_children(
            groups
                .iter()
                .map(|g| HierarchyNode::group(g.to_vec(), g.iter().map(|&f| HierarchyNode::leaf(f)).collect()))
                .collect(),
        )
    }

    #[test]
    fn flat_partition_is_valid() {
        let report = validate_hierarchy(&flat(&[&[0, 1], &[2, 3]]), 4);
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn overlap_is_reported() {
        let report = validate_hierarchy(&flat(&[&[0, 1], &[1, 2, 3]]), 4);
        assert_eq!(report.overlaps(), vec![1]);
    }

    #[test]
    fn coverage_gap_is_reported() {
        let report = validate_hierarchy(&flat(&[&[0, 1]]), 3);
        assert_eq!(report.uncovered(), vec![2]);
    }

    #[test]
    fn non_uniform_depth_is_reported_then_normalized() {
        let raw = HierarchyNode::of_children(vec![
            HierarchyNode::leaf(0),
            HierarchyNode::group(vec![1, 2], vec![HierarchyNode::leaf(1), HierarchyNode::leaf(2)]),
        ]);
        let report = validate_hierarchy(&raw, 3);
        assert!(report.issues.contains(&Issue::NonUniformDepth { min: 1, max: 2 }));
        let h = PartitionHierarchy::from_tree(&raw, 3).unwrap();
        assert_eq!(h.levels(), 2);
        assert!(validate_hierarchy(&h.to_tree(), 3).is_valid());
        // feature 0 now sits below a pass-through node with one child
        let ctx = h.sibling_context(0);
        assert_eq!(ctx.levels.len(), 2);
        assert_eq!(ctx.levels[1].siblings.len(), 1);
    }

    #[test]
    fn multi_member_leaves_are_expanded() {
        let h = PartitionHierarchy::from_groups(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(h.levels(), 2);
        assert_eq!(h.top_groups(), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(h.node(h.leaf_of(3)).members, vec![3]);
    }

    #[test]
    fn invalid_tree_is_rejected() {
        let err = PartitionHierarchy::from_tree(&flat(&[&[0, 1], &[1, 2]]), 3).unwrap_err();
        assert!(matches!(err, Error::InvalidHierarchy(_)));
    }

    #[test]
    fn balanced_two_five_five() {
        let h = PartitionHierarchy::balanced(&[2, 5, 5]).unwrap();
        assert_eq!(h.n_features(), 50);
        assert_eq!(h.levels(), 3);
        let ctx = h.sibling_context(37);
        let sizes: Vec<usize> = ctx.levels.iter().map(|l| l.siblings.len()).collect();
        assert_eq!(sizes, vec![2, 5, 5]);
    }

    #[test]
    fn json_roundtrip() {
        let h = PartitionHierarchy::balanced(&[2, 3]).unwrap();
        let text = h.to_document().to_json().unwrap();
        let back = PartitionHierarchy::from_document(&HierarchyDocument::from_json(&text).unwrap()).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn json_with_omitted_internal_members() {
        let text = r#"{"n_features": 3, "root": {"children": [{"members": [0, 2]}, {"members": [1]}]}}"#;
        let h = PartitionHierarchy::from_document(&HierarchyDocument::from_json(text).unwrap()).unwrap();
        assert_eq!(h.top_groups(), vec![vec![0, 2], vec![1]]);
    }
}
