//! Tree-like structures: a finite catalog of model pieces plus a root piece.
//!
//! A structure describes an infinite graph as a rooted tree of edge-disjoint
//! pieces. Every non-root piece is a copy of one of the model pieces; it meets
//! its parent exactly in its border, which is glued onto the parent's
//! `attach` list position by position. Child slots carry no edges, so every
//! edge of the unfolded graph belongs to exactly one piece.
//!
//! The on-disk format is JSON:
//!
//! ```json
//! {"name": "sl2z",
//!  "models": [{"name": "square", "vertices": 4, "edges": [[0,1],[1,2],[2,3],[3,0]],
//!              "border": [0,2], "children": [{"model": "hexagon", "attach": [1,3]}]}, ...],
//!  "root": {"name": "root", "vertices": 4, "edges": [...], "origin": 0, "children": [...]}}
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A child slot of a piece: which model hangs there and where it is glued.
///
/// `attach[k]` is identified with `border[k]` of the referenced model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildSlot {
    pub model: String,
    pub attach: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPiece {
    pub name: String,
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub border: Vec<usize>,
    pub children: Vec<ChildSlot>,
}

/// The exceptional root piece. Its border is the single origin vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootPiece {
    pub name: String,
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub origin: usize,
    pub children: Vec<ChildSlot>,
}

impl RootPiece {
    /// The root viewed as an ordinary piece whose border is `[origin]`.
    pub fn as_model(&self) -> ModelPiece {
        ModelPiece {
            name: self.name.clone(),
            vertices: self.vertices,
            edges: self.edges.clone(),
            border: vec![self.origin],
            children: self.children.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStructure {
    pub name: String,
    pub models: Vec<ModelPiece>,
    pub root: RootPiece,
}

/// One validation finding, located by a JSON-path-like string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, needle: &str) -> bool {
        self.errors.iter().any(|d| d.message.contains(needle))
    }

    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Diagnostic {
            location: location.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Diagnostic {
            location: location.into(),
            message: message.into(),
        });
    }

    /// Converts a report with errors into `Error::InvalidStructure`.
    pub fn into_result(self) -> Result<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.errors.iter().map(|d| d.to_string()).collect();
            Err(Error::InvalidStructure(msgs.join("; ")))
        }
    }
}

impl TreeStructure {
    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m.name == name)
    }

    pub fn model(&self, name: &str) -> Option<&ModelPiece> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Parses the JSON structure format. Semantic problems are left to
    /// [`validate`].
    pub fn from_json(text: &str) -> Result<Self> {
        parse(text.as_bytes())
    }

    pub fn to_json(&self) -> String {
        serialize(self)
    }
}

pub fn parse(bytes: &[u8]) -> Result<TreeStructure> {
    serde_json::from_slice(bytes).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn serialize(structure: &TreeStructure) -> String {
    let mut out = serde_json::to_string_pretty(structure).expect("structure serializes");
    out.push('\n');
    out
}

fn check_edges(report: &mut ValidationReport, loc: &str, vertices: usize, edges: &[[usize; 2]]) {
    let mut seen = HashSet::new();
    for (k, &[a, b]) in edges.iter().enumerate() {
        let eloc = format!("{loc}.edges[{k}]");
        if a >= vertices || b >= vertices {
            report.error(&eloc, "edge endpoint out of range");
            continue;
        }
        if a == b {
            report.error(&eloc, "self-loop");
            continue;
        }
        if !seen.insert((a.min(b), a.max(b))) {
            report.error(&eloc, "duplicate edge");
        }
    }
}

fn check_children(
    report: &mut ValidationReport,
    loc: &str,
    vertices: usize,
    children: &[ChildSlot],
    border_len: &HashMap<&str, usize>,
) {
    for (k, slot) in children.iter().enumerate() {
        let sloc = format!("{loc}.children[{k}]");
        match border_len.get(slot.model.as_str()) {
            None => report.error(&sloc, format!("unresolved model reference '{}'", slot.model)),
            Some(&len) if len != slot.attach.len() => report.error(
                &sloc,
                format!(
                    "attach length {} does not match border length {} of '{}'",
                    slot.attach.len(),
                    len,
                    slot.model
                ),
            ),
            Some(_) => {}
        }
        let mut seen = HashSet::new();
        for &v in &slot.attach {
            if v >= vertices {
                report.error(&sloc, format!("attach out of range ({v} >= {vertices})"));
            } else if !seen.insert(v) {
                report.error(&sloc, format!("duplicate attach vertex {v}"));
            }
        }
    }
}

fn component_count(vertices: usize, edges: &[[usize; 2]]) -> usize {
    let mut uf = crate::partition::UnionFind::new(vertices);
    for &[a, b] in edges {
        if a < vertices && b < vertices {
            uf.union(a, b);
        }
    }
    (0..vertices).filter(|&v| uf.find(v) == v).count()
}

/// Checks the local encoding invariants of a structure.
pub fn validate(structure: &TreeStructure) -> ValidationReport {
    let mut report = ValidationReport::default();
    if structure.models.is_empty() {
        report.error("models", "structure has no models");
    }

    let mut border_len: HashMap<&str, usize> = HashMap::new();
    for (i, m) in structure.models.iter().enumerate() {
        if border_len.insert(m.name.as_str(), m.border.len()).is_some() {
            report.error(format!("models[{i}]"), format!("duplicate model name '{}'", m.name));
        }
    }

    for (i, m) in structure.models.iter().enumerate() {
        let loc = format!("models[{i}]");
        if m.vertices == 0 {
            report.error(&loc, "vertex count must be positive");
        }
        check_edges(&mut report, &loc, m.vertices, &m.edges);
        if m.border.is_empty() {
            report.error(&loc, "empty border");
        }
        let mut seen = HashSet::new();
        for &v in &m.border {
            if v >= m.vertices {
                report.error(&loc, format!("border vertex out of range ({v} >= {})", m.vertices));
            } else if !seen.insert(v) {
                report.error(&loc, format!("duplicate border vertex {v}"));
            }
        }
        check_children(&mut report, &loc, m.vertices, &m.children, &border_len);
        if m.vertices > 0 && component_count(m.vertices, &m.edges) > 1 {
            report.warn(&loc, "piece has more than one connected component");
        }
    }

    let root = &structure.root;
    if root.vertices == 0 {
        report.error("root", "vertex count must be positive");
    }
    if root.origin >= root.vertices {
        report.error(
            "root",
            format!("origin out of range ({} >= {})", root.origin, root.vertices),
        );
    }
    check_edges(&mut report, "root", root.vertices, &root.edges);
    check_children(&mut report, "root", root.vertices, &root.children, &border_len);

    if !report.errors.is_empty() {
        return report;
    }

    // Reachability over child references, and whether the unfolding is infinite.
    let index: HashMap<&str, usize> = structure
        .models
        .iter()
        .enumerate()
        .map(|(i, m)| (m.name.as_str(), i))
        .collect();
    let succ: Vec<Vec<usize>> = structure
        .models
        .iter()
        .map(|m| m.children.iter().map(|c| index[c.model.as_str()]).collect())
        .collect();
    let mut reachable = BTreeSet::new();
    let mut stack: Vec<usize> = root.children.iter().map(|c| index[c.model.as_str()]).collect();
    while let Some(j) = stack.pop() {
        if reachable.insert(j) {
            stack.extend(succ[j].iter().copied());
        }
    }
    for (i, m) in structure.models.iter().enumerate() {
        if !reachable.contains(&i) {
            report.warn(
                format!("models[{i}]"),
                format!("model '{}' is unreachable from the root", m.name),
            );
        }
    }
    let infinite = reachable.iter().any(|&j| on_cycle(j, &succ));
    if !infinite {
        report.error(
            "structure",
            "finite unfolding: no reachable model lies on a cycle of child references",
        );
    }
    report
}

fn on_cycle(start: usize, succ: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; succ.len()];
    let mut stack = succ[start].clone();
    while let Some(j) = stack.pop() {
        if j == start {
            return true;
        }
        if !std::mem::replace(&mut seen[j], true) {
            stack.extend(succ[j].iter().copied());
        }
    }
    false
}

/// Merges every piece with its children, keeping the tree of pieces.
///
/// A non-root model `j` becomes `j+`: its vertex set is the old piece's
/// vertices followed by fresh copies of each child's non-border vertices, its
/// edges are the children's edges, and its border is all of the old piece's
/// vertices in order. Each old child slot becomes a slot of the enlarged child
/// model attached at the full (merged) vertex list of that child. The root
/// keeps its own edges and its origin and absorbs its children.
pub fn enlarge(structure: &TreeStructure) -> Result<TreeStructure> {
    validate(structure).into_result()?;
    let by_name: HashMap<&str, &ModelPiece> = structure.models.iter().map(|m| (m.name.as_str(), m)).collect();
    let new_name = |s: &str| format!("{s}+");

    // Returns (vertex count, children edges, new child slots).
    let absorb = |base_vertices: usize, slots: &[ChildSlot]| {
        let mut vertices = base_vertices;
        let mut edges = Vec::new();
        let mut children = Vec::new();
        for slot in slots {
            let child = by_name[slot.model.as_str()];
            let mut map = vec![usize::MAX; child.vertices];
            for (k, &b) in child.border.iter().enumerate() {
                map[b] = slot.attach[k];
            }
            for m in map.iter_mut().filter(|m| **m == usize::MAX) {
                *m = vertices;
                vertices += 1;
            }
            edges.extend(child.edges.iter().map(|&[a, b]| [map[a], map[b]]));
            children.push(ChildSlot {
                model: new_name(&child.name),
                attach: map,
            });
        }
        (vertices, edges, children)
    };

    let models = structure
        .models
        .iter()
        .map(|m| {
            let (vertices, edges, children) = absorb(m.vertices, &m.children);
            ModelPiece {
                name: new_name(&m.name),
                vertices,
                edges,
                border: (0..m.vertices).collect(),
                children,
            }
        })
        .collect();

    let root = &structure.root;
    let (vertices, child_edges, children) = absorb(root.vertices, &root.children);
    let mut edges = root.edges.clone();
    edges.extend(child_edges);
    Ok(TreeStructure {
        name: format!("{}+", structure.name),
        models,
        root: RootPiece {
            name: root.name.clone(),
            vertices,
            edges,
            origin: root.origin,
            children,
        },
    })
}

/// Index-resolved piece used by the engine. For the root, `border == [origin]`.
#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub name: String,
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub border: Vec<usize>,
    pub slots: Vec<(usize, Vec<usize>)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Resolved {
    pub models: Vec<Piece>,
    pub root: Piece,
}

impl Resolved {
    pub fn new(structure: &TreeStructure) -> Result<Self> {
        validate(structure).into_result()?;
        let index: HashMap<&str, usize> = structure
            .models
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name.as_str(), i))
            .collect();
        let resolve = |m: &ModelPiece| Piece {
            name: m.name.clone(),
            vertices: m.vertices,
            edges: m.edges.clone(),
            border: m.border.clone(),
            slots: m
                .children
                .iter()
                .map(|c| (index[c.model.as_str()], c.attach.clone()))
                .collect(),
        };
        Ok(Resolved {
            models: structure.models.iter().map(resolve).collect(),
            root: resolve(&structure.root.as_model()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders;

    fn tiny() -> TreeStructure {
        TreeStructure {
            name: "line".into(),
            models: vec![ModelPiece {
                name: "edge".into(),
                vertices: 2,
                edges: vec![[0, 1]],
                border: vec![0],
                children: vec![ChildSlot {
                    model: "edge".into(),
                    attach: vec![1],
                }],
            }],
            root: RootPiece {
                name: "root".into(),
                vertices: 1,
                edges: vec![],
                origin: 0,
                children: vec![ChildSlot {
                    model: "edge".into(),
                    attach: vec![0],
                }],
            },
        }
    }

    #[test]
    fn sl2z_preset_is_valid() {
        let r = builders::sl2z().validate();
        assert!(r.is_valid(), "{:?}", r.errors);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn attach_out_of_range() {
        let mut s = tiny();
        s.models[0].children[0].attach = vec![5];
        assert!(s.validate().has_error("attach out of range"));
    }

    #[test]
    fn finite_unfolding_rejected() {
        let mut s = tiny();
        s.models[0].children.clear();
        assert!(s.validate().has_error("finite unfolding"));
    }

    #[test]
    fn local_invariants() {
        let mut s = tiny();
        s.models[0].edges.push([1, 0]);
        assert!(s.validate().has_error("duplicate edge"));

        let mut s = tiny();
        s.models[0].edges.push([1, 1]);
        assert!(s.validate().has_error("self-loop"));

        let mut s = tiny();
        s.models[0].border.clear();
        assert!(s.validate().has_error("empty border"));

        let mut s = tiny();
        s.root.origin = 3;
        assert!(s.validate().has_error("origin out of range"));

        let mut s = tiny();
        s.models[0].children[0].attach = vec![0, 1];
        assert!(s.validate().has_error("attach length"));
    }

    #[test]
    fn unreachable_model_warns() {
        let mut s = tiny();
        let mut extra = s.models[0].clone();
        extra.name = "orphan".into();
        extra.children[0].model = "orphan".into();
        s.models.push(extra);
        let r = s.validate();
        assert!(r.is_valid());
        assert!(r.warnings.iter().any(|w| w.message.contains("unreachable")));
    }

    #[test]
    fn empty_file_is_a_syntax_error() {
        assert!(matches!(parse(b""), Err(Error::Syntax { .. })));
        match parse(b"{\n  \"name\": 3,\n}") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_reference_parses_then_fails_validation() {
        let text = tiny().to_json().replace("\"model\": \"edge\"", "\"model\": \"nope\"");
        let s = parse(text.as_bytes()).unwrap();
        assert!(s.validate().has_error("unresolved model reference"));
    }

    #[test]
    fn enlarge_sl2z_sizes() {
        let e = enlarge(&builders::sl2z()).unwrap();
        assert!(e.validate().is_valid(), "{:?}", e.validate().errors);
        let sq = e.model("square+").unwrap();
        assert_eq!(sq.vertices, 8);
        assert_eq!(sq.border.len(), 4);
        assert_eq!(sq.children.len(), 1);
        assert_eq!(sq.edges.len(), 6);
        let hex = e.model("hexagon+").unwrap();
        assert_eq!(hex.vertices, 10);
        assert_eq!(hex.border.len(), 6);
        assert_eq!(hex.children.len(), 2);
        assert_eq!(hex.edges.len(), 8);
        assert_eq!(e.root.vertices, 4 + 2 * 4);
        assert_eq!(e.root.edges.len(), 4 + 2 * 6);
    }

    #[test]
    fn enlarge_rejects_invalid_input() {
        let mut s = tiny();
        s.models[0].children.clear();
        assert!(matches!(enlarge(&s), Err(Error::InvalidStructure(_))));
    }
}
