//! Constructors for the standard families of tree-like structures: free
//! products, amalgamated products and HNN extensions of finite groups, the
//! free group with a ball generating set, and the grandparent graph.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::UnionFind;
use crate::structure::{ChildSlot, ModelPiece, RootPiece, TreeStructure};

/// A finite graph with a distinguished base vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGraph {
    pub name: String,
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub base: usize,
}

impl FiniteGraph {
    pub fn new(name: impl Into<String>, vertices: usize, edges: Vec<[usize; 2]>, base: usize) -> Self {
        FiniteGraph {
            name: name.into(),
            vertices,
            edges,
            base,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push([a, b]);
            }
        }
        FiniteGraph::new(format!("k{n}"), n, edges, 0)
    }

    /// The cycle on `n >= 3` vertices, `n = 2` gives a single edge.
    pub fn cycle(n: usize) -> Self {
        let edges = match n {
            0 | 1 => vec![],
            2 => vec![[0, 1]],
            _ => (0..n).map(|i| [i, (i + 1) % n]).collect(),
        };
        FiniteGraph::new(format!("c{n}"), n, edges, 0)
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n).map(|i| [i - 1, i]).collect();
        FiniteGraph::new(format!("p{n}"), n, edges, 0)
    }

    /// Parses `kN`, `cN` or `pN`.
    pub fn from_name(name: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown graph '{name}' (expected kN, cN or pN)"));
        let (kind, n) = name.split_at(name.len().min(1));
        let n: usize = n.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        match kind {
            "k" | "K" => Ok(FiniteGraph::complete(n)),
            "c" | "C" => Ok(FiniteGraph::cycle(n)),
            "p" | "P" => Ok(FiniteGraph::path(n)),
            _ => Err(bad()),
        }
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.vertices);
        for &[a, b] in &self.edges {
            uf.union(a, b);
        }
        self.vertices > 0 && (0..self.vertices).all(|v| uf.find(v) == uf.find(0))
    }

    fn check(&self) -> Result<()> {
        if self.vertices == 0 {
            return Err(Error::InvalidArgument(format!("graph '{}' has no vertices", self.name)));
        }
        if self.base >= self.vertices {
            return Err(Error::InvalidArgument(format!(
                "graph '{}': base out of range",
                self.name
            )));
        }
        if let Some(e) = self
            .edges
            .iter()
            .find(|e| e[0] >= self.vertices || e[1] >= self.vertices)
        {
            return Err(Error::InvalidArgument(format!(
                "graph '{}': edge {:?} out of range",
                self.name, e
            )));
        }
        if !self.is_connected() {
            return Err(Error::InvalidArgument(format!("graph '{}' is disconnected", self.name)));
        }
        Ok(())
    }
}

fn slot(model: &str, attach: Vec<usize>) -> ChildSlot {
    ChildSlot {
        model: model.to_string(),
        attach,
    }
}

/// Free product of finite vertex-transitive graphs.
///
/// Model `i` is factor `i` with border `[base]` and, at every other vertex, one
/// child of each other factor. The root is factor 0 with children of every
/// other factor at every vertex.
pub fn free_product(factors: &[FiniteGraph]) -> Result<TreeStructure> {
    if factors.len() < 2 {
        return Err(Error::InvalidArgument("free product needs at least two factors".into()));
    }
    for f in factors {
        f.check()?;
    }
    let names: Vec<String> = factors
        .iter()
        .enumerate()
        .map(|(i, f)| format!("f{i}_{}", f.name))
        .collect();
    let others = |i: usize, v: usize| -> Vec<ChildSlot> {
        (0..factors.len())
            .filter(|&k| k != i)
            .map(|k| slot(&names[k], vec![v]))
            .collect()
    };
    let models = factors
        .iter()
        .enumerate()
        .map(|(i, f)| ModelPiece {
            name: names[i].clone(),
            vertices: f.vertices,
            edges: f.edges.clone(),
            border: vec![f.base],
            children: (0..f.vertices)
                .filter(|&v| v != f.base)
                .flat_map(|v| others(i, v))
                .collect(),
        })
        .collect();
    let f0 = &factors[0];
    let name = factors.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join("*");
    Ok(TreeStructure {
        name,
        models,
        root: RootPiece {
            name: "root".into(),
            vertices: f0.vertices,
            edges: f0.edges.clone(),
            origin: f0.base,
            children: (0..f0.vertices).flat_map(|v| others(0, v)).collect(),
        },
    })
}

fn check_cosets(graph: &FiniteGraph, cosets: &[Vec<usize>], what: &str) -> Result<usize> {
    let size = cosets.first().map_or(0, |c| c.len());
    if size == 0 {
        return Err(Error::InvalidArgument(format!("{what}: no cosets or empty coset")));
    }
    if cosets.iter().any(|c| c.len() != size) {
        return Err(Error::InvalidArgument(format!("{what}: unequal coset sizes")));
    }
    let mut seen = vec![false; graph.vertices];
    for &v in cosets.iter().flatten() {
        if v >= graph.vertices || std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidArgument(format!(
                "{what}: cosets do not partition the vertices"
            )));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument(format!(
            "{what}: cosets do not partition the vertices"
        )));
    }
    Ok(size)
}

/// Amalgamated product `G1 *_H G2` from the two factor graphs and the left
/// cosets of `H` in each, positionally aligned along `H`.
pub fn amalgam(
    g1: &FiniteGraph,
    cosets1: &[Vec<usize>],
    g2: &FiniteGraph,
    cosets2: &[Vec<usize>],
) -> Result<TreeStructure> {
    g1.check()?;
    g2.check()?;
    let s1 = check_cosets(g1, cosets1, &g1.name)?;
    let s2 = check_cosets(g2, cosets2, &g2.name)?;
    if s1 != s2 {
        return Err(Error::InvalidArgument(format!(
            "coset sizes differ between factors ({s1} vs {s2})"
        )));
    }
    let (n1, n2) = if g1.name == g2.name {
        (format!("{}_1", g1.name), format!("{}_2", g2.name))
    } else {
        (g1.name.clone(), g2.name.clone())
    };
    let model = |name: &str, g: &FiniteGraph, cosets: &[Vec<usize>], other: &str| ModelPiece {
        name: name.to_string(),
        vertices: g.vertices,
        edges: g.edges.clone(),
        border: cosets[0].clone(),
        children: cosets[1..].iter().map(|c| slot(other, c.clone())).collect(),
    };
    Ok(TreeStructure {
        name: format!("{}*{}", g1.name, g2.name),
        models: vec![model(&n1, g1, cosets1, &n2), model(&n2, g2, cosets2, &n1)],
        root: RootPiece {
            name: "root".into(),
            vertices: g1.vertices,
            edges: g1.edges.clone(),
            origin: cosets1[0][0],
            children: cosets1.iter().map(|c| slot(&n2, c.clone())).collect(),
        },
    })
}

/// The Cayley graph of SL(2,Z) = Z4 *_Z2 Z6 with its standard generators.
pub fn sl2z() -> TreeStructure {
    let mut square = FiniteGraph::cycle(4);
    square.name = "square".into();
    let mut hexagon = FiniteGraph::cycle(6);
    hexagon.name = "hexagon".into();
    let mut s = amalgam(
        &square,
        &[vec![0, 2], vec![1, 3]],
        &hexagon,
        &[vec![0, 3], vec![1, 4], vec![2, 5]],
    )
    .expect("sl2z data is consistent");
    s.name = "sl2z".into();
    s
}

/// HNN extension `<G1, t | t h t^-1 = alpha(h)>` of a finite group given by its
/// Cayley graph `base`, the left cosets of `H` and of `K`, and the positional
/// matching `alpha`: position `i` of an `H` coset is joined by `t` to position
/// `alpha[i]` of a `K` coset.
///
/// Model `h_border` is entered through a `t` edge and has an `H` coset as
/// border; `k_border` is entered through a `t^-1` edge and has a `K` coset as
/// border. Each carries the base graph and the `t` edges leaving it towards its
/// children, ending at fresh vertices that are the children's borders.
pub fn hnn(
    base: &FiniteGraph,
    h_cosets: &[Vec<usize>],
    k_cosets: &[Vec<usize>],
    alpha: &[usize],
) -> Result<TreeStructure> {
    base.check()?;
    let sh = check_cosets(base, h_cosets, "H cosets")?;
    let sk = check_cosets(base, k_cosets, "K cosets")?;
    if sh != sk {
        return Err(Error::InvalidArgument(format!("|H| = {sh} differs from |K| = {sk}")));
    }
    let mut seen = vec![false; sh];
    if alpha.len() != sh || alpha.iter().any(|&a| a >= sh || std::mem::replace(&mut seen[a], true)) {
        return Err(Error::InvalidArgument(
            "alpha is not a permutation of coset positions".into(),
        ));
    }

    // (vertices, edges, children) of the base graph plus t edges from the given cosets.
    let build = |skip_k: Option<usize>, skip_h: Option<usize>| {
        let mut vertices = base.vertices;
        let mut edges = base.edges.clone();
        let mut children = Vec::new();
        for (ci, c) in k_cosets.iter().enumerate() {
            if Some(ci) == skip_k {
                continue;
            }
            let fresh: Vec<usize> = (vertices..vertices + sh).collect();
            vertices += sh;
            for i in 0..sh {
                edges.push([c[alpha[i]], fresh[i]]);
            }
            children.push(slot("h_border", fresh));
        }
        for (ci, c) in h_cosets.iter().enumerate() {
            if Some(ci) == skip_h {
                continue;
            }
            let fresh: Vec<usize> = (vertices..vertices + sh).collect();
            vertices += sh;
            for i in 0..sh {
                edges.push([c[i], fresh[alpha[i]]]);
            }
            children.push(slot("k_border", fresh));
        }
        (vertices, edges, children)
    };

    let (hv, he, hc) = build(None, Some(0));
    let (kv, ke, kc) = build(Some(0), None);
    let (rv, re, rc) = build(None, None);
    Ok(TreeStructure {
        name: format!("hnn_{}", base.name),
        models: vec![
            ModelPiece {
                name: "h_border".into(),
                vertices: hv,
                edges: he,
                border: h_cosets[0].clone(),
                children: hc,
            },
            ModelPiece {
                name: "k_border".into(),
                vertices: kv,
                edges: ke,
                border: k_cosets[0].clone(),
                children: kc,
            },
        ],
        root: RootPiece {
            name: "root".into(),
            vertices: rv,
            edges: re,
            origin: base.base,
            children: rc,
        },
    })
}

/// Reduced words of the free group on `a`, `b`. Letters: a=0, A=1, b=2, B=3.
type Word = Vec<u8>;

fn inverse(x: u8) -> u8 {
    x ^ 1
}

fn multiply(u: &[u8], v: &[u8]) -> Word {
    let mut w = u.to_vec();
    for &x in v {
        if w.last() == Some(&inverse(x)) {
            w.pop();
        } else {
            w.push(x);
        }
    }
    w
}

fn distance(u: &[u8], v: &[u8]) -> usize {
    let inv: Word = u.iter().rev().map(|&x| inverse(x)).collect();
    multiply(&inv, v).len()
}

/// Reduced words of length `1..=len` starting with `first`, ordered by (length, letters).
fn words_from(first: u8, len: usize) -> Vec<Word> {
    let mut out = vec![vec![first]];
    let mut layer = out.clone();
    for _ in 1..len {
        let mut next = Vec::new();
        for w in &layer {
            for x in 0..4u8 {
                if x != inverse(*w.last().unwrap()) {
                    let mut v = w.clone();
                    v.push(x);
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn apply(perm: &[u8; 4], w: &[u8]) -> Word {
    w.iter().map(|&x| perm[x as usize]).collect()
}

fn index_of(list: &[Word], w: &[u8]) -> usize {
    list.iter().position(|v| v == w).expect("word present in piece")
}

fn distance_edges(words: &[Word], k: usize, skip: impl Fn(usize, usize) -> bool) -> Vec<[usize; 2]> {
    let mut edges = Vec::new();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            if distance(&words[i], &words[j]) <= k && !skip(i, j) {
                edges.push([i, j]);
            }
        }
    }
    edges
}

/// Largest radius accepted by [`free_group_ball`].
pub const MAX_BALL_RADIUS: usize = 3;

/// The free group of rank 2 with the generating set of all elements of word
/// length at most `k`.
pub fn free_group_ball(rank: usize, k: usize) -> Result<TreeStructure> {
    if rank != 2 {
        return Err(Error::InvalidArgument(format!("only rank 2 is supported, got {rank}")));
    }
    if !(1..=MAX_BALL_RADIUS).contains(&k) {
        return Err(Error::Guard(format!("radius {k} outside 1..={MAX_BALL_RADIUS}")));
    }
    const IDENTITY: [u8; 4] = [0, 1, 2, 3];
    const SWAP_AB: [u8; 4] = [2, 3, 0, 1];
    const A_TO_BINV: [u8; 4] = [3, 2, 0, 1];
    const INVERT_A: [u8; 4] = [1, 0, 2, 3];

    let mut piece = vec![Word::new()];
    piece.extend(words_from(0, k));
    let border_len = 1 + piece[1..].iter().filter(|w| w.len() < k).count();
    let border: Vec<usize> = (0..border_len).collect();
    let edges = distance_edges(&piece, k, |i, j| i < border_len && j < border_len);
    let children = [IDENTITY, SWAP_AB, A_TO_BINV]
        .iter()
        .map(|perm| {
            let attach = piece[..border_len]
                .iter()
                .map(|w| index_of(&piece, &multiply(&[0], &apply(perm, w))))
                .collect();
            slot("x", attach)
        })
        .collect();

    let mut ball = vec![Word::new()];
    for x in 0..4 {
        ball.extend(words_from(x, k - 1).into_iter().filter(|w| w.len() < k));
    }
    ball[1..].sort_by(|u, v| (u.len(), u).cmp(&(v.len(), v)));
    let root_children = [IDENTITY, INVERT_A, SWAP_AB, A_TO_BINV]
        .iter()
        .map(|perm| {
            let attach = piece[..border_len]
                .iter()
                .map(|w| index_of(&ball, &apply(perm, w)))
                .collect();
            slot("x", attach)
        })
        .collect();

    Ok(TreeStructure {
        name: format!("fball_{rank}_{k}"),
        models: vec![ModelPiece {
            name: "x".into(),
            vertices: piece.len(),
            edges,
            border,
            children,
        }],
        root: RootPiece {
            name: "root".into(),
            vertices: ball.len(),
            edges: distance_edges(&ball, k, |_, _| false),
            origin: 0,
            children: root_children,
        },
    })
}

/// The grandparent graph: the 3-regular tree with a fixed end, plus an edge
/// from every vertex to its grandparent towards that end.
///
/// The piece of a vertex `v` is `[parent(v), v, left(v), right(v)]` with the
/// two tree edges from `v` and the two grandparent edges from `parent(v)`.
/// Pieces below the origin are entered at `[parent, v]` (model `down`); the
/// pieces along the ray towards the end are entered at `[v, left]` (model `up`).
pub fn grandparent() -> TreeStructure {
    let edges = vec![[0, 2], [0, 3], [1, 2], [1, 3]];
    let down = |attach: Vec<usize>| slot("down", attach);
    TreeStructure {
        name: "grandparent".into(),
        models: vec![
            ModelPiece {
                name: "down".into(),
                vertices: 4,
                edges: edges.clone(),
                border: vec![0, 1],
                children: vec![down(vec![1, 2]), down(vec![1, 3])],
            },
            ModelPiece {
                name: "up".into(),
                vertices: 4,
                edges: edges.clone(),
                border: vec![1, 2],
                children: vec![down(vec![1, 3]), slot("up", vec![0, 1])],
            },
        ],
        root: RootPiece {
            name: "root".into(),
            vertices: 4,
            edges,
            origin: 1,
            children: vec![down(vec![1, 2]), down(vec![1, 3]), slot("up", vec![0, 1])],
        },
    }
}

/// Builds the free-product factor list from graph names like `k2`, `c3`.
pub fn factors_from_names(names: &[String]) -> Result<Vec<FiniteGraph>> {
    names.iter().map(|n| FiniteGraph::from_name(n)).collect()
}

/// Parses cosets written as `0,2/1,3`.
pub fn parse_cosets(text: &str) -> Result<Vec<Vec<usize>>> {
    text.split('/')
        .map(|c| {
            c.split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad coset list '{text}'")))
                })
                .collect()
        })
        .collect()
}
