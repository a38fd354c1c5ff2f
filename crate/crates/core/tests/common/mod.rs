#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use petgraph::algo::is_isomorphic_matching;
use petgraph::graph::UnGraph;

use perctree::montecarlo::UnfoldedGraph;
use perctree::TreeStructure;

/// Undirected edge list with a distinguished origin.
#[derive(Debug, Clone)]
pub struct Rooted {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub origin: usize,
}

impl From<&UnfoldedGraph> for Rooted {
    fn from(g: &UnfoldedGraph) -> Self {
        Rooted {
            vertices: g.vertex_count(),
            edges: g.edges.clone(),
            origin: g.origin,
        }
    }
}

fn distances(g: &Rooted) -> Vec<usize> {
    let mut adj = vec![Vec::new(); g.vertices];
    for &[a, b] in &g.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![usize::MAX; g.vertices];
    dist[g.origin] = 0;
    let mut queue = VecDeque::from([g.origin]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Isomorphism fixing the origins, by VF2 with distance-labelled vertices.
pub fn isomorphic(a: &Rooted, b: &Rooted) -> bool {
    if a.vertices != b.vertices || a.edges.len() != b.edges.len() {
        return false;
    }
    let build = |g: &Rooted| {
        let d = distances(g);
        let mut graph = UnGraph::<usize, ()>::with_capacity(g.vertices, g.edges.len());
        let nodes: Vec<_> = d.iter().map(|&x| graph.add_node(x)).collect();
        for &[x, y] in &g.edges {
            graph.add_edge(nodes[x], nodes[y], ());
        }
        graph
    };
    is_isomorphic_matching(&build(a), &build(b), |x, y| x == y, |_, _| true)
}

/// Vertex of the 3-regular tree with a fixed end: `k` steps up the ancestor
/// ray from the origin, then a path of child choices. Child 0 of an ancestor
/// `k >= 1` is ancestor `k - 1`.
type TreeVertex = (usize, Vec<u8>);

fn tree_parent(v: &TreeVertex) -> TreeVertex {
    let (k, path) = v;
    if path.is_empty() {
        (k + 1, Vec::new())
    } else {
        (*k, path[..path.len() - 1].to_vec())
    }
}

fn tree_child(v: &TreeVertex, b: u8) -> TreeVertex {
    let (k, path) = v;
    if path.is_empty() && *k >= 1 && b == 0 {
        (k - 1, Vec::new())
    } else {
        let mut p = path.clone();
        p.push(b);
        (*k, p)
    }
}

/// Edges from the children of every tree vertex within distance `n` of the
/// origin, to that vertex and to its parent.
pub fn grandparent_ball(n: usize) -> Rooted {
    let origin: TreeVertex = (0, Vec::new());
    let mut seen = HashMap::from([(origin.clone(), 0usize)]);
    let mut order = vec![origin.clone()];
    let mut queue = VecDeque::from([origin.clone()]);
    while let Some(w) = queue.pop_front() {
        let d = seen[&w];
        if d == n {
            continue;
        }
        for u in [tree_parent(&w), tree_child(&w, 0), tree_child(&w, 1)] {
            if !seen.contains_key(&u) {
                seen.insert(u.clone(), d + 1);
                order.push(u.clone());
                queue.push_back(u);
            }
        }
    }
    let mut ids: HashMap<TreeVertex, usize> = HashMap::new();
    let id = |v: TreeVertex, ids: &mut HashMap<TreeVertex, usize>| {
        let next = ids.len();
        *ids.entry(v).or_insert(next)
    };
    let o = id(origin, &mut ids);
    let mut edges = Vec::new();
    for w in &order {
        let wi = id(w.clone(), &mut ids);
        let pi = id(tree_parent(w), &mut ids);
        for b in 0..2 {
            let ci = id(tree_child(w, b), &mut ids);
            edges.push([ci, wi]);
            edges.push([ci, pi]);
        }
    }
    Rooted {
        vertices: ids.len(),
        edges,
        origin: o,
    }
}

/// Probability that the two border vertices of each model are joined inside
/// its descendant subtree truncated `depth` generations down. Needs borders
/// and attachments of size 2. Plain enumeration with breadth-first search.
pub fn truncated_join(structure: &TreeStructure, p: f64, depth: usize) -> Vec<f64> {
    let mut q = vec![0.0; structure.models.len()];
    for _ in 0..depth {
        q = structure
            .models
            .iter()
            .map(|m| {
                assert_eq!(m.border.len(), 2);
                let e = m.edges.len();
                let k = m.children.len();
                let child_q: Vec<f64> = m
                    .children
                    .iter()
                    .map(|c| q[structure.model_index(&c.model).unwrap()])
                    .collect();
                let mut total = 0.0;
                for g in 0u32..1 << e {
                    for h in 0u32..1 << k {
                        let mut w = 1.0;
                        let mut adj = vec![Vec::new(); m.vertices];
                        for (i, &[a, b]) in m.edges.iter().enumerate() {
                            if g >> i & 1 == 1 {
                                w *= p;
                                adj[a].push(b);
                                adj[b].push(a);
                            } else {
                                w *= 1.0 - p;
                            }
                        }
                        for (i, c) in m.children.iter().enumerate() {
                            if h >> i & 1 == 1 {
                                w *= child_q[i];
                                adj[c.attach[0]].push(c.attach[1]);
                                adj[c.attach[1]].push(c.attach[0]);
                            } else {
                                w *= 1.0 - child_q[i];
                            }
                        }
                        if w == 0.0 {
                            continue;
                        }
                        let mut seen = vec![false; m.vertices];
                        let mut stack = vec![m.border[0]];
                        seen[m.border[0]] = true;
                        while let Some(v) = stack.pop() {
                            for &u in &adj[v] {
                                if !seen[u] {
                                    seen[u] = true;
                                    stack.push(u);
                                }
                            }
                        }
                        if seen[m.border[1]] {
                            total += w;
                        }
                    }
                }
                total
            })
            .collect();
    }
    q
}
