//! Undirected multigraphs with self-loops and parallel edges.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Multigraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

fn norm(u: usize, v: usize) -> (usize, usize) {
    if u <= v { (u, v) } else { (v, u) }
}

impl Multigraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n {
                return Err(SpinError::InvalidVertex(u, n));
            }
            if v >= n {
                return Err(SpinError::InvalidVertex(v, n));
            }
            out.push(norm(u, v));
        }
        Ok(Multigraph { n, edges: out })
    }

    pub fn empty(n: usize) -> Self {
        Multigraph { n, edges: Vec::new() }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n { Ok(()) } else { Err(SpinError::InvalidVertex(v, self.n)) }
    }

    /// Degree with self-loops counted twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| (a == v) as usize + (b == v) as usize)
            .sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn has_self_loops(&self) -> bool {
        self.edges.iter().any(|&(a, b)| a == b)
    }

    pub fn add_edge(&self, u: usize, v: usize) -> Result<Self> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let mut g = self.clone();
        g.edges.push(norm(u, v));
        Ok(g)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Neighbor lists; a self-loop lists the vertex twice.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Disjoint union of `self` and `other`, with `other` renumbered by
    /// offset `self.n`.
    pub fn disjoint_union(&self, other: &Multigraph) -> Multigraph {
        let off = self.n;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(a, b)| (a + off, b + off)));
        Multigraph { n: self.n + other.n, edges }
    }

    /// Sorted edge list under the permutation minimizing it. Exponential;
    /// intended for graphs with at most 8 vertices.
    pub fn canonical_form(&self) -> (usize, Vec<(usize, usize)>) {
        assert!(self.n <= 8, "canonical_form is for tiny graphs");
        let mut perm: Vec<usize> = (0..self.n).collect();
        let mut best: Option<Vec<(usize, usize)>> = None;
        loop {
            let mut e: Vec<(usize, usize)> =
                self.edges.iter().map(|&(a, b)| norm(perm[a], perm[b])).collect();
            e.sort_unstable();
            if best.as_ref().map_or(true, |b| e < *b) {
                best = Some(e);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        (self.n, best.unwrap_or_default())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Multigraph =
            serde_json::from_str(s).map_err(|e| SpinError::Parse(e.to_string()))?;
        Multigraph::new(raw.n, raw.edges)
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Identifies v1 in g1 with v2 in g2. Vertices of g1 keep their indices;
/// the remaining vertices of g2 follow in their original order. Returns the
/// merged vertex (= v1).
pub fn wedge_sum(g1: &Multigraph, v1: usize, g2: &Multigraph, v2: usize) -> Result<(Multigraph, usize)> {
    g1.check_vertex(v1)?;
    g2.check_vertex(v2)?;
    let map = |w: usize| -> usize {
        match w.cmp(&v2) {
            std::cmp::Ordering::Equal => v1,
            std::cmp::Ordering::Less => g1.n + w,
            std::cmp::Ordering::Greater => g1.n + w - 1,
        }
    };
    let mut edges = g1.edges.clone();
    edges.extend(g2.edges.iter().map(|&(a, b)| norm(map(a), map(b))));
    Ok((Multigraph { n: g1.n + g2.n - 1, edges }, v1))
}

/// Adds a pendant vertex (index n) joined to v; returns it.
pub fn attach_edge(g: &Multigraph, v: usize) -> Result<(Multigraph, usize)> {
    g.check_vertex(v)?;
    let mut h = g.clone();
    h.n += 1;
    h.edges.push((v, g.n));
    Ok((h, g.n))
}

pub fn delete_edge(g: &Multigraph, idx: usize) -> Result<Multigraph> {
    if idx >= g.edges.len() {
        return Err(SpinError::InvalidEdge(idx, g.edges.len()));
    }
    let mut h = g.clone();
    h.edges.remove(idx);
    Ok(h)
}

/// Contracts a non-loop edge {u,v}: u and v are removed, the other vertices
/// keep their relative order, and the merged vertex w is appended last.
/// Other u-v edges become self-loops on w. Returns the graph and w.
pub fn contract_edge(g: &Multigraph, idx: usize) -> Result<(Multigraph, usize)> {
    if idx >= g.edges.len() {
        return Err(SpinError::InvalidEdge(idx, g.edges.len()));
    }
    let (u, v) = g.edges[idx];
    if u == v {
        return Err(SpinError::InvalidInput("cannot contract a self-loop".into()));
    }
    let w = g.n - 2;
    let map = |x: usize| -> usize {
        if x == u || x == v {
            w
        } else {
            x - (x > u) as usize - (x > v) as usize
        }
    };
    let edges = g
        .edges
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx)
        .map(|(_, &(a, b))| norm(map(a), map(b)))
        .collect();
    Ok((Multigraph { n: g.n - 1, edges }, w))
}

/// Named generators: path(n) has n vertices; star(n) has a center 0 and n
/// leaves; cycle(n), clique(n) have n vertices; selfloops(n) is one vertex
/// with n loops; grid(n) is the n x n grid.
pub fn builtin(name: &str, n: usize) -> Result<Multigraph> {
    let bad = || SpinError::InvalidInput(format!("invalid size {n} for {name}"));
    match name {
        "path" => {
            if n < 1 {
                return Err(bad());
            }
            Multigraph::new(n, (1..n).map(|i| (i - 1, i)).collect())
        }
        "star" => {
            if n < 1 {
                return Err(bad());
            }
            Multigraph::new(n + 1, (1..=n).map(|i| (0, i)).collect())
        }
        "cycle" => {
            if n < 3 {
                return Err(bad());
            }
            Multigraph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
        }
        "clique" => {
            if n < 3 {
                return Err(bad());
            }
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    e.push((i, j));
                }
            }
            Multigraph::new(n, e)
        }
        "selfloops" => {
            if n < 1 {
                return Err(bad());
            }
            Multigraph::new(1, vec![(0, 0); n])
        }
        "grid" => {
            if n < 1 {
                return Err(bad());
            }
            let mut e = Vec::new();
            for r in 0..n {
                for c in 0..n {
                    let i = r * n + c;
                    if c + 1 < n {
                        e.push((i, i + 1));
                    }
                    if r + 1 < n {
                        e.push((i, i + n));
                    }
                }
            }
            Multigraph::new(n * n, e)
        }
        _ => Err(SpinError::InvalidInput(format!("unknown generator {name}"))),
    }
}

/// Uniform random multigraph with exactly `m` edges; loops optional.
pub fn random_multigraph<R: Rng>(rng: &mut R, n: usize, m: usize, loops: bool) -> Multigraph {
    assert!(n >= 1);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v && !loops {
            if n == 1 {
                break;
            }
            continue;
        }
        edges.push(norm(u, v));
    }
    Multigraph { n, edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_examples() {
        let k1 = Multigraph::empty(1);
        let (g, v) = wedge_sum(&k1, 0, &k1, 0).unwrap();
        assert_eq!((g.n, g.edges.len(), v), (1, 0, 0));
        let loop1 = builtin("selfloops", 1).unwrap();
        let (g, _) = wedge_sum(&loop1, 0, &loop1, 0).unwrap();
        assert_eq!(g, builtin("selfloops", 2).unwrap());
        assert!(wedge_sum(&k1, 1, &k1, 0).is_err());
    }

    #[test]
    fn attach_builds_path_and_star() {
        let mut g = Multigraph::empty(1);
        let mut tip = 0;
        for _ in 0..4 {
            let (h, u) = attach_edge(&g, tip).unwrap();
            g = h;
            tip = u;
        }
        let mut d = g.degrees();
        d.sort();
        assert_eq!(d, vec![1, 1, 2, 2, 2]);
        let mut s = Multigraph::empty(1);
        for _ in 0..5 {
            s = attach_edge(&s, 0).unwrap().0;
        }
        assert_eq!(s, builtin("star", 5).unwrap());
    }

    #[test]
    fn contract_and_delete() {
        let tri = builtin("cycle", 3).unwrap();
        let (c, w) = contract_edge(&tri, 0).unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.edges.len(), 2);
        assert!(c.edges.iter().all(|&(a, b)| a != b && (a == w || b == w)));
        let multi = Multigraph::new(2, vec![(0, 1), (0, 1)]).unwrap();
        let (c, w) = contract_edge(&multi, 1).unwrap();
        assert_eq!(c, Multigraph::new(1, vec![(w, w)]).unwrap());
        let loop1 = builtin("selfloops", 1).unwrap();
        assert!(contract_edge(&loop1, 0).is_err());
        let e = builtin("path", 2).unwrap();
        assert_eq!(delete_edge(&e, 0).unwrap(), Multigraph::empty(2));
    }

    #[test]
    fn generators() {
        let k4 = builtin("clique", 4).unwrap();
        assert_eq!((k4.n, k4.edges.len()), (4, 6));
        let s = builtin("star", 5).unwrap();
        assert_eq!((s.n, s.edges.len(), s.degree(0)), (6, 5, 5));
        let g = builtin("grid", 3).unwrap();
        assert_eq!((g.n, g.edges.len()), (9, 12));
        assert!(builtin("cycle", 2).is_err());
        assert_eq!(builtin("selfloops", 3).unwrap().degree(0), 6);
    }

    #[test]
    fn json_round_trip() {
        let g = Multigraph::new(3, vec![(2, 0), (1, 1), (0, 2)]).unwrap();
        let s = g.to_json();
        assert_eq!(Multigraph::from_json(&s).unwrap(), g);
        assert!(Multigraph::from_json(r#"{"n":2,"edges":[[0,2]]}"#).is_err());
    }
}
