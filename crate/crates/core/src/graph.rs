//! Coupling graph: which physical qubit pairs admit two-qubit gates.

use crate::error::{Error, Result};
use std::collections::HashSet;

#[derive(Debug, Clone)]
pub struct CouplingGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edges: HashSet<(usize, usize)>,
}

impl CouplingGraph {
    /// Build from an undirected edge list. The graph must be connected and
    /// free of self-loops.
    pub fn new(n: usize, edge_list: &[(usize, usize)]) -> Result<CouplingGraph> {
        let mut adj = vec![Vec::new(); n];
        let mut edges = HashSet::new();
        for &(u, v) in edge_list {
            if u == v {
                return Err(Error::InvalidCouplingGraph(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidCouplingGraph(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            let key = (u.min(v), u.max(v));
            if edges.insert(key) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let g = CouplingGraph { n, adj, edges };
        if !g.is_connected() {
            return Err(Error::InvalidCouplingGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    /// Path graph 0–1–…–(n−1).
    pub fn line(n: usize) -> CouplingGraph {
        let edges: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        CouplingGraph::new(n, &edges).expect("line graph is always valid")
    }

    /// Complete graph on n nodes.
    pub fn complete(n: usize) -> CouplingGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        CouplingGraph::new(n, &edges).expect("complete graph is always valid")
    }

    /// Parse the text format: first line `n`, then one `u v` edge per line.
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<CouplingGraph> {
        let mut lines = text
            .lines()
            .map(|l| match l.find('#') {
                Some(i) => l[..i].trim(),
                None => l.trim(),
            })
            .filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::InvalidCouplingGraph("empty file".into()))?
            .parse()
            .map_err(|_| Error::InvalidCouplingGraph("first line must be the node count".into()))?;
        let mut edges = Vec::new();
        for l in lines {
            let mut it = l.split_whitespace();
            let (Some(u), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::InvalidCouplingGraph(format!("bad edge line `{l}`")));
            };
            let u = u
                .parse()
                .map_err(|_| Error::InvalidCouplingGraph(format!("bad node `{u}`")))?;
            let v = v
                .parse()
                .map_err(|_| Error::InvalidCouplingGraph(format!("bad node `{v}`")))?;
            edges.push((u, v));
        }
        CouplingGraph::new(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        if self.n == 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// BFS shortest path from `src` to `dst` inclusive. Neighbors are
    /// visited in ascending index order, so ties resolve toward lower
    /// physical indices deterministically.
    pub fn shortest_path(&self, src: usize, dst: usize) -> Vec<usize> {
        if src == dst {
            return vec![src];
        }
        let mut parent = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        parent[src] = src;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    if v == dst {
                        let mut path = vec![dst];
                        let mut cur = dst;
                        while cur != src {
                            cur = parent[cur];
                            path.push(cur);
                        }
                        path.reverse();
                        return path;
                    }
                    queue.push_back(v);
                }
            }
        }
        unreachable!("graph is connected");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_disconnected() {
        let err = CouplingGraph::new(4, &[(0, 1), (2, 3)]).unwrap_err();
        assert_eq!(err.code(), "E_COUPLING_GRAPH");
    }

    #[test]
    fn rejects_self_loop() {
        assert!(CouplingGraph::new(2, &[(0, 0), (0, 1)]).is_err());
    }

    #[test]
    fn parses_text_format() {
        let g = CouplingGraph::parse("3\n0 1\n1 2\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(0, 2));
    }

    #[test]
    fn shortest_path_on_line() {
        let g = CouplingGraph::line(5);
        assert_eq!(g.shortest_path(0, 3), vec![0, 1, 2, 3]);
        assert_eq!(g.shortest_path(4, 4), vec![4]);
    }

    #[test]
    fn shortest_path_prefers_lower_index() {
        // Two equal-length paths from 0 to 3: via 1 or via 2.
        let g = CouplingGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(g.shortest_path(0, 3), vec![0, 1, 3]);
    }
}
