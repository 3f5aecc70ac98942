//! Simple undirected graphs and their static statistics.
//!
//! Adjacency is kept as one bit-row per vertex (symmetric, empty diagonal),
//! which makes membership tests O(1) and triangle counting a sequence of
//! word-wise ANDs. An explicit edge list with a pair-indexed slot table sits
//! alongside the rows so a uniformly random edge can be drawn and removed in
//! O(1), which is the inner operation of the evolution model.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NO_SLOT: u32 = u32::MAX;

/// Index of the unordered pair `{u, v}` in `0..n(n-1)/2`.
#[inline]
fn pair_index(u: usize, v: usize) -> usize {
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    hi * (hi - 1) / 2 + lo
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    degrees: Vec<u32>,
    edges: Vec<(u32, u32)>,
    slots: Vec<u32>,
}

/// Graphs compare by vertex count and edge set; the internal edge order
/// (which does affect later random removals) is ignored.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.rows == other.rows
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph {
            n,
            words,
            rows: vec![0; n * words],
            degrees: vec![0; n],
            edges: Vec::new(),
            slots: vec![NO_SLOT; pair_count(n)],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for v in 1..n {
            for u in 0..v {
                g.insert_unchecked(u, v);
            }
        }
        g
    }

    /// Build from a list of pairs. Duplicate pairs collapse to one edge.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            g.set_edge(u, v, true)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v] as usize
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        for w in [u, v] {
            if w >= self.n {
                return Err(Error::VertexOutOfRange { vertex: w, n: self.n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        Ok(())
    }

    #[inline]
    fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.words..(v + 1) * self.words]
    }

    #[inline]
    fn test_bit(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    fn flip_bits(&mut self, u: usize, v: usize) {
        self.rows[u * self.words + v / 64] ^= 1 << (v % 64);
        self.rows[v * self.words + u / 64] ^= 1 << (u % 64);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && u != v && self.test_bit(u, v)
    }

    /// Set or clear the edge `{u, v}`. Returns whether the graph changed.
    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) -> Result<bool> {
        self.check_pair(u, v)?;
        Ok(if present {
            self.insert_unchecked(u, v)
        } else {
            self.delete_unchecked(u, v)
        })
    }

    /// Add `{u, v}` if absent. Caller guarantees `u != v`, both `< n`.
    #[inline]
    pub(crate) fn insert_unchecked(&mut self, u: usize, v: usize) -> bool {
        if self.test_bit(u, v) {
            return false;
        }
        self.flip_bits(u, v);
        self.degrees[u] += 1;
        self.degrees[v] += 1;
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        self.slots[pair_index(lo, hi)] = self.edges.len() as u32;
        self.edges.push((lo as u32, hi as u32));
        true
    }

    #[inline]
    fn delete_unchecked(&mut self, u: usize, v: usize) -> bool {
        if !self.test_bit(u, v) {
            return false;
        }
        let slot = self.slots[pair_index(u, v)] as usize;
        self.remove_edge_at(slot);
        true
    }

    /// Remove the edge stored at position `idx` of the edge list (swap-remove).
    pub(crate) fn remove_edge_at(&mut self, idx: usize) {
        let (u, v) = self.edges[idx];
        let (u, v) = (u as usize, v as usize);
        self.flip_bits(u, v);
        self.degrees[u] -= 1;
        self.degrees[v] -= 1;
        self.slots[pair_index(u, v)] = NO_SLOT;
        self.edges.swap_remove(idx);
        if idx < self.edges.len() {
            let (a, b) = self.edges[idx];
            self.slots[pair_index(a as usize, b as usize)] = idx as u32;
        }
    }

    /// Remove one edge chosen uniformly at random. No-op on an empty edge set.
    pub fn remove_random_edge<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<(usize, usize)> {
        if self.edges.is_empty() {
            return None;
        }
        let idx = rng.random_range(0..self.edges.len());
        let (u, v) = self.edges[idx];
        self.remove_edge_at(idx);
        Some((u as usize, v as usize))
    }

    pub fn edge_density(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::TooFewVertices { n: self.n, required: 2 });
        }
        Ok(self.edges.len() as f64 / pair_count(self.n) as f64)
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        self.degrees.iter().map(|&d| d as usize).collect()
    }

    /// Common neighbours of `u` and `v`.
    fn common(&self, u: usize, v: usize) -> u64 {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn cherry_count(&self) -> u64 {
        self.degrees
            .iter()
            .map(|&d| {
                let d = d as u64;
                d * d.saturating_sub(1) / 2
            })
            .sum()
    }

    pub fn triangle_count(&self) -> u64 {
        // each triangle is seen once from each of its three edges
        self.edges
            .iter()
            .map(|&(u, v)| self.common(u as usize, v as usize))
            .sum::<u64>()
            / 3
    }

    pub fn cherries_and_triangles(&self) -> (u64, u64) {
        (self.cherry_count(), self.triangle_count())
    }

    /// Number of triangles through each vertex.
    pub fn triangles_per_vertex(&self) -> Vec<u64> {
        let mut t = vec![0u64; self.n];
        for &(u, v) in &self.edges {
            let c = self.common(u as usize, v as usize);
            t[u as usize] += c;
            t[v as usize] += c;
        }
        // every triangle at v is counted from both of its edges incident to v
        t.iter_mut().for_each(|x| *x /= 2);
        t
    }

    /// Local clustering coefficient per vertex; `None` where the degree is
    /// below 2 and the ratio has no denominator.
    pub fn clustering_coefficients(&self) -> Vec<Option<f64>> {
        self.triangles_per_vertex()
            .into_iter()
            .zip(&self.degrees)
            .map(|(t, &d)| {
                let d = d as u64;
                (d >= 2).then(|| t as f64 / (d * (d - 1) / 2) as f64)
            })
            .collect()
    }

    /// Injective homomorphism density of a small test graph.
    pub fn homomorphism_density(&self, test: TestGraph) -> Result<f64> {
        let k = test.order();
        if self.n < k {
            return Err(Error::TooFewVertices { n: self.n, required: k });
        }
        let n = self.n as f64;
        let injections = n * (n - 1.0) * (n - 2.0);
        Ok(match test {
            TestGraph::Edge => self.edge_density()?,
            // every cherry admits two injective labellings (swap the leaves)
            TestGraph::Cherry => 2.0 * self.cherry_count() as f64 / injections,
            TestGraph::Triangle => 6.0 * self.triangle_count() as f64 / injections,
        })
    }

    pub fn stats(&self) -> GraphStats {
        let (cherry_count, triangle_count) = self.cherries_and_triangles();
        GraphStats {
            n: self.n,
            edge_count: self.edge_count(),
            edge_density: self.edge_density().unwrap_or(0.0),
            degree_sequence: self.degree_sequence(),
            cherry_count,
            triangle_count,
            clustering_coefficients: self.clustering_coefficients(),
        }
    }

    /// Write the `n m` / `u v` edge-list format.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.edges.len())?;
        let mut sorted = self.edges.clone();
        sorted.sort_unstable();
        for (u, v) in sorted {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let parse_err = |detail: String| Error::Parse { what: "edge list".into(), detail };
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header = lines.next().ok_or_else(|| parse_err("missing header".into()))??;
        let mut it = header.split_whitespace().map(str::parse::<usize>);
        let (n, m) = match (it.next(), it.next(), it.next()) {
            (Some(Ok(n)), Some(Ok(m)), None) => (n, m),
            _ => return Err(parse_err(format!("bad header {header:?}"))),
        };
        let mut pairs = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines.next().ok_or_else(|| parse_err("fewer edge lines than declared".into()))??;
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => pairs.push((u, v)),
                _ => return Err(parse_err(format!("bad edge line {line:?}"))),
            }
        }
        Graph::from_edges(n, &pairs)
    }
}

/// The small test graphs whose densities the model's theory tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestGraph {
    Edge,
    Cherry,
    Triangle,
}

impl TestGraph {
    pub fn order(self) -> usize {
        match self {
            TestGraph::Edge => 2,
            TestGraph::Cherry | TestGraph::Triangle => 3,
        }
    }

    /// Edge set on vertex labels `0..order()`. The cherry is centred at 1.
    pub fn edges(self) -> &'static [(usize, usize)] {
        match self {
            TestGraph::Edge => &[(0, 1)],
            TestGraph::Cherry => &[(0, 1), (1, 2)],
            TestGraph::Triangle => &[(0, 1), (1, 2), (0, 2)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub edge_count: usize,
    pub edge_density: f64,
    pub degree_sequence: Vec<usize>,
    pub cherry_count: u64,
    pub triangle_count: u64,
    pub clustering_coefficients: Vec<Option<f64>>,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive injective-map count, the definition of t(F, G).
    pub(crate) fn brute_force_density(g: &Graph, test: TestGraph) -> f64 {
        let k = test.order();
        let n = g.n();
        let mut hits = 0u64;
        let mut total = 0u64;
        let mut phi = vec![0usize; k];
        fn rec(
            g: &Graph,
            test: TestGraph,
            phi: &mut Vec<usize>,
            depth: usize,
            hits: &mut u64,
            total: &mut u64,
        ) {
            if depth == phi.len() {
                *total += 1;
                if test.edges().iter().all(|&(i, j)| g.has_edge(phi[i], phi[j])) {
                    *hits += 1;
                }
                return;
            }
            for x in 0..g.n() {
                if phi[..depth].contains(&x) {
                    continue;
                }
                phi[depth] = x;
                rec(g, test, phi, depth + 1, hits, total);
            }
        }
        rec(g, test, &mut phi, 0, &mut hits, &mut total);
        assert_eq!(total as usize, (0..k).map(|i| n - i).product::<usize>());
        hits as f64 / total as f64
    }

    fn brute_force_counts(g: &Graph) -> (u64, u64) {
        let n = g.n();
        let (mut cherries, mut triangles) = (0, 0);
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let e = [g.has_edge(a, b), g.has_edge(b, c), g.has_edge(a, c)];
                    let k = e.iter().filter(|&&x| x).count() as u64;
                    match k {
                        3 => {
                            triangles += 1;
                            cherries += 3;
                        }
                        2 => cherries += 1,
                        _ => {}
                    }
                }
            }
        }
        (cherries, triangles)
    }

    pub(crate) fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (3..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), pair_count(n)).prop_map(move |bits| {
                let mut g = Graph::empty(n);
                let mut k = 0;
                for v in 1..n {
                    for u in 0..v {
                        if bits[k] {
                            g.insert_unchecked(u, v);
                        }
                        k += 1;
                    }
                }
                g
            })
        })
    }

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn build_examples() {
        let g = Graph::from_edges(3, &[]).unwrap();
        assert_eq!(g.edge_count(), 0);
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(k3.edge_count(), 3);
        assert_eq!(k3, Graph::complete(3));
        let g = Graph::from_edges(4, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        let g = Graph::from_edges(4, &[(1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn build_rejects_bad_pairs() {
        assert!(matches!(
            Graph::from_edges(3, &[(0, 3)]),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        ));
        assert!(matches!(Graph::from_edges(3, &[(1, 1)]), Err(Error::SelfLoop(1))));
    }

    #[test]
    fn edge_update_reports_changes() {
        let mut g = Graph::empty(3);
        assert!(g.set_edge(0, 1, true).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert!(!g.set_edge(1, 0, true).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert!(g.set_edge(0, 1, false).unwrap());
        assert!(!g.set_edge(0, 1, false).unwrap());
        assert_eq!(g.edge_count(), 0);
        assert!(matches!(g.set_edge(2, 2, true), Err(Error::SelfLoop(2))));
    }

    #[test]
    fn edge_density_examples() {
        assert_eq!(Graph::empty(7).edge_density().unwrap(), 0.0);
        assert_eq!(Graph::complete(4).edge_density().unwrap(), 1.0);
        assert!(matches!(Graph::empty(1).edge_density(), Err(Error::TooFewVertices { .. })));
    }

    #[test]
    fn cherry_triangle_examples() {
        assert_eq!(path3().cherries_and_triangles(), (1, 0));
        // oracle values from exhaustive triple enumeration
        assert_eq!(brute_force_counts(&Graph::complete(3)), (3, 1));
        assert_eq!(brute_force_counts(&Graph::complete(4)), (12, 4));
        assert_eq!(Graph::complete(3).cherries_and_triangles(), (3, 1));
        assert_eq!(Graph::complete(4).cherries_and_triangles(), (12, 4));
    }

    #[test]
    fn homomorphism_examples() {
        assert_eq!(Graph::complete(4).homomorphism_density(TestGraph::Triangle).unwrap(), 1.0);
        assert!(Graph::complete(2).homomorphism_density(TestGraph::Cherry).is_err());
        let g = path3();
        assert_eq!(
            g.homomorphism_density(TestGraph::Edge).unwrap(),
            g.edge_density().unwrap()
        );
    }

    #[test]
    fn homomorphism_cherry_on_fixed_8_vertex_graph() {
        let g = Graph::from_edges(
            8,
            &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (1, 5), (2, 6)],
        )
        .unwrap();
        for t in [TestGraph::Edge, TestGraph::Cherry, TestGraph::Triangle] {
            let fast = g.homomorphism_density(t).unwrap();
            assert!((fast - brute_force_density(&g, t)).abs() < 1e-15, "{t:?}");
        }
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(Graph::complete(3).clustering_coefficients(), vec![Some(1.0); 3]);
        assert_eq!(path3().clustering_coefficients(), vec![None, Some(0.0), None]);
        // K4 minus {2,3}: vertices 0,1 have degree 3 and sit on triangles
        // {0,1,2} and {0,1,3}
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let c = g.clustering_coefficients();
        assert_eq!(c[2], Some(1.0));
        assert_eq!(c[3], Some(1.0));
        assert!((c[0].unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((c[1].unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degree_sequence_examples() {
        assert_eq!(Graph::complete(3).degree_sequence(), vec![2, 2, 2]);
        assert_eq!(Graph::empty(4).degree_sequence(), vec![0; 4]);
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star.degree_sequence(), vec![3, 1, 1, 1]);
    }

    #[test]
    fn random_removal_keeps_slots_consistent() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut g = Graph::complete(12);
        while g.edge_count() > 0 {
            let (u, v) = g.remove_random_edge(&mut rng).unwrap();
            assert!(!g.has_edge(u, v));
            for (i, &(a, b)) in g.edges().iter().enumerate() {
                assert_eq!(g.slots[pair_index(a as usize, b as usize)] as usize, i);
            }
        }
        assert_eq!(g.remove_random_edge(&mut rng), None);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::from_edges(5, &[(0, 4), (1, 2), (3, 1)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "5 3\n0 4\n1 2\n1 3\n");
        let h = Graph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(h.edge_count(), 3);
        assert!(h.has_edge(4, 0) && h.has_edge(2, 1) && h.has_edge(1, 3));
        assert!(Graph::read_edge_list("3 2\n0 1\n".as_bytes()).is_err());
        assert!(Graph::read_edge_list("3 1\n0 0\n".as_bytes()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn handshake_and_cherry_bound(g in arb_graph(14)) {
            let sum: usize = g.degree_sequence().iter().sum();
            prop_assert_eq!(sum, 2 * g.edge_count());
            let (c, t) = g.cherries_and_triangles();
            prop_assert!(3 * t <= c);
            prop_assert_eq!((c, t), brute_force_counts(&g));
        }

        #[test]
        fn densities_match_injection_oracle(g in arb_graph(8)) {
            prop_assert_eq!(
                g.homomorphism_density(TestGraph::Edge).unwrap(),
                g.edge_density().unwrap()
            );
            for t in [TestGraph::Cherry, TestGraph::Triangle] {
                let fast = g.homomorphism_density(t).unwrap();
                let slow = brute_force_density(&g, t);
                prop_assert!((fast - slow).abs() < 1e-12, "{:?}: {} vs {}", t, fast, slow);
            }
        }
    }
}
