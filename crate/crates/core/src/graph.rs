//! Undirected plaintext graphs, the common-neighbor oracle, the SLP-II mask
//! matrix, and SNAP edge-list ingestion.

use std::collections::BTreeSet;
use std::io::{BufRead, Read, Write};

use rand::Rng;
use thiserror::Error;

const CACHE_MAGIC: &[u8; 4] = b"SLPG";
const CACHE_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("vertex {vertex} outside [0, {n})")]
    Domain { vertex: usize, n: usize },
    #[error("bad graph cache: {0}")]
    BadCache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Symmetric 0/1 adjacency matrix with zero diagonal, bit-packed by row.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph {{ n: {}, edges: {} }}", self.n, self.edge_count())
    }
}

impl Graph {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// G(n, p): each unordered pair is an edge independently with probability p.
    pub fn erdos_renyi<R: Rng>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut g = Self::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row_bits(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    fn set(&mut self, u: usize, v: usize) {
        self.bits[u * self.words + v / 64] |= 1 << (v % 64);
    }

    /// Adds `{u, v}`; self-loops are ignored. Panics if out of range.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(
            u < self.n && v < self.n,
            "edge ({u}, {v}) outside [0, {})",
            self.n
        );
        if u != v {
            self.set(u, v);
            self.set(v, u);
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn a(&self, u: usize, v: usize) -> u64 {
        self.has_edge(u, v) as u64
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row_bits(v)
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.has_edge(v, u)).collect()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    pub fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v >= self.n {
            return Err(GraphError::Domain {
                vertex: v,
                n: self.n,
            });
        }
        Ok(())
    }

    /// `|N_v ∩ N_u|`, the inner product of rows `v` and `u`.
    pub fn score(&self, v: usize, u: usize) -> Result<u64, GraphError> {
        self.check_vertex(v)?;
        self.check_vertex(u)?;
        Ok(self
            .row_bits(v)
            .iter()
            .zip(self.row_bits(u))
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    /// Candidates for `v`: every vertex that is neither `v` nor a neighbor.
    pub fn candidates(&self, v: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&u| u != v && !self.has_edge(v, u))
            .collect()
    }

    /// The full tie set of top-scoring candidates, empty if there are none.
    pub fn argmax_oracle(&self, v: usize) -> Result<BTreeSet<usize>, GraphError> {
        self.check_vertex(v)?;
        let scored: Vec<(usize, u64)> = self
            .candidates(v)
            .into_iter()
            .map(|u| (u, self.score(v, u).unwrap()))
            .collect();
        let best = scored.iter().map(|&(_, s)| s).max();
        Ok(scored
            .into_iter()
            .filter(|&(_, s)| Some(s) == best)
            .map(|(u, _)| u)
            .collect())
    }

    /// Candidates sorted by score descending, then by vertex id.
    pub fn ranked_candidates(&self, v: usize) -> Result<Vec<(usize, u64)>, GraphError> {
        self.check_vertex(v)?;
        let mut scored: Vec<(usize, u64)> = self
            .candidates(v)
            .into_iter()
            .map(|u| (u, self.score(v, u).unwrap()))
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(scored)
    }

    /// Subgraph induced by vertices `0..k` (vertices beyond `n` are isolated).
    pub fn prefix(&self, k: usize) -> Graph {
        let mut g = Graph::new(k);
        for u in 0..k.min(self.n) {
            for v in u + 1..k.min(self.n) {
                if self.has_edge(u, v) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&[CACHE_VERSION])?;
        w.write_all(&(self.n as u32).to_be_bytes())?;
        let mut packed = vec![0u8; (self.n * self.n).div_ceil(8)];
        for u in 0..self.n {
            for v in 0..self.n {
                if self.has_edge(u, v) {
                    let bit = u * self.n + v;
                    packed[bit / 8] |= 0x80 >> (bit % 8);
                }
            }
        }
        w.write_all(&packed)?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Graph, GraphError> {
        let mut head = [0u8; 9];
        r.read_exact(&mut head)?;
        if &head[..4] != CACHE_MAGIC {
            return Err(GraphError::BadCache("magic mismatch".into()));
        }
        if head[4] != CACHE_VERSION {
            return Err(GraphError::BadCache(format!(
                "unsupported version {}",
                head[4]
            )));
        }
        let n = u32::from_be_bytes(head[5..9].try_into().unwrap()) as usize;
        let mut packed = vec![0u8; (n * n).div_ceil(8)];
        r.read_exact(&mut packed)?;
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in 0..n {
                let bit = u * n + v;
                if packed[bit / 8] & (0x80 >> (bit % 8)) != 0 {
                    if u == v || packed[(v * n + u) / 8] & (0x80 >> ((v * n + u) % 8)) == 0 {
                        return Err(GraphError::BadCache(
                            "matrix not symmetric with zero diagonal".into(),
                        ));
                    }
                    g.set(u, v);
                }
            }
        }
        Ok(g)
    }
}

/// Counts recorded while parsing an edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Non-comment, non-blank edge lines in the file.
    pub raw_edge_lines: usize,
    /// Distinct vertex identifiers seen (including self-loop-only vertices).
    pub distinct_ids: usize,
    /// Edge lines kept by the prefix rule.
    pub kept_lines: usize,
    /// Kept lines that were self-loops.
    pub self_loops: usize,
    /// Distinct ordered pairs among kept non-loop lines.
    pub directed_edges: usize,
    /// Undirected edges after symmetrization and deduplication.
    pub undirected_edges: usize,
}

/// Parses a SNAP edge list.
///
/// With `max_vertex_id = Some(k)`, only edges with both endpoints below `k`
/// are kept and the result has exactly `k` vertices. Without a limit,
/// identifiers are renumbered densely in ascending order.
pub fn load_snap_edgelist<R: BufRead>(
    reader: R,
    max_vertex_id: Option<usize>,
) -> Result<(Graph, LoadStats), GraphError> {
    let mut pairs = Vec::new();
    let mut stats = LoadStats::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut field = |name: &str| -> Result<usize, GraphError> {
            let s = it.next().ok_or_else(|| GraphError::Parse {
                line: idx + 1,
                msg: format!("missing {name}"),
            })?;
            s.parse::<usize>().map_err(|_| GraphError::Parse {
                line: idx + 1,
                msg: format!("bad {name} {s:?}"),
            })
        };
        let u = field("source")?;
        let v = field("target")?;
        if it.next().is_some() {
            return Err(GraphError::Parse {
                line: idx + 1,
                msg: "trailing fields".into(),
            });
        }
        stats.raw_edge_lines += 1;
        pairs.push((u, v));
    }
    let ids: BTreeSet<usize> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
    stats.distinct_ids = ids.len();
    let (n, map): (usize, Box<dyn Fn(usize) -> Option<usize>>) = match max_vertex_id {
        Some(k) => (k, Box::new(move |x| (x < k).then_some(x))),
        None => {
            let dense: Vec<usize> = ids.iter().copied().collect();
            (dense.len(), Box::new(move |x| dense.binary_search(&x).ok()))
        }
    };
    let mut g = Graph::new(n);
    let mut directed = BTreeSet::new();
    for (u, v) in pairs {
        let (Some(a), Some(b)) = (map(u), map(v)) else {
            continue;
        };
        stats.kept_lines += 1;
        if a == b {
            stats.self_loops += 1;
            continue;
        }
        directed.insert((a, b));
        g.add_edge(a, b);
    }
    stats.directed_edges = directed.len();
    stats.undirected_edges = g.edge_count();
    Ok((g, stats))
}

/// The SLP-II matrix `B`: `b_ij = 0` for non-edges, otherwise a value drawn
/// uniformly from `(deg(v_i), N]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskMatrix {
    n: usize,
    entries: Vec<u32>,
}

impl MaskMatrix {
    pub fn build<R: Rng>(g: &Graph, rng: &mut R) -> Self {
        let n = g.n();
        let mut entries = vec![0u32; n * n];
        for i in 0..n {
            let deg = g.degree(i) as u32;
            for j in 0..n {
                if g.has_edge(i, j) {
                    entries[i * n + j] = rng.gen_range(deg + 1..=n as u32);
                }
            }
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.n + j]
    }

    /// Largest value any entry can take.
    pub fn bound(&self) -> u64 {
        self.n as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)])
    }

    #[test]
    fn path_scores_and_argmax() {
        let g = path3();
        assert_eq!(g.score(0, 2).unwrap(), 1);
        assert_eq!(g.argmax_oracle(0).unwrap(), BTreeSet::from([2]));
        assert_eq!(g.neighbors(1), vec![0, 2]);
        assert_eq!(g.degree(1), 2);
        assert!(g.score(0, 3).is_err());
    }

    #[test]
    fn isolated_and_complete() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)]);
        for v in 0..4 {
            assert_eq!(g.score(v, 3).unwrap(), 0);
        }
        let k4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(k4.argmax_oracle(0).unwrap().is_empty());
    }

    #[test]
    fn snap_parsing() {
        let (g, s) = load_snap_edgelist("0 1\n1 0\n".as_bytes(), Some(2)).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(s.raw_edge_lines, 2);
        assert_eq!(s.directed_edges, 2);
        let (g, s) = load_snap_edgelist("# c\n0 0\n".as_bytes(), Some(1)).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(s.self_loops, 1);
        let (g, _) = load_snap_edgelist("".as_bytes(), Some(5)).unwrap();
        assert_eq!((g.n(), g.edge_count()), (5, 0));
        let err = load_snap_edgelist("0 1\n2 x\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        // dense renumbering without a prefix limit
        let (g, _) = load_snap_edgelist("10\t20\n20 30\n".as_bytes(), None).unwrap();
        assert_eq!(g.n(), 3);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2) && !g.has_edge(0, 2));
        // prefix rule drops edges leaving [0, k)
        let (g, s) = load_snap_edgelist("0 1\n1 5\n".as_bytes(), Some(3)).unwrap();
        assert_eq!((g.n(), g.edge_count(), s.kept_lines), (3, 1, 1));
    }

    #[test]
    fn star_mask_entries() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let b = MaskMatrix::build(&g, &mut rng);
            for j in 1..4 {
                assert!((4..=4).contains(&b.get(0, j)));
                assert!(b.get(j, 0) > 1 && b.get(j, 0) <= 4);
            }
            assert_eq!(b.get(1, 2), 0);
            assert_eq!(b.get(0, 0), 0);
        }
    }

    #[test]
    fn cache_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let g = Graph::erdos_renyi(37, 0.3, &mut rng);
        let mut buf = Vec::new();
        g.write_cache(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SLPG");
        assert_eq!(Graph::read_cache(&buf[..]).unwrap(), g);
        buf[0] = b'X';
        assert!(matches!(
            Graph::read_cache(&buf[..]),
            Err(GraphError::BadCache(_))
        ));
    }

    proptest! {
        #[test]
        fn oracle_invariants(seed in any::<u64>(), n in 1usize..30, p in 0.0f64..1.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let g = Graph::erdos_renyi(n, p, &mut rng);
            for v in 0..n {
                prop_assert!(!g.has_edge(v, v));
                for u in 0..n {
                    prop_assert_eq!(g.has_edge(u, v), g.has_edge(v, u));
                    let s = g.score(v, u).unwrap();
                    prop_assert_eq!(s, g.score(u, v).unwrap());
                    prop_assert!(s as usize <= g.degree(v).min(g.degree(u)));
                    // brute force over common neighbors
                    let brute = (0..n).filter(|&k| g.has_edge(v, k) && g.has_edge(u, k)).count();
                    prop_assert_eq!(s as usize, brute);
                }
                let am = g.argmax_oracle(v).unwrap();
                prop_assert!(!am.contains(&v));
                prop_assert!(am.iter().all(|&u| !g.has_edge(v, u)));
            }
        }

        #[test]
        fn mask_range(seed in any::<u64>(), n in 1usize..25, p in 0.0f64..1.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let g = Graph::erdos_renyi(n, p, &mut rng);
            let b = MaskMatrix::build(&g, &mut rng);
            for i in 0..n {
                for j in 0..n {
                    if g.has_edge(i, j) {
                        prop_assert!(b.get(i, j) as usize > g.degree(i));
                        prop_assert!(b.get(i, j) as usize <= n);
                    } else {
                        prop_assert_eq!(b.get(i, j), 0);
                    }
                }
            }
        }
    }
}
