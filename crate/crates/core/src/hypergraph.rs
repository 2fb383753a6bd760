//! Core hypergraph representation: canonical hyperedges, weighted edge
//! multisets, vertex partitions, cut evaluation and contraction.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigUint;
use num::rational::BigRational;
use num::{BigInt, One, Zero};

use crate::error::{HypergraphError, ParseError};

/// A hyperedge in canonical form: strictly increasing vertex ids, arity >= 2.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hyperedge {
    vertices: Vec<u32>,
}

impl Hyperedge {
    /// Canonicalize a vertex list into a hyperedge. Sorts the input and
    /// rejects duplicates and arity-1 edges (they encode to the zero vector
    /// and cross no cut).
    pub fn new(mut vertices: Vec<u32>) -> Result<Self, HypergraphError> {
        vertices.sort_unstable();
        if vertices.len() < 2 {
            return Err(HypergraphError::ArityTooSmall(vertices.len()));
        }
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(HypergraphError::DuplicateVertex(w[0]));
            }
        }
        Ok(Hyperedge { vertices })
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn arity(&self) -> usize {
        self.vertices.len()
    }

    pub fn max_vertex(&self) -> u32 {
        *self.vertices.last().unwrap()
    }

    pub fn contains(&self, v: u32) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn check_range(&self, n: u32) -> Result<(), HypergraphError> {
        if self.max_vertex() >= n {
            return Err(HypergraphError::VertexOutOfRange {
                vertex: self.max_vertex(),
                n,
            });
        }
        Ok(())
    }

    /// Characteristic bitmask of the vertex set as an unbounded integer;
    /// injective over all hyperedges on a fixed vertex count.
    pub fn canonical_id(&self, n: u32) -> Result<BigUint, HypergraphError> {
        self.check_range(n)?;
        let mut id = BigUint::zero();
        for &v in &self.vertices {
            id |= BigUint::one() << v;
        }
        Ok(id)
    }

    /// Invert a canonical id back into a hyperedge, rejecting masks that do
    /// not describe a valid edge on `n` vertices.
    pub fn from_canonical_id(id: &BigUint, n: u32) -> Result<Self, HypergraphError> {
        let mut vertices = Vec::new();
        let bits = id.bits();
        if bits > n as u64 {
            return Err(HypergraphError::VertexOutOfRange {
                vertex: (bits - 1) as u32,
                n,
            });
        }
        for v in 0..bits as u32 {
            if id.bit(v as u64) {
                vertices.push(v);
            }
        }
        Hyperedge::new(vertices)
    }

    /// Little-endian byte encoding used as PRF input.
    pub fn id_bytes(&self, n: u32) -> Vec<u8> {
        let id = self.canonical_id(n).expect("edge valid for n");
        id.to_bytes_le()
    }
}

impl fmt::Display for Hyperedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A weighted hypergraph: `n` vertices and a multiset of canonical
/// hyperedges with integer multiplicities >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Hypergraph {
    n: u32,
    edges: BTreeMap<Hyperedge, u64>,
}

impl Hypergraph {
    pub fn new(n: u32) -> Self {
        Hypergraph {
            n,
            edges: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn distinct_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn weight_of(&self, e: &Hyperedge) -> u64 {
        self.edges.get(e).copied().unwrap_or(0)
    }

    pub fn add_edge(&mut self, e: Hyperedge, weight: u64) -> Result<(), HypergraphError> {
        if weight == 0 {
            return Err(HypergraphError::ZeroWeight);
        }
        e.check_range(self.n)?;
        *self.edges.entry(e).or_insert(0) += weight;
        Ok(())
    }

    /// Remove up to `weight` copies of `e`.
    pub fn remove_edge(&mut self, e: &Hyperedge, weight: u64) {
        if let Some(w) = self.edges.get_mut(e) {
            if *w > weight {
                *w -= weight;
            } else {
                self.edges.remove(e);
            }
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Hyperedge, u64)> {
        self.edges.iter().map(|(e, &w)| (e, w))
    }

    /// Disjoint union: weights of coincident edges add.
    pub fn union(&self, other: &Hypergraph) -> Hypergraph {
        let mut out = self.clone();
        for (e, w) in other.edges() {
            *out.edges.entry(e.clone()).or_insert(0) += w;
        }
        out
    }

    /// Induced sub-hypergraph `H[S]`: keeps only edges fully inside `s`.
    pub fn induced(&self, s: &[u32]) -> Hypergraph {
        let mask: std::collections::BTreeSet<u32> = s.iter().copied().collect();
        let mut out = Hypergraph::new(self.n);
        for (e, w) in self.edges() {
            if e.vertices().iter().all(|v| mask.contains(v)) {
                out.edges.insert(e.clone(), w);
            }
        }
        out
    }

    /// Vertices incident to at least one edge.
    pub fn touched_vertices(&self) -> Vec<u32> {
        let mut seen = vec![false; self.n as usize];
        for (e, _) in self.edges() {
            for &v in e.vertices() {
                seen[v as usize] = true;
            }
        }
        (0..self.n).filter(|&v| seen[v as usize]).collect()
    }

    /// Contract by a full partition: each block becomes one vertex, edges map
    /// to the set of blocks they touch, self-loops are dropped, and weights
    /// of coincident contracted edges add.
    pub fn contract(&self, p: &Partition) -> Result<Hypergraph, HypergraphError> {
        let block_of = p.block_index(self.n)?;
        let mut out = Hypergraph::new(p.blocks().len() as u32);
        for (e, w) in self.edges() {
            let mut blocks: Vec<u32> = e.vertices().iter().map(|&v| block_of[v as usize]).collect();
            blocks.sort_unstable();
            blocks.dedup();
            if blocks.len() >= 2 {
                let ce = Hyperedge::new(blocks).expect("contracted edge valid");
                *out.edges.entry(ce).or_insert(0) += w;
            }
        }
        Ok(out)
    }

    /// Weight crossing the partition plus the normalized value (divided by
    /// k-1) as an exact rational.
    pub fn cut_value(&self, p: &Partition) -> Result<(u64, BigRational), HypergraphError> {
        let block_of = p.block_index(self.n)?;
        let k = p.blocks().len();
        if k < 2 {
            return Err(HypergraphError::TooFewBlocks(k));
        }
        let mut crossing = 0u64;
        for (e, w) in self.edges() {
            let b0 = block_of[e.vertices()[0] as usize];
            if e.vertices().iter().any(|&v| block_of[v as usize] != b0) {
                crossing += w;
            }
        }
        let normalized = BigRational::new(BigInt::from(crossing), BigInt::from(k as u64 - 1));
        Ok((crossing, normalized))
    }

    /// Parse the text format: header `n <n> r <r_max>`, then one edge per
    /// line `+ v1,v2,...,vk [weight]`.
    pub fn parse_text(input: &str) -> Result<(Hypergraph, u32), ParseError> {
        let mut lines = numbered_lines(input);
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| ParseError::new(1, 1, "missing header line"))?;
        let (n, r_max) = parse_header(lineno, header)?;
        let mut h = Hypergraph::new(n);
        for (lineno, line) in lines {
            let (op, edge, weight) = parse_edge_line(lineno, line, n, r_max)?;
            if op != '+' {
                return Err(ParseError::new(
                    lineno,
                    1,
                    "hypergraph files allow only '+' lines",
                ));
            }
            h.add_edge(edge, weight)
                .map_err(|e| ParseError::new(lineno, 1, e.to_string()))?;
        }
        Ok((h, r_max))
    }

    pub fn to_text(&self, r_max: u32) -> String {
        let mut out = format!("n {} r {}\n", self.n, r_max);
        for (e, w) in self.edges() {
            if w == 1 {
                out.push_str(&format!("+ {}\n", e));
            } else {
                out.push_str(&format!("+ {} {}\n", e, w));
            }
        }
        out
    }
}

pub(crate) fn numbered_lines(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_header(lineno: usize, line: &str) -> Result<(u32, u32), ParseError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "n" || parts[2] != "r" {
        return Err(ParseError::new(lineno, 1, "expected header `n <n> r <r_max>`"));
    }
    let n = parts[1]
        .parse::<u32>()
        .map_err(|_| ParseError::new(lineno, 3, "invalid vertex count"))?;
    let r = parts[3]
        .parse::<u32>()
        .map_err(|_| ParseError::new(lineno, 5, "invalid arity bound"))?;
    Ok((n, r))
}

pub(crate) fn parse_edge_line(
    lineno: usize,
    line: &str,
    n: u32,
    r_max: u32,
) -> Result<(char, Hyperedge, u64), ParseError> {
    let mut parts = line.split_whitespace();
    let op = parts
        .next()
        .ok_or_else(|| ParseError::new(lineno, 1, "empty edge line"))?;
    let op = match op {
        "+" => '+',
        "-" => '-',
        other => {
            return Err(ParseError::new(
                lineno,
                1,
                format!("expected '+' or '-', got '{other}'"),
            ))
        }
    };
    let verts = parts
        .next()
        .ok_or_else(|| ParseError::new(lineno, 2, "missing vertex list"))?;
    let mut vertices = Vec::new();
    for (i, tok) in verts.split(',').enumerate() {
        let v = tok
            .parse::<u32>()
            .map_err(|_| ParseError::new(lineno, i + 2, format!("invalid vertex '{tok}'")))?;
        vertices.push(v);
    }
    let edge = Hyperedge::new(vertices).map_err(|e| ParseError::new(lineno, 2, e.to_string()))?;
    edge.check_range(n)
        .map_err(|e| ParseError::new(lineno, 2, e.to_string()))?;
    if edge.arity() as u32 > r_max {
        return Err(ParseError::new(
            lineno,
            2,
            format!("arity {} exceeds r_max {}", edge.arity(), r_max),
        ));
    }
    let weight = match parts.next() {
        Some(tok) => tok
            .parse::<u64>()
            .map_err(|_| ParseError::new(lineno, 3, format!("invalid weight '{tok}'")))?,
        None => 1,
    };
    if parts.next().is_some() {
        return Err(ParseError::new(lineno, 4, "trailing tokens on edge line"));
    }
    Ok((op, edge, weight))
}

/// A disjoint grouping of vertices into nonempty blocks. When used as a
/// k-cut the blocks must cover all of [0, n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<u32>>,
}

impl Partition {
    /// Build a partition from blocks; each block is sorted, blocks are
    /// ordered by smallest element, disjointness is enforced.
    pub fn new(mut blocks: Vec<Vec<u32>>) -> Result<Self, HypergraphError> {
        for b in blocks.iter_mut() {
            if b.is_empty() {
                return Err(HypergraphError::EmptyBlock);
            }
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut seen = std::collections::BTreeSet::new();
        for b in &blocks {
            for &v in b {
                if !seen.insert(v) {
                    return Err(HypergraphError::OverlappingBlocks(v));
                }
            }
        }
        Ok(Partition { blocks })
    }

    pub fn singletons(n: u32) -> Self {
        Partition {
            blocks: (0..n).map(|v| vec![v]).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Require the partition to cover exactly [0, n) and return a
    /// vertex -> block-index table.
    pub fn block_index(&self, n: u32) -> Result<Vec<u32>, HypergraphError> {
        let mut idx = vec![u32::MAX; n as usize];
        for (bi, block) in self.blocks.iter().enumerate() {
            for &v in block {
                if v >= n {
                    return Err(HypergraphError::VertexOutOfRange { vertex: v, n });
                }
                idx[v as usize] = bi as u32;
            }
        }
        if let Some(v) = idx.iter().position(|&b| b == u32::MAX) {
            return Err(HypergraphError::IncompletePartition(v as u32));
        }
        Ok(idx)
    }

    /// Restricted-growth-string encoding relative to vertex order; used for
    /// the oracle's lexicographic tie-break.
    pub fn rgs(&self, n: u32) -> Result<Vec<u32>, HypergraphError> {
        let idx = self.block_index(n)?;
        let mut relabel = vec![u32::MAX; self.blocks.len()];
        let mut next = 0u32;
        let mut out = Vec::with_capacity(n as usize);
        for v in 0..n {
            let b = idx[v as usize] as usize;
            if relabel[b] == u32::MAX {
                relabel[b] = next;
                next += 1;
            }
            out.push(relabel[b]);
        }
        Ok(out)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let vs: Vec<String> = b.iter().map(|v| v.to_string()).collect();
                format!("{{{}}}", vs.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;

    fn edge(vs: &[u32]) -> Hyperedge {
        Hyperedge::new(vs.to_vec()).unwrap()
    }

    fn triangle() -> Hypergraph {
        let mut h = Hypergraph::new(3);
        h.add_edge(edge(&[0, 1]), 1).unwrap();
        h.add_edge(edge(&[1, 2]), 1).unwrap();
        h.add_edge(edge(&[0, 2]), 1).unwrap();
        h
    }

    #[test]
    fn canonical_id_examples() {
        assert_eq!(edge(&[0, 1]).canonical_id(4).unwrap().to_u64().unwrap(), 3);
        assert_eq!(edge(&[1, 3]).canonical_id(4).unwrap().to_u64().unwrap(), 10);
        assert_eq!(edge(&[0, 1, 2]).canonical_id(3).unwrap().to_u64().unwrap(), 7);
        assert!(edge(&[1, 4]).canonical_id(4).is_err());
    }

    #[test]
    fn canonical_id_is_injective_exhaustively() {
        // all hyperedges on up to 12 vertices have distinct ids
        let n = 12u32;
        let mut seen = std::collections::HashSet::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() < 2 {
                continue;
            }
            let vs: Vec<u32> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let id = edge(&vs).canonical_id(n).unwrap();
            assert!(seen.insert(id));
        }
        assert_eq!(seen.len(), (1usize << n) - 1 - n as usize);
    }

    #[test]
    fn id_roundtrip() {
        let e = edge(&[0, 3, 7]);
        let id = e.canonical_id(8).unwrap();
        assert_eq!(Hyperedge::from_canonical_id(&id, 8).unwrap(), e);
    }

    #[test]
    fn arity_one_rejected() {
        assert_eq!(
            Hyperedge::new(vec![3]),
            Err(HypergraphError::ArityTooSmall(1))
        );
        assert_eq!(
            Hyperedge::new(vec![3, 3]),
            Err(HypergraphError::DuplicateVertex(3))
        );
    }

    #[test]
    fn cut_value_triangle() {
        let h = triangle();
        let p = Partition::new(vec![vec![0], vec![1, 2]]).unwrap();
        let (w, norm) = h.cut_value(&p).unwrap();
        assert_eq!(w, 2);
        assert_eq!(norm, BigRational::from(BigInt::from(2)));

        let p3 = Partition::singletons(3);
        let (w, norm) = h.cut_value(&p3).unwrap();
        assert_eq!(w, 3);
        assert_eq!(norm, BigRational::new(BigInt::from(3), BigInt::from(2)));
    }

    #[test]
    fn cut_value_empty_hypergraph() {
        let h = Hypergraph::new(4);
        let p = Partition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let (w, norm) = h.cut_value(&p).unwrap();
        assert_eq!(w, 0);
        assert!(norm.is_zero());
    }

    #[test]
    fn cut_value_rejects_partial_partition() {
        let h = triangle();
        let p = Partition::new(vec![vec![0], vec![1]]).unwrap();
        assert!(h.cut_value(&p).is_err());
    }

    #[test]
    fn cut_value_linear_in_weights() {
        let h1 = triangle();
        let mut h2 = Hypergraph::new(3);
        h2.add_edge(edge(&[0, 1]), 5).unwrap();
        let u = h1.union(&h2);
        let p = Partition::new(vec![vec![0], vec![1, 2]]).unwrap();
        let (w1, _) = h1.cut_value(&p).unwrap();
        let (w2, _) = h2.cut_value(&p).unwrap();
        let (wu, _) = u.cut_value(&p).unwrap();
        assert_eq!(wu, w1 + w2);
    }

    #[test]
    fn contract_triangle_pair() {
        let h = triangle();
        let p = Partition::new(vec![vec![0, 1], vec![2]]).unwrap();
        let c = h.contract(&p).unwrap();
        assert_eq!(c.n(), 2);
        assert_eq!(c.distinct_edges(), 1);
        assert_eq!(c.weight_of(&edge(&[0, 1])), 2);
    }

    #[test]
    fn contract_by_singletons_is_identity_relabel() {
        let mut h = Hypergraph::new(3);
        h.add_edge(edge(&[0, 1, 2]), 1).unwrap();
        let c = h.contract(&Partition::singletons(3)).unwrap();
        assert_eq!(c, h);
    }

    #[test]
    fn contract_to_one_block_empties() {
        let h = triangle();
        let p = Partition::new(vec![vec![0, 1, 2]]).unwrap();
        let c = h.contract(&p).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn contract_then_cut_matches_original() {
        // block-respecting partitions: cut in the quotient equals cut in the
        // original, exhaustively on a small instance
        let mut h = Hypergraph::new(4);
        h.add_edge(edge(&[0, 1]), 2).unwrap();
        h.add_edge(edge(&[1, 2, 3]), 1).unwrap();
        h.add_edge(edge(&[2, 3]), 3).unwrap();
        let p = Partition::new(vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let c = h.contract(&p).unwrap();
        // every partition of the 3 super-vertices lifts to a block-respecting one
        let lift = |q: &Partition| {
            let blocks = q
                .blocks()
                .iter()
                .map(|b| b.iter().flat_map(|&sv| p.blocks()[sv as usize].clone()).collect())
                .collect();
            Partition::new(blocks).unwrap()
        };
        for q in crate::oracle::all_partitions(3) {
            if q.k() < 2 {
                continue;
            }
            let (wc, _) = c.cut_value(&q).unwrap();
            let (wo, _) = h.cut_value(&lift(&q)).unwrap();
            assert_eq!(wc, wo);
        }
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let h = triangle();
        let text = h.to_text(3);
        let (parsed, r) = Hypergraph::parse_text(&text).unwrap();
        assert_eq!(parsed, h);
        assert_eq!(r, 3);

        let bad = "n 3 r 3\n+ 0,0\n";
        let err = Hypergraph::parse_text(bad).unwrap_err();
        assert_eq!(err.line, 2);

        let bad2 = "n 3 r 2\n+ 0,1,2\n";
        assert!(Hypergraph::parse_text(bad2).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![0], vec![0, 1]]).is_err());
        assert!(Partition::new(vec![vec![]]).is_err());
        let p = Partition::new(vec![vec![2, 1], vec![0]]).unwrap();
        assert_eq!(p.blocks()[0], vec![0]);
        assert_eq!(p.rgs(3).unwrap(), vec![0, 1, 1]);
    }
}
