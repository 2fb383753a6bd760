//! Brute-force ground truth: minimum normalized k-cut, exact k-cut
//! strengths by two independent routes, cut census, and the sparsifier
//! verifier. Everything here enumerates partitions, so instance sizes are
//! capped; the decoder and the acceptance suite lean on this module for
//! every probabilistic check.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{BigInt, One, Signed};

use crate::error::OracleError;
use crate::hypergraph::{Hyperedge, Hypergraph, Partition};

/// Default cap for full k-cut partition enumeration (Bell(12) ~ 4.2M).
pub const DEFAULT_VERTEX_CAP: u32 = 12;
/// Default cap for 2-cut-only enumeration (2^(n-1) bipartitions).
pub const DEFAULT_TWOCUT_CAP: u32 = 20;

/// Per-edge exact strengths of a hypergraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrengthAssignment {
    per_edge: BTreeMap<Hyperedge, BigRational>,
}

impl StrengthAssignment {
    pub fn strength(&self, e: &Hyperedge) -> Option<&BigRational> {
        self.per_edge.get(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Hyperedge, &BigRational)> {
        self.per_edge.iter()
    }

    /// Strength of a vertex set: the minimum strength over edges of H[S],
    /// with strengths taken from this (global) assignment. None when H[S]
    /// has no edges.
    pub fn component_strength(&self, s: &[u32]) -> Option<&BigRational> {
        let set: std::collections::BTreeSet<u32> = s.iter().copied().collect();
        self.per_edge
            .iter()
            .filter(|(e, _)| e.vertices().iter().all(|v| set.contains(v)))
            .map(|(_, lam)| lam)
            .min()
    }
}

/// Iterate every set partition of [0, n) in restricted-growth-string
/// lexicographic order (including the single-block partition).
pub fn all_partitions(n: u32) -> PartitionIter {
    PartitionIter::new(n)
}

pub struct PartitionIter {
    n: usize,
    rgs: Vec<u32>,
    maxes: Vec<u32>,
    done: bool,
}

impl PartitionIter {
    fn new(n: u32) -> Self {
        PartitionIter {
            n: n as usize,
            rgs: vec![0; n as usize],
            maxes: vec![0; n as usize],
            done: n == 0,
        }
    }

    fn current(&self) -> Partition {
        let k = self.rgs.iter().copied().max().unwrap_or(0) as usize + 1;
        let mut blocks = vec![Vec::new(); k];
        for (v, &b) in self.rgs.iter().enumerate() {
            blocks[b as usize].push(v as u32);
        }
        Partition::new(blocks).expect("rgs partition valid")
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let out = self.current();
        // advance restricted growth string
        let n = self.n;
        let mut i = n;
        loop {
            if i == 1 {
                self.done = true;
                break;
            }
            i -= 1;
            let cap = self.maxes[i - 1] + 1;
            if self.rgs[i] < cap {
                self.rgs[i] += 1;
                self.maxes[i] = self.maxes[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.maxes[j] = self.maxes[j - 1];
                }
                break;
            }
        }
        Some(out)
    }
}

fn check_cap(n: u32, cap: u32) -> Result<(), OracleError> {
    if n > cap {
        return Err(OracleError::CapExceeded { n, cap });
    }
    Ok(())
}

/// Minimum normalized k-cut with a witnessing partition. Ties broken by
/// smallest k, then lexicographic restricted-growth string.
pub fn min_normalized_kcut(
    h: &Hypergraph,
    cap: u32,
) -> Result<(BigRational, Partition), OracleError> {
    check_cap(h.n(), cap)?;
    if h.n() < 2 {
        return Err(OracleError::DegenerateInstance);
    }
    let mut best: Option<(BigRational, usize, Partition)> = None;
    for p in all_partitions(h.n()) {
        let k = p.k();
        if k < 2 {
            continue;
        }
        let (_, norm) = h.cut_value(&p).expect("full partition");
        let better = match &best {
            None => true,
            // strict improvement on value, then on k; RGS order handles the
            // lexicographic tie-break because we enumerate in that order
            Some((bv, bk, _)) => norm < *bv || (norm == *bv && k < *bk),
        };
        if better {
            best = Some((norm, k, p));
        }
    }
    let (phi, _, p) = best.expect("n >= 2 has a 2-partition");
    Ok((phi, p))
}

/// Recursive peeling per the strength definition: assign the minimum
/// normalized k-cut value to its crossing edges, then recurse into each
/// block's induced sub-hypergraph.
pub fn strength_recursive(h: &Hypergraph, cap: u32) -> Result<StrengthAssignment, OracleError> {
    check_cap(h.n(), cap)?;
    let mut per_edge = BTreeMap::new();
    let vertices: Vec<u32> = (0..h.n()).collect();
    peel(h, &vertices, &mut per_edge, cap)?;
    Ok(StrengthAssignment { per_edge })
}

fn peel(
    h: &Hypergraph,
    subset: &[u32],
    out: &mut BTreeMap<Hyperedge, BigRational>,
    cap: u32,
) -> Result<(), OracleError> {
    let sub = h.induced(subset);
    if sub.is_empty() || subset.len() < 2 {
        return Ok(());
    }
    let (phi, witness) = min_cut_on_subset(&sub, subset, cap)?;
    let block_of: BTreeMap<u32, usize> = witness
        .iter()
        .enumerate()
        .flat_map(|(bi, b)| b.iter().map(move |&v| (v, bi)))
        .collect();
    for (e, _) in sub.edges() {
        let b0 = block_of[&e.vertices()[0]];
        if e.vertices().iter().any(|v| block_of[v] != b0) {
            out.insert(e.clone(), phi.clone());
        }
    }
    for block in &witness {
        peel(h, block, out, cap)?;
    }
    Ok(())
}

/// Minimum normalized k-cut restricted to partitions of `subset`, with the
/// same tie-break as `min_normalized_kcut`. Returns blocks as global ids.
fn min_cut_on_subset(
    sub: &Hypergraph,
    subset: &[u32],
    _cap: u32,
) -> Result<(BigRational, Vec<Vec<u32>>), OracleError> {
    let m = subset.len() as u32;
    let mut best: Option<(BigRational, usize, Vec<Vec<u32>>)> = None;
    for p in all_partitions(m) {
        let k = p.k();
        if k < 2 {
            continue;
        }
        // relabel local blocks back to global vertex ids
        let blocks: Vec<Vec<u32>> = p
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&i| subset[i as usize]).collect())
            .collect();
        let mut crossing = 0u64;
        let block_of: BTreeMap<u32, usize> = blocks
            .iter()
            .enumerate()
            .flat_map(|(bi, b)| b.iter().map(move |&v| (v, bi)))
            .collect();
        for (e, w) in sub.edges() {
            let b0 = block_of[&e.vertices()[0]];
            if e.vertices().iter().any(|v| block_of[v] != b0) {
                crossing += w;
            }
        }
        let norm = BigRational::new(BigInt::from(crossing), BigInt::from(k as u64 - 1));
        let better = match &best {
            None => true,
            Some((bv, bk, _)) => norm < *bv || (norm == *bv && k < *bk),
        };
        if better {
            best = Some((norm, k, blocks));
        }
    }
    let (phi, _, blocks) = best.ok_or(OracleError::DegenerateInstance)?;
    Ok((phi, blocks))
}

/// The characterization route: lambda_e = max over S containing e of
/// Phi(H[S]). Must agree with `strength_recursive`.
pub fn strength_characterization(
    h: &Hypergraph,
    e: &Hyperedge,
    cap: u32,
) -> Result<BigRational, OracleError> {
    check_cap(h.n(), cap)?;
    if h.weight_of(e) == 0 {
        return Err(OracleError::EdgeAbsent);
    }
    let others: Vec<u32> = (0..h.n()).filter(|v| !e.contains(*v)).collect();
    let mut best: Option<BigRational> = None;
    for mask in 0u64..(1 << others.len()) {
        let mut s: Vec<u32> = e.vertices().to_vec();
        for (i, &v) in others.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.push(v);
            }
        }
        s.sort_unstable();
        let sub = h.induced(&s);
        let (phi, _) = min_cut_on_subset(&sub, &s, cap)?;
        if best.as_ref().is_none_or(|b| phi > *b) {
            best = Some(phi);
        }
    }
    Ok(best.expect("at least S = e"))
}

/// All edges' characterization strengths at once, sharing one memo table of
/// Phi(H[S]) over vertex subsets; used by the acceptance corpus runs.
pub fn characterization_all(
    h: &Hypergraph,
    cap: u32,
) -> Result<StrengthAssignment, OracleError> {
    check_cap(h.n(), cap)?;
    let n = h.n();
    assert!(n <= 20, "subset memoization limited to small n");
    let mut phi_by_mask: Vec<Option<BigRational>> = vec![None; 1 << n];
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let s: Vec<u32> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let sub = h.induced(&s);
        let (phi, _) = min_cut_on_subset(&sub, &s, cap)?;
        phi_by_mask[mask as usize] = Some(phi);
    }
    let full: u32 = (1u32 << n) - 1;
    let mut per_edge = BTreeMap::new();
    for (e, _) in h.edges() {
        let emask: u32 = e.vertices().iter().map(|&v| 1u32 << v).sum();
        // iterate supersets of emask
        let mut best: Option<&BigRational> = None;
        let free = full & !emask;
        let mut sub = 0u32;
        loop {
            let mask = emask | sub;
            if let Some(phi) = &phi_by_mask[mask as usize] {
                if best.is_none_or(|b| phi > b) {
                    best = Some(phi);
                }
            }
            if sub == free {
                break;
            }
            sub = (sub.wrapping_sub(free)) & free;
        }
        per_edge.insert(e.clone(), best.expect("S = e exists").clone());
    }
    Ok(StrengthAssignment { per_edge })
}

/// Number of partitions (any k >= 2) whose un-normalized crossing weight is
/// at most t * Phi(H).
pub fn count_small_kcuts(h: &Hypergraph, t: &BigRational, cap: u32) -> Result<u64, OracleError> {
    check_cap(h.n(), cap)?;
    let (phi, _) = min_normalized_kcut(h, cap)?;
    let bound = t * phi;
    let mut count = 0u64;
    for p in all_partitions(h.n()) {
        if p.k() < 2 {
            continue;
        }
        let (w, _) = h.cut_value(&p).expect("full partition");
        if BigRational::from(BigInt::from(w)) <= bound {
            count += 1;
        }
    }
    Ok(count)
}

/// Every edge with strength at most w. Cardinality obeys the (n-1)*w bound
/// on unweighted instances.
pub fn edges_below_strength(
    h: &Hypergraph,
    w: &BigRational,
    cap: u32,
) -> Result<Vec<Hyperedge>, OracleError> {
    let strengths = strength_recursive(h, cap)?;
    Ok(strengths
        .iter()
        .filter(|(_, lam)| *lam <= w)
        .map(|(e, _)| e.clone())
        .collect())
}

/// Outcome of sparsifier verification.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub ok: bool,
    /// Ratio (sparsifier weight / original weight) furthest from 1 over all
    /// checked cuts with nonzero original weight; None when no cut was
    /// comparable.
    pub worst_ratio: Option<BigRational>,
    /// A cut where original weight is zero but the sparsifier is not (an
    /// automatic failure), if any.
    pub zero_mismatch: bool,
    pub cuts_checked: u64,
}

/// Check every (k-)cut of `hs` against `h` at multiplicative tolerance eps.
/// With `kcuts` false only bipartitions are enumerated (n <= twocut_cap);
/// with it true all partitions are (n <= vertex_cap).
pub fn verify_sparsifier(
    h: &Hypergraph,
    hs: &Hypergraph,
    eps: &BigRational,
    kcuts: bool,
    vertex_cap: u32,
    twocut_cap: u32,
) -> Result<VerifyReport, OracleError> {
    let n = h.n();
    if hs.n() != n {
        return Err(OracleError::DegenerateInstance);
    }
    check_cap(n, if kcuts { vertex_cap } else { twocut_cap })?;
    let mut report = VerifyReport {
        ok: true,
        worst_ratio: None,
        zero_mismatch: false,
        cuts_checked: 0,
    };
    let one = BigRational::one();
    let lo = &one - eps;
    let hi = &one + eps;
    let check = |worig: u64, wsp: u64, report: &mut VerifyReport| {
        report.cuts_checked += 1;
        if worig == 0 {
            if wsp != 0 {
                report.ok = false;
                report.zero_mismatch = true;
            }
            return;
        }
        let ratio = BigRational::new(BigInt::from(wsp), BigInt::from(worig));
        if ratio < lo || ratio > hi {
            report.ok = false;
        }
        let dist = (&ratio - &one).abs();
        let replace = match &report.worst_ratio {
            None => true,
            Some(r) => (r - &one).abs() < dist,
        };
        if replace {
            report.worst_ratio = Some(ratio);
        }
    };
    if kcuts {
        for p in all_partitions(n) {
            if p.k() < 2 {
                continue;
            }
            let (worig, _) = h.cut_value(&p).expect("full partition");
            let (wsp, _) = hs.cut_value(&p).expect("full partition");
            check(worig, wsp, &mut report);
        }
    } else {
        for mask in 1u64..(1u64 << (n - 1)) {
            let side: Vec<u32> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let rest: Vec<u32> = (0..n).filter(|&v| mask >> v & 1 == 0).collect();
            let p = Partition::new(vec![side, rest]).expect("bipartition");
            let (worig, _) = h.cut_value(&p).expect("full partition");
            let (wsp, _) = hs.cut_value(&p).expect("full partition");
            check(worig, wsp, &mut report);
        }
    }
    if report.cuts_checked > 0 && report.worst_ratio.is_none() && !report.zero_mismatch {
        // all cuts empty in both: identity at every cut
        report.worst_ratio = Some(one);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Zero;

    fn edge(vs: &[u32]) -> Hyperedge {
        Hyperedge::new(vs.to_vec()).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn triangle() -> Hypergraph {
        let mut h = Hypergraph::new(3);
        for e in [[0, 1], [1, 2], [0, 2]] {
            h.add_edge(edge(&e), 1).unwrap();
        }
        h
    }

    fn k4() -> Hypergraph {
        let mut h = Hypergraph::new(4);
        for a in 0..4u32 {
            for b in a + 1..4 {
                h.add_edge(edge(&[a, b]), 1).unwrap();
            }
        }
        h
    }

    /// Two triangles {0,1,2} and {3,4,5} joined by bridge edge {2,3}.
    fn joined_triangles() -> Hypergraph {
        let mut h = Hypergraph::new(6);
        for e in [[0, 1], [1, 2], [0, 2], [3, 4], [4, 5], [3, 5], [2, 3]] {
            h.add_edge(edge(&e), 1).unwrap();
        }
        h
    }

    #[test]
    fn partition_count_matches_bell_numbers() {
        let bell = [1u64, 1, 2, 5, 15, 52, 203, 877];
        for n in 1..8u32 {
            assert_eq!(all_partitions(n).count() as u64, bell[n as usize]);
        }
    }

    #[test]
    fn min_cut_triangle() {
        let (phi, p) = min_normalized_kcut(&triangle(), 12).unwrap();
        assert_eq!(phi, rat(3, 2));
        assert_eq!(p, Partition::singletons(3));
    }

    #[test]
    fn min_cut_single_hyperedge() {
        let mut h = Hypergraph::new(3);
        h.add_edge(edge(&[0, 1, 2]), 1).unwrap();
        let (phi, p) = min_normalized_kcut(&h, 12).unwrap();
        assert_eq!(phi, rat(1, 2));
        assert_eq!(p, Partition::singletons(3));
    }

    #[test]
    fn min_cut_k4() {
        let (phi, p) = min_normalized_kcut(&k4(), 12).unwrap();
        assert_eq!(phi, rat(2, 1));
        assert_eq!(p, Partition::singletons(4));
    }

    #[test]
    fn strengths_triangle() {
        let s = strength_recursive(&triangle(), 12).unwrap();
        for e in [[0, 1], [1, 2], [0, 2]] {
            assert_eq!(s.strength(&edge(&e)).unwrap(), &rat(3, 2));
        }
    }

    #[test]
    fn strengths_path() {
        let mut h = Hypergraph::new(3);
        h.add_edge(edge(&[0, 1]), 1).unwrap();
        h.add_edge(edge(&[1, 2]), 1).unwrap();
        let s = strength_recursive(&h, 12).unwrap();
        assert_eq!(s.strength(&edge(&[0, 1])).unwrap(), &rat(1, 1));
        assert_eq!(s.strength(&edge(&[1, 2])).unwrap(), &rat(1, 1));
    }

    #[test]
    fn strengths_joined_triangles() {
        let s = strength_recursive(&joined_triangles(), 12).unwrap();
        assert_eq!(s.strength(&edge(&[2, 3])).unwrap(), &rat(1, 1));
        for e in [[0, 1], [1, 2], [0, 2], [3, 4], [4, 5], [3, 5]] {
            assert_eq!(s.strength(&edge(&e)).unwrap(), &rat(3, 2));
        }
    }

    #[test]
    fn characterization_matches_examples() {
        let h = joined_triangles();
        assert_eq!(strength_characterization(&h, &edge(&[2, 3]), 12).unwrap(), rat(1, 1));
        assert_eq!(strength_characterization(&h, &edge(&[0, 1]), 12).unwrap(), rat(3, 2));
        let t = triangle();
        assert_eq!(strength_characterization(&t, &edge(&[0, 1]), 12).unwrap(), rat(3, 2));
        assert!(strength_characterization(&t, &edge(&[0, 1, 2]), 12).is_err());
    }

    #[test]
    fn characterization_all_agrees_with_recursive() {
        let h = joined_triangles();
        let rec = strength_recursive(&h, 12).unwrap();
        let chr = characterization_all(&h, 12).unwrap();
        for (e, lam) in rec.iter() {
            assert_eq!(chr.strength(e).unwrap(), lam);
        }
    }

    #[test]
    fn count_small_kcuts_triangle() {
        let h = triangle();
        assert_eq!(count_small_kcuts(&h, &rat(1, 1), 12).unwrap(), 0);
        assert_eq!(count_small_kcuts(&h, &rat(2, 1), 12).unwrap(), 4);
        // t*Phi >= total weight: every nontrivial partition qualifies
        assert_eq!(count_small_kcuts(&h, &rat(2, 1), 12).unwrap(), 4); // Bell(3)-1
    }

    #[test]
    fn edges_below_strength_examples() {
        let t = triangle();
        assert!(edges_below_strength(&t, &rat(1, 1), 12).unwrap().is_empty());
        let all = edges_below_strength(&t, &rat(3, 2), 12).unwrap();
        assert_eq!(all.len(), 3);
        // counting bound (n-1)*w = 2 * 3/2 = 3
        assert!(all.len() as u64 <= 3);

        let j = joined_triangles();
        let low = edges_below_strength(&j, &rat(1, 1), 12).unwrap();
        assert_eq!(low, vec![edge(&[2, 3])]);
    }

    #[test]
    fn verify_identity() {
        let h = joined_triangles();
        let report = verify_sparsifier(&h, &h, &rat(0, 1), true, 12, 20).unwrap();
        assert!(report.ok);
        assert_eq!(report.worst_ratio.unwrap(), rat(1, 1));
    }

    #[test]
    fn verify_exact_reweighting_of_parallel_pairs() {
        // a multigraph of duplicated edges; keep one copy at weight 2
        let mut h = Hypergraph::new(4);
        let mut hs = Hypergraph::new(4);
        for e in [[0u32, 1], [1, 2], [2, 3]] {
            h.add_edge(edge(&e), 2).unwrap();
            hs.add_edge(edge(&e), 2).unwrap(); // weight 2 = 2 * one copy
        }
        let report = verify_sparsifier(&h, &hs, &rat(0, 1), true, 12, 20).unwrap();
        assert!(report.ok);
    }

    #[test]
    fn verify_detects_bad_sparsifier() {
        let h = joined_triangles();
        let mut hs = h.clone();
        hs.remove_edge(&edge(&[2, 3]), 1); // drops the bridge entirely
        let report = verify_sparsifier(&h, &hs, &rat(1, 2), true, 12, 20).unwrap();
        assert!(!report.ok);
    }

    #[test]
    fn strengths_ignore_isolated_vertices() {
        // triangle on {0,1,2} with vertex 3 isolated: min cut is 0 but
        // strengths still come out as 3/2
        let mut h = Hypergraph::new(4);
        for e in [[0, 1], [1, 2], [0, 2]] {
            h.add_edge(edge(&e), 1).unwrap();
        }
        let (phi, _) = min_normalized_kcut(&h, 12).unwrap();
        assert!(phi.is_zero());
        let s = strength_recursive(&h, 12).unwrap();
        assert_eq!(s.strength(&edge(&[0, 1])).unwrap(), &rat(3, 2));
        let c = characterization_all(&h, 12).unwrap();
        assert_eq!(c.strength(&edge(&[0, 1])).unwrap(), &rat(3, 2));
    }

    #[test]
    fn cap_is_enforced() {
        let h = Hypergraph::new(13);
        assert!(matches!(
            min_normalized_kcut(&h, 12),
            Err(OracleError::CapExceeded { .. })
        ));
    }

    #[test]
    fn component_strength_on_demand() {
        let j = joined_triangles();
        let s = strength_recursive(&j, 12).unwrap();
        assert_eq!(s.component_strength(&[0, 1, 2]).unwrap(), &rat(3, 2));
        assert_eq!(s.component_strength(&[0, 1, 2, 3]).unwrap(), &rat(1, 1));
        assert!(s.component_strength(&[0, 3]).is_none());
    }

    /// Small deterministic pseudo-random instance pool for the closure
    /// properties below.
    fn pool(seed: u64, n: u32, m: usize) -> Hypergraph {
        let mut h = Hypergraph::new(n);
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        // spanning path first so the instance is connected
        for v in 1..n {
            h.add_edge(edge(&[v - 1, v]), 1).unwrap();
        }
        while h.distinct_edges() < m {
            let arity = 2 + (next() % 3) as u32;
            let mut vs: Vec<u32> = (0..n).collect();
            for i in (1..vs.len()).rev() {
                vs.swap(i, (next() % (i as u64 + 1)) as usize);
            }
            vs.truncate(arity.min(n) as usize);
            let e = Hyperedge::new(vs).unwrap();
            if h.weight_of(&e) == 0 {
                h.add_edge(e, 1).unwrap();
            }
        }
        h
    }

    #[test]
    fn adding_edges_never_decreases_strengths() {
        for seed in 0..20u64 {
            let n = 4 + (seed % 3) as u32;
            let h = pool(seed, n, 6 + (seed % 5) as usize);
            let before = strength_recursive(&h, 12).unwrap();
            // add one fresh edge
            let mut grown = h.clone();
            let mut added = false;
            'outer: for a in 0..n {
                for b in a + 1..n {
                    for c in b + 1..n {
                        let e = edge(&[a, b, c]);
                        if grown.weight_of(&e) == 0 {
                            grown.add_edge(e, 1).unwrap();
                            added = true;
                            break 'outer;
                        }
                    }
                }
            }
            if !added {
                continue;
            }
            let after = strength_recursive(&grown, 12).unwrap();
            for (e, lam) in before.iter() {
                assert!(
                    after.strength(e).unwrap() >= lam,
                    "seed {seed}: strength of {e} dropped"
                );
            }
        }
    }

    #[test]
    fn removal_closure_keeps_residual_strong() {
        // after deleting every edge of strength <= w, all survivors have
        // strength >= w in the residual
        for seed in 20..40u64 {
            let n = 5 + (seed % 2) as u32;
            let h = pool(seed, n, 8);
            let strengths = strength_recursive(&h, 12).unwrap();
            for w in [rat(1, 1), rat(3, 2)] {
                let low = edges_below_strength(&h, &w, 12).unwrap();
                let mut residual = h.clone();
                for e in &low {
                    residual.remove_edge(e, u64::MAX);
                }
                if residual.is_empty() {
                    continue;
                }
                let res_strengths = strength_recursive(&residual, 12).unwrap();
                for (e, lam) in res_strengths.iter() {
                    assert!(
                        lam >= &w,
                        "residual edge {e} has strength {lam} < {w} (was {:?})",
                        strengths.strength(e)
                    );
                }
            }
        }
    }

    #[test]
    fn union_closure_over_a_strong_bridge() {
        // two K4 blocks (strength 2) joined by a heavy bridge of weight 2:
        // the bridge's own strength is 2, so the union must have component
        // strength >= 2 as well
        let mut h = Hypergraph::new(8);
        for base in [0u32, 4] {
            for a in 0..4u32 {
                for b in a + 1..4 {
                    h.add_edge(edge(&[base + a, base + b]), 1).unwrap();
                }
            }
        }
        h.add_edge(edge(&[3, 4]), 2).unwrap();
        let s = strength_recursive(&h, 12).unwrap();
        assert_eq!(s.strength(&edge(&[3, 4])).unwrap(), &rat(2, 1));
        let union_strength = s.component_strength(&(0..8).collect::<Vec<_>>()).unwrap();
        assert!(union_strength >= &rat(2, 1));
    }
}
