//! Shared generators for the integration suites: seeded random hypergraphs
//! (connected unless stated otherwise), planted instances, and dynamic
//! streams with a controlled deletion fraction.

#![allow(dead_code)]

use num::rational::BigRational;
use num::BigInt;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use cutsketch_core::hypergraph::{Hyperedge, Hypergraph, Partition};
use cutsketch_core::stream::StreamUpdate;

pub fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn edge(vs: &[u32]) -> Hyperedge {
    Hyperedge::new(vs.to_vec()).unwrap()
}

pub fn random_edge(rng: &mut impl Rng, n: u32, r_max: u32) -> Hyperedge {
    let arity = rng.gen_range(2..=r_max.min(n)) as usize;
    let mut vs: Vec<u32> = (0..n).collect();
    vs.shuffle(rng);
    vs.truncate(arity);
    Hyperedge::new(vs).unwrap()
}

/// Random connected unweighted hypergraph: a random spanning tree of
/// 2-edges plus random extra hyperedges, at most `m` distinct edges total.
pub fn random_connected(rng: &mut impl Rng, n: u32, r_max: u32, m: usize) -> Hypergraph {
    let mut h = Hypergraph::new(n);
    let mut order: Vec<u32> = (0..n).collect();
    order.shuffle(rng);
    for i in 1..n as usize {
        let a = order[i];
        let b = order[rng.gen_range(0..i)];
        let e = Hyperedge::new(vec![a.min(b), a.max(b)]).unwrap();
        if h.weight_of(&e) == 0 {
            h.add_edge(e, 1).unwrap();
        }
    }
    let mut guard = 0;
    while h.distinct_edges() < m && guard < 50 * m {
        guard += 1;
        let e = random_edge(rng, n, r_max);
        if h.weight_of(&e) == 0 {
            h.add_edge(e, 1).unwrap();
        }
    }
    h
}

/// sqrt(n) cliques of sqrt(n) vertices plus sqrt(n) transversal hyperedges
/// placing one vertex in each clique. Returns the hypergraph, the clique
/// partition, and the transversal edges.
pub fn planted_cliques(side: u32) -> (Hypergraph, Partition, Vec<Hyperedge>) {
    let n = side * side;
    let mut h = Hypergraph::new(n);
    for c in 0..side {
        let base = side * c;
        for a in 0..side {
            for b in a + 1..side {
                h.add_edge(edge(&[base + a, base + b]), 1).unwrap();
            }
        }
    }
    let mut transversals = Vec::new();
    for t in 0..side {
        let vs: Vec<u32> = (0..side).map(|c| side * c + (t + c) % side).collect();
        let e = Hyperedge::new(vs).unwrap();
        transversals.push(e.clone());
        h.add_edge(e, 1).unwrap();
    }
    let blocks: Vec<Vec<u32>> = (0..side).map(|c| (side * c..side * (c + 1)).collect()).collect();
    (h, Partition::new(blocks).unwrap(), transversals)
}

/// Random full partition of [0, n) into at least `min_blocks` blocks.
pub fn random_partition(rng: &mut impl Rng, n: u32, min_blocks: usize) -> Partition {
    loop {
        let k = rng.gen_range(min_blocks..=n as usize);
        let mut blocks = vec![Vec::new(); k];
        for v in 0..n {
            blocks[rng.gen_range(0..k)].push(v);
        }
        blocks.retain(|b| !b.is_empty());
        if blocks.len() >= min_blocks {
            return Partition::new(blocks).unwrap();
        }
    }
}

/// Crossing edges of `h` under `p`.
pub fn crossing_edges(h: &Hypergraph, p: &Partition) -> Vec<Hyperedge> {
    let idx = p.block_index(h.n()).unwrap();
    h.edges()
        .filter(|(e, _)| {
            let b0 = idx[e.vertices()[0] as usize];
            e.vertices().iter().any(|&v| idx[v as usize] != b0)
        })
        .map(|(e, _)| e.clone())
        .collect()
}

/// Dynamic stream: `inserts` insertions and `deletes` deletions of live
/// edges, shuffled subject to never deleting below zero. The deletion count
/// is met exactly, so deletes / (inserts + deletes) controls the fraction.
pub fn random_stream(
    rng: &mut impl Rng,
    n: u32,
    r_max: u32,
    inserts: usize,
    deletes: usize,
) -> Vec<StreamUpdate> {
    let mut updates = Vec::with_capacity(inserts + deletes);
    let mut live: Vec<Hyperedge> = Vec::new();
    let mut ins_left = inserts;
    let mut del_left = deletes;
    while ins_left > 0 || del_left > 0 {
        let do_delete = del_left > 0
            && !live.is_empty()
            && (ins_left == 0 || rng.gen_ratio(del_left as u32, (ins_left + del_left) as u32));
        if do_delete {
            let i = rng.gen_range(0..live.len());
            let e = live.swap_remove(i);
            updates.push(StreamUpdate::delete(e));
            del_left -= 1;
        } else {
            let e = random_edge(rng, n, r_max);
            live.push(e.clone());
            updates.push(StreamUpdate::insert(e));
            ins_left -= 1;
        }
    }
    updates
}

/// Net hypergraph of a stream.
pub fn stream_result(updates: &[StreamUpdate], n: u32) -> Hypergraph {
    let mut counts: std::collections::BTreeMap<Hyperedge, i64> = Default::default();
    for u in updates {
        *counts.entry(u.edge.clone()).or_insert(0) += u.delta();
    }
    let mut h = Hypergraph::new(n);
    for (e, w) in counts {
        assert!(w >= 0, "stream went negative");
        if w > 0 {
            h.add_edge(e, w as u64).unwrap();
        }
    }
    h
}
