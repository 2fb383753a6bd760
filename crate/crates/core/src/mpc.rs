//! Simulated MPC merge protocol over the vertex-incidence banks. Machines
//! encode their local shards, exchange per-vertex sketch fragments along a
//! tree schedule (one-shot regrouping when the machine count is below n,
//! the n-ary combining tree otherwise), and a coordinator decodes the
//! assembled bank. Communication is accounted in serialized bytes per
//! machine per round; shards are insert-only, so every partial sum's
//! serialization is bounded by the final per-vertex fragment, which the
//! accounting uses for intermediate rounds.

use std::collections::BTreeSet;

use crate::bank::{ConnectivityBank, SamplerBank};
use crate::config::SketchConfig;
use crate::error::{MpcError, StreamError};
use crate::hypergraph::Hyperedge;
use crate::sparsify::{sparsify, SparsifierOutput};

/// Result of one simulated run.
#[derive(Debug)]
pub struct MpcResult {
    pub bank: SamplerBank,
    pub conn: ConnectivityBank,
    pub sparsifier: SparsifierOutput,
    pub rounds: usize,
    pub peak_memory: u64,
}

/// Per-round, per-machine accounting: serialized state plus the larger of
/// inbox and outbox.
#[derive(Debug, Clone, Default)]
struct Usage {
    state: u64,
    inbox: u64,
    outbox: u64,
}

impl Usage {
    fn used(&self) -> u64 {
        self.state + self.inbox.max(self.outbox)
    }
}

fn shard_bytes(shard: &[Hyperedge]) -> u64 {
    shard.iter().map(|e| 8 + 4 * e.arity() as u64).sum()
}

/// Number of rounds the protocol takes: max(2, ceil(log_n(m))) for m total
/// edges on k = m/n machines; equivalently 1 + ceil(log_n(k)) when k >= n.
pub fn expected_rounds(n: u32, m: u64) -> usize {
    let n = n as u64;
    if m <= n * n {
        return 2;
    }
    let mut rounds = 0usize;
    let mut pow = 1u64;
    while pow < m {
        pow = pow.saturating_mul(n);
        rounds += 1;
    }
    rounds.max(2)
}

fn check_budget(
    round: usize,
    usages: &[Usage],
    budget: u64,
    peak: &mut u64,
) -> Result<(), MpcError> {
    for (machine, u) in usages.iter().enumerate() {
        let used = u.used();
        *peak = (*peak).max(used);
        if used > budget {
            return Err(MpcError::BudgetExceeded {
                round,
                machine,
                used,
                budget,
            });
        }
    }
    Ok(())
}

/// Simulate the protocol on `edge_shards` (a partition of the edge
/// multiset, insertions only) with the given per-machine memory budget in
/// bytes. Returns the coordinator's assembled banks, the decoded
/// sparsifier, the round count, and the peak per-machine usage.
pub fn mpc_simulate(
    edge_shards: &[Vec<Hyperedge>],
    config: &SketchConfig,
    memory_budget: u64,
) -> Result<MpcResult, MpcError> {
    if edge_shards.is_empty() {
        return Err(MpcError::NoShards);
    }
    let n = config.n;
    let k = edge_shards.len();
    let total_edges: u64 = edge_shards.iter().map(|s| s.len() as u64).sum();
    let distinct: BTreeSet<&Hyperedge> = edge_shards.iter().flatten().collect();
    if distinct.len() as u64 > config.m_max {
        return Err(MpcError::Stream(StreamError::TooManyEdges(config.m_max)));
    }

    // Pass A: encode machines one at a time, streaming their per-vertex
    // fragments into the coordinator accumulators and recording exact
    // fragment sizes for the accounting pass.
    let mut acc_bank = SamplerBank::new(config);
    let mut acc_conn = ConnectivityBank::new(config);
    let mut frag_sizes: Vec<Vec<u64>> = Vec::with_capacity(k);
    for shard in edge_shards {
        let mut bank = SamplerBank::new(config);
        let mut conn = ConnectivityBank::new(config);
        for e in shard {
            bank.encode_update(e, 1).map_err(StreamError::Sketch)?;
            conn.encode_update(e, 1).map_err(StreamError::Sketch)?;
        }
        let mut sizes = Vec::with_capacity(n as usize);
        for v in 0..n {
            let fb = bank.vertex_fragment(v);
            let fc = conn.vertex_fragment(v);
            sizes.push((fb.len() + fc.len()) as u64);
            acc_bank
                .absorb_vertex_fragment(&fb)
                .map_err(StreamError::Sketch)?;
            acc_conn
                .absorb_vertex_fragment(&fc)
                .map_err(StreamError::Sketch)?;
        }
        frag_sizes.push(sizes);
    }
    // final per-vertex fragment sizes: an upper bound on any insert-only
    // partial sum along the combining tree
    let final_frag: Vec<u64> = (0..n)
        .map(|v| (acc_bank.vertex_fragment(v).len() + acc_conn.vertex_fragment(v).len()) as u64)
        .collect();
    let full_bank_bytes: u64 = final_frag.iter().sum();

    let _ = total_edges;
    let mut peak = 0u64;
    let rounds = if (k as u64) < n as u64 {
        simulate_small(
            edge_shards,
            &frag_sizes,
            &final_frag,
            n,
            memory_budget,
            &mut peak,
            full_bank_bytes,
        )?
    } else {
        simulate_tree(
            edge_shards,
            &frag_sizes,
            &final_frag,
            n,
            memory_budget,
            &mut peak,
            full_bank_bytes,
        )?
    };

    let sparsifier = sparsify(&acc_bank, &acc_conn)?;
    Ok(MpcResult {
        bank: acc_bank,
        conn: acc_conn,
        sparsifier,
        rounds,
        peak_memory: peak,
    })
}

/// k < n: one regrouping round (vertex sketches scattered to their owner
/// machines) plus the recombination at the coordinator.
#[allow(clippy::needless_range_loop)]
fn simulate_small(
    shards: &[Vec<Hyperedge>],
    frag_sizes: &[Vec<u64>],
    final_frag: &[u64],
    n: u32,
    budget: u64,
    peak: &mut u64,
    full_bank_bytes: u64,
) -> Result<usize, MpcError> {
    let k = shards.len();
    let group = (n as usize).div_ceil(k);
    let owner = |v: usize| (v / group).min(k - 1);
    // round 1: every machine ships its fragment set; owners collect
    let mut usages = vec![Usage::default(); k];
    for (j, shard) in shards.iter().enumerate() {
        usages[j].state = shard_bytes(shard);
        usages[j].outbox = frag_sizes[j].iter().sum();
    }
    for v in 0..n as usize {
        let o = owner(v);
        for sizes in frag_sizes {
            usages[o].inbox += sizes[v];
        }
    }
    check_budget(1, &usages, budget, peak)?;
    // round 2: owners hold merged vertex sketches and ship them to the
    // coordinator (machine 0), which keeps its own share in place
    let mut usages = vec![Usage::default(); k];
    for v in 0..n as usize {
        let o = owner(v);
        usages[o].state += final_frag[v];
        if o != 0 {
            usages[o].outbox += final_frag[v];
            usages[0].inbox += final_frag[v];
        }
    }
    check_budget(2, &usages, budget, peak)?;
    // coordinator ends holding the complete bank
    *peak = (*peak).max(full_bank_bytes);
    if full_bank_bytes > budget {
        return Err(MpcError::BudgetExceeded {
            round: 2,
            machine: 0,
            used: full_bank_bytes,
            budget,
        });
    }
    Ok(2)
}

/// k >= n: scatter by vertex into groups of ceil(k/n) machines, then n-ary
/// combining rounds until one machine per vertex remains, then the final
/// send to the coordinator. Group sizes round up; surplus slots idle.
#[allow(clippy::needless_range_loop)]
fn simulate_tree(
    shards: &[Vec<Hyperedge>],
    frag_sizes: &[Vec<u64>],
    final_frag: &[u64],
    n: u32,
    budget: u64,
    peak: &mut u64,
    full_bank_bytes: u64,
) -> Result<usize, MpcError> {
    let k = shards.len();
    let nn = n as usize;
    let g1 = k.div_ceil(nn);
    // round 1: scatter
    let mut usages = vec![Usage::default(); k.max(nn * g1)];
    for (j, shard) in shards.iter().enumerate() {
        usages[j].state = shard_bytes(shard);
        usages[j].outbox = frag_sizes[j].iter().sum();
    }
    for v in 0..nn {
        for (j, sizes) in frag_sizes.iter().enumerate() {
            let target = g1 * v + (j % g1);
            usages[target].inbox += sizes[v];
        }
    }
    check_budget(1, &usages, budget, peak)?;

    let mut round = 1usize;
    let mut group = g1;
    while group > 1 {
        let next = group.div_ceil(nn);
        round += 1;
        let mut usages = vec![Usage::default(); nn * group];
        for v in 0..nn {
            for pos in 0..group {
                let machine = group * v + pos;
                // held partial sum, bounded by the final fragment
                usages[machine].state = final_frag[v];
                if pos >= next {
                    usages[machine].outbox = final_frag[v];
                }
                if pos < next {
                    // senders mapping to this slot, excluding itself
                    let senders = group / next + usize::from(pos < group % next) - 1;
                    usages[machine].inbox = final_frag[v] * senders as u64;
                }
            }
        }
        check_budget(round, &usages, budget, peak)?;
        group = next;
    }

    // final round: the n vertex representatives send to the coordinator
    round += 1;
    let mut usages = vec![Usage::default(); nn.max(1)];
    for v in 0..nn {
        usages[v].state = final_frag[v];
        usages[v].outbox = final_frag[v];
        usages[0].inbox += final_frag[v];
    }
    check_budget(round, &usages, budget, peak)?;
    *peak = (*peak).max(full_bank_bytes);
    if full_bank_bytes > budget {
        return Err(MpcError::BudgetExceeded {
            round,
            machine: 0,
            used: full_bank_bytes,
            budget,
        });
    }
    Ok(round)
}
