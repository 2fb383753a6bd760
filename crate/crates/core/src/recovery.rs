//! Decode-time recovery against a frozen bank: the per-level iterative
//! sweep over fingerprint rates, the nested-level wrapper, and
//! unique-representative accounting. Exhausted verdicts are anchored at
//! fingerprint level 0 / rate 1, where the component sampler sees the true
//! crossing support; saturation credits each recovered edge to exactly one
//! incident component.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num::rational::BigRational;
use num::{BigInt, Zero};

use crate::bank::{coefficient_sum, PairDecode, SamplerBank};
use crate::hypergraph::{Hyperedge, Partition};

/// Per-component result of a recovery call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Every incident crossing edge (at this call's level semantics) is in
    /// the recovered set.
    Exhausted,
    /// At least phi*log(n) edges were credited to this component as unique
    /// representative.
    Saturated { credited: u64 },
    /// Budget ran out before either condition was met.
    Open { credited: u64 },
}

impl Verdict {
    pub fn is_exhausted(&self) -> bool {
        matches!(self, Verdict::Exhausted)
    }
    pub fn is_saturated(&self) -> bool {
        matches!(self, Verdict::Saturated { .. })
    }
}

/// Observability counters, dumped as line-oriented text on request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecoveryDiagnostics {
    pub opens: u64,
    pub empties: u64,
    pub fails: u64,
    pub inconsistent: u64,
    pub recovered_edges: u64,
    pub reps_consumed: u64,
    /// (level, rate) -> (opens, recovered)
    pub per_family: BTreeMap<(u32, u32), (u64, u64)>,
}

impl RecoveryDiagnostics {
    pub fn absorb(&mut self, other: &RecoveryDiagnostics) {
        self.opens += other.opens;
        self.empties += other.empties;
        self.fails += other.fails;
        self.inconsistent += other.inconsistent;
        self.recovered_edges += other.recovered_edges;
        self.reps_consumed += other.reps_consumed;
        for (k, (o, r)) in &other.per_family {
            let e = self.per_family.entry(*k).or_insert((0, 0));
            e.0 += o;
            e.1 += r;
        }
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "opens {} empties {} fails {} inconsistent {} recovered {} reps {}",
            self.opens, self.empties, self.fails, self.inconsistent, self.recovered_edges,
            self.reps_consumed
        );
        for ((level, rate), (o, r)) in &self.per_family {
            let _ = writeln!(out, "level {level} rate {rate}: opens {o} recovered {r}");
        }
        out
    }
}

/// Outcome of one recovery call over a partition.
#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    /// Verdict per block of the partition, in block order.
    pub verdicts: Vec<Verdict>,
    /// Newly recovered edges with decoded multiplicities (disjoint from the
    /// `already` set passed in).
    pub recovered: BTreeMap<Hyperedge, i64>,
    /// Injective edge -> component-index crediting among the recovered set.
    pub credits: BTreeMap<Hyperedge, usize>,
    pub diagnostics: RecoveryDiagnostics,
}

/// Tracks the next unopened repetition per (stage, level, rate); recovered
/// edges are only ever subtracted from repetitions that have not been
/// opened yet, so the rep pool is consumed monotonically across calls.
#[derive(Debug, Clone, Default)]
pub struct RepCursor {
    next: BTreeMap<(u32, u32, u32), u32>,
}

impl RepCursor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Claim the next unopened family index for (stage, level, rate), or
    /// None when the budget is exhausted.
    fn claim(&mut self, bank: &SamplerBank, stage: u32, level: u32, rate: u32) -> Option<usize> {
        let range = bank.family_range(stage, level, rate);
        let len = range.len() as u32;
        let slot = self.next.entry((stage, level, rate)).or_insert(0);
        if *slot >= len {
            return None;
        }
        let idx = range.start + *slot as usize;
        *slot += 1;
        Some(idx)
    }

    pub fn remaining(&self, bank: &SamplerBank, stage: u32, level: u32, rate: u32) -> u32 {
        let len = bank.family_range(stage, level, rate).len() as u32;
        let used = self.next.get(&(stage, level, rate)).copied().unwrap_or(0);
        len - used
    }
}

/// Saturation threshold phi*log2(n) rounded up to an integer count.
pub fn saturation_threshold(phi: &BigRational, log_n: u32) -> u64 {
    let thr = phi * BigRational::from(BigInt::from(log_n as u64));
    if thr <= BigRational::zero() {
        return 1;
    }
    let ceil = thr.ceil().to_integer();
    u64::try_from(ceil.magnitude().clone()).unwrap_or(u64::MAX).max(1)
}

struct CreditState<'a> {
    counts: Vec<u64>,
    map: &'a mut BTreeMap<Hyperedge, usize>,
    threshold: u64,
}

/// One sweep at a fixed (stage, fingerprint-level): for each unopened
/// repetition and each rate, subtract everything known, sum per-block
/// samplers, decode, and map fingerprint ids back to exact edges via the
/// companion testers.
#[allow(clippy::too_many_arguments)]
pub fn iterative_recovery(
    bank: &SamplerBank,
    cursor: &mut RepCursor,
    stage: u32,
    level: u32,
    partition: &Partition,
    already: &BTreeMap<Hyperedge, i64>,
    phi: &BigRational,
) -> RecoveryOutcome {
    let mut recovered = BTreeMap::new();
    let mut credits = BTreeMap::new();
    let threshold = saturation_threshold(phi, bank.config().log_n());
    let mut state = CreditState {
        counts: vec![0; partition.k()],
        map: &mut credits,
        threshold,
    };
    let mut exhausted = vec![false; partition.k()];
    let diagnostics = sweep_level(
        bank,
        cursor,
        stage,
        level,
        partition,
        already,
        &mut recovered,
        &mut state,
        &mut exhausted,
    );
    let verdicts = final_verdicts(&state.counts, threshold, &exhausted);
    RecoveryOutcome {
        verdicts,
        recovered,
        credits,
        diagnostics,
    }
}

/// The full recovery wrapper: runs the iterative sweep at fingerprint
/// levels log(n) down to 0, accumulating the recovered set; level 0
/// guarantees Exhausted verdicts are about the true hypergraph.
pub fn recover(
    bank: &SamplerBank,
    cursor: &mut RepCursor,
    stage: u32,
    partition: &Partition,
    already: &BTreeMap<Hyperedge, i64>,
    phi: &BigRational,
) -> RecoveryOutcome {
    let mut all_known = already.clone();
    let mut recovered = BTreeMap::new();
    let mut credits = BTreeMap::new();
    let threshold = saturation_threshold(phi, bank.config().log_n());
    let mut state = CreditState {
        counts: vec![0; partition.k()],
        map: &mut credits,
        threshold,
    };
    let mut diagnostics = RecoveryDiagnostics::default();
    let mut exhausted_at_zero = vec![false; partition.k()];
    for level in (0..bank.config().num_levels()).rev() {
        let mut exhausted = vec![false; partition.k()];
        let mut level_recovered = BTreeMap::new();
        let d = sweep_level(
            bank,
            cursor,
            stage,
            level,
            partition,
            &all_known,
            &mut level_recovered,
            &mut state,
            &mut exhausted,
        );
        diagnostics.absorb(&d);
        for (e, w) in level_recovered {
            all_known.insert(e.clone(), w);
            recovered.insert(e, w);
        }
        if level == 0 {
            exhausted_at_zero = exhausted;
        }
    }
    let verdicts = final_verdicts(&state.counts, threshold, &exhausted_at_zero);
    RecoveryOutcome {
        verdicts,
        recovered,
        credits,
        diagnostics,
    }
}

fn final_verdicts(counts: &[u64], threshold: u64, exhausted: &[bool]) -> Vec<Verdict> {
    counts
        .iter()
        .zip(exhausted)
        .map(|(&credited, &ex)| {
            if credited >= threshold {
                Verdict::Saturated { credited }
            } else if ex {
                Verdict::Exhausted
            } else {
                Verdict::Open { credited }
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn sweep_level(
    bank: &SamplerBank,
    cursor: &mut RepCursor,
    stage: u32,
    level: u32,
    partition: &Partition,
    already: &BTreeMap<Hyperedge, i64>,
    recovered: &mut BTreeMap<Hyperedge, i64>,
    state: &mut CreditState<'_>,
    exhausted: &mut [bool],
) -> RecoveryDiagnostics {
    let cfg = bank.config();
    let n = cfg.n;
    let k = partition.k();
    let mut diag = RecoveryDiagnostics::default();
    // per (rate, component): stop probing after an Empty decode at this
    // level; at rate 0 of level 0 that is the completeness signal
    let mut skip = vec![vec![false; k]; cfg.num_rates() as usize];
    // failed decodes are retried with fresh repetitions a few times before
    // the remaining budget is conserved for later calls
    let mut barren_passes = 0u32;
    loop {
        let resolved = |ci: usize, exhausted: &[bool], state: &CreditState| {
            exhausted[ci] || state.counts[ci] >= state.threshold
        };
        if (0..k).all(|ci| resolved(ci, exhausted, state)) {
            break;
        }
        let mut consumed_this_pass = false;
        let mut progress = false;
        for rate in 0..cfg.num_rates() {
            let active: Vec<usize> = (0..k)
                .filter(|&ci| !resolved(ci, exhausted, state) && !skip[rate as usize][ci])
                .collect();
            if active.is_empty() {
                continue;
            }
            let Some(family) = cursor.claim(bank, stage, level, rate) else {
                continue;
            };
            consumed_this_pass = true;
            diag.reps_consumed += 1;
            for ci in active {
                if resolved(ci, exhausted, state) {
                    continue;
                }
                let component = &partition.blocks()[ci];
                let mut acc = bank.component_sampler(family, component);
                let known: Vec<(Hyperedge, i64)> = already
                    .iter()
                    .chain(recovered.iter())
                    .map(|(e, w)| (e.clone(), *w))
                    .collect();
                bank.subtract_from_component(family, component, &mut acc, &known);
                diag.opens += 1;
                let entry = diag.per_family.entry((level, rate)).or_insert((0, 0));
                entry.0 += 1;
                match bank.decode_pair(family, &acc) {
                    PairDecode::Empty => {
                        diag.empties += 1;
                        skip[rate as usize][ci] = true;
                        if level == 0 && rate == 0 {
                            exhausted[ci] = true;
                            progress = true;
                        }
                    }
                    PairDecode::Fail => {
                        diag.fails += 1;
                    }
                    PairDecode::Edge { fp_id, orig_id, value } => {
                        let accepted = validate_decode(
                            bank, family, component, &fp_id, &orig_id, value, n,
                        );
                        let Some((edge, weight)) = accepted else {
                            diag.inconsistent += 1;
                            continue;
                        };
                        if already.contains_key(&edge) || recovered.contains_key(&edge) {
                            // a subtracted edge resurfacing means the decode
                            // was bogus; never subtract it again
                            diag.inconsistent += 1;
                            continue;
                        }
                        recovered.insert(edge.clone(), weight);
                        diag.recovered_edges += 1;
                        diag.per_family.get_mut(&(level, rate)).unwrap().1 += 1;
                        progress = true;
                        credit_edge(&edge, partition, state);
                    }
                }
            }
        }
        if !consumed_this_pass {
            break;
        }
        if progress {
            barren_passes = 0;
        } else {
            barren_passes += 1;
            if barren_passes >= 4 {
                break;
            }
        }
    }
    diag
}

/// Check a paired decode end to end: both ids must parse as edges, the
/// original must pass this family's stage filters and fingerprint to the
/// decoded fingerprint under its coins, the coefficient sum over the
/// component must divide the value exactly, and the resulting multiplicity
/// must be nonzero.
fn validate_decode(
    bank: &SamplerBank,
    family: usize,
    component: &[u32],
    fp_id: &num::BigUint,
    orig_id: &num::BigUint,
    value: i64,
    n: u32,
) -> Option<(Hyperedge, i64)> {
    let edge = Hyperedge::from_canonical_id(orig_id, n).ok()?;
    if edge.arity() as u32 > bank.config().r_max {
        return None;
    }
    if bank.stage_depth(&edge) <= bank.key_of(family).stage {
        return None;
    }
    let fp = Hyperedge::from_canonical_id(fp_id, n).ok()?;
    let expected = bank.fingerprint(family, &edge)?;
    if expected != fp {
        return None;
    }
    let gamma = coefficient_sum(&fp, component);
    if gamma == 0 || value % gamma != 0 {
        return None;
    }
    let weight = value / gamma;
    if weight == 0 {
        return None;
    }
    Some((edge, weight))
}

/// Credit to the lowest-indexed incident block that is not yet saturated;
/// each edge is credited at most once.
fn credit_edge(edge: &Hyperedge, partition: &Partition, state: &mut CreditState<'_>) {
    if state.map.contains_key(edge) {
        return;
    }
    for (ci, block) in partition.blocks().iter().enumerate() {
        if state.counts[ci] >= state.threshold {
            continue;
        }
        if edge.vertices().iter().any(|v| block.binary_search(v).is_ok()) {
            state.counts[ci] += 1;
            state.map.insert(edge.clone(), ci);
            return;
        }
    }
}
