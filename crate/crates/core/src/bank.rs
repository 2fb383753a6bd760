//! The vertex-incidence layer: per-vertex sampler banks over the signed
//! neighborhood encoding, nested stage filters, per-family fingerprint
//! transformations, component summation, recovered-edge removal, merging,
//! and the bit-exact binary serialization used for checkpoints and MPC
//! messages.
//!
//! Each main-bank family (stage, level, rate, repetition) holds one paired
//! sampler per vertex: the primary accumulators are indexed by the
//! fingerprinted edge id, and a companion tester array indexed by the
//! original edge id shares the same level routing, so a successful
//! fingerprint decode can be mapped back to an exact edge identity.

use num::bigint::{BigInt, BigUint};

use crate::config::SketchConfig;
use crate::error::SketchError;
use crate::hypergraph::Hyperedge;
use crate::l0::{ExponentMap, L0Family, L0Sampler, OneSparseTester, OstDecode};
use crate::prf::{Prf, Tag};

/// Coordinates of one main-bank sampler family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FamilyKey {
    pub stage: u32,
    pub level: u32,
    pub rate: u32,
    pub rep: u32,
}

/// Vertex coefficient of the signed incidence encoding: non-max members
/// carry +1, the max member carries -(arity-1), so coefficients over an
/// edge sum to zero and component sums cancel internal edges.
pub fn encoding_coefficient(e: &Hyperedge, v: u32) -> i64 {
    if v == e.max_vertex() {
        -((e.arity() as i64) - 1)
    } else {
        1
    }
}

/// Sum of encoding coefficients of `e` over the vertices inside `component`
/// (sorted slice). Zero iff the edge is internal or disjoint.
pub fn coefficient_sum(e: &Hyperedge, component: &[u32]) -> i64 {
    let mut sum = 0i64;
    for &v in e.vertices() {
        if component.binary_search(&v).is_ok() {
            sum += encoding_coefficient(e, v);
        }
    }
    sum
}

/// One main-bank family: fingerprint seeds plus a paired sampler per vertex.
#[derive(Debug, Clone)]
struct MainFamily {
    l0: L0Family,
    fp_prf: Prf,
    fp_bits: u32,
    samplers: Vec<PairedSampler>,
}

/// Primary sampler over fingerprinted ids plus the companion over original
/// ids, sharing level routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedSampler {
    pub main: L0Sampler,
    pub comp: L0Sampler,
}

impl PairedSampler {
    pub fn add_assign(&mut self, other: &PairedSampler) {
        self.main.add_assign(&other.main);
        self.comp.add_assign(&other.comp);
    }

    pub fn is_zero(&self) -> bool {
        self.main.is_zero() && self.comp.is_zero()
    }
}

/// Decode outcome of a component-summed paired sampler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairDecode {
    /// Every accumulator zero: no crossing support remains at this family.
    Empty,
    /// Verified recovery: fingerprint id, original id, and the shared
    /// accumulated value (coefficient-sum times multiplicity).
    Edge { fp_id: BigUint, orig_id: BigUint, value: i64 },
    /// Nonzero state, but no position decoded consistently.
    Fail,
}

/// The full linear sketch for recovery: per vertex, per (stage, fingerprint
/// level, rate, repetition) paired l0-samplers, plus all derived seeds.
#[derive(Debug, Clone)]
pub struct SamplerBank {
    config: SketchConfig,
    exp_map: ExponentMap,
    filter_prf: Prf,
    families: Vec<MainFamily>,
    keys: Vec<FamilyKey>,
    offsets: Vec<usize>, // (stage, level, rate) -> first family index
}

impl SamplerBank {
    pub fn new(config: &SketchConfig) -> Self {
        let base = Prf::new(&config.master_seed, &Tag::new("sampler-bank"));
        let exp_map = ExponentMap::new(base.subtag(&Tag::new("exponent-map")));
        let filter_prf = base.subtag(&Tag::new("stage-filter"));
        let params = config.bank_sampler_params(config.m_max);
        let mut families = Vec::new();
        let mut keys = Vec::new();
        let mut offsets = Vec::new();
        for stage in 0..config.num_stages() {
            for level in 0..config.num_levels() {
                for rate in 0..config.num_rates() {
                    offsets.push(families.len());
                    for rep in 0..config.rep_budget(stage, level) {
                        let tag = Tag::new("family")
                            .with(stage as u64)
                            .with(level as u64)
                            .with(rate as u64)
                            .with(rep as u64);
                        let fam_prf = base.subtag(&tag);
                        let l0 = L0Family::new(params, fam_prf.subtag(&Tag::new("l0")));
                        let fp_prf = fam_prf.subtag(&Tag::new("fingerprint"));
                        let sampler = PairedSampler {
                            main: l0.new_sampler(),
                            comp: l0.new_sampler(),
                        };
                        families.push(MainFamily {
                            l0,
                            fp_prf,
                            fp_bits: level + rate,
                            samplers: vec![sampler; config.n as usize],
                        });
                        keys.push(FamilyKey { stage, level, rate, rep });
                    }
                }
            }
        }
        offsets.push(families.len());
        SamplerBank {
            config: config.clone(),
            exp_map,
            filter_prf,
            families,
            keys,
            offsets,
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn exponent_map(&self) -> &ExponentMap {
        &self.exp_map
    }

    pub fn sampler_count(&self) -> usize {
        self.families.len() * self.config.n as usize
    }

    pub fn keys(&self) -> &[FamilyKey] {
        &self.keys
    }

    fn group_index(&self, stage: u32, level: u32, rate: u32) -> usize {
        let rates = self.config.num_rates() as usize;
        let levels = self.config.num_levels() as usize;
        (stage as usize * levels + level as usize) * rates + rate as usize
    }

    /// Family indices for one (stage, level, rate) group, in repetition order.
    pub fn family_range(&self, stage: u32, level: u32, rate: u32) -> std::ops::Range<usize> {
        let g = self.group_index(stage, level, rate);
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn key_of(&self, family: usize) -> FamilyKey {
        self.keys[family]
    }

    /// Deepest stage this edge contributes to under the nested rate-1/2
    /// filters (stage 0 admits everything).
    pub fn stage_depth(&self, e: &Hyperedge) -> u32 {
        let id_bytes = e.id_bytes(self.config.n);
        let mut depth = 1u32;
        while depth < self.config.num_stages() {
            let mut input = Vec::with_capacity(id_bytes.len() + 8);
            input.extend_from_slice(&(depth as u64).to_le_bytes());
            input.extend_from_slice(&id_bytes);
            if !self.filter_prf.coin_pow2(&input, 1) {
                break;
            }
            depth += 1;
        }
        depth
    }

    /// Deterministic per-family fingerprint: keeps each vertex of `e` with
    /// probability 2^-(level+rate). Edges whose fingerprint drops below
    /// arity 2 encode to the zero vector and are returned as None.
    pub fn fingerprint(&self, family: usize, e: &Hyperedge) -> Option<Hyperedge> {
        let fam = &self.families[family];
        fingerprint_with(&fam.fp_prf, fam.fp_bits, e, self.config.n)
    }

    /// Apply one linear update to every admitting family.
    pub fn encode_update(&mut self, e: &Hyperedge, delta: i64) -> Result<(), SketchError> {
        e.check_range(self.config.n)?;
        if e.arity() as u32 > self.config.r_max {
            return Err(SketchError::Hypergraph(
                crate::error::HypergraphError::ArityTooLarge {
                    arity: e.arity(),
                    r_max: self.config.r_max,
                },
            ));
        }
        if delta.unsigned_abs() > self.config.weight_cap {
            return Err(SketchError::WeightCapExceeded {
                delta,
                cap: self.config.weight_cap,
            });
        }
        if delta == 0 {
            return Ok(());
        }
        let depth = self.stage_depth(e);
        let orig_id = e.canonical_id(self.config.n).expect("range checked");
        let route_bytes = orig_id.to_bytes_le();
        let n = self.config.n;
        for stage in 0..depth.min(self.config.num_stages()) {
            for level in 0..self.config.num_levels() {
                for rate in 0..self.config.num_rates() {
                    for fi in self.family_range(stage, level, rate) {
                        let fam = &self.families[fi];
                        let Some(fp) = fingerprint_with(&fam.fp_prf, fam.fp_bits, e, n) else {
                            continue;
                        };
                        let fp_id = fp.canonical_id(n).expect("subset of e");
                        let fam = &mut self.families[fi];
                        for &v in fp.vertices() {
                            let coeff = encoding_coefficient(&fp, v) * delta;
                            let pair = &mut fam.samplers[v as usize];
                            fam.l0
                                .update_routed(&mut pair.main, &self.exp_map, &route_bytes, &fp_id, coeff);
                            fam.l0
                                .update_routed(&mut pair.comp, &self.exp_map, &route_bytes, &orig_id, coeff);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Cancel previously recovered edges out of the bank (the inverse of
    /// `encode_update` at the recorded multiplicity).
    pub fn remove_recovered(&mut self, edges: &[(Hyperedge, i64)]) -> Result<(), SketchError> {
        for (e, w) in edges {
            self.encode_update(e, -w)?;
        }
        Ok(())
    }

    /// Sum the per-vertex paired samplers of one family over a component.
    /// The support of the result is exactly the fingerprinted edges with at
    /// least one but not all fingerprinted vertices inside the component.
    pub fn component_sampler(&self, family: usize, component: &[u32]) -> PairedSampler {
        let fam = &self.families[family];
        let mut acc = PairedSampler {
            main: fam.l0.new_sampler(),
            comp: fam.l0.new_sampler(),
        };
        for &v in component {
            acc.add_assign(&fam.samplers[v as usize]);
        }
        acc
    }

    /// Subtract known edges from a component-summed sampler without
    /// touching the bank itself: equivalent, by linearity, to removing them
    /// from every per-vertex sampler first. Edges the stage filters already
    /// dropped are skipped: they never entered this family, and cancelling
    /// them here would plant phantom negative coordinates.
    pub fn subtract_from_component(
        &self,
        family: usize,
        component: &[u32],
        acc: &mut PairedSampler,
        edges: &[(Hyperedge, i64)],
    ) {
        let fam = &self.families[family];
        let stage = self.keys[family].stage;
        let n = self.config.n;
        for (e, w) in edges {
            if self.stage_depth(e) <= stage {
                continue;
            }
            let Some(fp) = fingerprint_with(&fam.fp_prf, fam.fp_bits, e, n) else {
                continue;
            };
            let gamma = coefficient_sum(&fp, component);
            if gamma == 0 {
                continue;
            }
            let orig_id = e.canonical_id(n).expect("valid edge");
            let fp_id = fp.canonical_id(n).expect("subset");
            let route = orig_id.to_bytes_le();
            fam.l0
                .update_routed(&mut acc.main, &self.exp_map, &route, &fp_id, -gamma * w);
            fam.l0
                .update_routed(&mut acc.comp, &self.exp_map, &route, &orig_id, -gamma * w);
        }
    }

    /// Decode a component-summed pair: scan positions deepest level first;
    /// a position counts only when the primary and the companion decode
    /// consistently at the same position.
    pub fn decode_pair(&self, family: usize, acc: &PairedSampler) -> PairDecode {
        let fam = &self.families[family];
        if acc.is_zero() {
            return PairDecode::Empty;
        }
        let params = fam.l0.params();
        for rep in 0..params.reps {
            let base = (rep * params.levels) as usize;
            for level in (0..params.levels).rev() {
                let idx = base + level as usize;
                let m = acc.main.testers()[idx].decode(&self.exp_map);
                let OstDecode::OneSparse { id: fp_id, weight } = m else {
                    continue;
                };
                let c = acc.comp.testers()[idx].decode(&self.exp_map);
                let OstDecode::OneSparse { id: orig_id, weight: w2 } = c else {
                    continue;
                };
                if weight != w2 {
                    continue;
                }
                return PairDecode::Edge {
                    fp_id,
                    orig_id,
                    value: weight,
                };
            }
        }
        PairDecode::Fail
    }

    /// Component-wise merge; both banks must share config and seeds.
    pub fn merge_from(&mut self, other: &SamplerBank) -> Result<(), SketchError> {
        if self.config.config_hash() != other.config.config_hash() {
            return Err(SketchError::ConfigMismatch(
                "sampler banks built from different configs".into(),
            ));
        }
        if self.config.seed_commitment() != other.config.seed_commitment() {
            return Err(SketchError::SeedMismatch);
        }
        for (a, b) in self.families.iter_mut().zip(&other.families) {
            for (sa, sb) in a.samplers.iter_mut().zip(&b.samplers) {
                sa.add_assign(sb);
            }
        }
        Ok(())
    }

    /// All accumulator triples in deterministic order (serialization and
    /// fragment exchange).
    fn testers(&self) -> impl Iterator<Item = &OneSparseTester> {
        self.families.iter().flat_map(|f| {
            f.samplers
                .iter()
                .flat_map(|p| p.main.testers().iter().chain(p.comp.testers().iter()))
        })
    }

    fn testers_mut_for_vertex(&mut self, v: u32) -> Vec<&mut OneSparseTester> {
        self.families
            .iter_mut()
            .flat_map(|f| {
                let p = &mut f.samplers[v as usize];
                // chain over the pair, main first
                let (m, c) = (&mut p.main, &mut p.comp);
                m.testers_mut().iter_mut().chain(c.testers_mut().iter_mut())
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_header(&mut out, b"CSKB", &self.config);
        out.extend_from_slice(&(self.sampler_count() as u64).to_le_bytes());
        for t in self.testers() {
            write_tester(&mut out, t);
        }
        out
    }

    pub fn from_bytes(config: &SketchConfig, bytes: &[u8]) -> Result<Self, SketchError> {
        let mut cursor = read_header(bytes, b"CSKB", config)?;
        let mut bank = SamplerBank::new(config);
        let count = read_u64(bytes, &mut cursor)? as usize;
        if count != bank.sampler_count() {
            return Err(SketchError::ConfigMismatch("sampler count mismatch".into()));
        }
        for f in bank.families.iter_mut() {
            for p in f.samplers.iter_mut() {
                for t in p.main.testers_mut().iter_mut() {
                    read_tester(bytes, &mut cursor, t)?;
                }
                for t in p.comp.testers_mut().iter_mut() {
                    read_tester(bytes, &mut cursor, t)?;
                }
            }
        }
        Ok(bank)
    }

    /// Serialize one vertex's slice across all families; the unit of MPC
    /// exchange.
    pub fn vertex_fragment(&self, v: u32) -> Vec<u8> {
        let mut out = Vec::new();
        write_header(&mut out, b"CSKF", &self.config);
        out.extend_from_slice(&(v as u64).to_le_bytes());
        for f in &self.families {
            let p = &f.samplers[v as usize];
            for t in p.main.testers().iter().chain(p.comp.testers().iter()) {
                write_tester(&mut out, t);
            }
        }
        out
    }

    /// Add a serialized vertex fragment into this bank.
    pub fn absorb_vertex_fragment(&mut self, bytes: &[u8]) -> Result<(), SketchError> {
        let mut cursor = read_header(bytes, b"CSKF", &self.config)?;
        let v = read_u64(bytes, &mut cursor)? as u32;
        if v >= self.config.n {
            return Err(SketchError::ConfigMismatch("fragment vertex out of range".into()));
        }
        for t in self.testers_mut_for_vertex(v) {
            let mut incoming = OneSparseTester::new(t.z());
            read_tester(bytes, &mut cursor, &mut incoming)?;
            t.add_assign(&incoming);
        }
        Ok(())
    }
}

fn fingerprint_with(fp_prf: &Prf, bits: u32, e: &Hyperedge, n: u32) -> Option<Hyperedge> {
    if bits == 0 {
        return Some(e.clone());
    }
    let id_bytes = e.id_bytes(n);
    let mut kept = Vec::with_capacity(e.arity());
    for &v in e.vertices() {
        let mut input = Vec::with_capacity(id_bytes.len() + 4);
        input.extend_from_slice(&v.to_le_bytes());
        input.extend_from_slice(&id_bytes);
        if fp_prf.coin_pow2(&input, bits) {
            kept.push(v);
        }
    }
    if kept.len() < 2 {
        return None;
    }
    Some(Hyperedge::new(kept).expect("sorted distinct subset"))
}

/// Connectivity preprocessing bank: per stage and spanning-forest round,
/// one plain l0-sampler per vertex over original edge ids, downsampled
/// independently of the main filters.
#[derive(Debug, Clone)]
pub struct ConnectivityBank {
    config: SketchConfig,
    exp_map: ExponentMap,
    filter_prf: Prf,
    families: Vec<ConnFamily>,
}

#[derive(Debug, Clone)]
struct ConnFamily {
    l0: L0Family,
    samplers: Vec<L0Sampler>,
}

impl ConnectivityBank {
    pub fn new(config: &SketchConfig) -> Self {
        let base = Prf::new(&config.master_seed, &Tag::new("connectivity-bank"));
        let exp_map = ExponentMap::new(base.subtag(&Tag::new("exponent-map")));
        let filter_prf = base.subtag(&Tag::new("conn-filter"));
        let params = config.bank_sampler_params(config.conn_support_bound());
        let mut families = Vec::new();
        for stage in 0..config.conn_num_stages() {
            for round in 0..config.conn_rounds() {
                let tag = Tag::new("conn-family").with(stage as u64).with(round as u64);
                let l0 = L0Family::new(params, base.subtag(&tag));
                let sampler = l0.new_sampler();
                families.push(ConnFamily {
                    l0,
                    samplers: vec![sampler; config.n as usize],
                });
            }
        }
        ConnectivityBank {
            config: config.clone(),
            exp_map,
            filter_prf,
            families,
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn sampler_count(&self) -> usize {
        self.families.len() * self.config.n as usize
    }

    fn family_index(&self, stage: u32, round: u32) -> usize {
        (stage * self.config.conn_rounds() + round) as usize
    }

    /// Deepest connectivity stage the edge survives to (independent nested
    /// rate-1/2 downsampling).
    pub fn stage_depth(&self, e: &Hyperedge) -> u32 {
        let id_bytes = e.id_bytes(self.config.n);
        let mut depth = 1u32;
        while depth < self.config.conn_num_stages() {
            let mut input = Vec::with_capacity(id_bytes.len() + 8);
            input.extend_from_slice(&(depth as u64).to_le_bytes());
            input.extend_from_slice(&id_bytes);
            if !self.filter_prf.coin_pow2(&input, 1) {
                break;
            }
            depth += 1;
        }
        depth
    }

    pub fn encode_update(&mut self, e: &Hyperedge, delta: i64) -> Result<(), SketchError> {
        e.check_range(self.config.n)?;
        if delta == 0 {
            return Ok(());
        }
        let id = e.canonical_id(self.config.n).expect("range checked");
        let route = id.to_bytes_le();
        let depth = self.stage_depth(e);
        for stage in 0..depth {
            for round in 0..self.config.conn_rounds() {
                let fi = self.family_index(stage, round);
                let fam = &mut self.families[fi];
                for &v in e.vertices() {
                    let coeff = encoding_coefficient(e, v) * delta;
                    fam.l0
                        .update_routed(&mut fam.samplers[v as usize], &self.exp_map, &route, &id, coeff);
                }
            }
        }
        Ok(())
    }

    /// Sum one round's samplers over a component and decode. Returns the
    /// decoded original-edge id when a crossing edge is isolated.
    pub fn open_component(
        &self,
        stage: u32,
        round: u32,
        component: &[u32],
    ) -> crate::l0::L0Decode {
        let fam = &self.families[self.family_index(stage, round)];
        let mut acc = fam.l0.new_sampler();
        for &v in component {
            acc.add_assign(&fam.samplers[v as usize]);
        }
        fam.l0.decode(&acc, &self.exp_map)
    }

    pub fn merge_from(&mut self, other: &ConnectivityBank) -> Result<(), SketchError> {
        if self.config.config_hash() != other.config.config_hash() {
            return Err(SketchError::ConfigMismatch(
                "connectivity banks built from different configs".into(),
            ));
        }
        if self.config.seed_commitment() != other.config.seed_commitment() {
            return Err(SketchError::SeedMismatch);
        }
        for (a, b) in self.families.iter_mut().zip(&other.families) {
            for (sa, sb) in a.samplers.iter_mut().zip(&b.samplers) {
                sa.add_assign(sb);
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_header(&mut out, b"CSKC", &self.config);
        out.extend_from_slice(&(self.sampler_count() as u64).to_le_bytes());
        for f in &self.families {
            for s in &f.samplers {
                for t in s.testers() {
                    write_tester(&mut out, t);
                }
            }
        }
        out
    }

    pub fn from_bytes(config: &SketchConfig, bytes: &[u8]) -> Result<Self, SketchError> {
        let mut cursor = read_header(bytes, b"CSKC", config)?;
        let mut bank = ConnectivityBank::new(config);
        let count = read_u64(bytes, &mut cursor)? as usize;
        if count != bank.sampler_count() {
            return Err(SketchError::ConfigMismatch("sampler count mismatch".into()));
        }
        for f in bank.families.iter_mut() {
            for s in f.samplers.iter_mut() {
                for t in s.testers_mut().iter_mut() {
                    read_tester(bytes, &mut cursor, t)?;
                }
            }
        }
        Ok(bank)
    }

    pub fn vertex_fragment(&self, v: u32) -> Vec<u8> {
        let mut out = Vec::new();
        write_header(&mut out, b"CSKG", &self.config);
        out.extend_from_slice(&(v as u64).to_le_bytes());
        for f in &self.families {
            for t in f.samplers[v as usize].testers() {
                write_tester(&mut out, t);
            }
        }
        out
    }

    pub fn absorb_vertex_fragment(&mut self, bytes: &[u8]) -> Result<(), SketchError> {
        let mut cursor = read_header(bytes, b"CSKG", &self.config)?;
        let v = read_u64(bytes, &mut cursor)? as u32;
        if v >= self.config.n {
            return Err(SketchError::ConfigMismatch("fragment vertex out of range".into()));
        }
        for f in self.families.iter_mut() {
            for t in f.samplers[v as usize].testers_mut().iter_mut() {
                let mut incoming = OneSparseTester::new(t.z());
                read_tester(bytes, &mut cursor, &mut incoming)?;
                t.add_assign(&incoming);
            }
        }
        Ok(())
    }
}

const FORMAT_VERSION: u32 = 1;

fn write_header(out: &mut Vec<u8>, magic: &[u8; 4], config: &SketchConfig) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&config.config_hash());
    out.extend_from_slice(&config.seed_commitment());
}

fn read_header(bytes: &[u8], magic: &[u8; 4], config: &SketchConfig) -> Result<usize, SketchError> {
    if bytes.len() < 72 || &bytes[..4] != magic {
        return Err(SketchError::ConfigMismatch("bad magic in bank data".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(SketchError::ConfigMismatch(format!(
            "unsupported format version {version}"
        )));
    }
    if bytes[8..40] != config.config_hash() {
        return Err(SketchError::ConfigMismatch(
            "config hash in data does not match supplied config".into(),
        ));
    }
    if bytes[40..72] != config.seed_commitment() {
        return Err(SketchError::SeedMismatch);
    }
    Ok(72)
}

fn write_tester(out: &mut Vec<u8>, t: &OneSparseTester) {
    let (sign, mag) = match t.alpha().sign() {
        num::bigint::Sign::Minus => (-1i8, t.alpha().magnitude().to_bytes_le()),
        num::bigint::Sign::NoSign => (0i8, Vec::new()),
        num::bigint::Sign::Plus => (1i8, t.alpha().magnitude().to_bytes_le()),
    };
    out.push(sign as u8);
    out.extend_from_slice(&(mag.len() as u32).to_le_bytes());
    out.extend_from_slice(&mag);
    out.extend_from_slice(&t.phi().to_le_bytes());
    out.extend_from_slice(&t.tau().to_le_bytes());
}

fn read_tester(bytes: &[u8], cursor: &mut usize, t: &mut OneSparseTester) -> Result<(), SketchError> {
    let err = || SketchError::ConfigMismatch("truncated bank data".into());
    if *cursor + 5 > bytes.len() {
        return Err(err());
    }
    let sign = bytes[*cursor] as i8;
    let len = u32::from_le_bytes(bytes[*cursor + 1..*cursor + 5].try_into().unwrap()) as usize;
    *cursor += 5;
    if *cursor + len + 16 > bytes.len() {
        return Err(err());
    }
    let mag = BigUint::from_bytes_le(&bytes[*cursor..*cursor + len]);
    *cursor += len;
    let phi = i64::from_le_bytes(bytes[*cursor..*cursor + 8].try_into().unwrap());
    let tau = u64::from_le_bytes(bytes[*cursor + 8..*cursor + 16].try_into().unwrap());
    *cursor += 16;
    let alpha = match sign {
        -1 => -BigInt::from(mag),
        0 => BigInt::from(0u32),
        1 => BigInt::from(mag),
        _ => return Err(err()),
    };
    t.set_accumulators(alpha, phi, tau);
    Ok(())
}

fn read_u64(bytes: &[u8], cursor: &mut usize) -> Result<u64, SketchError> {
    if *cursor + 8 > bytes.len() {
        return Err(SketchError::ConfigMismatch("truncated bank data".into()));
    }
    let v = u64::from_le_bytes(bytes[*cursor..*cursor + 8].try_into().unwrap());
    *cursor += 8;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SketchConfig;
    use num::rational::BigRational;
    use num::BigInt;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn small_config(seed: u8) -> SketchConfig {
        let mut cfg = SketchConfig::new(6, 32, 4, rat(1, 2), [seed; 32]);
        cfg.rep_cap = 8;
        cfg.min_reps = 2;
        cfg.conn_offset_override = Some(4);
        cfg
    }

    fn edge(vs: &[u32]) -> Hyperedge {
        Hyperedge::new(vs.to_vec()).unwrap()
    }

    #[test]
    fn insert_then_delete_restores_empty_bytes() {
        let cfg = small_config(1);
        let mut bank = SamplerBank::new(&cfg);
        let empty = bank.to_bytes();
        bank.encode_update(&edge(&[0, 2, 4]), 1).unwrap();
        assert_ne!(bank.to_bytes(), empty);
        bank.encode_update(&edge(&[0, 2, 4]), -1).unwrap();
        assert_eq!(bank.to_bytes(), empty);
        // removing an edge that was never inserted leaves a -1 encoding;
        // re-inserting it cancels back to empty (caller contract: only
        // remove known-present edges)
        bank.remove_recovered(&[(edge(&[1, 3]), 1)]).unwrap();
        assert_ne!(bank.to_bytes(), empty);
        bank.encode_update(&edge(&[1, 3]), 1).unwrap();
        assert_eq!(bank.to_bytes(), empty);
    }

    #[test]
    fn permuted_update_order_gives_identical_bytes() {
        let cfg = small_config(2);
        let edges = [edge(&[0, 1]), edge(&[2, 3, 5]), edge(&[1, 4]), edge(&[0, 5])];
        let mut a = SamplerBank::new(&cfg);
        for e in &edges {
            a.encode_update(e, 1).unwrap();
        }
        let mut b = SamplerBank::new(&cfg);
        for e in edges.iter().rev() {
            b.encode_update(e, 1).unwrap();
        }
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn merge_equals_union_and_is_commutative() {
        let cfg = small_config(3);
        let mut a = SamplerBank::new(&cfg);
        let mut b = SamplerBank::new(&cfg);
        let mut whole = SamplerBank::new(&cfg);
        for e in [edge(&[0, 1]), edge(&[1, 2])] {
            a.encode_update(&e, 1).unwrap();
            whole.encode_update(&e, 1).unwrap();
        }
        for e in [edge(&[3, 4]), edge(&[2, 5]), edge(&[0, 1, 2, 3])] {
            b.encode_update(&e, 1).unwrap();
            whole.encode_update(&e, 1).unwrap();
        }
        let mut ab = a.clone();
        ab.merge_from(&b).unwrap();
        assert_eq!(ab.to_bytes(), whole.to_bytes());
        let mut ba = b.clone();
        ba.merge_from(&a).unwrap();
        assert_eq!(ba.to_bytes(), whole.to_bytes());
        // merge with an empty bank is the identity
        let mut ae = a.clone();
        ae.merge_from(&SamplerBank::new(&cfg)).unwrap();
        assert_eq!(ae.to_bytes(), a.to_bytes());
    }

    #[test]
    fn merge_rejects_different_seeds() {
        let cfg1 = small_config(4);
        let cfg2 = small_config(5);
        let mut a = SamplerBank::new(&cfg1);
        let b = SamplerBank::new(&cfg2);
        assert!(matches!(a.merge_from(&b), Err(SketchError::SeedMismatch)));
    }

    #[test]
    fn component_sampler_support_examples() {
        // triangle, component {0,1}, stage 0 / level 0 / rate 0 (identity
        // fingerprint): support must be exactly the two crossing edges
        let cfg = small_config(6);
        let mut bank = SamplerBank::new(&cfg);
        let tri = [edge(&[0, 1]), edge(&[1, 2]), edge(&[0, 2])];
        for e in &tri {
            bank.encode_update(e, 1).unwrap();
        }
        let fam = bank.family_range(0, 0, 0).start;
        // whole vertex set: all edges internal, sampler must be empty
        let full = bank.component_sampler(fam, &[0, 1, 2, 3, 4, 5]);
        assert!(full.is_zero());
        // {0,1}: crossing support = {02, 12}
        let acc = bank.component_sampler(fam, &[0, 1]);
        match bank.decode_pair(fam, &acc) {
            PairDecode::Edge { orig_id, .. } => {
                let e = Hyperedge::from_canonical_id(&orig_id, 6).unwrap();
                assert!(e == edge(&[0, 2]) || e == edge(&[1, 2]));
            }
            other => panic!("expected a crossing edge, got {other:?}"),
        }
        // singleton {1}: support = fingerprinted edges touching vertex 1
        let acc1 = bank.component_sampler(fam, &[1]);
        assert!(!acc1.is_zero());
    }

    #[test]
    fn subtract_from_component_matches_bank_removal() {
        let cfg = small_config(7);
        let edges = [edge(&[0, 1]), edge(&[1, 2]), edge(&[0, 2]), edge(&[2, 3])];
        let mut bank = SamplerBank::new(&cfg);
        for e in &edges {
            bank.encode_update(e, 1).unwrap();
        }
        let removed = vec![(edge(&[1, 2]), 1i64), (edge(&[2, 3]), 1i64)];
        let mut eager = bank.clone();
        eager.remove_recovered(&removed).unwrap();
        // stage-1 families see only the filtered edges; the lazy path must
        // skip absent ones exactly like the eager encode does
        for (stage, level, rate) in [(0, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 0), (2, 0, 0)] {
            for fam in bank.family_range(stage, level, rate) {
                for component in [&[0u32, 1][..], &[2u32][..], &[0u32, 3]] {
                    let mut lazy = bank.component_sampler(fam, component);
                    bank.subtract_from_component(fam, component, &mut lazy, &removed);
                    let direct = eager.component_sampler(fam, component);
                    assert_eq!(lazy, direct);
                }
            }
        }
    }

    #[test]
    fn serialization_roundtrip() {
        let cfg = small_config(8);
        let mut bank = SamplerBank::new(&cfg);
        bank.encode_update(&edge(&[0, 3]), 2).unwrap();
        bank.encode_update(&edge(&[1, 2, 4]), 1).unwrap();
        let bytes = bank.to_bytes();
        let back = SamplerBank::from_bytes(&cfg, &bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);

        let mut conn = ConnectivityBank::new(&cfg);
        conn.encode_update(&edge(&[0, 3]), 2).unwrap();
        let cbytes = conn.to_bytes();
        let cback = ConnectivityBank::from_bytes(&cfg, &cbytes).unwrap();
        assert_eq!(cback.to_bytes(), cbytes);

        // wrong config rejected
        let other = small_config(9);
        assert!(SamplerBank::from_bytes(&other, &bytes).is_err());
    }

    #[test]
    fn vertex_fragments_reassemble_the_bank() {
        let cfg = small_config(10);
        let mut bank = SamplerBank::new(&cfg);
        for e in [edge(&[0, 1]), edge(&[2, 4, 5]), edge(&[1, 3])] {
            bank.encode_update(&e, 1).unwrap();
        }
        let mut rebuilt = SamplerBank::new(&cfg);
        for v in 0..cfg.n {
            let frag = bank.vertex_fragment(v);
            rebuilt.absorb_vertex_fragment(&frag).unwrap();
        }
        assert_eq!(rebuilt.to_bytes(), bank.to_bytes());
    }

    #[test]
    fn filter_nesting_and_population_halving() {
        // an edge present at stage i is present at all stages < i by
        // construction of stage_depth; check the halving statistically
        let mut cfg = SketchConfig::new(16, 4096, 3, rat(1, 2), [11u8; 32]);
        cfg.rep_cap = 2;
        cfg.min_reps = 1;
        cfg.conn_offset_override = Some(0);
        let bank = SamplerBank::new(&cfg);
        let mut edges = Vec::new();
        for a in 0..16u32 {
            for b in a + 1..16 {
                edges.push(edge(&[a, b]));
                for c in b + 1..16 {
                    edges.push(edge(&[a, b, c]));
                }
            }
        }
        assert!(edges.len() >= 500);
        let mut counts = [0u64; 6];
        for e in &edges {
            let d = bank.stage_depth(e).min(6);
            for s in 0..d {
                counts[s as usize] += 1;
            }
        }
        assert_eq!(counts[0], edges.len() as u64);
        for s in 1..4 {
            let expected = counts[s - 1] as f64 / 2.0;
            let sigma = (counts[s - 1] as f64 * 0.25).sqrt();
            assert!(
                (counts[s] as f64 - expected).abs() <= 3.5 * sigma,
                "stage {s}: {} vs parent {}",
                counts[s],
                counts[s - 1]
            );
        }
    }

    #[test]
    fn fingerprints_are_deterministic_and_rate_scaled() {
        let cfg = small_config(12);
        let bank = SamplerBank::new(&cfg);
        let e = edge(&[0, 1, 2, 3]);
        for fam in 0..bank.families.len() {
            let a = bank.fingerprint(fam, &e);
            let b = bank.fingerprint(fam, &e);
            assert_eq!(a, b);
            if let Some(fp) = a {
                assert!(fp.vertices().iter().all(|v| e.contains(*v)));
                assert!(fp.arity() >= 2);
            }
        }
        // rate-1 fingerprint is the identity
        let fam0 = bank.family_range(0, 0, 0).start;
        assert_eq!(bank.fingerprint(fam0, &e), Some(e.clone()));
    }

    #[test]
    fn component_sampler_support_matches_brute_force() {
        // the summed sampler is zero exactly when no fingerprinted edge has
        // one-but-not-all fingerprinted vertices inside the component, and
        // decodes only elements of that support
        let mut cfg = SketchConfig::new(8, 32, 4, rat(1, 2), [31u8; 32]);
        cfg.rep_cap = 4;
        cfg.min_reps = 2;
        cfg.conn_offset_override = Some(2);
        let mut bank = SamplerBank::new(&cfg);
        let edges = [
            edge(&[0, 1]),
            edge(&[2, 5, 7]),
            edge(&[1, 3, 4, 6]),
            edge(&[0, 4]),
            edge(&[2, 3]),
            edge(&[5, 6, 7]),
        ];
        for e in &edges {
            bank.encode_update(e, 1).unwrap();
        }
        let components: [&[u32]; 5] = [&[0], &[0, 1], &[2, 3, 4], &[5, 6, 7], &[1, 4, 7]];
        for (stage, level, rate) in [(0u32, 0u32, 0u32), (0, 1, 0), (0, 0, 2), (0, 2, 1)] {
            for fam in bank.family_range(stage, level, rate) {
                for component in components {
                    let support: Vec<(Hyperedge, Hyperedge)> = edges
                        .iter()
                        .filter(|e| bank.stage_depth(e) > stage)
                        .filter_map(|e| bank.fingerprint(fam, e).map(|fp| (e.clone(), fp)))
                        .filter(|(_, fp)| coefficient_sum(fp, component) != 0)
                        .collect();
                    let acc = bank.component_sampler(fam, component);
                    assert_eq!(acc.is_zero(), support.is_empty());
                    match bank.decode_pair(fam, &acc) {
                        PairDecode::Empty => assert!(support.is_empty()),
                        PairDecode::Edge { fp_id, orig_id, .. } => {
                            let orig = Hyperedge::from_canonical_id(&orig_id, 8).unwrap();
                            let fp = Hyperedge::from_canonical_id(&fp_id, 8).unwrap();
                            assert!(support.contains(&(orig, fp)));
                        }
                        PairDecode::Fail => assert!(support.len() > 1),
                    }
                }
            }
        }
    }

    #[test]
    fn sampler_count_matches_budget_sum() {
        let cfg = small_config(13);
        let bank = SamplerBank::new(&cfg);
        let mut expect = 0usize;
        for stage in 0..cfg.num_stages() {
            for level in 0..cfg.num_levels() {
                expect += (cfg.rep_budget(stage, level) * cfg.num_rates()) as usize;
            }
        }
        assert_eq!(bank.sampler_count(), expect * cfg.n as usize);
    }
}
