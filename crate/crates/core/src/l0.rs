//! Sketching primitives: perfect 1-sparse recovery over a prime field,
//! geometric-subsampling l0-samplers, and s-sparse recovery with overflow
//! detection. All state is linear in updates, so sketches of disjoint
//! streams add, and insert-then-delete cancels bit-exactly.

use num::bigint::{BigInt, BigUint, Sign};
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};

use crate::error::SketchError;
use crate::prf::{Prf, Tag};

/// The fixed field modulus 2^61 - 1. Field elements stay at machine width
/// regardless of the id universe; ids are routed through a seeded exponent
/// map instead (see `ExponentMap`).
pub const P: u64 = (1 << 61) - 1;

pub mod field {
    use super::P;

    pub fn add(a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= P {
            s - P
        } else {
            s
        }
    }

    pub fn sub(a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + P - b
        }
    }

    pub fn mul(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % P as u128) as u64
    }

    pub fn pow(mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= P;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = mul(acc, base);
            }
            base = mul(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn inv(a: u64) -> u64 {
        pow(a, P - 2)
    }

    pub fn from_i64(x: i64) -> u64 {
        if x >= 0 {
            x as u64 % P
        } else {
            let r = x.unsigned_abs() % P;
            if r == 0 {
                0
            } else {
                P - r
            }
        }
    }
}

/// Seeded map from unbounded ids into a 32-bit exponent range: injective
/// with high probability at realistic support sizes, and small enough
/// that the tau-test polynomial keeps degree far below the field size.
#[derive(Debug, Clone)]
pub struct ExponentMap {
    prf: Prf,
}

impl ExponentMap {
    pub fn new(prf: Prf) -> Self {
        ExponentMap { prf }
    }

    pub fn exponent(&self, id: &BigUint) -> u64 {
        self.prf.u64(&id.to_bytes_le()) & 0xFFFF_FFFF
    }
}

/// The (alpha, phi, tau) fingerprint accumulator: alpha tracks the exact
/// weighted id sum as an unbounded integer, phi the weight sum, and tau a
/// field hash against a per-tester evaluation point z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneSparseTester {
    alpha: BigInt,
    phi: i64,
    tau: u64,
    z: u64,
}

/// Decode outcome of a 1-sparse tester. Dense is a value, not an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OstDecode {
    Empty,
    OneSparse { id: BigUint, weight: i64 },
    Dense,
}

impl OneSparseTester {
    pub fn new(z: u64) -> Self {
        debug_assert!((2..P).contains(&z));
        OneSparseTester {
            alpha: BigInt::zero(),
            phi: 0,
            tau: 0,
            z,
        }
    }

    pub fn z(&self) -> u64 {
        self.z
    }

    pub fn alpha(&self) -> &BigInt {
        &self.alpha
    }

    pub fn phi(&self) -> i64 {
        self.phi
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_zero() && self.phi == 0 && self.tau == 0
    }

    /// Linear update: alpha += delta*id, phi += delta, tau += delta*z^h(id).
    pub fn update(&mut self, map: &ExponentMap, id: &BigUint, delta: i64) {
        self.update_with_exponent(map.exponent(id), id, delta);
    }

    /// Same as `update` with the exponent precomputed by the caller (the
    /// exponent depends only on the id, not on this tester's z).
    pub fn update_with_exponent(&mut self, exponent: u64, id: &BigUint, delta: i64) {
        if delta == 0 {
            return;
        }
        self.alpha += BigInt::from_biguint(
            if delta > 0 { Sign::Plus } else { Sign::Minus },
            id * delta.unsigned_abs(),
        );
        self.phi += delta;
        let term = field::mul(field::from_i64(delta), field::pow(self.z, exponent));
        self.tau = field::add(self.tau, term);
    }

    /// Component-wise addition; both testers must share the same z.
    pub fn add_assign(&mut self, other: &OneSparseTester) {
        debug_assert_eq!(self.z, other.z);
        self.alpha += &other.alpha;
        self.phi += other.phi;
        self.tau = field::add(self.tau, other.tau);
    }

    /// Overwrite the accumulator triple (deserialization).
    pub fn set_accumulators(&mut self, alpha: BigInt, phi: i64, tau: u64) {
        self.alpha = alpha;
        self.phi = phi;
        self.tau = tau;
    }

    /// Claim-A.1 decode: Empty on the zero state; OneSparse(alpha/phi, phi)
    /// when phi divides alpha exactly, the quotient is a nonnegative id and
    /// the tau test passes; Dense otherwise.
    pub fn decode(&self, map: &ExponentMap) -> OstDecode {
        if self.is_zero() {
            return OstDecode::Empty;
        }
        if self.phi == 0 {
            return OstDecode::Dense;
        }
        let phi_big = BigInt::from(self.phi);
        let (q, r) = self.alpha.div_rem(&phi_big);
        if !r.is_zero() || q.is_negative() {
            return OstDecode::Dense;
        }
        let id = q.magnitude().clone();
        let expect = field::mul(field::from_i64(self.phi), field::pow(self.z, map.exponent(&id)));
        if expect != self.tau {
            return OstDecode::Dense;
        }
        OstDecode::OneSparse {
            id,
            weight: self.phi,
        }
    }
}

/// ceil(log2(x)) for a rational x >= 1, computed exactly.
pub fn ceil_log2_ratio(x: &BigRational) -> u32 {
    assert!(*x >= BigRational::one());
    let a = x.numer().magnitude();
    let b = x.denom().magnitude();
    let mut k = 0u32;
    let mut pow = b.clone();
    while pow < *a {
        pow <<= 1;
        k += 1;
    }
    k
}

/// Shared parameters of an l0-sampler family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct L0Params {
    pub levels: u32,
    pub reps: u32,
}

impl L0Params {
    /// levels = floor(log2(support_bound)) + 1; reps = ceil(c * log2(1/delta)).
    pub fn new(support_bound: u64, c: u32, delta: &BigRational) -> Self {
        let levels = 64 - support_bound.max(1).leading_zeros();
        let inv = delta.recip();
        let reps = (c * ceil_log2_ratio(&inv)).max(1);
        L0Params { levels, reps }
    }

    pub fn tester_count(&self) -> usize {
        (self.levels * self.reps) as usize
    }
}

/// Seeds and parameters shared by every sampler of one correlated family.
/// Per-vertex samplers built from the same family can be added together.
#[derive(Debug, Clone)]
pub struct L0Family {
    params: L0Params,
    rep_prfs: Vec<Prf>,
    z_table: Vec<u64>,
}

/// Accumulator state of one l0-sampler: reps x levels testers, flattened
/// rep-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L0Sampler {
    testers: Vec<OneSparseTester>,
}

/// Decode outcome of a sampler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum L0Decode {
    /// All accumulators are zero: the tracked vector is empty (up to
    /// negligible cancellation probability across every tester).
    Empty,
    Sample {
        id: BigUint,
        weight: i64,
    },
    /// Nonzero state but no level isolated a single element.
    Fail,
}

impl L0Family {
    pub fn new(params: L0Params, prf: Prf) -> Self {
        let rep_prfs: Vec<Prf> = (0..params.reps)
            .map(|r| prf.subtag(&Tag::new("m").with(r as u64)))
            .collect();
        let z_prf = prf.subtag(&Tag::new("z"));
        let z_table: Vec<u64> = (0..params.reps)
            .flat_map(|r| (0..params.levels).map(move |l| (r, l)))
            .map(|(r, l)| {
                let mut input = [0u8; 16];
                input[..8].copy_from_slice(&(r as u64).to_le_bytes());
                input[8..].copy_from_slice(&(l as u64).to_le_bytes());
                2 + z_prf.u64(&input) % (P - 2)
            })
            .collect();
        L0Family {
            params,
            rep_prfs,
            z_table,
        }
    }

    pub fn params(&self) -> &L0Params {
        &self.params
    }

    pub fn new_sampler(&self) -> L0Sampler {
        let testers = self.z_table.iter().map(|&z| OneSparseTester::new(z)).collect();
        L0Sampler { testers }
    }

    /// Nested level membership: level j admits a routing key iff the first
    /// j rate-1/2 coins for it all pass. Level 0 admits everything.
    fn admitted_levels(&self, rep: u32, route_bytes: &[u8]) -> u32 {
        let coin_prf = &self.rep_prfs[rep as usize];
        let mut depth = 1u32;
        while depth < self.params.levels {
            let mut input = Vec::with_capacity(route_bytes.len() + 8);
            input.extend_from_slice(&(depth as u64).to_le_bytes());
            input.extend_from_slice(route_bytes);
            if !coin_prf.coin_pow2(&input, 1) {
                break;
            }
            depth += 1;
        }
        depth
    }

    /// Route an update to every admitting level of every repetition.
    pub fn update(&self, s: &mut L0Sampler, map: &ExponentMap, id: &BigUint, delta: i64) {
        let bytes = id.to_bytes_le();
        self.update_routed(s, map, &bytes, id, delta);
    }

    /// Like `update`, but level membership is decided by `route_bytes`
    /// while the accumulators are indexed by `index_id`. The incidence
    /// layer routes by the original edge so that a fingerprint-indexed
    /// sampler and its original-id companion share per-level supports.
    pub fn update_routed(
        &self,
        s: &mut L0Sampler,
        map: &ExponentMap,
        route_bytes: &[u8],
        index_id: &BigUint,
        delta: i64,
    ) {
        if delta == 0 {
            return;
        }
        let exponent = map.exponent(index_id);
        for rep in 0..self.params.reps {
            let depth = self.admitted_levels(rep, route_bytes);
            let base = (rep * self.params.levels) as usize;
            for level in 0..depth {
                s.testers[base + level as usize].update_with_exponent(exponent, index_id, delta);
            }
        }
    }

    /// Scan for a verified 1-sparse level, deepest level first within each
    /// repetition. Any fixed scan order returns a uniform support element
    /// conditioned on success, because level membership is exchangeable.
    pub fn decode(&self, s: &L0Sampler, map: &ExponentMap) -> L0Decode {
        if s.testers.iter().all(|t| t.is_zero()) {
            return L0Decode::Empty;
        }
        for rep in 0..self.params.reps {
            let base = (rep * self.params.levels) as usize;
            for level in (0..self.params.levels).rev() {
                match s.testers[base + level as usize].decode(map) {
                    OstDecode::OneSparse { id, weight } => {
                        return L0Decode::Sample { id, weight }
                    }
                    OstDecode::Empty | OstDecode::Dense => {}
                }
            }
        }
        L0Decode::Fail
    }
}

impl L0Sampler {
    pub fn is_zero(&self) -> bool {
        self.testers.iter().all(|t| t.is_zero())
    }

    pub fn testers(&self) -> &[OneSparseTester] {
        &self.testers
    }

    pub fn testers_mut(&mut self) -> &mut [OneSparseTester] {
        &mut self.testers
    }

    pub fn add_assign(&mut self, other: &L0Sampler) {
        assert_eq!(self.testers.len(), other.testers.len());
        for (a, b) in self.testers.iter_mut().zip(&other.testers) {
            a.add_assign(b);
        }
    }
}

/// Parameters of the syndrome-based s-sparse recovery sketch: a 2s+1 power
/// sum parity check plus one random checkpoint evaluation of a second code.
#[derive(Debug, Clone)]
pub struct SparseRecovery {
    s: usize,
    universe: u64,
    gamma: u64,
}

/// Linear accumulator state for `SparseRecovery`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSketch {
    syndrome: Vec<u64>,
    checkpoint: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SparseDecode {
    Vector(Vec<(u64, i64)>),
    Dense,
}

impl SparseRecovery {
    /// `delta` is the misdetection budget for non-s-sparse inputs; the
    /// checkpoint code length is universe/delta.
    pub fn new(
        s: usize,
        universe: u64,
        delta: &BigRational,
        s_cap: usize,
        prf: &Prf,
    ) -> Result<Self, SketchError> {
        if s > s_cap {
            return Err(SketchError::SparsityCapExceeded { s, cap: s_cap });
        }
        assert!((1..P / 4).contains(&universe));
        let n_points = {
            let len = BigRational::from(BigInt::from(universe)) * delta.recip();
            let ceil = len.ceil().to_integer();
            u64::try_from(ceil.magnitude().clone()).expect("checkpoint code length fits u64")
        };
        assert!(n_points < P);
        let gamma = 1 + prf.below(b"gamma", n_points);
        Ok(SparseRecovery { s, universe, gamma })
    }

    pub fn empty_sketch(&self) -> SparseSketch {
        SparseSketch {
            syndrome: vec![0; 2 * self.s + 1],
            checkpoint: 0,
        }
    }

    fn point(&self, index: u64) -> u64 {
        index + 1
    }

    pub fn update(&self, sk: &mut SparseSketch, index: u64, delta: i64) {
        assert!(index < self.universe);
        if delta == 0 {
            return;
        }
        let d = field::from_i64(delta);
        let a = self.point(index);
        let mut power = 1u64;
        for j in 0..sk.syndrome.len() {
            sk.syndrome[j] = field::add(sk.syndrome[j], field::mul(d, power));
            power = field::mul(power, a);
        }
        // checkpoint: evaluation of the message polynomial at gamma
        let term = field::mul(d, field::pow(self.gamma, index));
        sk.checkpoint = field::add(sk.checkpoint, term);
    }

    pub fn add_assign(sk: &mut SparseSketch, other: &SparseSketch) {
        assert_eq!(sk.syndrome.len(), other.syndrome.len());
        for (a, b) in sk.syndrome.iter_mut().zip(&other.syndrome) {
            *a = field::add(*a, *b);
        }
        sk.checkpoint = field::add(sk.checkpoint, other.checkpoint);
    }

    /// Exact recovery when the tracked vector is s-sparse; Dense (with
    /// probability >= 1 - delta) otherwise. Entries are mapped back to
    /// signed weights inside [-weight_cap, weight_cap].
    pub fn decode(&self, sk: &SparseSketch, weight_cap: u64) -> SparseDecode {
        if sk.syndrome.iter().all(|&x| x == 0) && sk.checkpoint == 0 {
            return SparseDecode::Vector(Vec::new());
        }
        let locator = berlekamp_massey(&sk.syndrome);
        let deg = locator.len() - 1;
        if deg == 0 || deg > self.s {
            return SparseDecode::Dense;
        }
        // brute-force root scan over the whole universe
        let mut support = Vec::new();
        for index in 0..self.universe {
            if eval_poly(&locator, self.point(index)) == 0 {
                support.push(index);
                if support.len() > deg {
                    return SparseDecode::Dense;
                }
            }
        }
        if support.len() != deg {
            return SparseDecode::Dense;
        }
        let weights = match solve_weights(&support, &sk.syndrome, |i| self.point(i)) {
            Some(w) => w,
            None => return SparseDecode::Dense,
        };
        // verify remaining syndromes and map to signed weights
        let mut out = Vec::with_capacity(deg);
        for (&index, &w) in support.iter().zip(&weights) {
            let signed = if w <= weight_cap {
                w as i64
            } else if P - w <= weight_cap {
                -((P - w) as i64)
            } else {
                return SparseDecode::Dense;
            };
            if signed == 0 {
                return SparseDecode::Dense;
            }
            out.push((index, signed));
        }
        for j in 0..sk.syndrome.len() {
            let mut acc = 0u64;
            for &(index, w) in &out {
                acc = field::add(
                    acc,
                    field::mul(field::from_i64(w), field::pow(self.point(index), j as u64)),
                );
            }
            if acc != sk.syndrome[j] {
                return SparseDecode::Dense;
            }
        }
        let mut check = 0u64;
        for &(index, w) in &out {
            check = field::add(
                check,
                field::mul(field::from_i64(w), field::pow(self.gamma, index)),
            );
        }
        if check != sk.checkpoint {
            return SparseDecode::Dense;
        }
        SparseDecode::Vector(out)
    }
}

/// Minimal connection polynomial of the sequence via Berlekamp-Massey over
/// F_p. Returns the locator with constant term first; its roots are the
/// evaluation points of the support.
fn berlekamp_massey(seq: &[u64]) -> Vec<u64> {
    let mut c = vec![1u64]; // connection polynomial, c[0] = 1
    let mut b = vec![1u64];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut bb = 1u64;
    for n in 0..seq.len() {
        let mut d = seq[n];
        for i in 1..=l {
            if i < c.len() {
                d = field::add(d, field::mul(c[i], seq[n - i]));
            }
        }
        if d == 0 {
            m += 1;
        } else if 2 * l <= n {
            let t = c.clone();
            let coef = field::mul(d, field::inv(bb));
            if c.len() < b.len() + m {
                c.resize(b.len() + m, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                c[i + m] = field::sub(c[i + m], field::mul(coef, bi));
            }
            l = n + 1 - l;
            b = t;
            bb = d;
            m = 1;
        } else {
            let coef = field::mul(d, field::inv(bb));
            if c.len() < b.len() + m {
                c.resize(b.len() + m, 0);
            }
            for (i, &bi) in b.iter().enumerate() {
                c[i + m] = field::sub(c[i + m], field::mul(coef, bi));
            }
            m += 1;
        }
    }
    c.truncate(l + 1);
    // read highest-degree-first, c is the reciprocal locator: its roots
    // under Horner evaluation are exactly the support points
    c
}

fn eval_poly(coeffs: &[u64], x: u64) -> u64 {
    let mut acc = 0u64;
    for &c in coeffs {
        acc = field::add(field::mul(acc, x), c);
    }
    acc
}

/// Solve the transposed Vandermonde system sum_i w_i * a_i^j = p_j for
/// j = 0..|support|. Returns None if the system is singular.
#[allow(clippy::needless_range_loop)]
fn solve_weights(
    support: &[u64],
    syndrome: &[u64],
    point: impl Fn(u64) -> u64,
) -> Option<Vec<u64>> {
    let k = support.len();
    let mut mat: Vec<Vec<u64>> = Vec::with_capacity(k);
    for j in 0..k {
        let row: Vec<u64> = support
            .iter()
            .map(|&i| field::pow(point(i), j as u64))
            .collect();
        mat.push(row);
    }
    let mut rhs: Vec<u64> = syndrome[..k].to_vec();
    // Gaussian elimination
    for col in 0..k {
        let pivot = (col..k).find(|&r| mat[r][col] != 0)?;
        mat.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = field::inv(mat[col][col]);
        for cc in col..k {
            mat[col][cc] = field::mul(mat[col][cc], inv);
        }
        rhs[col] = field::mul(rhs[col], inv);
        for r in 0..k {
            if r != col && mat[r][col] != 0 {
                let f = mat[r][col];
                for cc in col..k {
                    mat[r][cc] = field::sub(mat[r][cc], field::mul(f, mat[col][cc]));
                }
                rhs[r] = field::sub(rhs[r], field::mul(f, rhs[col]));
            }
        }
    }
    Some(rhs)
}
