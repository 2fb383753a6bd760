//! Sketch configuration: user-supplied bounds and constants plus every
//! derived parameter (stage counts, fingerprint grids, repetition budgets,
//! error split). A config is fixed before the stream and hashed into bank
//! headers so that only identically-parameterized sketches merge.

use num::rational::BigRational;
use num::{BigInt, One, Signed};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::SketchError;
use crate::l0::ceil_log2_ratio;

/// Serializable rational ("a/b" or "a" in config files).
pub fn parse_ratio(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().ok()?;
        let d: BigInt = b.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let whole: BigInt = if int.is_empty() { BigInt::from(0) } else { int.parse().ok()? };
        let frac_n: BigInt = frac.parse().ok()?;
        let neg = int.starts_with('-');
        let mag = whole.abs() * &scale + frac_n;
        return Some(BigRational::new(if neg { -mag } else { mag }, scale));
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from(n))
}

pub fn format_ratio(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn default_c() -> u32 {
    2
}
fn default_c_rep() -> u32 {
    1
}
fn default_rep_cap() -> u32 {
    96
}
fn default_min_reps() -> u32 {
    4
}
fn default_c_conn() -> u32 {
    4
}
fn default_c_sampler() -> u32 {
    4
}
fn default_bank_c_sampler() -> u32 {
    1
}
fn default_delta() -> String {
    String::new()
}
fn default_bank_delta() -> String {
    "1/8".to_string()
}
fn default_oracle_cap() -> u32 {
    12
}
fn default_twocut_cap() -> u32 {
    20
}
fn default_s_cap() -> u32 {
    8
}
fn default_weight_cap() -> u64 {
    1 << 32
}
fn default_strict() -> bool {
    true
}
fn default_conn_support_exp() -> u32 {
    5
}

/// On-disk form of the configuration (TOML-friendly).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConfigFile {
    pub n: u32,
    pub m_max: u64,
    pub r_max: u32,
    /// Target sparsifier accuracy, e.g. "1/2".
    pub eps: String,
    /// Master seed as 64 hex chars.
    pub master_seed: String,
    #[serde(default = "default_c")]
    pub c: u32,
    #[serde(default = "default_c_rep")]
    pub c_rep: u32,
    #[serde(default = "default_rep_cap")]
    pub rep_cap: u32,
    #[serde(default = "default_min_reps")]
    pub min_reps: u32,
    #[serde(default = "default_c_conn")]
    pub c_conn: u32,
    #[serde(default = "default_c_sampler")]
    pub c_sampler: u32,
    #[serde(default = "default_bank_c_sampler")]
    pub bank_c_sampler: u32,
    /// Standalone sampler failure budget; empty means 1/n^3.
    #[serde(default = "default_delta")]
    pub delta: String,
    #[serde(default = "default_bank_delta")]
    pub bank_delta: String,
    #[serde(default = "default_oracle_cap")]
    pub oracle_vertex_cap: u32,
    #[serde(default = "default_twocut_cap")]
    pub oracle_twocut_cap: u32,
    #[serde(default = "default_s_cap")]
    pub s_cap: u32,
    #[serde(default = "default_weight_cap")]
    pub weight_cap: u64,
    #[serde(default = "default_strict")]
    pub strict_stream: bool,
    #[serde(default = "default_conn_support_exp")]
    pub conn_support_exp: u32,
    /// Override for the connectivity-bank stage offset beyond the main
    /// stage count; None applies log2(n^20 / eps*^2).
    #[serde(default)]
    pub conn_offset_override: Option<u32>,
}

/// Fully-resolved configuration used by the sketch machinery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchConfig {
    pub n: u32,
    pub m_max: u64,
    pub r_max: u32,
    pub eps: BigRational,
    pub c: u32,
    pub c_rep: u32,
    pub rep_cap: u32,
    pub min_reps: u32,
    pub c_conn: u32,
    pub c_sampler: u32,
    pub bank_c_sampler: u32,
    pub delta: BigRational,
    pub bank_delta: BigRational,
    pub oracle_vertex_cap: u32,
    pub oracle_twocut_cap: u32,
    pub s_cap: u32,
    pub weight_cap: u64,
    pub strict_stream: bool,
    pub conn_support_exp: u32,
    pub conn_offset_override: Option<u32>,
    pub master_seed: [u8; 32],
}

impl SketchConfig {
    pub fn from_file(f: &ConfigFile) -> Result<Self, SketchError> {
        let eps = parse_ratio(&f.eps)
            .filter(|e| e.is_positive() && *e < BigRational::one())
            .ok_or_else(|| SketchError::ConfigMismatch("eps must be in (0, 1)".into()))?;
        let master_seed = parse_seed(&f.master_seed)
            .ok_or_else(|| SketchError::ConfigMismatch("master_seed must be 64 hex chars".into()))?;
        let n_cubed = BigRational::from(BigInt::from(f.n as u64).pow(3));
        let delta = if f.delta.is_empty() {
            n_cubed.recip()
        } else {
            parse_ratio(&f.delta)
                .filter(|d| d.is_positive() && *d < BigRational::one())
                .ok_or_else(|| SketchError::ConfigMismatch("delta must be in (0, 1)".into()))?
        };
        let bank_delta = parse_ratio(&f.bank_delta)
            .filter(|d| d.is_positive() && *d < BigRational::one())
            .ok_or_else(|| SketchError::ConfigMismatch("bank_delta must be in (0, 1)".into()))?;
        if f.n < 2 {
            return Err(SketchError::ConfigMismatch("n must be at least 2".into()));
        }
        if f.r_max < 2 || f.r_max > f.n {
            return Err(SketchError::ConfigMismatch("r_max must be in [2, n]".into()));
        }
        if f.m_max < 1 {
            return Err(SketchError::ConfigMismatch("m_max must be positive".into()));
        }
        Ok(SketchConfig {
            n: f.n,
            m_max: f.m_max,
            r_max: f.r_max,
            eps,
            c: f.c,
            c_rep: f.c_rep,
            rep_cap: f.rep_cap,
            min_reps: f.min_reps,
            c_conn: f.c_conn,
            c_sampler: f.c_sampler,
            bank_c_sampler: f.bank_c_sampler,
            delta,
            bank_delta,
            oracle_vertex_cap: f.oracle_vertex_cap,
            oracle_twocut_cap: f.oracle_twocut_cap,
            s_cap: f.s_cap,
            weight_cap: f.weight_cap,
            strict_stream: f.strict_stream,
            conn_support_exp: f.conn_support_exp,
            conn_offset_override: f.conn_offset_override,
            master_seed,
        })
    }

    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            n: self.n,
            m_max: self.m_max,
            r_max: self.r_max,
            eps: format_ratio(&self.eps),
            master_seed: hex_seed(&self.master_seed),
            c: self.c,
            c_rep: self.c_rep,
            rep_cap: self.rep_cap,
            min_reps: self.min_reps,
            c_conn: self.c_conn,
            c_sampler: self.c_sampler,
            bank_c_sampler: self.bank_c_sampler,
            delta: format_ratio(&self.delta),
            bank_delta: format_ratio(&self.bank_delta),
            oracle_vertex_cap: self.oracle_vertex_cap,
            oracle_twocut_cap: self.oracle_twocut_cap,
            s_cap: self.s_cap,
            weight_cap: self.weight_cap,
            strict_stream: self.strict_stream,
            conn_support_exp: self.conn_support_exp,
            conn_offset_override: self.conn_offset_override,
        }
    }

    /// Convenience constructor with default constants.
    pub fn new(n: u32, m_max: u64, r_max: u32, eps: BigRational, seed: [u8; 32]) -> Self {
        let file = ConfigFile {
            n,
            m_max,
            r_max,
            eps: format_ratio(&eps),
            master_seed: hex_seed(&seed),
            c: default_c(),
            c_rep: default_c_rep(),
            rep_cap: default_rep_cap(),
            min_reps: default_min_reps(),
            c_conn: default_c_conn(),
            c_sampler: default_c_sampler(),
            bank_c_sampler: default_bank_c_sampler(),
            delta: default_delta(),
            bank_delta: default_bank_delta(),
            oracle_vertex_cap: default_oracle_cap(),
            oracle_twocut_cap: default_twocut_cap(),
            s_cap: default_s_cap(),
            weight_cap: default_weight_cap(),
            strict_stream: default_strict(),
            conn_support_exp: default_conn_support_exp(),
            conn_offset_override: None,
        };
        SketchConfig::from_file(&file).expect("defaults valid")
    }

    /// ceil(log2(n)), used wherever the algorithms say log(n).
    pub fn log_n(&self) -> u32 {
        (32 - (self.n - 1).leading_zeros()).max(1)
    }

    /// Main-bank stage count: floor(log2(m_max)) + 1; stage i keeps edges
    /// at rate 2^-i under the nested filter product.
    pub fn num_stages(&self) -> u32 {
        64 - self.m_max.max(1).leading_zeros()
    }

    /// Fingerprint levels 0..=log2(n) (outer nesting).
    pub fn num_levels(&self) -> u32 {
        self.log_n() + 1
    }

    /// Fingerprint rates {1, 1/2, ..., 1/n} (inner sweep), same count.
    pub fn num_rates(&self) -> u32 {
        self.log_n() + 1
    }

    /// Repetition budget for one (stage, level): geometric in both indices,
    /// clamped to [min_reps, rep_cap].
    pub fn rep_budget(&self, stage: u32, level: u32) -> u32 {
        let base = self.m_max >> stage;
        let scaled = (self.c_rep as u64 * base) >> level;
        (scaled.min(self.rep_cap as u64) as u32).max(self.min_reps)
    }

    /// eps* = eps / ceil(log2(n/eps))^2; all stage-level sampling constants
    /// derive from it.
    pub fn eps_star(&self) -> BigRational {
        set_error_parameter(&self.eps, self.n)
    }

    /// phi = C log(n) / eps*^2.
    pub fn phi_star(&self) -> BigRational {
        let es = self.eps_star();
        BigRational::from(BigInt::from(self.c as u64 * self.log_n() as u64)) / (&es * &es)
    }

    /// kappa = 100 phi.
    pub fn kappa(&self) -> BigRational {
        BigRational::from(BigInt::from(100)) * self.phi_star()
    }

    /// Connectivity-bank stage count: main stages plus the preprocessing
    /// offset log2(n^20 / eps*^2) (overridable; the tail stages are empty
    /// in practice but keep the schedule indexing intact).
    pub fn conn_offset(&self) -> u32 {
        if let Some(o) = self.conn_offset_override {
            return o;
        }
        let es = self.eps_star();
        let n20 = BigRational::from(BigInt::from(self.n as u64).pow(20));
        ceil_log2_ratio(&(n20 / (&es * &es)))
    }

    pub fn conn_num_stages(&self) -> u32 {
        self.num_stages() + self.conn_offset()
    }

    /// Connectivity rounds per stage: c_conn * log(n) correlated samplers
    /// per vertex.
    pub fn conn_rounds(&self) -> u32 {
        (self.c_conn * self.log_n()).max(1)
    }

    /// Support bound for connectivity samplers: n^conn_support_exp.
    pub fn conn_support_bound(&self) -> u64 {
        (self.n as u64).saturating_pow(self.conn_support_exp)
    }

    /// Standalone sampler shape from (c_sampler, delta):
    /// reps = ceil(c_sampler * log2(1/delta)).
    pub fn sampler_params(&self, support_bound: u64) -> crate::l0::L0Params {
        crate::l0::L0Params::new(support_bound, self.c_sampler, &self.delta)
    }

    /// Bank-internal sampler shape from (bank_c_sampler, bank_delta); the
    /// rep budget absorbs decode failures, so these run much leaner.
    pub fn bank_sampler_params(&self, support_bound: u64) -> crate::l0::L0Params {
        crate::l0::L0Params::new(support_bound, self.bank_c_sampler, &self.bank_delta)
    }

    /// Canonical byte encoding, hashed into bank headers.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let f = self.to_file();
        let mut out = Vec::new();
        let mut push = |s: &str| {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        push("cutsketch-config-v1");
        push(&f.n.to_string());
        push(&f.m_max.to_string());
        push(&f.r_max.to_string());
        push(&f.eps);
        push(&f.c.to_string());
        push(&f.c_rep.to_string());
        push(&f.rep_cap.to_string());
        push(&f.min_reps.to_string());
        push(&f.c_conn.to_string());
        push(&f.c_sampler.to_string());
        push(&f.bank_c_sampler.to_string());
        push(&f.delta);
        push(&f.bank_delta);
        push(&f.oracle_vertex_cap.to_string());
        push(&f.oracle_twocut_cap.to_string());
        push(&f.s_cap.to_string());
        push(&f.weight_cap.to_string());
        push(&f.strict_stream.to_string());
        push(&f.conn_support_exp.to_string());
        push(&format!("{:?}", f.conn_offset_override));
        out
    }

    pub fn config_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.canonical_bytes());
        h.finalize().into()
    }

    pub fn seed_commitment(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"cutsketch-seed-commit-v1");
        h.update(self.master_seed);
        h.finalize().into()
    }
}

/// eps* = eps / ceil(log2(n/eps))^2, exact over rationals.
pub fn set_error_parameter(eps: &BigRational, n: u32) -> BigRational {
    assert!(eps.is_positive() && *eps < BigRational::one(), "eps must be in (0,1)");
    let ratio = BigRational::from(BigInt::from(n)) / eps;
    let k = ceil_log2_ratio(&ratio).max(1) as u64;
    eps / BigRational::from(BigInt::from(k * k))
}

pub fn parse_seed(s: &str) -> Option<[u8; 32]> {
    let s = s.trim();
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

pub fn hex_seed(seed: &[u8; 32]) -> String {
    seed.iter().map(|b| format!("{b:02x}")).collect()
}
