//! Command-line front end: encode dynamic streams into bank files, merge
//! and decode them, verify sparsifiers against the exact oracle, query the
//! oracle directly, simulate the MPC protocol, and run the self-test
//! property suite.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 input error, 3 resource or
//! budget error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num::rational::BigRational;

use cutsketch_core::bank::{ConnectivityBank, SamplerBank};
use cutsketch_core::config::{format_ratio, parse_ratio, parse_seed, ConfigFile, SketchConfig};
use cutsketch_core::error::{DecodeError, MpcError, StreamError};
use cutsketch_core::hypergraph::Hypergraph;
use cutsketch_core::mpc::{expected_rounds, mpc_simulate};
use cutsketch_core::oracle;
use cutsketch_core::sparsify::{sparsify, SparsifierOutput};
use cutsketch_core::stream::{parse_stream, stream_encode, StreamUpdate};

mod selftest;

#[derive(Parser)]
#[command(name = "cutsketch", version, about = "Linear sketches for hypergraph cut sparsification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config file (n, m_max, r_max, eps, constants, master seed).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed (64 hex chars).
    #[arg(long)]
    seed: Option<String>,
    /// Override eps, e.g. "1/2".
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    m_max: Option<u64>,
    #[arg(long)]
    r_max: Option<u32>,
    #[arg(long)]
    c: Option<u32>,
    #[arg(long)]
    c_rep: Option<u32>,
    #[arg(long)]
    c_conn: Option<u32>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    oracle_cap: Option<u32>,
    #[arg(long)]
    twocut_cap: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a stream file into a bank file.
    Encode {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge bank files built with identical configs and seeds.
    Merge {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Input bank files (two or more).
        inputs: Vec<PathBuf>,
    },
    /// Decode a bank file into a sparsifier text file.
    Decode {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check every cut of a sparsifier against a hypergraph.
    Verify {
        #[arg(long)]
        hypergraph: PathBuf,
        #[arg(long)]
        sparsifier: PathBuf,
        /// Tolerance, e.g. "1/2" or "0.5".
        #[arg(long)]
        eps: String,
        /// Enumerate all k-cuts instead of 2-cuts only.
        #[arg(long)]
        kcuts: bool,
        #[arg(long, default_value_t = oracle::DEFAULT_VERTEX_CAP)]
        vertex_cap: u32,
        #[arg(long, default_value_t = oracle::DEFAULT_TWOCUT_CAP)]
        twocut_cap: u32,
    },
    /// Exact minimum normalized k-cut and per-edge strengths.
    Oracle {
        #[arg(long)]
        hypergraph: PathBuf,
        /// Also report the census of cuts of size <= t * phi.
        #[arg(long)]
        census: Option<String>,
        #[arg(long, default_value_t = oracle::DEFAULT_VERTEX_CAP)]
        cap: u32,
    },
    /// Simulate the MPC protocol over sharded input.
    MpcSim {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        stream: PathBuf,
        #[arg(long)]
        shards: usize,
        /// Per-machine memory budget in bytes.
        #[arg(long)]
        budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in property suite.
    Selftest {
        /// Skip the end-to-end decode check.
        #[arg(long)]
        quick: bool,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

fn main() -> ExitCode {
    // die quietly when stdout is a closed pipe (e.g. `cutsketch oracle | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Map error chains onto the documented exit codes.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(mpc) = cause.downcast_ref::<MpcError>() {
            return match mpc {
                MpcError::BudgetExceeded { .. } => EXIT_RESOURCE,
                MpcError::Decode(DecodeError::OracleCapExceeded { .. }) => EXIT_RESOURCE,
                MpcError::Stream(StreamError::TooManyEdges(_)) => EXIT_RESOURCE,
                _ => EXIT_INPUT,
            };
        }
        if let Some(dec) = cause.downcast_ref::<DecodeError>() {
            return match dec {
                DecodeError::OracleCapExceeded { .. } => EXIT_RESOURCE,
                _ => EXIT_INPUT,
            };
        }
        if let Some(stream) = cause.downcast_ref::<StreamError>() {
            return match stream {
                StreamError::TooManyEdges(_) => EXIT_RESOURCE,
                _ => EXIT_INPUT,
            };
        }
        if cause.downcast_ref::<cutsketch_core::OracleError>().is_some() {
            return EXIT_RESOURCE;
        }
    }
    EXIT_INPUT
}

fn load_config(args: &ConfigArgs) -> anyhow::Result<SketchConfig> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", args.config.display()))?;
    let mut file: ConfigFile = toml::from_str(&text)
        .map_err(|e| anyhow::anyhow!("parsing {}: {e}", args.config.display()))?;
    if let Some(seed) = &args.seed {
        parse_seed(seed).ok_or_else(|| anyhow::anyhow!("--seed must be 64 hex chars"))?;
        file.master_seed = seed.clone();
    }
    if let Some(eps) = &args.eps {
        file.eps = eps.clone();
    }
    if let Some(n) = args.n {
        file.n = n;
    }
    if let Some(m) = args.m_max {
        file.m_max = m;
    }
    if let Some(r) = args.r_max {
        file.r_max = r;
    }
    if let Some(c) = args.c {
        file.c = c;
    }
    if let Some(c) = args.c_rep {
        file.c_rep = c;
    }
    if let Some(c) = args.c_conn {
        file.c_conn = c;
    }
    if let Some(d) = &args.delta {
        file.delta = d.clone();
    }
    if let Some(cap) = args.oracle_cap {
        file.oracle_vertex_cap = cap;
    }
    if let Some(cap) = args.twocut_cap {
        file.oracle_twocut_cap = cap;
    }
    Ok(SketchConfig::from_file(&file)?)
}

/// Bank files hold both banks back to back, each length-prefixed.
fn write_bank_file(
    path: &Path,
    bank: &SamplerBank,
    conn: &ConnectivityBank,
) -> anyhow::Result<()> {
    let b = bank.to_bytes();
    let c = conn.to_bytes();
    let mut out = Vec::with_capacity(b.len() + c.len() + 24);
    out.extend_from_slice(b"CSBF");
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(b.len() as u64).to_le_bytes());
    out.extend_from_slice(&b);
    out.extend_from_slice(&(c.len() as u64).to_le_bytes());
    out.extend_from_slice(&c);
    std::fs::write(path, out).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))
}

fn read_bank_file(
    path: &Path,
    config: &SketchConfig,
) -> anyhow::Result<(SamplerBank, ConnectivityBank)> {
    let bytes =
        std::fs::read(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let fail = || anyhow::anyhow!("{}: malformed bank file", path.display());
    if bytes.len() < 16 || &bytes[..4] != b"CSBF" {
        return Err(fail());
    }
    let blen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + blen + 8 {
        return Err(fail());
    }
    let bank = SamplerBank::from_bytes(config, &bytes[16..16 + blen])?;
    let coff = 16 + blen;
    let clen = u64::from_le_bytes(bytes[coff..coff + 8].try_into().unwrap()) as usize;
    if bytes.len() < coff + 8 + clen {
        return Err(fail());
    }
    let conn = ConnectivityBank::from_bytes(config, &bytes[coff + 8..coff + 8 + clen])?;
    Ok((bank, conn))
}

fn read_stream_file(path: &Path) -> anyhow::Result<(Vec<StreamUpdate>, u32, u32)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    parse_stream(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn read_hypergraph_file(path: &Path) -> anyhow::Result<(Hypergraph, u32)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    Hypergraph::parse_text(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn parse_eps(s: &str) -> anyhow::Result<BigRational> {
    parse_ratio(s).ok_or_else(|| anyhow::anyhow!("invalid rational '{s}'"))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Encode { config, stream, out } => {
            let cfg = load_config(&config)?;
            let (updates, n, r_max) = read_stream_file(&stream)?;
            if n != cfg.n || r_max > cfg.r_max {
                return Err(anyhow::anyhow!(
                    "stream header (n {n}, r {r_max}) incompatible with config (n {}, r_max {})",
                    cfg.n,
                    cfg.r_max
                ));
            }
            let (bank, conn) = stream_encode(&updates, &cfg)?;
            write_bank_file(&out, &bank, &conn)?;
            println!(
                "encoded {} updates into {} ({} + {} samplers)",
                updates.len(),
                out.display(),
                bank.sampler_count(),
                conn.sampler_count()
            );
            Ok(EXIT_OK)
        }
        Command::Merge { config, out, inputs } => {
            if inputs.len() < 2 {
                return Err(anyhow::anyhow!("merge needs at least two input banks"));
            }
            let cfg = load_config(&config)?;
            let (mut bank, mut conn) = read_bank_file(&inputs[0], &cfg)?;
            for path in &inputs[1..] {
                let (b, c) = read_bank_file(path, &cfg)?;
                bank.merge_from(&b)?;
                conn.merge_from(&c)?;
            }
            write_bank_file(&out, &bank, &conn)?;
            println!("merged {} banks into {}", inputs.len(), out.display());
            Ok(EXIT_OK)
        }
        Command::Decode { config, bank, out } => {
            let cfg = load_config(&config)?;
            let (b, c) = read_bank_file(&bank, &cfg)?;
            let sp = sparsify(&b, &c)?;
            std::fs::write(&out, sp.to_text())
                .map_err(|e| anyhow::anyhow!("writing {}: {e}", out.display()))?;
            println!(
                "decoded {} edges (eps {}, eps* {})",
                sp.entries.len(),
                format_ratio(&sp.eps),
                format_ratio(&sp.eps_star)
            );
            Ok(EXIT_OK)
        }
        Command::Verify {
            hypergraph,
            sparsifier,
            eps,
            kcuts,
            vertex_cap,
            twocut_cap,
        } => {
            let (h, _) = read_hypergraph_file(&hypergraph)?;
            let text = std::fs::read_to_string(&sparsifier)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", sparsifier.display()))?;
            let sp = SparsifierOutput::parse_text(&text)
                .map_err(|e| anyhow::anyhow!("{}: {e}", sparsifier.display()))?;
            if sp.n != h.n() {
                return Err(anyhow::anyhow!(
                    "vertex counts differ: hypergraph {} vs sparsifier {}",
                    h.n(),
                    sp.n
                ));
            }
            let hs = sp.to_hypergraph()?;
            let eps = parse_eps(&eps)?;
            let report = oracle::verify_sparsifier(&h, &hs, &eps, kcuts, vertex_cap, twocut_cap)?;
            let worst = report
                .worst_ratio
                .as_ref()
                .map(format_ratio)
                .unwrap_or_else(|| "n/a".into());
            println!(
                "cuts {} mode {} ok {} worst-ratio {}{}",
                report.cuts_checked,
                if kcuts { "k-cut" } else { "2-cut" },
                report.ok,
                worst,
                if report.zero_mismatch { " zero-cut-mismatch" } else { "" }
            );
            Ok(if report.ok { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Oracle { hypergraph, census, cap } => {
            let (h, _) = read_hypergraph_file(&hypergraph)?;
            let (phi, witness) = oracle::min_normalized_kcut(&h, cap)?;
            println!("phi {}", format_ratio(&phi));
            println!("witness {witness}");
            let strengths = oracle::strength_recursive(&h, cap)?;
            for (e, lam) in strengths.iter() {
                println!("strength {e} {}", format_ratio(lam));
            }
            if let Some(t) = census {
                let t = parse_eps(&t)?;
                let count = oracle::count_small_kcuts(&h, &t, cap)?;
                println!("census t {} count {}", format_ratio(&t), count);
            }
            Ok(EXIT_OK)
        }
        Command::MpcSim {
            config,
            stream,
            shards,
            budget,
            out,
        } => {
            let cfg = load_config(&config)?;
            let (updates, n, _) = read_stream_file(&stream)?;
            if n != cfg.n {
                return Err(anyhow::anyhow!("stream n {n} != config n {}", cfg.n));
            }
            // shard the net multiset of the stream round-robin
            let mut multiset: BTreeMap<_, i64> = BTreeMap::new();
            for u in &updates {
                *multiset.entry(u.edge.clone()).or_insert(0) += u.delta();
            }
            if cfg.strict_stream && multiset.values().any(|&w| w < 0) {
                return Err(anyhow::anyhow!(StreamError::NegativeMultiplicity));
            }
            let mut edges = Vec::new();
            for (e, w) in multiset {
                for _ in 0..w.max(0) {
                    edges.push(e.clone());
                }
            }
            let shards = shards.max(1);
            let mut shard_lists = vec![Vec::new(); shards];
            for (i, e) in edges.iter().enumerate() {
                shard_lists[i % shards].push(e.clone());
            }
            let total = edges.len() as u64;
            let result = mpc_simulate(&shard_lists, &cfg, budget)?;
            std::fs::write(&out, result.sparsifier.to_text())
                .map_err(|e| anyhow::anyhow!("writing {}: {e}", out.display()))?;
            println!(
                "machines {} edges {} rounds {} expected-rounds {} peak-memory {} budget {} sparsifier-edges {}",
                shards,
                total,
                result.rounds,
                expected_rounds(cfg.n, total.max(1)),
                result.peak_memory,
                budget,
                result.sparsifier.entries.len()
            );
            Ok(EXIT_OK)
        }
        Command::Selftest { quick } => {
            let ok = selftest::run(quick);
            Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}
