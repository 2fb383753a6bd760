use thiserror::Error;

/// Errors from hypergraph construction and partition handling.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("hyperedge arity {0} is below the minimum of 2")]
    ArityTooSmall(usize),
    #[error("hyperedge arity {arity} exceeds the bound r_max = {r_max}")]
    ArityTooLarge { arity: usize, r_max: u32 },
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: u32, n: u32 },
    #[error("duplicate vertex {0} in hyperedge")]
    DuplicateVertex(u32),
    #[error("edge weight must be >= 1")]
    ZeroWeight,
    #[error("partition blocks overlap at vertex {0}")]
    OverlappingBlocks(u32),
    #[error("partition has an empty block")]
    EmptyBlock,
    #[error("partition does not cover vertex {0}")]
    IncompletePartition(u32),
    #[error("a k-cut needs at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
}

/// Errors from the brute-force oracle.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {n} vertices, exceeding the oracle cap of {cap}")]
    CapExceeded { n: u32, cap: u32 },
    #[error("hypergraph is empty or has fewer than 2 vertices")]
    DegenerateInstance,
    #[error("edge not present in hypergraph")]
    EdgeAbsent,
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// Errors from sketch construction, updates and merging.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SketchError {
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("seed commitment mismatch between banks")]
    SeedMismatch,
    #[error("update magnitude {delta} exceeds the weight cap {cap}")]
    WeightCapExceeded { delta: i64, cap: u64 },
    #[error("sparsity bound {s} exceeds the recovery cap {cap}")]
    SparsityCapExceeded { s: usize, cap: usize },
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// Errors raised while decoding a frozen bank into a sparsifier.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("contracted instance has {n} super-vertices, exceeding the oracle cap of {cap}")]
    OracleCapExceeded { n: u32, cap: u32 },
    #[error("kappa = {kappa} must be strictly below phi*log(n) = {bound}")]
    KappaTooLarge { kappa: String, bound: String },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// Errors from the stream encoder and the MPC simulator.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum StreamError {
    #[error("deletion drives edge multiplicity negative in strict mode")]
    NegativeMultiplicity,
    #[error("distinct edge count exceeds m_max = {0}")]
    TooManyEdges(u64),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// MPC simulation failures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MpcError {
    #[error("machine {machine} exceeds the memory budget in round {round}: {used} > {budget} bytes")]
    BudgetExceeded {
        round: usize,
        machine: usize,
        used: u64,
        budget: u64,
    },
    #[error("shard list is empty")]
    NoShards,
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Text-format parse failure with a line/column diagnostic.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }
}
