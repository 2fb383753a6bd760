//! Linear sketches for (1 +/- eps) hypergraph cut sparsification under
//! dynamic edge streams: vertex-incidence sampler banks, fingerprinted
//! recovery, strength-decomposition decoding, a streaming encoder, a
//! simulated MPC merge protocol, and an exact brute-force oracle that
//! validates every probabilistic component on small instances.

pub mod bank;
pub mod config;
pub mod error;
pub mod hypergraph;
pub mod l0;
pub mod mpc;
pub mod oracle;
pub mod prf;
pub mod recovery;
pub mod sparsify;
pub mod stream;

pub use config::{ConfigFile, SketchConfig};
pub use error::{
    DecodeError, HypergraphError, MpcError, OracleError, ParseError, SketchError, StreamError,
};
pub use hypergraph::{Hyperedge, Hypergraph, Partition};
