//! Dynamic-stream encoder: applies hyperedge insertions and deletions to
//! both banks. The result depends only on the final edge multiset, never on
//! update order. Strict mode rejects deletions that would drive any
//! multiplicity negative; lenient mode allows them for linearity testing.

use std::collections::BTreeMap;

use crate::bank::{ConnectivityBank, SamplerBank};
use crate::config::SketchConfig;
use crate::error::{ParseError, StreamError};
use crate::hypergraph::{numbered_lines, parse_edge_line, parse_header, Hyperedge, Hypergraph};

/// One turnstile update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamUpdate {
    pub insert: bool,
    pub edge: Hyperedge,
}

impl StreamUpdate {
    pub fn insert(edge: Hyperedge) -> Self {
        StreamUpdate { insert: true, edge }
    }
    pub fn delete(edge: Hyperedge) -> Self {
        StreamUpdate { insert: false, edge }
    }
    pub fn delta(&self) -> i64 {
        if self.insert {
            1
        } else {
            -1
        }
    }
}

/// Parse the stream text format: the hypergraph header followed by one
/// `+`/`-` prefixed edge per line (no weight column; repeats express
/// multiplicity).
pub fn parse_stream(input: &str) -> Result<(Vec<StreamUpdate>, u32, u32), ParseError> {
    let mut lines = numbered_lines(input);
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, 1, "missing header line"))?;
    let (n, r_max) = parse_header(lineno, header)?;
    let mut updates = Vec::new();
    for (lineno, line) in lines {
        let (op, edge, weight) = parse_edge_line(lineno, line, n, r_max)?;
        if weight != 1 {
            return Err(ParseError::new(
                lineno,
                3,
                "stream updates carry unit weight; repeat the line instead",
            ));
        }
        updates.push(StreamUpdate {
            insert: op == '+',
            edge,
        });
    }
    Ok((updates, n, r_max))
}

pub fn stream_to_text(updates: &[StreamUpdate], n: u32, r_max: u32) -> String {
    let mut out = format!("n {n} r {r_max}\n");
    for u in updates {
        out.push_str(&format!("{} {}\n", if u.insert { '+' } else { '-' }, u.edge));
    }
    out
}

/// Encoder state over both banks plus the running multiset (for strict-mode
/// accounting and m_max enforcement).
#[derive(Debug, Clone)]
pub struct StreamEncoder {
    bank: SamplerBank,
    conn: ConnectivityBank,
    multiset: BTreeMap<Hyperedge, i64>,
}

impl StreamEncoder {
    pub fn new(config: &SketchConfig) -> Self {
        StreamEncoder {
            bank: SamplerBank::new(config),
            conn: ConnectivityBank::new(config),
            multiset: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &SketchConfig {
        self.bank.config()
    }

    pub fn apply(&mut self, update: &StreamUpdate) -> Result<(), StreamError> {
        let cfg = self.bank.config();
        let delta = update.delta();
        let current = self.multiset.get(&update.edge).copied().unwrap_or(0);
        if cfg.strict_stream && current + delta < 0 {
            return Err(StreamError::NegativeMultiplicity);
        }
        let distinct_after = if current == 0 && delta > 0 {
            self.multiset.len() + 1
        } else {
            self.multiset.len()
        };
        if distinct_after as u64 > cfg.m_max {
            return Err(StreamError::TooManyEdges(cfg.m_max));
        }
        self.bank.encode_update(&update.edge, delta)?;
        self.conn.encode_update(&update.edge, delta)?;
        let next = current + delta;
        if next == 0 {
            self.multiset.remove(&update.edge);
        } else {
            self.multiset.insert(update.edge.clone(), next);
        }
        Ok(())
    }

    /// The live multiset as a hypergraph (positive multiplicities only).
    pub fn current_hypergraph(&self) -> Hypergraph {
        let n = self.bank.config().n;
        let mut h = Hypergraph::new(n);
        for (e, &w) in &self.multiset {
            if w > 0 {
                h.add_edge(e.clone(), w as u64).expect("validated on apply");
            }
        }
        h
    }

    pub fn finish(self) -> (SamplerBank, ConnectivityBank) {
        (self.bank, self.conn)
    }

    pub fn banks(&self) -> (&SamplerBank, &ConnectivityBank) {
        (&self.bank, &self.conn)
    }
}

/// Encode a whole update sequence; the resulting banks are a function of
/// (final multiset, config, seed) only.
pub fn stream_encode(
    updates: &[StreamUpdate],
    config: &SketchConfig,
) -> Result<(SamplerBank, ConnectivityBank), StreamError> {
    let mut enc = StreamEncoder::new(config);
    for u in updates {
        enc.apply(u)?;
    }
    Ok(enc.finish())
}
