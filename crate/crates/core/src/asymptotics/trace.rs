use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::{SetDef, SetSpec};
use crate::optimizer::{SolveResult, Status};

/// Version stamped into every trace and summary file.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// One solved `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    pub e_best: f64,
    /// `E_best / N^{1+s/d}`.
    pub g: f64,
    pub n1: usize,
    pub n2: usize,
    pub frac1: f64,
    pub min_dist: Option<f64>,
    pub status: Status,
}

impl TraceRecord {
    pub fn from_result(result: &SolveResult, s: f64, d: f64) -> Self {
        let n = result.config.len();
        TraceRecord {
            n,
            e_best: result.energy.total,
            g: crate::energy::normalized_energy(result.energy.total, n, s, d),
            n1: result.n1,
            n2: result.n2,
            frac1: if n == 0 { 0.0 } else { result.n1 as f64 / n as f64 },
            min_dist: result.energy.min_dist,
            status: result.status,
        }
    }
}

/// Best-found energies of one set over a range of `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTrace {
    pub schema_version: u32,
    /// Content hash of the set definition.
    pub set_id: String,
    pub set: SetDef,
    /// Content hashes of `A₁` and `A₂` when the set is a union.
    pub components: Option<[String; 2]>,
    pub s: f64,
    pub d: f64,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("trace records must have strictly increasing N (record {index})")]
    NotAscending { index: usize },
    #[error("record N={n}: {reason}")]
    BadRecord { n: usize, reason: &'static str },
    #[error("unsupported trace schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
}

impl AsymptoticTrace {
    pub fn new(set: &SetSpec, s: f64) -> Self {
        let components = match set {
            SetSpec::Union(u) => Some([u.a1().content_hash(), u.a2().content_hash()]),
            _ => None,
        };
        AsymptoticTrace {
            schema_version: TRACE_SCHEMA_VERSION,
            set_id: set.content_hash(),
            set: set.definition(),
            components,
            s,
            d: set.dimension(),
            records: Vec::new(),
        }
    }

    pub fn is_union(&self) -> bool {
        self.components.is_some()
    }

    /// Checks the schema version and the per-record invariants.
    pub fn check(&self) -> Result<(), TraceError> {
        if self.schema_version != TRACE_SCHEMA_VERSION {
            return Err(TraceError::SchemaVersion {
                found: self.schema_version,
                expected: TRACE_SCHEMA_VERSION,
            });
        }
        for (i, r) in self.records.iter().enumerate() {
            if i > 0 && r.n <= self.records[i - 1].n {
                return Err(TraceError::NotAscending { index: i });
            }
            let bad = |reason| Err(TraceError::BadRecord { n: r.n, reason });
            if r.n1 + r.n2 != r.n {
                return bad("N1 + N2 differs from N");
            }
            if !(0.0..=1.0).contains(&r.frac1) {
                return bad("frac1 outside [0, 1]");
            }
            let g = crate::energy::normalized_energy(r.e_best, r.n, self.s, self.d);
            if (g - r.g).abs() > 1e-12 * g.abs().max(f64::MIN_POSITIVE) {
                return bad("G does not match E_best");
            }
        }
        Ok(())
    }

    /// Writes the records as CSV with header
    /// `N,E_best,G,N1,N2,frac1,min_dist,status`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "E_best", "G", "N1", "N2", "frac1", "min_dist", "status"])?;
        for r in &self.records {
            w.write_record([
                r.n.to_string(),
                r.e_best.to_string(),
                r.g.to_string(),
                r.n1.to_string(),
                r.n2.to_string(),
                r.frac1.to_string(),
                r.min_dist.map(|m| m.to_string()).unwrap_or_default(),
                r.status.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
