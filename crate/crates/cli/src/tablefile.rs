//! JSON serialisation of coefficient tables with exact decimal-string rationals.

use std::path::Path;
use std::time::Duration;

use maxeig_core::recursion::RecursionStats;
use maxeig_core::{CoefficientTable, EnsembleParams, ExpPoly};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub n: u32,
    pub a: u32,
    pub beta: u32,
    pub gamma: u64,
}

/// `[j, k, numerator, denominator]` for the coefficient of `x^k e^{-j beta x/2}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord(pub u32, pub u32, pub String, pub String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub peak_term_count: usize,
    pub max_coefficient_bits: u32,
}

impl Provenance {
    pub fn from_stats(stats: &RecursionStats) -> Self {
        Provenance {
            tool_version: format!("maxeig {}", env!("CARGO_PKG_VERSION")),
            wall_time_seconds: stats.elapsed.as_secs_f64(),
            peak_term_count: stats.peak_terms,
            max_coefficient_bits: stats.max_coeff_bits,
        }
    }

    pub fn wall_time(&self) -> Duration {
        Duration::from_secs_f64(self.wall_time_seconds.max(0.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableFile {
    pub schema_version: u32,
    pub params: ParamsRecord,
    pub c: Vec<TermRecord>,
    pub d: Vec<TermRecord>,
    pub provenance: Provenance,
}

fn records(f: &ExpPoly) -> Vec<TermRecord> {
    f.terms()
        .map(|(j, k, c)| TermRecord(j, k, c.numer().to_string(), c.denom().to_string()))
        .collect()
}

fn parse_terms(rate: &Rational, recs: &[TermRecord], which: &str) -> CliResult<ExpPoly> {
    let mut terms = Vec::with_capacity(recs.len());
    for TermRecord(j, k, num, den) in recs {
        let bad = |what: &str| CliError::Format(format!("{which}[{j},{k}]: {what}"));
        let num: Integer = num
            .parse()
            .map_err(|_| bad("numerator is not an integer"))?;
        let den: Integer = den
            .parse()
            .map_err(|_| bad("denominator is not an integer"))?;
        if den <= 0 {
            return Err(bad("denominator must be positive"));
        }
        terms.push(((*j, *k), Rational::from((num, den))));
    }
    let f = ExpPoly::from_terms(rate.clone(), terms);
    if f.len() != recs.len() {
        return Err(CliError::Format(format!(
            "{which} has duplicate or zero entries"
        )));
    }
    Ok(f)
}

impl TableFile {
    pub fn from_table(table: &CoefficientTable, provenance: Provenance) -> Self {
        let p = table.params();
        TableFile {
            schema_version: SCHEMA_VERSION,
            params: ParamsRecord {
                n: p.n(),
                a: p.a(),
                beta: p.beta(),
                gamma: p.gamma(),
            },
            c: records(table.pdf()),
            d: records(table.cdf()),
            provenance,
        }
    }

    pub fn to_table(&self) -> CliResult<CoefficientTable> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Format(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let r = &self.params;
        let params = EnsembleParams::new(r.n, r.a, r.beta)?;
        if params.gamma() != r.gamma {
            return Err(CliError::Format(format!(
                "gamma = {} but (n, a, beta) give {}",
                r.gamma,
                params.gamma()
            )));
        }
        let pdf = parse_terms(params.lambda(), &self.c, "c")?;
        let cdf = parse_terms(params.lambda(), &self.d, "d")?;
        Ok(CoefficientTable::from_parts(params, pdf, cdf)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table files always serialise")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Format(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
