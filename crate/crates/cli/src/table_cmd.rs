//! `derive-table` and `check-table`.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use relworld::algebra::check_axioms;
use relworld::oracle::{derive_table, DerivationConfig};
use relworld::CompositionTable;

/// Derive a table from sampled genealogies and write it to `out`, or to
/// `sink` when no path is given. Progress goes to `log`.
pub fn derive_table_cmd(
    budget: Option<u64>,
    seed: u64,
    out: Option<&Path>,
    sink: &mut impl Write,
    log: &mut impl Write,
) -> anyhow::Result<CompositionTable> {
    let mut config = DerivationConfig::standard(seed);
    if let Some(b) = budget {
        config.budget = b;
    }
    let (table, stats) = derive_table(&config)?;
    writeln!(
        log,
        "sampled {} genealogies ({} triples), last new entry member at #{}",
        stats.genealogies, stats.triples, stats.last_change
    )?;
    writeln!(log, "checksum {}", table.checksum())?;
    match out {
        Some(p) => table
            .save(p)
            .with_context(|| format!("cannot write {}", p.display()))?,
        None => sink.write_all(table.to_text().as_bytes())?,
    }
    Ok(table)
}

/// Validate a table file. Returns whether it is clean; every problem found
/// is printed, including axiom violations behind a stale checksum.
pub fn check_table_cmd(path: &Path, out: &mut impl Write) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let (table, declared) = match CompositionTable::parse_records(&text) {
        Ok(parsed) => parsed,
        Err(e) => {
            writeln!(out, "malformed table: {e}")?;
            return Ok(false);
        }
    };
    let mut ok = true;
    let actual = table.checksum();
    match declared {
        Some(d) if d != actual => {
            writeln!(out, "checksum mismatch: header says {d}, records hash to {actual}")?;
            ok = false;
        }
        Some(_) => {}
        None => writeln!(out, "no checksum in header")?,
    }
    let report = check_axioms(&table);
    if report.is_valid() {
        writeln!(out, "all axioms hold; checksum {actual}")?;
    } else {
        writeln!(out, "{} axiom violation(s):", report.violations.len())?;
        for v in &report.violations {
            writeln!(out, "  {v}")?;
        }
        ok = false;
    }
    Ok(ok)
}
