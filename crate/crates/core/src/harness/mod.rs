//! Experiment runner: configuration, inequality suites, commands and CSV output.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::Result;

pub mod bounds;
pub mod commands;
pub mod config;

pub use commands::{
    cmd_chaos_check, cmd_evolve, cmd_scaling_study, cmd_verify_bounds, cmd_vlasov, BoundsReport,
    ChaosSummary, EvolveSummary, ScalingStudyResult, SuiteResult, VlasovSummary, DEFAULT_EPSILONS,
};
pub use config::{parse_config, ExperimentConfig};

/// Writes a header row and data rows with `,` separators and LF line endings.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|s| s.as_ref()))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip scientific notation, the number format of all CSV output.
pub(crate) fn num(v: f64) -> String {
    format!("{v:e}")
}
