//! Deterministic result serialization: report and sweep CSVs written
//! atomically, the config hash, and the run manifest echoed to standard
//! output. CSV bytes depend only on (config, seed), never on wall-clock
//! state, so reruns diff clean; the manifest carries the timestamp instead.

use std::io::Write as _;
use std::path::Path;

use chrono::{SecondsFormat, Utc};

use crate::config::canonicalize;
use crate::error::{Error, Result};
use crate::harness::{BoundReport, RatePoint, RateTable};

/// Column order of every verification CSV.
pub const REPORT_HEADER: &str =
    "name,lambda,n,trials,lhs_estimate,lhs_stderr,rhs_value,margin,pass";

/// Column order of every sweep CSV; slope footer rows reuse the first two
/// columns as (slope.<column>, fitted value).
pub const SWEEP_HEADER: &str =
    "parameter,value,d_lambda,bias_functional,population_bias,mc_excess_risk,theorem1_total";

/// 17 significant digits: exact round-trip for 64-bit floats.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders verification reports in the pinned column order.
pub fn report_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.name,
            fmt_f64(r.lambda),
            r.n,
            r.trials,
            fmt_f64(r.lhs_estimate),
            fmt_f64(r.lhs_stderr),
            fmt_f64(r.rhs_value),
            fmt_f64(r.margin),
            r.pass,
        ));
    }
    out
}

/// Renders a sweep table plus fitted-slope footer rows.
pub fn sweep_csv(table: &RateTable) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in &table.points {
        out.push_str(&sweep_row(table.parameter.as_str(), p));
    }
    for (column, slope) in [
        ("d_lambda", table.d_lambda_slope),
        ("bias_functional", table.bias_slope),
        ("population_bias", table.population_bias_slope),
    ] {
        if let Some(s) = slope {
            out.push_str(&format!("slope.{column},{},,,,,\n", fmt_f64(s)));
        }
    }
    out
}

fn sweep_row(parameter: &str, p: &RatePoint) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        parameter,
        fmt_f64(p.value),
        fmt_f64(p.d_lambda),
        fmt_f64(p.bias_functional),
        fmt_f64(p.population_bias),
        p.mc_excess_risk.map(fmt_f64).unwrap_or_default(),
        fmt_f64(p.theorem1_total),
    )
}

/// Writes through a temp file in the destination directory and renames, so
/// readers never observe a truncated file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// FNV-1a, 64-bit.
pub fn fnv1a_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in text.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hash of the canonicalized config text, as printed in the manifest.
pub fn config_hash(config_text: &str) -> String {
    format!("{:016x}", fnv1a_hash(&canonicalize(config_text)))
}

/// Provenance block for one CLI run, printed to standard output. It never
/// enters the CSV, which stays byte-stable across reruns.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub tool_version: String,
    pub started_at: String,
    pub reports: Vec<BoundReport>,
}

impl RunManifest {
    pub fn new(command: String, config_text: &str, base_seed: u64) -> Self {
        Self {
            command,
            config_hash: config_hash(config_text),
            base_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            reports: Vec::new(),
        }
    }

    /// Header lines followed by one status line per report.
    pub fn render(&self) -> String {
        let mut out = format!(
            "run: {}\nconfig: {}\nseed: {}\nversion: {}\nstarted: {}\n",
            self.command, self.config_hash, self.base_seed, self.tool_version, self.started_at
        );
        let width = self.reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &self.reports {
            out.push_str(&render_report_line(r, width));
            out.push('\n');
        }
        out
    }
}

/// One aligned human-readable status line.
pub fn render_report_line(r: &BoundReport, name_width: usize) -> String {
    let status = if r.pass { "PASS" } else { "FAIL" };
    let spread = if r.lhs_stderr > 0.0 {
        format!(" (se {:.2e})", r.lhs_stderr)
    } else {
        String::new()
    };
    format!(
        "[{status}] {:<name_width$}  lambda={:<9.3e} n={:<5} lhs={:<13.6e} rhs={:<13.6e} margin={:+.3e}{spread}",
        r.name, r.lambda, r.n, r.lhs_estimate, r.rhs_value, r.margin
    )
}

/// Human-readable sweep block: labeled columns, then fitted slopes.
pub fn render_rate_points(label: &str, points: &[RatePoint]) -> String {
    let mut out = format!(
        "{label}\n{:<12} {:<12} {:<12} {:<12} {:<12} {:<12}\n",
        "value", "d_lambda", "bias", "pop_bias", "mc_risk", "bound_total"
    );
    for p in points {
        let mc = p
            .mc_excess_risk
            .map(|v| format!("{v:<12.4e}"))
            .unwrap_or_else(|| format!("{:<12}", "-"));
        out.push_str(&format!(
            "{:<12.4e} {:<12.4e} {:<12.4e} {:<12.4e} {mc} {:<12.4e}\n",
            p.value, p.d_lambda, p.bias_functional, p.population_bias, p.theorem1_total
        ));
    }
    out
}
