//! Report persistence: JSON with 17 significant digits, Markdown tables
//! and gnuplot scripts, plus the run manifest.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::analysis::{EstimateCheck, Verdict};
use crate::error::Result;
use crate::flux::FluxSpec;
use crate::grid::fmt17;
use crate::initial_data::MeasureData;

use super::config::RunConfig;

/// Pretty JSON whose floats always carry 17 significant digits.
struct Fixed17(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt17(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

/// Serialize with stable field order and 17-digit floats; non-finite
/// floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Md,
    Plot,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Md => "md",
            ReportFormat::Plot => "gp",
        }
    }
}

/// A report renders as JSON, as Markdown and optionally as a gnuplot
/// script over CSVs that sit next to it.
pub trait Report: Serialize {
    fn markdown(&self) -> String;

    fn plot_script(&self) -> Option<String> {
        None
    }
}

/// Write `report` to `<dir>/<stem>.<ext>`. Returns the file name, or `None`
/// when the report has no plot.
pub fn emit_report<R: Report + ?Sized>(
    report: &R,
    format: ReportFormat,
    dir: &Path,
    stem: &str,
) -> Result<Option<String>> {
    let text = match format {
        ReportFormat::Json => to_json_string(report)?,
        ReportFormat::Md => report.markdown(),
        ReportFormat::Plot => match report.plot_script() {
            Some(s) => s,
            None => return Ok(None),
        },
    };
    let name = format!("{stem}.{}", format.extension());
    std::fs::write(dir.join(&name), text)?;
    Ok(Some(name))
}

/// Markdown table from a header and rows of cells.
pub fn md_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n|{}|\n", header.join(" | "), vec!["---"; header.len()].join("|"));
    for r in rows {
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    s
}

/// Short fixed-width rendering for tables.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "–".into()
    } else {
        format!("{v:.6e}")
    }
}

pub fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::Inapplicable => "n/a",
    }
}

/// Estimate checks as a Markdown table.
pub fn checks_table(checks: &[EstimateCheck]) -> String {
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                verdict_word(c.verdict).into(),
                num(c.lhs_max_ratio),
                num(1.0 + c.tol),
                c.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    md_table(&["estimate", "verdict", "max ratio", "limit", "note"], &rows)
}

/// One line of the manifest's verdict summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub name: String,
    pub verdict: Verdict,
    pub lhs_max_ratio: f64,
    pub tol: f64,
}

impl From<&EstimateCheck> for VerdictSummary {
    fn from(c: &EstimateCheck) -> Self {
        Self { name: c.name.clone(), verdict: c.verdict, lhs_max_ratio: c.lhs_max_ratio, tol: c.tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestInputs {
    pub config: RunConfig,
    pub flux: FluxSpec,
    pub init: MeasureData,
}

/// Run record written as `manifest.json`; free of timestamps and host data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub command: String,
    pub inputs: ManifestInputs,
    /// Artifact file names relative to the run directory, sorted.
    pub outputs: Vec<String>,
    pub verdicts: Vec<VerdictSummary>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Estimate id to verdict, one row per implemented estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimsMatrix {
    pub rows: Vec<VerdictSummary>,
}

impl Report for ClaimsMatrix {
    fn markdown(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| vec![r.name.clone(), verdict_word(r.verdict).into(), num(r.lhs_max_ratio), num(1.0 + r.tol)])
            .collect();
        format!("# Claims matrix\n\n{}", md_table(&["estimate", "verdict", "max ratio", "limit"], &rows))
    }
}

/// Run directory `<root>/<hash>`, created if missing.
pub fn run_dir(root: &Path, hash: &str) -> Result<PathBuf> {
    let dir = root.join(hash);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Two-column CSV with a header; 17 significant digits.
pub fn write_series(path: &Path, header: [&str; 2], rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([fmt17(a), fmt17(b)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CheckRow;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, 1.0 / 3.0, f64::NAN]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        assert!(s.contains("null"));
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], Some(1.0 / 3.0));
    }

    #[test]
    fn emitting_twice_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let chk = EstimateCheck::from_rows("x", 0.05, vec![CheckRow::new(1.0, 0.5, 1.0)]);
        let m = ClaimsMatrix { rows: vec![(&chk).into()] };
        let a = emit_report(&m, ReportFormat::Json, dir.path(), "a").unwrap().unwrap();
        let b = emit_report(&m, ReportFormat::Json, dir.path(), "b").unwrap().unwrap();
        assert_eq!(std::fs::read(dir.path().join(a)).unwrap(), std::fs::read(dir.path().join(b)).unwrap());
        assert!(emit_report(&m, ReportFormat::Plot, dir.path(), "c").unwrap().is_none());
        let md = emit_report(&m, ReportFormat::Md, dir.path(), "a").unwrap().unwrap();
        let text = std::fs::read_to_string(dir.path().join(md)).unwrap();
        assert!(text.contains("| x | pass |"));
    }
}
