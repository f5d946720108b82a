//! Run configuration: a TOML file merged with command-line overrides and
//! resolved into a canonical, hashable record.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::drivers::sweep_width;
use crate::analysis::DecayKind;
use crate::error::{config, Error, Result};
use crate::flux::FluxSpec;
use crate::grid::read_two_columns;
use crate::initial_data::{Atom, Density, MeasureData, Mollifier};
use crate::solver::Scheme;

use super::report::to_json_string;

/// Flux block: `kind` is one of `power`, `polysum`, `table`, `zero`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// `[μ, p]` pairs of a `polysum`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<[f64; 2]>>,
    /// Two-column CSV `r, f(r)` of a `table`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

impl FluxBlock {
    /// Parse `power:2`, `polysum:1@2,0.5@3`, `table:path` or `zero`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let block = |kind: &str| Self { kind: kind.into(), p: None, terms: None, table: None };
        match kind {
            "zero" | "heat" if arg.is_empty() => Ok(block("zero")),
            "power" => Ok(Self { p: Some(parse_f64(arg, "power exponent")?), ..block("power") }),
            "polysum" => {
                let terms = arg
                    .split(',')
                    .map(|t| {
                        let (mu, p) =
                            t.split_once('@').ok_or_else(|| config(format!("polysum term {t:?} must read mu@p")))?;
                        Ok([parse_f64(mu, "coefficient")?, parse_f64(p, "exponent")?])
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self { terms: Some(terms), ..block("polysum") })
            }
            "table" if !arg.is_empty() => Ok(Self { table: Some(arg.into()), ..block("table") }),
            _ => {
                Err(config(format!("unrecognized flux {s:?}; expected power:p, polysum:mu@p,..., table:path or zero")))
            }
        }
    }

    pub fn build(&self) -> Result<FluxSpec> {
        match self.kind.as_str() {
            "zero" => Ok(FluxSpec::zero()),
            "power" => FluxSpec::power(self.p.ok_or_else(|| config("flux.p is required for kind = power"))?),
            "polysum" => {
                let terms = self.terms.as_ref().ok_or_else(|| config("flux.terms is required for kind = polysum"))?;
                FluxSpec::poly_sum(terms.iter().map(|t| (t[0], t[1])).collect())
            }
            "table" => {
                let path = self.table.as_ref().ok_or_else(|| config("flux.table is required for kind = table"))?;
                let (r, f) = read_two_columns(std::fs::File::open(path)?)?;
                FluxSpec::tabulated(r, f, None)
            }
            k => Err(config(format!("unknown flux kind {k:?}"))),
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| config(format!("{what} {s:?} is not a number")))
}

fn parse_flux(s: &str) -> Result<FluxBlock> {
    FluxBlock::parse(s)
}

fn parse_mollifier(s: &str) -> Result<Mollifier> {
    match s {
        "bump" => Ok(Mollifier::Bump),
        "raised_cosine" | "cosine" => Ok(Mollifier::RaisedCosine),
        _ => Err(config(format!("unknown mollifier {s:?}; expected bump or raised_cosine"))),
    }
}

/// Parse initial data: `+`-joined terms `dirac:M@x`, `uniform:v@lo..hi` or
/// `density:path` (two-column CSV `x, u`). At most one density term.
pub fn parse_init(s: &str) -> Result<MeasureData> {
    let mut atoms = Vec::new();
    let mut density: Option<Density> = None;
    for term in s.split('+').map(str::trim) {
        let (kind, arg) =
            term.split_once(':').ok_or_else(|| config(format!("initial-data term {term:?} must read kind:args")))?;
        let d = match kind {
            "dirac" => {
                let (m, x) = arg.split_once('@').unwrap_or((arg, "0"));
                atoms.push(Atom { mass: parse_f64(m, "atom mass")?, x: parse_f64(x, "atom position")? });
                continue;
            }
            "uniform" => {
                let (v, range) =
                    arg.split_once('@').ok_or_else(|| config(format!("uniform term {arg:?} must read v@lo..hi")))?;
                let (lo, hi) =
                    range.split_once("..").ok_or_else(|| config(format!("range {range:?} must read lo..hi")))?;
                Density::uniform(parse_f64(lo, "lower end")?, parse_f64(hi, "upper end")?, parse_f64(v, "value")?)?
            }
            "density" => Density::load_csv(Path::new(arg))?,
            _ => return Err(config(format!("unknown initial-data kind {kind:?}"))),
        };
        if density.replace(d).is_some() {
            return Err(config("at most one density term is supported"));
        }
    }
    MeasureData::new(atoms, density)
}

/// Partially specified settings; the TOML file and the command line share
/// this shape, and command-line values win.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Flux: power:p | polysum:mu@p,... | table:path | zero.
    #[arg(long, value_parser = parse_flux)]
    pub flux: Option<FluxBlock>,
    /// Initial measure, e.g. dirac:1@0 or dirac:1@0+uniform:0.2@-1..1.
    #[arg(long)]
    pub init: Option<String>,
    /// Viscosity ε.
    #[arg(long)]
    pub eps: Option<f64>,
    /// fv | duhamel.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Number of cells; omitted, the spacing follows the sweep rule.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Computational interval lo,hi; omitted, it is sized automatically.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    /// Mollifier half-width.
    #[arg(long)]
    pub h: Option<f64>,
    /// bump | raised_cosine.
    #[arg(long, value_parser = parse_mollifier)]
    pub mollifier: Option<Mollifier>,
    /// Place each atom in a single cell instead of mollifying (debugging only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub spike: Option<bool>,
    /// Final time.
    #[arg(long)]
    pub tend: Option<f64>,
    /// Snapshot times t1,t2,...; omitted, log-spaced over the fitting window.
    #[arg(long, value_delimiter = ',')]
    pub snap: Option<Vec<f64>>,
    /// Number of automatic snapshots.
    #[arg(long)]
    pub n_snapshots: Option<usize>,
    /// Treat boundary leakage as an invariant failure.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
    /// p-condition exponent; defaults to the flux's natural exponent.
    #[arg(long)]
    pub p: Option<f64>,
    /// p-condition constant; defaults to the certified value.
    #[arg(long)]
    pub a: Option<f64>,
    /// Slack exponent γ; defaults to p.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Viscosities of a sweep or inviscid study, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    /// Mollifier widths of the uniqueness probe.
    #[arg(long, value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    /// Time at which the uniqueness probe compares primitives.
    #[arg(long)]
    pub t_probe: Option<f64>,
    /// Decay estimate driving a sweep verdict.
    #[arg(long)]
    pub kind: Option<DecayKind>,
    /// Time at which oracle comparisons seed the solver.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Tolerance of oracle comparisons (relative L∞).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write the claims matrix of this run's verdicts.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub claims_matrix: Option<bool>,
    /// Output root; results go to <out>/<config hash>/.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (overridden by VISCID_JOBS).
    #[arg(long)]
    pub jobs: Option<usize>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => { $( if $src.$f.is_some() { $dst.$f = $src.$f; } )* };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Overlay every field set in `top`.
    pub fn merged(mut self, top: Settings) -> Self {
        merge_fields!(self, top; flux, init, eps, scheme, grid, domain, h, mollifier, spike, tend, snap,
            n_snapshots, strict, p, a, gamma, eps_list, h_list, t_probe, kind, t0, tol, claims_matrix, out, jobs);
        self
    }
}

/// Fully resolved configuration; every field that influences a number is
/// explicit, so the hash pins the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub flux: FluxBlock,
    pub init: String,
    pub eps: f64,
    pub scheme: Scheme,
    pub grid: Option<usize>,
    pub domain: Option<(f64, f64)>,
    pub h: f64,
    pub mollifier: Mollifier,
    pub spike: bool,
    pub t_end: f64,
    /// Empty: automatic log-spaced schedule.
    pub snap: Vec<f64>,
    pub n_snapshots: usize,
    pub strict: bool,
    pub p: Option<f64>,
    pub a: Option<f64>,
    pub gamma: Option<f64>,
    pub eps_list: Vec<f64>,
    pub h_list: Vec<f64>,
    pub t_probe: f64,
    pub kind: DecayKind,
    pub t0: f64,
    pub tol: f64,
    pub claims_matrix: bool,
}

impl RunConfig {
    pub fn resolve(command: &str, s: &Settings) -> Result<Self> {
        let eps = s.eps.unwrap_or(0.01);
        let eps_list = s.eps_list.clone().unwrap_or_else(|| match command {
            "inviscid" => vec![0.1, 0.03, 0.01, 0.003, 0.001],
            _ => vec![0.1, 0.01, 0.001],
        });
        let t_probe = s.t_probe.unwrap_or(if command == "unique" { 0.5 } else { 1.0 });
        let domain = match s.domain.as_deref() {
            None => None,
            Some([lo, hi]) if lo < hi => Some((*lo, *hi)),
            Some(d) => return Err(config(format!("domain must read lo,hi with lo < hi, got {d:?}"))),
        };
        let cfg = Self {
            command: command.into(),
            flux: match &s.flux {
                Some(f) => f.clone(),
                None => FluxBlock::parse("power:2")?,
            },
            init: s.init.clone().unwrap_or_else(|| "dirac:1@0".into()),
            eps,
            scheme: s.scheme.unwrap_or_default(),
            grid: s.grid,
            domain,
            h: s.h.unwrap_or_else(|| sweep_width(eps)),
            mollifier: s.mollifier.unwrap_or_default(),
            spike: s.spike.unwrap_or(false),
            t_end: s.tend.unwrap_or(1.0),
            snap: s.snap.clone().unwrap_or_default(),
            n_snapshots: s.n_snapshots.unwrap_or(if command == "claims" { 40 } else { 24 }),
            strict: s.strict.unwrap_or(false),
            p: s.p,
            a: s.a,
            gamma: s.gamma,
            eps_list,
            h_list: s.h_list.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]),
            t_probe,
            kind: s.kind.unwrap_or(DecayKind::PcondLinf),
            t0: s.t0.unwrap_or(0.05),
            tol: s.tol.unwrap_or(1e-3),
            claims_matrix: s.claims_matrix.unwrap_or(command == "claims"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.eps, "eps")?;
        positive(self.h, "h")?;
        positive(self.t_end, "tend")?;
        positive(self.t_probe, "t_probe")?;
        positive(self.t0, "t0")?;
        positive(self.tol, "tol")?;
        for &e in &self.eps_list {
            positive(e, "eps_list entry")?;
        }
        for &h in &self.h_list {
            positive(h, "h_list entry")?;
        }
        if self.grid.is_some_and(|n| n < 3) {
            return Err(config("grid needs at least 3 cells"));
        }
        if self.n_snapshots < 2 {
            return Err(config("n_snapshots must be at least 2"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of this record, the built flux and the
    /// parsed measure (file-backed inputs enter by content).
    pub fn hash(&self, flux: &FluxSpec, measure: &MeasureData) -> Result<String> {
        #[derive(Serialize)]
        struct Canonical<'a> {
            config: &'a RunConfig,
            flux: &'a FluxSpec,
            measure: &'a MeasureData,
        }
        let text = to_json_string(&Canonical { config: self, flux, measure })?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_strings_parse() {
        assert_eq!(FluxBlock::parse("power:2").unwrap().build().unwrap(), FluxSpec::power(2.0).unwrap());
        let b = FluxBlock::parse("polysum:1@2,0.5@3").unwrap();
        assert_eq!(b.terms, Some(vec![[1.0, 2.0], [0.5, 3.0]]));
        assert!(FluxBlock::parse("zero").unwrap().build().unwrap().is_zero());
        assert!(FluxBlock::parse("power:x").is_err());
        assert!(FluxBlock::parse("cubic").is_err());
    }

    #[test]
    fn init_strings_parse() {
        let m = parse_init("dirac:1@0+dirac:0.5@2").unwrap();
        assert_eq!(m.atoms.len(), 2);
        assert!((m.mass() - 1.5).abs() < 1e-15);
        let m = parse_init("uniform:0.25@-1..1+dirac:1@0").unwrap();
        assert!((m.mass() - 1.5).abs() < 1e-12);
        assert!(parse_init("dirac:-1@0").is_err());
        assert!(parse_init("blob:1").is_err());
    }

    #[test]
    fn toml_and_flags_merge() {
        let file: Settings = toml::from_str("eps = 0.1\ntend = 2.0\n[flux]\nkind = \"power\"\np = 3.0\n").unwrap();
        let cli = Settings { eps: Some(0.05), ..Default::default() };
        let s = file.merged(cli);
        let cfg = RunConfig::resolve("solve", &s).unwrap();
        assert_eq!(cfg.eps, 0.05);
        assert_eq!(cfg.t_end, 2.0);
        assert_eq!(cfg.flux.p, Some(3.0));
        assert!(toml::from_str::<Settings>("bogus = 1").is_err());
    }

    #[test]
    fn hash_tracks_every_numeric_field() {
        let s = Settings::default();
        let a = RunConfig::resolve("solve", &s).unwrap();
        let (f, m) = (a.flux.build().unwrap(), parse_init(&a.init).unwrap());
        let mut b = a.clone();
        assert_eq!(a.hash(&f, &m).unwrap(), b.hash(&f, &m).unwrap());
        b.t_end = 1.0 + 1e-15;
        assert_ne!(a.hash(&f, &m).unwrap(), b.hash(&f, &m).unwrap());
    }
}
