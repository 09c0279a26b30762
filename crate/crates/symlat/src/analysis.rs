//! Report assembly and emission: JSON with a stable key order and pinned
//! float formatting, the CSV table contracts, atomic file writes, and the
//! input digest that ties a report to its source text.
//!
//! All numbers are printed with 17 significant digits (`{:.16e}`), enough
//! for `f64` round-trips, so identical inputs produce byte-identical
//! reports.

use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};
use sha2::{Digest, Sha256};

use crate::currents::{
    current_field, kirchhoff_residuals, CurrentsError, KirchhoffReport,
};
use crate::dynamics::{continuity_residual, DynamicsError, WaveState};
use crate::lattice::Lattice;
use crate::mapping::SiteMapping;
use crate::spectral::Spectrum;
use crate::symmetry::SymmetryDomain;
use crate::theorems::{SimilarityConstant, TheoremReport};

/// Formats with 17 significant digits, the shortest count that restores
/// every `f64` exactly.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.16e}")
}

struct SigFigFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for SigFigFormatter<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W>(&mut self, w: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array(w)
    }

    fn end_array<W>(&mut self, w: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array(w)
    }

    fn begin_array_value<W>(&mut self, w: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W>(&mut self, w: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array_value(w)
    }

    fn begin_object<W>(&mut self, w: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object(w)
    }

    fn end_object<W>(&mut self, w: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object(w)
    }

    fn begin_object_key<W>(&mut self, w: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W>(&mut self, w: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W>(&mut self, w: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object_value(w)
    }
}

/// Serializes any report section to pretty JSON with the pinned float
/// format and a trailing newline. Struct fields keep declaration order, so
/// output is deterministic.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let formatter = SigFigFormatter { inner: PrettyFormatter::new() };
    let mut ser = Serializer::with_formatter(&mut buf, formatter);
    value.serialize(&mut ser).expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Hex SHA-256 of the input text, recorded in reports.
pub fn sha256_hex(data: &[u8]) -> String {
    format!("{:x}", Sha256::digest(data))
}

/// Writes via a sibling temp file and rename, so the target is never left
/// half-written.
pub fn atomic_write(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp_name = format!(".{}.{}.tmp", file_name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => Path::new(&tmp_name).to_path_buf(),
    };
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Top-level report written by the command-line tool. Sections are filled
/// per verb; absent sections are omitted from the JSON.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub lattice: String,
    pub n_sites: usize,
    pub input_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domains: Option<Vec<DomainSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub currents: Option<CurrentsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorems: Option<Vec<TheoremSection>>,
}

impl Report {
    /// A report shell for the given source text and lattice.
    pub fn shell(source: &str, lat: &Lattice) -> Report {
        Report {
            tool: format!("symlat {}", env!("CARGO_PKG_VERSION")),
            lattice: lat.name().to_string(),
            n_sites: lat.n_sites(),
            input_digest: sha256_hex(source.as_bytes()),
            map: None,
            spectrum: None,
            domains: None,
            currents: None,
            theorems: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SpectrumSection {
    pub energies: Vec<f64>,
    pub orthonormality_defect: f64,
    pub states: Vec<StateSection>,
}

#[derive(Debug, Serialize)]
pub struct StateSection {
    pub index: usize,
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity: Option<i8>,
    /// Complex amplitudes as `[re, im]` pairs, in site declaration order.
    pub amplitudes: Vec<[f64; 2]>,
}

pub fn spectrum_section(spectrum: &Spectrum) -> SpectrumSection {
    SpectrumSection {
        energies: spectrum.energies().to_vec(),
        orthonormality_defect: spectrum.orthonormality_defect(),
        states: spectrum
            .states
            .iter()
            .map(|s| StateSection {
                index: s.index,
                energy: s.energy,
                parity: s.parity,
                amplitudes: s.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
            })
            .collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct DomainSection {
    pub sites: Vec<u32>,
}

pub fn domain_sections(domains: &[SymmetryDomain]) -> Vec<DomainSection> {
    domains
        .iter()
        .map(|d| DomainSection { sites: d.sites().iter().map(|id| id.0).collect() })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct CurrentsSection {
    pub state_index: usize,
    pub max_kirchhoff_residual: f64,
    pub pairs: Vec<PairRow>,
    pub sites: Vec<SiteRow>,
}

#[derive(Debug, Serialize)]
pub struct PairRow {
    pub n: u32,
    pub m: u32,
    pub q_re: f64,
    pub q_im: f64,
}

#[derive(Debug, Serialize)]
pub struct SiteRow {
    pub n: u32,
    pub sigma_re: f64,
    pub sigma_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub residual: f64,
    pub green: bool,
    pub red: bool,
}

/// Evaluates the current field and per-site Kirchhoff data of one state.
pub fn currents_section(
    lat: &Lattice,
    m: &SiteMapping,
    psi: &[Complex64],
    state_index: usize,
    tol: &crate::Tolerances,
) -> Result<CurrentsSection, CurrentsError> {
    let field = current_field(lat, m, psi)?;
    let kirchhoff = kirchhoff_residuals(lat, m, psi, tol)?;
    Ok(CurrentsSection {
        state_index,
        max_kirchhoff_residual: kirchhoff.max_residual(),
        pairs: field
            .pairs()
            .map(|(n, mm, q)| PairRow { n: n.0, m: mm.0, q_re: q.re, q_im: q.im })
            .collect(),
        sites: site_rows(&kirchhoff),
    })
}

fn site_rows(report: &KirchhoffReport) -> Vec<SiteRow> {
    report
        .sites
        .iter()
        .map(|s| SiteRow {
            n: s.id.0,
            sigma_re: s.sigma.re,
            sigma_im: s.sigma.im,
            beta_re: s.beta.re,
            beta_im: s.beta.im,
            residual: s.residual,
            green: s.flags.green,
            red: s.flags.red,
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct TheoremSection {
    pub id: String,
    /// The named object the check ran on (a chain, region, loop, or domain).
    pub target: String,
    pub verdict: String,
    pub max_residual: f64,
    pub hypotheses: Vec<HypothesisRow>,
    pub witnesses: Vec<WitnessRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<ConstantRow>,
}

#[derive(Debug, Serialize)]
pub struct HypothesisRow {
    pub name: String,
    pub satisfied: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct WitnessRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_index: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct ConstantRow {
    pub state_index: usize,
    pub defined: bool,
    pub re: f64,
    pub im: f64,
    pub spread: f64,
}

pub fn theorem_section(target: &str, report: &TheoremReport) -> TheoremSection {
    TheoremSection {
        id: report.id.to_string(),
        target: target.to_string(),
        verdict: report.verdict.as_str().to_string(),
        max_residual: report.max_residual,
        hypotheses: report
            .hypotheses
            .iter()
            .map(|h| HypothesisRow {
                name: h.name.to_string(),
                satisfied: h.satisfied,
                detail: h.detail.clone(),
            })
            .collect(),
        witnesses: report
            .witnesses
            .iter()
            .map(|w| WitnessRow {
                label: w.label.clone(),
                state_index: w.state_index,
                value: w.value,
            })
            .collect(),
        constants: report.constants.iter().map(constant_row).collect(),
    }
}

fn constant_row(c: &SimilarityConstant) -> ConstantRow {
    ConstantRow {
        state_index: c.state_index,
        defined: c.defined,
        re: c.value.re,
        im: c.value.im,
        spread: c.spread,
    }
}

/// CSV of a pair-current field: one row per supported ordered pair.
pub fn current_field_csv(section: &CurrentsSection) -> String {
    let mut out = String::from("n,m,q_re,q_im\n");
    for p in &section.pairs {
        out.push_str(&format!("{},{},{},{}\n", p.n, p.m, fmt_sig(p.q_re), fmt_sig(p.q_im)));
    }
    out
}

/// CSV of the per-site table: density, potential mismatch, Kirchhoff
/// residual, and the source/break flags as 0/1.
pub fn site_table_csv(section: &CurrentsSection) -> String {
    let mut out = String::from("n,sigma_re,sigma_im,beta_re,beta_im,residual,green,red\n");
    for s in &section.sites {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.n,
            fmt_sig(s.sigma_re),
            fmt_sig(s.sigma_im),
            fmt_sig(s.beta_re),
            fmt_sig(s.beta_im),
            fmt_sig(s.residual),
            s.green as u8,
            s.red as u8,
        ));
    }
    out
}

/// CSV of an evolution trajectory: one row per time sample and site, with
/// the non-local density and the continuity residual under `m`.
pub fn trajectory_csv(
    lat: &Lattice,
    m: &SiteMapping,
    states: &[WaveState],
) -> Result<String, DynamicsError> {
    let mut out = String::from("t,site,psi_re,psi_im,sigma_re,sigma_im,residual\n");
    for state in states {
        let residuals = continuity_residual(lat, m, &state.amplitudes)?;
        for i in 0..lat.n_sites() {
            let psi = state.amplitudes[i];
            let sigma = state.amplitudes[i].conj() * state.amplitudes[m.image_index(i)];
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_sig(state.time),
                lat.id_at(i),
                fmt_sig(psi.re),
                fmt_sig(psi.im),
                fmt_sig(sigma.re),
                fmt_sig(sigma.im),
                fmt_sig(residuals[i]),
            ));
        }
    }
    Ok(out)
}
