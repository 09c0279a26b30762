//! Command-line front end: parse a `.lat` file, solve it, and run checks.
//!
//! Exit codes: 0 when every applicable check holds, 1 when a check fails,
//! 2 on input or build errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use symlat::analysis::{
    self, current_field_csv, currents_section, domain_sections, site_table_csv,
    spectrum_section, theorem_section, trajectory_csv, Report, TheoremSection, WitnessRow,
};
use symlat::latfile::{
    document_lattice, document_mapping, document_region, parse_document, LatDocument, LatError,
};
use symlat::theorems::{
    check_domainwise_constancy, check_summed_constancy, closed_loop_reflection,
    closed_loop_translation, open_chain_similarity, TheoremError, TheoremReport, Verdict,
};
use symlat::{
    detect_maximal_domains, eigenstates, CurrentsError, DynamicsError, Lattice, SiteId,
    SiteMapping, SpectralError, Spectrum, SumRange, Tolerances,
};

#[derive(Parser)]
#[command(
    name = "symlat",
    version,
    about = "Local symmetries of planar lattices: spectra, non-local currents, theorem checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse the file and build everything it declares.
    Validate {
        /// Lattice description file (.lat)
        file: PathBuf,
    },
    /// Solve the eigenproblem and print the energies.
    Spectrum {
        file: PathBuf,
        /// Write a JSON report here
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Detect the maximal symmetry domains of a mapping.
    Domains {
        file: PathBuf,
        /// Map name (defaults to the file's only map)
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate the current field and per-site table of one eigenstate.
    Currents {
        file: PathBuf,
        #[arg(long)]
        map: Option<String>,
        /// Eigenstate index (ascending energy order)
        #[arg(long)]
        state: usize,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the pair-current field CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the per-site table CSV here
        #[arg(long)]
        sites_csv: Option<PathBuf>,
    },
    /// Run theorem checks against the file's declarations.
    Check {
        what: CheckKind,
        file: PathBuf,
        #[arg(long)]
        map: Option<String>,
        /// Row selection for summed currents
        #[arg(long, value_enum, default_value_t = RowsArg::Interior)]
        rows: RowsArg,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evolve an initial state and dump the trajectory as CSV.
    Evolve {
        file: PathBuf,
        /// Total evolution time
        #[arg(long)]
        t: f64,
        /// Number of equal time steps
        #[arg(long)]
        steps: usize,
        /// Initial state file: lines of `<site-id> <re> [<im>]`
        #[arg(long)]
        initial: PathBuf,
        #[arg(long)]
        map: Option<String>,
        /// Write the trajectory here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy)]
enum CheckKind {
    All,
    Constancy,
    Summed,
    OpenChain,
    LoopReflect,
    LoopTranslate,
}

#[derive(ValueEnum, Clone, Copy)]
enum RowsArg {
    Interior,
    All,
}

impl From<RowsArg> for SumRange {
    fn from(r: RowsArg) -> SumRange {
        match r {
            RowsArg::Interior => SumRange::InteriorRows,
            RowsArg::All => SumRange::AllRows,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lat(#[from] LatError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Currents(#[from] CurrentsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Theorem(#[from] TheoremError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Input(String),
}

/// Dying silently on a closed pipe (`symlat spectrum f.lat | head`) is the
/// conventional behavior for line-oriented tools; Rust's runtime masks
/// SIGPIPE, which would turn that into a panic mid-print.
#[cfg(unix)]
fn restore_default_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn restore_default_sigpipe() {}

fn main() -> ExitCode {
    restore_default_sigpipe();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(file: &Path) -> Result<(String, LatDocument, Lattice), CliError> {
    let source = fs::read_to_string(file)?;
    let doc = parse_document(&source)?;
    let lat = document_lattice(&doc)?;
    Ok((source, doc, lat))
}

/// Picks the mapping: the named one, the file's only one, or identity when
/// the file declares none.
fn resolve_mapping(
    doc: &LatDocument,
    lat: &Lattice,
    name: Option<&str>,
) -> Result<(SiteMapping, Option<String>), CliError> {
    match name {
        Some(n) => Ok((document_mapping(doc, lat, n)?, Some(n.to_string()))),
        None => match doc.maps.len() {
            0 => Ok((SiteMapping::identity(lat), None)),
            1 => {
                let n = doc.maps[0].name.clone();
                Ok((document_mapping(doc, lat, &n)?, Some(n)))
            }
            k => Err(CliError::Input(format!(
                "the file declares {k} maps; pick one with --map <name>"
            ))),
        },
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    analysis::atomic_write(path, contents.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cmd: Cmd) -> Result<bool, CliError> {
    let tol = Tolerances::from_env();
    match cmd {
        Cmd::Validate { file } => {
            let source = fs::read_to_string(&file)?;
            let doc = parse_document(&source)?;
            let lat = symlat::latfile::validate_document(&doc)?;
            println!(
                "{}: {} sites, {} hops, {} maps, {} regions, {} chains, {} loops",
                lat.name(),
                lat.n_sites(),
                lat.hoppings().len(),
                doc.maps.len(),
                doc.regions.len(),
                doc.chains.len(),
                doc.loops.len()
            );
            println!("digest {}", analysis::sha256_hex(source.as_bytes()));
            Ok(true)
        }
        Cmd::Spectrum { file, json } => {
            let (source, _, lat) = load(&file)?;
            let spectrum = eigenstates(&lat, &tol)?;
            for s in &spectrum.states {
                println!("E[{}] = {}", s.index, analysis::fmt_sig(s.energy));
            }
            println!(
                "orthonormality defect {}",
                analysis::fmt_sig(spectrum.orthonormality_defect())
            );
            if let Some(path) = json {
                let mut report = Report::shell(&source, &lat);
                report.spectrum = Some(spectrum_section(&spectrum));
                write_file(&path, &analysis::to_json(&report))?;
            }
            Ok(true)
        }
        Cmd::Domains { file, map, json } => {
            let (source, doc, lat) = load(&file)?;
            let (m, map_name) = resolve_mapping(&doc, &lat, map.as_deref())?;
            let domains = detect_maximal_domains(&lat, &m, &tol);
            if domains.is_empty() {
                println!("no symmetry domains");
            }
            for d in &domains {
                let ids: Vec<String> = d.sites().iter().map(ToString::to_string).collect();
                println!("domain [{}]", ids.join(", "));
            }
            if let Some(path) = json {
                let mut report = Report::shell(&source, &lat);
                report.map = map_name;
                report.domains = Some(domain_sections(&domains));
                write_file(&path, &analysis::to_json(&report))?;
            }
            Ok(true)
        }
        Cmd::Currents { file, map, state, json, csv, sites_csv } => {
            let (source, doc, lat) = load(&file)?;
            let (m, map_name) = resolve_mapping(&doc, &lat, map.as_deref())?;
            let spectrum = eigenstates(&lat, &tol)?;
            let Some(chosen) = spectrum.states.get(state) else {
                return Err(CliError::Input(format!(
                    "state index {state} out of range (the spectrum has {} states)",
                    spectrum.states.len()
                )));
            };
            let section = currents_section(&lat, &m, &chosen.amplitudes, state, &tol)?;
            println!(
                "state {} (E = {}): {} supported pairs, max Kirchhoff residual {}",
                state,
                analysis::fmt_sig(chosen.energy),
                section.pairs.len(),
                analysis::fmt_sig(section.max_kirchhoff_residual)
            );
            for s in &section.sites {
                let mut flags = String::new();
                if s.green {
                    flags.push_str(" green");
                }
                if s.red {
                    flags.push_str(" red");
                }
                println!(
                    "site {}: sigma=({}, {}) residual {}{}",
                    s.n,
                    analysis::fmt_sig(s.sigma_re),
                    analysis::fmt_sig(s.sigma_im),
                    analysis::fmt_sig(s.residual),
                    flags
                );
            }
            if let Some(path) = csv {
                write_file(&path, &current_field_csv(&section))?;
            }
            if let Some(path) = sites_csv {
                write_file(&path, &site_table_csv(&section))?;
            }
            if let Some(path) = json {
                let mut report = Report::shell(&source, &lat);
                report.map = map_name;
                report.currents = Some(section);
                write_file(&path, &analysis::to_json(&report))?;
            }
            Ok(true)
        }
        Cmd::Check { what, file, map, rows, json } => {
            let (source, doc, lat) = load(&file)?;
            let (m, map_name) = resolve_mapping(&doc, &lat, map.as_deref())?;
            let spectrum = eigenstates(&lat, &tol)?;
            let mut sections = Vec::new();
            let range = SumRange::from(rows);

            if matches!(what, CheckKind::All | CheckKind::Constancy) {
                run_constancy(&lat, &m, &spectrum, &tol, &mut sections)?;
            }
            if matches!(what, CheckKind::All | CheckKind::Summed) {
                run_summed(&doc, &lat, &m, &spectrum, range, &tol, &mut sections)?;
            }
            if matches!(what, CheckKind::All | CheckKind::OpenChain) {
                for c in &doc.chains {
                    let report = open_chain_similarity(&lat, &m, &c.sites, &spectrum, &tol)?;
                    sections.push(theorem_section(&c.name, &report));
                }
            }
            if matches!(what, CheckKind::All | CheckKind::LoopReflect) {
                for l in doc.loops.iter().filter(|l| l.shift.is_none()) {
                    let report = closed_loop_reflection(&lat, &m, &l.sites, l.attach, &tol)?;
                    sections.push(theorem_section(&l.name, &report));
                }
            }
            if matches!(what, CheckKind::All | CheckKind::LoopTranslate) {
                for l in &doc.loops {
                    let Some(shift) = l.shift else { continue };
                    let report = closed_loop_translation(
                        &lat, &m, &l.sites, l.attach, l.external, shift, None, &tol,
                    )?;
                    sections.push(theorem_section(&l.name, &report));
                }
            }

            if sections.is_empty() {
                println!("nothing to check: no matching declarations or detected domains");
            }
            let mut all_ok = true;
            for s in &sections {
                let detail = if s.verdict == "not-applicable" {
                    let failed: Vec<&str> = s
                        .hypotheses
                        .iter()
                        .filter(|h| !h.satisfied)
                        .map(|h| h.name.as_str())
                        .collect();
                    format!(" (unmet: {})", failed.join(", "))
                } else {
                    format!(" (max residual {})", analysis::fmt_sig(s.max_residual))
                };
                println!("{} on {}: {}{}", s.id, s.target, s.verdict, detail);
                if s.verdict == "fails" {
                    all_ok = false;
                }
            }
            if let Some(path) = json {
                let mut report = Report::shell(&source, &lat);
                report.map = map_name;
                report.theorems = Some(sections);
                write_file(&path, &analysis::to_json(&report))?;
            }
            Ok(all_ok)
        }
        Cmd::Evolve { file, t, steps, initial, map, csv } => {
            let (_, doc, lat) = load(&file)?;
            let (m, _) = resolve_mapping(&doc, &lat, map.as_deref())?;
            let psi0 = read_initial_state(&initial, &lat)?;
            let states = symlat::evolve(&lat, &psi0, t, steps, &tol)?;
            let table = trajectory_csv(&lat, &m, &states)?;
            match csv {
                Some(path) => {
                    write_file(&path, &table)?;
                    let last = states.last().expect("evolve returns at least one state");
                    let norm: f64 =
                        last.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    println!(
                        "evolved to t = {} in {} steps, final norm {}",
                        analysis::fmt_sig(last.time),
                        steps,
                        analysis::fmt_sig(norm)
                    );
                }
                None => print!("{table}"),
            }
            Ok(true)
        }
    }
}

/// Current constancy on every detected maximal domain, merged over states.
fn run_constancy(
    lat: &Lattice,
    m: &SiteMapping,
    spectrum: &Spectrum,
    tol: &Tolerances,
    sections: &mut Vec<TheoremSection>,
) -> Result<(), CliError> {
    for d in detect_maximal_domains(lat, m, tol) {
        if d.len() < 2 {
            continue;
        }
        let ids: Vec<String> = d.sites().iter().map(ToString::to_string).collect();
        let target = format!("domain({})", ids.join(","));
        let mut reports = Vec::new();
        for state in &spectrum.states {
            let rep = check_domainwise_constancy(lat, m, d.sites(), &state.amplitudes, tol)?;
            reports.push((state.index, rep));
        }
        sections.push(merge_state_reports(&target, reports));
    }
    Ok(())
}

/// Summed-current constancy on every declared region, merged over states.
fn run_summed(
    doc: &LatDocument,
    lat: &Lattice,
    m: &SiteMapping,
    spectrum: &Spectrum,
    range: SumRange,
    tol: &Tolerances,
    sections: &mut Vec<TheoremSection>,
) -> Result<(), CliError> {
    for decl in &doc.regions {
        let region = document_region(lat, decl)?;
        let mut reports = Vec::new();
        for state in &spectrum.states {
            let rep =
                check_summed_constancy(lat, m, &region, &state.amplitudes, range, tol)?;
            reports.push((state.index, rep));
        }
        sections.push(merge_state_reports(&decl.name, reports));
    }
    Ok(())
}

/// Folds per-eigenstate reports of one check into a single section: the
/// worst verdict wins, and each state contributes its residual as a witness.
fn merge_state_reports(target: &str, reports: Vec<(usize, TheoremReport)>) -> TheoremSection {
    let (_, first) = reports.first().expect("at least one eigenstate");
    let mut section = theorem_section(target, first);
    section.witnesses.clear();
    let mut verdict = Verdict::Holds;
    let mut max_residual = 0.0f64;
    for (state_index, rep) in &reports {
        verdict = match (verdict, rep.verdict) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::NotApplicable, _) | (_, Verdict::NotApplicable) => Verdict::NotApplicable,
            _ => Verdict::Holds,
        };
        max_residual = max_residual.max(rep.max_residual);
        section.witnesses.push(WitnessRow {
            label: "max deviation".into(),
            state_index: Some(*state_index),
            value: rep.max_residual,
        });
    }
    section.verdict = verdict.as_str().to_string();
    section.max_residual = max_residual;
    section
}

/// Reads an initial state: lines of `<site-id> <re> [<im>]`, `#` comments,
/// unlisted sites zero.
fn read_initial_state(path: &Path, lat: &Lattice) -> Result<Vec<Complex64>, CliError> {
    let text = fs::read_to_string(path)?;
    let mut psi = vec![Complex64::new(0.0, 0.0); lat.n_sites()];
    for (line_idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let line = line_idx + 1;
        if toks.len() > 3 {
            return Err(CliError::Input(format!(
                "{}:{line}: expected `<site-id> <re> [<im>]`",
                path.display()
            )));
        }
        let id: u32 = toks[0].parse().map_err(|_| {
            CliError::Input(format!("{}:{line}: bad site id `{}`", path.display(), toks[0]))
        })?;
        let parse_num = |s: &str| -> Result<f64, CliError> {
            match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(CliError::Input(format!(
                    "{}:{line}: bad amplitude `{s}`",
                    path.display()
                ))),
            }
        };
        let re = parse_num(toks.get(1).copied().ok_or_else(|| {
            CliError::Input(format!("{}:{line}: missing amplitude", path.display()))
        })?)?;
        let im = match toks.get(2) {
            Some(s) => parse_num(s)?,
            None => 0.0,
        };
        let idx = lat
            .index_of(SiteId(id))
            .map_err(|_| CliError::Input(format!("{}:{line}: unknown site {id}", path.display())))?;
        psi[idx] = Complex64::new(re, im);
    }
    if psi.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(CliError::Input(format!(
            "{}: initial state is identically zero",
            path.display()
        )));
    }
    Ok(psi)
}
