//! The `.lat` description language: a line-oriented text format for a
//! lattice, its site mappings, and the named objects the theorem checkers
//! consume (regions, chains, loops).
//!
//! One directive per line; `#` starts a comment anywhere; tokens are
//! whitespace-separated. Sites must be declared before they are referenced.
//!
//! ```text
//! lattice <name> [grid]
//! site <id> x=<int> y=<int> v=<re>[,<im>]
//! hop <idA> <idB> h=<re>[,<im>]
//! map <name>
//!   <id> -> <id>
//! end
//! region <name> x <xmin> <xmax> [y <ymin> <ymax>]
//! chain <name> <id...>
//! loop <name> <id...> attach <A> <B> [shift <L>]
//! ```
//!
//! Map blocks list image pairs; unlisted sites keep their identity image.
//! [`serialize_document`] emits a canonical form (sorted sites, hops, and
//! names; identity map pairs dropped; shortest round-trip float literals)
//! that reparses to the same document byte-identically.

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use crate::currents::{Region, RegionError};
use crate::lattice::{build_lattice, HopSpec, Lattice, LatticeError, SiteId, SiteSpec};
use crate::mapping::{build_mapping, MappingError, MappingKind, SiteMapping};

/// A named map block: explicit image pairs over the site ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapBlock {
    pub name: String,
    pub pairs: Vec<(SiteId, SiteId)>,
}

/// A named rectangular region declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionDecl {
    pub name: String,
    pub x_min: i64,
    pub x_max: i64,
    pub y_clip: Option<(i64, i64)>,
}

/// A named open chain, listed from the free end inward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainDecl {
    pub name: String,
    pub sites: Vec<SiteId>,
}

/// A named loop in cyclic order, with its attachment pair and, for
/// translation loops, the shift period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopDecl {
    pub name: String,
    pub sites: Vec<SiteId>,
    pub attach: SiteId,
    pub external: SiteId,
    pub shift: Option<usize>,
}

/// Parsed form of a `.lat` file.
#[derive(Debug, Clone, PartialEq)]
pub struct LatDocument {
    pub name: String,
    pub grid: bool,
    pub sites: Vec<SiteSpec>,
    pub hops: Vec<HopSpec>,
    pub maps: Vec<MapBlock>,
    pub regions: Vec<RegionDecl>,
    pub chains: Vec<ChainDecl>,
    pub loops: Vec<LoopDecl>,
}

#[derive(Debug, Error)]
pub enum LatError {
    #[error("{line}:{col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("{line}:{col}: duplicate definition of {what}")]
    Duplicate { line: usize, col: usize, what: String },
    #[error("{line}:{col}: unknown reference to {what}")]
    UnknownReference { line: usize, col: usize, what: String },
    #[error("document declares no map named '{0}'")]
    NoSuchMap(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

fn syntax(line: usize, col: usize, expected: impl Into<String>) -> LatError {
    LatError::Syntax { line, col, expected: expected.into() }
}

struct Tok<'a> {
    s: &'a str,
    col: usize,
}

/// Splits a line into whitespace-separated tokens with 1-based byte columns,
/// dropping everything from the first `#` on.
fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut toks = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok { s: &body[s..i], col: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok { s: &body[s..], col: s + 1 });
    }
    toks
}

fn parse_complex(tok: &Tok<'_>, line: usize, what: &str) -> Result<Complex64, LatError> {
    let (re_s, im_s) = match tok.s.split_once(',') {
        Some((r, i)) => (r, Some(i)),
        None => (tok.s, None),
    };
    let fail = || syntax(line, tok.col, format!("{what} as <re> or <re>,<im>"));
    let re = re_s.parse::<f64>().map_err(|_| fail())?;
    let im = match im_s {
        Some(s) => s.parse::<f64>().map_err(|_| fail())?,
        None => 0.0,
    };
    if !re.is_finite() || !im.is_finite() {
        return Err(fail());
    }
    Ok(Complex64::new(re, im))
}

fn parse_id(tok: &Tok<'_>, line: usize, what: &str) -> Result<u32, LatError> {
    tok.s.parse::<u32>().map_err(|_| syntax(line, tok.col, format!("{what} (an integer id)")))
}

fn parse_i64(tok: &Tok<'_>, line: usize, what: &str) -> Result<i64, LatError> {
    tok.s.parse::<i64>().map_err(|_| syntax(line, tok.col, format!("{what} (an integer)")))
}

/// Strips a `key=` prefix, returning the value part with its column.
fn keyed<'a>(tok: &Tok<'a>, line: usize, key: &str) -> Result<Tok<'a>, LatError> {
    match tok.s.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')) {
        Some(v) if !v.is_empty() => Ok(Tok { s: v, col: tok.col + key.len() + 1 }),
        _ => Err(syntax(line, tok.col, format!("{key}=<value>"))),
    }
}

fn get<'t, 'a>(
    toks: &'t [Tok<'a>],
    i: usize,
    line: usize,
    line_len: usize,
    what: &str,
) -> Result<&'t Tok<'a>, LatError> {
    toks.get(i).ok_or_else(|| syntax(line, line_len + 1, what.to_string()))
}

fn no_trailing(toks: &[Tok<'_>], i: usize, line: usize) -> Result<(), LatError> {
    match toks.get(i) {
        Some(t) => Err(syntax(line, t.col, "end of line")),
        None => Ok(()),
    }
}

/// Parses `.lat` text into a document, reporting the first error with its
/// line and column.
pub fn parse_document(text: &str) -> Result<LatDocument, LatError> {
    let mut doc = LatDocument {
        name: String::new(),
        grid: false,
        sites: Vec::new(),
        hops: Vec::new(),
        maps: Vec::new(),
        regions: Vec::new(),
        chains: Vec::new(),
        loops: Vec::new(),
    };
    let mut have_header = false;
    let mut site_ids: BTreeSet<u32> = BTreeSet::new();
    let mut hop_pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut open_map: Option<(MapBlock, BTreeSet<u32>, usize)> = None;
    let mut last_line = 0;

    for (line_idx, raw) in text.lines().enumerate() {
        let line = line_idx + 1;
        last_line = line;
        let toks = tokenize(raw);
        let Some(head) = toks.first() else { continue };
        let line_len = raw.len();

        if let Some((block, sources, _)) = open_map.as_mut() {
            if head.s == "end" {
                no_trailing(&toks, 1, line)?;
                let (block, _, _) = open_map.take().expect("map block is open");
                doc.maps.push(block);
                continue;
            }
            let src = parse_id(head, line, "source site id")?;
            let arrow = get(&toks, 1, line, line_len, "`->`")?;
            if arrow.s != "->" {
                return Err(syntax(line, arrow.col, "`->`"));
            }
            let dst_tok = get(&toks, 2, line, line_len, "target site id")?;
            let dst = parse_id(dst_tok, line, "target site id")?;
            no_trailing(&toks, 3, line)?;
            for (id, tok) in [(src, head), (dst, dst_tok)] {
                if !site_ids.contains(&id) {
                    return Err(LatError::UnknownReference {
                        line,
                        col: tok.col,
                        what: format!("site {id}"),
                    });
                }
            }
            if !sources.insert(src) {
                return Err(LatError::Duplicate {
                    line,
                    col: head.col,
                    what: format!("image of site {src}"),
                });
            }
            block.pairs.push((SiteId(src), SiteId(dst)));
            continue;
        }

        if !have_header && head.s != "lattice" {
            return Err(syntax(line, head.col, "`lattice <name> [grid]` header"));
        }

        match head.s {
            "lattice" => {
                if have_header {
                    return Err(LatError::Duplicate {
                        line,
                        col: head.col,
                        what: "lattice header".into(),
                    });
                }
                let name = get(&toks, 1, line, line_len, "lattice name")?;
                doc.name = name.s.to_string();
                match toks.get(2) {
                    None => doc.grid = false,
                    Some(t) if t.s == "grid" => {
                        doc.grid = true;
                        no_trailing(&toks, 3, line)?;
                    }
                    Some(t) => return Err(syntax(line, t.col, "`grid` or end of line")),
                }
                have_header = true;
            }
            "site" => {
                let id_tok = get(&toks, 1, line, line_len, "site id")?;
                let id = parse_id(id_tok, line, "site id")?;
                let x_tok = get(&toks, 2, line, line_len, "x=<int>")?;
                let x = parse_i64(&keyed(x_tok, line, "x")?, line, "x coordinate")?;
                let y_tok = get(&toks, 3, line, line_len, "y=<int>")?;
                let y = parse_i64(&keyed(y_tok, line, "y")?, line, "y coordinate")?;
                let v_tok = get(&toks, 4, line, line_len, "v=<re>[,<im>]")?;
                let v = parse_complex(&keyed(v_tok, line, "v")?, line, "potential")?;
                no_trailing(&toks, 5, line)?;
                if !site_ids.insert(id) {
                    return Err(LatError::Duplicate {
                        line,
                        col: id_tok.col,
                        what: format!("site {id}"),
                    });
                }
                doc.sites.push(SiteSpec { id, x, y, v });
            }
            "hop" => {
                let a_tok = get(&toks, 1, line, line_len, "site id")?;
                let a = parse_id(a_tok, line, "site id")?;
                let b_tok = get(&toks, 2, line, line_len, "site id")?;
                let b = parse_id(b_tok, line, "site id")?;
                let h_tok = get(&toks, 3, line, line_len, "h=<re>[,<im>]")?;
                let h = parse_complex(&keyed(h_tok, line, "h")?, line, "hopping")?;
                no_trailing(&toks, 4, line)?;
                for (id, tok) in [(a, a_tok), (b, b_tok)] {
                    if !site_ids.contains(&id) {
                        return Err(LatError::UnknownReference {
                            line,
                            col: tok.col,
                            what: format!("site {id}"),
                        });
                    }
                }
                if !hop_pairs.insert((a.min(b), a.max(b))) {
                    return Err(LatError::Duplicate {
                        line,
                        col: a_tok.col,
                        what: format!("hop {}-{}", a.min(b), a.max(b)),
                    });
                }
                doc.hops.push(HopSpec { a, b, h });
            }
            "map" => {
                let name = get(&toks, 1, line, line_len, "map name")?;
                no_trailing(&toks, 2, line)?;
                if doc.maps.iter().any(|m| m.name == name.s) {
                    return Err(LatError::Duplicate {
                        line,
                        col: name.col,
                        what: format!("map '{}'", name.s),
                    });
                }
                open_map = Some((
                    MapBlock { name: name.s.to_string(), pairs: Vec::new() },
                    BTreeSet::new(),
                    line,
                ));
            }
            "region" => {
                let name = get(&toks, 1, line, line_len, "region name")?;
                if doc.regions.iter().any(|r| r.name == name.s) {
                    return Err(LatError::Duplicate {
                        line,
                        col: name.col,
                        what: format!("region '{}'", name.s),
                    });
                }
                let kw = get(&toks, 2, line, line_len, "`x <xmin> <xmax>`")?;
                if kw.s != "x" {
                    return Err(syntax(line, kw.col, "`x <xmin> <xmax>`"));
                }
                let x_min = parse_i64(get(&toks, 3, line, line_len, "xmin")?, line, "xmin")?;
                let x_max = parse_i64(get(&toks, 4, line, line_len, "xmax")?, line, "xmax")?;
                let y_clip = match toks.get(5) {
                    None => None,
                    Some(t) if t.s == "y" => {
                        let lo = parse_i64(get(&toks, 6, line, line_len, "ymin")?, line, "ymin")?;
                        let hi = parse_i64(get(&toks, 7, line, line_len, "ymax")?, line, "ymax")?;
                        no_trailing(&toks, 8, line)?;
                        Some((lo, hi))
                    }
                    Some(t) => return Err(syntax(line, t.col, "`y <ymin> <ymax>` or end of line")),
                };
                doc.regions.push(RegionDecl {
                    name: name.s.to_string(),
                    x_min,
                    x_max,
                    y_clip,
                });
            }
            "chain" => {
                let name = get(&toks, 1, line, line_len, "chain name")?;
                if doc.chains.iter().any(|c| c.name == name.s) {
                    return Err(LatError::Duplicate {
                        line,
                        col: name.col,
                        what: format!("chain '{}'", name.s),
                    });
                }
                let mut sites = Vec::new();
                for t in &toks[2..] {
                    let id = parse_id(t, line, "chain site id")?;
                    if !site_ids.contains(&id) {
                        return Err(LatError::UnknownReference {
                            line,
                            col: t.col,
                            what: format!("site {id}"),
                        });
                    }
                    sites.push(SiteId(id));
                }
                if sites.len() < 2 {
                    return Err(syntax(line, line_len + 1, "at least two chain site ids"));
                }
                doc.chains.push(ChainDecl { name: name.s.to_string(), sites });
            }
            "loop" => {
                let name = get(&toks, 1, line, line_len, "loop name")?;
                if doc.loops.iter().any(|l| l.name == name.s) {
                    return Err(LatError::Duplicate {
                        line,
                        col: name.col,
                        what: format!("loop '{}'", name.s),
                    });
                }
                let attach_pos = toks
                    .iter()
                    .skip(2)
                    .position(|t| t.s == "attach")
                    .map(|p| p + 2)
                    .ok_or_else(|| syntax(line, line_len + 1, "`attach <A> <B>`"))?;
                let mut sites = Vec::new();
                for t in &toks[2..attach_pos] {
                    let id = parse_id(t, line, "loop site id")?;
                    if !site_ids.contains(&id) {
                        return Err(LatError::UnknownReference {
                            line,
                            col: t.col,
                            what: format!("site {id}"),
                        });
                    }
                    sites.push(SiteId(id));
                }
                if sites.len() < 3 {
                    return Err(syntax(line, toks[attach_pos].col, "at least three loop site ids"));
                }
                let a_tok = get(&toks, attach_pos + 1, line, line_len, "attachment site id")?;
                let a = parse_id(a_tok, line, "attachment site id")?;
                let b_tok = get(&toks, attach_pos + 2, line, line_len, "external site id")?;
                let b = parse_id(b_tok, line, "external site id")?;
                for (id, tok) in [(a, a_tok), (b, b_tok)] {
                    if !site_ids.contains(&id) {
                        return Err(LatError::UnknownReference {
                            line,
                            col: tok.col,
                            what: format!("site {id}"),
                        });
                    }
                }
                let shift = match toks.get(attach_pos + 3) {
                    None => None,
                    Some(t) if t.s == "shift" => {
                        let l_tok = get(&toks, attach_pos + 4, line, line_len, "shift length")?;
                        let l = parse_id(l_tok, line, "shift length")? as usize;
                        no_trailing(&toks, attach_pos + 5, line)?;
                        Some(l)
                    }
                    Some(t) => return Err(syntax(line, t.col, "`shift <L>` or end of line")),
                };
                doc.loops.push(LoopDecl {
                    name: name.s.to_string(),
                    sites,
                    attach: SiteId(a),
                    external: SiteId(b),
                    shift,
                });
            }
            other => {
                return Err(syntax(
                    line,
                    head.col,
                    format!(
                        "a directive (lattice, site, hop, map, region, chain, loop), got `{other}`"
                    ),
                ));
            }
        }
    }

    if let Some((block, _, opened_at)) = open_map {
        return Err(syntax(last_line, 1, format!("`end` closing map '{}' opened at line {opened_at}", block.name)));
    }
    if !have_header {
        return Err(syntax(1, 1, "`lattice <name> [grid]` header"));
    }
    Ok(doc)
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        fmt_f64(z.re)
    } else {
        format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
    }
}

/// Emits the canonical text form: sites by ascending id, hops by ascending
/// normalized pair, named blocks by name, identity map pairs omitted.
/// Parsing the output reproduces the document, and serializing again is
/// byte-identical.
pub fn serialize_document(doc: &LatDocument) -> String {
    let mut out = String::new();
    out.push_str("lattice ");
    out.push_str(&doc.name);
    if doc.grid {
        out.push_str(" grid");
    }
    out.push('\n');

    let mut sites = doc.sites.clone();
    sites.sort_by_key(|s| s.id);
    for s in &sites {
        out.push_str(&format!(
            "site {} x={} y={} v={}\n",
            s.id,
            s.x,
            s.y,
            fmt_complex(s.v)
        ));
    }

    // Reversing the endpoint order flips the matrix entry being named, so
    // normalization must conjugate alongside the swap.
    let mut hops: Vec<(u32, u32, Complex64)> = doc
        .hops
        .iter()
        .map(|h| if h.a <= h.b { (h.a, h.b, h.h) } else { (h.b, h.a, h.h.conj()) })
        .collect();
    hops.sort_by_key(|&(a, b, _)| (a, b));
    for &(a, b, h) in &hops {
        out.push_str(&format!("hop {} {} h={}\n", a, b, fmt_complex(h)));
    }

    let mut maps = doc.maps.clone();
    maps.sort_by(|p, q| p.name.cmp(&q.name));
    for m in &maps {
        out.push_str(&format!("map {}\n", m.name));
        let mut pairs: Vec<(SiteId, SiteId)> =
            m.pairs.iter().copied().filter(|(s, d)| s != d).collect();
        pairs.sort_by_key(|&(s, _)| s);
        for (s, d) in pairs {
            out.push_str(&format!("  {s} -> {d}\n"));
        }
        out.push_str("end\n");
    }

    let mut regions = doc.regions.clone();
    regions.sort_by(|p, q| p.name.cmp(&q.name));
    for r in &regions {
        out.push_str(&format!("region {} x {} {}", r.name, r.x_min, r.x_max));
        if let Some((lo, hi)) = r.y_clip {
            out.push_str(&format!(" y {lo} {hi}"));
        }
        out.push('\n');
    }

    let mut chains = doc.chains.clone();
    chains.sort_by(|p, q| p.name.cmp(&q.name));
    for c in &chains {
        out.push_str(&format!("chain {}", c.name));
        for s in &c.sites {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
    }

    let mut loops = doc.loops.clone();
    loops.sort_by(|p, q| p.name.cmp(&q.name));
    for l in &loops {
        out.push_str(&format!("loop {}", l.name));
        for s in &l.sites {
            out.push_str(&format!(" {s}"));
        }
        out.push_str(&format!(" attach {} {}", l.attach, l.external));
        if let Some(shift) = l.shift {
            out.push_str(&format!(" shift {shift}"));
        }
        out.push('\n');
    }
    out
}

/// Builds the lattice the document describes.
pub fn document_lattice(doc: &LatDocument) -> Result<Lattice, LatError> {
    Ok(build_lattice(&doc.name, doc.grid, &doc.sites, &doc.hops)?)
}

/// Builds the named map block as a site mapping over `lat`.
pub fn document_mapping(
    doc: &LatDocument,
    lat: &Lattice,
    map_name: &str,
) -> Result<SiteMapping, LatError> {
    let block = doc
        .maps
        .iter()
        .find(|m| m.name == map_name)
        .ok_or_else(|| LatError::NoSuchMap(map_name.to_string()))?;
    Ok(build_mapping(lat, MappingKind::Permutation(block.pairs.clone()), &[], false)?)
}

/// Builds the named region declaration over `lat`.
pub fn document_region(lat: &Lattice, decl: &RegionDecl) -> Result<Region, LatError> {
    Ok(Region::new(lat, decl.x_min, decl.x_max, decl.y_clip)?)
}

/// Builds everything the document declares, verifying it is coherent:
/// the lattice, every map, and every region. Returns the lattice.
pub fn validate_document(doc: &LatDocument) -> Result<Lattice, LatError> {
    let lat = document_lattice(doc)?;
    for m in &doc.maps {
        document_mapping(doc, &lat, &m.name)?;
    }
    for r in &doc.regions {
        document_region(&lat, r)?;
    }
    Ok(lat)
}
