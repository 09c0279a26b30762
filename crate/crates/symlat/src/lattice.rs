//! Sites, hoppings, and Hamiltonian assembly.
//!
//! A lattice is a finite set of sites at distinct integer planar coordinates.
//! Each site carries a complex on-site potential; pairs of distinct sites may
//! carry one complex hopping. The Hamiltonian matrix is assembled in site
//! declaration order with `H[n][n] = v_n`, `H[n][m] = h_{n,m}` for stored
//! hoppings, and the transposed entry conjugated, so hoppings are Hermitian
//! by construction and any non-Hermiticity can only enter through complex
//! potentials.

use ndarray::Array2;
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Opaque site identifier. Ordering of ids fixes tie-breaking everywhere
/// (neighbor lists, domain growth, gauge fixing); the Hamiltonian ordering is
/// declaration order, not id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(pub u32);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for SiteId {
    fn from(raw: u32) -> Self {
        SiteId(raw)
    }
}

/// Site description used to build a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteSpec {
    pub id: u32,
    pub x: i64,
    pub y: i64,
    pub v: Complex64,
}

/// Hopping description used to build a lattice. `h` is the Hamiltonian entry
/// from `a` to `b`; the reverse entry is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopSpec {
    pub a: u32,
    pub b: u32,
    pub h: Complex64,
}

#[derive(Debug, Clone)]
pub struct Site {
    pub id: SiteId,
    pub x: i64,
    pub y: i64,
    pub v: Complex64,
}

/// Stored hopping, normalized so `a < b` by id (the entry value is
/// conjugated when the input orientation is flipped during normalization).
#[derive(Debug, Clone, Copy)]
pub struct Hopping {
    pub a: SiteId,
    pub b: SiteId,
    pub h: Complex64,
}

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice has no sites")]
    EmptyLattice,
    #[error("duplicate site id {0}")]
    DuplicateSiteId(SiteId),
    #[error("sites {a} and {b} share coordinates ({x}, {y})")]
    DuplicateCoordinates { a: SiteId, b: SiteId, x: i64, y: i64 },
    #[error("unknown site {0}")]
    UnknownSite(SiteId),
    #[error("hopping from site {0} to itself")]
    SelfHopping(SiteId),
    #[error("duplicate hopping between {a} and {b}")]
    DuplicateHopping { a: SiteId, b: SiteId },
    #[error("hopping between {a} and {b} is zero; omit absent hoppings instead")]
    ZeroHopping { a: SiteId, b: SiteId },
    #[error("grid mode: hopping between {a} and {b} does not connect axis-neighbors")]
    GridViolation { a: SiteId, b: SiteId },
}

/// Immutable lattice. All analysis types borrow it; interior mutability is
/// never used, so shared references are safe across threads.
#[derive(Debug, Clone)]
pub struct Lattice {
    name: String,
    grid_mode: bool,
    sites: Vec<Site>,
    hoppings: Vec<Hopping>,
    by_id: HashMap<SiteId, usize>,
    /// Adjacency by matrix index; entry `(m, h)` means `H[n][m] = h`.
    adjacency: Vec<Vec<(usize, Complex64)>>,
    max_entry: f64,
}

/// Builds a lattice, validating id and coordinate uniqueness, hopping
/// endpoints, and (when `grid_mode` is set) that every hopping connects
/// sites one step apart along exactly one axis.
pub fn build_lattice(
    name: &str,
    grid_mode: bool,
    sites: &[SiteSpec],
    hops: &[HopSpec],
) -> Result<Lattice, LatticeError> {
    if sites.is_empty() {
        return Err(LatticeError::EmptyLattice);
    }
    let mut by_id = HashMap::new();
    let mut by_coord: HashMap<(i64, i64), usize> = HashMap::new();
    let mut site_vec: Vec<Site> = Vec::with_capacity(sites.len());
    for (i, s) in sites.iter().enumerate() {
        let id = SiteId(s.id);
        if by_id.insert(id, i).is_some() {
            return Err(LatticeError::DuplicateSiteId(id));
        }
        if let Some(&j) = by_coord.get(&(s.x, s.y)) {
            return Err(LatticeError::DuplicateCoordinates {
                a: site_vec[j as usize].id,
                b: id,
                x: s.x,
                y: s.y,
            });
        }
        by_coord.insert((s.x, s.y), i);
        site_vec.push(Site { id, x: s.x, y: s.y, v: s.v });
    }

    let mut adjacency: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); site_vec.len()];
    let mut seen_pairs: HashMap<(SiteId, SiteId), ()> = HashMap::new();
    let mut hoppings = Vec::with_capacity(hops.len());
    let mut max_entry = site_vec.iter().map(|s| s.v.norm()).fold(0.0, f64::max);
    for hop in hops {
        let a = SiteId(hop.a);
        let b = SiteId(hop.b);
        let ia = *by_id.get(&a).ok_or(LatticeError::UnknownSite(a))?;
        let ib = *by_id.get(&b).ok_or(LatticeError::UnknownSite(b))?;
        if ia == ib {
            return Err(LatticeError::SelfHopping(a));
        }
        let (lo, hi, h) = if a < b { (a, b, hop.h) } else { (b, a, hop.h.conj()) };
        if seen_pairs.insert((lo, hi), ()).is_some() {
            return Err(LatticeError::DuplicateHopping { a: lo, b: hi });
        }
        if hop.h == Complex64::new(0.0, 0.0) {
            return Err(LatticeError::ZeroHopping { a: lo, b: hi });
        }
        if grid_mode {
            let (sa, sb) = (&site_vec[ia], &site_vec[ib]);
            let (dx, dy) = ((sa.x - sb.x).abs(), (sa.y - sb.y).abs());
            if !((dx == 1 && dy == 0) || (dx == 0 && dy == 1)) {
                return Err(LatticeError::GridViolation { a, b });
            }
        }
        let (ilo, ihi) = if a < b { (ia, ib) } else { (ib, ia) };
        adjacency[ilo].push((ihi, h));
        adjacency[ihi].push((ilo, h.conj()));
        hoppings.push(Hopping { a: lo, b: hi, h });
        max_entry = max_entry.max(h.norm());
    }
    for row in &mut adjacency {
        row.sort_by_key(|&(m, _)| site_vec[m].id);
    }
    hoppings.sort_by_key(|h| (h.a, h.b));

    Ok(Lattice {
        name: name.to_string(),
        grid_mode,
        sites: site_vec,
        hoppings,
        by_id,
        adjacency,
        max_entry,
    })
}

impl Lattice {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid_mode(&self) -> bool {
        self.grid_mode
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Sites in declaration order (the Hamiltonian row order).
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Stored hoppings, normalized to ascending id pairs.
    pub fn hoppings(&self) -> &[Hopping] {
        &self.hoppings
    }

    pub fn contains(&self, id: SiteId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn index_of(&self, id: SiteId) -> Result<usize, LatticeError> {
        self.by_id.get(&id).copied().ok_or(LatticeError::UnknownSite(id))
    }

    pub fn site(&self, id: SiteId) -> Result<&Site, LatticeError> {
        Ok(&self.sites[self.index_of(id)?])
    }

    pub fn site_at(&self, index: usize) -> &Site {
        &self.sites[index]
    }

    pub fn id_at(&self, index: usize) -> SiteId {
        self.sites[index].id
    }

    /// Site id at given coordinates, if any.
    pub fn site_at_coords(&self, x: i64, y: i64) -> Option<SiteId> {
        // Linear scan is fine at the scales this crate targets; the builder's
        // coordinate map is not retained to keep the struct lean.
        self.sites.iter().find(|s| s.x == x && s.y == y).map(|s| s.id)
    }

    /// Neighbor ids of `n`, ascending by id.
    pub fn neighbors(&self, n: SiteId) -> Result<Vec<SiteId>, LatticeError> {
        let idx = self.index_of(n)?;
        Ok(self.adjacency[idx].iter().map(|&(m, _)| self.sites[m].id).collect())
    }

    /// Adjacency row by matrix index; entries are `(neighbor_index, H[n][m])`
    /// sorted by neighbor id.
    pub fn adjacency_row(&self, index: usize) -> &[(usize, Complex64)] {
        &self.adjacency[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.adjacency[index].len()
    }

    /// Hamiltonian entry `H[n][m]` by matrix indices (diagonal included;
    /// absent hoppings give zero).
    pub fn entry(&self, n: usize, m: usize) -> Complex64 {
        if n == m {
            return self.sites[n].v;
        }
        self.adjacency[n]
            .iter()
            .find(|&&(k, _)| k == m)
            .map(|&(_, h)| h)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn potential(&self, id: SiteId) -> Result<Complex64, LatticeError> {
        Ok(self.site(id)?.v)
    }

    /// Largest magnitude among potentials and hoppings.
    pub fn max_entry_magnitude(&self) -> f64 {
        self.max_entry
    }

    /// True when every potential and hopping is exactly real, which selects
    /// the real-arithmetic eigensolver path and its real-gauge guarantee.
    pub fn is_real(&self) -> bool {
        self.sites.iter().all(|s| s.v.im == 0.0) && self.hoppings.iter().all(|h| h.h.im == 0.0)
    }

    /// `H ψ` by matrix index.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(psi.len(), self.sites.len());
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for n in 0..psi.len() {
            let mut acc = self.sites[n].v * psi[n];
            for &(m, h) in &self.adjacency[n] {
                acc += h * psi[m];
            }
            out[n] = acc;
        }
        out
    }
}

/// Dense Hamiltonian in site declaration order.
pub fn hamiltonian_matrix(lat: &Lattice) -> Array2<Complex64> {
    let n = lat.n_sites();
    let mut h = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    for i in 0..n {
        h[[i, i]] = lat.site_at(i).v;
        for &(j, hij) in lat.adjacency_row(i) {
            h[[i, j]] = hij;
        }
    }
    h
}
