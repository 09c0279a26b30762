//! Non-local densities, currents, and the stationary-state Kirchhoff law.
//!
//! Every quantity here is relative to a site mapping `T` (primes denote
//! images, `n' = T(n)`):
//!
//! * density `sigma_n = conj(psi_n) psi_{n'}`,
//! * potential asymmetry `beta_n = v_{n'} - conj(v_n)`,
//! * pair current `q_{n,m} = (1/i) (h_{n',m'} conj(psi_n) psi_{m'} -
//!   conj(h_{n,m}) psi_{n'} conj(psi_m))`, where an absent hopping reads 0,
//! * site source `q_n`, equal to the sum of `q_{n,m}` over the support.
//!
//! With the identity mapping these reduce to the probability density and
//! current; [`probability_current`] literally runs [`nonlocal_current`] with
//! an identity mapping, so the two agree bit for bit.
//!
//! For any state evolving under the Hamiltonian,
//! `d sigma_n / dt = q_n - i beta_n sigma_n`; for a stationary state the
//! left side vanishes and the Kirchhoff-type law `q_n = i beta_n sigma_n`
//! holds sitewise. [`kirchhoff_residuals`] measures that defect.

use crate::lattice::{Lattice, SiteId};
use crate::mapping::{keeps_connectivity, SiteMapping};
use crate::Tolerances;
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CurrentsError {
    #[error("unknown site {0}")]
    UnknownSite(SiteId),
    #[error("state vector has {got} amplitudes, lattice has {expected} sites")]
    LengthMismatch { expected: usize, got: usize },
    #[error("pair ({n}, {m}) is outside the current support: neither the sites nor their images are connected")]
    OutOfSupport { n: SiteId, m: SiteId },
    #[error("column {x} is outside the region")]
    ColumnOutsideRegion { x: i64 },
}

fn check_len(lat: &Lattice, psi: &[Complex64]) -> Result<(), CurrentsError> {
    if psi.len() != lat.n_sites() {
        return Err(CurrentsError::LengthMismatch { expected: lat.n_sites(), got: psi.len() });
    }
    Ok(())
}

fn is_zero(z: Complex64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

pub(crate) fn sigma_at(m: &SiteMapping, psi: &[Complex64], i: usize) -> Complex64 {
    psi[i].conj() * psi[m.image_index(i)]
}

pub(crate) fn beta_at(lat: &Lattice, m: &SiteMapping, i: usize) -> Complex64 {
    lat.site_at(m.image_index(i)).v - lat.site_at(i).v.conj()
}

/// Pair current by matrix index; `None` when the pair is outside the
/// support (neither `i ~ j` nor `i' ~ j'`).
pub(crate) fn pair_current_at(
    lat: &Lattice,
    m: &SiteMapping,
    psi: &[Complex64],
    i: usize,
    j: usize,
) -> Option<Complex64> {
    let i2 = m.image_index(i);
    let j2 = m.image_index(j);
    let h_img = lat.entry(i2, j2);
    let h_dir = lat.entry(i, j);
    if is_zero(h_img) && is_zero(h_dir) {
        return None;
    }
    let a = h_img * psi[i].conj() * psi[j2];
    let b = h_dir.conj() * psi[i2] * psi[j].conj();
    Some(Complex64::new(0.0, -1.0) * (a - b))
}

/// Site source by matrix index, from the two neighbor sums.
pub(crate) fn source_at(lat: &Lattice, m: &SiteMapping, psi: &[Complex64], i: usize) -> Complex64 {
    let i2 = m.image_index(i);
    let mut acc = Complex64::new(0.0, 0.0);
    for &(k, h) in lat.adjacency_row(i2) {
        acc += h * psi[i].conj() * psi[k];
    }
    for &(k, h) in lat.adjacency_row(i) {
        acc -= h.conj() * psi[i2] * psi[k].conj();
    }
    Complex64::new(0.0, -1.0) * acc
}

/// Support partners of site `i`: its neighbors plus the preimages of its
/// image's neighbors.
pub(crate) fn support_partners(lat: &Lattice, m: &SiteMapping, i: usize) -> Vec<usize> {
    let mut set: BTreeSet<usize> =
        lat.adjacency_row(i).iter().map(|&(j, _)| j).collect();
    for &(k, _) in lat.adjacency_row(m.image_index(i)) {
        set.insert(m.preimage_index(k));
    }
    set.into_iter().collect()
}

/// Non-local density `sigma_n = conj(psi_n) psi_{n'}`.
pub fn nonlocal_density(
    lat: &Lattice,
    m: &SiteMapping,
    psi: &[Complex64],
    n: SiteId,
) -> Result<Complex64, CurrentsError> {
    check_len(lat, psi)?;
    let i = lat.index_of(n).map_err(|_| CurrentsError::UnknownSite(n))?;
    Ok(sigma_at(m, psi, i))
}

/// Potential asymmetry `beta_n = v_{n'} - conj(v_n)`; zero on sites whose
/// potential matches their image's.
pub fn beta(lat: &Lattice, m: &SiteMapping, n: SiteId) -> Result<Complex64, CurrentsError> {
    let i = lat.index_of(n).map_err(|_| CurrentsError::UnknownSite(n))?;
    Ok(beta_at(lat, m, i))
}

/// Non-local pair current `q_{n,m}`. Errs when the pair is outside the
/// support.
pub fn nonlocal_current(
    lat: &Lattice,
    m: &SiteMapping,
    psi: &[Complex64],
    n: SiteId,
    mm: SiteId,
) -> Result<Complex64, CurrentsError> {
    check_len(lat, psi)?;
    let i = lat.index_of(n).map_err(|_| CurrentsError::UnknownSite(n))?;
    let j = lat.index_of(mm).map_err(|_| CurrentsError::UnknownSite(mm))?;
    pair_current_at(lat, m, psi, i, j).ok_or(CurrentsError::OutOfSupport { n, m: mm })
}

/// Probability current `j_{n,m}`: the non-local current of the identity
/// mapping, evaluated through the identical code path.
pub fn probability_current(
    lat: &Lattice,
    psi: &[Complex64],
    n: SiteId,
    m: SiteId,
) -> Result<Complex64, CurrentsError> {
    let id = SiteMapping::identity(lat);
    nonlocal_current(lat, &id, psi, n, m)
}

/// Site source `q_n` from the two neighbor sums. Equal to the sum of
/// `q_{n,m}` over the support (see [`CurrentField::site_sum`]).
pub fn source_term(
    lat: &Lattice,
    m: &SiteMapping,
    psi: &[Complex64],
    n: SiteId,
) -> Result<Complex64, CurrentsError> {
    check_len(lat, psi)?;
    let i = lat.index_of(n).map_err(|_| CurrentsError::UnknownSite(n))?;
    Ok(source_at(lat, m, psi, i))
}

/// All pair currents of a state under a mapping, keyed by ordered site pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    entries: BTreeMap<(SiteId, SiteId), Complex64>,
}

impl CurrentField {
    pub fn get(&self, n: SiteId, m: SiteId) -> Option<Complex64> {
        self.entries.get(&(n, m)).copied()
    }

    /// Ordered pairs in ascending `(n, m)` order.
    pub fn pairs(&self) -> impl Iterator<Item = (SiteId, SiteId, Complex64)> + '_ {
        self.entries.iter().map(|(&(n, m), &q)| (n, m, q))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `q_n`: sum of pair currents leaving site `n`.
    pub fn site_sum(&self, n: SiteId) -> Complex64 {
        self.entries
            .range((n, SiteId(u32::MIN))..=(n, SiteId(u32::MAX)))
            .map(|(_, &q)| q)
            .sum()
    }

    /// Largest `|q_{n,m} + q_{m,n}|`. For identity mappings this measures
    /// the antisymmetry defect of the probability current; for general
    /// mappings the sum need not vanish.
    pub fn antisymmetry_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|(&(n, m), &q)| {
                let rev = self.get(m, n).unwrap_or(Complex64::new(0.0, 0.0));
                (q + rev).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Evaluates every supported pair current of the state.
pub fn current_field(
    lat: &Lattice,
    m: &SiteMapping,
    psi: &[Complex64],
) -> Result<CurrentField, CurrentsError> {
    check_len(lat, psi)?;
    let mut entries = BTreeMap::new();
    for i in 0..lat.n_sites() {
        for j in support_partners(lat, m, i) {
            if let Some(q) = pair_current_at(lat, m, psi, i, j) {
                entries.insert((lat.id_at(i), lat.id_at(j)), q);
            }
        }
    }
    Ok(CurrentField { entries })
}

/// Site classification flags.
///
/// `green` marks sources and sinks of the non-local density: sites whose
/// potential differs from their image's (`|beta_n|` above tolerance).
/// `red` marks sites whose neighborhood is not carried onto the image
/// neighborhood, i.e. the mapping breaks connectivity there. A site can be
/// both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SiteFlags {
    pub green: bool,
    pub red: bool,
}

/// Per-site Kirchhoff data for one state under one mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct KirchhoffSite {
    pub id: SiteId,
    pub sigma: Complex64,
    pub beta: Complex64,
    /// `|q_n - i beta_n sigma_n|`; vanishes for stationary states.
    pub residual: f64,
    pub flags: SiteFlags,
}

/// Sitewise Kirchhoff-law evaluation, in lattice site order.
#[derive(Debug, Clone, PartialEq)]
pub struct KirchhoffReport {
    pub sites: Vec<KirchhoffSite>,
}

impl KirchhoffReport {
    pub fn max_residual(&self) -> f64 {
        self.sites.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    pub fn site(&self, id: SiteId) -> Option<&KirchhoffSite> {
        self.sites.iter().find(|s| s.id == id)
    }
}

/// Evaluates `|q_n - i beta_n sigma_n|` on every site and classifies sites
/// green (potential source/sink) and red (connectivity broken).
pub fn kirchhoff_residuals(
    lat: &Lattice,
    m: &SiteMapping,
    psi: &[Complex64],
    tol: &Tolerances,
) -> Result<KirchhoffReport, CurrentsError> {
    check_len(lat, psi)?;
    let mut sites = Vec::with_capacity(lat.n_sites());
    for i in 0..lat.n_sites() {
        let id = lat.id_at(i);
        let sigma = sigma_at(m, psi, i);
        let b = beta_at(lat, m, i);
        // q_n summed pairwise over the support partition (neighbors of n,
        // plus sites whose images neighbor n's image).
        let q: Complex64 = support_partners(lat, m, i)
            .into_iter()
            .filter_map(|j| pair_current_at(lat, m, psi, i, j))
            .sum();
        let residual = (q - Complex64::new(0.0, 1.0) * b * sigma).norm();
        let flags = SiteFlags {
            green: b.norm() > tol.sym,
            red: !keeps_connectivity(lat, m, id).expect("site id from lattice"),
        };
        sites.push(KirchhoffSite { id, sigma, beta: b, residual, flags });
    }
    Ok(KirchhoffReport { sites })
}

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("region bounds are inverted ({lo} > {hi})")]
    InvertedBounds { lo: i64, hi: i64 },
    #[error("region contains no sites")]
    Empty,
    #[error("region is not connected")]
    NotConnected,
    #[error("region is not vertically confined: hopping from {from} leaves through {to}")]
    NotConfined { from: SiteId, to: SiteId },
}

/// A column-bounded window of the lattice used for summed currents.
///
/// Membership is by bounds: every lattice site inside the x-range (clipped
/// by the y-range, when given) belongs to the region, and each column keeps
/// its own y-extent. Construction validates that the members are connected
/// and that no hopping leaves the region except through its left and right
/// ends; currents can then only cross vertical cuts, which is what makes
/// column sums comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    x_min: i64,
    x_max: i64,
    col_bounds: BTreeMap<i64, (i64, i64)>,
    indices: Vec<usize>,
    ids: Vec<SiteId>,
}

impl Region {
    pub fn new(
        lat: &Lattice,
        x_min: i64,
        x_max: i64,
        y_clip: Option<(i64, i64)>,
    ) -> Result<Region, RegionError> {
        if x_min > x_max {
            return Err(RegionError::InvertedBounds { lo: x_min, hi: x_max });
        }
        if let Some((lo, hi)) = y_clip {
            if lo > hi {
                return Err(RegionError::InvertedBounds { lo, hi });
            }
        }
        let mut indices: Vec<usize> = (0..lat.n_sites())
            .filter(|&i| {
                let s = lat.site_at(i);
                s.x >= x_min
                    && s.x <= x_max
                    && y_clip.is_none_or(|(lo, hi)| s.y >= lo && s.y <= hi)
            })
            .collect();
        if indices.is_empty() {
            return Err(RegionError::Empty);
        }
        indices.sort();
        let mut col_bounds: BTreeMap<i64, (i64, i64)> = BTreeMap::new();
        for &i in &indices {
            let s = lat.site_at(i);
            col_bounds
                .entry(s.x)
                .and_modify(|(lo, hi)| {
                    *lo = (*lo).min(s.y);
                    *hi = (*hi).max(s.y);
                })
                .or_insert((s.y, s.y));
        }
        let member = |i: usize| indices.binary_search(&i).is_ok();
        // Connectivity of the induced subgraph.
        let mut seen = vec![false; lat.n_sites()];
        let mut stack = vec![indices[0]];
        seen[indices[0]] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(j, _) in lat.adjacency_row(i) {
                if member(j) && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        if count != indices.len() {
            return Err(RegionError::NotConnected);
        }
        // Confinement: hoppings may leave only through the x ends. Any
        // neighbor outside the region whose column is still inside the
        // x-range has escaped through a column's top or bottom.
        for &i in &indices {
            for &(j, _) in lat.adjacency_row(i) {
                if !member(j) {
                    let out = lat.site_at(j);
                    if out.x >= x_min && out.x <= x_max {
                        return Err(RegionError::NotConfined {
                            from: lat.id_at(i),
                            to: lat.id_at(j),
                        });
                    }
                }
            }
        }
        let ids = indices.iter().map(|&i| lat.id_at(i)).collect();
        Ok(Region { x_min, x_max, col_bounds, indices, ids })
    }

    pub fn x_range(&self) -> (i64, i64) {
        (self.x_min, self.x_max)
    }

    /// Global envelope of all column extents.
    pub fn y_range(&self) -> (i64, i64) {
        self.col_bounds
            .values()
            .fold((i64::MAX, i64::MIN), |(lo, hi), &(clo, chi)| (lo.min(clo), hi.max(chi)))
    }

    /// The y-extent of one column, when the column has member sites.
    pub fn column_bounds(&self, x: i64) -> Option<(i64, i64)> {
        self.col_bounds.get(&x).copied()
    }

    pub fn site_ids(&self) -> &[SiteId] {
        &self.ids
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Which neighbor column a summed current flows toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `Q_{x, x+1}`.
    Right,
    /// `Q_{x, x-1}`.
    Left,
}

impl Direction {
    fn step(self) -> i64 {
        match self {
            Direction::Right => 1,
            Direction::Left => -1,
        }
    }
}

/// Row range entering a summed current.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumRange {
    /// Exclude the region's top and bottom rows (the default contract).
    InteriorRows,
    /// Include every row.
    AllRows,
}

/// Summed current between column `x` and its neighbor column: the sum of
/// `q_{(x,y),(x±1,y)}` over the selected rows of column `x`. Missing sites
/// and out-of-support pairs contribute zero.
pub fn summed_current(
    lat: &Lattice,
    region: &Region,
    m: &SiteMapping,
    psi: &[Complex64],
    x: i64,
    direction: Direction,
    range: SumRange,
) -> Result<Complex64, CurrentsError> {
    check_len(lat, psi)?;
    let x2 = x + direction.step();
    for col in [x, x2] {
        if col < region.x_min || col > region.x_max {
            return Err(CurrentsError::ColumnOutsideRegion { x: col });
        }
    }
    let (col_lo, col_hi) =
        region.column_bounds(x).ok_or(CurrentsError::ColumnOutsideRegion { x })?;
    let (lo, hi) = match range {
        SumRange::InteriorRows => (col_lo + 1, col_hi - 1),
        SumRange::AllRows => (col_lo, col_hi),
    };
    let mut total = Complex64::new(0.0, 0.0);
    for y in lo..=hi {
        let (Some(a), Some(b)) = (lat.site_at_coords(x, y), lat.site_at_coords(x2, y)) else {
            continue;
        };
        let i = lat.index_of(a).expect("site id from lattice");
        let j = lat.index_of(b).expect("site id from lattice");
        if let Some(q) = pair_current_at(lat, m, psi, i, j) {
            total += q;
        }
    }
    Ok(total)
}
