//! Symmetry domains: connected site sets on which the Hamiltonian is
//! invariant under a mapping.
//!
//! The invariance condition is entrywise and quantifies over *all* pairs of
//! domain sites including diagonal and zero entries: `H[m][n] = H[m'][n']`
//! for every `m, n` in the domain. Diagonal pairs force equal potentials,
//! absent hoppings force absent (or zero) image hoppings.

use crate::lattice::{Lattice, SiteId};
use crate::mapping::SiteMapping;
use crate::Tolerances;
use std::collections::BTreeSet;
use thiserror::Error;

/// A verified symmetry domain. Only [`verify_domain`] and the detectors
/// construct this type, so holding one is proof the pairwise condition held
/// at construction time (checkers re-verify rather than trusting it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryDomain {
    sites: Vec<SiteId>,
}

impl SymmetryDomain {
    /// Member sites, ascending.
    pub fn sites(&self) -> &[SiteId] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, id: SiteId) -> bool {
        self.sites.binary_search(&id).is_ok()
    }
}

/// One failed entry comparison: `H[m][n]` against `H[m'][n']`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainViolation {
    pub m: SiteId,
    pub n: SiteId,
    pub lhs: num_complex::Complex64,
    pub rhs: num_complex::Complex64,
}

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("domain is empty")]
    Empty,
    #[error("unknown site {0}")]
    UnknownSite(SiteId),
    #[error("domain is not connected")]
    NotConnected,
    #[error("symmetry condition violated at {} entry pair(s)", .0.len())]
    SymmetryViolated(Vec<DomainViolation>),
}

fn connected(lat: &Lattice, indices: &BTreeSet<usize>) -> bool {
    let mut seen = BTreeSet::new();
    let Some(&start) = indices.iter().next() else { return false };
    let mut stack = vec![start];
    seen.insert(start);
    while let Some(i) = stack.pop() {
        for &(j, _) in lat.adjacency_row(i) {
            if indices.contains(&j) && seen.insert(j) {
                stack.push(j);
            }
        }
    }
    seen.len() == indices.len()
}

fn pair_ok(lat: &Lattice, m: &SiteMapping, a: usize, b: usize, tol: f64) -> bool {
    let lhs = lat.entry(a, b);
    let rhs = lat.entry(m.image_index(a), m.image_index(b));
    (lhs - rhs).norm() <= tol
}

/// Verifies the full pairwise invariance condition on `sites` and returns
/// the proof-carrying domain.
pub fn verify_domain(
    lat: &Lattice,
    m: &SiteMapping,
    sites: &[SiteId],
    tol: &Tolerances,
) -> Result<SymmetryDomain, DomainError> {
    if sites.is_empty() {
        return Err(DomainError::Empty);
    }
    let mut indices = BTreeSet::new();
    for &id in sites {
        let idx = lat.index_of(id).map_err(|_| DomainError::UnknownSite(id))?;
        indices.insert(idx);
    }
    if !connected(lat, &indices) {
        return Err(DomainError::NotConnected);
    }
    let mut violations = Vec::new();
    let idx_vec: Vec<usize> = indices.iter().copied().collect();
    for (i, &a) in idx_vec.iter().enumerate() {
        for &b in &idx_vec[i..] {
            if !pair_ok(lat, m, a, b, tol.sym) {
                violations.push(DomainViolation {
                    m: lat.id_at(a),
                    n: lat.id_at(b),
                    lhs: lat.entry(a, b),
                    rhs: lat.entry(m.image_index(a), m.image_index(b)),
                });
            }
        }
    }
    if !violations.is_empty() {
        return Err(DomainError::SymmetryViolated(violations));
    }
    let mut out: Vec<SiteId> = indices.into_iter().map(|i| lat.id_at(i)).collect();
    out.sort();
    Ok(SymmetryDomain { sites: out })
}

fn candidate_ok(
    lat: &Lattice,
    m: &SiteMapping,
    set: &BTreeSet<usize>,
    c: usize,
    tol: f64,
) -> bool {
    if !pair_ok(lat, m, c, c, tol) {
        return false;
    }
    set.iter().all(|&s| pair_ok(lat, m, c, s, tol))
}

/// Greedy detection of maximal domains: every site whose potential matches
/// its image's seeds a domain, which grows breadth-first in ascending id
/// order, adding a neighbor only while the full pairwise condition holds.
/// Results are valid and inclusion-maximal; overlapping domains are kept,
/// identical ones deduplicated.
pub fn detect_maximal_domains(
    lat: &Lattice,
    m: &SiteMapping,
    tol: &Tolerances,
) -> Vec<SymmetryDomain> {
    let n = lat.n_sites();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| lat.id_at(i));

    let mut found: Vec<Vec<SiteId>> = Vec::new();
    for &seed in &order {
        if !pair_ok(lat, m, seed, seed, tol.sym) {
            continue;
        }
        let mut set = BTreeSet::new();
        set.insert(seed);
        loop {
            let mut boundary: Vec<usize> = set
                .iter()
                .flat_map(|&i| lat.adjacency_row(i).iter().map(|&(j, _)| j))
                .filter(|j| !set.contains(j))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            boundary.sort_by_key(|&i| lat.id_at(i));
            let mut grew = false;
            for c in boundary {
                if candidate_ok(lat, m, &set, c, tol.sym) {
                    set.insert(c);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let mut ids: Vec<SiteId> = set.iter().map(|&i| lat.id_at(i)).collect();
        ids.sort();
        if !found.contains(&ids) {
            found.push(ids);
        }
    }
    found.sort();
    found.into_iter().map(|sites| SymmetryDomain { sites }).collect()
}

/// Exhaustive detection: enumerates every connected subset and keeps the
/// valid, inclusion-maximal ones. Exponential; intended as the oracle for
/// small lattices.
pub fn detect_domains_exhaustive(
    lat: &Lattice,
    m: &SiteMapping,
    tol: &Tolerances,
) -> Vec<SymmetryDomain> {
    let n = lat.n_sites();
    assert!(n <= 16, "exhaustive domain detection is limited to 16 sites");
    let mut out: Vec<Vec<SiteId>> = Vec::new();
    'mask: for mask in 1u32..(1 << n) {
        let set: BTreeSet<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if !connected(lat, &set) {
            continue;
        }
        let idx_vec: Vec<usize> = set.iter().copied().collect();
        for (i, &a) in idx_vec.iter().enumerate() {
            for &b in &idx_vec[i..] {
                if !pair_ok(lat, m, a, b, tol.sym) {
                    continue 'mask;
                }
            }
        }
        // Maximal iff no single boundary site extends it.
        let extendable = (0..n).any(|c| {
            !set.contains(&c)
                && lat.adjacency_row(c).iter().any(|&(j, _)| set.contains(&j))
                && candidate_ok(lat, m, &set, c, tol.sym)
        });
        if !extendable {
            let mut ids: Vec<SiteId> = set.iter().map(|&i| lat.id_at(i)).collect();
            ids.sort();
            out.push(ids);
        }
    }
    out.sort();
    out.dedup();
    out.into_iter().map(|sites| SymmetryDomain { sites }).collect()
}
