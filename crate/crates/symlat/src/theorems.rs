//! Checkers for the structural consequences of local symmetry.
//!
//! Each checker re-verifies its hypotheses from scratch before looking at
//! the claimed equalities, and reports a three-valued [`Verdict`]: the
//! equalities hold, they fail, or a hypothesis is not met so the statement
//! does not apply. Malformed input (unknown sites, duplicate ids, mismatched
//! lengths) is an error, never a verdict.

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use crate::currents::{
    pair_current_at, summed_current, CurrentsError, Direction, Region, SumRange,
};
use crate::lattice::{Lattice, LatticeError, SiteId};
use crate::mapping::{keeps_connectivity, MappingError, SiteMapping};
use crate::spectral::{
    commutator_norm, eigenstates, symmetry_adapt, AdaptOutcome, SpectralError, Spectrum,
};
use crate::symmetry::{verify_domain, DomainError};
use crate::Tolerances;

/// Outcome of a theorem check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Hypotheses are satisfied and every checked equality holds.
    Holds,
    /// Hypotheses are satisfied but at least one equality is violated.
    Fails,
    /// At least one hypothesis is not satisfied; the statement says nothing.
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One hypothesis of a theorem together with the result of checking it.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub name: &'static str,
    pub satisfied: bool,
    pub detail: String,
}

/// A named scalar recorded while checking the conclusion, e.g. one
/// pair-current deviation or a commutator norm.
#[derive(Debug, Clone)]
pub struct Witness {
    pub label: String,
    /// Index of the eigenstate the value belongs to, when state-specific.
    pub state_index: Option<usize>,
    pub value: f64,
}

/// Per-state proportionality constant relating chain amplitudes to their
/// images, with the largest deviation from exact proportionality.
#[derive(Debug, Clone)]
pub struct SimilarityConstant {
    pub state_index: usize,
    /// False when both the chain amplitudes and their images vanish, so no
    /// constant is determined; such states are exempt, not failures.
    pub defined: bool,
    pub value: Complex64,
    pub spread: f64,
}

/// Full account of one theorem check.
#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub id: &'static str,
    pub verdict: Verdict,
    pub hypotheses: Vec<Hypothesis>,
    pub witnesses: Vec<Witness>,
    /// Largest deviation among the checked equalities; 0 when not applicable.
    pub max_residual: f64,
    /// Similarity constants, one per eigenstate; empty for checks that do
    /// not produce any.
    pub constants: Vec<SimilarityConstant>,
}

impl TheoremReport {
    /// The witness with the given label, if recorded.
    pub fn witness(&self, label: &str) -> Option<&Witness> {
        self.witnesses.iter().find(|w| w.label == label)
    }
}

#[derive(Debug, Error)]
pub enum TheoremError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Currents(#[from] CurrentsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub(crate) const ID_DOMAINWISE: &str = "domainwise-constancy";
pub(crate) const ID_SUMMED: &str = "summed-constancy";
pub(crate) const ID_OPEN_CHAIN: &str = "open-chain-similarity";
pub(crate) const ID_LOOP_REFLECT: &str = "closed-loop-reflection";
pub(crate) const ID_LOOP_TRANSLATE: &str = "closed-loop-translation";

fn hyp(name: &'static str, satisfied: bool, detail: impl Into<String>) -> Hypothesis {
    Hypothesis { name, satisfied, detail: detail.into() }
}

fn all_ok(hypotheses: &[Hypothesis]) -> bool {
    hypotheses.iter().all(|h| h.satisfied)
}

fn not_applicable(id: &'static str, hypotheses: Vec<Hypothesis>) -> TheoremReport {
    TheoremReport {
        id,
        verdict: Verdict::NotApplicable,
        hypotheses,
        witnesses: Vec::new(),
        max_residual: 0.0,
        constants: Vec::new(),
    }
}

/// Resolves distinct known site ids to matrix indices.
fn resolve(lat: &Lattice, sites: &[SiteId]) -> Result<Vec<usize>, TheoremError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(sites.len());
    for &id in sites {
        let idx = lat.index_of(id)?;
        if !seen.insert(idx) {
            return Err(TheoremError::Invalid(format!("site {id} listed twice")));
        }
        out.push(idx);
    }
    Ok(out)
}

fn check_state_len(lat: &Lattice, psi: &[Complex64]) -> Result<(), TheoremError> {
    if psi.len() != lat.n_sites() {
        return Err(CurrentsError::LengthMismatch {
            expected: lat.n_sites(),
            got: psi.len(),
        }
        .into());
    }
    Ok(())
}

/// The local-symmetry hypothesis: the sites form a verified domain.
fn domain_hypothesis(
    lat: &Lattice,
    m: &SiteMapping,
    sites: &[SiteId],
    tol: &Tolerances,
) -> Result<Hypothesis, TheoremError> {
    match verify_domain(lat, m, sites, tol) {
        Ok(_) => Ok(hyp(
            "local-symmetry",
            true,
            "the Hamiltonian entries are invariant under the mapping on these sites",
        )),
        Err(DomainError::SymmetryViolated(violations)) => Ok(hyp(
            "local-symmetry",
            false,
            format!("{} site pair(s) change their Hamiltonian entry under the mapping", violations.len()),
        )),
        Err(DomainError::NotConnected) => {
            Ok(hyp("local-symmetry", false, "the site set is not connected"))
        }
        Err(e @ (DomainError::Empty | DomainError::UnknownSite(_))) => {
            Err(TheoremError::Invalid(e.to_string()))
        }
    }
}

/// The connectivity hypothesis: every listed site keeps its neighborhood
/// structure under the mapping.
fn connectivity_hypothesis(
    lat: &Lattice,
    m: &SiteMapping,
    sites: &[SiteId],
) -> Result<Hypothesis, TheoremError> {
    let mut broken = Vec::new();
    for &id in sites {
        if !keeps_connectivity(lat, m, id)? {
            broken.push(id.to_string());
        }
    }
    if broken.is_empty() {
        Ok(hyp("connectivity-kept", true, "the mapping preserves every site's couplings"))
    } else {
        Ok(hyp(
            "connectivity-kept",
            false,
            format!("sites [{}] change their couplings under the mapping", broken.join(", ")),
        ))
    }
}

/// Consecutive entries of `idxs`, including the wrap-around pair, must be
/// coupled in the lattice.
fn cycle_hypothesis(lat: &Lattice, idxs: &[usize]) -> Hypothesis {
    let zero = Complex64::new(0.0, 0.0);
    let k = idxs.len();
    let mut gaps = Vec::new();
    for i in 0..k {
        let a = idxs[i];
        let b = idxs[(i + 1) % k];
        if lat.entry(a, b) == zero {
            gaps.push(format!("{}-{}", lat.id_at(a), lat.id_at(b)));
        }
    }
    if gaps.is_empty() {
        hyp("cycle-shape", true, "consecutive loop sites are coupled, wrap-around included")
    } else {
        hyp("cycle-shape", false, format!("missing couplings: [{}]", gaps.join(", ")))
    }
}

/// Every site outside `inside` must be fixed by the mapping.
fn identity_outside_hypothesis(
    lat: &Lattice,
    m: &SiteMapping,
    inside: &BTreeSet<usize>,
) -> Hypothesis {
    let moved: Vec<String> = (0..lat.n_sites())
        .filter(|&i| !inside.contains(&i) && m.image_index(i) != i)
        .map(|i| lat.id_at(i).to_string())
        .collect();
    if moved.is_empty() {
        hyp("identity-outside", true, "every site off the loop is fixed by the mapping")
    } else {
        hyp(
            "identity-outside",
            false,
            format!("sites [{}] off the loop are moved by the mapping", moved.join(", ")),
        )
    }
}

/// Orders a connected site set of maximum degree two into a path, or a
/// cycle when no endpoint exists. Returns the ordered indices and whether
/// they close into a cycle.
fn order_path(lat: &Lattice, set: &BTreeSet<usize>) -> (Vec<usize>, bool) {
    let in_degree = |i: usize| {
        lat.adjacency_row(i).iter().filter(|(j, _)| set.contains(j)).count()
    };
    let endpoint = set.iter().copied().find(|&i| in_degree(i) <= 1);
    let is_cycle = endpoint.is_none();
    let start = endpoint.unwrap_or_else(|| *set.iter().next().expect("set is nonempty"));
    let mut path = vec![start];
    let mut prev: Option<usize> = None;
    let mut cur = start;
    loop {
        let next = lat
            .adjacency_row(cur)
            .iter()
            .map(|&(j, _)| j)
            .find(|&j| set.contains(&j) && Some(j) != prev && j != start);
        match next {
            Some(j) => {
                path.push(j);
                prev = Some(cur);
                cur = j;
            }
            None => break,
        }
    }
    (path, is_cycle)
}

/// Checks that the non-local current is constant along a symmetry domain in
/// which every site has at most two neighbors (a chain or ring segment).
///
/// For a stationary state, every consecutive pair of domain sites must carry
/// the same current; on a closed ring the wrap-around pair is compared too.
pub fn check_domainwise_constancy(
    lat: &Lattice,
    m: &SiteMapping,
    domain: &[SiteId],
    psi: &[Complex64],
    tol: &Tolerances,
) -> Result<TheoremReport, TheoremError> {
    check_state_len(lat, psi)?;
    let idxs = resolve(lat, domain)?;

    let mut hypotheses = vec![domain_hypothesis(lat, m, domain, tol)?];
    let over: Vec<String> = idxs
        .iter()
        .filter(|&&i| lat.degree(i) > 2)
        .map(|&i| lat.id_at(i).to_string())
        .collect();
    hypotheses.push(if over.is_empty() {
        hyp("at-most-two-neighbors", true, "every domain site has at most two neighbors")
    } else {
        hyp(
            "at-most-two-neighbors",
            false,
            format!("sites [{}] have more than two neighbors", over.join(", ")),
        )
    });
    hypotheses.push(connectivity_hypothesis(lat, m, domain)?);

    if !all_ok(&hypotheses) {
        return Ok(not_applicable(ID_DOMAINWISE, hypotheses));
    }

    let set: BTreeSet<usize> = idxs.iter().copied().collect();
    let (path, is_cycle) = order_path(lat, &set);
    let mut pairs: Vec<(usize, usize)> = path.windows(2).map(|w| (w[0], w[1])).collect();
    if is_cycle && path.len() > 2 {
        pairs.push((*path.last().expect("path is nonempty"), path[0]));
    }

    let mut witnesses = Vec::new();
    let mut max_residual = 0.0f64;
    if let Some(&(a0, b0)) = pairs.first() {
        let q0 = pair_current_at(lat, m, psi, a0, b0)
            .expect("consecutive domain sites are coupled");
        witnesses.push(Witness {
            label: format!("|q({},{})|", lat.id_at(a0), lat.id_at(b0)),
            state_index: None,
            value: q0.norm(),
        });
        for &(a, b) in &pairs[1..] {
            let q = pair_current_at(lat, m, psi, a, b)
                .expect("consecutive domain sites are coupled");
            let dev = (q - q0).norm();
            witnesses.push(Witness {
                label: format!(
                    "|q({},{}) - q({},{})|",
                    lat.id_at(a),
                    lat.id_at(b),
                    lat.id_at(a0),
                    lat.id_at(b0)
                ),
                state_index: None,
                value: dev,
            });
            max_residual = max_residual.max(dev);
        }
    }

    let verdict = if max_residual <= tol.theorem { Verdict::Holds } else { Verdict::Fails };
    Ok(TheoremReport {
        id: ID_DOMAINWISE,
        verdict,
        hypotheses,
        witnesses,
        max_residual,
        constants: Vec::new(),
    })
}

/// Checks that the summed current across consecutive column cuts of a region
/// is constant: `Q_{x-1,x} = Q_{x,x+1}` for every interior column `x`.
///
/// The region must lie inside one verified symmetry domain whose sites keep
/// their couplings under the mapping. Regions spanning fewer than three
/// columns have no interior column and hold vacuously.
pub fn check_summed_constancy(
    lat: &Lattice,
    m: &SiteMapping,
    region: &Region,
    psi: &[Complex64],
    range: SumRange,
    tol: &Tolerances,
) -> Result<TheoremReport, TheoremError> {
    check_state_len(lat, psi)?;

    let mut hypotheses = vec![domain_hypothesis(lat, m, region.site_ids(), tol)?];
    hypotheses.push(connectivity_hypothesis(lat, m, region.site_ids())?);
    if !all_ok(&hypotheses) {
        return Ok(not_applicable(ID_SUMMED, hypotheses));
    }

    let (x_min, x_max) = region.x_range();
    let mut witnesses = Vec::new();
    let mut max_residual = 0.0f64;
    if x_max - x_min >= 2 {
        let mut prev = summed_current(lat, region, m, psi, x_min, Direction::Right, range)?;
        witnesses.push(Witness {
            label: format!("|Q({},{})|", x_min, x_min + 1),
            state_index: None,
            value: prev.norm(),
        });
        for x in (x_min + 1)..x_max {
            let q = summed_current(lat, region, m, psi, x, Direction::Right, range)?;
            let dev = (q - prev).norm();
            witnesses.push(Witness {
                label: format!("|Q({},{}) - Q({},{})|", x, x + 1, x - 1, x),
                state_index: None,
                value: dev,
            });
            max_residual = max_residual.max(dev);
            prev = q;
        }
    }

    let verdict = if max_residual <= tol.theorem { Verdict::Holds } else { Verdict::Fails };
    Ok(TheoremReport {
        id: ID_SUMMED,
        verdict,
        hypotheses,
        witnesses,
        max_residual,
        constants: Vec::new(),
    })
}

/// Checks the amplitude similarity on an open chain: for every eigenstate,
/// the conjugated chain amplitudes are one common multiple of their images,
/// `conj(a_n) = C a_{n'}`, and all currents inside the chain vanish.
///
/// `chain` lists the sites from the free end inward; the free end must have
/// exactly one neighbor and interior sites exactly two. States whose chain
/// and image amplitudes both vanish determine no constant and are exempt.
/// An isolated zero amplitude inside the chain is bridged by the constant
/// taken from the largest image amplitude.
pub fn open_chain_similarity(
    lat: &Lattice,
    m: &SiteMapping,
    chain: &[SiteId],
    spectrum: &Spectrum,
    tol: &Tolerances,
) -> Result<TheoremReport, TheoremError> {
    if chain.len() < 2 {
        return Err(TheoremError::Invalid("chain needs at least two sites".into()));
    }
    let idxs = resolve(lat, chain)?;
    let k = idxs.len();
    for state in &spectrum.states {
        if state.amplitudes.len() != lat.n_sites() {
            return Err(TheoremError::Invalid("spectrum does not match the lattice".into()));
        }
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut hypotheses = Vec::new();

    let free_end_ok = lat.degree(idxs[0]) == 1 && lat.entry(idxs[0], idxs[1]) != zero;
    hypotheses.push(if free_end_ok {
        hyp("open-end", true, "the first chain site couples only to the second")
    } else {
        hyp(
            "open-end",
            false,
            format!("site {} is not a free end of the chain", chain[0]),
        )
    });

    let mut misshapen = Vec::new();
    for i in 1..k - 1 {
        let have: BTreeSet<usize> =
            lat.adjacency_row(idxs[i]).iter().map(|&(j, _)| j).collect();
        let want: BTreeSet<usize> = [idxs[i - 1], idxs[i + 1]].into_iter().collect();
        if have != want {
            misshapen.push(chain[i].to_string());
        }
    }
    if lat.entry(idxs[k - 2], idxs[k - 1]) == zero {
        misshapen.push(chain[k - 1].to_string());
    }
    hypotheses.push(if misshapen.is_empty() {
        hyp("chain-shape", true, "interior chain sites couple exactly to their chain neighbors")
    } else {
        hyp(
            "chain-shape",
            false,
            format!("sites [{}] break the chain shape", misshapen.join(", ")),
        )
    });

    hypotheses.push(domain_hypothesis(lat, m, chain, tol)?);
    hypotheses.push(connectivity_hypothesis(lat, m, chain)?);

    if !all_ok(&hypotheses) {
        return Ok(not_applicable(ID_OPEN_CHAIN, hypotheses));
    }

    let mut witnesses = Vec::new();
    let mut constants = Vec::with_capacity(spectrum.states.len());
    let mut max_residual = 0.0f64;
    for state in &spectrum.states {
        let a = &state.amplitudes;

        let mut q_max = 0.0f64;
        for w in idxs.windows(2) {
            let q = pair_current_at(lat, m, a, w[0], w[1])
                .expect("consecutive chain sites are coupled");
            q_max = q_max.max(q.norm());
        }
        witnesses.push(Witness {
            label: "max in-chain current".into(),
            state_index: Some(state.index),
            value: q_max,
        });
        max_residual = max_residual.max(q_max);

        let (n_star, img_star) = idxs
            .iter()
            .map(|&i| (i, m.image_index(i)))
            .max_by(|x, y| a[x.1].norm().total_cmp(&a[y.1].norm()))
            .expect("chain is nonempty");
        if a[img_star].norm() <= tol.amp_zero {
            let chain_mag = idxs.iter().map(|&i| a[i].norm()).fold(0.0, f64::max);
            if chain_mag > tol.amp_zero {
                witnesses.push(Witness {
                    label: "chain amplitudes without image support".into(),
                    state_index: Some(state.index),
                    value: chain_mag,
                });
                max_residual = max_residual.max(chain_mag);
            }
            constants.push(SimilarityConstant {
                state_index: state.index,
                defined: false,
                value: zero,
                spread: 0.0,
            });
            continue;
        }
        let c = a[n_star].conj() / a[img_star];
        let spread = idxs
            .iter()
            .map(|&i| (a[i].conj() - c * a[m.image_index(i)]).norm())
            .fold(0.0, f64::max);
        witnesses.push(Witness {
            label: "similarity spread".into(),
            state_index: Some(state.index),
            value: spread,
        });
        max_residual = max_residual.max(spread);
        constants.push(SimilarityConstant {
            state_index: state.index,
            defined: true,
            value: c,
            spread,
        });
    }

    let verdict = if max_residual <= tol.theorem { Verdict::Holds } else { Verdict::Fails };
    Ok(TheoremReport {
        id: ID_OPEN_CHAIN,
        verdict,
        hypotheses,
        witnesses,
        max_residual,
        constants,
    })
}

/// Checks that a reflection-symmetric loop with at most one external
/// connection, placed at the fixed site of the reflection, commutes with the
/// full Hamiltonian, and that after symmetry adaptation every eigenstate
/// carries a single parity sign on the loop sites.
pub fn closed_loop_reflection(
    lat: &Lattice,
    m: &SiteMapping,
    loop_sites: &[SiteId],
    axis_site: SiteId,
    tol: &Tolerances,
) -> Result<TheoremReport, TheoremError> {
    if loop_sites.len() < 3 {
        return Err(TheoremError::Invalid("loop needs at least three sites".into()));
    }
    let idxs = resolve(lat, loop_sites)?;
    let axis_idx = lat.index_of(axis_site)?;
    if !idxs.contains(&axis_idx) {
        return Err(TheoremError::Invalid(format!("axis site {axis_site} is not on the loop")));
    }
    let set: BTreeSet<usize> = idxs.iter().copied().collect();

    let mut hypotheses = vec![cycle_hypothesis(lat, &idxs)];

    let axis_fixed = m.image_index(axis_idx) == axis_idx;
    hypotheses.push(if axis_fixed {
        hyp("axis-fixed", true, "the mapping fixes the attachment site")
    } else {
        hyp(
            "axis-fixed",
            false,
            format!("the mapping moves the attachment site {axis_site}"),
        )
    });

    hypotheses.push(identity_outside_hypothesis(lat, m, &set));

    let mut external = Vec::new();
    for &i in &idxs {
        let off_loop = lat
            .adjacency_row(i)
            .iter()
            .filter(|(j, _)| !set.contains(j))
            .count();
        let allowed = if i == axis_idx { 1 } else { 0 };
        if off_loop > allowed {
            external.push(lat.id_at(i).to_string());
        }
    }
    hypotheses.push(if external.is_empty() {
        hyp(
            "single-external-link",
            true,
            "only the attachment site couples out of the loop, at most once",
        )
    } else {
        hyp(
            "single-external-link",
            false,
            format!("sites [{}] have extra external couplings", external.join(", ")),
        )
    });

    hypotheses.push(if m.is_involution() {
        hyp("involution", true, "applying the mapping twice is the identity")
    } else {
        hyp("involution", false, "the mapping is not an involution")
    });

    hypotheses.push(domain_hypothesis(lat, m, loop_sites, tol)?);

    if !all_ok(&hypotheses) {
        return Ok(not_applicable(ID_LOOP_REFLECT, hypotheses));
    }

    let comm = commutator_norm(lat, m);
    let mut witnesses = vec![Witness {
        label: "commutator norm".into(),
        state_index: None,
        value: comm,
    }];

    let spectrum = eigenstates(lat, tol)?;
    let adapted = match symmetry_adapt(lat, m, &spectrum, tol) {
        AdaptOutcome::Adapted(sp) => sp,
        AdaptOutcome::NonCommuting { commutator_norm: c } => {
            return Ok(TheoremReport {
                id: ID_LOOP_REFLECT,
                verdict: Verdict::Fails,
                hypotheses,
                witnesses,
                max_residual: c,
                constants: Vec::new(),
            });
        }
        AdaptOutcome::NonInvolutive => {
            return Err(TheoremError::Invalid("mapping is not an involution".into()));
        }
    };

    let mut max_residual = 0.0f64;
    for state in &adapted.states {
        let a = &state.amplitudes;
        let even = idxs
            .iter()
            .map(|&i| (a[m.image_index(i)] - a[i]).norm())
            .fold(0.0, f64::max);
        let odd = idxs
            .iter()
            .map(|&i| (a[m.image_index(i)] + a[i]).norm())
            .fold(0.0, f64::max);
        let dev = even.min(odd);
        witnesses.push(Witness {
            label: "parity deviation on loop".into(),
            state_index: Some(state.index),
            value: dev,
        });
        max_residual = max_residual.max(dev);
    }

    let verdict = if comm <= tol.comm && max_residual <= tol.theorem {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(TheoremReport {
        id: ID_LOOP_REFLECT,
        verdict,
        hypotheses,
        witnesses,
        max_residual,
        constants: Vec::new(),
    })
}

/// Checks the amplitude relations on a loop that is locally symmetric under
/// a cyclic shift and carries a single external coupling from `attach_site`
/// (on the loop) to `external_site` (off it).
///
/// For a real Hamiltonian, every eigenstate whose amplitude on the external
/// site is nonvanishing satisfies `a_{T^{-k}(A)} = a_{T^{k}(A)}` for
/// `k = 1..k_max` (default `len/(2*shift)`), and every eigenstate satisfies
/// `conj(a_{T(A)}) a_B = a_{T^{-1}(A)} conj(a_B)`.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_translation(
    lat: &Lattice,
    m: &SiteMapping,
    loop_sites: &[SiteId],
    attach_site: SiteId,
    external_site: SiteId,
    shift: usize,
    k_max: Option<usize>,
    tol: &Tolerances,
) -> Result<TheoremReport, TheoremError> {
    if loop_sites.len() < 3 {
        return Err(TheoremError::Invalid("loop needs at least three sites".into()));
    }
    let idxs = resolve(lat, loop_sites)?;
    let len = idxs.len();
    if shift == 0 || shift >= len {
        return Err(TheoremError::Invalid(format!(
            "shift must lie in 1..{len}, got {shift}"
        )));
    }
    let attach_idx = lat.index_of(attach_site)?;
    let external_idx = lat.index_of(external_site)?;
    if !idxs.contains(&attach_idx) {
        return Err(TheoremError::Invalid(format!(
            "attachment site {attach_site} is not on the loop"
        )));
    }
    if idxs.contains(&external_idx) {
        return Err(TheoremError::Invalid(format!(
            "external site {external_site} lies on the loop"
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    if lat.entry(attach_idx, external_idx) == zero {
        return Err(TheoremError::Invalid(format!(
            "sites {attach_site} and {external_site} are not coupled"
        )));
    }
    let set: BTreeSet<usize> = idxs.iter().copied().collect();

    let mut hypotheses = Vec::new();
    hypotheses.push(if lat.is_real() {
        hyp("real-hamiltonian", true, "all potentials and hoppings are real")
    } else {
        hyp("real-hamiltonian", false, "the Hamiltonian has complex entries")
    });
    hypotheses.push(cycle_hypothesis(lat, &idxs));

    let forward = (0..len).all(|i| m.image_index(idxs[i]) == idxs[(i + shift) % len]);
    let backward = (0..len).all(|i| m.image_index(idxs[i]) == idxs[(i + len - shift) % len]);
    hypotheses.push(if forward || backward {
        hyp("cyclic-shift", true, format!("the mapping shifts the loop by {shift} sites"))
    } else {
        hyp(
            "cyclic-shift",
            false,
            format!("the mapping is not a cyclic shift of the loop by {shift} sites"),
        )
    });

    hypotheses.push(identity_outside_hypothesis(lat, m, &set));

    let mut external = Vec::new();
    for &i in &idxs {
        let off_loop: Vec<usize> = lat
            .adjacency_row(i)
            .iter()
            .map(|&(j, _)| j)
            .filter(|j| !set.contains(j))
            .collect();
        let ok = if i == attach_idx { off_loop == [external_idx] } else { off_loop.is_empty() };
        if !ok {
            external.push(lat.id_at(i).to_string());
        }
    }
    hypotheses.push(if external.is_empty() {
        hyp(
            "single-external-link",
            true,
            "the loop couples out only through the attachment pair",
        )
    } else {
        hyp(
            "single-external-link",
            false,
            format!("sites [{}] break the single attachment", external.join(", ")),
        )
    });

    hypotheses.push(domain_hypothesis(lat, m, loop_sites, tol)?);

    if !all_ok(&hypotheses) {
        return Ok(not_applicable(ID_LOOP_TRANSLATE, hypotheses));
    }

    let comm = commutator_norm(lat, m);
    let mut witnesses = vec![Witness {
        label: "commutator norm".into(),
        state_index: None,
        value: comm,
    }];

    let spectrum = eigenstates(lat, tol)?;
    let k_limit = k_max.unwrap_or(len / (2 * shift));
    let img_attach = m.image_index(attach_idx);
    let pre_attach = m.preimage_index(attach_idx);

    let mut max_residual = 0.0f64;
    for state in &spectrum.states {
        let a = &state.amplitudes;
        let a_ext = a[external_idx];

        if a_ext.norm() > tol.amp_zero {
            for k in 1..=k_limit {
                let fwd = m.apply_index(attach_idx, k as i64);
                let bwd = m.apply_index(attach_idx, -(k as i64));
                let dev = (a[bwd] - a[fwd]).norm();
                witnesses.push(Witness {
                    label: format!("amplitude mismatch at step {k}"),
                    state_index: Some(state.index),
                    value: dev,
                });
                max_residual = max_residual.max(dev);
            }
        }

        let defect = (a[img_attach].conj() * a_ext - a[pre_attach] * a_ext.conj()).norm();
        witnesses.push(Witness {
            label: "attachment identity defect".into(),
            state_index: Some(state.index),
            value: defect,
        });
        max_residual = max_residual.max(defect);
    }

    let verdict = if max_residual <= tol.theorem { Verdict::Holds } else { Verdict::Fails };
    Ok(TheoremReport {
        id: ID_LOOP_TRANSLATE,
        verdict,
        hypotheses,
        witnesses,
        max_residual,
        constants: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, HopSpec, SiteSpec};
    use crate::mapping::{build_mapping, MappingKind};

    fn z(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sid(n: u32) -> SiteId {
        SiteId(n)
    }

    fn chain_sites(vs: &[f64]) -> Vec<SiteSpec> {
        vs.iter()
            .enumerate()
            .map(|(i, &v)| SiteSpec { id: i as u32 + 1, x: i as i64, y: 0, v: z(v) })
            .collect()
    }

    fn chain_hops(n: u32) -> Vec<HopSpec> {
        (1..n).map(|a| HopSpec { a, b: a + 1, h: z(1.0) }).collect()
    }

    fn six_chain() -> (Lattice, SiteMapping) {
        let lat = build_lattice(
            "six-chain",
            true,
            &chain_sites(&[1.0, 0.5, 0.5, 0.5, 0.5, 2.0]),
            &chain_hops(6),
        )
        .unwrap();
        let pairs: Vec<(SiteId, SiteId)> = (1..=6).map(|i| (sid(i), sid(7 - i))).collect();
        let m = build_mapping(&lat, MappingKind::Permutation(pairs), &[], false).unwrap();
        (lat, m)
    }

    /// Six-chain with a two-site stub hanging off site 3, which then has
    /// three neighbors and no mirror image of its stub.
    fn six_chain_with_stub() -> (Lattice, SiteMapping) {
        let mut sites = chain_sites(&[1.0, 0.5, 0.5, 0.5, 0.5, 2.0]);
        sites.push(SiteSpec { id: 7, x: 2, y: 1, v: z(0.3) });
        sites.push(SiteSpec { id: 8, x: 2, y: 2, v: z(0.4) });
        let mut hops = chain_hops(6);
        hops.push(HopSpec { a: 3, b: 7, h: z(1.0) });
        hops.push(HopSpec { a: 7, b: 8, h: z(1.0) });
        let lat = build_lattice("six-chain-stub", true, &sites, &hops).unwrap();
        let pairs: Vec<(SiteId, SiteId)> = (1..=6).map(|i| (sid(i), sid(7 - i))).collect();
        let m = build_mapping(&lat, MappingKind::Permutation(pairs), &[], false).unwrap();
        (lat, m)
    }

    /// Seven-by-three grid whose interior five columns are mirror symmetric
    /// about x = 3 while the two boundary columns are not.
    fn grid7x3(perturb: bool) -> (Lattice, SiteMapping) {
        let mut sites = Vec::new();
        let mut id = 1u32;
        let mut ids = std::collections::HashMap::new();
        for x in 0..7i64 {
            for y in 0..3i64 {
                let v = match x {
                    0 => 1.1 + 0.2 * y as f64,
                    6 => -0.7 - 0.13 * y as f64,
                    _ => {
                        let base = match x.min(6 - x) {
                            1 => 0.2,
                            2 => -0.3,
                            _ => 0.5,
                        };
                        base + 0.07 * y as f64
                    }
                };
                let v = if perturb && x == 2 && y == 1 { v + 1e-3 } else { v };
                sites.push(SiteSpec { id, x, y, v: z(v) });
                ids.insert((x, y), id);
                id += 1;
            }
        }
        let mut hops = Vec::new();
        for x in 0..7i64 {
            for y in 0..3i64 {
                if x + 1 < 7 {
                    hops.push(HopSpec { a: ids[&(x, y)], b: ids[&(x + 1, y)], h: z(1.0) });
                }
                if y + 1 < 3 {
                    hops.push(HopSpec { a: ids[&(x, y)], b: ids[&(x, y + 1)], h: z(1.0) });
                }
            }
        }
        let lat = build_lattice("grid7x3", true, &sites, &hops).unwrap();
        let m = build_mapping(
            &lat,
            MappingKind::Reflection(crate::mapping::Axis::Vertical { x2: 6 }),
            &[],
            true,
        )
        .unwrap();
        (lat, m)
    }

    /// Ring of four sites with two three-site tails of equal build, hung at
    /// adjacent ring sites; the mapping swaps the tails and those two sites.
    fn duplicate_tails() -> (Lattice, SiteMapping) {
        let sites = vec![
            SiteSpec { id: 1, x: 0, y: 0, v: z(0.0) },
            SiteSpec { id: 2, x: 1, y: 0, v: z(0.0) },
            SiteSpec { id: 3, x: 1, y: 1, v: z(0.35) },
            SiteSpec { id: 4, x: 0, y: 1, v: z(-0.45) },
            SiteSpec { id: 5, x: -3, y: 0, v: z(0.2) },
            SiteSpec { id: 6, x: -2, y: 0, v: z(-0.1) },
            SiteSpec { id: 7, x: -1, y: 0, v: z(0.5) },
            SiteSpec { id: 8, x: 4, y: 0, v: z(0.2) },
            SiteSpec { id: 9, x: 3, y: 0, v: z(-0.1) },
            SiteSpec { id: 10, x: 2, y: 0, v: z(0.5) },
        ];
        let hops = vec![
            HopSpec { a: 1, b: 2, h: z(1.0) },
            HopSpec { a: 2, b: 3, h: z(1.0) },
            HopSpec { a: 3, b: 4, h: z(1.0) },
            HopSpec { a: 4, b: 1, h: z(1.0) },
            HopSpec { a: 5, b: 6, h: z(0.7) },
            HopSpec { a: 6, b: 7, h: z(0.9) },
            HopSpec { a: 7, b: 1, h: z(1.2) },
            HopSpec { a: 8, b: 9, h: z(0.7) },
            HopSpec { a: 9, b: 10, h: z(0.9) },
            HopSpec { a: 10, b: 2, h: z(1.2) },
        ];
        let lat = build_lattice("duplicate-tails", false, &sites, &hops).unwrap();
        let pairs = vec![
            (sid(1), sid(2)),
            (sid(2), sid(1)),
            (sid(5), sid(8)),
            (sid(8), sid(5)),
            (sid(6), sid(9)),
            (sid(9), sid(6)),
            (sid(7), sid(10)),
            (sid(10), sid(7)),
        ];
        let m = build_mapping(&lat, MappingKind::Permutation(pairs), &[], false).unwrap();
        (lat, m)
    }

    /// Five-site loop reflected about site 1, with an optional two-site
    /// exterior hung at site 1. `bridge_hop` is the coupling 2-3 (and its
    /// mirror 4-5 stays at 1.1, so values other than 1.1 break the symmetry).
    fn reflection_loop(exterior: bool, bridge_hop: f64) -> (Lattice, SiteMapping) {
        let mut sites = vec![
            SiteSpec { id: 1, x: 0, y: 0, v: z(0.3) },
            SiteSpec { id: 2, x: 1, y: 0, v: z(-0.2) },
            SiteSpec { id: 3, x: 2, y: 1, v: z(0.4) },
            SiteSpec { id: 4, x: 1, y: 2, v: z(0.4) },
            SiteSpec { id: 5, x: 0, y: 1, v: z(-0.2) },
        ];
        let mut hops = vec![
            HopSpec { a: 1, b: 2, h: z(0.8) },
            HopSpec { a: 2, b: 3, h: z(bridge_hop) },
            HopSpec { a: 3, b: 4, h: z(0.9) },
            HopSpec { a: 4, b: 5, h: z(1.1) },
            HopSpec { a: 5, b: 1, h: z(0.8) },
        ];
        if exterior {
            sites.push(SiteSpec { id: 6, x: 5, y: 5, v: z(0.25) });
            sites.push(SiteSpec { id: 7, x: 6, y: 5, v: z(-0.55) });
            hops.push(HopSpec { a: 1, b: 6, h: z(0.7) });
            hops.push(HopSpec { a: 6, b: 7, h: z(1.3) });
        }
        let lat = build_lattice("reflection-loop", false, &sites, &hops).unwrap();
        let pairs = vec![(sid(2), sid(5)), (sid(5), sid(2)), (sid(3), sid(4)), (sid(4), sid(3))];
        let m = build_mapping(&lat, MappingKind::Permutation(pairs), &[], false).unwrap();
        (lat, m)
    }

    /// Fifteen-site loop with potentials repeating every three sites, an
    /// external pair hung at site 1, and the mapping shifting the loop by 3.
    fn translation_loop(break_period: bool, complex_exterior: bool) -> (Lattice, SiteMapping) {
        let pattern = [0.0, 0.6, -0.4];
        let mut sites: Vec<SiteSpec> = (0..15)
            .map(|i| {
                let mut v = z(pattern[i % 3]);
                if break_period && i == 1 {
                    v = z(0.55);
                }
                SiteSpec { id: i as u32 + 1, x: i as i64, y: 0, v }
            })
            .collect();
        sites.push(SiteSpec { id: 16, x: 0, y: 1, v: z(0.9) });
        let v17 = if complex_exterior { Complex64::new(-0.3, 0.2) } else { z(-0.3) };
        sites.push(SiteSpec { id: 17, x: 0, y: 2, v: v17 });
        let mut hops: Vec<HopSpec> =
            (1..15).map(|a| HopSpec { a, b: a + 1, h: z(1.0) }).collect();
        hops.push(HopSpec { a: 15, b: 1, h: z(1.0) });
        hops.push(HopSpec { a: 1, b: 16, h: z(0.8) });
        hops.push(HopSpec { a: 16, b: 17, h: z(1.1) });
        let lat = build_lattice("translation-loop", false, &sites, &hops).unwrap();
        let pairs: Vec<(SiteId, SiteId)> =
            (0..15u32).map(|i| (sid(i + 1), sid((i + 3) % 15 + 1))).collect();
        let m = build_mapping(&lat, MappingKind::Permutation(pairs), &[], false).unwrap();
        (lat, m)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn six_chain_interior_currents_are_constant_for_every_eigenstate() {
        let (lat, m) = six_chain();
        let domain = [sid(2), sid(3), sid(4), sid(5)];
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        for state in &spectrum.states {
            let report =
                check_domainwise_constancy(&lat, &m, &domain, &state.amplitudes, &tol()).unwrap();
            assert_eq!(report.verdict, Verdict::Holds, "state {}", state.index);
            assert!(report.max_residual <= 1e-10);
            let q = crate::currents::nonlocal_current(&lat, &m, &state.amplitudes, sid(2), sid(3))
                .unwrap();
            assert!(q.norm() > 1e-3, "interior current should be plainly nonzero");
        }
    }

    #[test]
    fn three_connected_site_renders_the_chain_theorem_not_applicable() {
        let (lat, m) = six_chain_with_stub();
        let domain = [sid(2), sid(3), sid(4), sid(5)];
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        let report =
            check_domainwise_constancy(&lat, &m, &domain, &spectrum.states[0].amplitudes, &tol())
                .unwrap();
        assert_eq!(report.verdict, Verdict::NotApplicable);
        let degree = report
            .hypotheses
            .iter()
            .find(|h| h.name == "at-most-two-neighbors")
            .unwrap();
        assert!(!degree.satisfied);
        assert!(degree.detail.contains('3'));
        assert!(report.witnesses.is_empty());
    }

    #[test]
    fn ring_domains_compare_the_wrap_around_pair() {
        let sites: Vec<SiteSpec> = [(1, 0, 0), (2, 1, 0), (3, 1, 1), (4, 0, 1)]
            .iter()
            .map(|&(id, x, y)| SiteSpec { id, x, y, v: z(0.0) })
            .collect();
        let hops = vec![
            HopSpec { a: 1, b: 2, h: z(1.0) },
            HopSpec { a: 2, b: 3, h: z(1.0) },
            HopSpec { a: 3, b: 4, h: z(1.0) },
            HopSpec { a: 4, b: 1, h: z(1.0) },
        ];
        let lat = build_lattice("four-ring", true, &sites, &hops).unwrap();
        let pairs = vec![(sid(1), sid(2)), (sid(2), sid(3)), (sid(3), sid(4)), (sid(4), sid(1))];
        let m = build_mapping(&lat, MappingKind::Permutation(pairs), &[], false).unwrap();
        let domain = [sid(1), sid(2), sid(3), sid(4)];
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        for state in &spectrum.states {
            let report =
                check_domainwise_constancy(&lat, &m, &domain, &state.amplitudes, &tol()).unwrap();
            assert_eq!(report.verdict, Verdict::Holds, "state {}", state.index);
            // one magnitude witness plus three deviations: the wrap pair is in
            assert_eq!(report.witnesses.len(), 4);
        }
    }

    #[test]
    fn summed_currents_match_across_interior_cuts_with_full_rows() {
        let (lat, m) = grid7x3(false);
        let region = Region::new(&lat, 1, 5, None).unwrap();
        let spectrum = eigenstates(&lat, &tol()).unwrap();

        // Dropping the boundary rows discards real flux, so the equality
        // honestly fails while the hypotheses still hold.
        let mut worst_interior = 0.0f64;
        for state in &spectrum.states {
            let psi = &state.amplitudes;
            let full = check_summed_constancy(&lat, &m, &region, psi, SumRange::AllRows, &tol())
                .unwrap();
            assert_eq!(full.verdict, Verdict::Holds, "state {}", state.index);
            assert!(full.max_residual <= 1e-12);

            let interior =
                check_summed_constancy(&lat, &m, &region, psi, SumRange::InteriorRows, &tol())
                    .unwrap();
            assert_eq!(interior.verdict, Verdict::Fails, "state {}", state.index);
            assert!(all_ok(&interior.hypotheses));
            worst_interior = worst_interior.max(interior.max_residual);
        }
        assert!(worst_interior > 1e-3);
    }

    #[test]
    fn perturbed_region_is_reported_not_applicable() {
        let (lat, m) = grid7x3(true);
        let region = Region::new(&lat, 1, 5, None).unwrap();
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        let report = check_summed_constancy(
            &lat,
            &m,
            &region,
            &spectrum.states[0].amplitudes,
            SumRange::AllRows,
            &tol(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::NotApplicable);
        let sym = report.hypotheses.iter().find(|h| h.name == "local-symmetry").unwrap();
        assert!(!sym.satisfied);
    }

    #[test]
    fn single_column_region_holds_vacuously() {
        let (lat, m) = grid7x3(false);
        let region = Region::new(&lat, 3, 3, None).unwrap();
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        let report = check_summed_constancy(
            &lat,
            &m,
            &region,
            &spectrum.states[0].amplitudes,
            SumRange::AllRows,
            &tol(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert!(report.witnesses.is_empty());
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn duplicate_tails_give_one_similarity_constant_per_state() {
        let (lat, m) = duplicate_tails();
        let chain = [sid(5), sid(6), sid(7)];
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        let report = open_chain_similarity(&lat, &m, &chain, &spectrum, &tol()).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert_eq!(report.constants.len(), 10);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &report.constants {
            assert!(c.defined, "state {}", c.state_index);
            assert!(c.spread <= 1e-9);
            assert!(c.value.im.abs() <= 1e-9, "real problem gives a real constant");
            lo = lo.min(c.value.re);
            hi = hi.max(c.value.re);
        }
        assert!(hi - lo > 1.0, "constants vary across states: [{lo}, {hi}]");
    }

    #[test]
    fn isolated_zero_amplitudes_are_bridged_by_the_chain_constant() {
        let lat = build_lattice(
            "five-chain",
            true,
            &chain_sites(&[0.0; 5]),
            &chain_hops(5),
        )
        .unwrap();
        let pairs: Vec<(SiteId, SiteId)> = (1..=5).map(|i| (sid(i), sid(6 - i))).collect();
        let m = build_mapping(&lat, MappingKind::Permutation(pairs), &[], false).unwrap();
        let spectrum = eigenstates(&lat, &tol()).unwrap();

        // The middle state has zero amplitude on sites 2 and 4.
        let mid = &spectrum.states[2];
        assert!(mid.energy.abs() < 1e-12);
        assert!(mid.amplitudes[1].norm() < 1e-12);
        assert!(mid.amplitudes[3].norm() < 1e-12);

        let chain = [sid(1), sid(2), sid(3), sid(4), sid(5)];
        let report = open_chain_similarity(&lat, &m, &chain, &spectrum, &tol()).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        let c = &report.constants[2];
        assert!(c.defined);
        assert!((c.value - z(1.0)).norm() <= 1e-9);
        assert!(c.spread <= 1e-10);
    }

    #[test]
    fn disconnected_component_states_are_exempt_from_similarity() {
        let mut sites = chain_sites(&[0.0, 0.0, 0.0]);
        sites.push(SiteSpec { id: 4, x: 10, y: 0, v: z(0.0) });
        sites.push(SiteSpec { id: 5, x: 11, y: 0, v: z(0.0) });
        let mut hops = chain_hops(3);
        hops.push(HopSpec { a: 4, b: 5, h: z(0.5) });
        let lat = build_lattice("split", false, &sites, &hops).unwrap();
        let m = SiteMapping::identity(&lat);
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        let report =
            open_chain_similarity(&lat, &m, &[sid(1), sid(2), sid(3)], &spectrum, &tol()).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        // energies sort to -sqrt(2), -0.5, 0, 0.5, sqrt(2): the pair states
        // live on sites 4 and 5 only and determine no constant
        let defined: Vec<bool> = report.constants.iter().map(|c| c.defined).collect();
        assert_eq!(defined, [true, false, true, false, true]);
        for c in report.constants.iter().filter(|c| c.defined) {
            assert!((c.value - z(1.0)).norm() <= 1e-9);
        }
    }

    #[test]
    fn reflection_loop_adapts_to_a_single_parity_sign() {
        let (lat, m) = reflection_loop(true, 1.1);
        let loop_sites = [sid(1), sid(2), sid(3), sid(4), sid(5)];
        let report = closed_loop_reflection(&lat, &m, &loop_sites, sid(1), &tol()).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert!(report.max_residual <= 1e-9);
        let comm = report.witness("commutator norm").unwrap();
        assert!(comm.value <= 1e-10, "exterior does not break commutation: {}", comm.value);
    }

    #[test]
    fn perturbed_loop_hopping_is_not_applicable_for_reflection() {
        let (lat, m) = reflection_loop(true, 1.15);
        let loop_sites = [sid(1), sid(2), sid(3), sid(4), sid(5)];
        let report = closed_loop_reflection(&lat, &m, &loop_sites, sid(1), &tol()).unwrap();
        assert_eq!(report.verdict, Verdict::NotApplicable);
        let sym = report.hypotheses.iter().find(|h| h.name == "local-symmetry").unwrap();
        assert!(!sym.satisfied);
    }

    #[test]
    fn isolated_reflection_loop_is_accepted() {
        let (lat, m) = reflection_loop(false, 1.1);
        let loop_sites = [sid(1), sid(2), sid(3), sid(4), sid(5)];
        let report = closed_loop_reflection(&lat, &m, &loop_sites, sid(1), &tol()).unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
    }

    #[test]
    fn translation_loop_relates_amplitudes_across_the_attachment() {
        let (lat, m) = translation_loop(false, false);
        let loop_sites: Vec<SiteId> = (1..=15).map(sid).collect();
        let report =
            closed_loop_translation(&lat, &m, &loop_sites, sid(1), sid(16), 3, None, &tol())
                .unwrap();
        assert_eq!(report.verdict, Verdict::Holds);
        assert!(report.max_residual <= 1e-9);

        let comm = report.witness("commutator norm").unwrap();
        assert!(comm.value > 1e-6, "the attachment spoils global invariance");

        // 11 of the 17 states reach the external site; each gets checked at
        // steps 1 and 2 (k_max defaults to 15 / 6 = 2)
        let covered: BTreeSet<usize> = report
            .witnesses
            .iter()
            .filter(|w| w.label.starts_with("amplitude mismatch"))
            .filter_map(|w| w.state_index)
            .collect();
        assert_eq!(covered.len(), 11);
        let identities = report
            .witnesses
            .iter()
            .filter(|w| w.label == "attachment identity defect")
            .count();
        assert_eq!(identities, 17);
    }

    #[test]
    fn broken_periodicity_is_not_applicable_for_translation() {
        let (lat, m) = translation_loop(true, false);
        let loop_sites: Vec<SiteId> = (1..=15).map(sid).collect();
        let report =
            closed_loop_translation(&lat, &m, &loop_sites, sid(1), sid(16), 3, None, &tol())
                .unwrap();
        assert_eq!(report.verdict, Verdict::NotApplicable);
        let sym = report.hypotheses.iter().find(|h| h.name == "local-symmetry").unwrap();
        assert!(!sym.satisfied);
    }

    #[test]
    fn complex_entries_are_not_applicable_for_translation() {
        let (lat, m) = translation_loop(false, true);
        let loop_sites: Vec<SiteId> = (1..=15).map(sid).collect();
        let report =
            closed_loop_translation(&lat, &m, &loop_sites, sid(1), sid(16), 3, None, &tol())
                .unwrap();
        assert_eq!(report.verdict, Verdict::NotApplicable);
        let real = report.hypotheses.iter().find(|h| h.name == "real-hamiltonian").unwrap();
        assert!(!real.satisfied);
    }

    #[test]
    fn malformed_inputs_are_hard_errors() {
        let (lat, m) = six_chain();
        let spectrum = eigenstates(&lat, &tol()).unwrap();
        let psi = &spectrum.states[0].amplitudes;

        let unknown = check_domainwise_constancy(&lat, &m, &[sid(99)], psi, &tol());
        assert!(matches!(unknown, Err(TheoremError::Lattice(_))));

        let twice = check_domainwise_constancy(&lat, &m, &[sid(2), sid(2)], psi, &tol());
        assert!(matches!(twice, Err(TheoremError::Invalid(_))));

        let short = check_domainwise_constancy(&lat, &m, &[sid(2)], &psi[..3], &tol());
        assert!(matches!(short, Err(TheoremError::Currents(_))));

        let tiny = open_chain_similarity(&lat, &m, &[sid(1)], &spectrum, &tol());
        assert!(matches!(tiny, Err(TheoremError::Invalid(_))));

        let (loop_lat, loop_m) = translation_loop(false, false);
        let loop_sites: Vec<SiteId> = (1..=15).map(sid).collect();
        let loop_spectrum_err = closed_loop_translation(
            &loop_lat,
            &loop_m,
            &loop_sites,
            sid(16),
            sid(17),
            3,
            None,
            &tol(),
        );
        assert!(matches!(loop_spectrum_err, Err(TheoremError::Invalid(_))));
        let zero_shift = closed_loop_translation(
            &loop_lat,
            &loop_m,
            &loop_sites,
            sid(1),
            sid(16),
            0,
            None,
            &tol(),
        );
        assert!(matches!(zero_shift, Err(TheoremError::Invalid(_))));
    }
}
