//! Eigenproblem of the lattice Hamiltonian and symmetry adaptation of
//! degenerate eigenspaces.
//!
//! The solver is a cyclic Jacobi iteration, with a real-symmetric fast path
//! that keeps eigenvector imaginary parts exactly zero and a complex
//! Hermitian path whose rotations avoid trigonometry (the phase factor is
//! taken as `b/|b|`), so real input stays real there too.

use crate::lattice::{hamiltonian_matrix, Lattice, SiteId};
use crate::mapping::SiteMapping;
use crate::Tolerances;
use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("site {site} has non-real potential (im = {im:e}); the eigensolver requires a Hermitian Hamiltonian")]
    NonHermitian { site: SiteId, im: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
}

/// One eigenpair. `amplitudes` follow the lattice site order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenState {
    /// Position in the energy-sorted spectrum.
    pub index: usize,
    pub energy: f64,
    pub amplitudes: Vec<Complex64>,
    /// Set by [`symmetry_adapt`]: `+1` even, `-1` odd under the mapping.
    pub parity: Option<i8>,
}

impl EigenState {
    pub fn amplitude(&self, site_index: usize) -> Complex64 {
        self.amplitudes[site_index]
    }
}

/// Energy-sorted orthonormal eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub states: Vec<EigenState>,
    real_gauge: bool,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, k: usize) -> &EigenState {
        &self.states[k]
    }

    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.energy).collect()
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.states.iter().map(|s| s.energy.abs()).fold(0.0, f64::max)
    }

    /// Whether every amplitude has an exactly zero imaginary part.
    pub fn real_gauge(&self) -> bool {
        self.real_gauge
    }

    /// Groups of state indices with consecutive energies closer than the
    /// degeneracy threshold. Chaining is transitive: a run of nearly equal
    /// energies forms one group.
    pub fn degenerate_groups(&self, tol: &Tolerances) -> Vec<Vec<usize>> {
        let gap = tol.degeneracy(self.max_abs_energy());
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for k in 0..self.states.len() {
            let start_new = match groups.last().and_then(|g| g.last()) {
                Some(&prev) => self.states[k].energy - self.states[prev].energy > gap,
                None => true,
            };
            if start_new {
                groups.push(vec![k]);
            } else {
                groups.last_mut().unwrap().push(k);
            }
        }
        groups
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.states.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dot: Complex64 = self.states[i]
                    .amplitudes
                    .iter()
                    .zip(&self.states[j].amplitudes)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest entrywise residual `|H a - E a|` over all states.
    pub fn eigen_residual(&self, lat: &Lattice) -> f64 {
        let mut worst = 0.0f64;
        for s in &self.states {
            let ha = lat.apply(&s.amplitudes);
            for (i, v) in ha.iter().enumerate() {
                worst = worst.max((v - s.amplitudes[i] * s.energy).norm());
            }
        }
        worst
    }
}

const MAX_SWEEPS: usize = 64;

fn off_norm_c(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[[p, q]].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn off_norm_r(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[[p, q]] * a[[p, q]];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi for a complex Hermitian matrix. Returns the unsorted
/// diagonal and the accumulated unitary whose columns are eigenvectors.
fn jacobi_complex(
    mut a: Array2<Complex64>,
) -> Result<(Vec<f64>, Array2<Complex64>), SpectralError> {
    let n = a.nrows();
    let mut v = Array2::<Complex64>::eye(n);
    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let stop = (scale * f64::EPSILON * n as f64).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        if off_norm_c(&a) <= stop {
            let diag = (0..n).map(|i| a[[i, i]].re).collect();
            return Ok((diag, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[[p, q]];
                let babs = b.norm();
                if babs <= f64::MIN_POSITIVE {
                    continue;
                }
                let unit = b / babs;
                let tau = (a[[q, q]].re - a[[p, p]].re) / (2.0 * babs);
                let sgn = if tau >= 0.0 { 1.0 } else { -1.0 };
                let t = -sgn / (tau.abs() + (1.0 + tau * tau).sqrt());
                let ct = 1.0 / (1.0 + t * t).sqrt();
                let st = t * ct;
                // Columns: A <- A U with U = [[ct, -st*u], [st*conj(u), ct]].
                for k in 0..n {
                    let ap = a[[k, p]];
                    let aq = a[[k, q]];
                    a[[k, p]] = ap * ct + aq * (st * unit.conj());
                    a[[k, q]] = ap * (-st * unit) + aq * ct;
                }
                // Rows: A <- U^H A.
                for k in 0..n {
                    let ap = a[[p, k]];
                    let aq = a[[q, k]];
                    a[[p, k]] = ap * ct + aq * (st * unit);
                    a[[q, k]] = ap * (-st * unit.conj()) + aq * ct;
                }
                a[[p, q]] = Complex64::new(0.0, 0.0);
                a[[q, p]] = Complex64::new(0.0, 0.0);
                a[[p, p]] = Complex64::new(a[[p, p]].re, 0.0);
                a[[q, q]] = Complex64::new(a[[q, q]].re, 0.0);
                for k in 0..n {
                    let vp = v[[k, p]];
                    let vq = v[[k, q]];
                    v[[k, p]] = vp * ct + vq * (st * unit.conj());
                    v[[k, q]] = vp * (-st * unit) + vq * ct;
                }
            }
        }
    }
    let off = off_norm_c(&a);
    if off <= stop {
        let diag = (0..n).map(|i| a[[i, i]].re).collect();
        Ok((diag, v))
    } else {
        Err(SpectralError::NoConvergence { sweeps: MAX_SWEEPS, off })
    }
}

/// Cyclic Jacobi for a real symmetric matrix.
fn jacobi_real(mut a: Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), SpectralError> {
    let n = a.nrows();
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = (scale * f64::EPSILON * n as f64).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        if off_norm_r(&a) <= stop {
            let diag = (0..n).map(|i| a[[i, i]]).collect();
            return Ok((diag, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[[p, q]];
                if b.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let tau = (a[[q, q]] - a[[p, p]]) / (2.0 * b);
                let sgn = if tau >= 0.0 { 1.0 } else { -1.0 };
                let t = -sgn / (tau.abs() + (1.0 + tau * tau).sqrt());
                let ct = 1.0 / (1.0 + t * t).sqrt();
                let st = t * ct;
                for k in 0..n {
                    let ap = a[[k, p]];
                    let aq = a[[k, q]];
                    a[[k, p]] = ap * ct + aq * st;
                    a[[k, q]] = -ap * st + aq * ct;
                }
                for k in 0..n {
                    let ap = a[[p, k]];
                    let aq = a[[q, k]];
                    a[[p, k]] = ap * ct + aq * st;
                    a[[q, k]] = -ap * st + aq * ct;
                }
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..n {
                    let vp = v[[k, p]];
                    let vq = v[[k, q]];
                    v[[k, p]] = vp * ct + vq * st;
                    v[[k, q]] = -vp * st + vq * ct;
                }
            }
        }
    }
    let off = off_norm_r(&a);
    if off <= stop {
        let diag = (0..n).map(|i| a[[i, i]]).collect();
        Ok((diag, v))
    } else {
        Err(SpectralError::NoConvergence { sweeps: MAX_SWEEPS, off })
    }
}

/// Normalizes and fixes the global phase so the first amplitude larger than
/// `1e-12` in magnitude is real positive. On real vectors this is a sign
/// flip and preserves exact realness.
fn canonicalize(amplitudes: &mut [Complex64]) {
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in amplitudes.iter_mut() {
            *z /= norm;
        }
    }
    if let Some(lead) = amplitudes.iter().find(|z| z.norm() > 1e-12) {
        let mag = lead.norm();
        if (lead.im == 0.0 && lead.re > 0.0) || mag == 0.0 {
            return;
        }
        let phase = if lead.im == 0.0 {
            Complex64::new(-1.0, 0.0)
        } else {
            lead.conj() / mag
        };
        for z in amplitudes.iter_mut() {
            *z *= phase;
        }
    }
}

/// Solves the eigenproblem of the lattice Hamiltonian.
///
/// The Hamiltonian must be Hermitian, i.e. every on-site potential real to
/// within `tol.herm` (hoppings are paired conjugately by construction and
/// may be complex). States come back energy-sorted, orthonormal, and
/// phase-canonicalized; with an entirely real Hamiltonian the eigenvectors
/// are exactly real.
pub fn eigenstates(lat: &Lattice, tol: &Tolerances) -> Result<Spectrum, SpectralError> {
    for site in lat.sites() {
        if site.v.im.abs() > tol.herm {
            return Err(SpectralError::NonHermitian { site: site.id, im: site.v.im });
        }
    }
    let n = lat.n_sites();
    let h = hamiltonian_matrix(lat);
    let (diag, vecs, real_gauge) = if lat.is_real() {
        let hr = Array2::from_shape_fn((n, n), |(i, j)| h[[i, j]].re);
        let (d, vr) = jacobi_real(hr)?;
        let vc = Array2::from_shape_fn((n, n), |(i, j)| Complex64::new(vr[[i, j]], 0.0));
        (d, vc, true)
    } else {
        // Clamp the diagonal to its real part; deviations passed the gate above.
        let mut hc = h;
        for i in 0..n {
            hc[[i, i]] = Complex64::new(hc[[i, i]].re, 0.0);
        }
        let (d, vc) = jacobi_complex(hc)?;
        (d, vc, false)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let mut states = Vec::with_capacity(n);
    for (rank, &col) in order.iter().enumerate() {
        let mut amplitudes: Vec<Complex64> = (0..n).map(|i| vecs[[i, col]]).collect();
        canonicalize(&mut amplitudes);
        states.push(EigenState { index: rank, energy: diag[col], amplitudes, parity: None });
    }
    let real_gauge = real_gauge && states.iter().all(|s| s.amplitudes.iter().all(|z| z.im == 0.0));
    Ok(Spectrum { states, real_gauge })
}

/// Frobenius norm of `HP - PH`, where `P` permutes amplitudes by the
/// mapping. Both products are read off by index permutation, with no matrix
/// multiplication: `(HP)[i][j] = H[i][T(j)]` and `(PH)[i][j] = H[T^{-1}(i)][j]`.
pub fn commutator_norm(lat: &Lattice, m: &SiteMapping) -> f64 {
    let n = lat.n_sites();
    let h = hamiltonian_matrix(lat);
    let mut s = 0.0;
    for i in 0..n {
        let pre_i = m.preimage_index(i);
        for j in 0..n {
            let hp = h[[i, m.image_index(j)]];
            let ph = h[[pre_i, j]];
            s += (hp - ph).norm_sqr();
        }
    }
    s.sqrt()
}

/// Result of [`symmetry_adapt`].
#[derive(Debug, Clone, PartialEq)]
pub enum AdaptOutcome {
    /// Every state is now a parity eigenstate of the mapping; parities are
    /// recorded on the states, even (+1) ordered before odd (-1) within each
    /// degenerate group.
    Adapted(Spectrum),
    /// The mapping does not commute with the Hamiltonian; nothing to adapt.
    NonCommuting { commutator_norm: f64 },
    /// The mapping is not an involution; parity adaptation is undefined.
    NonInvolutive,
}

/// Amplitude permutation induced by the mapping: `(Pa)_i = a_{T^{-1}(i)}`.
fn permute(m: &SiteMapping, a: &[Complex64]) -> Vec<Complex64> {
    (0..a.len()).map(|i| a[m.preimage_index(i)]).collect()
}

/// Rotates each degenerate group of the spectrum into parity eigenstates of
/// an involutive mapping that commutes with the Hamiltonian.
///
/// Within a group the permutation restricts to a Hermitian involution, so a
/// small Jacobi diagonalization of its matrix elements splits the group into
/// even and odd states. Already-adapted spectra pass through unchanged.
pub fn symmetry_adapt(
    lat: &Lattice,
    m: &SiteMapping,
    spectrum: &Spectrum,
    tol: &Tolerances,
) -> AdaptOutcome {
    if !m.is_involution() {
        return AdaptOutcome::NonInvolutive;
    }
    let comm = commutator_norm(lat, m);
    if comm > tol.comm {
        return AdaptOutcome::NonCommuting { commutator_norm: comm };
    }
    let mut out = spectrum.clone();
    for group in spectrum.degenerate_groups(tol) {
        let g = group.len();
        let mut rotated: Vec<Vec<Complex64>> = Vec::with_capacity(g);
        let mut parities: Vec<i8> = Vec::with_capacity(g);
        if g == 1 {
            let a = &spectrum.states[group[0]].amplitudes;
            let pa = permute(m, a);
            let overlap: Complex64 = a.iter().zip(&pa).map(|(x, y)| x.conj() * y).sum();
            parities.push(if overlap.re >= 0.0 { 1 } else { -1 });
            rotated.push(a.clone());
        } else {
            // M[r][s] = <a_r, P a_s>, Hermitian with eigenvalues near +-1.
            let cols: Vec<&Vec<Complex64>> =
                group.iter().map(|&k| &spectrum.states[k].amplitudes).collect();
            let pcols: Vec<Vec<Complex64>> = cols.iter().map(|c| permute(m, c)).collect();
            let mut mat = Array2::<Complex64>::zeros((g, g));
            for r in 0..g {
                for s in 0..g {
                    mat[[r, s]] = cols[r].iter().zip(&pcols[s]).map(|(x, y)| x.conj() * y).sum();
                }
            }
            let herm = Array2::from_shape_fn((g, g), |(r, s)| {
                (mat[[r, s]] + mat[[s, r]].conj()) * 0.5
            });
            let (eigs, w) = match jacobi_complex(herm) {
                Ok(ok) => ok,
                Err(_) => return AdaptOutcome::NonCommuting { commutator_norm: comm },
            };
            // Even parity first.
            let mut order: Vec<usize> = (0..g).collect();
            order.sort_by(|&i, &j| eigs[j].total_cmp(&eigs[i]));
            for &c in &order {
                let n_sites = cols[0].len();
                let mut col = vec![Complex64::new(0.0, 0.0); n_sites];
                for (s, src) in cols.iter().enumerate() {
                    let coeff = w[[s, c]];
                    if coeff.norm() > 0.0 {
                        for (i, &x) in src.iter().enumerate() {
                            col[i] += x * coeff;
                        }
                    }
                }
                parities.push(if eigs[c] >= 0.0 { 1 } else { -1 });
                rotated.push(col);
            }
        }
        for (&k, (mut col, parity)) in group.iter().zip(rotated.into_iter().zip(parities)) {
            canonicalize(&mut col);
            out.states[k].amplitudes = col;
            out.states[k].parity = Some(parity);
        }
    }
    out.real_gauge =
        out.states.iter().all(|s| s.amplitudes.iter().all(|z| z.im == 0.0));
    AdaptOutcome::Adapted(out)
}
