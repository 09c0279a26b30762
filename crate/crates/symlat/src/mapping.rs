//! Site mappings: total bijections of the site set onto itself.
//!
//! A mapping is built from a geometric base (identity, reflection,
//! translation, rotation about a possibly half-integer center) or an explicit
//! permutation, optionally followed by overrides that replace individual
//! images. Sites whose geometric image falls outside the lattice default to
//! identity unless strict mode is requested. Overrides composing after a
//! geometric base express second-class symmetries (a reflection followed by a
//! permutation of selected images).

use crate::lattice::{Lattice, LatticeError, SiteId};
use std::collections::HashMap;
use thiserror::Error;

/// Mirror axes on the integer plane. Coordinates along the reflected
/// direction are given doubled (`x2 = 2x`) so axes between lattice lines are
/// representable exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// The line `x = x2 / 2`.
    Vertical { x2: i64 },
    /// The line `y = y2 / 2`.
    Horizontal { y2: i64 },
    /// The line `y = x + c`.
    Diagonal { c: i64 },
    /// The line `y = -x + c`.
    Antidiagonal { c: i64 },
}

/// Provenance of a mapping: how its images were produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappingKind {
    Identity,
    Reflection(Axis),
    Translation { dx: i64, dy: i64 },
    /// Counterclockwise rotation by `quarter_turns * 90` degrees about the
    /// point `(cx2 / 2, cy2 / 2)`.
    Rotation { cx2: i64, cy2: i64, quarter_turns: u8 },
    /// Explicit image pairs; unlisted sites default to identity.
    Permutation(Vec<(SiteId, SiteId)>),
    /// Mappings applied left to right.
    Composition(Vec<MappingKind>),
}

#[derive(Debug, Error, PartialEq)]
pub enum MappingError {
    #[error("unknown site {0}")]
    UnknownSite(SiteId),
    #[error("not bijective: sites {first} and {second} both map to {image}")]
    NotBijective { image: SiteId, first: SiteId, second: SiteId },
    #[error("site {site} has no geometric image (target ({x}, {y}) is not a site)")]
    GeometricImageMissing { site: SiteId, x: i64, y: i64 },
    #[error("duplicate source site {0} in permutation")]
    DuplicateSource(SiteId),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A bijection of the site set, stored as index permutations over one
/// lattice's declaration order.
#[derive(Debug, Clone)]
pub struct SiteMapping {
    kind: MappingKind,
    ids: Vec<SiteId>,
    by_id: HashMap<SiteId, usize>,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl SiteMapping {
    pub fn kind(&self) -> &MappingKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// The identity mapping on `lat`.
    pub fn identity(lat: &Lattice) -> SiteMapping {
        let n = lat.n_sites();
        SiteMapping {
            kind: MappingKind::Identity,
            ids: (0..n).map(|i| lat.id_at(i)).collect(),
            by_id: (0..n).map(|i| (lat.id_at(i), i)).collect(),
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    fn index_of(&self, id: SiteId) -> Result<usize, MappingError> {
        self.by_id.get(&id).copied().ok_or(MappingError::UnknownSite(id))
    }

    /// Image index under the mapping.
    pub fn image_index(&self, index: usize) -> usize {
        self.forward[index]
    }

    /// Preimage index under the mapping.
    pub fn preimage_index(&self, index: usize) -> usize {
        self.inverse[index]
    }

    pub fn image(&self, n: SiteId) -> Result<SiteId, MappingError> {
        Ok(self.ids[self.forward[self.index_of(n)?]])
    }

    pub fn preimage(&self, n: SiteId) -> Result<SiteId, MappingError> {
        Ok(self.ids[self.inverse[self.index_of(n)?]])
    }

    /// `power`-fold application; negative powers apply the inverse.
    pub fn apply(&self, n: SiteId, power: i64) -> Result<SiteId, MappingError> {
        let mut idx = self.index_of(n)?;
        idx = self.apply_index(idx, power);
        Ok(self.ids[idx])
    }

    pub fn apply_index(&self, mut idx: usize, power: i64) -> usize {
        if power >= 0 {
            for _ in 0..power {
                idx = self.forward[idx];
            }
        } else {
            for _ in 0..(-power) {
                idx = self.inverse[idx];
            }
        }
        idx
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn is_involution(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &j)| self.forward[j] == i)
    }

    /// This mapping followed by `then`. Provenance records both kinds in
    /// application order.
    pub fn compose(&self, then: &SiteMapping) -> SiteMapping {
        assert_eq!(self.len(), then.len(), "mappings built over different lattices");
        let forward: Vec<usize> = (0..self.len()).map(|i| then.forward[self.forward[i]]).collect();
        let mut inverse = vec![0; forward.len()];
        for (i, &j) in forward.iter().enumerate() {
            inverse[j] = i;
        }
        let mut kinds = Vec::new();
        for k in [&self.kind, &then.kind] {
            match k {
                MappingKind::Composition(list) => kinds.extend(list.iter().cloned()),
                other => kinds.push(other.clone()),
            }
        }
        SiteMapping {
            kind: MappingKind::Composition(kinds),
            ids: self.ids.clone(),
            by_id: self.by_id.clone(),
            forward,
            inverse,
        }
    }

    /// Image pairs `(site, image)` in declaration order.
    pub fn pairs(&self) -> impl Iterator<Item = (SiteId, SiteId)> + '_ {
        (0..self.len()).map(move |i| (self.ids[i], self.ids[self.forward[i]]))
    }
}

fn geometric_target(kind: &MappingKind, x: i64, y: i64) -> Option<(i64, i64)> {
    match kind {
        MappingKind::Identity => Some((x, y)),
        MappingKind::Reflection(axis) => Some(match *axis {
            Axis::Vertical { x2 } => (x2 - x, y),
            Axis::Horizontal { y2 } => (x, y2 - y),
            Axis::Diagonal { c } => (y - c, x + c),
            Axis::Antidiagonal { c } => (c - y, c - x),
        }),
        MappingKind::Translation { dx, dy } => Some((x + dx, y + dy)),
        MappingKind::Rotation { cx2, cy2, quarter_turns } => {
            let (mut rx2, mut ry2) = (2 * x - cx2, 2 * y - cy2);
            for _ in 0..(quarter_turns % 4) {
                let t = rx2;
                rx2 = -ry2;
                ry2 = t;
            }
            let (tx2, ty2) = (cx2 + rx2, cy2 + ry2);
            if tx2 % 2 == 0 && ty2 % 2 == 0 {
                Some((tx2 / 2, ty2 / 2))
            } else {
                None
            }
        }
        MappingKind::Permutation(_) | MappingKind::Composition(_) => {
            unreachable!("handled structurally in build_mapping")
        }
    }
}

/// Builds a mapping over `lat` from a base kind plus image overrides.
///
/// Geometric kinds map each site by coordinates; a site whose target
/// coordinates hold no site keeps its identity image, unless `strict` is set,
/// in which case the build fails with [`MappingError::GeometricImageMissing`].
/// Overrides then replace the images of the listed sites, and the completed
/// map must be a bijection.
pub fn build_mapping(
    lat: &Lattice,
    kind: MappingKind,
    overrides: &[(SiteId, SiteId)],
    strict: bool,
) -> Result<SiteMapping, MappingError> {
    let n = lat.n_sites();
    let ids: Vec<SiteId> = (0..n).map(|i| lat.id_at(i)).collect();
    let by_id: HashMap<SiteId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut forward: Vec<usize> = match &kind {
        MappingKind::Permutation(pairs) => {
            let mut fw: Vec<usize> = (0..n).collect();
            let mut seen: HashMap<SiteId, ()> = HashMap::new();
            for &(src, dst) in pairs {
                let si = *by_id.get(&src).ok_or(MappingError::UnknownSite(src))?;
                let di = *by_id.get(&dst).ok_or(MappingError::UnknownSite(dst))?;
                if seen.insert(src, ()).is_some() {
                    return Err(MappingError::DuplicateSource(src));
                }
                fw[si] = di;
            }
            fw
        }
        MappingKind::Composition(kinds) => {
            let mut m = SiteMapping::identity(lat);
            for k in kinds {
                let next = build_mapping(lat, k.clone(), &[], strict)?;
                m = m.compose(&next);
            }
            m.forward
        }
        geometric => {
            let mut fw = Vec::with_capacity(n);
            for i in 0..n {
                let s = lat.site_at(i);
                match geometric_target(geometric, s.x, s.y) {
                    Some((tx, ty)) => match lat.site_at_coords(tx, ty) {
                        Some(tid) => fw.push(by_id[&tid]),
                        None if strict => {
                            return Err(MappingError::GeometricImageMissing {
                                site: s.id,
                                x: tx,
                                y: ty,
                            })
                        }
                        None => fw.push(i),
                    },
                    None if strict => {
                        return Err(MappingError::GeometricImageMissing {
                            site: s.id,
                            x: s.x,
                            y: s.y,
                        })
                    }
                    None => fw.push(i),
                }
            }
            fw
        }
    };

    for &(src, dst) in overrides {
        let si = *by_id.get(&src).ok_or(MappingError::UnknownSite(src))?;
        let di = *by_id.get(&dst).ok_or(MappingError::UnknownSite(dst))?;
        forward[si] = di;
    }

    let mut first_source: Vec<Option<usize>> = vec![None; n];
    for (i, &j) in forward.iter().enumerate() {
        if let Some(prev) = first_source[j] {
            return Err(MappingError::NotBijective {
                image: ids[j],
                first: ids[prev],
                second: ids[i],
            });
        }
        first_source[j] = Some(i);
    }
    let mut inverse = vec![0; n];
    for (i, &j) in forward.iter().enumerate() {
        inverse[j] = i;
    }

    Ok(SiteMapping { kind, ids, by_id, forward, inverse })
}

/// True when the image of the neighborhood of `n` is exactly the
/// neighborhood of its image (as sets), i.e. the mapping keeps the
/// connectivity of `n`.
pub fn keeps_connectivity(
    lat: &Lattice,
    m: &SiteMapping,
    n: SiteId,
) -> Result<bool, MappingError> {
    let idx = lat.index_of(n)?;
    let mut mapped: Vec<usize> =
        lat.adjacency_row(idx).iter().map(|&(k, _)| m.image_index(k)).collect();
    let mut target: Vec<usize> =
        lat.adjacency_row(m.image_index(idx)).iter().map(|&(k, _)| k).collect();
    mapped.sort_unstable();
    target.sort_unstable();
    Ok(mapped == target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, HopSpec, SiteSpec};
    use num_complex::Complex64;

    fn z(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn chain(n: u32, vs: &[f64]) -> Lattice {
        let sites: Vec<SiteSpec> = (0..n)
            .map(|i| SiteSpec { id: i + 1, x: i as i64, y: 0, v: z(vs[i as usize]) })
            .collect();
        let hops: Vec<HopSpec> =
            (1..n).map(|i| HopSpec { a: i, b: i + 1, h: z(1.0) }).collect();
        build_lattice("chain", true, &sites, &hops).unwrap()
    }

    #[test]
    fn reflection_on_three_chain() {
        let lat = chain(3, &[0.0, 0.0, 0.0]);
        let m = build_mapping(&lat, MappingKind::Reflection(Axis::Vertical { x2: 2 }), &[], true)
            .unwrap();
        assert_eq!(m.image(SiteId(1)).unwrap(), SiteId(3));
        assert_eq!(m.image(SiteId(2)).unwrap(), SiteId(2));
        assert!(m.is_involution());
    }

    #[test]
    fn translation_defaults_collide() {
        let lat = chain(3, &[0.0; 3]);
        // Site 3 has no geometric image, defaults to identity, and then
        // receives site 2's image as well.
        let err = build_mapping(&lat, MappingKind::Translation { dx: 1, dy: 0 }, &[], false)
            .unwrap_err();
        assert_eq!(
            err,
            MappingError::NotBijective { image: SiteId(3), first: SiteId(2), second: SiteId(3) }
        );
        let strict_err =
            build_mapping(&lat, MappingKind::Translation { dx: 1, dy: 0 }, &[], true).unwrap_err();
        assert_eq!(strict_err, MappingError::GeometricImageMissing { site: SiteId(3), x: 3, y: 0 });
    }

    #[test]
    fn rotation_about_plaquette_center() {
        let lat = build_lattice(
            "square",
            true,
            &[
                SiteSpec { id: 1, x: 0, y: 0, v: z(0.0) },
                SiteSpec { id: 2, x: 1, y: 0, v: z(0.0) },
                SiteSpec { id: 3, x: 1, y: 1, v: z(0.0) },
                SiteSpec { id: 4, x: 0, y: 1, v: z(0.0) },
            ],
            &[
                HopSpec { a: 1, b: 2, h: z(1.0) },
                HopSpec { a: 2, b: 3, h: z(1.0) },
                HopSpec { a: 3, b: 4, h: z(1.0) },
                HopSpec { a: 4, b: 1, h: z(1.0) },
            ],
        )
        .unwrap();
        let m = build_mapping(
            &lat,
            MappingKind::Rotation { cx2: 1, cy2: 1, quarter_turns: 1 },
            &[],
            true,
        )
        .unwrap();
        // CCW quarter turn about (1/2, 1/2): 1 -> 2 -> 3 -> 4 -> 1.
        assert_eq!(m.image(SiteId(1)).unwrap(), SiteId(2));
        assert_eq!(m.image(SiteId(2)).unwrap(), SiteId(3));
        assert_eq!(m.image(SiteId(3)).unwrap(), SiteId(4));
        assert_eq!(m.image(SiteId(4)).unwrap(), SiteId(1));
        assert_eq!(m.apply(SiteId(1), -1).unwrap(), SiteId(4));
        assert_eq!(m.apply(SiteId(1), 6).unwrap(), SiteId(3));
        assert!(!m.is_involution());
    }

    #[test]
    fn override_composes_after_geometric_base() {
        // Two mirrored five-site crosses joined by a bridge; the override
        // swaps the images of the upper and lower arm of the left cross.
        let mut sites = vec![
            SiteSpec { id: 10, x: 0, y: 0, v: z(1.0) },  // left center
            SiteSpec { id: 11, x: 0, y: 1, v: z(0.5) },  // up
            SiteSpec { id: 12, x: 1, y: 0, v: z(0.5) },  // right
            SiteSpec { id: 13, x: 0, y: -1, v: z(0.5) }, // down
            SiteSpec { id: 14, x: -1, y: 0, v: z(0.5) }, // left
            SiteSpec { id: 20, x: 6, y: 0, v: z(1.0) },  // right center
            SiteSpec { id: 21, x: 6, y: 1, v: z(0.5) },
            SiteSpec { id: 22, x: 7, y: 0, v: z(0.5) },
            SiteSpec { id: 23, x: 6, y: -1, v: z(0.5) },
            SiteSpec { id: 24, x: 5, y: 0, v: z(0.5) },
        ];
        sites.push(SiteSpec { id: 30, x: 2, y: 0, v: z(0.2) });
        sites.push(SiteSpec { id: 31, x: 3, y: 0, v: z(0.8) });
        sites.push(SiteSpec { id: 32, x: 4, y: 0, v: z(0.9) });
        let hops = vec![
            HopSpec { a: 10, b: 11, h: z(1.0) },
            HopSpec { a: 10, b: 12, h: z(1.0) },
            HopSpec { a: 10, b: 13, h: z(1.0) },
            HopSpec { a: 10, b: 14, h: z(1.0) },
            HopSpec { a: 20, b: 21, h: z(1.0) },
            HopSpec { a: 20, b: 22, h: z(1.0) },
            HopSpec { a: 20, b: 23, h: z(1.0) },
            HopSpec { a: 20, b: 24, h: z(1.0) },
            HopSpec { a: 12, b: 30, h: z(1.0) },
            HopSpec { a: 30, b: 31, h: z(1.0) },
            HopSpec { a: 31, b: 32, h: z(1.0) },
            HopSpec { a: 32, b: 24, h: z(1.0) },
        ];
        let lat = build_lattice("crosses", true, &sites, &hops).unwrap();
        let m = build_mapping(
            &lat,
            MappingKind::Reflection(Axis::Vertical { x2: 6 }),
            &[(SiteId(11), SiteId(23)), (SiteId(13), SiteId(21))],
            true,
        )
        .unwrap();
        assert_eq!(m.image(SiteId(10)).unwrap(), SiteId(20));
        assert_eq!(m.image(SiteId(11)).unwrap(), SiteId(23)); // overridden
        assert_eq!(m.image(SiteId(13)).unwrap(), SiteId(21)); // overridden
        assert_eq!(m.image(SiteId(12)).unwrap(), SiteId(24)); // base reflection
        // Whole map still a bijection.
        let mut images: Vec<SiteId> = m.pairs().map(|(_, img)| img).collect();
        images.sort();
        images.dedup();
        assert_eq!(images.len(), lat.n_sites());
    }

    #[test]
    fn permutation_defaults_and_errors() {
        let lat = chain(4, &[0.0; 4]);
        let m = build_mapping(
            &lat,
            MappingKind::Permutation(vec![(SiteId(1), SiteId(2)), (SiteId(2), SiteId(1))]),
            &[],
            false,
        )
        .unwrap();
        assert_eq!(m.image(SiteId(3)).unwrap(), SiteId(3));
        assert!(m.is_involution());

        let err = build_mapping(
            &lat,
            MappingKind::Permutation(vec![(SiteId(1), SiteId(2))]),
            &[],
            false,
        )
        .unwrap_err();
        assert!(matches!(err, MappingError::NotBijective { image: SiteId(2), .. }));

        let err = build_mapping(
            &lat,
            MappingKind::Permutation(vec![(SiteId(1), SiteId(1)), (SiteId(1), SiteId(2))]),
            &[],
            false,
        )
        .unwrap_err();
        assert_eq!(err, MappingError::DuplicateSource(SiteId(1)));
    }

    #[test]
    fn connectivity_kept_on_chain_but_not_with_stub() {
        let lat = chain(6, &[1.0, 0.5, 0.5, 0.5, 0.5, 2.0]);
        let m = build_mapping(&lat, MappingKind::Reflection(Axis::Vertical { x2: 5 }), &[], true)
            .unwrap();
        for id in 1..=6 {
            assert!(keeps_connectivity(&lat, &m, SiteId(id)).unwrap());
        }

        // Same chain with a two-site stub hanging off site 3.
        let mut sites: Vec<SiteSpec> = (0..6)
            .map(|i| SiteSpec {
                id: i + 1,
                x: i as i64,
                y: 0,
                v: z([1.0, 0.5, 0.5, 0.5, 0.5, 2.0][i as usize]),
            })
            .collect();
        sites.push(SiteSpec { id: 7, x: 2, y: 1, v: z(0.4) });
        sites.push(SiteSpec { id: 8, x: 2, y: 2, v: z(0.4) });
        let mut hops: Vec<HopSpec> =
            (1..6).map(|i| HopSpec { a: i, b: i + 1, h: z(1.0) }).collect();
        hops.push(HopSpec { a: 3, b: 7, h: z(1.0) });
        hops.push(HopSpec { a: 7, b: 8, h: z(1.0) });
        let stubbed = build_lattice("stubbed", true, &sites, &hops).unwrap();
        let m = build_mapping(
            &stubbed,
            MappingKind::Reflection(Axis::Vertical { x2: 5 }),
            &[],
            false,
        )
        .unwrap();
        // Site 3 now has three neighbors; its image (site 4) has two.
        assert!(!keeps_connectivity(&stubbed, &m, SiteId(3)).unwrap());
        assert!(keeps_connectivity(&stubbed, &m, SiteId(5)).unwrap());
    }

    #[test]
    fn compose_records_provenance() {
        let lat = chain(3, &[0.0; 3]);
        let r = build_mapping(&lat, MappingKind::Reflection(Axis::Vertical { x2: 2 }), &[], true)
            .unwrap();
        let composed = r.compose(&r);
        assert!(composed.is_identity());
        match composed.kind() {
            MappingKind::Composition(list) => assert_eq!(list.len(), 2),
            other => panic!("expected composition, got {other:?}"),
        }
    }
}
