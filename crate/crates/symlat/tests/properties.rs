//! Randomized structural properties: the canonical text form is a fixed
//! point, stationary states obey the Kirchhoff law under arbitrary
//! bijections, the probability current stays antisymmetric, the continuity
//! law is an algebraic identity, and the eigensolver returns an orthonormal
//! basis.

use num_complex::Complex64;
use proptest::prelude::*;

use symlat::latfile::{parse_document, serialize_document, LatDocument, MapBlock};
use symlat::lattice::{HopSpec, SiteSpec};
use symlat::{
    build_lattice, build_mapping, continuity_residual, current_field, eigenstates,
    kirchhoff_residuals, probability_current, Lattice, MappingKind, SiteId, SiteMapping,
    Tolerances,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn arb_complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0, -2.0..2.0).prop_map(|(re, im)| c(re, im))
}

fn arb_real() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0).prop_map(|re| c(re, 0.0))
}

fn arb_hop() -> impl Strategy<Value = Complex64> {
    arb_complex().prop_filter("hop magnitudes stay away from zero", |h| h.norm() > 1e-3)
}

/// A connected lattice on a line of sites: a full path of hops plus a few
/// extra chords, an arbitrary permutation as the mapping, everything
/// non-grid so chord geometry is unconstrained.
fn arb_doc(values: BoxedStrategy<Complex64>) -> impl Strategy<Value = LatDocument> {
    (3usize..10).prop_flat_map(move |n| {
        let sites = prop::collection::vec(values.clone(), n);
        let path = prop::collection::vec(arb_hop(), n - 1);
        let chords =
            prop::collection::vec((0..n as u32, 0..n as u32, arb_hop()), 0..4);
        let perm = Just((1..=n as u32).collect::<Vec<u32>>()).prop_shuffle();
        (sites, path, chords, perm).prop_map(|(vs, path, chords, perm)| {
            assemble_doc(&vs, &path, &chords, &perm)
        })
    })
}

fn assemble_doc(
    vs: &[Complex64],
    path: &[Complex64],
    chords: &[(u32, u32, Complex64)],
    perm: &[u32],
) -> LatDocument {
    let sites: Vec<SiteSpec> = vs
        .iter()
        .enumerate()
        .map(|(i, &v)| SiteSpec { id: i as u32 + 1, x: i as i64, y: 0, v })
        .collect();
    let mut hops: Vec<HopSpec> = path
        .iter()
        .enumerate()
        .map(|(i, &h)| HopSpec { a: i as u32 + 1, b: i as u32 + 2, h })
        .collect();
    for &(a, b, h) in chords {
        let (lo, hi) = (a.min(b) + 1, a.max(b) + 1);
        if lo != hi && hops.iter().all(|x| (x.a, x.b) != (lo, hi)) {
            hops.push(HopSpec { a: lo, b: hi, h });
        }
    }
    hops.sort_by_key(|h| (h.a, h.b));
    let pairs: Vec<(SiteId, SiteId)> = perm
        .iter()
        .enumerate()
        .map(|(i, &img)| (SiteId(i as u32 + 1), SiteId(img)))
        .filter(|(s, d)| s != d)
        .collect();
    LatDocument {
        name: "prop-lattice".into(),
        grid: false,
        sites,
        hops,
        maps: vec![MapBlock { name: "shuffle".into(), pairs }],
        regions: Vec::new(),
        chains: Vec::new(),
        loops: Vec::new(),
    }
}

fn realize(doc: &LatDocument) -> (Lattice, SiteMapping) {
    let lat = build_lattice(&doc.name, doc.grid, &doc.sites, &doc.hops).unwrap();
    let m = build_mapping(
        &lat,
        MappingKind::Permutation(doc.maps[0].pairs.clone()),
        &[],
        false,
    )
    .unwrap();
    (lat, m)
}

fn arb_state(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(arb_complex(), n)
        .prop_filter("state must not vanish", |v| {
            v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-6
        })
        .prop_map(|v| {
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / norm).collect()
        })
}

proptest! {
    #[test]
    fn canonical_text_form_is_a_fixed_point(doc in arb_doc(arb_complex().boxed())) {
        let text = serialize_document(&doc);
        let parsed = parse_document(&text).unwrap();
        prop_assert_eq!(&parsed, &doc);
        prop_assert_eq!(serialize_document(&parsed), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationary_states_obey_kirchhoff_under_any_bijection(
        doc in arb_doc(arb_real().boxed())
    ) {
        let (lat, m) = realize(&doc);
        let tol = Tolerances::default();
        let spectrum = eigenstates(&lat, &tol).unwrap();
        for state in &spectrum.states {
            let report = kirchhoff_residuals(&lat, &m, &state.amplitudes, &tol).unwrap();
            prop_assert!(
                report.max_residual() <= 1e-9,
                "state {}: residual {}",
                state.index,
                report.max_residual()
            );
        }
    }

    #[test]
    fn identity_mapping_reproduces_the_probability_current(
        (doc, psi) in arb_doc(arb_complex().boxed())
            .prop_flat_map(|doc| {
                let n = doc.sites.len();
                (Just(doc), arb_state(n))
            })
    ) {
        let (lat, _) = realize(&doc);
        let id = SiteMapping::identity(&lat);
        let field = current_field(&lat, &id, &psi).unwrap();
        for (n, m, q) in field.pairs() {
            let j = probability_current(&lat, &psi, n, m).unwrap();
            prop_assert_eq!(q, j, "identity current must be the exact same number");
            prop_assert!(q.im.abs() <= 1e-15, "j is real: {}", q.im);
        }
        prop_assert!(field.antisymmetry_defect() <= 1e-12);
    }

    #[test]
    fn continuity_is_an_algebraic_identity(
        (doc, psi) in arb_doc(arb_complex().boxed())
            .prop_flat_map(|doc| {
                let n = doc.sites.len();
                (Just(doc), arb_state(n))
            })
    ) {
        let (lat, m) = realize(&doc);
        let residuals = continuity_residual(&lat, &m, &psi).unwrap();
        for (i, r) in residuals.iter().enumerate() {
            prop_assert!(*r <= 1e-9, "site index {i}: residual {r}");
        }
    }

    #[test]
    fn eigenbasis_is_orthonormal_and_faithful(doc in arb_doc(arb_real().boxed())) {
        let (lat, _) = realize(&doc);
        let tol = Tolerances::default();
        let spectrum = eigenstates(&lat, &tol).unwrap();
        prop_assert!(spectrum.orthonormality_defect() <= 1e-10);
        prop_assert!(spectrum.eigen_residual(&lat) <= 1e-10);
        let energies = spectrum.energies();
        prop_assert!(energies.windows(2).all(|w| w[0] <= w[1]), "sorted: {energies:?}");
    }
}
