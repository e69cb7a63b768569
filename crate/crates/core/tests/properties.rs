use l2betti::buildings::{lattice_rescale, top_degree_lower_bound, ChamberData};
use l2betti::cli::description::{builtin_descriptions, parse_description};
use l2betti::complex_invariants::{euler_check_exact, finite_betti_exact, kunneth};
use l2betti::exact::{int, rat, Rational};
use l2betti::graph_invariants::{beta0, beta1_tree_closed_form};
use l2betti::orbit::{CofiniteComplex, OrbitGraph, Space, DEFAULT_PRODUCT_CAP};
use l2betti::vn_dimension::{kernel_trace, rescale_haar};
use num::Signed;
use proptest::prelude::*;

/// Random finite simplicial complex on at most 6 vertices, every vertex used.
fn finite_complex() -> impl Strategy<Value = CofiniteComplex> {
    (2usize..=6)
        .prop_flat_map(|n| (Just(n), prop::collection::vec(prop::collection::btree_set(0..n, 1..=3), 1..=7)))
        .prop_map(|(n, faces)| {
            let mut simplices: Vec<Vec<usize>> = faces.into_iter().map(|s| s.into_iter().collect()).collect();
            simplices.extend((0..n).map(|v| vec![v]));
            CofiniteComplex::simplicial(&simplices, None).expect("valid simplices")
        })
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=12, 1i64..=12).prop_map(|(p, q)| rat(p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_trace_is_monotone_in_threshold_and_nonnegative(c in finite_complex(), e1 in 1e-6f64..1.0, e2 in 1e-6f64..1.0) {
        let t = c.build_subcomplex(0).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        for n in 0..=c.dims() {
            let a = kernel_trace(&t, n, None, lo).unwrap().value;
            let b = kernel_trace(&t, n, None, hi).unwrap().value;
            prop_assert!(a >= -1e-12);
            prop_assert!(a <= b + 1e-9, "n={n} {a} > {b}");
        }
    }

    #[test]
    fn harmonic_trace_matches_exact_betti(c in finite_complex()) {
        let t = c.build_subcomplex(0).unwrap();
        let exact = finite_betti_exact(&c).unwrap();
        for (n, b) in exact.iter().enumerate() {
            let v = kernel_trace(&t, n, None, 1e-8).unwrap().value;
            prop_assert!((v - l2betti::exact::to_f64(b)).abs() < 1e-8, "n={n} {v} vs {b}");
        }
    }

    #[test]
    fn euler_relation_on_finite_complexes(c in finite_complex()) {
        let b = finite_betti_exact(&c).unwrap();
        prop_assert!(euler_check_exact(&c, &b).unwrap());
        prop_assert!(b.iter().all(|x| !x.is_negative()));
    }

    #[test]
    fn finite_products_obey_kunneth(a in finite_complex(), b in finite_complex()) {
        let p = CofiniteComplex::product(&a, &b, DEFAULT_PRODUCT_CAP);
        let direct = finite_betti_exact(&p).unwrap();
        let formula = kunneth(&finite_betti_exact(&a).unwrap(), &finite_betti_exact(&b).unwrap()).unwrap();
        prop_assert_eq!(direct, formula);
    }

    #[test]
    fn kunneth_is_commutative_and_multiplies_totals(
        a in prop::collection::vec(0i64..5, 1..5),
        b in prop::collection::vec(0i64..5, 1..5),
    ) {
        let a: Vec<Rational> = a.into_iter().map(int).collect();
        let b: Vec<Rational> = b.into_iter().map(int).collect();
        let ab = kunneth(&a, &b).unwrap();
        prop_assert_eq!(&ab, &kunneth(&b, &a).unwrap());
        let total = |v: &[Rational]| v.iter().cloned().sum::<Rational>();
        prop_assert_eq!(total(&ab), total(&a) * total(&b));
        prop_assert!(ab.iter().all(|x| !x.is_negative()));
    }

    #[test]
    fn haar_rescaling_of_finite_complexes(c in finite_complex(), s in positive_rational()) {
        let exact = rescale_haar(&c, &s, finite_betti_exact).unwrap();
        let base = finite_betti_exact(&c).unwrap();
        prop_assert_eq!(exact, base.iter().map(|b| b / &s).collect::<Vec<_>>());
        let t = c.build_subcomplex(0).unwrap();
        let spectral = rescale_haar(&t, &s, |t| kernel_trace(t, 1.min(c.dims()), None, 1e-6));
        prop_assert!(spectral.is_ok());
    }

    #[test]
    fn haar_rescaling_of_tree_closed_form(k in 1usize..8, s in positive_rational()) {
        let b = rescale_haar(&OrbitGraph::free(k), &s, beta1_tree_closed_form).unwrap();
        prop_assert_eq!(b, int(k as i64 - 1) / s);
    }

    #[test]
    fn beta0_upper_bounds_do_not_increase(which in 0usize..4, start in 1usize..3) {
        let space = match which {
            0 => Space::Graph(OrbitGraph::free(2)),
            1 => Space::Graph(OrbitGraph::grid(2)),
            2 => Space::Complex(CofiniteComplex::free_cover(2)),
            _ => Space::Complex(CofiniteComplex::grid(2)),
        };
        let levels: Vec<usize> = (start..start + 4).collect();
        let r = beta0(&space, &levels).unwrap();
        prop_assert!(r.rows.iter().all(|row| row.value >= 0.0));
        prop_assert!(r.rows.windows(2).all(|w| w[1].value <= w[0].value + 1e-15));
    }

    #[test]
    fn building_bound_positive_iff_q_exceeds_rank(n in 1usize..=6, q in 2u64..=64) {
        let b = top_degree_lower_bound(&ChamberData::new(n, q, None).unwrap());
        prop_assert_eq!(b.is_positive(), q > n as u64);
        prop_assert!(b < int(1));
    }

    #[test]
    fn lattice_rescaling_composes(b in positive_rational(), c1 in positive_rational(), c2 in positive_rational()) {
        let twice = lattice_rescale(&lattice_rescale(&b, &c1).unwrap(), &c2).unwrap();
        prop_assert_eq!(twice, lattice_rescale(&b, &(&c1 * &c2)).unwrap());
    }

    #[test]
    fn adjacency_descriptions_round_trip(edges in prop::collection::vec((0usize..6, 0usize..6), 1..10)) {
        let mut text = String::from("adjacency\nvertices 6\n");
        for (u, v) in &edges {
            text.push_str(&format!("edge {u} {v}\n"));
        }
        let d = parse_description(&text).unwrap();
        prop_assert_eq!(parse_description(&d.serialize()).unwrap(), d);
    }
}

#[test]
fn builtin_descriptions_round_trip() {
    for d in builtin_descriptions() {
        let again = parse_description(&d.serialize()).unwrap();
        assert_eq!(parse_description(&again.serialize()).unwrap(), again);
        assert_eq!(again.build().unwrap(), d.build().unwrap());
    }
}
