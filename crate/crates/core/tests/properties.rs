use num_complex::Complex64;
use proptest::prelude::*;
use trizero::format::{parse_fg, parse_nf, write_fg, write_nf};
use trizero::homological::lb_apply;
use trizero::linear::{char_eval, locus, taylor_at_zero};
use trizero::poly::monomial_count;
use trizero::realize::{construct_order, decompose, lemma_solve, magic_expand, realize};
use trizero::reduction::{reduce, FGSeries, NFSeries};
use trizero::{split, w_basis, HomoPoly, VecPoly3};

fn poly(nvars: usize, degree: usize) -> impl Strategy<Value = HomoPoly> {
    prop::collection::vec(-2.0..2.0f64, monomial_count(nvars, degree))
        .prop_map(move |c| HomoPoly::from_coeffs(nvars, degree, c).unwrap())
}

fn poly_any_degree(nvars: usize, lo: usize, hi: usize) -> impl Strategy<Value = HomoPoly> {
    (lo..=hi).prop_flat_map(move |d| poly(nvars, d))
}

fn vec_poly(degree: usize) -> impl Strategy<Value = VecPoly3> {
    [poly(3, degree), poly(3, degree), poly(3, degree)].prop_map(|c| VecPoly3::new(c).unwrap())
}

fn params() -> impl Strategy<Value = trizero::OscillatorParams> {
    (0.1..10.0f64, -3.0..3.0f64).prop_filter_map("degenerate", |(a, b)| locus(a, b).ok())
}

fn reference() -> impl Strategy<Value = trizero::OscillatorParams> {
    prop_oneof![Just(locus(1.0, 0.0).unwrap()), Just(locus(2.0, 1.0).unwrap())]
}

fn no_pure_powers(mut z: HomoPoly) -> HomoPoly {
    let j = z.degree();
    z.add_term(&[j, 0, 0], -z.coeff(&[j, 0, 0])).unwrap();
    z.add_term(&[0, j, 0], -z.coeff(&[0, j, 0])).unwrap();
    z
}

fn target(order: usize) -> impl Strategy<Value = NFSeries> {
    let lens: Vec<usize> = (2..=order).map(|j| w_basis(j).len()).collect();
    lens.into_iter()
        .map(|n| prop::collection::vec(-1.0..1.0f64, n))
        .collect::<Vec<_>>()
        .prop_map(move |orders| {
            let mut nf = NFSeries::zero(order);
            for (k, c) in orders.into_iter().enumerate() {
                nf.set_coeffs(k + 2, c).unwrap();
            }
            nf
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_is_linear_and_matches_eval(
        (p, q) in (2usize..=5).prop_flat_map(|d| (poly(2, d), poly(2, d))),
        m in prop::collection::vec(-1.5..1.5f64, 6),
        x in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        let subst = [HomoPoly::linear(&m[0..3]), HomoPoly::linear(&m[3..6])];
        let sum = (&p + &q).compose_linear(&subst).unwrap();
        let parts = &p.compose_linear(&subst).unwrap() + &q.compose_linear(&subst).unwrap();
        prop_assert!((&sum - &parts).max_abs() < 1e-12);
        let at = [subst[0].eval(&x), subst[1].eval(&x)];
        prop_assert!((sum.eval(&x) - (p.eval(&at) + q.eval(&at))).abs() < 1e-11);
    }

    #[test]
    fn locus_has_triple_zero(p in params()) {
        let t = taylor_at_zero(&p);
        prop_assert!(t[0].abs() < 1e-12 && t[1].abs() < 1e-12 && t[2].abs() < 1e-12);
        prop_assert!((p.kappa2 * t[3] - 6.0).abs() < 1e-9);
        prop_assert!(p.tau0 > 0.0);
    }

    #[test]
    fn characteristic_function_is_real(p in params(), re in -2.0..2.0f64, im in -5.0..5.0f64) {
        let z = Complex64::new(re, im);
        let d = char_eval(&p, z.conj()) - char_eval(&p, z).conj();
        prop_assert!(d.norm() < 1e-12 * (1.0 + char_eval(&p, z).norm()));
    }

    #[test]
    fn split_reconstructs((j, v) in (2usize..=6).prop_flat_map(|j| (Just(j), vec_poly(j)))) {
        let s = split(&v).unwrap();
        let back = &w_basis(j).combine(&s.w_part) + &s.range_part;
        prop_assert!((&back - &v).max_abs() < 1e-9);
        prop_assert!((&lb_apply(&s.preimage) - &s.range_part).max_abs() < 1e-9);
    }

    #[test]
    fn range_elements_have_no_w_part((j, h) in (2usize..=5).prop_flat_map(|j| (Just(j), vec_poly(j)))) {
        let s = split(&lb_apply(&h)).unwrap();
        prop_assert_eq!(s.w_part.len(), w_basis(j).len());
        prop_assert!(s.w_part.iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn lemma_inverts_magic_expansion(p in reference(), z in poly_any_degree(2, 2, 6)) {
        let zeta = no_pure_powers(z);
        let xi = lemma_solve(&zeta, &p).unwrap();
        prop_assert!((&magic_expand(&xi, &p).unwrap() - &zeta).max_abs() < 1e-9);
        let j = zeta.degree();
        prop_assert_eq!(xi.coeff(&[j, 0, 0]), 0.0);
        prop_assert_eq!(xi.coeff(&[0, j, 0]), 0.0);
    }

    #[test]
    fn decompose_identity(p in reference(), (f, g) in (2usize..=5).prop_flat_map(|d| (poly(2, d), poly(2, d)))) {
        let dec = decompose(&f, &g, &p).unwrap();
        prop_assert!(dec.residual < 1e-10);
    }

    #[test]
    fn construct_meets_postcondition(
        p in reference(),
        (j, theta) in (2usize..=5).prop_flat_map(|j| (Just(j), prop::collection::vec(-1.0..1.0f64, w_basis(j).len()))),
    ) {
        let (f, g) = construct_order(&theta, j, &p).unwrap();
        let dec = decompose(&f, &g, &p).unwrap();
        for (l, c) in w_basis(j).labels.iter().zip(&theta) {
            let e = l.exponents();
            if l.family == trizero::Family::A {
                prop_assert!((p.kappa2 * dec.a.coeff(&[e[0], e[1], 0]) - c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn normal_form_text_roundtrip(nf in target(4)) {
        prop_assert_eq!(parse_nf(&write_nf(&nf), None).unwrap(), nf);
    }

    #[test]
    fn nonlinearity_text_roundtrip(f in poly(2, 2), g in poly(2, 3), f3 in poly(2, 3)) {
        let mut fg = FGSeries::zero(3);
        fg.set_f(2, f).unwrap();
        fg.set_f(3, f3).unwrap();
        fg.set_g(3, g).unwrap();
        prop_assert_eq!(parse_fg(&write_fg(&fg)).unwrap(), fg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn realize_then_reduce_returns_target(p in reference(), nf in prop_oneof![target(2), target(3)]) {
        let real = realize(&nf, &p).unwrap();
        let (back, _) = reduce(&real.fg, &p, nf.max_degree()).unwrap();
        prop_assert!(back.max_abs_diff(&nf) < 1e-8);
    }
}
