use std::sync::Arc;

use qmoments::arith::{fundamental_discriminants_in, FundamentalDiscriminant};
use qmoments::characters::enumerate_even_primitive;
use qmoments::coeffs::EllipticCurve;
use qmoments::lvalues::{l_dirichlet, l_quadratic, AfeOptions, LFunction};
use qmoments::moments::*;
use qmoments::predict::*;
use qmoments::specialfn::{mellin64, TestFunction};
use qmoments::C64;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn afe() -> AfeOptions {
    AfeOptions::default()
}

#[test]
fn symplectic_moment_against_single_evaluations() {
    let g = TestFunction::canonical();
    let sh = ShiftSet::real(&[0.6]).unwrap();
    for m in [1u64, 3] {
        let got = empirical_moment(&Family::Symplectic, &sh, Twist::m(m).unwrap(), 1000.0, &g, afe()).unwrap();
        let mut want = c(0.0);
        for d in fundamental_discriminants_in(1000, 2000, 1) {
            let chi_m = d.chi(m as i64) as f64;
            want += l_quadratic(d, c(0.6)).unwrap() * g.eval(d.get() as f64 / 1000.0) * chi_m;
        }
        assert!((got - want).norm() < 1e-6 * want.norm(), "M={m}: {got} {want}");
    }
}

#[test]
fn unitary_moment_by_hand() {
    let g = TestFunction::canonical();
    let sh = ShiftSet::unitary(vec![c(0.6)], vec![C64::new(0.7, 0.2)]).unwrap();
    let tw = Twist::new(2, 3).unwrap();
    let got = empirical_moment(&Family::Unitary, &sh, tw, 50.0, &g, afe()).unwrap();
    let mut want = c(0.0);
    for q in 50u64..=100 {
        for chi in enumerate_even_primitive(q).unwrap() {
            let w = chi.eval(2).conj() * chi.eval(3) * g.eval(q as f64 / 50.0);
            if w.norm() == 0.0 {
                continue;
            }
            want += w * l_dirichlet(&chi, c(0.6)).unwrap() * l_dirichlet(&chi.conj(), C64::new(0.7, 0.2)).unwrap();
        }
    }
    assert!((got - want).norm() < 1e-8 * want.norm(), "{got} {want}");
}

#[test]
fn empty_support_gives_zero() {
    let g = TestFunction::bump(1.0, 1.001).unwrap();
    let sh = ShiftSet::real(&[0.6]).unwrap();
    // No fundamental discriminant in [10, 10.01].
    let v = empirical_moment(&Family::Symplectic, &sh, Twist::m(1).unwrap(), 10.0, &g, afe()).unwrap();
    assert_eq!(v, c(0.0));
}

#[test]
fn linear_in_the_test_function() {
    let g1 = TestFunction::canonical();
    let g2 = TestFunction::bump(1.5, 2.5).unwrap();
    let g = TestFunction::combination(vec![(1.0, g1.clone()), (-2.0, g2.clone())]).unwrap();
    let sh = ShiftSet::real(&[0.7]).unwrap();
    let src = MemberSource::new(&Family::Symplectic, &sh, Twist::m(1).unwrap(), 2500, afe()).unwrap();
    let run = |g: &TestFunction| src.moment(1000.0, g).unwrap();
    let (a, b, sum) = (run(&g1), run(&g2), run(&g));
    assert!((sum - (a - b * 2.0)).norm() <= 1e-13 * (a.norm() + 2.0 * b.norm()), "{sum} {a} {b}");
}

#[test]
fn members_outside_the_support_never_contribute() {
    let g = TestFunction::bump(1.2, 1.7).unwrap();
    let sh = ShiftSet::real(&[0.65]).unwrap();
    let src = MemberSource::new(&Family::Symplectic, &sh, Twist::m(1).unwrap(), 3000, afe()).unwrap();
    let members = src.support_members(1000.0, &g);
    assert!(members.iter().all(|&d| (1200..=1700).contains(&d)));
    assert_eq!(members.len(), fundamental_discriminants_in(1200, 1700, 1).len());
    let inside = src.moment(1000.0, &g).unwrap();
    let everything = src.values(&src.members_in(1, 3000)).unwrap();
    let wide = MemberSource::weighted_sum(&everything, 1000.0, &g);
    assert_eq!(inside, wide);
}

#[test]
fn deep_shift_smoke_test() {
    // Swap terms are tiny at s = 2; the moment is essentially X g~(1) T_1(2).
    let g = TestFunction::canonical();
    let sh = ShiftSet::real(&[2.0]).unwrap();
    let x = 1e4;
    let emp = empirical_moment(&Family::Symplectic, &sh, Twist::m(1).unwrap(), x, &g, afe()).unwrap();
    let t = factor_t(1, &[c(2.0)], &EulerOptions::default()).unwrap().value;
    let main = t * x * mellin64(&g, c(1.0)).unwrap();
    assert!((emp / main - 1.0).norm() < 0.01, "{emp} {main}");
}

#[test]
fn curve_twist_root_numbers() {
    // The sign chosen by the functional equation itself, at an off-centre point.
    let e = Arc::new(EllipticCurve::c11a1());
    let s = C64::new(0.6, 0.3);
    let ds: Vec<FundamentalDiscriminant> = fundamental_discriminants_in(1, 2000, 11).into_iter().take(200).collect();
    assert_eq!(ds.len(), 200);
    for d in ds {
        let f = LFunction::CurveTwist(e.clone(), d);
        let lhs = f.eval(s).unwrap();
        let rhs = f.fe_rhs(s, &afe()).unwrap();
        let formula = e.root_number() as i32 * d.chi(-11);
        let eps = rhs / (C64::from(formula as f64));
        let observed = if (lhs - eps).norm() < (lhs + eps).norm() { 1 } else { -1 };
        assert_eq!(observed, formula, "d = {}", d.get());
        assert!((lhs - rhs).norm() < 1e-8 * lhs.norm().max(1.0), "d = {}", d.get());
    }
}

#[test]
fn comparison_rows_accumulate_in_exponent_order() {
    let g = TestFunction::canonical();
    let sh = ShiftSet::real(&[0.6]).unwrap();
    let run = MomentRun::compute(
        &Family::Symplectic,
        &sh,
        Twist::m(1).unwrap(),
        &[1000.0, 4000.0],
        &g,
        RecipeMode::Modified,
        afe(),
        &EulerOptions { prime_limit: 1 << 14 },
    )
    .unwrap();
    let all = compare(&run, TermSelection::All);
    let one = compare(&run, TermSelection::UpToSwaps(0));
    for (r, o) in all.rows.iter().zip(&one.rows) {
        assert_eq!(r.term_masks, vec![(0, 0), (1, 0)]);
        assert_eq!(o.term_masks, vec![(0, 0)]);
        assert_eq!(r.cumulative[0], o.cumulative[0]);
        assert_eq!(r.cumulative[1], r.term_values[0] + r.term_values[1]);
        assert_eq!(r.residual, r.empirical - r.cumulative[1]);
        assert!((r.ratio - 1.0).norm() < (o.ratio - 1.0).norm());
    }
    assert!(all.residual_exponent.is_some());
}

#[test]
fn appendix_rejects_alpha_outside_the_window() {
    let e = Arc::new(EllipticCurve::c11a1());
    let g = TestFunction::canonical();
    let eo = EulerOptions::default();
    for alpha in [0.0, 0.25, 0.5] {
        assert!(appendix_experiment(e.clone(), 1, alpha, &[1e3], &g, afe(), &eo).is_err());
    }
}

#[test]
fn appendix_small_grid() {
    let e = Arc::new(EllipticCurve::c11a1());
    let g = TestFunction::canonical();
    let rep = appendix_experiment(e, 1, 0.1, &[300.0, 600.0], &g, afe(), &EulerOptions { prime_limit: 1 << 14 }).unwrap();
    assert_eq!(rep.rows.len(), 2);
    for r in &rep.rows {
        assert!((r.residual_one - (r.empirical - r.one_term)).abs() < 1e-12 * r.empirical.abs());
        // The missing term has exponent 1 - 2 alpha and a positive chi-factor.
        assert!(r.two_term > r.one_term);
    }
    assert_eq!(rep.notes.len(), 1);
}

#[test]
fn manifest_hash_is_stable_and_order_free() {
    let p = |k: &str, v: &str| (k.to_string(), v.to_string());
    let a = Manifest::new("moment", vec![p("family", "symplectic"), p("shift", "0.6")]);
    let b = Manifest::new("moment", vec![p("shift", "0.6"), p("family", "symplectic")]);
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = Manifest::new("moment", vec![p("shift", "0.61"), p("family", "symplectic")]);
    assert_ne!(a.hash(), c.hash());
}
