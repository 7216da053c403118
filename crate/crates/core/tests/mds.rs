use std::sync::Arc;

use qmoments::characters::{enumerate_even_primitive, DirichletCharacter};
use qmoments::coeffs::{EllipticCurve, ModularForm};
use qmoments::lvalues::{l_dirichlet, AfeOptions};
use qmoments::mds::*;
use qmoments::predict::*;
use qmoments::specialfn::{zeta, TestFunction};
use qmoments::C64;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn one() -> Twist {
    Twist::m(1).unwrap()
}

fn curve() -> Family {
    Family::Elliptic(Arc::new(EllipticCurve::c11a1()))
}

fn delta() -> Family {
    Family::Orthogonal(Arc::new(ModularForm::delta()))
}

#[test]
fn symplectic_series_converges_in_cutoff() {
    let sh = ShiftSet::real(&[2.0]).unwrap();
    let a = mds_eval(&Family::Symplectic, &sh, one(), c(3.0), 10_000, AfeOptions::default()).unwrap();
    let b = mds_eval(&Family::Symplectic, &sh, one(), c(3.0), 20_000, AfeOptions::default()).unwrap();
    assert!((a.value - b.value).norm() < 1e-8, "{} {}", a.value, b.value);
    assert!(a.truncation_estimate < 1e-7);
    assert!(a.warnings.is_empty());
}

#[test]
fn cutoff_one_is_the_zeta_term() {
    let sh = ShiftSet::real(&[1.5, 2.0]).unwrap();
    let a = mds_eval(&Family::Symplectic, &sh, one(), c(3.0), 1, AfeOptions::default()).unwrap();
    let z = zeta(c(1.5)).unwrap() * zeta(c(2.0)).unwrap();
    assert!((a.value - z).norm() < 1e-12);
    let u = ShiftSet::unitary(vec![c(1.5)], vec![c(2.0)]).unwrap();
    let a = mds_eval(&Family::Unitary, &u, Twist::new(1, 1).unwrap(), c(3.0), 1, AfeOptions::default()).unwrap();
    assert!((a.value - z).norm() < 1e-12);
}

#[test]
fn unitary_series_by_hand() {
    let (s, z, w) = (c(1.5), c(1.5), c(4.0));
    let sh = ShiftSet::unitary(vec![s], vec![z]).unwrap();
    let a = mds_eval(&Family::Unitary, &sh, Twist::new(1, 1).unwrap(), w, 5, AfeOptions::default()).unwrap();
    let mut hand = zeta(s).unwrap() * zeta(z).unwrap();
    for q in 2..=5u64 {
        for chi in enumerate_even_primitive(q).unwrap() {
            hand += l_dirichlet(&chi, s).unwrap() * l_dirichlet(&chi.conj(), z).unwrap() * (q as f64).powf(-4.0);
        }
    }
    assert!((a.value - hand).norm() < 1e-12, "{} {hand}", a.value);
}

#[test]
fn residue_in_the_easy_region() {
    let sh = ShiftSet::real(&[2.0]).unwrap();
    let r = empirical_residue(&Family::Symplectic, &sh, one(), 10_000, AfeOptions::default()).unwrap();
    let t = factor_t(1, &[c(2.0)], &EulerOptions::default()).unwrap().value;
    assert!((r.extrapolated - t).norm() / t.norm() < 5e-3, "{r:?} {t}");
    assert!(r.converged);
}

#[test]
fn funceq_symplectic_and_empty_subset() {
    let sh = ShiftSet::real(&[0.6]).unwrap();
    let r = funceq_check(&Family::Symplectic, &sh, one(), 1, 0, c(1.4), 1000, AfeOptions::default()).unwrap();
    assert!(r.pass, "{r:?}");
    let r = funceq_check(&Family::Symplectic, &sh, one(), 0, 0, c(1.4), 1000, AfeOptions::default()).unwrap();
    assert_eq!(r.defect, 0.0);
}

#[test]
fn funceq_elliptic_moves_the_twist_index() {
    let sh = ShiftSet::real(&[0.6]).unwrap();
    let r = funceq_check(&curve(), &sh, one(), 1, 0, c(1.4), 1000, AfeOptions::default()).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.rhs_twist.m, 11);
}

#[test]
fn funceq_orthogonal_and_unitary() {
    let sh = ShiftSet::real(&[0.6, 0.7]).unwrap();
    let r = funceq_check(&delta(), &sh, one(), 0b10, 0, c(1.4), 300, AfeOptions::default()).unwrap();
    assert!(r.pass, "{r:?}");
    let u = ShiftSet::unitary(vec![c(0.6)], vec![c(0.7)]).unwrap();
    let r = funceq_check(&Family::Unitary, &u, Twist::new(1, 1).unwrap(), 1, 1, c(2.4), 300, AfeOptions::default())
        .unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn funceq_defect_follows_the_lvalue_tolerance() {
    let sh = ShiftSet::real(&[0.6]).unwrap();
    let loose = AfeOptions { weight_eps: 1e-6, ..AfeOptions::default() };
    let a = funceq_check(&Family::Symplectic, &sh, one(), 1, 0, c(1.4), 500, loose).unwrap();
    let b = funceq_check(&Family::Symplectic, &sh, one(), 1, 0, c(1.4), 500, AfeOptions::default()).unwrap();
    assert!(a.defect > 100.0 * b.defect, "{} vs {}", a.defect, b.defect);
    assert!(a.defect < 1e-3);
}

#[test]
fn perron_on_an_empty_family() {
    let sh = ShiftSet::real(&[0.75]).unwrap();
    let g = TestFunction::canonical();
    let q = PerronOptions { step: 0.5, t_max: 50.0 };
    let r = perron_check(&Family::Symplectic, &sh, one(), 1000.0, &g, 2.5, 0, q, AfeOptions::default()).unwrap();
    assert_eq!((r.lhs, r.rhs), (c(0.0), c(0.0)));
}

#[test]
fn perron_quadrature_is_stable_in_the_step() {
    let sh = ShiftSet::real(&[0.75]).unwrap();
    let g = TestFunction::canonical();
    let run = |step| {
        let q = PerronOptions { step, ..PerronOptions::default() };
        perron_check(&Family::Symplectic, &sh, one(), 100.0, &g, 2.5, 400, q, AfeOptions::default()).unwrap()
    };
    let a = run(0.5);
    let b = run(0.25);
    assert!((a.lhs - b.lhs).norm() / a.lhs.norm() < 1e-4);
    assert!(a.defect < 1e-6, "{a:?}");
}

#[test]
fn every_recipe_term_is_a_transported_residue() {
    let tw = Twist::new(3, 5).unwrap();
    for k in 1..=2 {
        for fam in [Family::Unitary, Family::Symplectic, delta(), curve()] {
            let t = if fam.kind() == FamilyKind::Unitary { tw } else { Twist::m(3).unwrap() };
            let rep = correspondence(&fam, k, t, RecipeMode::Modified);
            assert!(rep.recipe_terms_matched, "{rep:#?}");
            assert!(rep.unmatched_residues.is_empty());
        }
    }
    let rep = correspondence(&curve(), 1, one(), RecipeMode::Modified);
    assert_eq!(rep.rows[1].residue_twist_power, 1);
}

#[test]
fn unmodified_elliptic_recipe_misses_the_odd_residues() {
    let rep = correspondence(&curve(), 2, one(), RecipeMode::Unmodified);
    assert!(rep.recipe_terms_matched);
    assert_eq!(rep.unmatched_residues, vec![1, 2]);
    // |J| = 2: H_{E,M} in the recipe, H_{E,MN^2} from the residue.
    assert!(rep.rows[3].factor_up_to_square);
}

#[test]
fn residue_values_equal_prediction_values() {
    let g = TestFunction::canonical();
    let o = EulerOptions { prime_limit: 1 << 14 };
    let sh = ShiftSet::real(&[0.65, 0.8]).unwrap();
    for fam in [Family::Symplectic, curve()] {
        let rec = Prediction::new(&fam, &sh, one(), &g, RecipeMode::Modified, &o).unwrap();
        let res = Prediction::from_symbolic(&fam, &sh, one(), &g, residue_symbolic(&fam, 2, one()), &o).unwrap();
        let (a, b) = (rec.at(1e4), res.at(1e4));
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.total - y.total).norm() <= 1e-12 * x.total.norm(), "{x:?} {y:?}");
        }
    }
}

#[test]
fn l_d_with_trivial_character() {
    let chi = DirichletCharacter::trivial();
    let v = l_d(c(2.0), &chi, 12);
    // 1, 5, 8, 12
    let hand = 1.0 + 1.0 / 25.0 + 1.0 / 64.0 + 1.0 / 144.0;
    assert!((v - c(hand)).norm() < 1e-14);
}
