use proptest::prelude::*;

use qmoments::arith::*;
use qmoments::coeffs::{ramanujan_tau, EllipticCurve, HeckeSource, ModularForm};
use qmoments::C64;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Legendre symbol by Euler's criterion.
fn legendre(a: i64, p: i64) -> i32 {
    let r = a.rem_euclid(p);
    if r == 0 {
        return 0;
    }
    let mut acc: i128 = 1;
    let (mut b, mut e) = (r as i128, (p - 1) / 2);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p as i128;
        }
        b = b * b % p as i128;
        e >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kronecker_is_completely_multiplicative(d in -500i64..500, m in 1i64..200, n in 1i64..200) {
        prop_assert_eq!(kronecker(d, m * n), kronecker(d, m) * kronecker(d, n));
    }

    #[test]
    fn kronecker_agrees_with_euler_criterion(d in -500i64..500, i in 1usize..40) {
        let p = primes_up_to(200)[i];
        prop_assert_eq!(kronecker(d, p as i64), legendre(d, p as i64));
    }

    #[test]
    fn fundamental_characters_are_periodic(i in 0usize..60, n in 1i64..500) {
        let ds = fundamental_discriminants_in(1, 400, 1);
        let d = ds[i % ds.len()];
        prop_assert_eq!(d.chi(n), d.chi(n + d.get() as i64));
    }

    #[test]
    fn mobius_and_phi_are_multiplicative(m in 1u64..3000, n in 1u64..3000) {
        prop_assume!(gcd(m, n) == 1);
        prop_assert_eq!(mobius(m * n).unwrap(), mobius(m).unwrap() * mobius(n).unwrap());
        prop_assert_eq!(euler_phi(m * n).unwrap(), euler_phi(m).unwrap() * euler_phi(n).unwrap());
    }

    #[test]
    fn phi_counts_units(n in 1u64..400) {
        let units = (1..=n).filter(|&a| gcd(a, n) == 1).count() as u64;
        prop_assert_eq!(euler_phi(n).unwrap(), units);
    }

    #[test]
    fn a_factor_depends_on_the_radical(n in 1u64..100_000) {
        prop_assert_eq!(a_factor(n).unwrap(), a_factor(radical(n).unwrap()).unwrap());
        prop_assert_eq!(a_factor(n * n).unwrap(), a_factor(n).unwrap());
    }

    #[test]
    fn gen_divisor_is_multiplicative(m in 1u64..300, n in 1u64..300, r in 0.1f64..1.5, t in -2.0f64..2.0) {
        prop_assume!(gcd(m, n) == 1);
        let s = [C64::new(r, t), C64::new(0.5, 0.0), C64::new(-r, 0.3)];
        let lhs = gen_divisor(&s, m * n).unwrap();
        let rhs = gen_divisor(&s, m).unwrap() * gen_divisor(&s, n).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn gen_divisor_at_zero_counts_factorizations(n in 1u64..2000) {
        let d = factorize(n).unwrap().divisors().len() as f64;
        let v = gen_divisor(&[C64::new(0.0, 0.0); 2], n).unwrap();
        prop_assert!((v.re - d).abs() < 1e-9 && v.im.abs() < 1e-9);
    }
}

#[test]
fn hasse_bound_for_11a1() {
    let e = EllipticCurve::c11a1();
    for p in primes_up_to(10_000) {
        if p == 11 {
            continue;
        }
        let l = e.lambda_p(p).unwrap();
        assert!(l.abs() < 2.0, "p = {p}: {l}");
    }
}

#[test]
fn tau_bound_for_delta() {
    // |a(n)| <= d(n) for the normalized coefficients.
    let tau = ramanujan_tau(10_000).unwrap();
    let f = ModularForm::delta();
    for n in 1..=10_000u64 {
        let a = tau[n as usize] as f64 / (n as f64).powf(5.5);
        let d = factorize(n).unwrap().divisors().len() as f64;
        assert!(a.abs() <= d, "n = {n}");
        assert!((f.hecke_coefficient(n).unwrap() - a).abs() <= 1e-9 * d, "n = {n}");
    }
}

#[test]
fn curve_coefficients_match_the_eta_product() {
    // 11a1 is q prod (1 - q^n)^2 (1 - q^{11 n})^2.
    const L: usize = 400;
    let mut series = vec![0i64; L + 1];
    series[1] = 1;
    for step in (1..=L).chain((11..=L).step_by(11)) {
        for _ in 0..2 {
            for i in (step..=L).rev() {
                series[i] -= series[i - step];
            }
        }
    }
    let e = EllipticCurve::c11a1();
    let lam = e.coefficients(L).unwrap();
    for n in 1..=L {
        let want = series[n] as f64 / (n as f64).sqrt();
        assert!((lam[n] - want).abs() < 1e-9, "n = {n}: {} vs {want}", lam[n]);
    }
}
