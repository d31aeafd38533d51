mod common;

use common::{Big, Q};
use proptest::prelude::*;
use pslab::psprimes::{self, ceil_pow_gamma, members_up_to, ps_primes_in, psi};
use pslab::{build_window, is_ps_member, pi_gamma, PSContext};

const GAMMAS: [Q; 4] = [Q(1, 2), Q(3, 4), Q(9, 10), Q(19, 20)];

fn ctx(g: Q) -> PSContext {
    PSContext::new(g.f64(), 1.5).unwrap()
}

#[test]
fn membership_matches_exact_test() {
    for g in GAMMAS {
        let cx = ctx(g);
        for n in 1..=3000 {
            assert_eq!(is_ps_member(n, &cx).unwrap(), common::member(n, g), "n = {n}, gamma = {g:?}");
        }
    }
}

#[test]
fn members_match_the_m_scan() {
    for g in GAMMAS {
        let got = members_up_to(20_000.0, &ctx(g)).unwrap();
        assert_eq!(got, common::m_scan(20_000, g), "gamma = {g:?}");
    }
}

#[test]
fn window_matches_filtered_scan() {
    let g = Q(9, 10);
    let cx = ctx(g);
    for x in [4.0, 17.5, 1000.0, 4099.0] {
        let w = build_window(x, &cx).unwrap();
        let want: Vec<u64> = common::window(x).filter(|&n| common::member(n, g)).collect();
        assert_eq!(w.members, want, "X = {x}");
        let primes: Vec<u64> = want.iter().copied().filter(|&n| common::is_prime(n)).collect();
        assert_eq!(w.primes, primes);
        for (p, l) in w.primes.iter().zip(&w.log_weights) {
            assert_eq!(*l, (*p as f64).ln());
        }
    }
}

#[test]
fn prime_count_matches_enumeration() {
    let g = Q(19, 20);
    let pg = pi_gamma(10_000.0, &ctx(g)).unwrap();
    let want = common::m_scan(10_000, g).into_iter().filter(|&n| common::is_prime(n)).count() as u64;
    assert_eq!(pg.count, want);
    assert_eq!(ps_primes_in(0, 10_000, &ctx(g)).unwrap().len() as u64, want);
}

#[test]
fn psi_gamma_matches_big_float() {
    let mut b = Big::default();
    for g in [Q(9, 10), Q(19, 20)] {
        let cx = ctx(g);
        for n in (1..400).chain([65_535, 1_000_000, 123_456_789]) {
            let want = Big::f64(&b.psi_gamma(n, g));
            let got = psprimes::psi_gamma(n, &cx).unwrap();
            assert!((got - want).abs() < 1e-13, "n = {n}: {got} vs {want}");
        }
    }
}

#[test]
fn rejects_small_windows_and_counts() {
    let cx = ctx(Q(9, 10));
    assert!(build_window(3.5, &cx).is_err());
    assert!(pi_gamma(9.0, &cx).is_err());
    assert!(psprimes::indicator(0, &cx).is_err());
}

fn gamma_strategy() -> impl Strategy<Value = Q> {
    prop::sample::select(GAMMAS.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ceiling_is_exact(n in 1u64..1u64 << 40, g in gamma_strategy()) {
        prop_assert_eq!(ceil_pow_gamma(n, &ctx(g)).unwrap(), common::ceil_pow(n, g));
    }

    #[test]
    fn indicator_is_membership(n in 1u64..1u64 << 40, g in gamma_strategy()) {
        let cx = ctx(g);
        let ind = psprimes::indicator(n, &cx).unwrap();
        prop_assert_eq!(ind == 1, is_ps_member(n, &cx).unwrap());
        prop_assert_eq!(ind as i64, common::indicator(n, g));
    }

    #[test]
    fn sawtooth_is_bounded(x in -1e9f64..1e9) {
        let v = psi(x);
        prop_assert!((-0.5..0.5).contains(&v));
    }

    #[test]
    fn windows_tile_the_members(k in 3u32..14, frac in 0.0f64..1.0) {
        let cx = ctx(Q(9, 10));
        let x = 2f64.powi(k as i32) * (1.0 + frac);
        let w = build_window(x, &cx).unwrap();
        let all = members_up_to(x, &cx).unwrap();
        let inside: Vec<u64> = all.into_iter().filter(|n| w.int_range().contains(n)).collect();
        prop_assert_eq!(w.members, inside);
    }

    #[test]
    fn prime_count_is_monotone(a in 10.0f64..5e4, b in 10.0f64..5e4) {
        let cx = ctx(Q(19, 20));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(pi_gamma(lo, &cx).unwrap().count <= pi_gamma(hi, &cx).unwrap().count);
    }
}
