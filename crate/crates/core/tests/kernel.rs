use proptest::prelude::*;
use pslab::kernel::{self, DEFAULT_GRID_POINTS};
use pslab::{default_kernel, make_kernel, SmoothKernel};
use std::sync::OnceLock;

fn kern() -> &'static SmoothKernel {
    static K: OnceLock<SmoothKernel> = OnceLock::new();
    K.get_or_init(|| default_kernel().unwrap())
}

/// The smooth step `f(t) / (f(t) + f(1-t))` with `f(t) = exp(-a/t)`.
fn step(t: f64, a: f64) -> f64 {
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-a / t).exp() };
    f(t) / (f(t) + f(1.0 - t))
}

fn bump(x: f64, a: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.25 {
        1.0
    } else if ax >= 0.5 {
        0.0
    } else {
        step(4.0 * (0.5 - ax), a)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (l, r) = (simpson(f, a, m), simpson(f, m, b));
    if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
        return l + r + (l + r - whole) / 15.0;
    }
    adaptive(f, a, m, tol / 2.0, l, depth - 1) + adaptive(f, m, b, tol / 2.0, r, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adaptive(f, a, b, tol, simpson(f, a, b), 40)
}

#[test]
fn bump_matches_the_smooth_step() {
    for i in 0..=2000 {
        let x = -0.6 + 1.2 * i as f64 / 2000.0;
        assert!((kern().k_tilde(x) - bump(x, 1.0)).abs() < 1e-15, "x = {x}");
        assert!((kernel::k_tilde(x, 2.5) - bump(x, 2.5)).abs() < 1e-15);
    }
}

#[test]
fn self_convolution_at_a_tenth() {
    let x = 0.1;
    let want = integrate(&|y| bump(y, 1.0) * bump(x - y, 1.0), -0.5, 0.5, 1e-12);
    assert!((kern().k(x) - want).abs() < 1e-8, "{} vs {want}", kern().k(x));
}

#[test]
fn transform_matches_cosine_quadrature() {
    for t in [0.0, 0.75, 3.0, 10.5] {
        let half = integrate(&|x| bump(x, 1.0) * (std::f64::consts::TAU * t * x).cos(), -0.5, 0.5, 1e-13);
        let want = half * half;
        assert!((kern().k_hat(t) - want).abs() < 1e-8, "t = {t}: {} vs {want}", kern().k_hat(t));
    }
}

#[test]
fn sandwich_and_nonnegative_transform() {
    let k = kern();
    let mut points = 0;
    for (x, v) in k.k_table() {
        let lower = if x.abs() <= 0.25 { 0.25 } else { 0.0 };
        let upper = if x.abs() <= 1.0 { 1.0 } else { 0.0 };
        assert!(v >= lower - 1e-10 && v <= upper + 1e-10, "x = {x}: {v}");
        points += 1;
    }
    assert!(points >= 10_000);
    assert!(k.hat_table().all(|(_, v)| v >= -1e-12));
    assert!(k.k_at_zero() >= 0.25);
    assert!((0.25..=1.0).contains(&k.hat_at_zero()));
}

#[test]
fn inversion_and_parseval() {
    let k = kern();
    assert!((k.hat_integral() - k.k_at_zero()).abs() < 1e-6 * k.k_at_zero());
    let (space, freq) = k.parseval();
    assert!((space - freq).abs() <= 1e-5 * space, "{space} vs {freq}");
}

#[test]
fn tail_constant_bounds_the_table() {
    let k = kern();
    let j = k.hat_tail_order;
    let c = k.log_tail_constant(j).exp();
    assert!(c.is_finite());
    for (t, v) in k.hat_table() {
        assert!(v <= c * (1.0 + t.abs()).powi(-(j as i32)) * (1.0 + 1e-12));
    }
}

#[test]
fn rejects_bad_parameters() {
    assert!(make_kernel(0.0, DEFAULT_GRID_POINTS).is_err());
    assert!(make_kernel(1.0, 1000).is_err());
}

#[test]
fn sharper_steps_still_certify() {
    let k = make_kernel(3.0, 4097).unwrap();
    assert_eq!(k.grid_points(), 4097);
    assert!(k.k_at_zero() >= 0.25);
}

proptest! {
    #[test]
    fn kernel_is_even_and_supported(x in -3.0f64..3.0) {
        let k = kern();
        prop_assert_eq!(k.k(x), k.k(-x));
        if x.abs() >= 1.0 {
            prop_assert_eq!(k.k(x), 0.0);
        }
        prop_assert!(k.k(x) <= 1.0);
    }

    #[test]
    fn scaled_kernel_support(x in -2.0f64..2.0, tau in 0.01f64..1.0) {
        let k = kern();
        if x.abs() >= tau {
            prop_assert_eq!(k.k_tau(x, tau), 0.0);
        }
        prop_assert!(k.k_tau_hat(x * 100.0, tau) >= -1e-12 * tau);
    }
}
