//! Trapezoid sums of `prod_f (sum_i w_i e(theta v_i))^k_f * K^_tau(theta)` on a
//! uniform grid `theta_k = k h`, `|k| <= k_max`.
//!
//! Each term is advanced by multiplying with `e(h v_i)` and re-anchored from
//! an exact double-double phase every `ANCHOR` steps, so drift stays at a few
//! hundred ulps. Chunks are fixed, so the reduction does not depend on the
//! thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dd::Dd;
use crate::expsums::e_frac;
use crate::kernel::SmoothKernel;
use crate::reduce::{tree_sum, Neumaier, NeumaierC};

const ANCHOR: i64 = 256;
const CHUNK: i64 = 1 << 15;

#[derive(Clone, Debug)]
pub(crate) struct Factor {
    pub freqs: Vec<Dd>,
    pub weights: Vec<f64>,
    pub power: u32,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct GridSpec {
    /// Fine spacing; the coarse rule uses `2 h`.
    pub h: f64,
    /// Even, so the coarse grid shares both endpoints.
    pub k_max: i64,
    pub tau: f64,
    /// Region edges: `|theta| < major` is the major arc, `<= minor` the
    /// minor arcs, everything else trivial.
    pub major: f64,
    pub minor: f64,
}

/// Per-region sums, indexed trivial, minor, major.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct GridSums {
    pub signed: [Complex64; 3],
    pub abs: [f64; 3],
    pub coarse: Complex64,
}

impl std::ops::Add for GridSums {
    type Output = GridSums;
    fn add(self, o: GridSums) -> GridSums {
        let mut r = self;
        for i in 0..3 {
            r.signed[i] += o.signed[i];
            r.abs[i] += o.abs[i];
        }
        r.coarse += o.coarse;
        r
    }
}

impl GridSums {
    pub fn total(&self) -> Complex64 {
        self.signed[0] + self.signed[1] + self.signed[2]
    }
}

struct Terms {
    freqs: Vec<Dd>,
    weights: Vec<f64>,
    bounds: Vec<usize>,
    powers: Vec<u32>,
}

impl Terms {
    fn new(factors: &[Factor]) -> Self {
        let mut t = Terms {
            freqs: Vec::new(),
            weights: Vec::new(),
            bounds: vec![0],
            powers: Vec::new(),
        };
        for f in factors {
            t.freqs.extend_from_slice(&f.freqs);
            t.weights.extend_from_slice(&f.weights);
            t.bounds.push(t.freqs.len());
            t.powers.push(f.power);
        }
        t
    }
}

fn phase(freq: Dd, theta: Dd) -> Complex64 {
    e_frac((freq * theta).frac_centered())
}

fn region(theta: f64, spec: &GridSpec) -> usize {
    let a = theta.abs();
    if a < spec.major {
        2
    } else if a <= spec.minor {
        1
    } else {
        0
    }
}

fn chunk_sums(terms: &Terms, spec: &GridSpec, kernel: &SmoothKernel, k0: i64, k1: i64) -> GridSums {
    let n = terms.freqs.len();
    let step: Vec<Complex64> = terms.freqs.iter().map(|&f| phase(f, Dd::from_f64(spec.h))).collect();
    let (mut zr, mut zi) = (vec![0.0; n], vec![0.0; n]);
    let (sr, si): (Vec<f64>, Vec<f64>) = step.iter().map(|z| (z.re, z.im)).unzip();
    let mut signed = [NeumaierC::default(), NeumaierC::default(), NeumaierC::default()];
    let mut abs = [Neumaier::default(), Neumaier::default(), Neumaier::default()];
    let mut coarse = NeumaierC::default();
    for k in k0..k1 {
        if (k - k0) % ANCHOR == 0 {
            let theta = Dd::from_f64(k as f64).mul_f64(spec.h);
            for i in 0..n {
                let z = phase(terms.freqs[i], theta);
                zr[i] = z.re;
                zi[i] = z.im;
            }
        }
        let mut f = Complex64::new(1.0, 0.0);
        for (j, w) in terms.bounds.windows(2).enumerate() {
            let (mut ar, mut ai) = (0.0, 0.0);
            for i in w[0]..w[1] {
                let wt = terms.weights[i];
                ar += wt * zr[i];
                ai += wt * zi[i];
            }
            f *= Complex64::new(ar, ai).powu(terms.powers[j]);
        }
        for i in 0..n {
            let (a, b) = (zr[i], zi[i]);
            zr[i] = a * sr[i] - b * si[i];
            zi[i] = a * si[i] + b * sr[i];
        }
        let theta = k as f64 * spec.h;
        let end = if k.abs() == spec.k_max { 0.5 } else { 1.0 };
        let v = f * (end * kernel.k_tau_hat(theta, spec.tau));
        let r = region(theta, spec);
        signed[r].add(v);
        abs[r].add(v.norm());
        if k % 2 == 0 {
            coarse.add(v);
        }
    }
    GridSums {
        signed: [signed[0].value(), signed[1].value(), signed[2].value()],
        abs: [abs[0].value(), abs[1].value(), abs[2].value()],
        coarse: coarse.value(),
    }
}

/// Unscaled sums; multiply by `h` (fine) or `2h` (coarse).
pub(crate) fn sweep(factors: &[Factor], spec: &GridSpec, kernel: &SmoothKernel) -> GridSums {
    let terms = Terms::new(factors);
    let lo = -spec.k_max;
    let total = 2 * spec.k_max + 1;
    let chunks = (total + CHUNK - 1) / CHUNK;
    let parts: Vec<GridSums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let k0 = lo + c * CHUNK;
            let k1 = (k0 + CHUNK).min(spec.k_max + 1);
            chunk_sums(&terms, spec, kernel, k0, k1)
        })
        .collect();
    tree_sum(&parts, GridSums::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::default_kernel;

    #[test]
    fn single_frequency_inverts_the_kernel() {
        // h sum_k e(k h mu) K^_tau(k h) = K_tau(mu) when 1/h > |mu| + tau.
        let kern = default_kernel().unwrap();
        let tau = 0.5;
        for mu in [0.0, 0.1, -0.3, 0.45, 0.7] {
            let f = Factor {
                freqs: vec![Dd::from_f64(mu)],
                weights: vec![1.0],
                power: 1,
            };
            let h = 1.0 / (2.0 * (1.0 + tau));
            let k_max = 2 * ((200.0f64 / tau / h / 2.0).ceil() as i64);
            let spec = GridSpec {
                h,
                k_max,
                tau,
                major: 1.0,
                minor: 10.0,
            };
            let s = sweep(&[f], &spec, &kern);
            let want = kern.k_tau(mu, tau);
            assert!((s.total().re * h - want).abs() < 1e-9, "mu {mu}: {} vs {want}", s.total().re * h);
            assert!((s.coarse.re * 2.0 * h - want).abs() < 1e-9);
            assert!(s.total().im.abs() < 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_direct_phases() {
        let kern = default_kernel().unwrap();
        let f = Factor {
            freqs: vec![Dd::from_f64(12345.678), Dd::from_f64(-3.25)],
            weights: vec![0.7, 1.3],
            power: 2,
        };
        let spec = GridSpec {
            h: 1e-3,
            k_max: 4000,
            tau: 0.01,
            major: 0.5,
            minor: 2.0,
        };
        let got = sweep(std::slice::from_ref(&f), &spec, &kern);
        let mut want = [NeumaierC::default(), NeumaierC::default(), NeumaierC::default()];
        for k in -spec.k_max..=spec.k_max {
            let th = Dd::from_f64(k as f64).mul_f64(spec.h);
            let s: Complex64 = f.freqs.iter().zip(&f.weights).map(|(&v, &w)| phase(v, th) * w).sum();
            let end = if k.abs() == spec.k_max { 0.5 } else { 1.0 };
            want[region(th.hi, &spec)].add(s * s * (end * kern.k_tau_hat(th.hi, spec.tau)));
        }
        for r in 0..3 {
            assert!((got.signed[r] - want[r].value()).norm() < 1e-10, "region {r}");
        }
    }
}
