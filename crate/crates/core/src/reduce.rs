//! Reproducible summation.
//!
//! Terms are grouped in fixed blocks of [`BLOCK`] indices, each block is
//! summed sequentially with Neumaier compensation, and block sums are merged
//! in a fixed pairwise tree. Block boundaries do not depend on the number of
//! worker threads, so results are bit-identical for any pool size.

use num_complex::Complex64;
use rayon::prelude::*;

pub const BLOCK: usize = 1024;

#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierC {
    re: Neumaier,
    im: Neumaier,
}

impl NeumaierC {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Pairwise sum in a fixed tree shape.
pub fn tree_sum<T: Copy + std::ops::Add<Output = T>>(xs: &[T], zero: T) -> T {
    match xs.len() {
        0 => zero,
        1 => xs[0],
        n => {
            let mid = n.next_power_of_two() / 2;
            tree_sum(&xs[..mid], zero) + tree_sum(&xs[mid..], zero)
        }
    }
}

/// `sum_{i < n} f(i)` with deterministic blocking.
pub fn det_sum_c<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let blocks: Vec<Complex64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = NeumaierC::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    tree_sum(&blocks, Complex64::new(0.0, 0.0))
}

/// Real counterpart of [`det_sum_c`].
pub fn det_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks: Vec<f64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = Neumaier::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    tree_sum(&blocks, 0.0)
}
