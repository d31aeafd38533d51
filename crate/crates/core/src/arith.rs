//! Primality and small multiplicative functions.

/// Witnesses sufficient for every `n < 3.3e24`.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in MR_BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest-prime-factor table for `0..=n`.
pub fn spf_table(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Mobius function from a smallest-prime-factor table.
pub fn mobius(m: usize, spf: &[u32]) -> i8 {
    let mut m = m;
    let mut sign = 1i8;
    while m > 1 {
        let p = spf[m] as usize;
        m /= p;
        if m % p == 0 {
            return 0;
        }
        sign = -sign;
    }
    sign
}

/// von Mangoldt function from a smallest-prime-factor table.
pub fn mangoldt(m: usize, spf: &[u32]) -> f64 {
    if m < 2 {
        return 0.0;
    }
    let p = spf[m] as usize;
    let mut r = m;
    while r % p == 0 {
        r /= p;
    }
    if r == 1 {
        (p as f64).ln()
    } else {
        0.0
    }
}
