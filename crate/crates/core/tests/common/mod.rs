//! Reference implementations used as oracles by the integration tests.
//! They share no code with the library beyond its public types.

#![allow(dead_code)]

use num::rational::BigRational;
use num::{BigInt, One, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn binom(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Carry-less multiply reduced by `poly` in GF(2^w).
pub fn gf_mul(a: u32, b: u32, poly: u32, w: u32) -> u32 {
    let (mut a, mut b, mut r) = (a, b, 0);
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & (1 << w) != 0 {
            a ^= poly;
        }
    }
    r
}

/// `a^(2^w - 2)` by square and multiply.
pub fn gf_inv(a: u32, poly: u32, w: u32) -> u32 {
    assert!(a != 0);
    let mut e = (1u64 << w) - 2;
    let (mut base, mut acc) = (a, 1);
    while e > 0 {
        if e & 1 == 1 {
            acc = gf_mul(acc, base, poly, w);
        }
        base = gf_mul(base, base, poly, w);
        e >>= 1;
    }
    acc
}

/// Rank over GF(2^w) by plain Gaussian elimination on a row-major copy.
pub fn gf_rank(rows: &[Vec<u32>], poly: u32, w: u32) -> usize {
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        let inv = gf_inv(m[rank][c], poly, w);
        for x in m[rank].iter_mut() {
            *x = gf_mul(*x, inv, poly, w);
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                let pivot = m[rank].clone();
                for (x, p) in m[r].iter_mut().zip(pivot) {
                    *x ^= gf_mul(f, p, poly, w);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `B_j` straight from its definition.
pub fn b_j(k: usize, wait: usize, mu: &Q, j: usize) -> Q {
    let r = (mu * Q::from_integer(BigInt::from(wait)))
        .floor()
        .to_integer();
    let r: usize = r.try_into().unwrap();
    if j > r {
        return Q::zero();
    }
    let numer = binom(wait - 1, j) * binom(k - wait, r - j);
    Q::new(numer * BigInt::from(k), BigInt::from(wait) * binom(k, r))
}

/// Achievable load from the closed form, threshold searched from the top.
pub fn load_oracle(k: usize, wait: usize, mu: &Q, n: usize) -> Q {
    if wait == 1 {
        return Q::zero();
    }
    let r: usize = (mu * Q::from_integer(BigInt::from(wait)))
        .floor()
        .to_integer()
        .try_into()
        .unwrap();
    let budget = Q::one() - q(r as i64, wait as i64);
    let mut s = r + 1;
    let mut tail = Q::zero();
    for j in (1..=r).rev() {
        tail += b_j(k, wait, mu, j);
        if tail > budget {
            break;
        }
        s = j;
    }
    while s <= r && b_j(k, wait, mu, s).is_zero() {
        s += 1;
    }
    let mut coded = Q::zero();
    let mut sum = Q::zero();
    for j in s..=r {
        coded += b_j(k, wait, mu, j) / Q::from_integer(BigInt::from(j));
        sum += b_j(k, wait, mu, j);
    }
    let l1 = &budget - &sum;
    let residual = if s >= 2 {
        let l2 = b_j(k, wait, mu, s - 1) / Q::from_integer(BigInt::from(s - 1));
        if l2 < l1 {
            l2
        } else {
            l1
        }
    } else {
        l1
    };
    (coded + residual) * Q::from_integer(BigInt::from(n))
}

/// Converse bound by exhaustive maximization over `t`.
pub fn bound_oracle(wait: usize, mu: &Q, n: usize) -> Q {
    let mut best = Q::zero();
    for t in 1..wait {
        let tm = mu * Q::from_integer(BigInt::from(t));
        let stored = if tm > Q::one() { Q::one() } else { tm };
        let rounds = wait.div_ceil(t);
        let v = (Q::one() - stored) * q(wait as i64, (rounds * (wait - t)) as i64);
        if v > best {
            best = v;
        }
    }
    best * Q::from_integer(BigInt::from(n))
}

/// `μN (1 + Σ_{j=K-q+1}^{K} 1/j)` in floating point.
pub fn order_statistic_oracle(scale: f64, k: usize, wait: usize) -> f64 {
    scale * (1.0 + (k - wait + 1..=k).map(|j| 1.0 / j as f64).sum::<f64>())
}

pub fn lcm_upto(r: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=r.max(1)).fold(1, |acc, x| acc / gcd(acc, x) * x)
}
