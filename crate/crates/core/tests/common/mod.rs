#![allow(dead_code)]

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use elladic::reps::MatrixRep;
use elladic::{Alphabet, Matrix, PadicScalar};

pub type IntMat = Vec<Vec<BigInt>>;

pub fn int_mat(rows: &[Vec<i64>]) -> IntMat {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

pub fn identity(d: usize) -> IntMat {
    (0..d).map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

pub fn mat_mul(a: &IntMat, b: &IntMat) -> IntMat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|t| &a[i][t] * &b[t][j]).sum()).collect())
        .collect()
}

pub fn mat_sub(a: &IntMat, b: &IntMat) -> IntMat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

pub fn mat_add(a: &IntMat, b: &IntMat) -> IntMat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn mat_scale(a: &IntMat, c: &BigInt) -> IntMat {
    a.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

pub fn det(a: &IntMat) -> BigInt {
    match a.len() {
        0 => BigInt::one(),
        1 => a[0][0].clone(),
        n => (0..n)
            .map(|j| {
                let minor: IntMat = a[1..].iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect()).collect();
                let s = if j % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                s * &a[0][j] * det(&minor)
            })
            .sum(),
    }
}

/// Coefficients `c_1, ..., c_d` of `det(x - A) = x^d - c_1 x^(d-1) + ... + (-1)^d c_d`,
/// as sums of principal minors.
pub fn char_coefficients(a: &IntMat) -> Vec<BigInt> {
    let d = a.len();
    (1..=d)
        .map(|k| {
            subsets(d, k)
                .into_iter()
                .map(|s| det(&s.iter().map(|&i| s.iter().map(|&j| a[i][j].clone()).collect()).collect()))
                .sum()
        })
        .collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

fn binom(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Characteristic polynomial equals `(x - 1)^d`.
pub fn is_unipotent_matrix(a: &IntMat) -> bool {
    let d = a.len();
    char_coefficients(a).iter().enumerate().all(|(k, c)| *c == binom(d, k + 1))
}

/// Oracle: every word of length `1..=max_len` in the images has
/// characteristic polynomial `(x - 1)^d`.
pub fn words_unipotent(images: &[IntMat], max_len: usize) -> bool {
    let mut layer: Vec<IntMat> = images.to_vec();
    for _ in 0..max_len {
        if !layer.iter().all(is_unipotent_matrix) {
            return false;
        }
        layer = layer.iter().flat_map(|w| images.iter().map(move |g| mat_mul(w, g))).collect();
    }
    true
}

pub fn valuation(n: &BigInt, p: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    Some(v)
}

pub fn to_padic(a: &IntMat, p: u64, precision: i64) -> Matrix {
    Matrix::from_rows(
        p,
        a.iter().map(|r| r.iter().map(|x| PadicScalar::from_int(x.clone(), p, precision)).collect()).collect(),
    )
    .unwrap()
}

/// Entrywise equality of a computed matrix with an exact integer matrix.
pub fn matches_int(m: &Matrix, a: &IntMat, precision: i64) -> bool {
    let p = m.prime();
    m.eq_at_precision(&to_padic(a, p, precision))
}

pub fn build_rep(alphabet: Arc<Alphabet>, p: u64, images: &[IntMat], precision: i64) -> MatrixRep {
    MatrixRep::new(alphabet, images.iter().map(|a| to_padic(a, p, precision)).collect()).unwrap()
}

pub fn random_int_mat(rng: &mut impl Rng, d: usize, bound: i64) -> IntMat {
    (0..d).map(|_| (0..d).map(|_| BigInt::from(rng.gen_range(-bound..=bound))).collect()).collect()
}

/// `Id + l^m X` with random integer `X`.
pub fn random_congruence(rng: &mut impl Rng, d: usize, p: u64, m: u32, bound: i64) -> IntMat {
    let x = random_int_mat(rng, d, bound);
    mat_add(&identity(d), &mat_scale(&x, &BigInt::from(p.pow(m))))
}

/// Random element of `SL_d(Z)` as a product of elementary matrices.
pub fn random_sl(rng: &mut impl Rng, d: usize) -> (IntMat, IntMat) {
    let mut g = identity(d);
    let mut g_inv = identity(d);
    for _ in 0..4 {
        let i = rng.gen_range(0..d);
        let mut j = rng.gen_range(0..d);
        while j == i {
            j = rng.gen_range(0..d);
        }
        let c = BigInt::from(rng.gen_range(-2i64..=2));
        let mut e = identity(d);
        e[i][j] = c.clone();
        let mut e_inv = identity(d);
        e_inv[i][j] = -c;
        g = mat_mul(&g, &e);
        g_inv = mat_mul(&e_inv, &g_inv);
    }
    (g, g_inv)
}

/// Upper unitriangular with off-diagonal entries divisible by `l^m`.
pub fn random_unitriangular(rng: &mut impl Rng, d: usize, p: u64, m: u32) -> IntMat {
    let mut a = identity(d);
    for i in 0..d {
        for j in (i + 1)..d {
            a[i][j] = BigInt::from(rng.gen_range(-3i64..=3) * p.pow(m) as i64);
        }
    }
    a
}

/// Random integer matrix whose determinant is prime to `p`.
pub fn random_invertible(rng: &mut impl Rng, d: usize, p: u64) -> IntMat {
    loop {
        let a = random_int_mat(rng, d, 4);
        if valuation(&det(&a), p) == Some(0) {
            return a;
        }
    }
}
