//! Finite fields of small prime-power order, as full lookup tables.
//!
//! Elements of GF(p^e) are encoded as integers `0..q` whose base-`p` digits
//! are the coefficients of a polynomial of degree `< e` (least significant
//! digit = constant term). The modulus is the monic irreducible polynomial
//! of degree `e` whose lower coefficients, read as such an integer, are
//! smallest.

use crate::error::{Error, Result};

/// Splits `q` into `(p, e)` with `q = p^e`, or `None`.
pub fn factor_prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q {
        if q.is_multiple_of(p) {
            break;
        }
        p += 1;
    }
    if !q.is_multiple_of(p) {
        // q itself is prime
        return Some((q, 1));
    }
    let mut rest = q;
    let mut e = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p, e))
}

pub fn is_prime_power(q: u64) -> bool {
    factor_prime_power(q).is_some()
}

#[derive(Debug, Clone)]
pub struct FiniteField {
    q: usize,
    p: usize,
    degree: usize,
    modulus: Vec<usize>,
    add: Vec<usize>,
    mul: Vec<usize>,
    neg: Vec<usize>,
    inv: Vec<usize>,
}

impl FiniteField {
    pub fn new(q: usize) -> Result<Self> {
        let (p, e) = factor_prime_power(q as u64).ok_or(Error::NotPrimePower(q as u64))?;
        let (p, e) = (p as usize, e as usize);
        let modulus = least_irreducible(p, e);

        let digits = |mut x: usize| -> Vec<usize> {
            let mut d = vec![0; e];
            for slot in d.iter_mut() {
                *slot = x % p;
                x /= p;
            }
            d
        };
        let encode = |d: &[usize]| -> usize { d.iter().rev().fold(0, |acc, &c| acc * p + c) };
        let elems: Vec<Vec<usize>> = (0..q).map(digits).collect();

        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            for b in 0..q {
                let sum: Vec<usize> = elems[a].iter().zip(&elems[b]).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = encode(&sum);
                mul[a * q + b] = encode(&poly_mul_mod(&elems[a], &elems[b], &modulus, p));
            }
        }
        let mut neg = vec![0; q];
        let mut inv = vec![0; q];
        for a in 0..q {
            neg[a] = (0..q).find(|&b| add[a * q + b] == 0).unwrap();
            if a != 0 {
                inv[a] = (1..q)
                    .find(|&b| mul[a * q + b] == 1)
                    .expect("modulus is irreducible, so every nonzero element is a unit");
            }
        }

        Ok(FiniteField {
            q,
            p,
            degree: e,
            modulus,
            add,
            mul,
            neg,
            inv,
        })
    }

    pub fn order(&self) -> usize {
        self.q
    }

    pub fn characteristic(&self) -> usize {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients of the modulus, constant term first; the last entry is 1.
    pub fn modulus(&self) -> &[usize] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.q + b]
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.q + b]
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.neg[a]
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg[b])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: usize) -> Option<usize> {
        (a != 0).then(|| self.inv[a])
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.q
    }
}

fn trim(mut f: Vec<usize>) -> Vec<usize> {
    while f.last() == Some(&0) {
        f.pop();
    }
    f
}

/// Remainder of `f` modulo the monic polynomial `m` over Z_p.
fn poly_rem(f: &[usize], m: &[usize], p: usize) -> Vec<usize> {
    let mut r = trim(f.to_vec());
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        for (i, &c) in m.iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - (lead * c) % p) % p;
        }
        r = trim(r);
    }
    r
}

fn poly_mul_mod(a: &[usize], b: &[usize], m: &[usize], p: usize) -> Vec<usize> {
    let mut prod = vec![0; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    let mut r = poly_rem(&prod, m, p);
    r.resize(m.len() - 1, 0);
    r
}

/// Monic polynomial of degree `deg` whose lower coefficients are the base-`p`
/// digits of `code`.
fn monic_from_code(mut code: usize, deg: usize, p: usize) -> Vec<usize> {
    let mut f = vec![0; deg + 1];
    for c in f.iter_mut().take(deg) {
        *c = code % p;
        code /= p;
    }
    f[deg] = 1;
    f
}

fn is_irreducible(f: &[usize], p: usize) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        for code in 0..p.pow(d as u32) {
            let g = monic_from_code(code, d, p);
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn least_irreducible(p: usize, e: usize) -> Vec<usize> {
    (0..p.pow(e as u32))
        .map(|code| monic_from_code(code, e, p))
        .find(|f| is_irreducible(f, p))
        .expect("an irreducible polynomial of every degree exists over a prime field")
}
