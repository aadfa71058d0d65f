//! Finite field tower `F_q ⊂ F_{q^d} ⊂ F_{q^m}` for every divisor `d` of `m`.
//!
//! Every level is stored as a polynomial-basis field over the prime field
//! together with full discrete-log, antilog and Zech tables, so that a
//! nonzero element is just its discrete logarithm with respect to the level
//! generator. Multiplication is an addition of logs and addition goes through
//! the Zech table; both are O(1).

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;

use crate::error::{Error, Result};

/// Default cap on `q^m`; keeps the discrete-log tables below a few hundred MB.
pub const DEFAULT_MAX_FIELD_SIZE: u64 = 1 << 24;

/// Raw element of one level: a discrete-log index, or [`Elem::ZERO`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elem(u32);

impl Elem {
    pub const ZERO: Elem = Elem(u32::MAX);
    pub const ONE: Elem = Elem(0);

    #[inline]
    pub const fn from_log(k: u32) -> Elem {
        Elem(k)
    }

    #[inline]
    pub fn log(self) -> Option<u32> {
        if self.is_zero() {
            None
        } else {
            Some(self.0)
        }
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == u32::MAX
    }

    #[inline]
    pub fn is_one(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.log() {
            None => write!(f, "0"),
            Some(k) => write!(f, "g^{k}"),
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `q = p^f` with `p` prime, or `None`.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    let [p] = prime_factors(q)[..] else {
        return None;
    };
    let (mut r, mut f) = (q, 0);
    while r % p == 0 {
        r /= p;
        f += 1;
    }
    Some((p, f))
}

pub(crate) fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub(crate) fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

// Polynomials over F_p as coefficient vectors, constant term first.
mod fp_poly {
    pub fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let mut r = a.to_vec();
        trim(&mut r);
        let dm = m.len() - 1;
        let inv_lead = inv_mod(m[dm], p);
        while r.len() > dm {
            let top = r.len() - 1;
            let c = r[top] * inv_lead % p;
            if c != 0 {
                for (i, &mi) in m.iter().enumerate() {
                    let idx = top - dm + i;
                    r[idx] = (r[idx] + p - c * mi % p) % p;
                }
            }
            trim(&mut r);
        }
        r
    }

    pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u32; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(&mut out);
        out
    }

    pub fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        rem(&mul(a, b, p), m, p)
    }

    pub fn powmod(base: &[u32], mut e: u128, m: &[u32], p: u32) -> Vec<u32> {
        let mut acc = rem(&[1], m, p);
        let mut b = rem(base, m, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &b, m, p);
            }
            b = mulmod(&b, &b, m, p);
            e >>= 1;
        }
        acc
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let n = a.len().max(b.len());
        let mut out: Vec<u32> = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(&mut out);
        out
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        trim(&mut x);
        trim(&mut y);
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = y;
            y = r;
        }
        x
    }

    pub fn inv_mod(a: u32, p: u32) -> u32 {
        let mut r = 1u64;
        let mut b = a as u64 % p as u64;
        let mut e = p as u64 - 2;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p as u64;
            }
            b = b * b % p as u64;
            e >>= 1;
        }
        r as u32
    }

    /// Rabin-style test: no common factor with `x^{p^i} - x` for `i <= deg/2`.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let deg = f.len() - 1;
        if deg == 1 {
            return true;
        }
        if f[0] == 0 {
            return false;
        }
        let x = vec![0, 1];
        let mut xp = x.clone();
        for _ in 1..=deg / 2 {
            xp = powmod(&xp, p as u128, f, p);
            let g = gcd(f, &sub(&xp, &x, p), p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}

/// Lexicographically smallest monic irreducible polynomial of the given degree
/// over `F_p`, comparing coefficient sequences from the constant term up.
pub fn smallest_irreducible(p: u32, degree: usize) -> Vec<u32> {
    let total = (p as u64).pow(degree as u32);
    for n in 0..total {
        // most significant digit of `n` is the constant term
        let mut coeffs = vec![0u32; degree + 1];
        let mut rest = n;
        for i in (0..degree).rev() {
            coeffs[i] = (rest % p as u64) as u32;
            rest /= p as u64;
        }
        coeffs[degree] = 1;
        if fp_poly::is_irreducible(&coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// One level `F_{q^d}` of the tower.
#[derive(Clone)]
pub struct LevelField {
    p: u32,
    q: u64,
    level: u32,
    prime_degree: u32,
    order: u64,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    zech: Vec<Elem>,
    neg_one: u32,
}

impl fmt::Debug for LevelField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelField")
            .field("p", &self.p)
            .field("level", &self.level)
            .field("order", &self.order)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl LevelField {
    fn build(p: u32, f: u32, level: u32) -> LevelField {
        let prime_degree = f * level;
        let order = (p as u64).pow(prime_degree);
        let q = (p as u64).pow(f);
        let modulus = smallest_irreducible(p, prime_degree as usize);
        let n = order - 1;
        let factors = prime_factors(n);
        let to_digits = |mut v: u64| -> Vec<u32> {
            let mut d = Vec::with_capacity(prime_degree as usize);
            for _ in 0..prime_degree {
                d.push((v % p as u64) as u32);
                v /= p as u64;
            }
            fp_poly::trim(&mut d);
            d
        };
        let from_digits = |d: &[u32]| -> u64 { d.iter().rev().fold(0u64, |acc, &c| acc * p as u64 + c as u64) };
        let one = vec![1u32];
        let generator = (1..order)
            .map(&to_digits)
            .find(|cand| {
                fp_poly::powmod(cand, n as u128, &modulus, p) == one
                    && factors.iter().all(|&r| fp_poly::powmod(cand, (n / r) as u128, &modulus, p) != one)
            })
            .expect("multiplicative group of a finite field is cyclic");

        let mut exp = Vec::with_capacity(n as usize);
        let mut log = vec![u32::MAX; order as usize];
        let mut cur = one.clone();
        for k in 0..n {
            let idx = from_digits(&cur);
            exp.push(idx as u32);
            log[idx as usize] = k as u32;
            cur = fp_poly::mulmod(&cur, &generator, &modulus, p);
        }
        debug_assert_eq!(cur, one);

        // 1 + g^k, computed on digit vectors
        let mut zech = Vec::with_capacity(n as usize);
        for k in 0..n {
            let mut digits = to_digits(exp[k as usize] as u64);
            if digits.is_empty() {
                digits.push(0);
            }
            digits[0] = (digits[0] + 1) % p;
            let idx = from_digits(&digits);
            zech.push(if idx == 0 { Elem::ZERO } else { Elem(log[idx as usize]) });
        }
        let neg_one = if p == 2 { 0 } else { (n / 2) as u32 };
        LevelField { p, q, level, prime_degree, order, modulus, exp, log, zech, neg_one }
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of elements `q^level`.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// Order of the multiplicative group.
    #[inline]
    pub fn group_order(&self) -> u64 {
        self.order - 1
    }

    /// Defining polynomial over `F_p`, constant term first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn degree_over_prime(&self) -> u32 {
        self.prime_degree
    }

    #[inline]
    pub fn generator(&self) -> Elem {
        if self.order == 2 {
            Elem::ONE
        } else {
            Elem(1)
        }
    }

    #[inline]
    fn n(&self) -> u32 {
        (self.order - 1) as u32
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a.is_zero() || b.is_zero() {
            return Elem::ZERO;
        }
        let s = a.0 as u64 + b.0 as u64;
        let n = self.n() as u64;
        Elem(if s >= n { s - n } else { s } as u32)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        let n = self.n();
        let diff = if b.0 >= a.0 { b.0 - a.0 } else { b.0 + n - a.0 };
        let z = self.zech[diff as usize];
        self.mul(a, z)
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        self.mul(a, Elem(self.neg_one))
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn inv(&self, a: Elem) -> Result<Elem> {
        match a.log() {
            None => Err(Error::ZeroInverse),
            Some(0) => Ok(Elem::ONE),
            Some(k) => Ok(Elem(self.n() - k)),
        }
    }

    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e` for any integer exponent; `0^0 = 1`, negative powers of zero fail.
    pub fn pow(&self, a: Elem, e: i64) -> Result<Elem> {
        match a.log() {
            None if e == 0 => Ok(Elem::ONE),
            None if e < 0 => Err(Error::ZeroInverse),
            None => Ok(Elem::ZERO),
            Some(k) => {
                let n = self.n() as i128;
                Ok(Elem((k as i128 * e as i128).rem_euclid(n) as u32))
            }
        }
    }

    /// `x ↦ x^{q^times}` (Frobenius relative to the base field `F_q`).
    pub fn frobenius(&self, a: Elem, times: u32) -> Elem {
        match a.log() {
            None => Elem::ZERO,
            Some(k) => {
                let n = self.n() as u128;
                let mut qpow = 1u128;
                for _ in 0..(times % self.level.max(1)) {
                    qpow = qpow * self.q as u128 % n.max(1);
                }
                Elem((k as u128 * qpow % n.max(1)) as u32)
            }
        }
    }

    /// Integer encoding `Σ c_i p^i` of the polynomial-basis coordinates.
    pub fn to_index(&self, a: Elem) -> u32 {
        match a.log() {
            None => 0,
            Some(k) => self.exp[k as usize],
        }
    }

    pub fn from_index(&self, idx: u32) -> Result<Elem> {
        if idx as u64 >= self.order {
            return Err(Error::Parse(format!(
                "element index {idx} out of range for a field of {} elements",
                self.order
            )));
        }
        Ok(if idx == 0 { Elem::ZERO } else { Elem(self.log[idx as usize]) })
    }

    pub fn from_log(&self, k: u64) -> Elem {
        Elem((k % self.group_order()) as u32)
    }

    /// Image of the integer `c` under `Z → F_p ⊂ F_{q^d}`.
    pub fn from_int(&self, c: i64) -> Elem {
        let r = c.rem_euclid(self.p as i64) as u32;
        if r == 0 {
            Elem::ZERO
        } else {
            Elem(self.log[r as usize])
        }
    }

    /// Trace down to the prime field, returned as a residue in `0..p`.
    pub fn absolute_trace(&self, a: Elem) -> u32 {
        let mut acc = Elem::ZERO;
        let mut cur = a;
        for _ in 0..self.prime_degree {
            acc = self.add(acc, cur);
            cur = self.pow(cur, self.p as i64).expect("nonnegative exponent");
        }
        let idx = self.to_index(acc);
        debug_assert!(idx < self.p, "trace must land in the prime field");
        idx
    }

    /// All elements, zero first and then in discrete-log order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        std::iter::once(Elem::ZERO).chain((0..self.n()).map(Elem))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.n()).map(Elem)
    }

    /// Multiplicative order of a nonzero element.
    pub fn mult_order(&self, a: Elem) -> Result<u64> {
        let k = a.log().ok_or(Error::ZeroInverse)? as u64;
        let n = self.group_order();
        Ok(n / n.gcd(&k))
    }
}

/// An element of some level of a [`FieldTower`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    pub level: u32,
    pub elem: Elem,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}@{}", self.elem, self.level)
    }
}

impl FieldElement {
    pub fn new(level: u32, elem: Elem) -> FieldElement {
        FieldElement { level, elem }
    }

    pub fn is_zero(&self) -> bool {
        self.elem.is_zero()
    }
}

/// The tower of all `F_{q^d}`, `d | m`, with compatible embeddings.
#[derive(Debug)]
pub struct FieldTower {
    p: u32,
    f: u32,
    q: u64,
    m: u32,
    levels: BTreeMap<u32, LevelField>,
    // (from, to) -> log of the image of the `from` generator in level `to`
    embed_log: BTreeMap<(u32, u32), u64>,
}

impl FieldTower {
    pub fn build(p: u64, f: u32, m: u32) -> Result<FieldTower> {
        Self::build_with_cap(p, f, m, DEFAULT_MAX_FIELD_SIZE)
    }

    pub fn build_with_cap(p: u64, f: u32, m: u32, cap: u64) -> Result<FieldTower> {
        if !is_prime(p) || p > u16::MAX as u64 {
            return Err(Error::NotPrime(p));
        }
        if f == 0 || m == 0 {
            return Err(Error::Precondition("field exponents must be positive".into()));
        }
        let size = (p as u128).checked_pow(f * m).unwrap_or(u128::MAX);
        if size > cap as u128 || size > u32::MAX as u128 {
            return Err(Error::FieldTooLarge { size, cap });
        }
        let p32 = p as u32;
        let q = p.pow(f);
        let mut levels = BTreeMap::new();
        for d in divisors(m) {
            levels.insert(d, LevelField::build(p32, f, d));
        }

        // root of each defining polynomial in the top level, smallest log first
        let top = &levels[&m];
        let mut to_top = BTreeMap::new();
        for (&d, lf) in &levels {
            let k = top.group_order() / lf.group_order();
            let root = std::iter::once(Elem::ZERO)
                .chain((0..lf.group_order()).map(|j| top.from_log(k * j)))
                .find(|&y| eval_prime_poly(top, lf.modulus(), y).is_zero())
                .expect("subfield contains a root of its defining polynomial");
            // image of the level generator: its digit vector evaluated at the root
            let digits = {
                let mut v = lf.to_index(lf.generator()) as u64;
                let mut ds = Vec::new();
                for _ in 0..lf.degree_over_prime() {
                    ds.push((v % p) as i64);
                    v /= p;
                }
                ds
            };
            let mut img = Elem::ZERO;
            let mut ypow = Elem::ONE;
            for c in digits {
                img = top.add(img, top.mul(top.from_int(c), ypow));
                ypow = top.mul(ypow, root);
            }
            to_top.insert(d, img.log().expect("generator image is nonzero") as u64);
        }

        let mut embed_log = BTreeMap::new();
        let nm = top.group_order();
        for &d in levels.keys() {
            for &e in levels.keys() {
                if e % d != 0 {
                    continue;
                }
                let qe1 = levels[&e].group_order();
                let qd1 = levels[&d].group_order();
                let ke = nm / qe1;
                let kd = nm / qd1;
                let ue = to_top[&e] / ke;
                let ud = to_top[&d] / kd;
                debug_assert_eq!(to_top[&e] % ke, 0);
                let r = qe1 / qd1;
                let s = if qe1 == 1 {
                    0
                } else {
                    let inv = mod_inverse(ue % qe1, qe1);
                    ((r as u128 * ud as u128 % qe1 as u128) * inv as u128 % qe1 as u128) as u64
                };
                embed_log.insert((d, e), s);
            }
        }
        Ok(FieldTower { p: p32, f, q, m, levels, embed_log })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn level_degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.levels.keys().copied()
    }

    pub fn level(&self, d: u32) -> Result<&LevelField> {
        self.levels.get(&d).ok_or(Error::NotDivisor { level: d, m: self.m })
    }

    pub fn base(&self) -> &LevelField {
        &self.levels[&1]
    }

    pub fn top(&self) -> &LevelField {
        &self.levels[&self.m]
    }

    pub fn generator(&self, d: u32) -> Result<FieldElement> {
        Ok(FieldElement::new(d, self.level(d)?.generator()))
    }

    pub fn one(&self, d: u32) -> FieldElement {
        FieldElement::new(d, Elem::ONE)
    }

    pub fn zero(&self, d: u32) -> FieldElement {
        FieldElement::new(d, Elem::ZERO)
    }

    /// Embedding `F_{q^from} → F_{q^to}` on raw elements.
    #[inline]
    pub fn embed_raw(&self, a: Elem, from: u32, to: u32) -> Result<Elem> {
        let s = *self.embed_log.get(&(from, to)).ok_or(Error::BadEmbedding { from, to })?;
        Ok(match a.log() {
            None => Elem::ZERO,
            Some(k) => {
                let n = self.level(to)?.group_order();
                Elem(((k as u128 * s as u128) % n.max(1) as u128) as u32)
            }
        })
    }

    pub fn embed(&self, x: FieldElement, to_level: u32) -> Result<FieldElement> {
        self.level(to_level)?;
        if !to_level.is_multiple_of(x.level) {
            return Err(Error::BadEmbedding { from: x.level, to: to_level });
        }
        Ok(FieldElement::new(to_level, self.embed_raw(x.elem, x.level, to_level)?))
    }

    fn same_level(&self, a: &FieldElement, b: &FieldElement) -> Result<&LevelField> {
        if a.level != b.level {
            return Err(Error::LevelMismatch(a.level, b.level));
        }
        self.level(a.level)
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        let lf = self.same_level(&a, &b)?;
        Ok(FieldElement::new(a.level, lf.mul(a.elem, b.elem)))
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        let lf = self.same_level(&a, &b)?;
        Ok(FieldElement::new(a.level, lf.add(a.elem, b.elem)))
    }

    pub fn neg(&self, a: FieldElement) -> Result<FieldElement> {
        Ok(FieldElement::new(a.level, self.level(a.level)?.neg(a.elem)))
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        Ok(FieldElement::new(a.level, self.level(a.level)?.inv(a.elem)?))
    }

    pub fn pow(&self, a: FieldElement, e: i64) -> Result<FieldElement> {
        Ok(FieldElement::new(a.level, self.level(a.level)?.pow(a.elem, e)?))
    }

    /// `x^{q^times}`; the identity when `times` is a multiple of the level.
    pub fn frobenius(&self, a: FieldElement, times: u32) -> Result<FieldElement> {
        Ok(FieldElement::new(a.level, self.level(a.level)?.frobenius(a.elem, times)))
    }
}

fn eval_prime_poly(lf: &LevelField, coeffs: &[u32], y: Elem) -> Elem {
    coeffs.iter().rev().fold(Elem::ZERO, |acc, &c| lf.add(lf.mul(acc, y), lf.from_int(c as i64)))
}

fn mod_inverse(a: u64, n: u64) -> u64 {
    let e = (a as i128).extended_gcd(&(n as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(n as i128) as u64
}
