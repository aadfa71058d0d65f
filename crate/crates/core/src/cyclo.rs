//! Exact arithmetic in `Z[ζ_L]`.
//!
//! A value is stored as its coefficient vector in the power basis
//! `1, ζ, …, ζ^{φ(L)-1}`, fully reduced modulo the cyclotomic polynomial
//! `Φ_L`, so equality at a fixed conductor is coefficientwise. Values of
//! different conductors are lifted to the lcm before combining.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, FromPrimitive, Signed, ToPrimitive, Zero};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest conductor the automatic lift will create.
pub const DEFAULT_MAX_CONDUCTOR: u64 = 1 << 20;

/// Integer coefficient ring for [`Cyclo`]. Fixed-width types use checked
/// arithmetic and panic on overflow; `BigInt` never overflows.
pub trait Coeff:
    Clone
    + fmt::Debug
    + fmt::Display
    + FromStr
    + Eq
    + Integer
    + Signed
    + CheckedAdd
    + CheckedSub
    + CheckedMul
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
}

impl<T> Coeff for T where
    T: Clone
        + fmt::Debug
        + fmt::Display
        + FromStr
        + Eq
        + Integer
        + Signed
        + CheckedAdd
        + CheckedSub
        + CheckedMul
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

#[inline]
fn c_add<T: Coeff>(a: &T, b: &T) -> T {
    a.checked_add(b).expect("cyclotomic coefficient overflow")
}

#[inline]
fn c_sub<T: Coeff>(a: &T, b: &T) -> T {
    a.checked_sub(b).expect("cyclotomic coefficient overflow")
}

#[inline]
fn c_mul<T: Coeff>(a: &T, b: &T) -> T {
    a.checked_mul(b).expect("cyclotomic coefficient overflow")
}

fn c_from_i64<T: Coeff>(v: i64) -> T {
    T::from_i64(v).expect("coefficient type cannot hold an i64")
}

/// `Φ_L` and its sparse form, shared by every value of conductor `L`.
#[derive(Debug)]
struct CycloTables {
    phi: usize,
    // monic, constant term first, length phi + 1
    poly: Vec<i64>,
    // nonzero (index, coeff) of the non-leading part
    sparse: Vec<(usize, i64)>,
}

fn table_cache() -> &'static Mutex<HashMap<u64, Arc<CycloTables>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CycloTables>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The `L`-th cyclotomic polynomial, constant term first.
pub fn cyclotomic_polynomial(l: u64) -> Vec<i64> {
    tables(l).poly.clone()
}

fn tables(l: u64) -> Arc<CycloTables> {
    if let Some(t) = table_cache().lock().get(&l) {
        return t.clone();
    }
    let poly = compute_phi(l);
    let phi = poly.len() - 1;
    let sparse = poly[..phi].iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i, c)).collect();
    let t = Arc::new(CycloTables { phi, poly, sparse });
    table_cache().lock().insert(l, t.clone());
    t
}

// Φ_L = (x^L - 1) / Π_{d | L, d < L} Φ_d
fn compute_phi(l: u64) -> Vec<i64> {
    assert!(l >= 1, "conductor must be positive");
    let mut num = vec![0i64; l as usize + 1];
    num[0] = -1;
    num[l as usize] = 1;
    for d in (1..l).filter(|d| l.is_multiple_of(*d)) {
        let den = tables(d).poly.clone();
        num = exact_div_monic(&num, &den);
    }
    num
}

fn exact_div_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    let mut rem: Vec<i128> = num.iter().map(|&c| c as i128).collect();
    let mut quot = vec![0i64; dn - dd + 1];
    for i in (0..=dn - dd).rev() {
        let c = rem[i + dd];
        quot[i] = i64::try_from(c).expect("cyclotomic coefficient out of range");
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] -= c * dj as i128;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0), "division was not exact");
    quot
}

fn lcm(a: u64, b: u64) -> u64 {
    a / a.gcd(&b) * b
}

/// Euler's totient.
pub fn totient(n: u64) -> u64 {
    crate::gf::prime_factors(n).into_iter().fold(n, |acc, p| acc / p * (p - 1))
}

/// Element of `Z[ζ_L]` with coefficients in `T`.
#[derive(Clone)]
pub struct Cyclo<T: Coeff> {
    conductor: u64,
    coeffs: Vec<T>,
}

impl<T: Coeff> Cyclo<T> {
    pub fn zero(conductor: u64) -> Self {
        let phi = tables(conductor).phi;
        Cyclo { conductor, coeffs: vec![T::zero(); phi] }
    }

    pub fn one(conductor: u64) -> Self {
        Self::from_int(conductor, T::one())
    }

    pub fn from_int(conductor: u64, n: T) -> Self {
        let mut z = Self::zero(conductor);
        z.coeffs[0] = n;
        z
    }

    /// `ζ_L^k` in canonical form.
    pub fn root_of_unity(conductor: u64, k: i64) -> Self {
        let idx = k.rem_euclid(conductor as i64) as usize;
        let mut dense = vec![T::zero(); conductor as usize];
        dense[idx] = T::one();
        Self::from_dense(conductor, dense)
    }

    /// Builds a value from coefficients of `1, ζ, …` of any length, reducing
    /// exponents modulo `L` and then modulo `Φ_L`.
    pub fn from_coefficients(conductor: u64, coeffs: Vec<T>) -> Self {
        let l = conductor as usize;
        let mut dense = vec![T::zero(); l];
        for (i, c) in coeffs.into_iter().enumerate() {
            if !c.is_zero() {
                dense[i % l] = c_add(&dense[i % l], &c);
            }
        }
        Self::from_dense(conductor, dense)
    }

    // `dense` holds the coefficients of ζ^0 .. ζ^{L-1}
    fn from_dense(conductor: u64, mut dense: Vec<T>) -> Self {
        let t = tables(conductor);
        let phi = t.phi;
        for i in (phi..dense.len()).rev() {
            if dense[i].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut dense[i], T::zero());
            let base = i - phi;
            for &(j, pj) in &t.sparse {
                let term = c_mul(&c, &c_from_i64::<T>(pj));
                dense[base + j] = c_sub(&dense[base + j], &term);
            }
        }
        dense.truncate(phi);
        Cyclo { conductor, coeffs: dense }
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// Canonical coefficients, length `φ(L)`.
    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// `Some(n)` when the value is the rational integer `n`.
    pub fn as_integer(&self) -> Option<T> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Re-expresses the value at conductor `target`, which must be a multiple
    /// of the current one, via `ζ_L ↦ ζ_{target}^{target/L}`.
    pub fn lift(&self, target: u64) -> Result<Self> {
        if !target.is_multiple_of(self.conductor) {
            return Err(Error::ConductorCap(self.conductor, target, target));
        }
        if target == self.conductor {
            return Ok(self.clone());
        }
        let ratio = (target / self.conductor) as usize;
        let mut dense = vec![T::zero(); target as usize];
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                dense[j * ratio] = c.clone();
            }
        }
        Ok(Self::from_dense(target, dense))
    }

    fn unify(&self, other: &Self) -> Result<(Self, Self)> {
        if self.conductor == other.conductor {
            return Ok((self.clone(), other.clone()));
        }
        let l = lcm(self.conductor, other.conductor);
        if l > DEFAULT_MAX_CONDUCTOR {
            return Err(Error::ConductorCap(self.conductor, other.conductor, DEFAULT_MAX_CONDUCTOR));
        }
        Ok((self.lift(l)?, other.lift(l)?))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.conductor == other.conductor {
            let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| c_add(a, b)).collect();
            return Ok(Cyclo { conductor: self.conductor, coeffs });
        }
        let (a, b) = self.unify(other)?;
        a.try_add(&b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_ref())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.conductor != other.conductor {
            let (a, b) = self.unify(other)?;
            return a.try_mul(&b);
        }
        let l = self.conductor as usize;
        let lhs: Vec<(usize, &T)> = self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
        let rhs: Vec<(usize, &T)> = other.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
        let mut dense = vec![T::zero(); l];
        for &(i, a) in &lhs {
            for &(j, b) in &rhs {
                let k = (i + j) % l;
                dense[k] = c_add(&dense[k], &c_mul(a, b));
            }
        }
        Ok(Self::from_dense(self.conductor, dense))
    }

    fn neg_ref(&self) -> Self {
        Cyclo { conductor: self.conductor, coeffs: self.coeffs.iter().map(|c| T::zero() - c.clone()).collect() }
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        let l = self.conductor as usize;
        let mut dense = vec![T::zero(); l];
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                dense[(l - j) % l] = c.clone();
            }
        }
        Self::from_dense(self.conductor, dense)
    }

    pub fn scale(&self, n: &T) -> Self {
        Cyclo { conductor: self.conductor, coeffs: self.coeffs.iter().map(|c| c_mul(c, n)).collect() }
    }

    /// `y` with `n·y = self`; fails unless every coefficient is divisible by `n`.
    pub fn divide_exact(&self, n: &T) -> Result<Self> {
        if n.is_zero() {
            return Err(Error::NotDivisible(0));
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            let (q, r) = c.div_rem(n);
            if !r.is_zero() {
                return Err(Error::NotDivisible(n.to_i64().unwrap_or(i64::MAX)));
            }
            coeffs.push(q);
        }
        Ok(Cyclo { conductor: self.conductor, coeffs })
    }

    pub fn map_coeffs<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Cyclo<U> {
        Cyclo { conductor: self.conductor, coeffs: self.coeffs.iter().map(f).collect() }
    }
}

impl<T: Coeff> PartialEq for Cyclo<T> {
    fn eq(&self, other: &Self) -> bool {
        if self.conductor == other.conductor {
            return self.coeffs == other.coeffs;
        }
        match self.unify(other) {
            Ok((a, b)) => a.coeffs == b.coeffs,
            Err(_) => false,
        }
    }
}

impl<T: Coeff> Eq for Cyclo<T> {}

impl<T: Coeff> fmt::Debug for Cyclo<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo(L={}, {})", self.conductor, self)
    }
}

impl<T: Coeff> fmt::Display for Cyclo<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.as_integer() {
            return write!(f, "{n}");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let unit = mag.is_one();
            match (j, unit) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "z")?,
                (1, false) => write!(f, "{mag}*z")?,
                (_, true) => write!(f, "z^{j}")?,
                (_, false) => write!(f, "{mag}*z^{j}")?,
            }
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $try:ident) => {
        impl<T: Coeff> $tr<&Cyclo<T>> for &Cyclo<T> {
            type Output = Cyclo<T>;
            fn $method(self, rhs: &Cyclo<T>) -> Cyclo<T> {
                self.$try(rhs).expect("conductor lift")
            }
        }
        impl<T: Coeff> $tr for Cyclo<T> {
            type Output = Cyclo<T>;
            fn $method(self, rhs: Cyclo<T>) -> Cyclo<T> {
                (&self).$try(&rhs).expect("conductor lift")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl<T: Coeff> Neg for Cyclo<T> {
    type Output = Cyclo<T>;
    fn neg(self) -> Cyclo<T> {
        self.neg_ref()
    }
}

impl<T: Coeff> Neg for &Cyclo<T> {
    type Output = Cyclo<T>;
    fn neg(self) -> Cyclo<T> {
        self.neg_ref()
    }
}

impl<T: Coeff> std::iter::Sum for Cyclo<T> {
    fn sum<I: Iterator<Item = Cyclo<T>>>(mut iter: I) -> Self {
        let first = iter.next().unwrap_or_else(|| Cyclo::zero(1));
        iter.fold(first, |acc, x| acc + x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffRepr {
    Small(i64),
    Big(String),
}

#[derive(Serialize, Deserialize)]
struct CycloRepr {
    conductor: u64,
    coefficients: Vec<CoeffRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    integer: Option<String>,
}

impl<T: Coeff> Serialize for Cyclo<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coefficients = self
            .coeffs
            .iter()
            .map(|c| match c.to_i64() {
                Some(v) => CoeffRepr::Small(v),
                None => CoeffRepr::Big(c.to_string()),
            })
            .collect();
        CycloRepr { conductor: self.conductor, coefficients, integer: self.as_integer().map(|n| n.to_string()) }
            .serialize(s)
    }
}

impl<'de, T: Coeff> Deserialize<'de> for Cyclo<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = CycloRepr::deserialize(d)?;
        if repr.conductor == 0 {
            return Err(D::Error::custom("conductor must be positive"));
        }
        let coeffs = repr
            .coefficients
            .into_iter()
            .map(|c| match c {
                CoeffRepr::Small(v) => T::from_i64(v).ok_or_else(|| D::Error::custom("coefficient range")),
                CoeffRepr::Big(s) => s.parse::<T>().map_err(|_| D::Error::custom("bad coefficient")),
            })
            .collect::<std::result::Result<Vec<T>, _>>()?;
        if coeffs.len() != tables(repr.conductor).phi {
            return Err(D::Error::custom("coefficient count must equal phi(conductor)"));
        }
        Ok(Cyclo { conductor: repr.conductor, coeffs })
    }
}

impl From<&Cyclo<i64>> for Cyclo<BigInt> {
    fn from(x: &Cyclo<i64>) -> Self {
        x.map_coeffs(|&c| BigInt::from(c))
    }
}
