//! The additive character `ψ₀` of `F_q` and multiplicative characters `θ` of
//! `F_{q^m}^×`.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gf::{Elem, FieldElement, FieldTower};
use crate::CycloInt;

/// `x ↦ ζ_p^{AbsTr(c·x)}` on the base field.
#[derive(Clone, Debug)]
pub struct AdditiveChar {
    tower: Arc<FieldTower>,
    c: Elem,
}

impl AdditiveChar {
    pub fn new(tower: Arc<FieldTower>, c: Elem) -> Result<AdditiveChar> {
        if c.is_zero() {
            return Err(Error::Precondition("the additive character must be nontrivial".into()));
        }
        Ok(AdditiveChar { tower, c })
    }

    /// The default character, `c = 1`.
    pub fn standard(tower: Arc<FieldTower>) -> AdditiveChar {
        AdditiveChar { tower, c: Elem::ONE }
    }

    pub fn scaling(&self) -> Elem {
        self.c
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    /// Exponent `e` with `ψ₀(x) = ζ_p^e`.
    #[inline]
    pub fn exponent(&self, x: Elem) -> u32 {
        let f = self.tower.base();
        f.absolute_trace(f.mul(self.c, x))
    }

    pub fn eval(&self, x: Elem) -> CycloInt {
        CycloInt::root_of_unity(self.tower.p() as u64, self.exponent(x) as i64)
    }

    /// `Σ_β count[β]·conj(ψ₀(β))`, where `count` is indexed by polynomial-basis
    /// index of `β`. The value is collected per trace exponent first so only `p`
    /// roots of unity are formed.
    pub fn weighted_conj_sum(&self, counts: &[u64]) -> CycloInt {
        let f = self.tower.base();
        let p = self.tower.p() as usize;
        let mut by_exp = vec![0u64; p];
        for (idx, &n) in counts.iter().enumerate() {
            if n > 0 {
                let beta = f.from_index(idx as u32).expect("index below field order");
                by_exp[self.exponent(beta) as usize] += n;
            }
        }
        CycloInt::from_coefficients(p as u64, (0..p).map(|e| by_exp[(p - e) % p].into()).collect())
    }
}

/// `g_m^j ↦ ζ_{q^m−1}^{k·j}` on the top level of the tower.
#[derive(Clone, Debug)]
pub struct MultChar {
    tower: Arc<FieldTower>,
    k: u64,
}

impl MultChar {
    pub fn new(tower: Arc<FieldTower>, k: u64) -> Result<MultChar> {
        let n = tower.top().group_order();
        if k >= n.max(1) {
            return Err(Error::Precondition(format!("exponent {k} outside [0, {})", n)));
        }
        Ok(MultChar { tower, k })
    }

    pub fn exponent(&self) -> u64 {
        self.k
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    /// `q^m − 1`, the conductor of the values.
    pub fn conductor(&self) -> u64 {
        self.tower.top().group_order()
    }

    /// Exponent `e` with `θ(x) = ζ_{q^m−1}^e`.
    pub fn value_exponent(&self, x: FieldElement) -> Result<u64> {
        let top = self.tower.embed(x, self.tower.m())?;
        let j = top.elem.log().ok_or(Error::ZeroInverse)? as u128;
        let n = self.conductor() as u128;
        Ok((j * self.k as u128 % n) as u64)
    }

    pub fn eval(&self, x: FieldElement) -> Result<CycloInt> {
        Ok(CycloInt::root_of_unity(self.conductor(), self.value_exponent(x)? as i64))
    }

    /// Orbit of `k` under multiplication by `q` modulo `q^m − 1`.
    pub fn galois_orbit(&self) -> BTreeSet<u64> {
        exponent_orbit(self.tower.q(), self.conductor(), self.k)
    }

    /// The `m` Galois twists `θ^{q^i}` are pairwise distinct.
    pub fn is_regular(&self) -> bool {
        self.galois_orbit().len() as u32 == self.tower.m()
    }

    /// `Σ_{α<d} θ(z^{q^α})` for `z` at level `d`.
    pub fn galois_orbit_sum(&self, z: FieldElement) -> Result<CycloInt> {
        if z.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let level = self.tower.level(z.level)?;
        let n = self.conductor() as i64;
        let exps: Vec<i64> = (0..z.level)
            .map(|a| {
                let w = FieldElement::new(z.level, level.frobenius(z.elem, a));
                self.value_exponent(w).map(|e| e as i64)
            })
            .collect::<Result<_>>()?;
        let mut coeffs = vec![num_bigint::BigInt::from(0); n.max(1) as usize];
        for e in exps {
            coeffs[e as usize] += 1;
        }
        Ok(CycloInt::from_coefficients(n.max(1) as u64, coeffs))
    }
}

fn exponent_orbit(q: u64, n: u64, k: u64) -> BTreeSet<u64> {
    let mut orbit = BTreeSet::new();
    if n == 0 {
        return orbit;
    }
    let mut cur = k % n.max(1);
    while orbit.insert(cur) {
        cur = (cur as u128 * q as u128 % n as u128) as u64;
    }
    orbit
}

/// All regular exponents `k`, ascending.
pub fn regular_exponents(tower: &FieldTower) -> Vec<u64> {
    let n = tower.top().group_order();
    (0..n).filter(|&k| exponent_orbit(tower.q(), n, k).len() as u32 == tower.m()).collect()
}

/// Smallest regular exponent, the `auto` choice.
pub fn smallest_regular(tower: &FieldTower) -> Result<u64> {
    let n = tower.top().group_order();
    (0..n)
        .find(|&k| exponent_orbit(tower.q(), n, k).len() as u32 == tower.m())
        .ok_or_else(|| Error::Precondition("no regular character exists".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower(p: u64, f: u32, m: u32) -> Arc<FieldTower> {
        Arc::new(FieldTower::build(p, f, m).unwrap())
    }

    #[test]
    fn additive_character_values() {
        for (p, f) in [(2u64, 1u32), (3, 1), (2, 2), (5, 1)] {
            let t = tower(p, f, 1);
            let base = t.base();
            for c in base.nonzero() {
                let psi = AdditiveChar::new(t.clone(), c).unwrap();
                assert_eq!(psi.eval(Elem::ZERO), CycloInt::one(p));
                let total: CycloInt = base.elements().map(|x| psi.eval(x)).sum();
                assert!(total.is_zero());
                for x in base.elements() {
                    for y in base.elements() {
                        assert_eq!(psi.eval(base.add(x, y)), &psi.eval(x) * &psi.eval(y));
                    }
                }
            }
            assert!(AdditiveChar::new(t.clone(), Elem::ZERO).is_err());
        }
    }

    #[test]
    fn weighted_sum_matches_termwise() {
        let t = tower(3, 2, 1);
        let base = t.base();
        let psi = AdditiveChar::new(t.clone(), base.generator()).unwrap();
        let counts: Vec<u64> = (0..9).map(|i| (i * i + 1) as u64).collect();
        let direct: CycloInt =
            (0..9u32).map(|i| psi.eval(base.from_index(i).unwrap()).conj().scale(&counts[i as usize].into())).sum();
        assert_eq!(psi.weighted_conj_sum(&counts), direct);
    }

    #[test]
    fn multiplicative_character_values() {
        let t = tower(2, 1, 6);
        let theta = MultChar::new(t.clone(), 5).unwrap();
        assert_eq!(theta.eval(t.one(1)).unwrap(), CycloInt::one(63));
        let trivial = MultChar::new(t.clone(), 0).unwrap();
        let g = t.generator(6).unwrap();
        assert_eq!(trivial.eval(g).unwrap(), CycloInt::one(63));
        let v = theta.eval(g).unwrap();
        let v63 = (0..62).fold(v.clone(), |acc, _| &acc * &v);
        assert_eq!(v63, CycloInt::one(63));
        assert!(theta.eval(t.zero(6)).is_err());
        assert!(MultChar::new(t, 63).is_err());
    }

    #[test]
    fn multiplicativity_and_embedding_consistency() {
        let t = tower(3, 1, 6);
        let theta = MultChar::new(t.clone(), 7).unwrap();
        for d in [1u32, 2, 3, 6] {
            let level = t.level(d).unwrap();
            for a in level.nonzero().step_by(5) {
                for b in level.nonzero().step_by(11) {
                    let ab = FieldElement::new(d, level.mul(a, b));
                    let lhs = theta.eval(ab).unwrap();
                    let rhs =
                        &theta.eval(FieldElement::new(d, a)).unwrap() * &theta.eval(FieldElement::new(d, b)).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
        // F^× → F_{q^2} → F_{q^6} and F^× → F_{q^3} → F_{q^6} give the same value
        for x in t.base().nonzero() {
            let x1 = FieldElement::new(1, x);
            let via2 = theta.eval(t.embed(x1, 2).unwrap()).unwrap();
            let via3 = theta.eval(t.embed(x1, 3).unwrap()).unwrap();
            assert_eq!(via2, via3);
            assert_eq!(via2, theta.eval(x1).unwrap());
        }
    }

    #[test]
    fn regularity() {
        let t2 = tower(2, 1, 6);
        assert!(!MultChar::new(t2.clone(), 0).unwrap().is_regular());
        assert!(MultChar::new(t2.clone(), 1).unwrap().is_regular());
        let nine = MultChar::new(t2.clone(), 9).unwrap();
        assert_eq!(nine.galois_orbit(), [9, 18, 36].into_iter().collect());
        assert!(!nine.is_regular());
        assert_eq!(smallest_regular(&t2).unwrap(), 1);
    }

    // Möbius count of exponents with orbit of size exactly 6
    fn mobius_count(q: u64) -> u64 {
        let plus = (q.pow(6) - 1) + (q - 1);
        let minus = (q.pow(3) - 1) + (q.pow(2) - 1);
        plus - minus
    }

    #[test]
    fn regular_counts() {
        for q in [2u64, 3] {
            let t = tower(q, 1, 6);
            let n = regular_exponents(&t).len() as u64;
            assert_eq!(n, mobius_count(q));
        }
        assert_eq!(mobius_count(2), 54);
        // 728 − 26 − 8 + 2
        assert_eq!(mobius_count(3), 696);
    }

    #[test]
    fn orbit_sums() {
        let t = tower(2, 1, 6);
        let theta = MultChar::new(t.clone(), 1).unwrap();
        let trivial = MultChar::new(t.clone(), 0).unwrap();
        for d in [1u32, 2, 3, 6] {
            assert_eq!(theta.galois_orbit_sum(t.one(d)).unwrap(), CycloInt::from_int(63, d.into()));
            let g = t.generator(d).unwrap();
            assert_eq!(trivial.galois_orbit_sum(g).unwrap(), CycloInt::from_int(63, d.into()));
        }
        let top = t.top();
        for z in top.nonzero() {
            let a = theta.galois_orbit_sum(FieldElement::new(6, z)).unwrap();
            let b = theta.galois_orbit_sum(FieldElement::new(6, top.frobenius(z, 1))).unwrap();
            assert_eq!(a, b);
        }
        assert!(theta.galois_orbit_sum(t.zero(2)).is_err());
    }
}
