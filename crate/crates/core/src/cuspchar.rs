//! Characters of irreducible cuspidal representations of `GL(m, F_q)`.
//!
//! `Θ_θ(g)` vanishes unless the characteristic polynomial of `g` is a power
//! `h^e` of an irreducible `h`. Otherwise, with `d = deg h`, `z` a root of `h`
//! in `F_{q^d}` and `t = dim ker(g − z)`,
//!
//! `Θ_θ(g) = (−1)^{m−1} · Σ_{α<d} θ(z^{q^α}) · Π_{i=1}^{t−1} (1 − q^{d·i})`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use parking_lot::RwLock;

use crate::charfn::MultChar;
use crate::cyclo::Coeff;
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldTower};
use crate::matfq::{ker_dim_over_extension, power_of_irreducible, root_in_extension, MatF, PolyF};
use crate::CycloInt;

/// Eigenvalue data of a characteristic polynomial `h^e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    pub h: PolyF,
    pub exponent: u32,
    /// Root of `h` at level `deg h`.
    pub z: FieldElement,
}

impl Spectrum {
    pub fn degree(&self) -> u32 {
        self.z.level
    }
}

/// The cuspidal representation `π_θ` of `GL(m, F_q)`, `m` the tower degree.
#[derive(Debug)]
pub struct CuspidalData {
    tower: Arc<FieldTower>,
    theta: MultChar,
    spectra: RwLock<HashMap<Vec<u32>, Option<Arc<Spectrum>>>>,
    values: RwLock<HashMap<(Vec<u32>, usize), CycloInt>>,
}

impl CuspidalData {
    pub fn new(theta: MultChar) -> Result<CuspidalData> {
        if !theta.is_regular() {
            return Err(Error::Precondition(format!("θ with exponent {} is not regular", theta.exponent())));
        }
        Ok(CuspidalData {
            tower: theta.tower().clone(),
            theta,
            spectra: RwLock::new(HashMap::new()),
            values: RwLock::new(HashMap::new()),
        })
    }

    pub fn m(&self) -> usize {
        self.tower.m() as usize
    }

    pub fn q(&self) -> u64 {
        self.tower.q()
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn theta(&self) -> &MultChar {
        &self.theta
    }

    /// `None` when the characteristic polynomial has two distinct irreducible
    /// factors. Cached on the coefficient key.
    pub fn spectrum(&self, charpoly: &PolyF) -> Result<Option<Arc<Spectrum>>> {
        let base = self.tower.base();
        let key = charpoly.key(base);
        if let Some(s) = self.spectra.read().get(&key) {
            return Ok(s.clone());
        }
        let s = match power_of_irreducible(base, charpoly) {
            None => None,
            Some((h, exponent)) => {
                let z = root_in_extension(&self.tower, &h)?;
                Some(Arc::new(Spectrum { h, exponent, z }))
            }
        };
        self.spectra.write().insert(key, s.clone());
        Ok(s)
    }

    /// Formula value for a given eigenvalue `z` and kernel dimension `t`.
    pub fn formula_value(&self, z: FieldElement, t: usize) -> Result<CycloInt> {
        let orbit = self.theta.galois_orbit_sum(z)?;
        let sign: i64 = if self.m() % 2 == 1 { 1 } else { -1 };
        let factor = unipotent_factor::<BigInt>(self.q(), z.level as u64, t)? * BigInt::from(sign);
        Ok(orbit.scale(&factor))
    }

    /// Value for a characteristic polynomial with known spectrum and kernel
    /// dimension, cached on `(charpoly key, t)`.
    pub fn value_for(&self, charpoly: &PolyF, spectrum: &Spectrum, t: usize) -> Result<CycloInt> {
        let key = (charpoly.key(self.tower.base()), t);
        if let Some(v) = self.values.read().get(&key) {
            return Ok(v.clone());
        }
        let v = self.formula_value(spectrum.z, t)?;
        self.values.write().insert(key, v.clone());
        Ok(v)
    }

    /// `Θ_θ(g)` for `g ∈ GL(m, F_q)`.
    pub fn theta_char(&self, g: &MatF) -> Result<CycloInt> {
        let base = self.tower.base();
        if g.rows() != self.m() || g.cols() != self.m() {
            return Err(Error::Shape(format!("expected a {0}x{0} matrix", self.m())));
        }
        if g.level() != 1 {
            return Err(Error::LevelMismatch(g.level(), 1));
        }
        if !g.is_invertible(base) {
            return Err(Error::Singular);
        }
        let cp = g.charpoly(base)?;
        match self.spectrum(&cp)? {
            None => Ok(CycloInt::zero(self.theta.conductor())),
            Some(s) => {
                let t = ker_dim_over_extension(&self.tower, g, s.z)?;
                self.value_for(&cp, &s, t)
            }
        }
    }
}

/// `Π_{i=1}^{t−1} (1 − q^{d·i})`; the empty product when `t ≤ 1`.
pub fn unipotent_factor<T: Coeff>(q: u64, d: u64, t: usize) -> Result<T> {
    let q = T::from_u64(q).ok_or_else(|| Error::Precondition("q does not fit".into()))?;
    let mut acc = T::one();
    let mut qd = T::one();
    for _ in 0..d {
        qd = qd.checked_mul(&q).ok_or_else(|| Error::Precondition("overflow".into()))?;
    }
    let mut pow = T::one();
    for _ in 1..t {
        pow = pow.checked_mul(&qd).ok_or_else(|| Error::Precondition("overflow".into()))?;
        let term = T::one().checked_sub(&pow).ok_or_else(|| Error::Precondition("overflow".into()))?;
        acc = acc.checked_mul(&term).ok_or_else(|| Error::Precondition("overflow".into()))?;
    }
    Ok(acc)
}

/// `Θ_θ` at a unipotent element of `GL(m, F_q)` with `rank(g − 1) = r`:
/// `(−1)^{m−1} Π_{i=1}^{m−r−1} (1 − q^i)`, independent of `θ`.
pub fn unipotent_value<T: Coeff>(m: usize, q: u64, r: usize) -> Result<T> {
    if r >= m {
        return Err(Error::Precondition(format!("rank {r} must be below {m}")));
    }
    let v: T = unipotent_factor(q, 1, m - r)?;
    Ok(if m % 2 == 1 { v } else { T::zero() - v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{regular_exponents, smallest_regular};
    use crate::gf::Elem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cusp(p: u64, m: u32, k: Option<u64>) -> CuspidalData {
        let t = Arc::new(FieldTower::build(p, 1, m).unwrap());
        let k = k.unwrap_or_else(|| smallest_regular(&t).unwrap());
        CuspidalData::new(MultChar::new(t, k).unwrap()).unwrap()
    }

    // I + E_{12} + … + E_{r,r+1}
    fn unipotent(m: usize, r: usize) -> MatF {
        let mut u = MatF::identity(1, m);
        for i in 0..r {
            u.set(i, i + 1, Elem::ONE);
        }
        u
    }

    fn int(v: &CycloInt) -> i64 {
        v.as_integer().expect("rational value").try_into().unwrap()
    }

    #[test]
    fn gl6_unipotent_values_q2() {
        let pi = cusp(2, 6, None);
        assert_eq!(int(&pi.theta_char(&MatF::identity(1, 6)).unwrap()), 9765);
        assert_eq!(int(&pi.theta_char(&unipotent(6, 1)).unwrap()), -315);
        let mut r3 = MatF::identity(1, 6);
        for (i, j) in [(0, 3), (1, 4), (2, 5)] {
            r3.set(i, j, Elem::ONE);
        }
        assert_eq!(int(&pi.theta_char(&r3).unwrap()), -3);
        for r in 0..6 {
            assert_eq!(int(&pi.theta_char(&unipotent(6, r)).unwrap()), unipotent_value::<i64>(6, 2, r).unwrap());
        }
    }

    #[test]
    fn unipotent_closed_forms() {
        assert_eq!(unipotent_value::<i64>(6, 2, 0).unwrap(), 9765);
        assert_eq!(unipotent_value::<i64>(6, 2, 3).unwrap(), -3);
        assert_eq!(unipotent_value::<i64>(6, 3, 2).unwrap(), 416);
        assert_eq!(unipotent_value::<BigInt>(6, 3, 5).unwrap(), BigInt::from(-1));
        assert!(unipotent_value::<i64>(6, 2, 6).is_err());
        assert!(unipotent_value::<i32>(6, 1000, 0).is_err());
    }

    #[test]
    fn degree_is_product_of_q_powers_minus_one() {
        for p in [2u64, 3] {
            for m in [2u32, 3, 4, 6] {
                let pi = cusp(p, m, None);
                let expected: i64 = (1..m).map(|i| p.pow(i) as i64 - 1).product();
                let v = pi.theta_char(&MatF::identity(1, m as usize)).unwrap();
                assert_eq!(int(&v), expected, "q={p} m={m}");
            }
        }
    }

    #[test]
    fn two_distinct_factors_give_zero() {
        let pi = cusp(2, 6, None);
        let f = pi.tower().base();
        // diag(companion(x²+x+1), I_4): factors x²+x+1 and x+1
        let c = MatF::parse_literal("0,1;1,1", f).unwrap();
        let g = MatF::block_diag(&c, &MatF::identity(1, 4)).unwrap();
        assert!(pi.theta_char(&g).unwrap().is_zero());
        assert_eq!(pi.theta_char(&MatF::zeros(1, 6, 6)), Err(Error::Singular));
        assert!(pi.theta_char(&MatF::identity(1, 5)).is_err());
    }

    fn group_elements(pi: &CuspidalData) -> Vec<MatF> {
        let f = pi.tower().base();
        let n = pi.m();
        (0..f.order().pow((n * n) as u32))
            .map(|i| MatF::from_enumeration_index(f, n, n, i).unwrap())
            .filter(|g| g.is_invertible(f))
            .collect()
    }

    #[test]
    fn norm_equals_group_order() {
        for (p, m, order) in [(2u64, 2u32, 6i64), (3, 2, 48), (2, 3, 168)] {
            let t = Arc::new(FieldTower::build(p, 1, m).unwrap());
            for k in regular_exponents(&t) {
                let pi = CuspidalData::new(MultChar::new(t.clone(), k).unwrap()).unwrap();
                let elems = group_elements(&pi);
                assert_eq!(elems.len() as i64, order);
                let norm: CycloInt = elems
                    .iter()
                    .map(|g| {
                        let v = pi.theta_char(g).unwrap();
                        &v * &v.conj()
                    })
                    .sum();
                assert_eq!(norm.as_integer(), Some(order.into()), "GL({m},{p}) k={k}");
            }
        }
    }

    #[test]
    fn conjugation_invariance_gl6_q2() {
        let pi = cusp(2, 6, None);
        let f = pi.tower().base();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let g = MatF::random_invertible(f, 6, &mut rng);
            let p = MatF::random_invertible(f, 6, &mut rng);
            let c = p.mul(f, &g).unwrap().mul(f, &p.inverse(f).unwrap()).unwrap();
            assert_eq!(pi.theta_char(&g).unwrap(), pi.theta_char(&c).unwrap());
        }
    }

    #[test]
    fn value_does_not_depend_on_root_choice() {
        let pi = cusp(2, 6, None);
        let f = pi.tower().base();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen_nontrivial = 0;
        for _ in 0..300 {
            let g = MatF::random_invertible(f, 6, &mut rng);
            let cp = g.charpoly(f).unwrap();
            let Some(s) = pi.spectrum(&cp).unwrap() else { continue };
            let level = pi.tower().level(s.degree()).unwrap();
            let reference = pi.theta_char(&g).unwrap();
            for a in 0..s.degree() {
                let z = FieldElement::new(s.degree(), level.frobenius(s.z.elem, a));
                let t = ker_dim_over_extension(pi.tower(), &g, z).unwrap();
                assert_eq!(pi.formula_value(z, t).unwrap(), reference);
            }
            if s.degree() > 1 {
                seen_nontrivial += 1;
            }
        }
        assert!(seen_nontrivial > 0);
    }

    #[test]
    fn galois_conjugate_characters_agree() {
        let t = Arc::new(FieldTower::build(2, 1, 6).unwrap());
        let f = t.base();
        let k = 5u64;
        let pi = CuspidalData::new(MultChar::new(t.clone(), k).unwrap()).unwrap();
        let pi2 = CuspidalData::new(MultChar::new(t.clone(), k * 2 % 63).unwrap()).unwrap();
        let other = CuspidalData::new(MultChar::new(t.clone(), 11).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut differs = false;
        for _ in 0..50 {
            let g = MatF::random_invertible(f, 6, &mut rng);
            assert_eq!(pi.theta_char(&g).unwrap(), pi2.theta_char(&g).unwrap());
            differs |= pi.theta_char(&g).unwrap() != other.theta_char(&g).unwrap();
        }
        // 5 and 11 lie in different orbits, so some element should separate them
        let gen = MatF::companion(
            f,
            &crate::matfq::PolyF::new(
                1,
                vec![Elem::ONE, Elem::ONE, Elem::ZERO, Elem::ZERO, Elem::ZERO, Elem::ZERO, Elem::ONE],
            ),
        )
        .unwrap();
        differs |= pi.theta_char(&gen).unwrap() != other.theta_char(&gen).unwrap();
        assert!(differs);
    }

    #[test]
    fn non_regular_rejected() {
        let t = Arc::new(FieldTower::build(2, 1, 6).unwrap());
        assert!(CuspidalData::new(MultChar::new(t, 9).unwrap()).is_err());
    }
}
