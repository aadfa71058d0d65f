//! The mirabolic-type subgroups `M₁`, `M₂ = w₀M₁ᵀw₀^{-1}` of `GL(n, F_q)`, their
//! upper unitriangular subgroups, the character `μ`, and the induced
//! characters `χ_{ρ_k}` of `ind_{U_k}^{M_k} μ_k`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::charfn::{AdditiveChar, MultChar};
use crate::error::{Error, Result};
use crate::gf::{Elem, FieldElement, FieldTower, LevelField};
use crate::jacquet::LeviElement;
use crate::matfq::MatF;
use crate::CycloInt;

/// Default bound on the size of enumerated groups.
pub const DEFAULT_MAX_GROUP_ENUM: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    /// `M₁`: last row `(0, …, 0, 1)`.
    First,
    /// `M₂`: first column `(1, 0, …, 0)ᵀ`.
    Second,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::First => 1,
            Side::Second => 2,
        }
    }
}

/// Row of the type table of `M₁` (side 1) or `M₂` (side 2) matched by an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeLabel {
    pub side: Side,
    /// `1..=10`, or `None` for elements on which the character vanishes.
    pub index: Option<u8>,
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "Type-{i}"),
            None => write!(f, "untyped"),
        }
    }
}

/// Closed-form character value of a table row as a polynomial in `q`.
pub fn table_value(index: u8, q: i64) -> i64 {
    match index {
        2 | 8 | 10 => 1,
        4 => (1 - q) * (1 - q * q),
        1 | 3 | 5 | 6 | 7 | 9 => 1 - q,
        _ => panic!("table rows are numbered 1 to 10"),
    }
}

/// The closed form of [`table_value`] as text.
pub fn table_formula(index: u8) -> &'static str {
    match index {
        2 | 8 | 10 => "1",
        4 => "(1-q)(1-q^2)",
        _ => "(1-q)",
    }
}

/// `M₁` as `[[g, v], [0, 1]]`, enumerated over `g ∈ GL(n−1)` and `v`.
fn enumerate_mirabolic(field: &LevelField, n: usize) -> Result<Vec<MatF>> {
    if n == 1 {
        return Ok(vec![MatF::identity(1, 1)]);
    }
    let k = n - 1;
    let q = field.order();
    let gl: Vec<MatF> = (0..q.pow((k * k) as u32))
        .map(|i| MatF::from_enumeration_index(field, k, k, i))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|g| g.is_invertible(field))
        .collect();
    let mut out = Vec::with_capacity(gl.len() * q.pow(k as u32) as usize);
    for g in &gl {
        for vi in 0..q.pow(k as u32) {
            let v = MatF::from_enumeration_index(field, k, 1, vi)?;
            out.push(MatF::from_fn(1, n, n, |i, j| match (i < k, j < k) {
                (true, true) => g.get(i, j),
                (true, false) => v.get(i, 0),
                (false, false) => Elem::ONE,
                (false, true) => Elem::ZERO,
            }));
        }
    }
    Ok(out)
}

/// `|GL(k, F_q)|`.
pub fn gl_order(k: usize, q: u64) -> u128 {
    let qk = (q as u128).pow(k as u32);
    (0..k).map(|i| qk - (q as u128).pow(i as u32)).product()
}

/// `|M₁| = |GL(n−1)|·q^{n−1}`.
pub fn mirabolic_order(n: usize, q: u64) -> u128 {
    gl_order(n.saturating_sub(1), q) * (q as u128).pow(n.saturating_sub(1) as u32)
}

/// Canonical representative of the left coset `gU`: right multiplication by
/// upper unitriangular matrices adds multiples of earlier columns to later
/// ones, so each column is reduced against the lowest nonzero entry of every
/// earlier column.
pub fn coset_representative(field: &LevelField, g: &MatF) -> MatF {
    let n = g.rows();
    let mut m = g.clone();
    for i in 0..n {
        let Some(piv) = (0..n).rev().find(|&r| !m.get(r, i).is_zero()) else {
            continue;
        };
        let inv = field.inv(m.get(piv, i)).expect("pivot is nonzero");
        for j in i + 1..n {
            let c = field.mul(m.get(piv, j), inv);
            if c.is_zero() {
                continue;
            }
            for r in 0..n {
                let v = field.sub(m.get(r, j), field.mul(c, m.get(r, i)));
                m.set(r, j, v);
            }
        }
    }
    m
}

/// Enumerated `M₁`, `M₂`, coset transversals and the character `μ`.
#[derive(Debug)]
pub struct SubgroupSpec {
    n: usize,
    tower: Arc<FieldTower>,
    psi: AdditiveChar,
    m1: Vec<MatF>,
    m2: Vec<MatF>,
    // (t, t^{-1}) for each transversal, indexed by Side
    transversals: [Vec<(MatF, MatF)>; 2],
    // canonical representative -> transversal index
    rep_index: [HashMap<MatF, usize>; 2],
    chi_cache: [parking_lot::RwLock<HashMap<MatF, CycloInt>>; 2],
}

impl SubgroupSpec {
    pub fn new(tower: Arc<FieldTower>, n: usize, psi: AdditiveChar) -> Result<SubgroupSpec> {
        Self::with_cap(tower, n, psi, DEFAULT_MAX_GROUP_ENUM)
    }

    pub fn with_cap(tower: Arc<FieldTower>, n: usize, psi: AdditiveChar, cap: u64) -> Result<SubgroupSpec> {
        if n == 0 {
            return Err(Error::Precondition("n must be positive".into()));
        }
        let q = tower.q();
        let size = mirabolic_order(n, q);
        if size > cap as u128 || (q as u128).pow(((n - 1) * (n - 1)) as u32) > cap as u128 {
            return Err(Error::EnumerationCap { what: "mirabolic subgroup", got: size, cap });
        }
        let f = tower.base();
        let m1 = enumerate_mirabolic(f, n)?;
        let w0 = MatF::antidiagonal(1, n);
        let m2: Vec<MatF> =
            m1.iter().map(|g| w0.mul(f, &g.transpose()).and_then(|x| x.mul(f, &w0))).collect::<Result<_>>()?;
        let mut transversals: [Vec<(MatF, MatF)>; 2] = [Vec::new(), Vec::new()];
        let mut rep_index: [HashMap<MatF, usize>; 2] = [HashMap::new(), HashMap::new()];
        for (s, group) in [&m1, &m2].into_iter().enumerate() {
            for g in group {
                let r = coset_representative(f, g);
                if !rep_index[s].contains_key(&r) {
                    rep_index[s].insert(r.clone(), transversals[s].len());
                    let inv = r.inverse(f)?;
                    transversals[s].push((r, inv));
                }
            }
        }
        Ok(SubgroupSpec { n, tower, psi, m1, m2, transversals, rep_index, chi_cache: Default::default() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn psi(&self) -> &AdditiveChar {
        &self.psi
    }

    pub fn group(&self, side: Side) -> &[MatF] {
        match side {
            Side::First => &self.m1,
            Side::Second => &self.m2,
        }
    }

    pub fn transversal(&self, side: Side) -> impl Iterator<Item = &MatF> {
        self.transversals[side as usize].iter().map(|(t, _)| t)
    }

    /// `[M_k : U_k]`.
    pub fn index(&self, side: Side) -> usize {
        self.transversals[side as usize].len()
    }

    pub fn contains(&self, side: Side, m: &MatF) -> bool {
        let n = self.n;
        if m.rows() != n || m.cols() != n || !m.is_invertible(self.tower.base()) {
            return false;
        }
        match side {
            Side::First => (0..n).all(|j| m.get(n - 1, j) == if j == n - 1 { Elem::ONE } else { Elem::ZERO }),
            Side::Second => (0..n).all(|i| m.get(i, 0) == if i == 0 { Elem::ONE } else { Elem::ZERO }),
        }
    }

    fn require(&self, side: Side, m: &MatF) -> Result<()> {
        if self.contains(side, m) {
            Ok(())
        } else {
            Err(Error::NotMember(format!("element is not in M{}", side.index())))
        }
    }

    /// Trace exponent of `μ(u) = ψ₀(Σ u_{i,i+1})`.
    fn mu_exponent(&self, u: &MatF) -> u32 {
        let f = self.tower.base();
        let s = (0..self.n.saturating_sub(1)).fold(Elem::ZERO, |acc, i| f.add(acc, u.get(i, i + 1)));
        self.psi.exponent(s)
    }

    /// `μ_k(u)` for `u` upper unitriangular.
    pub fn mu_eval(&self, u: &MatF) -> Result<CycloInt> {
        if u.rows() != self.n || !u.is_upper_unitriangular() {
            return Err(Error::NotMember("element is not upper unitriangular".into()));
        }
        Ok(CycloInt::root_of_unity(self.tower.p() as u64, self.mu_exponent(u) as i64))
    }

    /// `χ_{ρ_k}(m) = Σ_{t : t^{-1}mt ∈ U} μ(t^{-1}mt)` over the transversal.
    pub fn induced_char_cosets(&self, side: Side, m: &MatF) -> Result<CycloInt> {
        self.require(side, m)?;
        if let Some(v) = self.chi_cache[side as usize].read().get(m) {
            return Ok(v.clone());
        }
        let f = self.tower.base();
        let p = self.tower.p() as usize;
        let mut counts = vec![0i64; p];
        for (t, tinv) in &self.transversals[side as usize] {
            let c = tinv.mul(f, m)?.mul(f, t)?;
            if c.is_upper_unitriangular() {
                counts[self.mu_exponent(&c) as usize] += 1;
            }
        }
        let v = CycloInt::from_coefficients(p as u64, counts.into_iter().map(Into::into).collect());
        self.chi_cache[side as usize].write().insert(m.clone(), v.clone());
        Ok(v)
    }

    /// `m` acting on `ind_U^M μ` with basis indexed by the transversal:
    /// `m·t_i = t_j·u` gives `m e_i = μ(u) e_j`. Returns `(j, exponent of μ(u))`
    /// for each `i`.
    pub fn monomial_matrix(&self, side: Side, m: &MatF) -> Result<Vec<(usize, u32)>> {
        self.require(side, m)?;
        let f = self.tower.base();
        let s = side as usize;
        self.transversals[s]
            .iter()
            .map(|(t, _)| {
                let mt = m.mul(f, t)?;
                let rep = coset_representative(f, &mt);
                let j = *self.rep_index[s]
                    .get(&rep)
                    .ok_or_else(|| Error::NotMember("coset representative outside the transversal".into()))?;
                let u = self.transversals[s][j].1.mul(f, &mt)?;
                if !u.is_upper_unitriangular() {
                    return Err(Error::NotMember("coset reduction left the unitriangular group".into()));
                }
                Ok((j, self.mu_exponent(&u)))
            })
            .collect()
    }

    /// Trace of [`Self::monomial_matrix`].
    pub fn induced_char_model(&self, side: Side, m: &MatF) -> Result<CycloInt> {
        let p = self.tower.p() as usize;
        let mut counts = vec![0i64; p];
        for (i, (j, e)) in self.monomial_matrix(side, m)?.into_iter().enumerate() {
            if i == j {
                counts[e as usize] += 1;
            }
        }
        Ok(CycloInt::from_coefficients(p as u64, counts.into_iter().map(Into::into).collect()))
    }

    /// `θ(a)·χ_{ρ1}(m₁)·χ_{ρ2}(m₂)`.
    pub fn rho_char(&self, theta: &MultChar, a: Elem, m1: &MatF, m2: &MatF) -> Result<CycloInt> {
        let ta = theta.eval(FieldElement::new(1, a))?;
        let c1 = self.induced_char_cosets(Side::First, m1)?;
        let c2 = self.induced_char_cosets(Side::Second, m2)?;
        ta.try_mul(&c1)?.try_mul(&c2)
    }

    /// Every element of `M_{ψ_A} ≅ Z × H_A` as `(a, m₁, m₂)`.
    pub fn enumerate_m_psi(&self) -> impl Iterator<Item = (Elem, &MatF, &MatF)> + '_ {
        let f = self.tower.base();
        f.nonzero().flat_map(move |a| self.m1.iter().flat_map(move |m1| self.m2.iter().map(move |m2| (a, m1, m2))))
    }

    /// `(q−1)·|M₁|²`.
    pub fn m_psi_order(&self) -> u128 {
        (self.tower.q() as u128 - 1) * (self.m1.len() as u128).pow(2)
    }

    /// The Levi element `a·diag(m₁, m₂)`.
    pub fn levi_element(&self, a: Elem, m1: &MatF, m2: &MatF) -> LeviElement {
        LeviElement::new(m1.clone(), m2.clone()).scaled(&self.tower, a)
    }

    /// Type-table row of `m`; `n = 3` only.
    pub fn classify_type(&self, side: Side, m: &MatF) -> Result<TypeLabel> {
        if self.n != 3 {
            return Err(Error::Precondition("the type tables are stated for n = 3".into()));
        }
        self.require(side, m)?;
        let f = self.tower.base();
        let matches: Vec<u8> = (1..=10u8)
            .filter(|&i| match side {
                Side::First => first_side_row(f, m, i),
                Side::Second => second_side_row(f, m, i),
            })
            .collect();
        if matches.len() > 1 {
            return Err(Error::Precondition(format!("element matches several rows: {matches:?}")));
        }
        Ok(TypeLabel { side, index: matches.first().copied() })
    }
}

fn nz(e: Elem) -> bool {
    !e.is_zero()
}

/// `M₁` type-table predicates for `m = [[a11,a12,a13],[a21,a22,a23],[0,0,1]]`.
fn first_side_row(f: &LevelField, m: &MatF, row: u8) -> bool {
    let a = |i: usize, j: usize| m.get(i - 1, j - 1);
    let one = Elem::ONE;
    let unit_diag = a(1, 1) == one && a(2, 2) == one;
    let upper = unit_diag && a(2, 1).is_zero();
    match row {
        1 => upper && nz(a(1, 2)) && a(2, 3).is_zero(),
        2 => upper && nz(a(1, 2)) && nz(a(2, 3)),
        3 => upper && a(1, 2).is_zero() && a(1, 3).is_zero() && nz(a(2, 3)),
        4 => upper && a(1, 2).is_zero() && a(1, 3).is_zero() && a(2, 3).is_zero(),
        5 => upper && a(1, 2).is_zero() && nz(a(1, 3)) && a(2, 3).is_zero(),
        6 => upper && a(1, 2).is_zero() && nz(a(1, 3)) && nz(a(2, 3)),
        7 => unit_diag && nz(a(2, 1)) && a(1, 2).is_zero() && a(1, 3).is_zero(),
        8 => unit_diag && nz(a(2, 1)) && a(1, 2).is_zero() && nz(a(1, 3)),
        9 | 10 => {
            let (a11, a21) = (a(1, 1), a(2, 1));
            // a11 + a22 = 2 from the conjugation condition; a11 = 1 falls under rows 7 and 8
            if a21.is_zero() || a11 == one || f.add(a11, a(2, 2)) != f.from_int(2) {
                return false;
            }
            let a11m1 = f.sub(a11, one);
            let inv21 = f.inv(a21).expect("a21 is nonzero");
            let a12 = f.neg(f.mul(inv21, f.mul(a11m1, a11m1)));
            if a(1, 2) != a12 {
                return false;
            }
            let delta = f.mul(inv21, f.mul(a(2, 3), a11m1));
            (a(1, 3) == delta) == (row == 9)
        }
        _ => false,
    }
}

/// `M₂` type-table predicates for `m = [[1,y12,y13],[0,y22,y23],[0,y32,y33]]`.
fn second_side_row(f: &LevelField, m: &MatF, row: u8) -> bool {
    let y = |i: usize, j: usize| m.get(i - 1, j - 1);
    let one = Elem::ONE;
    let unit_diag = y(2, 2) == one && y(3, 3) == one;
    let upper = unit_diag && y(3, 2).is_zero();
    match row {
        1 => upper && y(1, 2).is_zero() && nz(y(2, 3)),
        2 => upper && nz(y(1, 2)) && nz(y(2, 3)),
        3 => upper && nz(y(1, 2)) && y(1, 3).is_zero() && y(2, 3).is_zero(),
        4 => upper && y(1, 2).is_zero() && y(1, 3).is_zero() && y(2, 3).is_zero(),
        5 => upper && y(1, 2).is_zero() && nz(y(1, 3)) && y(2, 3).is_zero(),
        6 => upper && nz(y(1, 2)) && nz(y(1, 3)) && y(2, 3).is_zero(),
        7 => unit_diag && nz(y(3, 2)) && y(1, 3).is_zero() && y(2, 3).is_zero(),
        8 => unit_diag && nz(y(3, 2)) && nz(y(1, 3)) && y(2, 3).is_zero(),
        9 | 10 => {
            let (y22, y32) = (y(2, 2), y(3, 2));
            // y22 + y33 = 2 from the conjugation condition; y22 = 1 falls under rows 7 and 8
            if y32.is_zero() || y22 == one || f.add(y22, y(3, 3)) != f.from_int(2) {
                return false;
            }
            let y22m1 = f.sub(y22, one);
            let inv32 = f.inv(y32).expect("y32 is nonzero");
            if y(2, 3) != f.neg(f.mul(inv32, f.mul(y22m1, y22m1))) {
                return false;
            }
            let gamma = f.mul(f.mul(y32, y(1, 3)), f.inv(y22m1).expect("y22 differs from 1"));
            (y(1, 2) == f.neg(gamma)) == (row == 9)
        }
        _ => false,
    }
}

/// The explicit transversals for `n = 3`: `S₁ ∪ S₂` of `U₁` in `M₁` and
/// `S₃ ∪ S₄` of `U₂` in `M₂`.
pub fn explicit_transversal(field: &LevelField, side: Side) -> Vec<MatF> {
    let mut out = Vec::new();
    let (z, o) = (Elem::ZERO, Elem::ONE);
    let rows = |r: [[Elem; 3]; 3]| MatF::from_rows(1, r.iter().map(|x| x.to_vec()).collect()).expect("3x3");
    for a in field.nonzero() {
        for b in field.nonzero() {
            out.push(match side {
                Side::First => rows([[a, z, z], [z, b, z], [z, z, o]]),
                Side::Second => rows([[o, z, z], [z, a, z], [z, z, b]]),
            });
        }
    }
    for p in field.elements() {
        for q in field.nonzero() {
            for r in field.nonzero() {
                out.push(match side {
                    Side::First => rows([[p, q, z], [r, z, z], [z, z, o]]),
                    Side::Second => rows([[o, z, z], [z, p, q], [z, r, z]]),
                });
            }
        }
    }
    out
}
