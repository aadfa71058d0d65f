//! `dim Ker(h − 1)` for `h = [[m₁, X], [0, m₂]]` with unipotent diagonal blocks,
//! via `dim Ker(m₁−1) + dim Ker(m₂−1) − dim XW′ + dim(XW′ ∩ Im(m₁−1))`,
//! `W′ = Ker(m₂−1)`.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::cuspchar::unipotent_value;
use crate::error::{Error, Result};
use crate::gf::{Elem, LevelField};
use crate::jacquet::{JacquetSpec, LeviElement};
use crate::matfq::MatF;
use crate::CycloInt;

/// `(g − 1)^n = 0`.
pub fn is_unipotent(field: &LevelField, g: &MatF) -> bool {
    if !g.is_square() {
        return false;
    }
    let n = g.rows();
    let Ok(nil) = g.minus_scalar(field, Elem::ONE) else {
        return false;
    };
    let mut p = nil.clone();
    for _ in 1..n {
        p = p.mul(field, &nil).expect("square");
    }
    p.is_zero()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockElement {
    pub m1: MatF,
    pub m2: MatF,
    pub x: MatF,
}

impl BlockElement {
    pub fn new(field: &LevelField, m1: MatF, m2: MatF, x: MatF) -> Result<BlockElement> {
        let n = m1.rows();
        for b in [&m1, &m2, &x] {
            if b.rows() != n || b.cols() != n {
                return Err(Error::Shape(format!("blocks must be {n}x{n}")));
            }
        }
        if !is_unipotent(field, &m1) || !is_unipotent(field, &m2) {
            return Err(Error::Precondition("diagonal blocks must be unipotent".into()));
        }
        Ok(BlockElement { m1, m2, x })
    }

    pub fn n(&self) -> usize {
        self.m1.rows()
    }

    /// `[[m₁, X], [0, m₂]]`.
    pub fn assemble(&self) -> MatF {
        let n = self.n();
        MatF::block(&self.m1, &self.x, &MatF::zeros(self.m1.level(), n, n), &self.m2).expect("n x n blocks")
    }
}

/// The four terms of the kernel-dimension formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KerDimParts {
    pub ker_m1: usize,
    pub ker_m2: usize,
    pub xw: usize,
    pub xw_cap_image: usize,
}

impl KerDimParts {
    pub fn total(&self) -> usize {
        self.ker_m1 + self.ker_m2 + self.xw_cap_image - self.xw
    }
}

/// Precomputed data for a fixed `(m₁, m₂)`, reused across many `X`.
#[derive(Clone, Debug)]
pub struct BlockPair {
    n: usize,
    ker_m1: usize,
    ker_m2_basis: Vec<Vec<Elem>>,
    image_m1: MatF,
    rank_m1: usize,
}

impl BlockPair {
    pub fn new(field: &LevelField, m1: &MatF, m2: &MatF) -> Result<BlockPair> {
        let n = m1.rows();
        let (d1, d2) = (m1.minus_scalar(field, Elem::ONE)?, m2.minus_scalar(field, Elem::ONE)?);
        let rank_m1 = d1.rank(field);
        Ok(BlockPair { n, ker_m1: n - rank_m1, ker_m2_basis: d2.kernel_basis(field), image_m1: d1, rank_m1 })
    }

    pub fn parts(&self, field: &LevelField, x: &MatF) -> Result<KerDimParts> {
        let n = self.n;
        // XW′ spanned by the images of a basis of W′
        let images: Vec<Vec<Elem>> = self
            .ker_m2_basis
            .iter()
            .map(|v| {
                (0..n).map(|i| (0..n).fold(Elem::ZERO, |s, j| field.add(s, field.mul(x.get(i, j), v[j])))).collect()
            })
            .collect();
        let xw_mat = MatF::from_columns(1, n, &images);
        let xw = if images.is_empty() { 0 } else { xw_mat.rank(field) };
        let stacked = MatF::from_fn(1, n, images.len() + n, |i, j| {
            if j < images.len() {
                images[j][i]
            } else {
                self.image_m1.get(i, j - images.len())
            }
        });
        let sum_dim = stacked.rank(field);
        Ok(KerDimParts {
            ker_m1: self.ker_m1,
            ker_m2: self.ker_m2_basis.len(),
            xw,
            xw_cap_image: xw + self.rank_m1 - sum_dim,
        })
    }
}

/// The four formula terms for `b`.
pub fn ker_dim_parts(field: &LevelField, b: &BlockElement) -> Result<KerDimParts> {
    BlockPair::new(field, &b.m1, &b.m2)?.parts(field, &b.x)
}

/// `dim Ker(h − 1)` by the block formula.
pub fn ker_dim_formula(field: &LevelField, b: &BlockElement) -> Result<usize> {
    Ok(ker_dim_parts(field, b)?.total())
}

/// `dim Ker(h − 1)` of the assembled `2n×2n` matrix.
pub fn ker_dim_direct(field: &LevelField, b: &BlockElement) -> Result<usize> {
    b.assemble().minus_scalar(field, Elem::ONE)?.ker_dim(field)
}

/// `Θ_{N,ψ_A}(m)` for unipotent `m₁, m₂`, with every cuspidal value taken from
/// the unipotent formula at `t` given by [`ker_dim_formula`].
pub fn twisted_char_unipotent(spec: &JacquetSpec, m: &LeviElement) -> Result<CycloInt> {
    let f = spec.tower().base();
    if !is_unipotent(f, &m.m1) || !is_unipotent(f, &m.m2) {
        return Err(Error::Precondition("diagonal blocks must be unipotent".into()));
    }
    let n = spec.n();
    let q = spec.q();
    let total = spec.n_order();
    let pair = BlockPair::new(f, &m.m1, &m.m2)?;
    let a_eff = spec.a().mul(f, &m.m1.inverse(f)?)?;
    let mut counts = vec![vec![0u64; q as usize]; 2 * n + 1];
    for idx in 0..total {
        let x = MatF::from_enumeration_index(f, n, n, idx)?;
        let t = pair.parts(f, &x)?.total();
        let beta = a_eff.mul(f, &x)?.trace(f)?;
        counts[t][f.to_index(beta) as usize] += 1;
    }
    let conductor = spec.pi().theta().conductor();
    let mut acc = CycloInt::zero(conductor);
    for (t, c) in counts.iter().enumerate() {
        if t == 0 || c.iter().all(|&v| v == 0) {
            continue;
        }
        let v: BigInt = unipotent_value(2 * n, q, 2 * n - t)?;
        acc = acc.try_add(&spec.psi().weighted_conj_sum(c).scale(&v))?;
    }
    acc.divide_exact(&BigInt::from(total))
}

/// One row of the partition of `S(0) = {X : X₃₁ = 0}` for
/// `(m₁, m₂) = (I + E₁₂, I + E₂₃)`, `A = E₁₃`.
#[derive(Clone, Copy, Debug)]
pub struct FiberRow {
    pub label: &'static str,
    pub xw: usize,
    pub xw_cap_image: usize,
    pub t: usize,
    pub cardinality: fn(i128) -> i128,
    pub predicate: fn(&LevelField, &MatF) -> bool,
}

fn cells(x: &MatF) -> [bool; 5] {
    // a, b, c, d, k nonzero
    [x.get(0, 0), x.get(0, 1), x.get(1, 0), x.get(1, 1), x.get(2, 1)].map(|e| !e.is_zero())
}

fn det2(field: &LevelField, x: &MatF) -> bool {
    let ad = field.mul(x.get(0, 0), x.get(1, 1));
    let bc = field.mul(x.get(0, 1), x.get(1, 0));
    ad != bc
}

fn col1(x: &MatF) -> bool {
    let [a, _, c, _, _] = cells(x);
    a || c
}

fn col2(x: &MatF) -> bool {
    let [_, b, _, d, _] = cells(x);
    b || d
}

/// The twelve rows of the fiber table for `T(1,1)`.
pub fn t11_partition() -> Vec<FiberRow> {
    let row = |label, xw, xw_cap_image, t, cardinality, predicate| FiberRow {
        label,
        xw,
        xw_cap_image,
        t,
        cardinality,
        predicate,
    };
    vec![
        row("1a", 0, 0, 4, |q| q.pow(3), |_, x| !col1(x) && !col2(x) && !cells(x)[4]),
        row("1b", 1, 0, 3, |q| (q - 1) * q.pow(3), |_, x| !col1(x) && !col2(x) && cells(x)[4]),
        row("2a", 2, 1, 3, |q| (q * q - 1) * (q - 1) * q.pow(4), |f, x| det2(f, x) && !cells(x)[4]),
        row("2b", 2, 0, 2, |q| (q - 1).pow(3) * q.pow(5), |f, x| det2(f, x) && cells(x)[2] && cells(x)[4]),
        row("2c", 2, 1, 3, |q| (q - 1).pow(3) * q.pow(4), |f, x| det2(f, x) && !cells(x)[2] && cells(x)[4]),
        row("3a", 1, 0, 3, |q| (q - 1) * q.pow(5), |f, x| col1(x) && !det2(f, x) && cells(x)[2] && !cells(x)[4]),
        row("3b", 1, 1, 4, |q| (q - 1) * q.pow(4), |f, x| col1(x) && !det2(f, x) && !cells(x)[2] && !cells(x)[4]),
        row("3c", 2, 0, 2, |q| (q - 1).pow(2) * q.pow(5), |f, x| col1(x) && !det2(f, x) && cells(x)[2] && cells(x)[4]),
        row("3d", 2, 1, 3, |q| (q - 1).pow(2) * q.pow(4), |f, x| col1(x) && !det2(f, x) && !cells(x)[2] && cells(x)[4]),
        row("4a", 1, 0, 3, |q| (q - 1) * q.pow(4), |_, x| !col1(x) && cells(x)[3] && !cells(x)[4]),
        row("4b", 1, 1, 4, |q| (q - 1) * q.pow(3), |_, x| !col1(x) && !cells(x)[3] && cells(x)[1] && !cells(x)[4]),
        row("4c", 1, 0, 3, |q| (q * q - 1) * (q - 1) * q.pow(3), |_, x| !col1(x) && col2(x) && cells(x)[4]),
    ]
}

/// The `T(1,1)` representative `(I + E₁₂, I + E₂₃)`.
pub fn t11_representative() -> (MatF, MatF) {
    let mut m1 = MatF::identity(1, 3);
    m1.set(0, 1, Elem::ONE);
    let mut m2 = MatF::identity(1, 3);
    m2.set(1, 2, Elem::ONE);
    (m1, m2)
}

/// Row-by-row comparison of the fiber table with enumeration of `S(0)`:
/// `(label, tabulated cardinality, counted, row data agrees with the formula)`.
pub fn check_t11_partition(field: &LevelField) -> Result<Vec<(&'static str, i128, u64, bool)>> {
    let (m1, m2) = t11_representative();
    let pair = BlockPair::new(field, &m1, &m2)?;
    let rows = t11_partition();
    let mut counted = vec![0u64; rows.len()];
    let mut agrees = vec![true; rows.len()];
    let q = field.order();
    for idx in 0..q.pow(9) {
        let x = MatF::from_enumeration_index(field, 3, 3, idx)?;
        if !x.get(2, 0).is_zero() {
            continue;
        }
        let hits: Vec<usize> = (0..rows.len()).filter(|&i| (rows[i].predicate)(field, &x)).collect();
        let [i] = hits[..] else {
            return Err(Error::Precondition(format!("{x:?} lies in rows {hits:?}")));
        };
        counted[i] += 1;
        let parts = pair.parts(field, &x)?;
        let direct = ker_dim_direct(field, &BlockElement::new(field, m1.clone(), m2.clone(), x)?)?;
        let r = &rows[i];
        agrees[i] &= parts.xw == r.xw && parts.xw_cap_image == r.xw_cap_image && parts.total() == r.t && direct == r.t;
    }
    Ok(rows.iter().zip(counted).zip(agrees).map(|((r, c), ok)| (r.label, (r.cardinality)(q as i128), c, ok)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{smallest_regular, MultChar};
    use crate::cuspchar::CuspidalData;
    use crate::gf::FieldTower;
    use crate::levi::{Side, SubgroupSpec};
    use crate::AdditiveChar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_unipotent(f: &LevelField, n: usize, rng: &mut ChaCha8Rng) -> MatF {
        let mut u = MatF::random(f, n, n, rng);
        for i in 0..n {
            for j in 0..=i {
                u.set(i, j, if i == j { Elem::ONE } else { Elem::ZERO });
            }
        }
        let g = MatF::random_invertible(f, n, rng);
        g.mul(f, &u).unwrap().mul(f, &g.inverse(f).unwrap()).unwrap()
    }

    #[test]
    fn trivial_cases() {
        let t = FieldTower::build(3, 1, 1).unwrap();
        let f = t.base();
        let id = MatF::identity(1, 3);
        let b = BlockElement::new(f, id.clone(), id.clone(), MatF::zeros(1, 3, 3)).unwrap();
        assert_eq!(ker_dim_formula(f, &b).unwrap(), 6);
        let e13 = BlockElement::new(f, id.clone(), id.clone(), MatF::unit(1, 3, 1, 3)).unwrap();
        assert_eq!(ker_dim_direct(f, &e13).unwrap(), 5);
        assert_eq!(ker_dim_formula(f, &e13).unwrap(), 5);
        for idx in [0u64, 7, 500, 9841, 19682] {
            let x = MatF::from_enumeration_index(f, 3, 3, idx).unwrap();
            let r = x.rank(f);
            let b = BlockElement::new(f, id.clone(), id.clone(), x).unwrap();
            assert_eq!(ker_dim_formula(f, &b).unwrap(), 6 - r);
        }
        let bad = MatF::scalar(1, 3, f.from_int(2));
        assert!(BlockElement::new(f, bad, id.clone(), id.clone()).is_err());
    }

    #[test]
    fn formula_matches_direct_on_random_unipotent_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        for p in [2u64, 3] {
            let t = Arc::new(FieldTower::build(p, 1, 1).unwrap());
            let f = t.base();
            let s = SubgroupSpec::new(t.clone(), 3, AdditiveChar::standard(t.clone())).unwrap();
            let uni = |side| s.group(side).iter().filter(|g| is_unipotent(f, g)).cloned().collect::<Vec<_>>();
            let (u1, u2) = (uni(Side::First), uni(Side::Second));
            for i in 0..10_000 {
                let (m1, m2) = if i % 2 == 0 {
                    (u1[rng.gen_range(0..u1.len())].clone(), u2[rng.gen_range(0..u2.len())].clone())
                } else {
                    (random_unipotent(f, 3, &mut rng), random_unipotent(f, 3, &mut rng))
                };
                let b = BlockElement::new(f, m1, m2, MatF::random(f, 3, 3, &mut rng)).unwrap();
                assert_eq!(ker_dim_formula(f, &b).unwrap(), ker_dim_direct(f, &b).unwrap(), "{b:?}");
            }
        }
    }

    #[test]
    fn t11_fiber_table() {
        for p in [2u64, 3] {
            let t = FieldTower::build(p, 1, 1).unwrap();
            let rows = check_t11_partition(t.base()).unwrap();
            assert_eq!(rows.len(), 12);
            for (label, table, counted, ok) in &rows {
                assert_eq!(*table, *counted as i128, "row {label} at q={p}");
                assert!(ok, "row {label} at q={p}");
            }
            let total: u64 = rows.iter().map(|r| r.2).sum();
            assert_eq!(total, p.pow(8));
        }
    }

    #[test]
    fn formula_path_matches_cuspidal_path() {
        for p in [2u64, 3] {
            let t = Arc::new(FieldTower::build(p, 1, 6).unwrap());
            let theta = MultChar::new(t.clone(), smallest_regular(&t).unwrap()).unwrap();
            let spec = JacquetSpec::standard(Arc::new(CuspidalData::new(theta).unwrap())).unwrap();
            let (m1, m2) = t11_representative();
            let f = t.base();
            let cases = [
                LeviElement::identity(3),
                LeviElement::new(m1.clone(), m2.clone()),
                LeviElement::new(m1.clone(), MatF::identity(1, 3)),
                LeviElement::new(MatF::parse_literal("1,0,1;0,1,1;0,0,1", f).unwrap(), m2),
            ];
            for m in &cases {
                assert_eq!(twisted_char_unipotent(&spec, m).unwrap(), spec.twisted_char(m).unwrap());
            }
        }
    }
}
