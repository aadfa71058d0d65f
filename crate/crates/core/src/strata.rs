//! Rank strata of `M(n, F_q)` and the sets `Y_{n,r}^α = {X : rank X = r, tr(AX) = α}`.

use num_traits::Num;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Elem, LevelField};
use crate::matfq::{rank_in_place, MatF};

/// Default bound on `q^{n²}` for exhaustive counts.
pub const DEFAULT_MAX_ENUM: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlphaClass {
    Zero,
    Nonzero,
}

impl AlphaClass {
    pub fn of(alpha: Elem) -> AlphaClass {
        if alpha.is_zero() {
            AlphaClass::Zero
        } else {
            AlphaClass::Nonzero
        }
    }
}

#[derive(Clone, Debug)]
pub struct StrataQuery {
    pub n: usize,
    pub r: usize,
    pub alpha: Elem,
    /// Rank-one `n×n` matrix over the base field.
    pub a: MatF,
}

impl StrataQuery {
    /// `A = E₁₁`.
    pub fn standard(n: usize, r: usize, alpha: Elem) -> StrataQuery {
        StrataQuery { n, r, alpha, a: MatF::unit(1, n, 1, 1) }
    }
}

/// `counts[r][to_index(α)] = #Y_{n,r}^α`, by exhaustive enumeration.
pub fn stratum_table(field: &LevelField, n: usize, a: &MatF, cap: u64) -> Result<Vec<Vec<u64>>> {
    if a.rows() != n || a.cols() != n {
        return Err(Error::Shape(format!("A must be {n}x{n}")));
    }
    let q = field.order();
    let total = (q as u128).pow((n * n) as u32);
    if total > cap as u128 {
        return Err(Error::EnumerationCap { what: "matrix space", got: total, cap });
    }
    let elems: Vec<Elem> = (0..q as u32).map(|i| field.from_index(i)).collect::<Result<_>>()?;
    // tr(AX) = Σ A_ij X_ji
    let weights: Vec<(usize, Elem)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !a.get(i, j).is_zero())
        .map(|(i, j)| (j * n + i, a.get(i, j)))
        .collect();
    let total = total as u64;
    let chunk = 1u64 << 12;
    let empty = || vec![vec![0u64; q as usize]; n + 1];
    let table = (0..total.div_ceil(chunk))
        .into_par_iter()
        .fold(empty, |mut acc, c| {
            let mut x = vec![Elem::ZERO; n * n];
            let mut buf = vec![Elem::ZERO; n * n];
            for idx in c * chunk..((c + 1) * chunk).min(total) {
                let mut v = idx;
                for e in x.iter_mut() {
                    *e = elems[(v % q) as usize];
                    v /= q;
                }
                let tr = weights.iter().fold(Elem::ZERO, |s, &(k, w)| field.add(s, field.mul(w, x[k])));
                buf.copy_from_slice(&x);
                let r = rank_in_place(field, &mut buf, n, n);
                acc[r][field.to_index(tr) as usize] += 1;
            }
            acc
        })
        .reduce(empty, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        });
    Ok(table)
}

/// `#Y_{n,r}^α` by enumeration.
pub fn count_brute(field: &LevelField, qy: &StrataQuery, cap: u64) -> Result<u64> {
    if qy.r > qy.n {
        return Err(Error::Precondition(format!("rank {} exceeds n = {}", qy.r, qy.n)));
    }
    let table = stratum_table(field, qy.n, &qy.a, cap)?;
    Ok(table[qy.r][field.to_index(qy.alpha) as usize])
}

/// Named pieces of the rank-two partition of `Y_{3,2}^α` with their sizes.
pub fn rank_two_parts(q: i128, class: AlphaClass) -> Vec<(&'static str, i128)> {
    let (q2, q3) = (q * q, q * q * q);
    match class {
        AlphaClass::Zero => vec![
            ("B1", (q2 - 1) * (q2 - 1)),
            ("C1", (q2 - 1) * (q2 - q) * q2),
            ("C2", 2 * (q2 - 1) * (q2 - q) * (q2 - q)),
            ("C3", (q2 - 1) * (q2 - q) * (q2 - q) * (q - 1)),
            ("E1", 2 * (q2 - 1) * (q2 - q)),
            ("E2", 2 * (q2 - 1) * (q2 - 1) * (q - 1)),
            ("E3", 2 * (q2 - 1) * (q2 - q)),
            ("E4", 2 * (q3 - q) * (q - 1) * (q - 1)),
            ("E5", (q2 - 1) * (q - 1) * (q2 - q)),
            ("E6", 2 * q * (q2 - 1) * (q - 1) * (q - 1)),
            ("E7", (q2 - 1) * (q - 1) * (q - 1) * (q2 - 2 * q)),
            ("E8", (q2 - 1) * (q2 - 1) * (q - 1) * (q - 1)),
        ],
        AlphaClass::Nonzero => vec![
            ("B2", (q2 - 1) * (q2 - 1)),
            ("C4", 2 * (q2 - 1) * (q2 - q) * (q2 - q)),
            ("C5", (q2 - 1) * (q3 - q2) * (q - 1) * (q - 1)),
            ("F1", 2 * (q2 - 1) * q2),
            ("F2", 2 * (q2 - 1) * (q2 - q)),
            ("F3", 2 * (q2 - 1) * (q2 - 1) * (q - 1)),
            ("F4", 2 * q * (q2 - 1) * (q - 1) * (q - 1)),
            ("F5", (q2 - 1) * q2 * (q - 1)),
            ("F6", 2 * q * (q2 - 1) * (q - 1) * (q - 1)),
            ("F7", (q2 - 1) * (q - 1) * (q - 1) * (q2 - 2 * q)),
            ("F8", (q2 - 1) * (q2 - 1) * (q - 1) * (q - 1)),
        ],
    }
}

/// Closed-form `#Y_{3,r}^α` from the tabulated polynomials in `q`.
pub fn count_closed(n: usize, q: u64, r: usize, class: AlphaClass) -> Result<i128> {
    if n != 3 {
        return Err(Error::Precondition("closed forms are tabulated for n = 3 only".into()));
    }
    let q = q as i128;
    let (q2, q3) = (q * q, q * q * q);
    Ok(match (r, class) {
        (0, AlphaClass::Zero) => 1,
        (0, AlphaClass::Nonzero) => 0,
        (1, AlphaClass::Zero) => (q2 - 1) * q2 + (q3 - 1) * q + (q3 - 1),
        (1, AlphaClass::Nonzero) => q2 * q2,
        (2, c) => rank_two_parts(q, c).iter().map(|&(_, v)| v).sum(),
        (3, AlphaClass::Zero) => (q2 - 1) * (q3 - q) * (q3 - q2),
        (3, AlphaClass::Nonzero) => q2 * (q3 - q) * (q3 - q2),
        _ => return Err(Error::Precondition(format!("rank {r} exceeds n = 3"))),
    })
}

/// The map `X ↦ α^{-1}βX` identifies `Y^α` with `Y^β`: all nonzero `α` give the
/// same count.
pub fn scaling_bijection_check(field: &LevelField, n: usize, r: usize, cap: u64) -> Result<bool> {
    let table = stratum_table(field, n, &MatF::unit(1, n, 1, 1), cap)?;
    let row = table.get(r).ok_or_else(|| Error::Precondition(format!("rank {r} exceeds n = {n}")))?;
    let mut nonzero = field.nonzero().map(|a| row[field.to_index(a) as usize]);
    let first = nonzero.next();
    Ok(nonzero.all(|c| Some(c) == first))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataRow {
    pub r: usize,
    pub alpha_class: AlphaClass,
    pub closed: i128,
    /// Enumerated count, `None` when the nonzero `α` disagree among themselves.
    pub brute: Option<u64>,
    pub matches: bool,
}

/// Closed form against enumeration for every `(r, α-class)` at `n = 3`, `A = E₁₁`.
pub fn strata_rows(field: &LevelField, cap: u64) -> Result<Vec<StrataRow>> {
    let table = stratum_table(field, 3, &MatF::unit(1, 3, 1, 1), cap)?;
    let mut rows = Vec::new();
    for (r, counts) in table.iter().enumerate() {
        for class in [AlphaClass::Zero, AlphaClass::Nonzero] {
            let seen: Vec<u64> = field
                .elements()
                .filter(|&a| AlphaClass::of(a) == class)
                .map(|a| counts[field.to_index(a) as usize])
                .collect();
            let brute = seen.iter().all(|&c| c == seen[0]).then_some(seen[0]);
            let closed = count_closed(3, field.order(), r, class)?;
            rows.push(StrataRow {
                r,
                alpha_class: class,
                closed,
                brute,
                matches: brute.map(i128::from) == Some(closed),
            });
        }
    }
    Ok(rows)
}

/// `Σ_α #Y_{n,r}^α` equals the rank-stratum count for every `r`.
pub fn rank_totals_match(field: &LevelField, n: usize, cap: u64) -> Result<bool> {
    let table = stratum_table(field, n, &MatF::unit(1, n, 1, 1), cap)?;
    Ok(table
        .iter()
        .enumerate()
        .all(|(r, c)| c.iter().sum::<u64>() as u128 == rank_stratum_count::<u128>(n, n, r, field.order())))
}

/// Number of `n×m` matrices of rank `r` over `F_q`:
/// `Π_{i<r} (q^n − q^i)(q^m − q^i)/(q^r − q^i)`.
pub fn rank_stratum_count<T>(n: usize, m: usize, r: usize, q: u64) -> T
where
    T: Num + Clone + From<u64>,
{
    if r > n.min(m) {
        return T::zero();
    }
    let pow = |e: usize| (0..e).fold(T::one(), |acc, _| acc * T::from(q));
    let mut num = T::one();
    let mut den = T::one();
    for i in 0..r {
        num = num * (pow(n) - pow(i)) * (pow(m) - pow(i));
        den = den * (pow(r) - pow(i));
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldTower;
    use num_bigint::BigInt;

    fn field(p: u64, f: u32) -> FieldTower {
        FieldTower::build(p, f, 1).unwrap()
    }

    #[test]
    fn brute_examples() {
        let t = field(2, 1);
        let f = t.base();
        let c = |r, alpha| count_brute(f, &StrataQuery::standard(3, r, alpha), DEFAULT_MAX_ENUM).unwrap();
        assert_eq!(c(3, Elem::ZERO), 72);
        assert_eq!(c(1, Elem::ONE), 16);
        assert_eq!(c(0, Elem::ZERO), 1);
        assert_eq!(c(0, Elem::ONE), 0);
        assert_eq!(c(2, Elem::ZERO), 150);
        assert_eq!(c(2, Elem::ONE), 144);
    }

    #[test]
    fn closed_forms_match_enumeration() {
        for (p, fdeg) in [(2u64, 1u32), (3, 1), (2, 2)] {
            let t = field(p, fdeg);
            let f = t.base();
            let table = stratum_table(f, 3, &MatF::unit(1, 3, 1, 1), DEFAULT_MAX_ENUM).unwrap();
            for (r, row) in table.iter().enumerate() {
                for alpha in f.elements() {
                    let closed = count_closed(3, f.order(), r, AlphaClass::of(alpha)).unwrap();
                    assert_eq!(row[f.to_index(alpha) as usize] as i128, closed, "q={} r={r}", f.order());
                }
                let total: u64 = row.iter().sum();
                assert_eq!(total as u128, rank_stratum_count::<u128>(3, 3, r, f.order()));
            }
        }
        assert_eq!(count_closed(3, 2, 1, AlphaClass::Zero).unwrap(), 33);
        assert_eq!(count_closed(3, 2, 3, AlphaClass::Nonzero).unwrap(), 96);
        assert!(count_closed(2, 2, 1, AlphaClass::Zero).is_err());
    }

    #[test]
    fn counts_do_not_depend_on_the_rank_one_matrix() {
        for p in [2u64, 3] {
            let t = field(p, 1);
            let f = t.base();
            let e11 = stratum_table(f, 3, &MatF::unit(1, 3, 1, 1), DEFAULT_MAX_ENUM).unwrap();
            let e13 = stratum_table(f, 3, &MatF::unit(1, 3, 1, 3), DEFAULT_MAX_ENUM).unwrap();
            assert_eq!(e11, e13);
            let ones = MatF::from_fn(1, 3, 3, |_, _| Elem::ONE);
            assert_eq!(e11, stratum_table(f, 3, &ones, DEFAULT_MAX_ENUM).unwrap());
        }
    }

    #[test]
    fn scaling_bijection() {
        for (p, fdeg) in [(3u64, 1u32), (2, 2), (5, 1)] {
            let t = field(p, fdeg);
            for r in 0..=3 {
                assert!(scaling_bijection_check(t.base(), 3, r, DEFAULT_MAX_ENUM).unwrap());
            }
        }
    }

    #[test]
    fn rank_strata_totals() {
        assert_eq!(rank_stratum_count::<u64>(3, 3, 1, 2), 49);
        assert_eq!(rank_stratum_count::<u64>(3, 3, 0, 7), 1);
        assert_eq!(rank_stratum_count::<u64>(3, 3, 3, 2), 168);
        assert_eq!(rank_stratum_count::<u64>(2, 3, 3, 2), 0);
        for q in [2u64, 3, 4, 5] {
            for (n, m) in [(1usize, 4usize), (2, 3), (3, 3), (4, 2)] {
                let total: BigInt = (0..=n.min(m)).map(|r| rank_stratum_count::<BigInt>(n, m, r, q)).sum();
                assert_eq!(total, BigInt::from(q).pow((n * m) as u32));
            }
        }
        let t = field(3, 1);
        let f = t.base();
        for (n, m) in [(2usize, 3usize), (3, 2), (1, 5)] {
            let mut counts = vec![0u64; n.min(m) + 1];
            for idx in 0..3u64.pow((n * m) as u32) {
                counts[MatF::from_enumeration_index(f, n, m, idx).unwrap().rank(f)] += 1;
            }
            for (r, &c) in counts.iter().enumerate() {
                assert_eq!(c, rank_stratum_count::<u64>(n, m, r, 3));
            }
        }
    }

    #[test]
    fn rows_and_totals() {
        for (p, fdeg) in [(2u64, 1u32), (2, 2)] {
            let t = field(p, fdeg);
            let rows = strata_rows(t.base(), DEFAULT_MAX_ENUM).unwrap();
            assert_eq!(rows.len(), 8);
            assert!(rows.iter().all(|r| r.matches));
            assert!(rank_totals_match(t.base(), 3, DEFAULT_MAX_ENUM).unwrap());
            assert!(rank_totals_match(t.base(), 2, DEFAULT_MAX_ENUM).unwrap());
        }
    }

    #[test]
    fn cap_and_shape_errors() {
        let t = field(3, 1);
        assert!(matches!(stratum_table(t.base(), 3, &MatF::unit(1, 3, 1, 1), 1000), Err(Error::EnumerationCap { .. })));
        assert!(stratum_table(t.base(), 3, &MatF::unit(1, 2, 1, 1), DEFAULT_MAX_ENUM).is_err());
    }
}
