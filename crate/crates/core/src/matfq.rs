//! Dense matrices and polynomials over one level of a [`FieldTower`].

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf::{Elem, FieldElement, FieldTower, LevelField};

/// Matrix over `F_{q^level}`, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MatF {
    level: u32,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl fmt::Debug for MatF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatF[L{}; ", self.level)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ",")?;
                }
                match self.get(r, c).log() {
                    None => write!(f, "0")?,
                    Some(k) => write!(f, "g^{k}")?,
                }
            }
        }
        write!(f, "]")
    }
}

impl MatF {
    pub fn zeros(level: u32, rows: usize, cols: usize) -> MatF {
        MatF { level, rows, cols, data: vec![Elem::ZERO; rows * cols] }
    }

    pub fn identity(level: u32, n: usize) -> MatF {
        let mut m = Self::zeros(level, n, n);
        for i in 0..n {
            m.set(i, i, Elem::ONE);
        }
        m
    }

    /// Scalar matrix `a·I`.
    pub fn scalar(level: u32, n: usize, a: Elem) -> MatF {
        let mut m = Self::zeros(level, n, n);
        for i in 0..n {
            m.set(i, i, a);
        }
        m
    }

    pub fn from_fn(level: u32, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Elem) -> MatF {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        MatF { level, rows, cols, data }
    }

    pub fn from_rows(level: u32, rows: Vec<Vec<Elem>>) -> Result<MatF> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("rows must be nonempty and of equal length".into()));
        }
        Ok(MatF { level, rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Matrix unit `E_{ij}` (1-based indices, as in the usual notation).
    pub fn unit(level: u32, n: usize, i: usize, j: usize) -> MatF {
        let mut m = Self::zeros(level, n, n);
        m.set(i - 1, j - 1, Elem::ONE);
        m
    }

    /// Antidiagonal permutation matrix `w₀`.
    pub fn antidiagonal(level: u32, n: usize) -> MatF {
        let mut m = Self::zeros(level, n, n);
        for i in 0..n {
            m.set(i, n - 1 - i, Elem::ONE);
        }
        m
    }

    /// The `idx`-th matrix in the base-`|F|` enumeration of all `rows×cols`
    /// matrices; digit `k` of `idx` is entry `k` in row-major order.
    pub fn from_enumeration_index(field: &LevelField, rows: usize, cols: usize, mut idx: u64) -> Result<MatF> {
        let q = field.order();
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(field.from_index((idx % q) as u32)?);
            idx /= q;
        }
        Ok(MatF { level: field.level(), rows, cols, data })
    }

    pub fn random<R: Rng + ?Sized>(field: &LevelField, rows: usize, cols: usize, rng: &mut R) -> MatF {
        let q = field.order();
        Self::from_fn(field.level(), rows, cols, |_, _| {
            field.from_index(rng.gen_range(0..q) as u32).expect("index below field order")
        })
    }

    pub fn random_invertible<R: Rng + ?Sized>(field: &LevelField, n: usize, rng: &mut R) -> MatF {
        loop {
            let m = Self::random(field, n, n, rng);
            if m.rank(field) == n {
                return m;
            }
        }
    }

    /// Companion matrix of a monic polynomial (subdiagonal ones, last column `-c_i`).
    pub fn companion(field: &LevelField, f: &PolyF) -> Result<MatF> {
        let n = f.degree().ok_or_else(|| Error::Precondition("zero polynomial".into()))?;
        if n == 0 || !f.lead().is_one() {
            return Err(Error::Precondition("companion needs a monic nonconstant polynomial".into()));
        }
        let mut m = Self::zeros(field.level(), n, n);
        for i in 1..n {
            m.set(i, i - 1, Elem::ONE);
        }
        for i in 0..n {
            m.set(i, n - 1, field.neg(f.coeffs[i]));
        }
        Ok(m)
    }

    /// Block matrix `[[a, b], [c, d]]`.
    pub fn block(a: &MatF, b: &MatF, c: &MatF, d: &MatF) -> Result<MatF> {
        if a.rows != b.rows || c.rows != d.rows || a.cols != c.cols || b.cols != d.cols {
            return Err(Error::Shape("block dimensions disagree".into()));
        }
        let level = a.level;
        if [b.level, c.level, d.level].iter().any(|&l| l != level) {
            return Err(Error::LevelMismatch(level, b.level.max(c.level).max(d.level)));
        }
        let (r, cl) = (a.rows + c.rows, a.cols + b.cols);
        Ok(Self::from_fn(level, r, cl, |i, j| match (i < a.rows, j < a.cols) {
            (true, true) => a.get(i, j),
            (true, false) => b.get(i, j - a.cols),
            (false, true) => c.get(i - a.rows, j),
            (false, false) => d.get(i - a.rows, j - a.cols),
        }))
    }

    /// Block-diagonal `diag(a, b)`.
    pub fn block_diag(a: &MatF, b: &MatF) -> Result<MatF> {
        Self::block(a, &Self::zeros(a.level, a.rows, b.cols), &Self::zeros(a.level, b.rows, a.cols), b)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[Elem] {
        &self.data
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> MatF {
        Self::from_fn(self.level, rows, cols, |i, j| self.get(r0 + i, c0 + j))
    }

    pub fn transpose(&self) -> MatF {
        Self::from_fn(self.level, self.cols, self.rows, |i, j| self.get(j, i))
    }

    fn check_level(&self, field: &LevelField) {
        assert_eq!(self.level, field.level(), "matrix used with a field of another level");
    }

    pub fn mul(&self, field: &LevelField, other: &MatF) -> Result<MatF> {
        self.check_level(field);
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(Self::from_fn(self.level, self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Elem::ZERO, |acc, k| field.add(acc, field.mul(self.get(i, k), other.get(k, j))))
        }))
    }

    fn zip(&self, other: &MatF, op: impl Fn(Elem, Elem) -> Elem) -> Result<MatF> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("elementwise operation on different shapes".into()));
        }
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect();
        Ok(MatF { level: self.level, rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, field: &LevelField, other: &MatF) -> Result<MatF> {
        self.check_level(field);
        self.zip(other, |a, b| field.add(a, b))
    }

    pub fn sub(&self, field: &LevelField, other: &MatF) -> Result<MatF> {
        self.check_level(field);
        self.zip(other, |a, b| field.sub(a, b))
    }

    pub fn scale(&self, field: &LevelField, a: Elem) -> MatF {
        self.check_level(field);
        MatF { data: self.data.iter().map(|&x| field.mul(a, x)).collect(), ..self.clone() }
    }

    /// `self − z·I`.
    pub fn minus_scalar(&self, field: &LevelField, z: Elem) -> Result<MatF> {
        self.check_level(field);
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let mut m = self.clone();
        for i in 0..self.rows {
            m.set(i, i, field.sub(m.get(i, i), z));
        }
        Ok(m)
    }

    pub fn trace(&self, field: &LevelField) -> Result<Elem> {
        self.check_level(field);
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        Ok((0..self.rows).fold(Elem::ZERO, |acc, i| field.add(acc, self.get(i, i))))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self.get(i, j) == if i == j { Elem::ONE } else { Elem::ZERO }))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Upper triangular with ones on the diagonal.
    pub fn is_upper_unitriangular(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| self.get(i, i).is_one() && (0..i).all(|j| self.get(i, j).is_zero()))
    }

    pub fn rank(&self, field: &LevelField) -> usize {
        self.check_level(field);
        let mut buf = self.data.clone();
        rank_in_place(field, &mut buf, self.rows, self.cols)
    }

    pub fn ker_dim(&self, field: &LevelField) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        Ok(self.cols - self.rank(field))
    }

    pub fn is_invertible(&self, field: &LevelField) -> bool {
        self.is_square() && self.rank(field) == self.rows
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self, field: &LevelField) -> (MatF, Vec<usize>) {
        self.check_level(field);
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(p, row);
            let inv = field.inv(m.get(row, col)).expect("pivot is nonzero");
            for c in 0..m.cols {
                m.set(row, c, field.mul(inv, m.get(row, c)));
            }
            for r in 0..m.rows {
                if r != row {
                    let factor = m.get(r, col);
                    if !factor.is_zero() {
                        for c in 0..m.cols {
                            let v = field.sub(m.get(r, c), field.mul(factor, m.get(row, c)));
                            m.set(r, c, v);
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// Basis of the right kernel `{v : self·v = 0}`, as column vectors.
    pub fn kernel_basis(&self, field: &LevelField) -> Vec<Vec<Elem>> {
        let (r, pivots) = self.rref(field);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![Elem::ZERO; self.cols];
                v[fc] = Elem::ONE;
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = field.neg(r.get(i, fc));
                }
                v
            })
            .collect()
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(level: u32, rows: usize, cols: &[Vec<Elem>]) -> MatF {
        Self::from_fn(level, rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn inverse(&self, field: &LevelField) -> Result<MatF> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let aug = Self::from_fn(self.level, n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j)
            } else if j - n == i {
                Elem::ONE
            } else {
                Elem::ZERO
            }
        });
        let (r, pivots) = aug.rref(field);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        Ok(r.submatrix(0, n, n, n))
    }

    pub fn det(&self, field: &LevelField) -> Result<Elem> {
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let mut m = self.clone();
        let n = m.rows;
        let mut det = Elem::ONE;
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m.get(r, col).is_zero()) else {
                return Ok(Elem::ZERO);
            };
            if p != col {
                m.swap_rows(p, col);
                det = field.neg(det);
            }
            let piv = m.get(col, col);
            det = field.mul(det, piv);
            let inv = field.inv(piv)?;
            for r in col + 1..n {
                let factor = field.mul(m.get(r, col), inv);
                if !factor.is_zero() {
                    for c in col..n {
                        let v = field.sub(m.get(r, c), field.mul(factor, m.get(col, c)));
                        m.set(r, c, v);
                    }
                }
            }
        }
        Ok(det)
    }

    /// Characteristic polynomial `det(xI − self)` via Hessenberg reduction.
    pub fn charpoly(&self, field: &LevelField) -> Result<PolyF> {
        self.check_level(field);
        if !self.is_square() {
            return Err(Error::NonSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut h = self.clone();
        for j in 0..n.saturating_sub(2) {
            let Some(p) = (j + 1..n).find(|&i| !h.get(i, j).is_zero()) else {
                continue;
            };
            if p != j + 1 {
                h.swap_rows(p, j + 1);
                for r in 0..n {
                    h.data.swap(r * n + p, r * n + j + 1);
                }
            }
            let inv = field.inv(h.get(j + 1, j))?;
            for i in j + 2..n {
                let u = field.mul(h.get(i, j), inv);
                if u.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let v = field.sub(h.get(i, c), field.mul(u, h.get(j + 1, c)));
                    h.set(i, c, v);
                }
                for r in 0..n {
                    let v = field.add(h.get(r, j + 1), field.mul(u, h.get(r, i)));
                    h.set(r, j + 1, v);
                }
            }
        }
        // p_k = (x − h_kk) p_{k−1} − Σ_{i<k} h_{ik} (h_{k,k−1} ⋯ h_{i+1,i}) p_{i−1}
        let mut polys: Vec<PolyF> = vec![PolyF::one(self.level)];
        for k in 0..n {
            let mut pk = polys[k].mul(field, &PolyF::x_minus(field, h.get(k, k)));
            let mut prod = Elem::ONE;
            for i in (0..k).rev() {
                prod = field.mul(prod, h.get(i + 1, i));
                if prod.is_zero() {
                    break;
                }
                let c = field.mul(h.get(i, k), prod);
                if !c.is_zero() {
                    pk = pk.sub(field, &polys[i].scale(field, c));
                }
            }
            polys.push(pk);
        }
        Ok(polys.pop().expect("at least the constant polynomial"))
    }

    /// Entrywise image at a higher level of the tower.
    pub fn embed(&self, tower: &FieldTower, to_level: u32) -> Result<MatF> {
        let data = self.data.iter().map(|&a| tower.embed_raw(a, self.level, to_level)).collect::<Result<Vec<_>>>()?;
        Ok(MatF { level: to_level, data, ..self.clone() })
    }

    /// Parses `"a,b,c;d,e,f;…"`. Entries: `0`; a nonnegative integer giving the
    /// element's polynomial-basis index (for a prime field, the residue itself);
    /// `-k` for the image of the integer `-k`; or `g^k` for the `k`-th power of
    /// the level generator.
    pub fn parse_literal(text: &str, field: &LevelField) -> Result<MatF> {
        let rows = text
            .split(';')
            .map(|row| row.split(',').map(|tok| parse_entry(tok.trim(), field)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(field.level(), rows)
    }

    /// Inverse of [`MatF::parse_literal`] using polynomial-basis indices.
    pub fn to_literal(&self, field: &LevelField) -> String {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| field.to_index(self.get(r, c)).to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn parse_entry(tok: &str, field: &LevelField) -> Result<Elem> {
    if let Some(exp) = tok.strip_prefix("g^") {
        let k: i64 = exp.parse().map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))?;
        return Ok(field.from_log(k.rem_euclid(field.group_order() as i64) as u64));
    }
    if let Some(neg) = tok.strip_prefix('-') {
        let k: i64 = neg.parse().map_err(|_| Error::Parse(format!("bad entry {tok:?}")))?;
        return Ok(field.from_int(-k));
    }
    let k: u32 = tok.parse().map_err(|_| Error::Parse(format!("bad entry {tok:?}")))?;
    field.from_index(k)
}

/// Rank of a row-major `rows×cols` buffer; the buffer is destroyed.
pub fn rank_in_place(field: &LevelField, data: &mut [Elem], rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !data[r * cols + col].is_zero()) else {
            continue;
        };
        if p != rank {
            for c in col..cols {
                data.swap(p * cols + c, rank * cols + c);
            }
        }
        let inv = field.inv(data[rank * cols + col]).expect("pivot is nonzero");
        for r in rank + 1..rows {
            let x = data[r * cols + col];
            if x.is_zero() {
                continue;
            }
            let factor = field.mul(x, inv);
            for c in col..cols {
                let v = data[rank * cols + c];
                if !v.is_zero() {
                    data[r * cols + c] = field.sub(data[r * cols + c], field.mul(factor, v));
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Polynomial over one level, constant term first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PolyF {
    level: u32,
    coeffs: Vec<Elem>,
}

impl PolyF {
    pub fn new(level: u32, mut coeffs: Vec<Elem>) -> PolyF {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        PolyF { level, coeffs }
    }

    pub fn zero(level: u32) -> PolyF {
        PolyF { level, coeffs: Vec::new() }
    }

    pub fn one(level: u32) -> PolyF {
        PolyF { level, coeffs: vec![Elem::ONE] }
    }

    pub fn x(level: u32) -> PolyF {
        PolyF { level, coeffs: vec![Elem::ZERO, Elem::ONE] }
    }

    /// `x − a`.
    pub fn x_minus(field: &LevelField, a: Elem) -> PolyF {
        PolyF { level: field.level(), coeffs: vec![field.neg(a), Elem::ONE] }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[Elem] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lead(&self) -> Elem {
        self.coeffs.last().copied().unwrap_or(Elem::ZERO)
    }

    pub fn add(&self, field: &LevelField, other: &PolyF) -> PolyF {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &PolyF, i: usize| p.coeffs.get(i).copied().unwrap_or(Elem::ZERO);
        PolyF::new(self.level, (0..n).map(|i| field.add(get(self, i), get(other, i))).collect())
    }

    pub fn sub(&self, field: &LevelField, other: &PolyF) -> PolyF {
        self.add(field, &other.scale(field, field.neg(Elem::ONE)))
    }

    pub fn scale(&self, field: &LevelField, a: Elem) -> PolyF {
        PolyF::new(self.level, self.coeffs.iter().map(|&c| field.mul(a, c)).collect())
    }

    pub fn mul(&self, field: &LevelField, other: &PolyF) -> PolyF {
        if self.is_zero() || other.is_zero() {
            return PolyF::zero(self.level);
        }
        let mut out = vec![Elem::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = field.add(out[i + j], field.mul(a, b));
            }
        }
        PolyF::new(self.level, out)
    }

    /// Quotient and remainder; `divisor` must be nonzero.
    pub fn div_rem(&self, field: &LevelField, divisor: &PolyF) -> Result<(PolyF, PolyF)> {
        let dd = divisor.degree().ok_or(Error::ZeroInverse)?;
        let inv_lead = field.inv(divisor.lead())?;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((PolyF::zero(self.level), self.clone()));
        }
        let mut quot = vec![Elem::ZERO; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = field.mul(rem[i + dd], inv_lead);
            quot[i] = c;
            if c.is_zero() {
                continue;
            }
            for (j, &dj) in divisor.coeffs.iter().enumerate() {
                rem[i + j] = field.sub(rem[i + j], field.mul(c, dj));
            }
        }
        rem.truncate(dd);
        Ok((PolyF::new(self.level, quot), PolyF::new(self.level, rem)))
    }

    pub fn rem(&self, field: &LevelField, m: &PolyF) -> Result<PolyF> {
        Ok(self.div_rem(field, m)?.1)
    }

    pub fn monic(&self, field: &LevelField) -> PolyF {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(field, field.inv(self.lead()).expect("nonzero leading coefficient"))
    }

    pub fn gcd(&self, field: &LevelField, other: &PolyF) -> PolyF {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(field, &b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic(field)
    }

    /// `self^e mod m`.
    pub fn pow_mod(&self, field: &LevelField, mut e: u128, m: &PolyF) -> Result<PolyF> {
        let mut base = self.rem(field, m)?;
        let mut acc = PolyF::one(self.level).rem(field, m)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(field, &base).rem(field, m)?;
            }
            base = base.mul(field, &base).rem(field, m)?;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn eval(&self, field: &LevelField, x: Elem) -> Elem {
        self.coeffs.iter().rev().fold(Elem::ZERO, |acc, &c| field.add(field.mul(acc, x), c))
    }

    /// Coefficients embedded into a higher level.
    pub fn embed(&self, tower: &FieldTower, to_level: u32) -> Result<PolyF> {
        let coeffs =
            self.coeffs.iter().map(|&a| tower.embed_raw(a, self.level, to_level)).collect::<Result<Vec<_>>>()?;
        Ok(PolyF::new(to_level, coeffs))
    }

    /// Polynomial-basis indices of the coefficients, constant term first; a
    /// compact hashable key.
    pub fn key(&self, field: &LevelField) -> Vec<u32> {
        self.coeffs.iter().map(|&c| field.to_index(c)).collect()
    }

    pub fn is_irreducible(&self, field: &LevelField) -> bool {
        matches!(power_of_irreducible(field, self), Some((_, 1)))
    }
}

/// `(h, e)` with `f = h^e`, `h` monic irreducible, or `None` when `f` has two
/// distinct irreducible factors. `f` must be monic and nonconstant.
pub fn power_of_irreducible(field: &LevelField, f: &PolyF) -> Option<(PolyF, u32)> {
    let n = f.degree().filter(|&d| d > 0)?;
    let f = f.monic(field);
    let q = field.order() as u128;
    let x = PolyF::x(f.level);
    let mut xq = x.clone();
    for i in 1..=n {
        xq = xq.pow_mod(field, q, &f).expect("f is nonzero");
        let g = f.gcd(field, &xq.sub(field, &x));
        let dg = g.degree().unwrap_or(0);
        if dg == 0 {
            continue;
        }
        // g is the product of the distinct irreducible factors of degree i
        if dg != i {
            return None;
        }
        let mut rest = f.clone();
        let mut e = 0;
        while rest.degree() != Some(0) {
            let (quot, rem) = rest.div_rem(field, &g).expect("nonzero divisor");
            if !rem.is_zero() {
                return None;
            }
            rest = quot;
            e += 1;
        }
        return Some((g, e));
    }
    unreachable!("every nonconstant polynomial has an irreducible factor of degree at most its own")
}

/// A root of the irreducible `h` (coefficients at level 1) in level `deg h`,
/// the first in the order zero, `g^0`, `g^1`, ….
pub fn root_in_extension(tower: &FieldTower, h: &PolyF) -> Result<FieldElement> {
    let d = h.degree().filter(|&d| d > 0).ok_or_else(|| Error::Precondition("constant polynomial".into()))? as u32;
    let level = tower.level(d)?;
    let hd = h.embed(tower, d)?;
    level
        .elements()
        .find(|&z| hd.eval(level, z).is_zero())
        .map(|z| FieldElement::new(d, z))
        .ok_or_else(|| Error::Precondition("polynomial has no root at its degree level; not irreducible".into()))
}

/// `dim ker(g − z)` after embedding `g` into the level of `z`.
pub fn ker_dim_over_extension(tower: &FieldTower, g: &MatF, z: FieldElement) -> Result<usize> {
    if !z.level.is_multiple_of(g.level()) {
        return Err(Error::LevelMismatch(g.level(), z.level));
    }
    let level = tower.level(z.level)?;
    g.embed(tower, z.level)?.minus_scalar(level, z.elem)?.ker_dim(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tower(p: u64, m: u32) -> FieldTower {
        FieldTower::build(p, 1, m).unwrap()
    }

    fn poly(field: &LevelField, coeffs: &[i64]) -> PolyF {
        PolyF::new(field.level(), coeffs.iter().map(|&c| field.from_int(c)).collect())
    }

    // all monic polynomials of the given degree over F_p
    fn monic_polys(field: &LevelField, degree: usize) -> Vec<PolyF> {
        let p = field.order();
        (0..p.pow(degree as u32))
            .map(|mut idx| {
                let mut c = Vec::new();
                for _ in 0..degree {
                    c.push(field.from_index((idx % p) as u32).unwrap());
                    idx /= p;
                }
                c.push(Elem::ONE);
                PolyF::new(field.level(), c)
            })
            .collect()
    }

    #[test]
    fn rank_basics_and_rank_one_count() {
        let t = tower(2, 1);
        let f = t.base();
        assert_eq!(MatF::zeros(1, 3, 3).rank(f), 0);
        assert_eq!(MatF::identity(1, 3).rank(f), 3);
        let mut by_rank = [0u64; 4];
        for idx in 0..512 {
            by_rank[MatF::from_enumeration_index(f, 3, 3, idx).unwrap().rank(f)] += 1;
        }
        assert_eq!(by_rank[1], 49);
        assert_eq!(by_rank[3], 168);
        assert_eq!(by_rank.iter().sum::<u64>(), 512);
    }

    #[test]
    fn rank_strata_sum_to_all_matrices_q3() {
        let t = tower(3, 1);
        let f = t.base();
        let mut by_rank = [0u64; 4];
        for idx in 0..3u64.pow(9) {
            by_rank[MatF::from_enumeration_index(f, 3, 3, idx).unwrap().rank(f)] += 1;
        }
        assert_eq!(by_rank.iter().sum::<u64>(), 19683);
        assert_eq!(by_rank[3], 26 * 24 * 18);
    }

    #[test]
    fn kernel_dimensions() {
        let t = tower(2, 1);
        let f = t.base();
        let zero6 = MatF::identity(1, 6).sub(f, &MatF::identity(1, 6)).unwrap();
        assert_eq!(zero6.ker_dim(f).unwrap(), 6);
        let mut j = MatF::identity(1, 6);
        j.set(0, 1, Elem::ONE);
        assert_eq!(j.minus_scalar(f, Elem::ONE).unwrap().ker_dim(f).unwrap(), 5);
        assert!(MatF::zeros(1, 2, 3).ker_dim(f).is_err());
    }

    #[test]
    fn kernel_basis_is_annihilated() {
        let t = tower(3, 1);
        let f = t.base();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let m = MatF::random(f, 4, 5, &mut rng);
            let basis = m.kernel_basis(f);
            assert_eq!(basis.len(), 5 - m.rank(f));
            let k = MatF::from_columns(1, 5, &basis);
            if !basis.is_empty() {
                assert!(m.mul(f, &k).unwrap().is_zero());
                assert_eq!(k.rank(f), basis.len());
            }
        }
    }

    #[test]
    fn rank_invariances() {
        let t = tower(3, 1);
        let f = t.base();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = MatF::random(f, 3, 3, &mut rng);
            let p = MatF::random_invertible(f, 3, &mut rng);
            let q = MatF::random_invertible(f, 3, &mut rng);
            let r = x.rank(f);
            assert_eq!(x.transpose().rank(f), r);
            assert_eq!(p.mul(f, &x).unwrap().mul(f, &q).unwrap().rank(f), r);
        }
    }

    #[test]
    fn inverse_and_determinant() {
        let t = tower(3, 1);
        let f = t.base();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = MatF::random_invertible(f, 4, &mut rng);
            let b = MatF::random(f, 4, 4, &mut rng);
            assert!(a.mul(f, &a.inverse(f).unwrap()).unwrap().is_identity());
            let dab = a.mul(f, &b).unwrap().det(f).unwrap();
            assert_eq!(dab, f.mul(a.det(f).unwrap(), b.det(f).unwrap()));
        }
        assert_eq!(MatF::zeros(1, 2, 2).inverse(f), Err(Error::Singular));
    }

    #[test]
    fn charpoly_small_cases() {
        let t = tower(2, 1);
        let f = t.base();
        let id = MatF::identity(1, 2);
        assert_eq!(id.charpoly(f).unwrap(), poly(f, &[1, 0, 1]));
        for deg in 1..=5 {
            for p in monic_polys(f, deg) {
                assert_eq!(MatF::companion(f, &p).unwrap().charpoly(f).unwrap(), p);
            }
        }
    }

    #[test]
    fn charpoly_matches_determinant_in_extension() {
        // det(zI − g) over F_64 pins down a degree-6 polynomial at 64 points
        let t = tower(2, 6);
        let f = t.base();
        let top = t.top();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let g = MatF::random(f, 6, 6, &mut rng);
            let cp = g.charpoly(f).unwrap().embed(&t, 6).unwrap();
            let ge = g.embed(&t, 6).unwrap();
            for z in top.elements() {
                let d = MatF::scalar(6, 6, z).sub(top, &ge).unwrap().det(top).unwrap();
                assert_eq!(cp.eval(top, z), d);
            }
        }
    }

    #[test]
    fn charpoly_is_conjugation_invariant() {
        let t = tower(2, 1);
        let f = t.base();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let g = MatF::random(f, 6, 6, &mut rng);
            let p = MatF::random_invertible(f, 6, &mut rng);
            let conj = p.mul(f, &g).unwrap().mul(f, &p.inverse(f).unwrap()).unwrap();
            assert_eq!(g.charpoly(f).unwrap(), conj.charpoly(f).unwrap());
        }
    }

    #[test]
    fn power_of_irreducible_examples() {
        let t = tower(2, 1);
        let f = t.base();
        let x1 = poly(f, &[1, 1]);
        let sixth = (0..5).fold(x1.clone(), |acc, _| acc.mul(f, &x1));
        assert_eq!(power_of_irreducible(f, &sixth), Some((x1.clone(), 6)));
        assert_eq!(power_of_irreducible(f, &poly(f, &[0, 1, 1])), None);
        let q = poly(f, &[1, 1, 1]);
        assert_eq!(power_of_irreducible(f, &q), Some((q.clone(), 1)));
        assert_eq!(power_of_irreducible(f, &q.mul(f, &q).mul(f, &q)), Some((q, 3)));
    }

    fn brute_irreducible(f: &LevelField, p: &PolyF) -> bool {
        let n = p.degree().unwrap();
        (1..=n / 2).all(|d| monic_polys(f, d).iter().all(|h| !p.rem(f, h).unwrap().is_zero()))
    }

    #[test]
    fn power_of_irreducible_against_trial_division() {
        for pr in [2u64, 3] {
            let t = tower(pr, 1);
            let f = t.base();
            let maxdeg = if pr == 2 { 6 } else { 4 };
            let irreducibles: Vec<PolyF> =
                (1..=maxdeg).flat_map(|d| monic_polys(f, d)).filter(|p| brute_irreducible(f, p)).collect();
            for deg in 1..=maxdeg {
                for p in monic_polys(f, deg) {
                    let dividing: Vec<&PolyF> =
                        irreducibles.iter().filter(|h| p.rem(f, h).unwrap().is_zero()).collect();
                    let expected = if dividing.len() == 1 {
                        let h = dividing[0];
                        Some((h.clone(), (deg / h.degree().unwrap()) as u32))
                    } else {
                        None
                    };
                    assert_eq!(power_of_irreducible(f, &p), expected, "{p:?}");
                }
            }
        }
    }

    #[test]
    fn roots_in_extensions() {
        let t = tower(2, 6);
        let f = t.base();
        let z = root_in_extension(&t, &poly(f, &[1, 1])).unwrap();
        assert_eq!(z, t.one(1));
        let w = root_in_extension(&t, &poly(f, &[1, 1, 1])).unwrap();
        let l2 = t.level(2).unwrap();
        let conj = l2.frobenius(w.elem, 1);
        assert!(w.elem.log().unwrap() < conj.log().unwrap());
        for d in [1usize, 2, 3, 6] {
            for h in monic_polys(f, d).into_iter().filter(|h| brute_irreducible(f, h)) {
                let z = root_in_extension(&t, &h).unwrap();
                let level = t.level(d as u32).unwrap();
                assert!(h.embed(&t, d as u32).unwrap().eval(level, z.elem).is_zero());
                let conjugates: std::collections::BTreeSet<_> =
                    (0..d as u32).map(|i| level.frobenius(z.elem, i)).collect();
                assert_eq!(conjugates.len(), d);
            }
        }
    }

    #[test]
    fn kernel_over_extension() {
        let t = tower(2, 6);
        let f = t.base();
        let id = MatF::identity(1, 6);
        assert_eq!(ker_dim_over_extension(&t, &id, t.one(1)).unwrap(), 6);
        let h = poly(f, &[1, 1, 1]);
        let c = MatF::companion(f, &h).unwrap();
        let g = MatF::block_diag(&MatF::block_diag(&c, &c).unwrap(), &c).unwrap();
        let z = root_in_extension(&t, &h).unwrap();
        assert_eq!(ker_dim_over_extension(&t, &g, z).unwrap(), 3);
        let mut u = MatF::identity(1, 6);
        u.set(0, 3, Elem::ONE);
        u.set(1, 4, Elem::ONE);
        assert_eq!(
            ker_dim_over_extension(&t, &u, t.one(1)).unwrap(),
            u.minus_scalar(f, Elem::ONE).unwrap().ker_dim(f).unwrap()
        );
    }

    #[test]
    fn literal_round_trip() {
        let t = tower(3, 1);
        let f = t.base();
        let e13 = MatF::parse_literal("0,0,1;0,0,0;0,0,0", f).unwrap();
        assert_eq!(e13, MatF::unit(1, 3, 1, 3));
        let m = MatF::parse_literal("2, g^0, -1; 0,1,0; 0,0,1", f).unwrap();
        assert_eq!(m.get(0, 0), f.from_int(2));
        assert_eq!(m.get(0, 1), Elem::ONE);
        assert_eq!(m.get(0, 2), f.from_int(2));
        assert_eq!(MatF::parse_literal(&m.to_literal(f), f).unwrap(), m);
        assert!(MatF::parse_literal("1,2;3", f).is_err());
        assert!(MatF::parse_literal("5", f).is_err());
        assert!(MatF::parse_literal("x", f).is_err());
    }
}
