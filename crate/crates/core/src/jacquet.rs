//! Characters of twisted Jacquet modules `π_{N,ψ_A}` for the `(n, n)` parabolic
//! of `GL(2n, F_q)`.
//!
//! `Θ_{N,ψ_A}(m) = q^{−n²} Σ_{X ∈ M(n,F)} Θ_θ([[m₁, m₁X], [0, m₂]]) · conj ψ₀(tr(AX))`.
//!
//! The characteristic polynomial of the block matrix is `χ_{m₁}·χ_{m₂}` for
//! every `X`, so the eigenvalue `z` is fixed and only `t = dim ker(h − z)` and
//! the trace `β` vary; the sum is accumulated as counts per `(t, β)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::charfn::AdditiveChar;
use crate::cuspchar::{CuspidalData, Spectrum};
use crate::error::{Error, Result};
use crate::gf::{Elem, FieldElement, FieldTower};
use crate::matfq::{rank_in_place, MatF, PolyF};
use crate::CycloInt;

/// Default bound on `q^{n²}` for the `X`-loop.
pub const DEFAULT_MAX_SUM_TERMS: u64 = 1 << 24;

/// Element `diag(m₁, m₂)` of the Levi subgroup.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeviElement {
    pub m1: MatF,
    pub m2: MatF,
}

impl LeviElement {
    pub fn new(m1: MatF, m2: MatF) -> LeviElement {
        LeviElement { m1, m2 }
    }

    pub fn identity(n: usize) -> LeviElement {
        LeviElement { m1: MatF::identity(1, n), m2: MatF::identity(1, n) }
    }

    /// `a·m` for a scalar `a` of the base field.
    pub fn scaled(&self, tower: &FieldTower, a: Elem) -> LeviElement {
        let f = tower.base();
        LeviElement { m1: self.m1.scale(f, a), m2: self.m2.scale(f, a) }
    }

    pub fn block(&self) -> MatF {
        MatF::block_diag(&self.m1, &self.m2).expect("square blocks")
    }
}

/// Which of the two equivalent sums is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumForm {
    /// `Σ_X Θ([[m₁, m₁X], [0, m₂]]) · conj ψ₀(tr(AX))`.
    Averaged,
    /// `Σ_X Θ([[m₁, X], [0, m₂]]) · conj ψ₀(tr(A m₁^{-1} X))`.
    Substituted,
}

/// Counts of `X` by `t = dim ker(h − z)` and by the index of `β`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FiberCounts {
    pub by_t: BTreeMap<usize, Vec<u64>>,
}

impl FiberCounts {
    pub fn total(&self) -> u64 {
        self.by_t.values().flatten().sum()
    }
}

/// Parameters `(n, π, A, ψ₀)` of `Θ_{N,ψ_A}`.
#[derive(Debug, Clone)]
pub struct JacquetSpec {
    n: usize,
    pi: Arc<CuspidalData>,
    a: MatF,
    psi: AdditiveChar,
    max_terms: u64,
}

impl JacquetSpec {
    pub fn new(pi: Arc<CuspidalData>, a: MatF, psi: AdditiveChar) -> Result<JacquetSpec> {
        let m = pi.m();
        if !m.is_multiple_of(2) {
            return Err(Error::Precondition(format!("GL({m}) has no (n, n) parabolic")));
        }
        let n = m / 2;
        if a.rows() != n || a.cols() != n || a.level() != 1 {
            return Err(Error::Shape(format!("A must be a {n}x{n} matrix over the base field")));
        }
        let f = pi.tower().base();
        if a.rank(f) != 1 {
            return Err(Error::Precondition(format!("A must have rank 1, found rank {}", a.rank(f))));
        }
        Ok(JacquetSpec { n, pi, a, psi, max_terms: DEFAULT_MAX_SUM_TERMS })
    }

    /// `A = E_{1n}` and the standard `ψ₀`.
    pub fn standard(pi: Arc<CuspidalData>) -> Result<JacquetSpec> {
        let n = pi.m() / 2;
        let psi = AdditiveChar::standard(pi.tower().clone());
        Self::new(pi, MatF::unit(1, n.max(1), 1, n.max(1)), psi)
    }

    pub fn with_max_terms(mut self, cap: u64) -> JacquetSpec {
        self.max_terms = cap;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.pi.q()
    }

    pub fn pi(&self) -> &Arc<CuspidalData> {
        &self.pi
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        self.pi.tower()
    }

    pub fn a(&self) -> &MatF {
        &self.a
    }

    pub fn psi(&self) -> &AdditiveChar {
        &self.psi
    }

    /// `|N| = q^{n²}`.
    pub fn n_order(&self) -> u64 {
        self.q().pow((self.n * self.n) as u32)
    }

    fn check_terms(&self) -> Result<u64> {
        let total = (self.q() as u128).pow((self.n * self.n) as u32);
        if total > self.max_terms as u128 {
            return Err(Error::EnumerationCap { what: "M(n, F_q)", got: total, cap: self.max_terms });
        }
        Ok(total as u64)
    }

    fn trace_a(&self, x: &MatF) -> Elem {
        let f = self.tower().base();
        self.a.mul(f, x).and_then(|ax| ax.trace(f)).expect("n x n matrices")
    }

    /// `ψ_A(X) = ψ₀(tr(AX))`.
    pub fn psi_a(&self, x: &MatF) -> CycloInt {
        self.psi.eval(self.trace_a(x))
    }

    /// `A m₁ = m₂ A`, the stabilizer condition for `ψ_A`.
    pub fn m_psi_membership(&self, m: &LeviElement) -> bool {
        let f = self.tower().base();
        self.a.mul(f, &m.m1).ok() == m.m2.mul(f, &self.a).ok()
    }

    fn check_levi(&self, m: &LeviElement) -> Result<()> {
        let f = self.tower().base();
        for b in [&m.m1, &m.m2] {
            if b.rows() != self.n || b.cols() != self.n || b.level() != 1 {
                return Err(Error::Shape(format!("Levi blocks must be {0}x{0} over the base field", self.n)));
            }
            if !b.is_invertible(f) {
                return Err(Error::Singular);
            }
        }
        Ok(())
    }

    /// Block characteristic polynomial and its spectrum, `None` when `Θ_θ`
    /// vanishes on the whole coset `mN`.
    pub fn block_spectrum(&self, m: &LeviElement) -> Result<(PolyF, Option<Arc<Spectrum>>)> {
        self.check_levi(m)?;
        let f = self.tower().base();
        let cp = m.m1.charpoly(f)?.mul(f, &m.m2.charpoly(f)?);
        let s = self.pi.spectrum(&cp)?;
        Ok((cp, s))
    }

    /// Counts of `X` per `(t, β)`, restricted by `keep(X, β)`.
    pub fn fiber_counts(
        &self,
        m: &LeviElement,
        form: SumForm,
        spectrum: &Spectrum,
        keep: &(dyn Fn(&MatF, Elem) -> bool + Sync),
    ) -> Result<FiberCounts> {
        let total = self.check_terms()?;
        let tower = self.tower();
        let f = tower.base();
        let n = self.n;
        let d = spectrum.degree();
        let ld = tower.level(d)?;
        let z = spectrum.z.elem;
        let m1_inv = m.m1.inverse(f)?;
        let a_eff = match form {
            SumForm::Averaged => self.a.clone(),
            SumForm::Substituted => self.a.mul(f, &m1_inv)?,
        };
        let up = |e: Elem| tower.embed_raw(e, 1, d).expect("level divides m");
        let m1d: Vec<Elem> = m.m1.entries().iter().map(|&e| up(e)).collect();
        let m2d: Vec<Elem> = m.m2.entries().iter().map(|&e| up(e)).collect();
        let q = f.order() as usize;
        let w = 2 * n;

        const CHUNK: u64 = 4096;
        let chunks: Vec<u64> = (0..total.div_ceil(CHUNK)).collect();
        let partial: Vec<BTreeMap<usize, Vec<u64>>> = chunks
            .par_iter()
            .map(|&c| -> Result<BTreeMap<usize, Vec<u64>>> {
                let mut local: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
                let mut buf = vec![Elem::ZERO; w * w];
                for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                    let x = MatF::from_enumeration_index(f, n, n, idx)?;
                    let beta = a_eff.mul(f, &x)?.trace(f)?;
                    if !keep(&x, beta) {
                        continue;
                    }
                    let top_right = match form {
                        SumForm::Averaged => m.m1.mul(f, &x)?,
                        SumForm::Substituted => x,
                    };
                    for i in 0..n {
                        for j in 0..n {
                            buf[i * w + j] = m1d[i * n + j];
                            buf[i * w + n + j] = up(top_right.get(i, j));
                            buf[(n + i) * w + j] = Elem::ZERO;
                            buf[(n + i) * w + n + j] = m2d[i * n + j];
                        }
                    }
                    for i in 0..w {
                        buf[i * w + i] = ld.sub(buf[i * w + i], z);
                    }
                    let t = w - rank_in_place(ld, &mut buf, w, w);
                    local.entry(t).or_insert_with(|| vec![0; q])[f.to_index(beta) as usize] += 1;
                }
                Ok(local)
            })
            .collect::<Result<_>>()?;
        let mut by_t: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for part in partial {
            for (t, counts) in part {
                let acc = by_t.entry(t).or_insert_with(|| vec![0; q]);
                for (a, b) in acc.iter_mut().zip(counts) {
                    *a += b;
                }
            }
        }
        Ok(FiberCounts { by_t })
    }

    /// `Σ_t Θ(t) Σ_β count·conj ψ₀(β)`, not yet divided by `|N|`.
    fn combine(&self, cp: &PolyF, spectrum: &Spectrum, counts: &FiberCounts) -> Result<CycloInt> {
        let mut acc = CycloInt::zero(self.pi.theta().conductor());
        for (&t, c) in &counts.by_t {
            let theta = self.pi.value_for(cp, spectrum, t)?;
            let weights = self.psi.weighted_conj_sum(c);
            acc = acc.try_add(&theta.try_mul(&weights)?)?;
        }
        Ok(acc)
    }

    /// Unnormalized sum `Σ_X Θ_θ(h_X) conj ψ(X)` in the chosen form.
    pub fn raw_sum(&self, m: &LeviElement, form: SumForm) -> Result<CycloInt> {
        let (cp, s) = self.block_spectrum(m)?;
        let Some(s) = s else {
            self.check_terms()?;
            return Ok(CycloInt::zero(self.pi.theta().conductor()));
        };
        let counts = self.fiber_counts(m, form, &s, &|_, _| true)?;
        self.combine(&cp, &s, &counts)
    }

    pub fn twisted_char_form(&self, m: &LeviElement, form: SumForm) -> Result<CycloInt> {
        self.raw_sum(m, form)?.divide_exact(&BigInt::from(self.n_order()))
    }

    /// `Θ_{N,ψ_A}(m)`.
    pub fn twisted_char(&self, m: &LeviElement) -> Result<CycloInt> {
        self.twisted_char_form(m, SumForm::Averaged)
    }

    /// Evaluates both sum forms and fails unless they agree.
    pub fn twisted_char_checked(&self, m: &LeviElement) -> Result<CycloInt> {
        let a = self.twisted_char_form(m, SumForm::Averaged)?;
        let b = self.twisted_char_form(m, SumForm::Substituted)?;
        if a != b {
            return Err(Error::Precondition(format!("sum forms disagree: {a} vs {b}")));
        }
        Ok(a)
    }

    /// Term-by-term evaluation through `CuspidalData::theta_char`, without the
    /// `(t, β)` bucketing. Slow; an independent check of [`Self::twisted_char`].
    pub fn twisted_char_reference(&self, m: &LeviElement) -> Result<CycloInt> {
        let total = self.check_terms()?;
        self.check_levi(m)?;
        let f = self.tower().base();
        let n = self.n;
        let mut acc = CycloInt::zero(self.pi.theta().conductor());
        for idx in 0..total {
            let x = MatF::from_enumeration_index(f, n, n, idx)?;
            let h = MatF::block(&m.m1, &m.m1.mul(f, &x)?, &MatF::zeros(1, n, n), &m.m2)?;
            let v = self.pi.theta_char(&h)?;
            if !v.is_zero() {
                acc = acc + v * self.psi_a(&x).conj();
            }
        }
        acc.divide_exact(&BigInt::from(self.n_order()))
    }

    /// `dim π_{N,ψ_A}`, the character at the identity.
    pub fn jacquet_dim(&self) -> Result<BigInt> {
        let v = self.twisted_char(&LeviElement::identity(self.n))?;
        match v.as_integer() {
            Some(d) if d >= BigInt::from(0) => Ok(d),
            _ => Err(Error::Precondition(format!("dimension is not a nonnegative integer: {v}"))),
        }
    }

    /// `θ(a)·Θ_{N,ψ_A}(h)`, the value at `a·h`.
    pub fn central_twist(&self, a: Elem, h: &LeviElement) -> Result<CycloInt> {
        let theta_a = self.pi.theta().eval(FieldElement::new(1, a))?;
        theta_a.try_mul(&self.twisted_char(h)?)
    }

    /// Partial sum over `S(β) = {X : tr(A m₁^{-1} X) = β}` in the substituted
    /// form, optionally restricted to `rank X = r`.
    pub fn fiber_partial_sum(&self, m: &LeviElement, beta: Elem, extra_rank: Option<usize>) -> Result<CycloInt> {
        let (cp, s) = self.block_spectrum(m)?;
        let Some(s) = s else {
            return Ok(CycloInt::zero(self.pi.theta().conductor()));
        };
        let f = self.tower().base();
        let keep = move |x: &MatF, b: Elem| b == beta && extra_rank.is_none_or(|r| x.rank(f) == r);
        let counts = self.fiber_counts(m, SumForm::Substituted, &s, &keep)?;
        self.combine(&cp, &s, &counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::{smallest_regular, MultChar};

    fn spec(p: u64, n: usize, k: Option<u64>) -> JacquetSpec {
        let t = Arc::new(FieldTower::build(p, 1, 2 * n as u32).unwrap());
        let k = k.unwrap_or_else(|| smallest_regular(&t).unwrap());
        let pi = Arc::new(CuspidalData::new(MultChar::new(t, k).unwrap()).unwrap());
        JacquetSpec::standard(pi).unwrap()
    }

    fn lit(s: &JacquetSpec, text: &str) -> MatF {
        MatF::parse_literal(text, s.tower().base()).unwrap()
    }

    fn int(v: &CycloInt) -> i64 {
        v.as_integer().expect("integer value").try_into().unwrap()
    }

    #[test]
    fn psi_a_examples() {
        let s = spec(2, 3, None);
        assert_eq!(s.psi_a(&MatF::zeros(1, 3, 3)), CycloInt::one(2));
        assert_eq!(s.psi_a(&MatF::unit(1, 3, 3, 1)), CycloInt::root_of_unity(2, 1));
        assert_eq!(s.psi_a(&MatF::unit(1, 3, 1, 1)), CycloInt::one(2));
    }

    #[test]
    fn rank_two_a_rejected() {
        let s = spec(2, 3, None);
        let a = lit(&s, "1,0,0;0,1,0;0,0,0");
        let err = JacquetSpec::new(s.pi().clone(), a, s.psi().clone()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn dimension_n3_q2_and_n2_q2() {
        assert_eq!(spec(2, 3, None).jacquet_dim().unwrap(), BigInt::from(9));
        assert_eq!(spec(2, 2, None).jacquet_dim().unwrap(), BigInt::from(1));
        assert_eq!(spec(3, 2, None).jacquet_dim().unwrap(), BigInt::from(4));
    }

    #[test]
    fn fast_path_matches_term_by_term_sum() {
        let s = spec(2, 3, None);
        let cases = [
            ("1,0,0;0,1,0;0,0,1", "1,0,0;0,1,0;0,0,1"),
            ("1,1,0;0,1,0;0,0,1", "1,0,0;0,1,1;0,0,1"),
            ("1,0,0;1,1,0;0,0,1", "1,0,0;0,1,0;0,1,1"),
            ("1,1,0;1,0,0;0,0,1", "1,0,0;0,0,1;0,1,1"),
            ("0,1,0;1,0,1;0,0,1", "1,0,1;0,1,0;0,0,1"),
        ];
        for (a, b) in cases {
            let m = LeviElement::new(lit(&s, a), lit(&s, b));
            assert_eq!(s.twisted_char(&m).unwrap(), s.twisted_char_reference(&m).unwrap(), "{a} / {b}");
            s.twisted_char_checked(&m).unwrap();
        }
    }

    #[test]
    fn membership() {
        let s = spec(2, 3, None);
        assert!(s.m_psi_membership(&LeviElement::identity(3)));
        // m₁ with last row (0,1,0) breaks A m₁ = m₂ A for m₂ = I
        let m = LeviElement::new(lit(&s, "1,0,0;0,0,1;0,1,0"), MatF::identity(1, 3));
        assert!(!s.m_psi_membership(&m));
    }

    #[test]
    fn type_pair_values_q2() {
        let s = spec(2, 3, None);
        // T(1,1): m₁ = I + E₁₂, m₂ = I + E₂₃
        let t11 = LeviElement::new(lit(&s, "1,1,0;0,1,0;0,0,1"), lit(&s, "1,0,0;0,1,1;0,0,1"));
        assert_eq!(int(&s.twisted_char(&t11).unwrap()), 1);
        let a1 = s.fiber_partial_sum(&t11, Elem::ZERO, None).unwrap();
        assert_eq!(int(&a1), 256);
        let a2 = s.fiber_partial_sum(&t11, Elem::ONE, None).unwrap();
        assert_eq!(int(&a2), 256);
    }

    #[test]
    fn central_twist_q3() {
        let s = spec(3, 2, None);
        let f = s.tower().base();
        let g = f.generator();
        let h = LeviElement::new(lit(&s, "1,1;0,1"), lit(&s, "1,1;0,1"));
        for m in [LeviElement::identity(2), h] {
            let direct = s.twisted_char(&m.scaled(s.tower(), g)).unwrap();
            assert_eq!(direct, s.central_twist(g, &m).unwrap());
            assert_eq!(s.central_twist(Elem::ONE, &m).unwrap(), s.twisted_char(&m).unwrap());
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let s = spec(2, 3, None).with_max_terms(100);
        assert!(matches!(s.jacquet_dim(), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn non_unipotent_spectrum_path() {
        // a Levi element with an irreducible quadratic spectrum exercises level-2 ranks
        let s = spec(2, 2, None);
        let c = lit(&s, "0,1;1,1");
        let m = LeviElement::new(c.clone(), c);
        assert_eq!(s.twisted_char(&m).unwrap(), s.twisted_char_reference(&m).unwrap());
        s.twisted_char_checked(&m).unwrap();
    }
}
