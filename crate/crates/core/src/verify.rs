//! Comparison of `Θ_{N,ψ_A}(m)` with `θ(a)·χ_{ρ1}(m₁)·χ_{ρ2}(m₂)` on `M_{ψ_A}`,
//! plus the type-pair values, symmetries and reduction chains for `n = 3`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blockdim::t11_representative;
use crate::charfn::{smallest_regular, AdditiveChar, MultChar};
use crate::cuspchar::CuspidalData;
use crate::error::{Error, Result};
use crate::gf::{prime_power, Elem, FieldElement, FieldTower, LevelField};
use crate::jacquet::{JacquetSpec, LeviElement};
use crate::levi::{mirabolic_order, table_formula, table_value, Side, SubgroupSpec, TypeLabel, DEFAULT_MAX_GROUP_ENUM};
use crate::matfq::MatF;
use crate::CycloInt;

/// Default bound on `q^{2n}`, the size of the top field.
pub const DEFAULT_MAX_FIELD_SIZE: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_field_size: u64,
    pub max_group_enum: u64,
}

impl Default for Caps {
    fn default() -> Caps {
        Caps { max_field_size: DEFAULT_MAX_FIELD_SIZE, max_group_enum: DEFAULT_MAX_GROUP_ENUM }
    }
}

/// Parameters of a verification run.
#[derive(Clone, Debug, Default)]
pub struct Setup {
    pub n: usize,
    pub q: u64,
    /// Exponent of `θ`; `None` picks the smallest regular one.
    pub theta: Option<u64>,
    /// Polynomial-basis index of the scaling `c` in `ψ₀(x) = ζ_p^{Tr(cx)}`; `None` is `c = 1`.
    pub psi0: Option<u32>,
    /// Literal for `A`; `None` is `E_{1n}`.
    pub a: Option<String>,
    pub caps: Caps,
}

/// The Jacquet side and the induced side for one `(n, q, θ, ψ₀, A)`.
#[derive(Debug)]
pub struct Verifier {
    jac: JacquetSpec,
    sub: SubgroupSpec,
}

/// Which elements of `M_{ψ_A}` to compare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub exhaustive: bool,
    pub typed: bool,
    /// `(seed, count)`.
    pub sampled: Option<(u64, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    /// Polynomial-basis index of the central scalar.
    pub a: u32,
    pub m1: String,
    pub m2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<(String, String)>,
    pub lhs: CycloInt,
    pub rhs: CycloInt,
    pub equal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub q: u64,
    pub theta_exponent: u64,
    pub psi_scaling: u32,
    pub a: String,
    pub mode: String,
    pub elements: usize,
    pub mismatches: usize,
    pub records: Vec<Record>,
    pub pass: bool,
    pub elapsed_ms: u128,
}

/// A named equality with its outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypePairValue {
    pub i: u8,
    pub j: u8,
    pub formula: String,
    pub expected: i64,
    pub computed: CycloInt,
    pub equal: bool,
}

/// Per-row summary of a character table over `M₁` or `M₂`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoRow {
    #[serde(rename = "type")]
    pub row: String,
    #[serde(rename = "closed_form_value")]
    pub closed: i64,
    /// Common value of the coset sum over the row, if there is one.
    #[serde(rename = "computed_value")]
    pub coset: Option<i64>,
    /// Common trace of the permutation model over the row, if there is one.
    #[serde(rename = "model_value")]
    pub model: Option<i64>,
    pub formula: String,
    pub elements: usize,
    #[serde(rename = "match")]
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoPairRow {
    pub i: String,
    pub j: String,
    pub closed: i64,
    pub computed: Option<i64>,
    #[serde(rename = "match")]
    pub matches: bool,
}

/// One `(m₁, m₂)` per nonempty `T(i,j)`, keyed by type index (`None` for typeless).
pub type PairRepresentatives = BTreeMap<(Option<u8>, Option<u8>), (MatF, MatF)>;

/// The pairs with a stated closed form for `Θ_{N,ψ_A}`.
pub const THEOREM_PAIRS: &[(u8, u8)] = &[
    (1, 1),
    (1, 2),
    (4, 1),
    (2, 2),
    (4, 2),
    (4, 4),
    (1, 6),
    (1, 9),
    (6, 6),
    (6, 9),
    (9, 9),
    (2, 6),
    (2, 9),
    (4, 6),
    (4, 9),
];

/// Reduction chains `(i,j) → … ` used to evaluate `Θ_{N,ψ_A}` on every `T(i,j)`.
pub const REDUCTION_CHAINS: &[&str] = &[
    "1,3>1,1",
    "1,5>1,1",
    "1,6>1,1",
    "1,7>1,1",
    "1,8>1,2",
    "1,9>1,1",
    "1,10>1,2",
    "2,3>2,1>1,2",
    "2,5>2,1>1,2",
    "2,6>2,1>1,2",
    "2,7>2,1>1,2",
    "2,8>2,2",
    "2,9>2,1>1,2",
    "2,10>2,2",
    "3,3>3,1>1,3>1,1",
    "4,3>4,1>1,4",
    "3,5>3,1>1,3>1,1",
    "3,6>6,3>6,1>1,6>1,1",
    "3,7>3,1>1,3>1,1",
    "3,8>3,2>2,3>2,1>1,2",
    "3,9>9,3>9,1>1,9>1,1",
    "3,10>3,2>2,3>2,1>1,2",
    "4,5>4,1>1,4",
    "4,6>4,1>1,4",
    "4,7>4,1>1,4",
    "4,8>4,2>2,4",
    "4,9>4,1>1,4",
    "4,10>4,2>2,4",
    "5,5>5,1>1,5>1,1",
    "5,6>6,5>6,1>1,6>1,1",
    "5,7>5,1>1,5>1,1",
    "5,8>5,2>2,5>2,1>1,2",
    "5,9>9,5>9,1>1,9>1,1",
    "5,10>5,2>2,5>2,1>1,2",
    "6,6>6,1>1,6>1,1",
    "6,7>6,1>1,6>1,1",
    "6,8>6,2>2,6>2,1>1,2",
    "6,9>6,1>1,6>1,1",
    "6,10>6,2>2,6>2,1>1,2",
    "7,7>7,1>1,7>1,1",
    "7,8>7,2>2,7>2,1>1,2",
    "7,9>9,7>9,1>1,9>1,1",
    "7,10>7,2>2,7>2,1>1,2",
    "8,8>8,2>2,8>2,2",
    "8,9>9,8>9,2>2,9>2,1>1,2",
    "8,10>8,2>2,8>2,2",
    "9,9>9,1>1,9>1,1",
    "9,10>9,2>2,9>2,1>1,2",
    "10,10>10,2>2,10>2,2",
];

pub fn parse_chain(text: &str) -> Result<Vec<(u8, u8)>> {
    text.split('>')
        .map(|pair| {
            let (i, j) = pair.split_once(',').ok_or_else(|| Error::Parse(format!("bad pair {pair:?}")))?;
            let p = |s: &str| s.trim().parse::<u8>().map_err(|_| Error::Parse(format!("bad type {s:?}")));
            Ok((p(i)?, p(j)?))
        })
        .collect()
}

fn label_text(l: Option<u8>) -> String {
    match l {
        Some(i) => i.to_string(),
        None => "untyped".into(),
    }
}

/// `formula(i)·formula(j)` as text.
pub fn pair_formula(i: u8, j: u8) -> String {
    // exponents of (1-q) and (1-q^2) in a row value
    let exps = |k: u8| match k {
        2 | 8 | 10 => (0, 0),
        4 => (1, 1),
        _ => (1, 0),
    };
    let ((a1, b1), (a2, b2)) = (exps(i), exps(j));
    let factor = |base: &str, e: u32| match e {
        0 => String::new(),
        1 => base.to_string(),
        e => format!("{base}^{e}"),
    };
    let text = factor("(1-q)", a1 + a2) + &factor("(1-q^2)", b1 + b2);
    if text.is_empty() {
        "1".into()
    } else {
        text
    }
}

/// `[H_A : U_A] = [M₁ : U₁]²`, the expected `dim π_{N,ψ_A}`.
pub fn expected_dim(n: usize, q: u64) -> u128 {
    let unipotent = (q as u128).pow((n * (n - 1) / 2) as u32);
    (mirabolic_order(n, q) / unipotent).pow(2)
}

fn int_of(v: &CycloInt) -> Option<i64> {
    v.as_integer().and_then(|n| i64::try_from(n).ok())
}

impl Verifier {
    pub fn new(setup: &Setup) -> Result<Verifier> {
        let (p, f) =
            prime_power(setup.q).ok_or_else(|| Error::Precondition(format!("q = {} is not a prime power", setup.q)))?;
        if setup.n == 0 {
            return Err(Error::Precondition("n must be positive".into()));
        }
        let tower = Arc::new(FieldTower::build_with_cap(p, f, 2 * setup.n as u32, setup.caps.max_field_size)?);
        let k = match setup.theta {
            Some(k) => k,
            None => smallest_regular(&tower)?,
        };
        let pi = Arc::new(CuspidalData::new(MultChar::new(tower.clone(), k)?)?);
        let base = tower.base();
        let c = match setup.psi0 {
            Some(idx) => base.from_index(idx)?,
            None => Elem::ONE,
        };
        let psi = AdditiveChar::new(tower.clone(), c)?;
        let a = match &setup.a {
            Some(text) => MatF::parse_literal(text, base)?,
            None => MatF::unit(1, setup.n, 1, setup.n),
        };
        let jac = JacquetSpec::new(pi, a, psi.clone())?.with_max_terms(setup.caps.max_group_enum);
        let sub = SubgroupSpec::with_cap(tower, setup.n, psi, setup.caps.max_group_enum)?;
        Ok(Verifier { jac, sub })
    }

    pub fn jacquet(&self) -> &JacquetSpec {
        &self.jac
    }

    pub fn subgroups(&self) -> &SubgroupSpec {
        &self.sub
    }

    fn field(&self) -> &LevelField {
        self.jac.tower().base()
    }

    fn q(&self) -> u64 {
        self.jac.q()
    }

    /// `Θ_{N,ψ_A}(a·diag(m₁, m₂))`.
    pub fn lhs(&self, a: Elem, m1: &MatF, m2: &MatF) -> Result<CycloInt> {
        let m = self.sub.levi_element(a, m1, m2);
        if !self.jac.m_psi_membership(&m) {
            return Err(Error::NotMember("element does not stabilize psi_A".into()));
        }
        self.jac.twisted_char(&m)
    }

    /// `θ(a)·χ_{ρ1}(m₁)·χ_{ρ2}(m₂)`.
    pub fn rhs(&self, a: Elem, m1: &MatF, m2: &MatF) -> Result<CycloInt> {
        self.sub.rho_char(self.jac.pi().theta(), a, m1, m2)
    }

    fn label(&self, side: Side, m: &MatF) -> Result<Option<TypeLabel>> {
        if self.sub.n() != 3 {
            return Ok(None);
        }
        self.sub.classify_type(side, m).map(Some)
    }

    pub fn compare(&self, a: Elem, m1: &MatF, m2: &MatF) -> Result<Record> {
        let f = self.field();
        let lhs = self.lhs(a, m1, m2)?;
        let rhs = self.rhs(a, m1, m2)?;
        let mut note = None;
        let l1 = self.label(Side::First, m1)?;
        let l2 = self.label(Side::Second, m2)?;
        for (side, m, l) in [(Side::First, m1, l1), (Side::Second, m2, l2)] {
            if let Some(TypeLabel { index: None, .. }) = l {
                if !self.sub.induced_char_cosets(side, m)?.is_zero() {
                    note = Some(format!("untyped element of M{} with nonzero character", side.index()));
                }
            }
        }
        let equal = lhs == rhs && note.is_none();
        Ok(Record {
            a: f.to_index(a),
            m1: m1.to_literal(f),
            m2: m2.to_literal(f),
            types: l1.zip(l2).map(|(x, y)| (x.to_string(), y.to_string())),
            lhs,
            rhs,
            equal,
            note,
        })
    }

    /// Every element of `M₁` (side 1) or `M₂` (side 2) grouped by table row.
    pub fn by_type(&self, side: Side) -> Result<BTreeMap<Option<u8>, Vec<MatF>>> {
        let mut out: BTreeMap<Option<u8>, Vec<MatF>> = BTreeMap::new();
        for g in self.sub.group(side) {
            out.entry(self.sub.classify_type(side, g)?.index).or_default().push(g.clone());
        }
        Ok(out)
    }

    /// First element of each `T(i,j)`, `i, j ∈ {1..10, untyped}`, nonempty pairs only.
    pub fn type_pair_representatives(&self) -> Result<PairRepresentatives> {
        let t1 = self.by_type(Side::First)?;
        let t2 = self.by_type(Side::Second)?;
        let mut out = BTreeMap::new();
        for (i, g1) in &t1 {
            for (j, g2) in &t2 {
                out.insert((*i, *j), (g1[0].clone(), g2[0].clone()));
            }
        }
        Ok(out)
    }

    fn selected(&self, sel: Selection) -> Result<Vec<(Elem, MatF, MatF)>> {
        let f = self.field();
        let mut picked: Vec<(Elem, MatF, MatF)> = Vec::new();
        if sel.exhaustive {
            picked.extend(self.sub.enumerate_m_psi().map(|(a, m1, m2)| (a, m1.clone(), m2.clone())));
        } else {
            if sel.typed {
                if self.sub.n() != 3 {
                    return Err(Error::Precondition("typed coverage needs n = 3".into()));
                }
                for (m1, m2) in self.type_pair_representatives()?.into_values() {
                    picked.push((Elem::ONE, m1, m2));
                }
                let id = MatF::identity(1, 3);
                for a in f.nonzero() {
                    picked.push((a, id.clone(), id.clone()));
                }
            }
            if let Some((seed, count)) = sel.sampled {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let nonzero: Vec<Elem> = f.nonzero().collect();
                let (g1, g2) = (self.sub.group(Side::First), self.sub.group(Side::Second));
                for _ in 0..count {
                    let a = nonzero[rng.gen_range(0..nonzero.len())];
                    let m1 = g1[rng.gen_range(0..g1.len())].clone();
                    let m2 = g2[rng.gen_range(0..g2.len())].clone();
                    picked.push((a, m1, m2));
                }
            }
        }
        Ok(picked)
    }

    pub fn run(&self, sel: Selection) -> Result<VerifyReport> {
        let start = Instant::now();
        let picked = self.selected(sel)?;
        let elements = picked.len();
        let mut records: Vec<Record> =
            picked.par_iter().map(|(a, m1, m2)| self.compare(*a, m1, m2)).collect::<Result<_>>()?;
        records.sort_by(|x, y| (x.a, &x.m1, &x.m2).cmp(&(y.a, &y.m1, &y.m2)));
        records.dedup_by(|x, y| x.a == y.a && x.m1 == y.m1 && x.m2 == y.m2);
        let mismatches = records.iter().filter(|r| !r.equal).count();
        let mode = [
            sel.exhaustive.then(|| "exhaustive".to_string()),
            (!sel.exhaustive && sel.typed).then(|| "typed".to_string()),
            sel.sampled.filter(|_| !sel.exhaustive).map(|(s, c)| format!("sampled(seed={s:#x}, count={c})")),
        ]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("+");
        Ok(VerifyReport {
            n: self.sub.n(),
            q: self.q(),
            theta_exponent: self.jac.pi().theta().exponent(),
            psi_scaling: self.field().to_index(self.jac.psi().scaling()),
            a: self.jac.a().to_literal(self.field()),
            mode,
            elements,
            mismatches,
            pass: mismatches == 0,
            records,
            elapsed_ms: start.elapsed().as_millis(),
        })
    }

    /// `Θ_{N,ψ_A}` on a representative of each pair in [`THEOREM_PAIRS`].
    pub fn type_pair_values(&self) -> Result<Vec<TypePairValue>> {
        let reps = self.type_pair_representatives()?;
        let q = self.q() as i64;
        THEOREM_PAIRS
            .iter()
            .map(|&(i, j)| {
                let (m1, m2) =
                    reps.get(&(Some(i), Some(j))).ok_or_else(|| Error::Precondition(format!("T({i},{j}) is empty")))?;
                let computed = self.lhs(Elem::ONE, m1, m2)?;
                let expected = table_value(i, q) * table_value(j, q);
                Ok(TypePairValue {
                    i,
                    j,
                    formula: pair_formula(i, j),
                    expected,
                    equal: computed.as_integer() == Some(BigInt::from(expected)),
                    computed,
                })
            })
            .collect()
    }

    /// `(A₁, A₂)`: the `T(1,1)` sum split into `tr(A m₁^{-1} X) = 0` and `≠ 0`.
    pub fn t11_partial_sums(&self) -> Result<(CycloInt, CycloInt)> {
        let (m1, m2) = t11_representative();
        let m = LeviElement::new(m1, m2);
        let f = self.field();
        let a1 = self.jac.fiber_partial_sum(&m, Elem::ZERO, None)?;
        let mut a2 = CycloInt::zero(a1.conductor());
        for beta in f.nonzero() {
            a2 = a2.try_add(&self.jac.fiber_partial_sum(&m, beta, None)?)?;
        }
        Ok((a1, a2))
    }

    /// Symmetries and reductions of `Θ_{N,ψ_A}` for `n = 3`. With `exhaustive`
    /// the pair symmetries run over all of `M₁ × M₂`, otherwise over type
    /// representatives.
    pub fn symmetry_checks(&self, exhaustive: bool) -> Result<Vec<CheckRecord>> {
        if self.sub.n() != 3 {
            return Err(Error::Precondition("symmetry checks are stated for n = 3".into()));
        }
        let f = self.field();
        let mut out = Vec::new();
        let mut check =
            |name: &str, detail: String, pass: bool| out.push(CheckRecord { name: name.into(), detail, pass });
        let cache: parking_lot::RwLock<HashMap<(MatF, MatF), CycloInt>> = Default::default();
        let theta = |m1: &MatF, m2: &MatF| -> Result<CycloInt> {
            let key = (m1.clone(), m2.clone());
            if let Some(v) = cache.read().get(&key) {
                return Ok(v.clone());
            }
            let v = self.lhs(Elem::ONE, m1, m2)?;
            cache.write().insert(key, v.clone());
            Ok(v)
        };

        let reps = self.type_pair_representatives()?;
        let pairs: Vec<(MatF, MatF)> = if exhaustive {
            let (g1, g2) = (self.sub.group(Side::First), self.sub.group(Side::Second));
            g1.iter().flat_map(|a| g2.iter().map(move |b| (a.clone(), b.clone()))).collect()
        } else {
            reps.values().cloned().collect()
        };
        pairs.par_iter().try_for_each(|(m1, m2)| theta(m1, m2).map(|_| ()))?;

        // transpose: (m₁, m₂) ↦ (w₀m₂ᵀw₀, w₀m₁ᵀw₀)
        let w0 = MatF::antidiagonal(1, 3);
        let flip = |m: &MatF| w0.mul(f, &m.transpose()).and_then(|x| x.mul(f, &w0));
        let mut bad = 0usize;
        for (m1, m2) in &pairs {
            if theta(m1, m2)? != theta(&flip(m2)?, &flip(m1)?)? {
                bad += 1;
            }
        }
        check("transpose symmetry", format!("{} pairs, {bad} failures", pairs.len()), bad == 0);

        // conjugation of the second block by the transposition of e₂, e₃
        let w = MatF::parse_literal("1,0,0;0,0,1;0,1,0", f)?;
        let conj = |m: &MatF| w.mul(f, m).and_then(|x| x.mul(f, &w));
        let mut bad = 0usize;
        for (m1, m2) in &pairs {
            if theta(m1, m2)? != theta(m1, &conj(m2)?)? {
                bad += 1;
            }
        }
        check("second-block conjugation", format!("{} pairs, {bad} failures", pairs.len()), bad == 0);

        let t2 = self.by_type(Side::Second)?;
        for (from, to) in [(3u8, 5u8), (7, 1), (8, 2)] {
            let mut ok = true;
            for m2 in t2.get(&Some(from)).into_iter().flatten() {
                ok &= self.sub.classify_type(Side::Second, &conj(m2)?)?.index == Some(to);
            }
            check("conjugation maps types", format!("(x,{from}) -> (x,{to})"), ok);
        }

        // equal Ker(m₂ − 1) gives equal values
        let t1 = self.by_type(Side::First)?;
        for (j, j2) in [(5u8, 1u8), (10, 2)] {
            let mut ok = true;
            let mut kernels_equal = true;
            for (i, g1) in &t1 {
                let Some(i) = i else { continue };
                let (Some(a), Some(b)) = (reps.get(&(Some(*i), Some(j))), reps.get(&(Some(*i), Some(j2)))) else {
                    continue;
                };
                ok &= theta(&g1[0], &a.1)? == theta(&g1[0], &b.1)?;
                let ker = |m: &MatF| -> Result<Vec<Vec<Elem>>> { Ok(m.minus_scalar(f, Elem::ONE)?.kernel_basis(f)) };
                kernels_equal &=
                    MatF::from_columns(1, 3, &ker(&a.1)?).rank(f) == MatF::from_columns(1, 3, &ker(&b.1)?).rank(f);
            }
            check("kernel reduction", format!("(x,{j}) <-> (x,{j2}), equal kernel dimensions: {kernels_equal}"), ok);
        }

        // central twist Θ(a·h) = θ(a)Θ(h)
        let mut bad = 0usize;
        let theta_char = self.jac.pi().theta();
        for (m1, m2) in reps.values() {
            let base = theta(m1, m2)?;
            for a in f.nonzero() {
                let lhs = self.lhs(a, m1, m2)?;
                if lhs != theta_char.eval(FieldElement::new(1, a))?.try_mul(&base)? {
                    bad += 1;
                }
            }
        }
        check(
            "central twist",
            format!("{} representatives x {} scalars, {bad} failures", reps.len(), self.q() - 1),
            bad == 0,
        );

        for text in REDUCTION_CHAINS {
            let chain = parse_chain(text)?;
            let values: Vec<CycloInt> = chain
                .iter()
                .map(|&(i, j)| {
                    let (m1, m2) = reps
                        .get(&(Some(i), Some(j)))
                        .ok_or_else(|| Error::Precondition(format!("T({i},{j}) is empty")))?;
                    theta(m1, m2)
                })
                .collect::<Result<_>>()?;
            let distinct: BTreeSet<String> = values.iter().map(|v| v.to_string()).collect();
            check("reduction chain", format!("{} : {}", text.replace('>', " -> "), values[0]), distinct.len() == 1);
        }
        Ok(out)
    }

    /// Row summary of the character of `ρ₁` (side 1) or `ρ₂` (side 2).
    pub fn rho_table(&self, side: Side) -> Result<Vec<RhoRow>> {
        let q = self.q() as i64;
        let mut rows = Vec::new();
        for (label, group) in self.by_type(side)? {
            let closed = label.map_or(0, |i| table_value(i, q));
            let common = |vals: Vec<CycloInt>| -> Option<i64> {
                let set: BTreeSet<Option<i64>> = vals.iter().map(int_of).collect();
                match set.into_iter().collect::<Vec<_>>()[..] {
                    [Some(v)] => Some(v),
                    _ => None,
                }
            };
            let coset = common(group.iter().map(|g| self.sub.induced_char_cosets(side, g)).collect::<Result<_>>()?);
            let model = common(group.iter().map(|g| self.sub.induced_char_model(side, g)).collect::<Result<_>>()?);
            rows.push(RhoRow {
                row: label_text(label),
                elements: group.len(),
                formula: label.map_or("0".into(), |i| table_formula(i).into()),
                closed,
                coset,
                model,
                matches: coset == Some(closed) && model == Some(closed),
            });
        }
        Ok(rows)
    }

    /// `χ_{ρ1}(m₁)χ_{ρ2}(m₂)` on each nonempty `T(i,j)`, against the product of row values.
    pub fn rho_pair_table(&self) -> Result<Vec<RhoPairRow>> {
        let q = self.q() as i64;
        let t1 = self.by_type(Side::First)?;
        let t2 = self.by_type(Side::Second)?;
        let mut rows = Vec::new();
        for (i, g1) in &t1 {
            for (j, g2) in &t2 {
                let closed = i.map_or(0, |i| table_value(i, q)) * j.map_or(0, |j| table_value(j, q));
                let mut values = BTreeSet::new();
                for m1 in g1 {
                    let c1 = self.sub.induced_char_cosets(Side::First, m1)?;
                    for m2 in g2 {
                        values.insert(int_of(&c1.try_mul(&self.sub.induced_char_cosets(Side::Second, m2)?)?));
                    }
                }
                let computed = match values.into_iter().collect::<Vec<_>>()[..] {
                    [Some(v)] => Some(v),
                    _ => None,
                };
                rows.push(RhoPairRow {
                    i: label_text(*i),
                    j: label_text(*j),
                    closed,
                    computed,
                    matches: computed == Some(closed),
                });
            }
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verifier(n: usize, q: u64) -> Verifier {
        Verifier::new(&Setup { n, q, ..Default::default() }).unwrap()
    }

    #[test]
    fn theorem_exhaustive_small() {
        let v = verifier(3, 2);
        let r = v.run(Selection { exhaustive: true, typed: false, sampled: None }).unwrap();
        assert_eq!(r.elements, 576);
        assert!(r.pass);
        let n2 = verifier(2, 3).run(Selection { exhaustive: true, typed: false, sampled: None }).unwrap();
        assert_eq!(n2.elements, 72);
        assert!(n2.pass);
    }

    #[test]
    fn typed_representatives_cover_all_pairs() {
        let v = verifier(3, 2);
        let reps = v.type_pair_representatives().unwrap();
        assert_eq!(reps.len(), 11 * 11);
        let r = v.run(Selection { exhaustive: false, typed: true, sampled: Some((7, 50)) }).unwrap();
        assert!(r.pass);
        assert!(r.mode.contains("typed") && r.mode.contains("sampled"));
    }

    #[test]
    fn type_pairs_and_partial_sums() {
        let v = verifier(3, 2);
        assert!(v.type_pair_values().unwrap().iter().all(|t| t.equal));
        let (a1, a2) = v.t11_partial_sums().unwrap();
        assert_eq!(a1.as_integer(), Some(256.into()));
        assert_eq!(a2.as_integer(), Some(256.into()));
    }

    #[test]
    fn symmetries_on_representatives() {
        let checks = verifier(3, 2).symmetry_checks(false).unwrap();
        for c in &checks {
            assert!(c.pass, "{c:?}");
        }
        assert_eq!(checks.iter().filter(|c| c.name == "reduction chain").count(), REDUCTION_CHAINS.len());
    }

    #[test]
    fn chains_parse() {
        assert_eq!(parse_chain("3,7>3,1>1,3>1,1").unwrap(), vec![(3, 7), (3, 1), (1, 3), (1, 1)]);
        assert!(parse_chain("3;7").is_err());
        for c in REDUCTION_CHAINS {
            let chain = parse_chain(c).unwrap();
            assert!(chain.iter().all(|&(i, j)| (1..=10).contains(&i) && (1..=10).contains(&j)));
        }
    }

    #[test]
    fn expected_dimensions() {
        assert_eq!(expected_dim(3, 2), 9);
        assert_eq!(expected_dim(3, 3), 256);
        assert_eq!(expected_dim(2, 3), 4);
        assert_eq!(expected_dim(1, 5), 1);
        for (n, q) in [(2usize, 2u64), (2, 3), (3, 2), (1, 3)] {
            let v = verifier(n, q);
            assert_eq!(v.jacquet().jacquet_dim().unwrap(), BigInt::from(expected_dim(n, q)));
        }
    }

    #[test]
    fn formulas() {
        assert_eq!(pair_formula(1, 1), "(1-q)^2");
        assert_eq!(pair_formula(4, 1), "(1-q)^2(1-q^2)");
        assert_eq!(pair_formula(4, 4), "(1-q)^2(1-q^2)^2");
        assert_eq!(pair_formula(4, 2), "(1-q)(1-q^2)");
        assert_eq!(pair_formula(2, 2), "1");
        assert_eq!(pair_formula(1, 2), "(1-q)");
    }

    #[test]
    fn bad_setups() {
        assert!(Verifier::new(&Setup { n: 3, q: 6, ..Default::default() }).is_err());
        let rank2 = Setup { n: 3, q: 2, a: Some("1,0,0;0,1,0;0,0,0".into()), ..Default::default() };
        assert!(Verifier::new(&rank2).is_err());
        let irregular = Setup { n: 3, q: 2, theta: Some(0), ..Default::default() };
        assert!(Verifier::new(&irregular).is_err());
        let capped =
            Setup { n: 3, q: 3, caps: Caps { max_field_size: 1 << 20, max_group_enum: 100 }, ..Default::default() };
        assert!(matches!(Verifier::new(&capped), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn report_round_trips_through_json() {
        let r = verifier(2, 2).run(Selection { exhaustive: true, typed: false, sampled: None }).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: VerifyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rho_tables_match() {
        let v = verifier(3, 2);
        for side in [Side::First, Side::Second] {
            assert!(v.rho_table(side).unwrap().iter().all(|r| r.matches));
        }
        assert!(v.rho_pair_table().unwrap().iter().all(|r| r.matches));
    }
}
