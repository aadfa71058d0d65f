use std::io::{self, Write};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use twisted_jacquet::blockdim::check_t11_partition;
use twisted_jacquet::charfn::smallest_regular;
use twisted_jacquet::gf::prime_power;
use twisted_jacquet::levi::DEFAULT_MAX_GROUP_ENUM;
use twisted_jacquet::strata::{rank_totals_match, strata_rows};
use twisted_jacquet::verify::{expected_dim, DEFAULT_MAX_FIELD_SIZE};
use twisted_jacquet::{
    Caps, CuspidalData, CycloInt, Error, FieldTower, MatF, MultChar, Selection, Setup, Side, Verifier, VerifyReport,
};

#[derive(Parser)]
#[command(
    name = "twisted-jacquet",
    version,
    about = "Exact character computations for twisted Jacquet modules of cuspidal representations of GL(2n, F_q)"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV.
    #[arg(long, global = true)]
    csv: bool,
    /// Seed for sampled verification.
    #[arg(long, global = true, default_value = "0xC0FFEE", value_parser = parse_u64)]
    seed: u64,
    /// Largest allowed top field size q^(2n).
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_FIELD_SIZE)]
    max_field_size: u64,
    /// Largest allowed enumeration (group orders and q^(n^2) sums).
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_GROUP_ENUM)]
    max_group_enum: u64,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Size of the base field (a prime power).
    #[arg(long)]
    q: u64,
    /// Exponent k of the regular character, or `auto` for the smallest one.
    #[arg(long, default_value = "auto")]
    theta: String,
    /// Polynomial-basis index of the scaling c in psi0(x) = zeta_p^Tr(cx).
    #[arg(long)]
    psi0: Option<u32>,
    /// Rank-one matrix A as a literal such as "0,0,1;0,0,0;0,0,0" (default E_1n).
    #[arg(long = "A")]
    a: Option<String>,
}

#[derive(Args, Clone)]
struct ModeArgs {
    /// Compare on every element of M_psiA.
    #[arg(long)]
    exhaustive: bool,
    /// Compare on one representative of every type pair.
    #[arg(long)]
    typed: bool,
    /// Number of seeded random elements.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Rho1,
    Rho2,
    Rho,
    Strata,
    Pairs,
    PartialSums,
    Symmetry,
    Fibers,
}

#[derive(Subcommand)]
enum Command {
    /// Check the character identity for GL(6) on M_psiA.
    VerifyTheorem {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Check the same identity for GL(2n).
    VerifyConjecture {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Dimension of the twisted Jacquet module by the full sum over N.
    Dim {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Closed forms against computation.
    Tables {
        #[arg(long, value_enum)]
        which: Which,
        #[command(flatten)]
        spec: SpecArgs,
        /// Run the pair symmetries over all of M1 x M2.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Twisted Jacquet character and induced character at a*diag(m1, m2).
    TwistedChar {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        m1: String,
        #[arg(long)]
        m2: String,
        /// Central scalar as a field literal.
        #[arg(long, default_value = "1")]
        center: String,
    },
    /// Character of the cuspidal representation of GL(m, F_q) at a matrix.
    CuspidalChar {
        #[arg(long, default_value_t = 6)]
        m: u32,
        #[arg(long)]
        q: u64,
        #[arg(long, default_value = "auto")]
        theta: String,
        #[arg(long)]
        matrix: String,
    },
}

#[derive(Clone, Copy)]
enum Format {
    Human,
    Json,
    Csv,
}

enum Outcome {
    Pass,
    Mismatch,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<Outcome, Failure>;

fn parse_u64(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("{s:?}: {e}"))
}

fn parse_theta(s: &str) -> Result<Option<u64>, Failure> {
    if s == "auto" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Failure(format!("--theta expects an integer or `auto`, got {s:?}")))
}

fn outcome(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Mismatch
    }
}

fn cyclo_json(v: &CycloInt) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn print_json<T: Serialize>(out: &mut impl Write, v: &T) -> Result<(), Failure> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn write_csv<T: Serialize>(out: &mut impl Write, rows: &[T]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn setup(n: usize, spec: &SpecArgs, g: &Global) -> Result<Setup, Failure> {
    Ok(Setup {
        n,
        q: spec.q,
        theta: parse_theta(&spec.theta)?,
        psi0: spec.psi0,
        a: spec.a.clone(),
        caps: Caps { max_field_size: g.max_field_size, max_group_enum: g.max_group_enum },
    })
}

fn selection(v: &Verifier, mode: &ModeArgs, seed: u64) -> Selection {
    if mode.exhaustive || mode.typed || mode.samples.is_some() {
        return Selection { exhaustive: mode.exhaustive, typed: mode.typed, sampled: mode.samples.map(|c| (seed, c)) };
    }
    let small = v.subgroups().m_psi_order() <= 10_000;
    if small || v.subgroups().n() != 3 {
        Selection { exhaustive: true, typed: false, sampled: None }
    } else {
        Selection { exhaustive: false, typed: true, sampled: Some((seed, 10_000)) }
    }
}

#[derive(Serialize)]
struct RecordRow<'a> {
    a: u32,
    m1: &'a str,
    m2: &'a str,
    type1: &'a str,
    type2: &'a str,
    lhs: String,
    rhs: String,
    equal: bool,
    note: &'a str,
}

fn emit_report(out: &mut impl Write, fmt: Format, name: &str, r: &VerifyReport) -> Result<(), Failure> {
    match fmt {
        Format::Json => print_json(out, r)?,
        Format::Csv => {
            let rows: Vec<RecordRow> = r
                .records
                .iter()
                .map(|x| RecordRow {
                    a: x.a,
                    m1: &x.m1,
                    m2: &x.m2,
                    type1: x.types.as_ref().map_or("", |t| t.0.as_str()),
                    type2: x.types.as_ref().map_or("", |t| t.1.as_str()),
                    lhs: cyclo_json(&x.lhs),
                    rhs: cyclo_json(&x.rhs),
                    equal: x.equal,
                    note: x.note.as_deref().unwrap_or(""),
                })
                .collect();
            write_csv(out, &rows)?;
        }
        Format::Human => {
            writeln!(out, "{name} n={} q={} theta={} psi0={} A={}", r.n, r.q, r.theta_exponent, r.psi_scaling, r.a)?;
            writeln!(out, "mode: {}", r.mode)?;
            writeln!(out, "elements: {}  mismatches: {}  time: {} ms", r.elements, r.mismatches, r.elapsed_ms)?;
            for x in r.records.iter().filter(|x| !x.equal).take(10) {
                writeln!(out, "  MISMATCH a={} m1={} m2={}: {} vs {}", x.a, x.m1, x.m2, x.lhs, x.rhs)?;
                if let Some(note) = &x.note {
                    writeln!(out, "    {note}")?;
                }
            }
            writeln!(out, "{}", if r.pass { "PASS" } else { "FAIL" })?;
        }
    }
    Ok(())
}

fn cmd_verify(
    out: &mut impl Write,
    fmt: Format,
    g: &Global,
    n: usize,
    spec: &SpecArgs,
    mode: &ModeArgs,
    name: &str,
) -> CmdResult {
    let v = Verifier::new(&setup(n, spec, g)?)?;
    let report = v.run(selection(&v, mode, g.seed))?;
    emit_report(out, fmt, name, &report)?;
    Ok(outcome(report.pass))
}

fn cmd_dim(out: &mut impl Write, fmt: Format, g: &Global, n: usize, spec: &SpecArgs) -> CmdResult {
    let v = Verifier::new(&setup(n, spec, g)?)?;
    let dim = v.jacquet().jacquet_dim()?;
    let expected = expected_dim(n, spec.q);
    let closed = (n == 3).then(|| {
        let q = spec.q as u128;
        ("(q-1)^2(q^2-1)^2", (q - 1).pow(2) * (q * q - 1).pow(2))
    });
    let pass = dim == expected.into() && closed.is_none_or(|(_, c)| c == expected);
    match fmt {
        Format::Json => print_json(
            out,
            &json!({
                "n": n, "q": spec.q, "dim": dim.to_string(), "expected": expected.to_string(),
                "closed_form": closed.map(|c| c.0), "match": pass,
            }),
        )?,
        Format::Csv => {
            writeln!(out, "n,q,dim,expected,match")?;
            writeln!(out, "{n},{},{dim},{expected},{pass}", spec.q)?;
        }
        Format::Human => {
            writeln!(out, "{dim}")?;
            match closed {
                Some((form, value)) => writeln!(out, "closed form {form} = {value}")?,
                None => writeln!(out, "expected [H_A:U_A] = {expected}")?,
            }
        }
    }
    Ok(outcome(pass))
}

fn emit_rows<T: Serialize>(out: &mut impl Write, fmt: Format, rows: &[T]) -> Result<(), Failure> {
    match fmt {
        Format::Json => print_json(out, &rows),
        Format::Csv | Format::Human => write_csv(out, rows),
    }
}

#[derive(Serialize)]
struct NamedValue {
    name: &'static str,
    expected: String,
    computed: String,
    #[serde(rename = "match")]
    matches: bool,
}

fn cmd_tables(
    out: &mut impl Write,
    fmt: Format,
    g: &Global,
    which: Which,
    spec: &SpecArgs,
    exhaustive: bool,
) -> CmdResult {
    let (p, f) = prime_power(spec.q).ok_or_else(|| Failure(format!("q = {} is not a prime power", spec.q)))?;
    if let Which::Strata | Which::Fibers = which {
        let tower = FieldTower::build_with_cap(p, f, 1, g.max_field_size)?;
        let field = tower.base();
        if let Which::Fibers = which {
            let cap = (spec.q as u128).pow(9);
            if cap > g.max_group_enum as u128 {
                return Err(Error::EnumerationCap { what: "M(3, F_q)", got: cap, cap: g.max_group_enum }.into());
            }
            let rows: Vec<_> = check_t11_partition(field)?
                .into_iter()
                .map(|(label, table, counted, ok)| {
                    json!({"row": label, "cardinality": table.to_string(), "counted": counted, "match": ok && table == counted as i128})
                })
                .collect();
            let pass = rows.iter().all(|r| r["match"] == true);
            #[derive(Serialize)]
            struct FiberCsv {
                row: String,
                cardinality: String,
                counted: u64,
                #[serde(rename = "match")]
                matches: bool,
            }
            match fmt {
                Format::Json => print_json(out, &rows)?,
                _ => {
                    let flat: Vec<FiberCsv> = rows
                        .iter()
                        .map(|r| FiberCsv {
                            row: r["row"].as_str().unwrap_or_default().into(),
                            cardinality: r["cardinality"].as_str().unwrap_or_default().into(),
                            counted: r["counted"].as_u64().unwrap_or_default(),
                            matches: r["match"] == true,
                        })
                        .collect();
                    write_csv(out, &flat)?;
                }
            }
            return Ok(outcome(pass));
        }
        #[derive(Serialize)]
        struct StrataCsv {
            r: usize,
            alpha_class: &'static str,
            closed: String,
            brute: String,
            #[serde(rename = "match")]
            matches: bool,
        }
        let rows: Vec<StrataCsv> = strata_rows(field, g.max_group_enum)?
            .into_iter()
            .map(|r| StrataCsv {
                r: r.r,
                alpha_class: match r.alpha_class {
                    twisted_jacquet::strata::AlphaClass::Zero => "zero",
                    twisted_jacquet::strata::AlphaClass::Nonzero => "nonzero",
                },
                closed: r.closed.to_string(),
                brute: r.brute.map_or("inconsistent".into(), |b| b.to_string()),
                matches: r.matches,
            })
            .collect();
        let totals = rank_totals_match(field, 3, g.max_group_enum)?;
        emit_rows(out, fmt, &rows)?;
        return Ok(outcome(totals && rows.iter().all(|r| r.matches)));
    }
    let v = Verifier::new(&setup(3, spec, g)?)?;
    let pass = match which {
        Which::Rho1 | Which::Rho2 => {
            let side = if let Which::Rho1 = which { Side::First } else { Side::Second };
            let rows = v.rho_table(side)?;
            emit_rows(out, fmt, &rows)?;
            rows.iter().all(|r| r.matches)
        }
        Which::Rho => {
            let rows = v.rho_pair_table()?;
            emit_rows(out, fmt, &rows)?;
            rows.iter().all(|r| r.matches)
        }
        Which::Pairs => {
            #[derive(Serialize)]
            struct PairCsv {
                i: u8,
                j: u8,
                formula: String,
                expected: i64,
                computed: String,
                #[serde(rename = "match")]
                matches: bool,
            }
            let vals = v.type_pair_values()?;
            let pass = vals.iter().all(|t| t.equal);
            match fmt {
                Format::Json => print_json(out, &vals)?,
                _ => {
                    let rows: Vec<PairCsv> = vals
                        .into_iter()
                        .map(|t| PairCsv {
                            i: t.i,
                            j: t.j,
                            formula: t.formula,
                            expected: t.expected,
                            computed: t.computed.to_string(),
                            matches: t.equal,
                        })
                        .collect();
                    write_csv(out, &rows)?;
                }
            }
            pass
        }
        Which::PartialSums => {
            let (a1, a2) = v.t11_partial_sums()?;
            let q = spec.q as u128;
            let e1 = q.pow(8) * (q - 1).pow(3);
            let e2 = q.pow(8) * (q - 1).pow(2);
            let rows = [
                NamedValue {
                    name: "A1",
                    expected: e1.to_string(),
                    computed: a1.to_string(),
                    matches: a1.as_integer() == Some(e1.into()),
                },
                NamedValue {
                    name: "A2",
                    expected: e2.to_string(),
                    computed: a2.to_string(),
                    matches: a2.as_integer() == Some(e2.into()),
                },
            ];
            emit_rows(out, fmt, &rows)?;
            rows.iter().all(|r| r.matches)
        }
        Which::Symmetry => {
            let checks = v.symmetry_checks(exhaustive)?;
            emit_rows(out, fmt, &checks)?;
            checks.iter().all(|c| c.pass)
        }
        Which::Strata | Which::Fibers => unreachable!("handled above"),
    };
    Ok(outcome(pass))
}

#[allow(clippy::too_many_arguments)]
fn cmd_twisted_char(
    out: &mut impl Write,
    fmt: Format,
    g: &Global,
    n: usize,
    spec: &SpecArgs,
    m1: &str,
    m2: &str,
    center: &str,
) -> CmdResult {
    let v = Verifier::new(&setup(n, spec, g)?)?;
    let field = v.jacquet().tower().base();
    let m1 = MatF::parse_literal(m1, field)?;
    let m2 = MatF::parse_literal(m2, field)?;
    let a = MatF::parse_literal(center, field)?;
    if a.rows() != 1 || a.cols() != 1 || a.get(0, 0).is_zero() {
        return Err(Failure("--center must be a single nonzero field element".into()));
    }
    let a = a.get(0, 0);
    let member = v.subgroups().contains(Side::First, &m1) && v.subgroups().contains(Side::Second, &m2);
    if !member {
        return Err(Failure(format!("m1 must lie in M1 and m2 in M2 (n = {n})")));
    }
    let r = v.compare(a, &m1, &m2)?;
    match fmt {
        Format::Json => print_json(out, &r)?,
        Format::Csv => {
            writeln!(out, "lhs,rhs,equal")?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record([cyclo_json(&r.lhs), cyclo_json(&r.rhs), r.equal.to_string()])?;
            w.flush()?;
        }
        Format::Human => {
            if let Some((t1, t2)) = &r.types {
                writeln!(out, "types: ({t1}, {t2})")?;
            }
            writeln!(out, "twisted Jacquet character: {}", r.lhs)?;
            writeln!(out, "induced character:         {}", r.rhs)?;
            writeln!(out, "{}", if r.equal { "equal" } else { "DIFFERENT" })?;
        }
    }
    Ok(outcome(r.equal))
}

fn cmd_cuspidal_char(
    out: &mut impl Write,
    fmt: Format,
    g: &Global,
    m: u32,
    q: u64,
    theta: &str,
    matrix: &str,
) -> CmdResult {
    let (p, f) = prime_power(q).ok_or_else(|| Failure(format!("q = {q} is not a prime power")))?;
    let tower = Arc::new(FieldTower::build_with_cap(p, f, m, g.max_field_size)?);
    let k = match parse_theta(theta)? {
        Some(k) => k,
        None => smallest_regular(&tower)?,
    };
    let pi = CuspidalData::new(MultChar::new(tower.clone(), k)?)?;
    let x = MatF::parse_literal(matrix, tower.base())?;
    let value = pi.theta_char(&x)?;
    match fmt {
        Format::Json => print_json(out, &json!({"m": m, "q": q, "theta": k, "value": value}))?,
        Format::Csv => {
            writeln!(out, "m,q,theta,value")?;
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record([m.to_string(), q.to_string(), k.to_string(), cyclo_json(&value)])?;
            w.flush()?;
        }
        Format::Human => writeln!(out, "{value}")?,
    }
    Ok(Outcome::Pass)
}

fn run(cli: Cli) -> CmdResult {
    let g = &cli.global;
    let fmt = match (g.json, g.csv) {
        (true, _) => Format::Json,
        (_, true) => Format::Csv,
        _ => Format::Human,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::VerifyTheorem { spec, mode } => cmd_verify(&mut out, fmt, g, 3, spec, mode, "verify-theorem"),
        Command::VerifyConjecture { n, spec, mode } => {
            cmd_verify(&mut out, fmt, g, *n, spec, mode, "verify-conjecture")
        }
        Command::Dim { n, spec } => cmd_dim(&mut out, fmt, g, *n, spec),
        Command::Tables { which, spec, exhaustive } => cmd_tables(&mut out, fmt, g, *which, spec, *exhaustive),
        Command::TwistedChar { n, spec, m1, m2, center } => {
            cmd_twisted_char(&mut out, fmt, g, *n, spec, m1, m2, center)
        }
        Command::CuspidalChar { m, q, theta, matrix } => cmd_cuspidal_char(&mut out, fmt, g, *m, *q, theta, matrix),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatch) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
