//! Acceptance run: one PASS/FAIL line per criterion, against the published
//! tables. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use multipoint_core::bigreal::PrecisionContext;
use multipoint_core::diagnostics::{coc_from_errors, RunClass, RunReport};
use multipoint_core::funcsuite::{builtin_suite, EvalCounter, TestFunction};
use multipoint_core::orderlab::*;
use multipoint_core::schemes::{
    builtin_method, iterate, single_step, MethodKind, RunStatus, StepFault, BUILTIN_METHODS,
};
use multipoint_core::tables::{run_table, table_spec, TableRun, DEFAULT_TNFE};
use rug::Rational;

const FUNCS: [&str; 12] = [
    "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10", "f11", "f12",
];

// Published values, transcribed cell by cell. Columns follow the table
// headings.

const T2_COLS: [&str; 7] = ["FD1-M1", "SG", "NT1", "NT2", "CH", "GR", "AL"];
const T2: [[&str; 7]; 12] = [
    [
        "2.71e-142",
        "2.82e-121",
        "1.22e-127",
        "4.25e-84",
        "5.12e-82",
        "9.23e-93",
        "6.22e-141",
    ],
    [
        "3.90e-190",
        "3.72e-153",
        "1.23e-122",
        "1.47e-95",
        "2.45e-104",
        "4.43e-141",
        "1.60e-123",
    ],
    [
        "2.31e-181",
        "3.75e-135",
        "6.27e-135",
        "2.89e-93",
        "1.07e-94",
        "6.52e-109",
        "1.80e-147",
    ],
    [
        "5.28e-218",
        "8.50e-181",
        "5.30e-143",
        "2.70e-173",
        "1.27e-174",
        "5.89e-207",
        "8.99e-191",
    ],
    [
        "1.96e-247",
        "4.05e-184",
        "2.51e-165",
        "3.77e-213",
        "7.33e-162",
        "2.97e-243",
        "2.20e-215",
    ],
    [
        "3.79e-215",
        "1.41e-181",
        "7.22e-173",
        "3.90e-123",
        "1.69e-123",
        "6.80e-154",
        "2.42e-180",
    ],
    [
        "5.26e-123",
        "2.88e-95",
        "2.10e-113",
        "3.87e-69",
        "6.28e-67",
        "1.81e-76",
        "2.55e-118",
    ],
    [
        "2.27e-181",
        "1.18e-157",
        "1.65e-97",
        "6.69e-59",
        "1.23e-103",
        "2.26e-147",
        "4.14e-60",
    ],
    [
        "2.92e-402",
        "3.13e-366",
        "4.80e-387",
        "2.35e-344",
        "6.52e-341",
        "1.89e-353",
        "2.41e-432",
    ],
    [
        "2.33e-56", "2.22e-53", "3.42e-64", "3.58e-31", "10.1", "5.45e-56", "8.42e-58",
    ],
    [
        "8.99e-115",
        "1.30e-97",
        "1.54e-91",
        "1.31e-53",
        "3.86e-45",
        "4.77e-89",
        "1.72e-92",
    ],
    [
        "3.53e-173",
        "1.80e-132",
        "3.42e-138",
        "1.84e-117",
        "2.78e-115",
        "3.52e-126",
        "8.05e-162",
    ],
];

const T3: [[f64; 7]; 12] = [
    [5.9999, 5.9994, 6.0003, 5.9989, 5.9987, 5.9995, 5.9965],
    [6.0000, 6.0000, 5.9999, 5.9997, 5.9998, 6.0000, 5.9933],
    [6.0000, 6.0000, 5.9999, 5.9995, 5.9996, 5.9999, 6.0012],
    [6.0000, 6.0000, 6.0000, 6.0000, 6.0000, 6.0000, 5.9998],
    [6.0000, 6.0000, 5.9999, 6.0000, 5.9999, 6.0000, 5.9999],
    [6.0000, 6.0000, 5.9999, 5.9999, 5.9999, 6.0000, 5.9998],
    [5.9999, 5.9992, 6.0001, 5.9974, 5.9972, 5.9991, 5.9860],
    [6.0000, 6.0000, 6.0001, 5.9985, 5.9999, 6.0000, 6.0971],
    [6.0000, 6.0000, 6.0000, 6.0000, 6.0000, 6.0000, 6.0000],
    [5.9806, 6.0038, 6.0098, 5.8343, 3.4125, 5.9880, 6.1207],
    [5.9999, 5.9981, 6.0001, 5.9909, 5.9856, 6.0000, 6.0120],
    [6.0000, 6.0000, 6.0000, 6.0002, 6.0002, 6.0001, 5.9981],
];

const T4_COLS: [&str; 3] = ["FD1-M2", "FD2-M1", "AL1"];
const T4: [[&str; 3]; 12] = [
    ["3.60e-182", "8.55e-177", "6.80e-167"],
    ["2.99e-263", "6.71e-172", "1.63e-145"],
    ["8.60e-223", "3.95e-177", "3.11e-178"],
    ["2.78e-297", "4.95e-247", "1.45e-233"],
    ["1.31e-307", "1.45e-306", "2.81e-273"],
    ["5.02e-304", "2.70e-246", "1.27e-222"],
    ["1.51e-156", "1.83e-145", "3.98e-136"],
    ["4.95e-240", "3.58e-102", "2.35e-67"],
    ["5.10e-662", "3.74e-567", "1.07e-561"],
    ["1.08e-77", "1.33e-82", "1.73e-64"],
    ["8.67e-162", "4.51e-141", "1.31e-103"],
    ["1.30e-242", "4.29e-196", "9.45e-193"],
];

const T5_COLS: [&str; 3] = ["FD4", "FD5", "FD6"];
const T5: [[&str; 3]; 12] = [
    ["4.e-172", "2.e-158", "8.e-172"],
    ["1.e-190", "2.e-297", "6.e-221"],
    ["2.e-107", "2.e-203", "4.e-168"],
    ["3.e-220", "2.e-198", "8.e-213"],
    ["3.e-247", "7.e-248", "6.e-215"],
    ["1.e-200", "2.e-186", "5.e-247"],
    ["3.e-140", "8.e-130", "8.e-146"],
    ["3.e-168", "1.e-90", "8.e-165"],
    ["5.e-466", "3.e-392", "1.e-404"],
    ["1.e-70", "6.e-70", "8.e-65"],
    ["7.e-118", "4.e-118", "4.e-169"],
    ["1.e-189", "3.e-149", "1.e-144"],
];

/// FD7 column: error and the COC mark in parentheses.
const T7_FD7: [(&str, f64); 12] = [
    ("2.45e-378", 10.0),
    ("1.22e-388", 7.0),
    ("3.29e-266", 7.0),
    ("8.61e-262", 7.0),
    ("1.54e-303", 7.0),
    ("5.15e-353", 7.0),
    ("3.65e-213", 7.0),
    ("1.10e-174", 7.0),
    ("9.09e-689", 7.0),
    ("3.81e-262", 7.0),
    ("7.21e-212", 7.0),
    ("3.52e-271", 7.0),
];

/// `floor(log10 v)` of a printed value such as "2.71e-142" or "4.e-172".
fn printed_exponent(s: &str) -> i64 {
    let (m, k) = s.split_once('e').unwrap_or((s, "0"));
    let m: f64 = m.parse().unwrap();
    let k: i64 = k.parse().unwrap();
    m.log10().floor() as i64 + k
}

fn within_tenth(measured: i64, printed: i64) -> bool {
    (measured - printed).abs() as f64 <= 0.1 * printed.abs() as f64
}

struct Outcome {
    failures: Vec<String>,
    checked: usize,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            failures: Vec::new(),
            checked: 0,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn report<'a>(t: &'a TableRun, f: &str, col: &str) -> &'a RunReport {
    &t.cell(f, col)
        .unwrap_or_else(|| panic!("no cell {f}/{col}"))
        .report
}

fn exponent_check(out: &mut Outcome, t: &TableRun, f: &str, col: &str, printed: &str) {
    let r = report(t, f, col);
    let want = printed_exponent(printed);
    let got = r.error_exponent.map(|e| e.value());
    out.check(
        r.status != RunStatus::Divergent && got.is_some_and(|g| within_tenth(g, want)),
        || format!("{col}/{f}: exponent {} vs printed {want}", r.error_cell()),
    );
}

fn coc_check(out: &mut Outcome, r: &RunReport, ok: impl FnOnce(f64) -> bool, label: &str) {
    let v = r.coc.clone();
    out.check(v.as_ref().is_ok_and(|&v| ok(v)), || {
        format!("{label}: COC {}", r.coc_cell())
    });
}

fn successful(r: &RunReport) -> bool {
    matches!(r.class, RunClass::Nominal | RunClass::Anomalous)
}

fn criterion1(t2: &TableRun) -> Outcome {
    let mut out = Outcome::new();
    for (i, f) in FUNCS.iter().enumerate() {
        for (j, col) in T2_COLS.iter().enumerate() {
            if *col == "CH" {
                let printed_ok = printed_exponent(T2[i][j]) < -3;
                let r = report(t2, f, col);
                out.check(successful(r) == printed_ok, || {
                    format!("CH/{f}: class {} vs printed {}", r.class, T2[i][j])
                });
            } else {
                exponent_check(&mut out, t2, f, col, T2[i][j]);
            }
        }
    }
    out
}

fn criterion2(t3: &TableRun) -> Outcome {
    let mut out = Outcome::new();
    for (i, f) in FUNCS.iter().enumerate() {
        for (j, col) in T2_COLS.iter().enumerate() {
            if (5.9..=6.1).contains(&T3[i][j]) {
                let label = format!("{col}/{f} (printed {:.4})", T3[i][j]);
                coc_check(
                    &mut out,
                    report(t3, f, col),
                    |v| (v - 6.0).abs() <= 0.05,
                    &label,
                );
            }
        }
    }
    let ch = report(t3, "f10", "CH");
    out.check(
        ch.coc_anomalous() && ch.coc.as_ref().is_ok_and(|&v| v < 5.0),
        || format!("CH/f10: COC {} not flagged anomalous", ch.coc_cell()),
    );
    out
}

fn criterion3(t4: &TableRun) -> Outcome {
    let mut out = Outcome::new();
    for (i, f) in FUNCS.iter().enumerate() {
        for (j, col) in T4_COLS.iter().enumerate() {
            exponent_check(&mut out, t4, f, col, T4[i][j]);
            let bound = |v: f64| {
                if *f == "f10" {
                    v >= 6.8
                } else {
                    (v - 7.0).abs() <= 0.05
                }
            };
            coc_check(&mut out, report(t4, f, col), bound, &format!("{col}/{f}"));
        }
    }
    out
}

fn criterion4(t5: &TableRun) -> Outcome {
    let mut out = Outcome::new();
    for (i, f) in FUNCS.iter().enumerate() {
        for (j, col) in T5_COLS.iter().enumerate() {
            exponent_check(&mut out, t5, f, col, T5[i][j]);
        }
    }
    for col in ["TS1", "TS2", "FS1"] {
        let r = report(t5, "f7", col);
        out.check(r.error_cell() == "dgt" && r.coc_cell() == "X", || {
            format!(
                "{col}/f7: {} / {} instead of dgt / X",
                r.error_cell(),
                r.coc_cell()
            )
        });
    }
    for (col, f) in [
        ("SK2M1", "f8"),
        ("SK2M1", "f10"),
        ("SK2M1", "f11"),
        ("SK2M2", "f10"),
    ] {
        let r = report(t5, f, col);
        out.check(r.class == RunClass::NonConvergent, || {
            format!("{col}/{f}: class {}", r.class)
        });
    }
    out
}

fn criterion5(t7: &TableRun) -> Outcome {
    let mut out = Outcome::new();
    for (f, (printed, mark)) in FUNCS.iter().zip(T7_FD7) {
        exponent_check(&mut out, t7, f, "FD7", printed);
        let r = report(t7, f, "FD7");
        if mark == 7.0 {
            coc_check(
                &mut out,
                r,
                |v| (v - 7.0).abs() <= 0.05,
                &format!("FD7/{f}"),
            );
        } else {
            coc_check(&mut out, r, |v| v >= 6.9, &format!("FD7/{f}"));
        }
    }
    out
}

fn criterion6() -> Outcome {
    let mut out = Outcome::new();
    let claims = [
        (Family::Fd1, ConditionSet::Base, 6, false),
        (Family::Fd1, ConditionSet::Seventh, 7, false),
        (Family::Fd2, ConditionSet::Base, 6, false),
        (Family::Fd2, ConditionSet::Seventh, 7, false),
        (Family::Fd3, ConditionSet::Base, 4, true),
        (Family::Fd4, ConditionSet::Base, 6, false),
        (Family::Fd5, ConditionSet::Base, 6, false),
        (Family::Fd5, ConditionSet::Seventh, 7, false),
        (Family::Fd6, ConditionSet::Base, 6, false),
    ];
    for (fam, set, want, exact) in claims {
        match family_scheme(fam, set).and_then(|s| verify_order(&s, DEFAULT_TRUNCATION)) {
            Ok(cert) => {
                let ok = if exact {
                    cert.order == want
                } else {
                    cert.order >= want
                };
                out.check(ok && cert.certified(), || {
                    format!("{fam}/{set}: order {}", cert.order)
                });
            }
            Err(e) => out.check(false, || format!("{fam}/{set}: {e}")),
        }
    }
    let poly = |s: &str| Poly::parse(s).unwrap();
    match family_scheme(Family::Fd2, ConditionSet::Base)
        .and_then(|s| error_series(&s, DEFAULT_TRUNCATION))
    {
        Ok(es) => out.check(
            es.coeff(6) == poly("c2^3*(-2 + M0)*(M0*c2^2 + 2*c3 - 2*c2^2)"),
            || "FD2: e^6 coefficient differs".into(),
        ),
        Err(e) => out.check(false, || format!("FD2 series: {e}")),
    }
    match family_scheme(Family::Nm, ConditionSet::Base)
        .and_then(|s| error_series(&s, DEFAULT_TRUNCATION))
    {
        Ok(es) => {
            let low = [(0, "0"), (1, "0"), (2, "c2"), (3, "2*(c3 - c2^2)")];
            out.check(low.iter().all(|&(k, src)| es.coeff(k) == poly(src)), || {
                "Newton: low coefficients differ".into()
            });
        }
        Err(e) => out.check(false, || format!("Newton series: {e}")),
    }
    out
}

fn criterion7() -> Outcome {
    let mut out = Outcome::new();
    let poly = |s: &str| Poly::parse(s).unwrap();
    let series =
        |fam, set| error_series(&family_scheme(fam, set).unwrap(), DEFAULT_TRUNCATION).unwrap();
    let y = series(Family::Nm, ConditionSet::Base).next;
    let y_printed = [
        (2, "c2"),
        (3, "2*c3 - 2*c2^2"),
        (4, "3*c4 - 7*c2*c3 + 4*c2^3"),
        (5, "4*c5 - 10*c2*c4 - 6*c3^2 + 20*c3*c2^2 - 8*c2^4"),
        (
            6,
            "-17*c3*c4 + 33*c2*c3^2 - 52*c3*c2^3 + 28*c4*c2^2 - 13*c2*c5 + 5*c6 + 16*c2^5",
        ),
    ];
    for (k, src) in y_printed {
        out.check(sigma_to_kappa(&y.coeff(k)) == poly(src), || {
            format!("y: e^{k} differs")
        });
    }
    let fy = compose_f(&y, false).unwrap();
    let fy_printed = [
        (2, "c1*c2"),
        (3, "-2*c1*(-c3 + c2^2)"),
        (4, "c1*(3*c4 - 7*c2*c3 + 5*c2^3)"),
        (5, "-2*c1*(-2*c5 + 5*c2*c4 + 3*c3^2 - 12*c3*c2^2 + 6*c2^4)"),
        (
            6,
            "c1*(37*c2*c3^2 - 73*c3*c2^3 + 28*c2^5 + 34*c4*c2^2 - 17*c3*c4 - 13*c2*c5 + 5*c6)",
        ),
    ];
    for (k, src) in fy_printed {
        out.check(sigma_to_kappa(&fy.coeff(k)) == poly(src), || {
            format!("f(y): e^{k} differs")
        });
    }
    let fd3 = series(Family::Fd3, ConditionSet::None);
    let g = Symbol::new("g0");
    for k in [2, 3] {
        let ck = fd3.coeff(k);
        let fixed = ck.substitute(g, &poly("1 - g1 - g2")).unwrap();
        // vanishing on the hyperplane g0 + g1 + g2 = 1 is divisibility by the linear factor
        out.check(!ck.is_zero() && fixed.is_zero(), || {
            format!("FD3: e^{k} lacks the weight-sum factor")
        });
    }
    let e6 = series(Family::Fd5, ConditionSet::Base).coeff(6);
    let a8 = Symbol::new("a8");
    out.check(
        e6.contains(a8) && e6.coefficient_of(a8, 0).is_zero(),
        || "FD5: e^6 coefficient not divisible by a8".into(),
    );
    out
}

fn adhoc(src: &str) -> TestFunction {
    TestFunction::from_source("adhoc", src).unwrap()
}

fn criterion8() -> Outcome {
    let mut out = Outcome::new();
    let c = PrecisionContext::new(512).unwrap();

    out.check(BUILTIN_METHODS.len() >= 27, || {
        format!("{} methods registered", BUILTIN_METHODS.len())
    });
    for name in BUILTIN_METHODS {
        let m = builtin_method(name).unwrap();
        for (src, r) in [("3*(x-2)", 2), ("(x+5)/7", -5), ("-(x)", 0)] {
            let x0 = c.rational(&Rational::from((2 * r + 3, 2)));
            let x1 = match single_step(&m, &adhoc(src), &x0, &EvalCounter::new()) {
                Ok(s) => Some(s.next),
                Err(StepFault::Root(p)) | Err(StepFault::Degenerate { latest: p }) => Some(p),
                Err(_) => None,
            };
            let ulps = x1.map(|x| x.ulps_from(&c.int(r), &x0));
            out.check(ulps.is_some_and(|u| u <= 4.0), || {
                format!("{name} on {src}: {ulps:?} ulp")
            });
        }
    }

    let suite = builtin_suite(c).unwrap();
    let f6 = &suite[5];
    let x0 = f6.default_x0().unwrap();
    for name in BUILTIN_METHODS {
        let base = builtin_method(name).unwrap();
        for (beta, q) in [
            ("10", Rational::from(10)),
            ("(1/3)", Rational::from((1, 3))),
        ] {
            let g = adhoc(&format!("{beta}*({})", f6.source()));
            let m = match base.kind {
                MethodKind::DerivativeBased => base.clone(),
                MethodKind::DerivativeFree => {
                    let key = base.offset.clone().unwrap();
                    let k = base.params[&key].clone() / &q;
                    base.clone().with_param(&key, k).unwrap()
                }
            };
            let a = single_step(&base, f6, x0, &EvalCounter::new()).map(|s| s.next);
            let b = single_step(&m, &g, x0, &EvalCounter::new()).map(|s| s.next);
            let ulps = match (a, b) {
                (Ok(a), Ok(b)) => Some(a.ulps_from(&b, &c.one())),
                _ => None,
            };
            out.check(ulps.is_some_and(|u| u <= 4.0), || {
                format!("{name} scaled by {beta}: {ulps:?} ulp")
            });
        }
    }

    for name in BUILTIN_METHODS {
        let m = builtin_method(name).unwrap();
        for f in &suite {
            let t = iterate(&m, f, f.default_x0().unwrap(), DEFAULT_TNFE);
            let per = m.evals_per_iteration as u64;
            let exact = t.tnfe_used <= DEFAULT_TNFE as u64
                && (t.status != RunStatus::BudgetExhausted
                    || (t.iterations() as u64 == DEFAULT_TNFE as u64 / per
                        && t.tnfe_used == t.iterations() as u64 * per));
            out.check(exact, || {
                format!(
                    "{name}/{}: tnfe {} over {} iterations",
                    f.id(),
                    t.tnfe_used,
                    t.iterations()
                )
            });
        }
    }

    let big = PrecisionContext::new(4096).unwrap();
    for p in [2u32, 3, 6, 7] {
        for a in ["0.5", "0.1", "0.9"] {
            let a = big.parse(a).unwrap();
            let errs: Vec<_> = (1..=3).map(|k| a.powi(p.pow(k) as i32).unwrap()).collect();
            let v = coc_from_errors(&errs);
            out.check(
                v.as_ref().is_ok_and(|v| (v - p as f64).abs() < 1e-6),
                || format!("synthetic order {p}: {v:?}"),
            );
        }
    }

    let h = c.pow10(-40);
    let two_h = &h + &h;
    for f in &suite {
        let x = f.default_x0().unwrap();
        let central = (f.value(&(x + &h)).unwrap() - f.value(&(x - &h)).unwrap())
            .checked_div(&two_h)
            .unwrap();
        let exact = f.slope(x).unwrap();
        let scale = exact.abs().max(c.one());
        out.check((central - &exact).abs() < &c.pow10(-60) * &scale, || {
            format!("{}: derivative disagrees with central difference", f.id())
        });
    }
    out
}

fn main() -> ExitCode {
    let ctx = PrecisionContext::default();
    let table = |id| run_table(&table_spec(id).unwrap(), ctx, DEFAULT_TNFE).unwrap();
    let started = Instant::now();
    let (t2, t4, t5, t7) = (table(2), table(4), table(5), table(7));
    println!(
        "tables 2-7 at {} bits: {:.1?}",
        ctx.bits(),
        started.elapsed()
    );

    let criteria: [(&str, Box<dyn Fn() -> Outcome + '_>); 8] = [
        ("table 2 error exponents", Box::new(|| criterion1(&t2))),
        ("table 3 COC", Box::new(|| criterion2(&t2))),
        ("table 4 exponents and COC", Box::new(|| criterion3(&t4))),
        (
            "tables 5/6 exponents and failure cells",
            Box::new(|| criterion4(&t5)),
        ),
        (
            "table 7 FD7 exponents and COC",
            Box::new(|| criterion5(&t7)),
        ),
        ("symbolic order certification", Box::new(criterion6)),
        ("printed series cross-checks", Box::new(criterion7)),
        ("property suite", Box::new(criterion8)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let verdict = if out.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "criterion {}: {verdict} ({name}; {} checks, {} failed, {:.1?})",
            i + 1,
            out.checked,
            out.failures.len(),
            t.elapsed()
        );
        for f in &out.failures {
            println!("    {f}");
        }
        if !out.failures.is_empty() {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
