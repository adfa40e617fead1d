use multipoint_core::bigreal::{Elementary, PrecisionContext};
use multipoint_core::funcsuite::{builtin_suite, parse_expression, Expr, Literal};
use proptest::prelude::*;

const ROOT_PREFIXES: [(&str, &str); 12] = [
    ("f1", "0"),
    ("f2", "1.148538"),
    ("f3", "2"),
    ("f4", "-1"),
    ("f5", "0"),
    ("f6", "1.40449165"),
    ("f7", "1.517427"),
    ("f8", "1.414214"),
    ("f9", "4.15259074"),
    ("f10", "1.08598268"),
    ("f11", "0.591448093"),
    ("f12", "2.63066415"),
];

#[test]
fn suite_roots_match_prefixes_at_full_precision() {
    let ctx = PrecisionContext::default();
    let suite = builtin_suite(ctx).unwrap();
    assert_eq!(suite.len(), 12);
    for (f, (id, prefix)) in suite.iter().zip(ROOT_PREFIXES) {
        assert_eq!(f.id(), id);
        let root = f.reference_root().unwrap();
        let decimals = prefix.split('.').nth(1).map_or(0, str::len) as i64;
        let gap = (root - &ctx.parse(prefix).unwrap()).abs();
        assert!(gap < ctx.pow10(-decimals), "{id}: root {root} vs {prefix}");
        let residual = f.value(root).unwrap().abs();
        assert!(
            residual < ctx.pow10(10 - ctx.decimal_digits() as i64),
            "{id}"
        );
    }
}

#[test]
fn derivatives_agree_with_central_differences() {
    let ctx = PrecisionContext::new(512).unwrap();
    let suite = builtin_suite(ctx).unwrap();
    let h = ctx.pow10(-40);
    let two_h = &h + &h;
    for f in &suite {
        let x = f.default_x0().unwrap();
        let fd = (f.value(&(x + &h)).unwrap() - f.value(&(x - &h)).unwrap())
            .checked_div(&two_h)
            .unwrap();
        let exact = f.slope(x).unwrap();
        let scale = exact.abs().max(ctx.one());
        assert!(
            (fd - &exact).abs() < &ctx.pow10(-60) * &scale,
            "{}: derivative mismatch",
            f.id()
        );
    }
}

#[test]
fn suite_sources_round_trip() {
    let suite = builtin_suite(PrecisionContext::new(256).unwrap()).unwrap();
    for f in &suite {
        let printed = f.body().to_string();
        assert_eq!(parse_expression(&printed).unwrap(), *f.body(), "{}", f.id());
    }
}

fn literal() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0i64..50).prop_map(Expr::int),
        (1u32..999, 1u32..99)
            .prop_map(|(a, b)| { Expr::Num(Literal::parse(&format!("{a}.{b}")).unwrap()) }),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![Just(Expr::X), literal()];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            inner.clone().prop_map(move |e| Expr::Neg(b(e))),
            (inner.clone(), 0usize..4).prop_map(|(e, k)| {
                let func = [
                    Elementary::Exp,
                    Elementary::Sin,
                    Elementary::Cos,
                    Elementary::Ln,
                ][k];
                Expr::call(func, e)
            }),
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Expr::Add(Box::new(a), Box::new(c))),
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Expr::Sub(Box::new(a), Box::new(c))),
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Expr::Mul(Box::new(a), Box::new(c))),
            (inner.clone(), inner.clone()).prop_map(|(a, c)| Expr::Div(Box::new(a), Box::new(c))),
            (inner, -3i32..6).prop_map(|(a, n)| Expr::powi(a, n)),
        ]
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(e in tree()) {
        let printed = e.to_string();
        let reparsed = parse_expression(&printed).unwrap();
        prop_assert_eq!(reparsed, e);
    }
}
