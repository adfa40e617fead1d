//! Special parameter choices of the FD4 and FD5 families that collapse
//! them onto published derivative-free methods.

use rug::Rational;

use crate::schemes::{builtin_method, Stepper, WeightFn, Weights};

use super::families::{method_scheme, SymbolicScheme};
use super::poly::Poly;
use super::verify::error_series;
use super::OrderError;

#[derive(Debug, Clone)]
pub struct Reduction {
    pub name: String,
    pub family: String,
    pub target: String,
    /// First index where the two error series differ, if any.
    pub mismatch: Option<usize>,
}

impl Reduction {
    pub fn holds(&self) -> bool {
        self.mismatch.is_none()
    }
}

fn weights(list: &[(&str, &str)]) -> Weights {
    list.iter()
        .map(|(n, src)| {
            (
                n.to_string(),
                WeightFn::expr(n, src).expect("reduction weights parse"),
            )
        })
        .collect()
}

fn scheme(label: &str, stepper: Stepper, ws: Weights, params: &[(&str, Poly)]) -> SymbolicScheme {
    SymbolicScheme {
        label: label.into(),
        stepper,
        weights: ws,
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect(),
        claimed_order: 6,
        constraints: Vec::new(),
        specialization: None,
    }
}

fn int(n: i64) -> Poly {
    Poly::int(n)
}

/// Registered method with some parameters made symbolic.
fn registered(spec: &str, symbolic: &[&str]) -> Result<SymbolicScheme, OrderError> {
    let mut s = method_scheme(&builtin_method(spec)?);
    for name in symbolic {
        s.params.insert(name.to_string(), Poly::symbol(name));
    }
    Ok(s)
}

fn compare(
    name: &str,
    family: &SymbolicScheme,
    target: &SymbolicScheme,
    truncation: u32,
) -> Result<Reduction, OrderError> {
    let a = error_series(family, truncation)?;
    let b = error_series(target, truncation)?;
    let mismatch = (0..=truncation as usize).find(|&k| a.next.coeff(k) != b.next.coeff(k));
    Ok(Reduction {
        name: name.into(),
        family: family.label.clone(),
        target: target.label.clone(),
        mismatch,
    })
}

/// FD4 onto TS1, TS2 and SK2; FD5 onto FS2.
pub fn reduction_checks(truncation: u32) -> Result<Vec<Reduction>, OrderError> {
    let h0 = |h3: i64, h5: i64| -> Vec<(String, Poly)> {
        [0, 0, h3, 0, h5]
            .iter()
            .enumerate()
            .map(|(i, h)| (format!("h{}", i + 1), int(*h)))
            .collect()
    };
    let mut out = Vec::new();

    for lambda in [Rational::from(1), Rational::from(3), Rational::from((1, 2))] {
        let lam = Poly::constant(lambda.clone());
        let g = "(1-t2/lambda)^(-lambda)";
        for (target, h3) in [("TS1", 1), ("TS2", 0)] {
            let mut params: Vec<(String, Poly)> = h0(h3, 0);
            params.extend([
                ("g1".into(), int(1)),
                ("g2".into(), int(0)),
                ("lambda".into(), lam.clone()),
            ]);
            let ws = if h3 == 1 {
                weights(&[("G1", g), ("S3", g)])
            } else {
                weights(&[("G1", g), ("S0", "1")])
            };
            let refs: Vec<(&str, Poly)> = params
                .iter()
                .map(|(k, v)| (k.as_str(), v.clone()))
                .collect();
            let fam = scheme(&format!("FD4 (lambda = {lambda})"), Stepper::Fd4, ws, &refs);
            let tgt = registered(&format!("{target}(lambda={lambda})"), &[])?;
            out.push(compare(
                &format!("FD4 -> {target}, lambda = {lambda}"),
                &fam,
                &tgt,
                truncation,
            )?);
        }
    }

    let mut params: Vec<(String, Poly)> = h0(0, 1);
    params.extend([
        ("g1".into(), int(0)),
        ("g2".into(), int(1)),
        ("alpha".into(), Poly::symbol("alpha")),
        ("beta".into(), Poly::symbol("beta")),
        ("eta".into(), Poly::symbol("eta")),
    ]);
    let refs: Vec<(&str, Poly)> = params
        .iter()
        .map(|(k, v)| (k.as_str(), v.clone()))
        .collect();
    let fam = scheme(
        "FD4 (SK2 choice)",
        Stepper::Fd4,
        weights(&[
            ("G2", "1+t1+t2+alpha*t1^2+beta*t2^2"),
            ("S5", "1+t1+t2+alpha*t1^2+beta*t2^2+eta*t5"),
        ]),
        &refs,
    );
    let tgt = registered("SK2M1", &["alpha", "beta", "eta"])?;
    out.push(compare("FD4 -> SK2", &fam, &tgt, truncation)?);

    let fam = scheme(
        "FD5 (FS2 choice)",
        Stepper::Fd5,
        weights(&[("G0", "1"), ("H", "1")]),
        &[("g1", int(0)), ("g2", int(0)), ("h", int(0))],
    );
    let tgt = registered("FS2", &[])?;
    out.push(compare("FD5 -> FS2", &fam, &tgt, truncation)?);
    Ok(out)
}
