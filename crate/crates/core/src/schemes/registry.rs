//! Declarative descriptions of every built-in method.

use std::collections::BTreeMap;
use std::fmt;

use rug::Rational;

use crate::bigreal::parse_decimal_exact;

use super::steppers::{Stepper, Weights};
use super::weights::{MultiIndex, Params, WeightFn};
use super::SchemeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    DerivativeBased,
    DerivativeFree,
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodKind::DerivativeBased => "derivative-based",
            MethodKind::DerivativeFree => "derivative-free",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodScheme {
    pub name: String,
    pub kind: MethodKind,
    pub evals_per_iteration: u32,
    pub claimed_order: u32,
    pub params: Params,
    /// Name of the parameter in `w = x - p f(x)`, for derivative-free methods.
    pub offset: Option<String>,
    pub weights: Weights,
    pub stepper: Stepper,
}

impl MethodScheme {
    fn new(name: &str, stepper: Stepper, claimed_order: u32) -> Self {
        let kind = if stepper.uses_derivative() {
            MethodKind::DerivativeBased
        } else {
            MethodKind::DerivativeFree
        };
        let evals_per_iteration = match stepper {
            Stepper::Newton | Stepper::Steffensen => 2,
            Stepper::Fd3 => 3,
            _ => 4,
        };
        let offset = (kind == MethodKind::DerivativeFree).then(|| "kappa".to_string());
        MethodScheme {
            name: name.into(),
            kind,
            evals_per_iteration,
            claimed_order,
            params: Params::new(),
            offset,
            weights: Weights::new(),
            stepper,
        }
    }

    fn param(mut self, name: &str, value: Rational) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    fn weight(mut self, w: WeightFn) -> Self {
        self.weights.insert(w.name().to_string(), w);
        self
    }

    /// Replaces a parameter value, rejecting names the method does not have.
    pub fn with_param(mut self, name: &str, value: Rational) -> Result<Self, SchemeError> {
        match self.params.get_mut(name) {
            Some(slot) => *slot = value,
            None => {
                return Err(SchemeError::UnknownParameter {
                    method: self.name.clone(),
                    param: name.into(),
                })
            }
        }
        Ok(self)
    }

    /// The offset parameter's value, if the method has one.
    pub fn offset_value(&self) -> Option<&Rational> {
        self.offset.as_ref().and_then(|k| self.params.get(k))
    }

    /// Finite-difference check of every declared weight condition.
    pub fn validate(&self) -> Result<(), SchemeError> {
        if let Some(k) = self.offset_value() {
            if *k == 0 {
                return Err(SchemeError::ZeroOffset(self.name.clone()));
            }
        }
        for w in self.weights.values() {
            w.check_conditions(&self.params)?;
        }
        Ok(())
    }

    /// `p^(1/d)`.
    pub fn efficiency_index(&self) -> f64 {
        (self.claimed_order as f64).powf(1.0 / self.evals_per_iteration as f64)
    }
}

/// Registry names in listing order.
pub const BUILTIN_METHODS: [&str; 28] = [
    "NM", "SM", "SG", "NT1", "NT2", "CH", "GR", "AL", "SK1", "SK2M1", "SK2M2", "TS1", "TS2", "FS1",
    "FS2", "FS3-1", "FS3-2", "FS4-1", "FS4-2", "FD1-M1", "FD1-M2", "FD2-M1", "AL1", "FD3", "FD4",
    "FD5", "FD6", "FD7",
];

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn e1(slot: usize) -> MultiIndex {
    let mut idx = [0; 5];
    idx[slot - 1] = 1;
    idx
}

const ZERO: MultiIndex = [0; 5];

fn expr(name: &str, src: &str) -> WeightFn {
    WeightFn::expr(name, src).unwrap_or_else(|e| panic!("built-in weight {name}: {e}"))
}

/// `w(0) = 1` plus unit slopes in the given slots.
fn normalized(name: &str, src: &str, unit_slopes: &[usize]) -> WeightFn {
    unit_slopes
        .iter()
        .fold(expr(name, src).declare(ZERO, q(1, 1)), |w, &s| {
            w.declare(e1(s), q(1, 1))
        })
}

/// FD1 member: `G(0)=1, G'(0)=2, H(0)=1, H_t1(0)=2`.
fn fd1(name: &str, g: &str, h: &str, order: u32) -> MethodScheme {
    MethodScheme::new(name, Stepper::Fd1, order)
        .weight(expr("G", g).declare(ZERO, q(1, 1)).declare(e1(1), q(2, 1)))
        .weight(expr("H", h).declare(ZERO, q(1, 1)).declare(e1(1), q(2, 1)))
}

fn fd2(name: &str, a: &str, order: u32) -> MethodScheme {
    let mut w = expr("A", a).declare(ZERO, q(1, 1));
    if order >= 7 {
        w = w.declare(e1(1), q(2, 1));
    }
    MethodScheme::new(name, Stepper::Fd2, order).weight(w)
}

fn kappa(m: MethodScheme, value: Rational) -> MethodScheme {
    m.param("kappa", value)
}

/// Parses `NAME` or `NAME(p=v, ...)` with rational or decimal values.
pub fn parse_method_spec(spec: &str) -> Result<(String, BTreeMap<String, Rational>), SchemeError> {
    let bad = |why: &str| SchemeError::MethodSyntax {
        spec: spec.into(),
        message: why.into(),
    };
    let spec_trim = spec.trim();
    let Some(open) = spec_trim.find('(') else {
        return Ok((spec_trim.to_string(), BTreeMap::new()));
    };
    let inner = spec_trim[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| bad("missing ')'"))?;
    let mut overrides = BTreeMap::new();
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad("expected name=value"))?;
        overrides.insert(
            k.trim().to_string(),
            parse_rational(v.trim()).ok_or_else(|| bad("bad value"))?,
        );
    }
    Ok((spec_trim[..open].trim().to_string(), overrides))
}

/// Accepts `p/q`, integers and decimal literals.
pub fn parse_rational(text: &str) -> Option<Rational> {
    if let Some((n, d)) = text.split_once('/') {
        let n: Rational = parse_rational(n.trim())?;
        let d: Rational = parse_rational(d.trim())?;
        return (d != 0).then(|| n / d);
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let v = parse_decimal_exact(body).ok()?;
    Some(if neg { -v } else { v })
}

/// Looks up a registry entry; `NAME(p=v, ...)` overrides parameter defaults.
pub fn builtin_method(spec: &str) -> Result<MethodScheme, SchemeError> {
    let (name, overrides) = parse_method_spec(spec)?;
    let one_percent = q(1, 100);
    let m = match name.as_str() {
        "NM" => MethodScheme::new("NM", Stepper::Newton, 2),
        "SM" => kappa(MethodScheme::new("SM", Stepper::Steffensen, 2), one_percent),
        "SG" => fd1("SG", "1/(1-2*t1)", "(1+a*t1)/(1+(a-2)*t1)", 6).param("a", q(-1, 1)),
        "NT1" => fd1("NT1", "(1+a*t1)/(1+(a-2)*t1)", "(1-t1)/(1-3*t1)", 6).param("a", q(-1, 1)),
        "NT2" => fd1("NT2", "1/(1-t1)^2", "1/(1-t1-t2)^2", 6),
        "CH" => fd1("CH", "1/(1-2*t1)", "1+2*t1", 6),
        "GR" => fd1("GR", "1/(1-2*t1)", "1/(1-2*t1)", 6),
        "AL" => fd2("AL", "(1-theta*t1)/(1-t1)", 6).param("theta", q(-101, 100)),
        "SK1" => sk1(&overrides)?,
        "FD1-M1" => fd1(
            "FD1-M1",
            "1/(1-2*t1)",
            "1/(1-2*t1-t1^2)*(1+2*t2)/(1-1.1*t3)",
            6,
        ),
        "FD1-M2" => {
            let m = fd1(
                "FD1-M2",
                "1/(1-2*t1)",
                "1/(1-2*t1-t1^2)*(1+2.1*t2)/(1-t3)",
                7,
            );
            let mut m = m;
            let g = m
                .weights
                .remove("G")
                .unwrap()
                .declare([2, 0, 0, 0, 0], q(8, 1));
            let h = m
                .weights
                .remove("H")
                .unwrap()
                .declare([2, 0, 0, 0, 0], q(10, 1))
                .declare(e1(3), q(1, 1));
            m.weight(g).weight(h)
        }
        "FD2-M1" => fd2("FD2-M1", "1/(1-t1)^2", 7),
        "AL1" => fd2("AL1", "(1+t1)/(1-t1)", 7),
        "SK2M1" | "SK2M2" => {
            let (ab, eta) = if name == "SK2M1" {
                (q(5, 2), q(1, 1))
            } else {
                (q(1, 1), q(1, 1))
            };
            kappa(MethodScheme::new(&name, Stepper::Sk2, 6), one_percent)
                .param("alpha", ab.clone())
                .param("beta", ab)
                .param("eta", eta)
        }
        "TS1" | "TS2" => {
            let stepper = if name == "TS1" {
                Stepper::Ts1
            } else {
                Stepper::Ts2
            };
            kappa(MethodScheme::new(&name, stepper, 6), q(-1, 1))
                .param("lambda", q(1, 1))
                .weight(normalized("G", "(1-t2/lambda)^(-lambda)", &[2]))
        }
        "FS1" => kappa(MethodScheme::new("FS1", Stepper::Fs1, 6), q(-1, 1)),
        "FS2" => {
            let mut m = MethodScheme::new("FS2", Stepper::Fs2, 6).param("beta", one_percent);
            m.offset = Some("beta".into());
            m
        }
        "FS3-1" | "FS3-2" => {
            let (a, b, k) = if name == "FS3-1" {
                ("gamma", "delta", -1)
            } else {
                ("rho", "tau", 1)
            };
            let stepper = Stepper::Fs3 {
                t3_param: a.into(),
                t4_param: b.into(),
            };
            kappa(MethodScheme::new(&name, stepper, 7), q(k, 1))
                .param(a, q(0, 1))
                .param(b, q(0, 1))
        }
        "FS4-1" => {
            let stepper = Stepper::Fs4 {
                t3_param: Some("omega".into()),
                t4_param: Some("phi".into()),
            };
            kappa(MethodScheme::new("FS4-1", stepper, 7), q(-1, 1))
                .param("omega", q(0, 1))
                .param("phi", q(0, 1))
        }
        "FS4-2" => {
            let stepper = Stepper::Fs4 {
                t3_param: None,
                t4_param: None,
            };
            kappa(MethodScheme::new("FS4-2", stepper, 7), q(1, 1))
        }
        "FD3" => kappa(MethodScheme::new("FD3", Stepper::Fd3, 4), one_percent)
            .param("g0", q(1, 3))
            .param("g1", q(1, 3))
            .param("g2", q(1, 3))
            .weight(normalized("G0", "1+t1", &[1]))
            .weight(normalized("G1", "1+t2", &[2]))
            .weight(normalized("G2", "1+t1+t2", &[1, 2])),
        "FD4" => {
            let mut m = kappa(MethodScheme::new("FD4", Stepper::Fd4, 6), one_percent)
                .param("g1", q(0, 1))
                .param("g2", q(1, 1));
            for (i, h) in [0, 1, 0, 0, 0].iter().enumerate() {
                m = m.param(&format!("h{}", i + 1), q(*h, 2));
            }
            m.weight(normalized("G2", "(1+t1-t2)/(1-2*t2)", &[1, 2]))
                .weight(normalized("S0", "1/(1-t5-2*t3-2*t4)", &[]))
                .weight(normalized("S2", "(1-2*t2)/(1-3*t2)", &[2]))
        }
        "FD5" => kappa(MethodScheme::new("FD5", Stepper::Fd5, 6), one_percent)
            .param("g1", q(1, 1))
            .param("g2", q(0, 1))
            .param("h", q(0, 1))
            .weight(normalized("G1", "1/(1-t2)", &[2]))
            .weight(normalized("H", "(1-t5/10)^(-1)", &[])),
        "FD6" => kappa(MethodScheme::new("FD6", Stepper::Fd6, 6), one_percent)
            .param("g1", q(0, 1))
            .param("g2", q(1, 1))
            .weight(normalized("G2", "(1-t1+t2)/(1-2*t1)", &[1, 2]))
            .weight(normalized("H", "(1-t5/10)^(-1)", &[])),
        "FD7" => kappa(MethodScheme::new("FD7", Stepper::Fd5, 7), one_percent)
            .param("g1", q(0, 1))
            .param("g2", q(0, 1))
            .param("h", q(1, 1))
            .weight(normalized("G0", "(1-2*t1)/(1-3*t1)", &[1]))
            .weight(
                expr("H", "1/(1-t3)")
                    .declare(ZERO, q(1, 1))
                    .declare(e1(5), q(0, 1)),
            ),
        _ => return Err(SchemeError::UnknownMethod(spec.into())),
    };
    let mut m = m;
    if name != "SK1" {
        for (k, v) in overrides {
            m = m.with_param(&k, v)?;
        }
    }
    m.validate()?;
    Ok(m)
}

/// SK1 with `m` terms in the second step and `l` in the third.
fn sk1(overrides: &BTreeMap<String, Rational>) -> Result<MethodScheme, SchemeError> {
    let count = |key: &str| -> Result<u32, SchemeError> {
        match overrides.get(key) {
            None => Ok(1),
            Some(v) => v
                .is_integer()
                .then(|| v.numer().to_u32())
                .flatten()
                .filter(|n| (1..=8).contains(n))
                .ok_or_else(|| SchemeError::MethodSyntax {
                    spec: format!("SK1({key}={v})"),
                    message: "expected an integer between 1 and 8".into(),
                }),
        }
    };
    let (m, l) = (count("m")?, count("l")?);
    let mu1 = overrides.get("mu1").cloned().unwrap_or_else(|| q(1, 1));
    if mu1 == 0 {
        return Err(SchemeError::MethodSyntax {
            spec: "SK1(mu1=0)".into(),
            message: "mu1 must be nonzero".into(),
        });
    }
    let mut scheme = MethodScheme::new("SK1", Stepper::Fd1, 6)
        .param("m", Rational::from(m))
        .param("l", Rational::from(l))
        .param("mu1", mu1.clone())
        .param("mu2", q(0, 1));
    let mut g = String::from("1");
    for j in 1..=m {
        let default = if j == 1 { q(2, 1) } else { q(0, 1) };
        scheme = scheme.param(&format!("a{j}"), default);
        g.push_str(&format!("+a{j}*t1^{j}"));
    }
    let mut h = String::from("1");
    for k in 1..=l {
        let default = if k == 1 {
            Rational::from(2) / &mu1
        } else {
            q(0, 1)
        };
        scheme = scheme.param(&format!("b{k}"), default);
        h.push_str(&format!("+b{k}*(mu1*t1+mu2*t2)^{k}"));
    }
    scheme = scheme
        .weight(expr("G", &g).declare(ZERO, q(1, 1)).declare(e1(1), q(2, 1)))
        .weight(expr("H", &h).declare(ZERO, q(1, 1)).declare(e1(1), q(2, 1)));
    for (k, v) in overrides {
        if k != "m" && k != "l" {
            scheme = scheme.with_param(k, v.clone())?;
        }
    }
    Ok(scheme)
}
