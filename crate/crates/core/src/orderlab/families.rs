//! Symbolic instances of the families with their theorem conditions.

use std::fmt;
use std::str::FromStr;

use rug::Rational;

use crate::schemes::{GenericCoef, MethodScheme, MultiIndex, Stepper, WeightFn, Weights};

use super::oracle::{Specialization, SymParams};
use super::poly::Poly;
use super::OrderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Nm,
    Fd1,
    Fd2,
    Fd3,
    Fd4,
    Fd5,
    Fd6,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Nm,
        Family::Fd1,
        Family::Fd2,
        Family::Fd3,
        Family::Fd4,
        Family::Fd5,
        Family::Fd6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Nm => "NM",
            Family::Fd1 => "FD1",
            Family::Fd2 => "FD2",
            Family::Fd3 => "FD3",
            Family::Fd4 => "FD4",
            Family::Fd5 => "FD5",
            Family::Fd6 => "FD6",
        }
    }

    /// Condition sets that make sense for the family.
    pub fn condition_sets(self) -> &'static [ConditionSet] {
        use ConditionSet::*;
        match self {
            Family::Nm => &[Base],
            Family::Fd1 | Family::Fd2 | Family::Fd5 => &[Base, Seventh, None],
            Family::Fd3 | Family::Fd4 | Family::Fd6 => &[Base, None],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| OrderError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionSet {
    /// The conditions for the family's base order.
    Base,
    /// Base plus the extra conditions that raise the order by one.
    Seventh,
    /// A base condition dropped; certification is expected to fail.
    None,
}

impl ConditionSet {
    pub fn name(self) -> &'static str {
        match self {
            ConditionSet::Base => "base",
            ConditionSet::Seventh => "seventh",
            ConditionSet::None => "none",
        }
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConditionSet {
    type Err = OrderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "base" => Ok(ConditionSet::Base),
            "seventh" => Ok(ConditionSet::Seventh),
            "none" => Ok(ConditionSet::None),
            other => Err(OrderError::UnknownConditionSet(other.to_string())),
        }
    }
}

/// A stepper with weights and parameters in the coefficient ring.
#[derive(Debug, Clone)]
pub struct SymbolicScheme {
    pub label: String,
    pub stepper: Stepper,
    pub weights: Weights,
    pub params: SymParams,
    pub claimed_order: u32,
    /// Human-readable constraints that were imposed.
    pub constraints: Vec<String>,
    pub specialization: Option<Specialization>,
}

impl SymbolicScheme {
    /// Fixes `c1` and the offset parameter to rationals.
    pub fn specialize(mut self, c1: Rational, kappa: Rational) -> Self {
        self.constraints
            .push(format!("c1 = {c1}, offset = {kappa}"));
        self.label = format!("{} [c1 = {c1}, offset = {kappa}]", self.label);
        self.specialization = Some(Specialization { c1, kappa });
        self
    }
}

/// Multi-index from `(slot, exponent)` pairs, slots numbered from 1.
fn ix(parts: &[(usize, u8)]) -> MultiIndex {
    let mut m = [0u8; 5];
    for &(slot, e) in parts {
        m[slot - 1] = e;
    }
    m
}

fn val(n: i64) -> GenericCoef {
    GenericCoef::Value(Rational::from(n))
}

fn sym(name: &str) -> GenericCoef {
    GenericCoef::Symbol(name.into())
}

struct Builder {
    weights: Weights,
    params: SymParams,
    constraints: Vec<String>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            weights: Weights::new(),
            params: SymParams::new(),
            constraints: Vec::new(),
        }
    }

    fn weight(&mut self, name: &str, slots: &[u8], fixed: Vec<(MultiIndex, GenericCoef)>) {
        for (m, c) in &fixed {
            let rhs = match c {
                GenericCoef::Value(q) => q.to_string(),
                GenericCoef::Symbol(s) => s.clone(),
                GenericCoef::Poly(p) => p.clone(),
            };
            self.constraints.push(format!(
                "{name}[{}] = {rhs}",
                crate::schemes::multi_index_label(m)
            ));
        }
        self.weights
            .insert(name.to_string(), WeightFn::generic(name, slots, fixed));
    }

    fn symbols(&mut self, names: &[&str]) {
        for n in names {
            self.params.insert(n.to_string(), Poly::symbol(n));
        }
    }

    fn set(&mut self, name: &str, value: Poly) {
        self.constraints.push(format!("{name} = {value}"));
        self.params.insert(name.to_string(), value);
    }

    fn finish(self, label: String, stepper: Stepper, claimed_order: u32) -> SymbolicScheme {
        SymbolicScheme {
            label,
            stepper,
            weights: self.weights,
            params: self.params,
            claimed_order,
            constraints: self.constraints,
            specialization: None,
        }
    }
}

/// First-step weights `G0(t1), G1(t2), G2(t1, t2)` of the derivative-free
/// families, named as in the respective error equations.
fn first_step_weights(b: &mut Builder, names: [&str; 4], with_slopes: bool, cross: Option<&str>) {
    let slope = |m: MultiIndex| -> Vec<(MultiIndex, GenericCoef)> {
        if with_slopes {
            vec![(m, val(1))]
        } else {
            Vec::new()
        }
    };
    let mut g0 = vec![(ix(&[]), val(1)), (ix(&[(1, 2)]), sym(names[0]))];
    g0.extend(slope(ix(&[(1, 1)])));
    let mut g1 = vec![(ix(&[]), val(1)), (ix(&[(2, 2)]), sym(names[1]))];
    g1.extend(slope(ix(&[(2, 1)])));
    let mut g2 = vec![
        (ix(&[]), val(1)),
        (ix(&[(1, 2)]), sym(names[2])),
        (ix(&[(2, 2)]), sym(names[3])),
    ];
    g2.extend(slope(ix(&[(1, 1)])));
    g2.extend(slope(ix(&[(2, 1)])));
    if let Some(c) = cross {
        g2.push((ix(&[(1, 1), (2, 1)]), sym(c)));
    }
    b.weight("G0", &[1], g0);
    b.weight("G1", &[2], g1);
    b.weight("G2", &[1, 2], g2);
}

pub fn family_scheme(family: Family, set: ConditionSet) -> Result<SymbolicScheme, OrderError> {
    if !family.condition_sets().contains(&set) {
        return Err(OrderError::UnknownConditions {
            family: family.name().into(),
            set: set.name().into(),
        });
    }
    let label = format!("{family}/{set}");
    let mut b = Builder::new();
    let seventh = set == ConditionSet::Seventh;
    let free = set == ConditionSet::None;
    let scheme = match family {
        Family::Nm => b.finish(label, Stepper::Newton, 2),
        Family::Fd1 => {
            let mut g = vec![
                (ix(&[]), val(1)),
                (ix(&[(1, 2)]), sym("M0")),
                (ix(&[(1, 3)]), sym("M1")),
                (ix(&[(1, 4)]), sym("M2")),
            ];
            if !free {
                g.insert(1, (ix(&[(1, 1)]), val(2)));
            }
            b.weight("G", &[1], g);
            let (r1, r2) = if seventh {
                (val(1), GenericCoef::Poly("M0 + 1".into()))
            } else {
                (sym("R1"), sym("R2"))
            };
            b.weight(
                "H",
                &[1, 2, 3],
                vec![
                    (ix(&[]), val(1)),
                    (ix(&[(1, 1)]), val(2)),
                    (ix(&[(2, 1)]), sym("R0")),
                    (ix(&[(3, 1)]), r1),
                    (ix(&[(1, 2)]), r2),
                    (ix(&[(2, 2)]), sym("R3")),
                    (ix(&[(3, 2)]), sym("R4")),
                ],
            );
            b.finish(label, Stepper::Fd1, if seventh { 7 } else { 6 })
        }
        Family::Fd2 => {
            let a0 = if free { sym("A0") } else { val(1) };
            let m0 = if seventh { val(2) } else { sym("M0") };
            b.weight(
                "A",
                &[1],
                vec![
                    (ix(&[]), a0),
                    (ix(&[(1, 1)]), m0),
                    (ix(&[(1, 2)]), sym("M1")),
                    (ix(&[(1, 3)]), sym("M2")),
                ],
            );
            b.finish(label, Stepper::Fd2, if seventh { 7 } else { 6 })
        }
        Family::Fd3 => {
            first_step_weights(&mut b, ["L1", "M1", "N1", "N2"], true, None);
            b.symbols(&["g1", "g2"]);
            if free {
                b.symbols(&["g0"]);
            } else {
                b.set("g0", Poly::parse("1 - g1 - g2").expect("literal"));
            }
            b.finish(label, Stepper::Fd3, 4)
        }
        Family::Fd4 => {
            first_step_weights(&mut b, ["L1", "M1", "N1", "N2"], !free, None);
            b.symbols(&["g1", "g2", "h1", "h2", "h3", "h4", "h5"]);
            let one = || (ix(&[]), val(1));
            b.weight(
                "S0",
                &[3, 4, 5],
                vec![
                    one(),
                    (ix(&[(3, 1)]), sym("a1")),
                    (ix(&[(4, 1)]), sym("a2")),
                    (ix(&[(5, 1)]), sym("a3")),
                ],
            );
            // (weight, leading slot, first b index)
            for (name, lead, first) in [
                ("S1", 1usize, 1usize),
                ("S2", 2, 5),
                ("S3", 2, 9),
                ("S4", 1, 13),
            ] {
                let slots: Vec<u8> = vec![lead as u8, 3, 4, 5];
                let b_ = |k: usize| sym(&format!("b{}", first + k));
                b.weight(
                    name,
                    &slots,
                    vec![
                        one(),
                        (ix(&[(lead, 1)]), val(1)),
                        (ix(&[(lead, 2)]), b_(0)),
                        (ix(&[(3, 1)]), b_(1)),
                        (ix(&[(4, 1)]), b_(2)),
                        (ix(&[(5, 1)]), b_(3)),
                    ],
                );
            }
            b.weight(
                "S5",
                &[1, 2, 3, 4, 5],
                vec![
                    one(),
                    (ix(&[(1, 1)]), val(1)),
                    (ix(&[(2, 1)]), val(1)),
                    (ix(&[(1, 2)]), sym("b17")),
                    (ix(&[(2, 2)]), sym("b18")),
                    (ix(&[(3, 1)]), sym("b19")),
                    (ix(&[(4, 1)]), sym("b20")),
                    (ix(&[(5, 1)]), sym("b21")),
                ],
            );
            b.finish(label, Stepper::Fd4, 6)
        }
        Family::Fd5 | Family::Fd6 => {
            first_step_weights(&mut b, ["a1", "a2", "a3", "a4"], !free, Some("a5"));
            b.symbols(&["g1", "g2"]);
            let a8 = if seventh { val(0) } else { sym("a8") };
            b.weight(
                "H",
                &[3, 4, 5],
                vec![
                    (ix(&[]), val(1)),
                    (ix(&[(3, 1)]), sym("a6")),
                    (ix(&[(4, 1)]), sym("a7")),
                    (ix(&[(5, 1)]), a8),
                ],
            );
            if family == Family::Fd5 {
                b.symbols(&["h"]);
                b.finish(label, Stepper::Fd5, if seventh { 7 } else { 6 })
            } else {
                b.finish(label, Stepper::Fd6, 6)
            }
        }
    };
    Ok(scheme)
}

/// A registered method with its exact parameters; the offset stays
/// symbolic.
pub fn method_scheme(m: &MethodScheme) -> SymbolicScheme {
    let params = m
        .params
        .iter()
        .map(|(k, v)| (k.clone(), Poly::constant(v.clone())))
        .collect();
    SymbolicScheme {
        label: m.name.clone(),
        stepper: m.stepper.clone(),
        weights: m.weights.clone(),
        params,
        claimed_order: m.claimed_order,
        constraints: m
            .weights
            .values()
            .filter(|w| !w.is_unit())
            .map(|w| w.to_string())
            .collect(),
        specialization: None,
    }
}
