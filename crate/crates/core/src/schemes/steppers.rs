//! One iteration of every scheme, written once over [`Arith`].

use std::collections::BTreeMap;

use rug::Rational;

use super::arith::{Arith, Node, Oracle, Slots, StepFault, StepResult};
use super::weights::WeightFn;

/// The per-iteration transition of a scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stepper {
    Newton,
    Steffensen,
    /// `y = x - f/f'`, `z = y - G(t1) f(y)/f'`, `x1 = z - H(t1,t2,t3) f(z)/f'`.
    Fd1,
    /// `z = y - A(t1) f(y)/f'`, `x1 = z - f(z)/(f[z,y] + f[z,x,x](z-y))`.
    Fd2,
    Fd3,
    Fd4,
    Fd5,
    Fd6,
    Sk2,
    Ts1,
    Ts2,
    Fs1,
    Fs2,
    /// Parameter names multiplying `t3` and `t4` in the bracket.
    Fs3 {
        t3_param: String,
        t4_param: String,
    },
    Fs4 {
        t3_param: Option<String>,
        t4_param: Option<String>,
    },
}

impl Stepper {
    pub fn uses_derivative(&self) -> bool {
        matches!(self, Stepper::Newton | Stepper::Fd1 | Stepper::Fd2)
    }
}

pub type Weights = BTreeMap<String, WeightFn>;

/// Result of one iteration: the next iterate and the intermediate points.
#[derive(Debug, Clone)]
pub struct Step<S> {
    pub next: S,
    pub stages: Vec<(Node, S)>,
}

impl<S: Clone> Step<S> {
    pub fn stage(&self, node: Node) -> Option<&S> {
        self.stages.iter().find(|(n, _)| *n == node).map(|(_, s)| s)
    }
}

fn weight<'a, S>(ws: &'a Weights, name: &str) -> StepResult<S, &'a WeightFn> {
    ws.get(name)
        .ok_or_else(|| StepFault::Algebra(format!("weight {name} is not defined")))
}

fn int<S: Arith, O: Oracle<S>>(o: &O, n: i64) -> S {
    o.constant(&Rational::from(n))
}

/// `w(slots) * mult`, skipping the call for the constant weight 1.
fn apply<S: Arith, O: Oracle<S>>(
    o: &mut O,
    w: &WeightFn,
    slots: &Slots<S>,
    mult: &S,
) -> StepResult<S> {
    if w.is_unit() {
        return Ok(mult.clone());
    }
    o.weighted(w, slots, mult)
}

pub fn step<S: Arith, O: Oracle<S>>(
    stepper: &Stepper,
    ws: &Weights,
    x: &S,
    o: &mut O,
) -> StepResult<S, Step<S>> {
    match stepper {
        Stepper::Newton => {
            let fx = o.f(Node::X, x)?;
            let d = o.df(x)?;
            Ok(Step {
                next: x.sub(&fx.div(&d)?),
                stages: Vec::new(),
            })
        }
        Stepper::Steffensen => {
            let fx = o.f(Node::X, x)?;
            let w = x.sub(&o.offset()?.mul(&fx));
            o.f(Node::W, &w)?;
            let dxw = o.dd((Node::X, x), (Node::W, &w))?;
            Ok(Step {
                next: x.sub(&fx.div(&dxw)?),
                stages: vec![(Node::W, w)],
            })
        }
        Stepper::Fd1 | Stepper::Fd2 => derivative_based(stepper, ws, x, o),
        _ => derivative_free(stepper, ws, x, o),
    }
}

fn derivative_based<S: Arith, O: Oracle<S>>(
    stepper: &Stepper,
    ws: &Weights,
    x: &S,
    o: &mut O,
) -> StepResult<S, Step<S>> {
    let fx = o.f(Node::X, x)?;
    let d = o.df(x)?;
    let y = x.sub(&fx.div(&d)?);
    let fy = o.f(Node::Y, &y)?;
    let t1 = fy.div(&fx)?;
    let first = weight(ws, if *stepper == Stepper::Fd1 { "G" } else { "A" })?;
    let slots = [Some(t1.clone()), None, None, None, None];
    let z = y.sub(&apply(o, first, &slots, &fy.div(&d)?)?);
    let fz = o.f(Node::Z, &z)?;
    let next = if *stepper == Stepper::Fd1 {
        let slots = [Some(t1), Some(fz.div(&fx)?), Some(fz.div(&fy)?), None, None];
        z.sub(&apply(o, weight(ws, "H")?, &slots, &fz.div(&d)?)?)
    } else {
        let fzy = o.dd((Node::Z, &z), (Node::Y, &y))?;
        let fzxx = o.dd2(&z, x)?;
        z.sub(&fz.div(&fzy.add(&fzxx.mul(&z.sub(&y))))?)
    };
    Ok(Step {
        next,
        stages: vec![(Node::Y, y), (Node::Z, z)],
    })
}

struct Free<S> {
    x: S,
    w: S,
    y: S,
    fx: S,
    fw: S,
    fy: S,
    dxw: S,
    t1: S,
    t2: S,
}

fn free_prelude<S: Arith, O: Oracle<S>>(x: &S, o: &mut O) -> StepResult<S, Free<S>> {
    let fx = o.f(Node::X, x)?;
    let w = x.sub(&o.offset()?.mul(&fx));
    let fw = o.f(Node::W, &w)?;
    let dxw = o.dd((Node::X, x), (Node::W, &w))?;
    let y = x.sub(&fx.div(&dxw)?);
    let fy = o.f(Node::Y, &y)?;
    let t1 = fy.div(&fx)?;
    let t2 = fy.div(&fw)?;
    Ok(Free {
        x: x.clone(),
        w,
        y,
        fx,
        fw,
        fy,
        dxw,
        t1,
        t2,
    })
}

/// The weighted second step shared by the FD3..FD6 families.
fn fd_combination<S: Arith, O: Oracle<S>>(
    p: &Free<S>,
    ws: &Weights,
    g: [S; 3],
    o: &mut O,
) -> StepResult<S> {
    let slots = [Some(p.t1.clone()), Some(p.t2.clone()), None, None, None];
    let mut sum: Option<S> = None;
    for (i, gi) in g.iter().enumerate() {
        if gi.is_exact_zero() {
            continue;
        }
        let den = match i {
            0 => o.dd((Node::Y, &p.y), (Node::W, &p.w))?,
            1 => o.dd((Node::Y, &p.y), (Node::X, &p.x))?,
            _ => p.dxw.clone(),
        };
        let term = apply(o, weight(ws, &format!("G{i}"))?, &slots, &p.fy.div(&den)?)?.mul(gi);
        sum = Some(match sum {
            Some(s) => s.add(&term),
            None => term,
        });
    }
    Ok(sum.unwrap_or_else(|| int(o, 0)))
}

fn param<S: Arith, O: Oracle<S>>(o: &O, name: &str) -> StepResult<S> {
    o.param(name)
}

fn derivative_free<S: Arith, O: Oracle<S>>(
    stepper: &Stepper,
    ws: &Weights,
    x: &S,
    o: &mut O,
) -> StepResult<S, Step<S>> {
    let p = free_prelude(x, o)?;
    let one = int(o, 1);

    let z = match stepper {
        Stepper::Fd3 => {
            let g = [param(o, "g0")?, param(o, "g1")?, param(o, "g2")?];
            let next = p.y.sub(&fd_combination(&p, ws, g, o)?);
            return Ok(Step {
                next,
                stages: vec![(Node::W, p.w), (Node::Y, p.y)],
            });
        }
        Stepper::Fd4 | Stepper::Fd5 | Stepper::Fd6 => {
            let g1 = param(o, "g1")?;
            let g2 = param(o, "g2")?;
            let g0 = one.sub(&g1).sub(&g2);
            p.y.sub(&fd_combination(&p, ws, [g0, g1, g2], o)?)
        }
        Stepper::Sk2 => {
            let b = sk2_bracket(&p, o)?;
            p.y.sub(&p.fy.div(&p.dxw)?.mul(&b))
        }
        Stepper::Ts1 | Stepper::Ts2 => {
            let fxy = o.dd((Node::X, &p.x), (Node::Y, &p.y))?;
            let slots = [Some(p.t1.clone()), Some(p.t2.clone()), None, None, None];
            p.y.sub(&apply(o, weight(ws, "G")?, &slots, &p.fy.div(&fxy)?)?)
        }
        Stepper::Fs1 => {
            let t1 = &p.t1;
            let b = one.add(t1).add(&int(o, 2).mul(&t1.mul(t1)));
            p.x.sub(&p.fx.div(&p.dxw)?.mul(&b))
        }
        Stepper::Fs2 => {
            let fwy = o.dd((Node::W, &p.w), (Node::Y, &p.y))?;
            p.y.sub(&p.fy.div(&fwy)?)
        }
        Stepper::Fs3 { .. } | Stepper::Fs4 { .. } => {
            let fxy = o.dd((Node::X, &p.x), (Node::Y, &p.y))?;
            let fyw = o.dd((Node::Y, &p.y), (Node::W, &p.w))?;
            p.y.sub(&p.fy.div(&fxy.add(&fyw).sub(&p.dxw))?)
        }
        Stepper::Newton | Stepper::Steffensen | Stepper::Fd1 | Stepper::Fd2 => {
            unreachable!("handled by step")
        }
    };

    let fz = o.f(Node::Z, &z)?;
    let t3 = fz.div(&p.fx)?;
    let t4 = fz.div(&p.fw)?;
    let t5 = fz.div(&p.fy)?;
    let slots: Slots<S> = [
        Some(p.t1.clone()),
        Some(p.t2.clone()),
        Some(t3.clone()),
        Some(t4.clone()),
        Some(t5.clone()),
    ];

    let correction = match stepper {
        Stepper::Fd4 => {
            let h: Vec<S> = (1..=5)
                .map(|i| param(o, &format!("h{i}")))
                .collect::<Result<_, _>>()?;
            let h0 = h.iter().fold(one.clone(), |acc, hi| acc.sub(hi));
            let mut sum: Option<S> = None;
            for (i, hi) in std::iter::once(&h0).chain(h.iter()).enumerate() {
                if hi.is_exact_zero() {
                    continue;
                }
                let den = match i {
                    0 => o.dd((Node::Y, &p.y), (Node::Z, &z))?,
                    1 => o.dd((Node::Z, &z), (Node::W, &p.w))?,
                    2 => o.dd((Node::Z, &z), (Node::X, &p.x))?,
                    3 => o.dd((Node::X, &p.x), (Node::Y, &p.y))?,
                    4 => o.dd((Node::Y, &p.y), (Node::W, &p.w))?,
                    _ => p.dxw.clone(),
                };
                let term = apply(o, weight(ws, &format!("S{i}"))?, &slots, &fz.div(&den)?)?.mul(hi);
                sum = Some(match sum {
                    Some(s) => s.add(&term),
                    None => term,
                });
            }
            sum.unwrap_or_else(|| int(o, 0))
        }
        Stepper::Fd5 => {
            let h = param(o, "h")?;
            let hm1 = h.sub(&one);
            let mut den = o.dd((Node::Z, &z), (Node::Y, &p.y))?;
            if !hm1.is_exact_zero() {
                let fzw = o.dd((Node::Z, &z), (Node::W, &p.w))?;
                let fyw = o.dd((Node::Y, &p.y), (Node::W, &p.w))?;
                den = den.sub(&hm1.mul(&fzw)).add(&hm1.mul(&fyw));
            }
            if !h.is_exact_zero() {
                let fzx = o.dd((Node::Z, &z), (Node::X, &p.x))?;
                let fyx = o.dd((Node::Y, &p.y), (Node::X, &p.x))?;
                den = den.add(&h.mul(&fzx)).sub(&h.mul(&fyx));
            }
            apply(o, weight(ws, "H")?, &slots, &fz.div(&den)?)?
        }
        Stepper::Fd6 => {
            let fzy = o.dd((Node::Z, &z), (Node::Y, &p.y))?;
            let fzx = o.dd((Node::Z, &z), (Node::X, &p.x))?;
            let ratio = z.sub(&p.y).div(&z.sub(&p.x))?;
            let den = fzy.add(&fzx.sub(&p.dxw).mul(&ratio));
            apply(o, weight(ws, "H")?, &slots, &fz.div(&den)?)?
        }
        Stepper::Sk2 => {
            let b = sk2_bracket(&p, o)?.add(&param(o, "eta")?.mul(&t5));
            fz.div(&p.dxw)?.mul(&b)
        }
        Stepper::Ts1 => {
            let fxy = o.dd((Node::X, &p.x), (Node::Y, &p.y))?;
            apply(o, weight(ws, "G")?, &slots, &fz.div(&fxy)?)?
        }
        Stepper::Ts2 | Stepper::Fs1 | Stepper::Fs2 => {
            let den = match stepper {
                Stepper::Fs2 => {
                    let fwz = o.dd((Node::W, &p.w), (Node::Z, &z))?;
                    let fzy = o.dd((Node::Z, &z), (Node::Y, &p.y))?;
                    let fwy = o.dd((Node::W, &p.w), (Node::Y, &p.y))?;
                    fwz.add(&fzy).sub(&fwy)
                }
                _ => o.dd((Node::Z, &z), (Node::Y, &p.y))?,
            };
            let base = fz.div(&den)?;
            if *stepper == Stepper::Fs1 {
                let u = bracket_u(&p, o)?;
                let factor = one.sub(&one.add(&u).div(&u)?.mul(&t4));
                base.mul(&factor)
            } else {
                base
            }
        }
        Stepper::Fs3 { t3_param, t4_param } => {
            let fxz = o.dd((Node::X, &p.x), (Node::Z, &z))?;
            let u = bracket_u(&p, o)?;
            let one_u = one.add(&u);
            let c = int(o, 2).add(&u).div(&one_u.mul(&one_u))?;
            let b = one
                .add(&p.t2)
                .add(&t5)
                .add(&c.mul(&p.t1.mul(&p.t1)))
                .add(&param(o, t3_param)?.mul(&t3))
                .add(&param(o, t4_param)?.mul(&t4));
            fz.div(&fxz)?.mul(&b)
        }
        Stepper::Fs4 { t3_param, t4_param } => {
            let fwz = o.dd((Node::W, &p.w), (Node::Z, &z))?;
            let u = bracket_u(&p, o)?;
            let c = int(o, 2).add(&u.mul(&int(o, 3).add(&u)));
            let mut b = one.add(&t5).add(&p.t1).add(&c.mul(&p.t2.mul(&p.t2)));
            if let Some(name) = t3_param {
                b = b.add(&param(o, name)?.mul(&t3));
            }
            if let Some(name) = t4_param {
                b = b.add(&param(o, name)?.mul(&t4));
            }
            fz.div(&fwz)?.mul(&b)
        }
        _ => unreachable!("second step handled above"),
    };
    Ok(Step {
        next: z.sub(&correction),
        stages: vec![(Node::W, p.w), (Node::Y, p.y), (Node::Z, z)],
    })
}

/// `-kappa f[x, w]`, which is `f[x, w]` under the `w = x + f(x)` convention.
fn bracket_u<S: Arith, O: Oracle<S>>(p: &Free<S>, o: &O) -> StepResult<S> {
    Ok(o.offset()?.mul(&p.dxw).neg())
}

/// `1 + t1 + alpha t1^2 + t2 + beta t2^2`.
fn sk2_bracket<S: Arith, O: Oracle<S>>(p: &Free<S>, o: &O) -> StepResult<S> {
    let one = int(o, 1);
    Ok(one
        .add(&p.t1)
        .add(&param(o, "alpha")?.mul(&p.t1.mul(&p.t1)))
        .add(&p.t2)
        .add(&param(o, "beta")?.mul(&p.t2.mul(&p.t2))))
}
