//! Value identities for the bit-level gadgets, and sign monotonicity.

use num_bigint::BigInt;

use super::{Certificate, DeriveError, Deriver, Facts, Fragment, FragmentBuilder, LineId, Src};
use crate::algebra::{Polynomial, Registry, Ring, VarId};
use crate::bitblast::{
    emit_carry_add, emit_prod, val_polynomial, AbsGadget, AddGadget, Bit, BitVec, Emitter,
    ProdGadget, ProdPlusGadget, XorGadget,
};

fn k(n: impl Into<BigInt>) -> Polynomial {
    Polynomial::constant_int(Ring::Z, n)
}

fn pow2(i: usize) -> BigInt {
    BigInt::from(1) << i
}

fn one_minus_two(s: Bit) -> Polynomial {
    &k(1) - &s.poly().scale_int(&BigInt::from(2))
}

pub fn gadget_vars(g: &AddGadget) -> Vec<VarId> {
    g.stages
        .iter()
        .flat_map(|s| s.new_vars.iter().copied())
        .collect()
}

fn abs_vars(g: &AbsGadget) -> Vec<VarId> {
    let mut v = gadget_vars(&g.add);
    v.extend(&g.xor.new_vars);
    v
}

/// Every variable created by a PRD gadget, in creation order.
pub fn prod_vars(g: &ProdGadget) -> Vec<VarId> {
    let mut v = g.s_vars.clone();
    v.extend(abs_vars(&g.abs_y));
    if let Some(a) = &g.abs_z {
        v.extend(abs_vars(a));
    }
    for row in &g.prod_plus.rows {
        v.extend(&row.new_vars);
    }
    for add in &g.prod_plus.adds {
        v.extend(gadget_vars(add));
    }
    v.extend(&g.xor.new_vars);
    v.extend(gadget_vars(&g.add));
    v
}

/// `VAL(out) - VAL(y) - VAL(z)`, via one full-adder identity per stage and
/// one identity for the top stage.
pub fn derive_add(d: &mut Deriver, g: &AddGadget) -> Result<LineId, DeriveError> {
    let kk = g.yp.len();
    let mut cert: Certificate = Vec::with_capacity(kk);
    for i in 0..kk - 1 {
        let target = &(&(&(&g.yp[i].poly() + &g.zp[i].poly()) + &g.carries[i].poly())
            - &g.stages[i].out.poly())
            - &g.carries[i + 1].poly().scale_int(&BigInt::from(2));
        let l = d.derive_local(&target, Vec::new(), g.stages[i].new_vars.iter().copied())?;
        cert.push((k(-pow2(i)), Src::Line(l)));
    }
    let top = kk - 1;
    let target = &(&(&g.carries[top].poly() + &g.stages[top].out.poly()) - &g.yp[top].poly())
        - &g.zp[top].poly();
    let local = g.stages[top - 1]
        .new_vars
        .iter()
        .chain(&g.stages[top].new_vars)
        .copied();
    let l = d.derive_local(&target, Vec::new(), local)?;
    cert.push((k(-pow2(top)), Src::Line(l)));
    let target = &(&val_polynomial(&g.out) - &val_polynomial(&g.y)) - &val_polynomial(&g.z);
    d.emit_checked(&target, &cert)
}

/// `VAL(out) - (1 - 2s) VAL(in) + s`.
pub fn derive_xor(d: &mut Deriver, g: &XorGadget) -> Result<LineId, DeriveError> {
    let target = &(&val_polynomial(&g.out) - &(&one_minus_two(g.s) * &val_polynomial(&g.input)))
        + &g.s.poly();
    d.derive_local(&target, Vec::new(), g.new_vars.iter().copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbsLines {
    /// `VAL(out) - (1 - 2s) VAL(x)`.
    pub val: LineId,
    /// The sign bit of the result.
    pub sign: LineId,
}

pub fn derive_abs(d: &mut Deriver, g: &AbsGadget) -> Result<AbsLines, DeriveError> {
    let add = derive_add(d, &g.add)?;
    let xor = derive_xor(d, &g.xor)?;
    let target = &val_polynomial(&g.out) - &(&one_minus_two(g.s) * &val_polynomial(&g.x));
    let val = d.derive_local(
        &target,
        vec![(k(1), Src::Line(xor)), (one_minus_two(g.s), Src::Line(add))],
        [],
    )?;
    let kk = g.add.stages.len();
    let local: Vec<VarId> = g.add.stages[kk - 2]
        .new_vars
        .iter()
        .chain(&g.add.stages[kk - 1].new_vars)
        .chain(&g.xor.new_vars)
        .copied()
        .collect();
    let sign = d.derive_local(&g.out.sign().poly(), Vec::new(), local)?;
    Ok(AbsLines { val, sign })
}

/// `VAL(out) - VAL(a) · Σ 2^i b_i`.
pub fn derive_prod_plus(d: &mut Deriver, g: &ProdPlusGadget) -> Result<LineId, DeriveError> {
    let va = val_polynomial(&g.a);
    let mut cert: Certificate = Vec::new();
    for (i, row) in g.rows.iter().enumerate() {
        let target = &val_polynomial(&row.bits) - &(&va * &g.b.0[i].poly().scale_int(&pow2(i)));
        let l = d.derive_local(&target, Vec::new(), row.new_vars.iter().copied())?;
        cert.push((k(1), Src::Line(l)));
    }
    for add in &g.adds {
        let l = derive_add(d, add)?;
        cert.push((k(1), Src::Line(l)));
    }
    let weights = Polynomial::from_int_terms(
        Ring::Z,
        g.b.0.iter().enumerate().flat_map(|(i, b)| {
            let p = b.poly().scale_int(&pow2(i));
            p.terms()
                .map(|(m, c)| (m.clone(), c.to_integer()))
                .collect::<Vec<_>>()
        }),
    );
    let target = &val_polynomial(&g.out) - &(&va * &weights);
    d.derive_local(&target, cert, [])
}

/// `VAL(out) - VAL(y) · VAL(z)`.
pub fn derive_prod(d: &mut Deriver, g: &ProdGadget) -> Result<LineId, DeriveError> {
    let add = derive_add(d, &g.add)?;
    let xor = derive_xor(d, &g.xor)?;
    let pp = derive_prod_plus(d, &g.prod_plus)?;
    let abs_a = derive_abs(d, &g.abs_y)?;
    let abs_b = match &g.abs_z {
        Some(a) => derive_abs(d, a)?,
        None => abs_a,
    };
    let f = one_minus_two(g.s);
    let va = val_polynomial(&g.abs_y.out);
    let b_out = &g.abs_z().out;
    let vb = val_polynomial(b_out);
    let top = b_out.width();
    let manual: Certificate = vec![
        (k(1), Src::Line(add)),
        (k(1), Src::Line(xor)),
        (f.clone(), Src::Line(pp)),
        ((&f * &va).scale_int(&pow2(top)), Src::Line(abs_b.sign)),
        (&f * &vb, Src::Line(abs_a.val)),
        (
            &(&f * &one_minus_two(g.y.sign())) * &val_polynomial(&g.y),
            Src::Line(abs_b.val),
        ),
    ];
    let target = &val_polynomial(&g.out) - &(&val_polynomial(&g.y) * &val_polynomial(&g.z));
    d.derive_local(&target, manual, g.s_vars.iter().copied())
}

/// Zero line for `b` from facts propagated over `scope`, seeded with the given
/// zero lines.
pub fn zero_by_facts(
    d: &mut Deriver,
    scope: &[VarId],
    seeds: &[LineId],
    targets: &[Bit],
) -> Result<Vec<LineId>, DeriveError> {
    let mut facts = Facts::new(d, scope.iter().copied());
    for &l in seeds {
        facts.assume_line(d, l);
    }
    facts.run(d);
    if let Some(l) = facts.emit_contradiction(d)? {
        return Err(DeriveError::Contradiction(l));
    }
    targets.iter().map(|&b| facts.zero_line(d, b)).collect()
}

fn assume_gadget_context(
    fb: &mut FragmentBuilder,
    em_defs: &[(VarId, Polynomial)],
    operands: &[&BitVec],
) {
    let mut seen = std::collections::HashSet::new();
    for v in operands {
        for b in &v.0 {
            if let Bit::Var(x) = b {
                if seen.insert(*x) {
                    fb.assume_bool(*x);
                }
            }
        }
    }
    for (v, q) in em_defs {
        fb.assume_def(*v, q, true);
    }
}

/// Sign of `PRD(r, r')` and of `ADD(r, r')` from zero sign bits of the operands.
///
/// The gadgets are emitted on fresh variables; the fragment assumes their
/// definitions, Boolean lines for the operand bits and the two sign lines.
pub fn derive_sign_monotone(
    r: &BitVec,
    r2: &BitVec,
    reg: &mut Registry,
) -> Result<Fragment, DeriveError> {
    let (prod, add, defs) = {
        let mut em = Emitter::new(reg);
        let w = r.width().max(r2.width());
        let prod = emit_prod(&mut em, &r.padded(w), &r2.padded(w));
        let add = emit_carry_add(&mut em, r, r2);
        let defs: Vec<(VarId, Polynomial)> =
            em.defs.iter().map(|d| (d.var, d.def.clone())).collect();
        (prod, add, defs)
    };
    let mut fb = FragmentBuilder::new(Vec::new());
    assume_gadget_context(&mut fb, &defs, &[r, r2]);
    let mut seeds = Vec::new();
    for s in [r.sign(), r2.sign()] {
        if s != Bit::Zero {
            seeds.push(fb.assume(s.poly()));
        }
    }
    let mut scope = prod_vars(&prod);
    scope.extend(gadget_vars(&add));
    let d = &mut fb.d;
    let lines = zero_by_facts(d, &scope, &seeds, &[prod.out.sign(), add.out.sign()])?;
    Ok(fb.finish(lines))
}

pub(crate) fn fragment_for_gadget(
    reg: &mut Registry,
    operands: &[&BitVec],
    build: impl FnOnce(&mut Emitter) -> ProdGadget,
) -> (FragmentBuilder, ProdGadget) {
    let (g, defs) = {
        let mut em = Emitter::new(reg);
        let g = build(&mut em);
        let defs: Vec<(VarId, Polynomial)> =
            em.defs.iter().map(|d| (d.var, d.def.clone())).collect();
        (g, defs)
    };
    let mut fb = FragmentBuilder::new(Vec::new());
    assume_gadget_context(&mut fb, &defs, operands);
    (fb, g)
}
