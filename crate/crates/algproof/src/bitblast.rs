//! Two's-complement bit-blasting of integer circuits.
//!
//! Every connective application that does not fold to a constant or to one of
//! its arguments becomes a fresh bit variable with a small defining
//! polynomial. Gadgets return records describing which variables they
//! created, which the derivation generators in `lemmas` replay.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::algebra::{int, Polynomial, Registry, Ring, VarId, VarKind};
use crate::circuit::{Gate, GateRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Zero,
    One,
    Var(VarId),
}

impl Bit {
    pub fn poly(self) -> Polynomial {
        match self {
            Bit::Zero => Polynomial::zero(Ring::Z),
            Bit::One => Polynomial::one(Ring::Z),
            Bit::Var(v) => Polynomial::var(Ring::Z, v),
        }
    }

    pub fn var(self) -> Option<VarId> {
        match self {
            Bit::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn constant(self) -> Option<u8> {
        match self {
            Bit::Zero => Some(0),
            Bit::One => Some(1),
            Bit::Var(_) => None,
        }
    }

    fn from_bool(b: bool) -> Bit {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

/// Bits least significant first; the last entry is the sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec(pub Vec<Bit>);

impl BitVec {
    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn sign(&self) -> Bit {
        *self.0.last().expect("non-empty bit vector")
    }

    pub fn bits(&self) -> &[Bit] {
        &self.0
    }

    /// Extends to `width` by repeating the sign bit.
    pub fn padded(&self, width: usize) -> BitVec {
        let mut v = self.0.clone();
        let s = self.sign();
        while v.len() < width {
            v.push(s);
        }
        BitVec(v)
    }

    pub fn constant(value: &BigInt) -> BitVec {
        let w = min_twos_width(value) + 1;
        BitVec((0..w).map(|i| Bit::from_bool(twos_bit(value, i))).collect())
    }
}

/// Smallest two's-complement width that holds `value`.
pub fn min_twos_width(value: &BigInt) -> usize {
    if value.is_negative() {
        let m: BigInt = -value - 1;
        m.bits() as usize + 1
    } else {
        value.bits() as usize + 1
    }
}

fn twos_bit(value: &BigInt, i: usize) -> bool {
    if value.is_negative() {
        let m: BigInt = -value - 1;
        !m.bit(i as u64)
    } else {
        value.bit(i as u64)
    }
}

pub fn val_polynomial(v: &BitVec) -> Polynomial {
    let k = v.width();
    let mut terms = Vec::with_capacity(k);
    let mut constant = BigInt::zero();
    for (i, b) in v.0.iter().enumerate() {
        let w = if i + 1 == k {
            -(BigInt::one() << i)
        } else {
            BigInt::one() << i
        };
        match b {
            Bit::Zero => {}
            Bit::One => constant += w,
            Bit::Var(x) => terms.push((crate::algebra::Monomial::var(*x), w)),
        }
    }
    terms.push((crate::algebra::Monomial::one(), constant));
    Polynomial::from_int_terms(Ring::Z, terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connective {
    False,
    True,
    And,
    Or,
    Xor,
}

impl Connective {
    pub fn parse(s: &str) -> Result<Connective, BitblastError> {
        match s {
            "false" => Ok(Connective::False),
            "true" => Ok(Connective::True),
            "and" => Ok(Connective::And),
            "or" => Ok(Connective::Or),
            "xor" => Ok(Connective::Xor),
            _ => Err(BitblastError::UnknownConnective(s.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Connective::False => "false",
            Connective::True => "true",
            Connective::And => "and",
            Connective::Or => "or",
            Connective::Xor => "xor",
        }
    }

    fn arity(self) -> usize {
        match self {
            Connective::False | Connective::True => 0,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitblastError {
    #[error("unknown connective `{0}`")]
    UnknownConnective(String),
    #[error("connective expects {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("circuit input {0:?} is not assigned a Boolean value")]
    Unassigned(VarId),
    #[error("invalid circuit: {0}")]
    Circuit(String),
}

pub fn arithmetize(c: Connective, args: &[Polynomial]) -> Result<Polynomial, BitblastError> {
    if args.len() != c.arity() {
        return Err(BitblastError::Arity {
            expected: c.arity(),
            got: args.len(),
        });
    }
    let ring = args.first().map(Polynomial::ring).unwrap_or(Ring::Z);
    Ok(match c {
        Connective::False => Polynomial::zero(ring),
        Connective::True => Polynomial::one(ring),
        Connective::And => &args[0] * &args[1],
        Connective::Or => {
            let one = Polynomial::one(ring);
            &one - &(&(&one - &args[0]) * &(&one - &args[1]))
        }
        Connective::Xor => {
            let prod = &args[0] * &args[1];
            &(&args[0] + &args[1]) - &prod.scale_int(&BigInt::from(2))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GadgetKind {
    Add,
    Xor,
    Abs,
    ProdPlus,
    Prod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub gate: Option<GateRef>,
    pub gadget: GadgetKind,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitDef {
    pub var: VarId,
    pub conn: Connective,
    pub args: [Bit; 2],
    pub def: Polynomial,
    pub prov: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetEmission {
    pub new_defs: Vec<(VarId, Polynomial)>,
    pub result: BitVec,
}

/// Allocator session for bit variables.
pub struct Emitter<'r> {
    reg: &'r mut Registry,
    pub defs: Vec<BitDef>,
    gate: Option<GateRef>,
    gadget: GadgetKind,
    index: usize,
}

impl<'r> Emitter<'r> {
    pub fn new(reg: &'r mut Registry) -> Self {
        Emitter {
            reg,
            defs: Vec::new(),
            gate: None,
            gadget: GadgetKind::Add,
            index: 0,
        }
    }

    pub fn registry(&self) -> &Registry {
        self.reg
    }

    pub fn set_gate(&mut self, gate: Option<GateRef>) {
        self.gate = gate;
    }

    fn context(&mut self, gadget: GadgetKind, index: usize) {
        self.gadget = gadget;
        self.index = index;
    }

    fn fresh(&mut self, conn: Connective, a: Bit, b: Bit) -> Bit {
        let var = self.reg.fresh("b", VarKind::Bit);
        let def = arithmetize(conn, &[a.poly(), b.poly()]).expect("binary connective");
        self.defs.push(BitDef {
            var,
            conn,
            args: [a, b],
            def,
            prov: Provenance {
                gate: self.gate,
                gadget: self.gadget,
                index: self.index,
            },
        });
        Bit::Var(var)
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Zero, _) | (_, Bit::Zero) => Bit::Zero,
            (Bit::One, x) | (x, Bit::One) => x,
            _ => self.fresh(Connective::And, a, b),
        }
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::One, _) | (_, Bit::One) => Bit::One,
            (Bit::Zero, x) | (x, Bit::Zero) => x,
            _ => self.fresh(Connective::Or, a, b),
        }
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Zero, x) | (x, Bit::Zero) => x,
            (Bit::One, Bit::One) => Bit::Zero,
            _ => self.fresh(Connective::Xor, a, b),
        }
    }

    fn created_since(&self, start: usize) -> Vec<VarId> {
        self.defs[start..].iter().map(|d| d.var).collect()
    }

    pub fn emission_since(&self, start: usize, result: BitVec) -> GadgetEmission {
        GadgetEmission {
            new_defs: self.defs[start..]
                .iter()
                .map(|d| (d.var, d.def.clone()))
                .collect(),
            result,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddStage {
    pub new_vars: Vec<VarId>,
    pub u: Bit,
    pub out: Bit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddGadget {
    pub y: BitVec,
    pub z: BitVec,
    /// Inputs padded to the common width `K`.
    pub yp: Vec<Bit>,
    pub zp: Vec<Bit>,
    /// `carries[i]` enters stage `i`; `carries[0]` is zero.
    pub carries: Vec<Bit>,
    pub stages: Vec<AddStage>,
    pub out: BitVec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorGadget {
    pub input: BitVec,
    pub s: Bit,
    pub new_vars: Vec<VarId>,
    pub out: BitVec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbsGadget {
    pub x: BitVec,
    pub s: Bit,
    pub add: AddGadget,
    pub xor: XorGadget,
    pub out: BitVec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRecord {
    pub bits: BitVec,
    pub new_vars: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProdPlusGadget {
    pub a: BitVec,
    pub b: BitVec,
    pub rows: Vec<RowRecord>,
    /// `adds[i - 1]` adds row `i` to the accumulator.
    pub adds: Vec<AddGadget>,
    pub out: BitVec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProdGadget {
    pub y: BitVec,
    pub z: BitVec,
    pub s: Bit,
    pub s_vars: Vec<VarId>,
    pub abs_y: AbsGadget,
    /// `None` when both operands are the same vector and share one ABS.
    pub abs_z: Option<AbsGadget>,
    pub prod_plus: ProdPlusGadget,
    pub xor: XorGadget,
    pub add: AddGadget,
    pub out: BitVec,
}

impl ProdGadget {
    pub fn abs_z(&self) -> &AbsGadget {
        self.abs_z.as_ref().unwrap_or(&self.abs_y)
    }
}

pub fn emit_carry_add(em: &mut Emitter, y: &BitVec, z: &BitVec) -> AddGadget {
    let k = y.width().max(z.width()) + 1;
    let yp = y.padded(k).0;
    let zp = z.padded(k).0;
    let mut carries = vec![Bit::Zero];
    let mut stages = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        em.context(GadgetKind::Add, i);
        let start = em.defs.len();
        let c = carries[i];
        let u = em.xor(yp[i], zp[i]);
        let s = em.xor(u, c);
        if i + 1 < k {
            let a = em.and(yp[i], zp[i]);
            let o = em.or(yp[i], zp[i]);
            let t = em.and(o, c);
            let next = em.or(a, t);
            carries.push(next);
        }
        out.push(s);
        stages.push(AddStage {
            new_vars: em.created_since(start),
            u,
            out: s,
        });
    }
    AddGadget {
        y: y.clone(),
        z: z.clone(),
        yp,
        zp,
        carries,
        stages,
        out: BitVec(out),
    }
}

pub fn emit_xor_bit(em: &mut Emitter, x: &BitVec, s: Bit) -> XorGadget {
    em.context(GadgetKind::Xor, 0);
    let start = em.defs.len();
    let out: Vec<Bit> = x.0.iter().map(|&b| em.xor(b, s)).collect();
    XorGadget {
        input: x.clone(),
        s,
        new_vars: em.created_since(start),
        out: BitVec(out),
    }
}

pub fn emit_abs(em: &mut Emitter, x: &BitVec) -> AbsGadget {
    let s = x.sign();
    let mask = BitVec(vec![s; x.width()]);
    let add = emit_carry_add(em, x, &mask);
    let xor = emit_xor_bit(em, &add.out, s);
    let out = xor.out.clone();
    AbsGadget {
        x: x.clone(),
        s,
        add,
        xor,
        out,
    }
}

pub fn emit_prod_plus(em: &mut Emitter, a: &BitVec, b: &BitVec) -> ProdPlusGadget {
    let r = a.width() - 1;
    let k = b.width() - 1;
    let mut rows = Vec::with_capacity(k + 1);
    for (i, &bi) in b.0.iter().enumerate() {
        em.context(GadgetKind::ProdPlus, i);
        let start = em.defs.len();
        let mut bits = vec![Bit::Zero; i];
        for &aj in &a.0 {
            bits.push(em.and(aj, bi));
        }
        rows.push(RowRecord {
            bits: BitVec(bits),
            new_vars: em.created_since(start),
        });
    }
    let mut acc = rows[0].bits.clone();
    let mut adds = Vec::with_capacity(k);
    for row in rows.iter().skip(1) {
        let g = emit_carry_add(em, &row.bits, &acc);
        acc = g.out.clone();
        adds.push(g);
    }
    if k == 0 {
        acc = acc.padded(r + 2);
    }
    ProdPlusGadget {
        a: a.clone(),
        b: b.clone(),
        rows,
        adds,
        out: acc,
    }
}

pub fn emit_prod(em: &mut Emitter, y: &BitVec, z: &BitVec) -> ProdGadget {
    em.context(GadgetKind::Prod, 0);
    let start = em.defs.len();
    let s = em.xor(y.sign(), z.sign());
    let s_vars = em.created_since(start);
    let abs_y = emit_abs(em, y);
    let abs_z = if y == z { None } else { Some(emit_abs(em, z)) };
    let a_out = abs_y.out.clone();
    let b_out = abs_z
        .as_ref()
        .map(|g| g.out.clone())
        .unwrap_or_else(|| a_out.clone());
    let prod_plus = emit_prod_plus(em, &a_out, &b_out);
    let xor = emit_xor_bit(em, &prod_plus.out, s);
    let add = emit_carry_add(em, &xor.out, &BitVec(vec![s, Bit::Zero]));
    let out = add.out.clone();
    ProdGadget {
        y: y.clone(),
        z: z.clone(),
        s,
        s_vars,
        abs_y,
        abs_z,
        prod_plus,
        xor,
        add,
        out,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateBits {
    Input,
    Const,
    Add(AddGadget),
    Mul(Box<ProdGadget>),
}

/// Bit vectors and gadget records for every gate of a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitEnv {
    pub vectors: Vec<BitVec>,
    pub gadgets: Vec<GateBits>,
    pub defs: Vec<BitDef>,
}

impl BitEnv {
    pub fn def_map(&self) -> HashMap<VarId, &BitDef> {
        self.defs.iter().map(|d| (d.var, d)).collect()
    }
}

/// Bit-blasts gates `from..` of `gates`, appending to `env`.
pub fn emit_bit_gates(em: &mut Emitter, gates: &[Gate], env: &mut BitEnv) {
    let start_defs = em.defs.len();
    for (r, g) in gates.iter().enumerate().skip(env.vectors.len()) {
        em.set_gate(Some(r));
        let (vec, record) = match g {
            Gate::Input(x) => (BitVec(vec![Bit::Var(*x), Bit::Zero]), GateBits::Input),
            Gate::Const(c) => (BitVec::constant(c), GateBits::Const),
            Gate::Add(a, b) => {
                let add = emit_carry_add(em, &env.vectors[*a], &env.vectors[*b]);
                (add.out.clone(), GateBits::Add(add))
            }
            Gate::Mul(a, b) => {
                let w = env.vectors[*a].width().max(env.vectors[*b].width());
                let ya = env.vectors[*a].padded(w);
                let zb = env.vectors[*b].padded(w);
                let prod = emit_prod(em, &ya, &zb);
                (prod.out.clone(), GateBits::Mul(Box::new(prod)))
            }
        };
        env.vectors.push(vec);
        env.gadgets.push(record);
    }
    em.set_gate(None);
    env.defs.extend(em.defs[start_defs..].iter().cloned());
}

pub fn emit_bit(gates: &[Gate], output: GateRef, reg: &mut Registry) -> (BitEnv, GadgetEmission) {
    let mut em = Emitter::new(reg);
    let mut env = BitEnv {
        vectors: Vec::new(),
        gadgets: Vec::new(),
        defs: Vec::new(),
    };
    emit_bit_gates(&mut em, gates, &mut env);
    let emission = em.emission_since(0, env.vectors[output].clone());
    (env, emission)
}

/// Evaluates bit definitions in order under an input assignment.
pub fn eval_defs<'a, I>(
    defs: I,
    inputs: &HashMap<VarId, BigInt>,
) -> Result<HashMap<VarId, BigInt>, BitblastError>
where
    I: IntoIterator<Item = &'a (VarId, Polynomial)>,
{
    let mut env = inputs.clone();
    for (v, q) in defs {
        let val = q
            .eval_with(|w| env.get(&w).map(|x| int(x.clone())))
            .map_err(|e| match e {
                crate::algebra::AlgebraError::Unassigned(w) => BitblastError::Unassigned(w),
                other => BitblastError::Circuit(other.to_string()),
            })?;
        env.insert(*v, val.to_integer());
    }
    Ok(env)
}

pub fn bit_value(b: Bit, env: &HashMap<VarId, BigInt>) -> Option<BigInt> {
    match b {
        Bit::Zero => Some(BigInt::zero()),
        Bit::One => Some(BigInt::one()),
        Bit::Var(v) => env.get(&v).cloned(),
    }
}

pub fn vec_value(v: &BitVec, env: &HashMap<VarId, BigInt>) -> Option<BigInt> {
    let k = v.width();
    let mut acc = BigInt::zero();
    for (i, b) in v.0.iter().enumerate() {
        let x = bit_value(*b, env)?;
        if i + 1 == k {
            acc -= x << i;
        } else {
            acc += x << i;
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Monomial;

    fn inputs(reg: &mut Registry, n: usize) -> Vec<VarId> {
        (0..n)
            .map(|i| reg.declare(&format!("x{}", i + 1), VarKind::Input).unwrap())
            .collect()
    }

    fn pairs(em: &Emitter) -> Vec<(VarId, Polynomial)> {
        em.defs.iter().map(|d| (d.var, d.def.clone())).collect()
    }

    /// Encodes `value` into fresh input variables and returns the vector and an assignment.
    fn encoded(
        reg: &mut Registry,
        tag: &str,
        value: i64,
        width: usize,
    ) -> (BitVec, HashMap<VarId, BigInt>) {
        let mut bits = Vec::new();
        let mut asg = HashMap::new();
        for i in 0..width {
            let v = reg.declare(&format!("{tag}{i}"), VarKind::Input).unwrap();
            let bit = twos_bit(&BigInt::from(value), i);
            asg.insert(v, BigInt::from(bit as u8));
            bits.push(Bit::Var(v));
        }
        (BitVec(bits), asg)
    }

    fn all_boolean(env: &HashMap<VarId, BigInt>) -> bool {
        env.values().all(|v| v.is_zero() || v.is_one())
    }

    #[test]
    fn arithmetization_examples() {
        let mut reg = Registry::new();
        let v = inputs(&mut reg, 2);
        let (a, b) = (
            Polynomial::var(Ring::Z, v[0]),
            Polynomial::var(Ring::Z, v[1]),
        );
        let x = arithmetize(Connective::Xor, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(x, &(&a + &b) - &(&a * &b).scale_int(&BigInt::from(2)));
        let one = Polynomial::one(Ring::Z);
        assert_eq!(arithmetize(Connective::And, &[one, b.clone()]).unwrap(), b);
        let or = arithmetize(Connective::Or, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(or.eval_with(|_| Some(int(0))).unwrap(), int(0));
        assert!(matches!(
            Connective::parse("nand"),
            Err(BitblastError::UnknownConnective(_))
        ));
        assert!(arithmetize(Connective::And, &[a]).is_err());
    }

    #[test]
    fn val_examples() {
        let mut reg = Registry::new();
        let z = inputs(&mut reg, 3);
        let v = BitVec(z.iter().map(|&x| Bit::Var(x)).collect());
        let expect = Polynomial::linear(Ring::Z, vec![(z[0], 1), (z[1], 2), (z[2], -4)], 0);
        assert_eq!(val_polynomial(&v), expect);
        let one = BitVec(vec![Bit::Var(z[0])]);
        assert_eq!(val_polynomial(&one), -Polynomial::var(Ring::Z, z[0]));
        assert!(val_polynomial(&v)
            .eval_with(|_| Some(int(0)))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn constant_encoding() {
        let enc = |n: i64| BitVec::constant(&BigInt::from(n));
        assert_eq!(enc(0).0, vec![Bit::Zero, Bit::Zero]);
        assert_eq!(enc(-1).0, vec![Bit::One, Bit::One]);
        assert_eq!(enc(2).width(), 4);
        assert_eq!(enc(-2).0, vec![Bit::Zero, Bit::One, Bit::One]);
        let env = HashMap::new();
        for n in -40i64..40 {
            assert_eq!(vec_value(&enc(n), &env), Some(BigInt::from(n)));
        }
    }

    #[test]
    fn adder_semantics() {
        for (a, b, w) in [
            (3i64, 1i64, 3usize),
            (-2, 1, 3),
            (-4, -4, 3),
            (3, 3, 3),
            (0, -1, 2),
        ] {
            let mut reg = Registry::new();
            let (y, mut asg) = encoded(&mut reg, "y", a, w);
            let (z, asg2) = encoded(&mut reg, "z", b, w);
            asg.extend(asg2);
            let mut em = Emitter::new(&mut reg);
            let g = emit_carry_add(&mut em, &y, &z);
            assert_eq!(g.out.width(), w + 1);
            let env = eval_defs(&pairs(&em), &asg).unwrap();
            assert!(all_boolean(&env));
            assert_eq!(vec_value(&g.out, &env), Some(BigInt::from(a + b)));
        }
    }

    #[test]
    fn adder_widths_unequal() {
        let mut reg = Registry::new();
        let (y, mut asg) = encoded(&mut reg, "y", -3, 4);
        let (z, asg2) = encoded(&mut reg, "z", 1, 2);
        asg.extend(asg2);
        let mut em = Emitter::new(&mut reg);
        let g = emit_carry_add(&mut em, &y, &z);
        assert_eq!(g.out.width(), 5);
        let env = eval_defs(&pairs(&em), &asg).unwrap();
        assert_eq!(vec_value(&g.out, &env), Some(BigInt::from(-2)));
    }

    #[test]
    fn abs_semantics() {
        for (n, w) in [(-2i64, 3usize), (2, 3), (0, 3), (-4, 3), (-1, 1)] {
            let mut reg = Registry::new();
            let (x, asg) = encoded(&mut reg, "x", n, w);
            let mut em = Emitter::new(&mut reg);
            let g = emit_abs(&mut em, &x);
            assert_eq!(g.out.width(), w + 1);
            let env = eval_defs(&pairs(&em), &asg).unwrap();
            assert_eq!(vec_value(&g.out, &env), Some(BigInt::from(n.abs())));
            assert_eq!(bit_value(g.out.sign(), &env), Some(BigInt::zero()));
        }
    }

    #[test]
    fn prod_plus_semantics() {
        for (a, b) in [(3i64, 2i64), (0, 3), (3, 0), (1, 1)] {
            let mut reg = Registry::new();
            let (x, mut asg) = encoded(&mut reg, "a", a, 3);
            let (y, asg2) = encoded(&mut reg, "b", b, 3);
            asg.extend(asg2);
            let mut em = Emitter::new(&mut reg);
            let g = emit_prod_plus(&mut em, &x, &y);
            assert_eq!(g.out.width(), 2 + 2 + 2);
            for (i, row) in g.rows.iter().enumerate() {
                assert!(row.bits.0[..i].iter().all(|&b| b == Bit::Zero));
            }
            let env = eval_defs(&pairs(&em), &asg).unwrap();
            assert_eq!(vec_value(&g.out, &env), Some(BigInt::from(a * b)));
        }
    }

    #[test]
    fn prod_semantics_and_width() {
        for (a, wa, b, wb) in [
            (-2i64, 3usize, 3i64, 3usize),
            (1, 2, -3, 3),
            (-4, 3, -4, 3),
            (-1, 1, 5, 4),
        ] {
            let mut reg = Registry::new();
            let (y, mut asg) = encoded(&mut reg, "y", a, wa);
            let (z, asg2) = encoded(&mut reg, "z", b, wb);
            asg.extend(asg2);
            let mut em = Emitter::new(&mut reg);
            let g = emit_prod(&mut em, &y, &z);
            assert_eq!(g.out.width(), wa + wb + 3);
            let env = eval_defs(&pairs(&em), &asg).unwrap();
            assert!(all_boolean(&env));
            assert_eq!(vec_value(&g.out, &env), Some(BigInt::from(a * b)));
        }
    }

    #[test]
    fn square_shares_abs() {
        let mut reg = Registry::new();
        let (y, asg) = encoded(&mut reg, "y", -3, 3);
        let mut em = Emitter::new(&mut reg);
        let g = emit_prod(&mut em, &y, &y);
        assert!(g.abs_z.is_none());
        assert!(g.s.var().is_some());
        let env = eval_defs(&pairs(&em), &asg).unwrap();
        assert_eq!(vec_value(&g.out, &env), Some(BigInt::from(9)));
    }

    #[test]
    fn bit_of_gates() {
        let mut reg = Registry::new();
        let x = inputs(&mut reg, 1)[0];
        let gates = vec![
            Gate::Input(x),
            Gate::Const(BigInt::from(1)),
            Gate::Add(0, 1),
            Gate::Mul(2, 0),
        ];
        let (env, emission) = emit_bit(&gates, 3, &mut reg);
        assert_eq!(env.vectors[0].0, vec![Bit::Var(x), Bit::Zero]);
        assert_eq!(env.vectors[2].width(), 4);
        assert_eq!(emission.result.width(), 4 + 4 + 3);
        for xv in 0..2i64 {
            let asg: HashMap<VarId, BigInt> = [(x, BigInt::from(xv))].into();
            let vals = eval_defs(&emission.new_defs, &asg).unwrap();
            assert_eq!(
                vec_value(&emission.result, &vals),
                Some(BigInt::from((xv + 1) * xv))
            );
        }
        assert!(emission.new_defs.iter().all(|(_, q)| q.num_terms() <= 4));
        let m = Monomial::var(x);
        assert!(emission
            .new_defs
            .iter()
            .all(|(_, q)| q.coefficient(&m).is_zero() || q.degree() <= 2));
    }
}
