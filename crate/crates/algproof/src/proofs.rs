//! Proof data model and the checking kernel.
//!
//! The kernel validates each line independently against earlier lines and
//! tracks which variables are in scope: system inputs and axiom variables
//! from the start, extension variables once their definition line appears.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::algebra::{int, Monomial, Polynomial, Ring, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    PC,
    ExtPC,
    ExtPCSqrt,
    ExtPCeBVP,
    ExtPCSqrtEBVP,
    ExtLS,
}

impl Dialect {
    pub const ALL: [Dialect; 6] = [
        Dialect::PC,
        Dialect::ExtPC,
        Dialect::ExtPCSqrt,
        Dialect::ExtPCeBVP,
        Dialect::ExtPCSqrtEBVP,
        Dialect::ExtLS,
    ];

    pub fn allows_extension(self) -> bool {
        !matches!(self, Dialect::PC)
    }

    pub fn allows_sqrt(self) -> bool {
        matches!(self, Dialect::ExtPCSqrt | Dialect::ExtPCSqrtEBVP)
    }

    pub fn allows_ebvp(self) -> bool {
        matches!(self, Dialect::ExtPCeBVP | Dialect::ExtPCSqrtEBVP)
    }

    pub fn is_inequality(self) -> bool {
        self == Dialect::ExtLS
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dialect::PC => "PC",
            Dialect::ExtPC => "ExtPC",
            Dialect::ExtPCSqrt => "ExtPCSqrt",
            Dialect::ExtPCeBVP => "ExtPCeBVP",
            Dialect::ExtPCSqrtEBVP => "ExtPCSqrtEBVP",
            Dialect::ExtLS => "ExtLS",
        }
    }

    pub fn parse(s: &str) -> Option<Dialect> {
        Dialect::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    pub ring: Ring,
    pub inputs: Vec<VarId>,
    pub axioms: Vec<Polynomial>,
    pub boolean_vars: Vec<VarId>,
}

impl System {
    pub fn new(
        ring: Ring,
        inputs: Vec<VarId>,
        axioms: Vec<Polynomial>,
        boolean_vars: Vec<VarId>,
    ) -> Self {
        System {
            ring,
            inputs,
            axioms,
            boolean_vars,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlackDir {
    /// `x^2 - x >= 0`
    SquareMinusVar,
    /// `x - x^2 >= 0`
    VarMinusSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairSide {
    YMinusF,
    FMinusY,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    Axiom(usize),
    BooleanAxiom(VarId),
    /// Line is `var - def`.
    ExtDef {
        var: VarId,
        def: Polynomial,
    },
    LinComb {
        alpha: BigRational,
        i: usize,
        beta: BigRational,
        j: usize,
    },
    MulVar {
        var: VarId,
        i: usize,
    },
    Sqrt(usize),
    Ebvp {
        premise: usize,
        g: Polynomial,
        m: BigInt,
        fs: Vec<Polynomial>,
        bool_lines: Vec<usize>,
    },
    IneqAxiom(usize),
    IneqVar(VarId),
    IneqOneMinusVar(VarId),
    IneqBoolSlack {
        var: VarId,
        dir: SlackDir,
    },
    IneqSquare(VarId),
    IneqSum(usize, usize),
    IneqProduct(usize, usize),
    IneqExtPair {
        var: VarId,
        def: Polynomial,
        which: PairSide,
    },
}

impl Justification {
    pub fn tag(&self) -> &'static str {
        match self {
            Justification::Axiom(_) => "axiom",
            Justification::BooleanAxiom(_) => "boolean",
            Justification::ExtDef { .. } => "extdef",
            Justification::LinComb { .. } => "lincomb",
            Justification::MulVar { .. } => "mulvar",
            Justification::Sqrt(_) => "sqrt",
            Justification::Ebvp { .. } => "ebvp",
            Justification::IneqAxiom(_) => "ineq-axiom",
            Justification::IneqVar(_) => "ineq-var",
            Justification::IneqOneMinusVar(_) => "ineq-one-minus-var",
            Justification::IneqBoolSlack { .. } => "ineq-bool-slack",
            Justification::IneqSquare(_) => "ineq-square",
            Justification::IneqSum(..) => "ineq-sum",
            Justification::IneqProduct(..) => "ineq-product",
            Justification::IneqExtPair { .. } => "ineq-ext-pair",
        }
    }

    pub fn is_inequality_rule(&self) -> bool {
        matches!(
            self,
            Justification::IneqAxiom(_)
                | Justification::IneqVar(_)
                | Justification::IneqOneMinusVar(_)
                | Justification::IneqBoolSlack { .. }
                | Justification::IneqSquare(_)
                | Justification::IneqSum(..)
                | Justification::IneqProduct(..)
                | Justification::IneqExtPair { .. }
        )
    }

    /// Indices of earlier lines this step reads.
    pub fn premises(&self) -> Vec<usize> {
        match self {
            Justification::LinComb { i, j, .. } => vec![*i, *j],
            Justification::MulVar { i, .. } | Justification::Sqrt(i) => vec![*i],
            Justification::Ebvp {
                premise,
                bool_lines,
                ..
            } => {
                let mut v = vec![*premise];
                v.extend(bool_lines.iter().copied());
                v
            }
            Justification::IneqSum(i, j) | Justification::IneqProduct(i, j) => vec![*i, *j],
            _ => Vec::new(),
        }
    }

    pub fn map_premises(&self, f: &mut impl FnMut(usize) -> usize) -> Justification {
        let mut out = self.clone();
        match &mut out {
            Justification::LinComb { i, j, .. }
            | Justification::IneqSum(i, j)
            | Justification::IneqProduct(i, j) => {
                *i = f(*i);
                *j = f(*j);
            }
            Justification::MulVar { i, .. } | Justification::Sqrt(i) => *i = f(*i),
            Justification::Ebvp {
                premise,
                bool_lines,
                ..
            } => {
                *premise = f(*premise);
                for b in bool_lines.iter_mut() {
                    *b = f(*b);
                }
            }
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLine {
    pub poly: Polynomial,
    pub just: Justification,
}

impl ProofLine {
    pub fn new(poly: Polynomial, just: Justification) -> Self {
        ProofLine { poly, just }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub system: System,
    pub dialect: Dialect,
    pub lines: Vec<ProofLine>,
    pub claims_refutation: bool,
}

impl Proof {
    pub fn new(
        system: System,
        dialect: Dialect,
        lines: Vec<ProofLine>,
        claims_refutation: bool,
    ) -> Self {
        Proof {
            system,
            dialect,
            lines,
            claims_refutation,
        }
    }

    pub fn ring(&self) -> Ring {
        self.system.ring
    }

    /// Extension definitions in order of introduction, from either dialect.
    pub fn ext_definitions(&self) -> Vec<(VarId, Polynomial)> {
        self.lines
            .iter()
            .filter_map(|l| match &l.just {
                Justification::ExtDef { var, def } => Some((*var, def.clone())),
                Justification::IneqExtPair {
                    var,
                    def,
                    which: PairSide::YMinusF,
                } => Some((*var, def.clone())),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FailReason {
    #[error("identity-mismatch")]
    IdentityMismatch,
    #[error("rule-not-in-dialect")]
    RuleNotInDialect,
    #[error("bad-premise-order")]
    BadPremiseOrder,
    #[error("non-positive-M")]
    NonPositiveM,
    #[error("malformed-boolean-witness")]
    MalformedBooleanWitness,
    #[error("undeclared-variable")]
    UndeclaredVariable,
    #[error("not-fresh")]
    NotFresh,
    #[error("bad-basic-op")]
    BadBasicOp,
    #[error("not-boolean-var")]
    NotBooleanVar,
    #[error("unknown-axiom")]
    UnknownAxiom,
    #[error("not-a-refutation")]
    NotARefutation,
    #[error("ring-mismatch")]
    RingMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub accepted: bool,
    pub first_failure: Option<(usize, FailReason)>,
    pub proof_size: u64,
    pub proof_degree: u32,
    /// Final constant of an accepted refutation; normalized to 1 over Q.
    pub refutation_constant: Option<BigRational>,
}

/// Incremental kernel state: variables in scope so far.
pub struct Checker<'a> {
    system: &'a System,
    dialect: Dialect,
    available: HashSet<VarId>,
    boolean: HashSet<VarId>,
}

fn expect(cond: bool, reason: FailReason) -> Result<(), FailReason> {
    if cond {
        Ok(())
    } else {
        Err(reason)
    }
}

/// Basic operations allowed as the right side of an inequality extension pair.
fn is_basic_op(f: &Polynomial) -> bool {
    let terms: Vec<(&Monomial, &BigRational)> = f.terms().collect();
    let is_unit_var = |m: &Monomial, c: &BigRational| m.degree() == 1 && c.is_one();
    match terms.as_slice() {
        [] => true,
        [(m, c)] => m.is_one() || m.degree() == 1 || (c.is_one() && m.degree() == 2),
        [(m1, c1), (m2, c2)] => {
            (m1.is_one() && is_unit_var(m2, c2)) || (is_unit_var(m1, c1) && is_unit_var(m2, c2))
        }
        _ => false,
    }
}

impl<'a> Checker<'a> {
    pub fn new(system: &'a System, dialect: Dialect) -> Self {
        let mut available: HashSet<VarId> = system.inputs.iter().copied().collect();
        for a in &system.axioms {
            available.extend(a.vars());
        }
        Checker {
            system,
            dialect,
            available,
            boolean: system.boolean_vars.iter().copied().collect(),
        }
    }

    fn in_scope(&self, p: &Polynomial) -> bool {
        p.terms()
            .all(|(m, _)| m.vars().all(|v| self.available.contains(&v)))
    }

    fn ring_ok(&self, p: &Polynomial) -> Result<(), FailReason> {
        expect(p.ring() == self.system.ring, FailReason::RingMismatch)
    }

    fn scalar_ok(&self, c: &BigRational) -> Result<(), FailReason> {
        expect(
            self.system.ring == Ring::Q || c.is_integer(),
            FailReason::RingMismatch,
        )
    }

    fn rule_allowed(&self, j: &Justification) -> bool {
        if j.is_inequality_rule() {
            return self.dialect.is_inequality();
        }
        if self.dialect.is_inequality() {
            return false;
        }
        match j {
            Justification::ExtDef { .. } => self.dialect.allows_extension(),
            Justification::Sqrt(_) => self.dialect.allows_sqrt(),
            Justification::Ebvp { .. } => self.dialect.allows_ebvp(),
            _ => true,
        }
    }

    /// Validates line `idx` of `lines` and updates the scope on success.
    pub fn step(&mut self, lines: &[ProofLine], idx: usize) -> Result<(), FailReason> {
        let line = &lines[idx];
        let r = &line.poly;
        let just = &line.just;
        expect(self.rule_allowed(just), FailReason::RuleNotInDialect)?;
        for p in just.premises() {
            expect(p < idx, FailReason::BadPremiseOrder)?;
        }
        self.ring_ok(r)?;
        let zero_ring = self.system.ring;
        let var = |v: VarId| Polynomial::var(zero_ring, v);
        match just {
            Justification::Axiom(i) | Justification::IneqAxiom(i) => {
                let a = self.system.axioms.get(*i).ok_or(FailReason::UnknownAxiom)?;
                expect(a == r, FailReason::IdentityMismatch)?;
            }
            Justification::BooleanAxiom(v) => {
                expect(self.boolean.contains(v), FailReason::NotBooleanVar)?;
                let x = var(*v);
                expect(*r == &(&x * &x) - &x, FailReason::IdentityMismatch)?;
            }
            Justification::ExtDef { var: y, def } => {
                self.ring_ok(def)?;
                expect(!self.available.contains(y), FailReason::NotFresh)?;
                expect(self.in_scope(def), FailReason::UndeclaredVariable)?;
                expect(*r == &var(*y) - def, FailReason::IdentityMismatch)?;
                self.available.insert(*y);
                return Ok(());
            }
            Justification::LinComb { alpha, i, beta, j } => {
                self.scalar_ok(alpha)?;
                self.scalar_ok(beta)?;
                let mut acc = lines[*i]
                    .poly
                    .scale(alpha)
                    .map_err(|_| FailReason::RingMismatch)?;
                acc.add_assign_scaled(&lines[*j].poly, beta);
                expect(acc == *r, FailReason::IdentityMismatch)?;
            }
            Justification::MulVar { var: v, i } => {
                expect(self.available.contains(v), FailReason::UndeclaredVariable)?;
                expect(
                    lines[*i].poly.mul_var(*v) == *r,
                    FailReason::IdentityMismatch,
                )?;
            }
            Justification::Sqrt(i) => {
                expect(r * r == lines[*i].poly, FailReason::IdentityMismatch)?;
            }
            Justification::Ebvp {
                premise,
                g,
                m,
                fs,
                bool_lines,
            } => {
                self.ring_ok(g)?;
                for f in fs {
                    self.ring_ok(f)?;
                }
                expect(m.is_positive(), FailReason::NonPositiveM)?;
                expect(
                    fs.len() == bool_lines.len(),
                    FailReason::MalformedBooleanWitness,
                )?;
                for (f, &k) in fs.iter().zip(bool_lines) {
                    expect(
                        lines[k].poly == &(f * f) - f,
                        FailReason::MalformedBooleanWitness,
                    )?;
                }
                let mut factor = Polynomial::constant_int(zero_ring, m.clone());
                let mut w = BigInt::one();
                for f in fs {
                    factor.add_assign_scaled(f, &BigRational::from_integer(w.clone()));
                    w <<= 1;
                }
                expect(
                    lines[*premise].poly == g * &factor,
                    FailReason::IdentityMismatch,
                )?;
                expect(*r == *g, FailReason::IdentityMismatch)?;
            }
            Justification::IneqVar(x) => {
                expect(self.boolean.contains(x), FailReason::NotBooleanVar)?;
                expect(*r == var(*x), FailReason::IdentityMismatch)?;
            }
            Justification::IneqOneMinusVar(x) => {
                expect(self.boolean.contains(x), FailReason::NotBooleanVar)?;
                expect(
                    *r == &Polynomial::one(zero_ring) - &var(*x),
                    FailReason::IdentityMismatch,
                )?;
            }
            Justification::IneqBoolSlack { var: x, dir } => {
                expect(self.boolean.contains(x), FailReason::NotBooleanVar)?;
                let xv = var(*x);
                let sq = &(&xv * &xv) - &xv;
                let expected = match dir {
                    SlackDir::SquareMinusVar => sq,
                    SlackDir::VarMinusSquare => -sq,
                };
                expect(*r == expected, FailReason::IdentityMismatch)?;
            }
            Justification::IneqSquare(z) => {
                expect(self.available.contains(z), FailReason::UndeclaredVariable)?;
                let zv = var(*z);
                expect(*r == &zv * &zv, FailReason::IdentityMismatch)?;
            }
            Justification::IneqSum(i, j) => {
                expect(
                    *r == &lines[*i].poly + &lines[*j].poly,
                    FailReason::IdentityMismatch,
                )?;
            }
            Justification::IneqProduct(i, j) => {
                expect(
                    *r == &lines[*i].poly * &lines[*j].poly,
                    FailReason::IdentityMismatch,
                )?;
            }
            Justification::IneqExtPair { var: y, def, which } => {
                self.ring_ok(def)?;
                match which {
                    PairSide::YMinusF => {
                        expect(!self.available.contains(y), FailReason::NotFresh)?;
                        expect(is_basic_op(def), FailReason::BadBasicOp)?;
                        expect(self.in_scope(def), FailReason::UndeclaredVariable)?;
                        expect(*r == &var(*y) - def, FailReason::IdentityMismatch)?;
                        self.available.insert(*y);
                        return Ok(());
                    }
                    PairSide::FMinusY => {
                        let paired = idx > 0
                            && matches!(&lines[idx - 1].just,
                                Justification::IneqExtPair { var: y0, def: d0, which: PairSide::YMinusF }
                                    if y0 == y && d0 == def);
                        expect(paired, FailReason::BadPremiseOrder)?;
                        expect(*r == def - &var(*y), FailReason::IdentityMismatch)?;
                    }
                }
            }
        }
        expect(self.in_scope(r), FailReason::UndeclaredVariable)
    }
}

/// Size of a proof: lines plus extension definitions, each pair counted once.
pub fn proof_size(p: &Proof) -> u64 {
    p.lines
        .iter()
        .map(|l| {
            let extra = match &l.just {
                Justification::ExtDef { def, .. } => def.size(),
                Justification::IneqExtPair {
                    def,
                    which: PairSide::YMinusF,
                    ..
                } => def.size(),
                _ => 0,
            };
            l.poly.size() + extra
        })
        .sum()
}

pub fn proof_degree(p: &Proof) -> u32 {
    p.lines.iter().map(|l| l.poly.degree()).max().unwrap_or(0)
}

fn refutation_end(p: &Proof) -> Option<BigRational> {
    let last = p.lines.last()?;
    let c = last.poly.as_constant()?;
    if p.dialect.is_inequality() {
        if c.is_negative() {
            Some(c)
        } else {
            None
        }
    } else if c.is_zero() {
        None
    } else if p.system.ring == Ring::Q {
        Some(BigRational::one())
    } else {
        Some(c)
    }
}

pub fn check_proof(p: &Proof) -> CheckReport {
    let mut checker = Checker::new(&p.system, p.dialect);
    let mut failure = None;
    for idx in 0..p.lines.len() {
        if let Err(reason) = checker.step(&p.lines, idx) {
            failure = Some((idx, reason));
            break;
        }
    }
    let mut constant = None;
    if failure.is_none() && p.claims_refutation {
        constant = refutation_end(p);
        if constant.is_none() {
            failure = Some((p.lines.len().saturating_sub(1), FailReason::NotARefutation));
        }
    }
    CheckReport {
        accepted: failure.is_none(),
        first_failure: failure,
        proof_size: proof_size(p),
        proof_degree: proof_degree(p),
        refutation_constant: constant,
    }
}

/// Checks line `idx` assuming lines before it are valid.
pub fn validate_step(p: &Proof, idx: usize) -> Result<(), FailReason> {
    let mut checker = Checker::new(&p.system, p.dialect);
    for l in &p.lines[..idx] {
        match &l.just {
            Justification::ExtDef { var, .. }
            | Justification::IneqExtPair {
                var,
                which: PairSide::YMinusF,
                ..
            } => {
                checker.available.insert(*var);
            }
            _ => {}
        }
    }
    checker.step(&p.lines, idx)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpotcheckReport {
    pub assignments: u64,
    pub roots: u64,
    /// (assignment bits, line index) pairs where a line fails on a root.
    pub violations: Vec<(u64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0} inputs exceed the spot-check limit {1}")]
pub struct TooManyInputs(pub usize, pub usize);

/// Evaluates every line on every Boolean root of the system; extension
/// variables take their defined values in order.
pub fn semantic_spotcheck(p: &Proof, max_inputs: usize) -> Result<SpotcheckReport, TooManyInputs> {
    let n = p.system.inputs.len();
    if n > max_inputs || n >= 63 {
        return Err(TooManyInputs(n, max_inputs));
    }
    let defs = p.ext_definitions();
    let ineq = p.dialect.is_inequality();
    let mut report = SpotcheckReport {
        assignments: 0,
        roots: 0,
        violations: Vec::new(),
    };
    for bits in 0..(1u64 << n) {
        report.assignments += 1;
        let mut env: HashMap<VarId, BigRational> = p
            .system
            .inputs
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, int((bits >> i) & 1)))
            .collect();
        for (y, q) in &defs {
            if let Ok(val) = q.eval(&env) {
                env.insert(*y, val);
            }
        }
        let holds = |f: &Polynomial| match f.eval(&env) {
            Ok(v) => {
                if ineq {
                    !v.is_negative()
                } else {
                    v.is_zero()
                }
            }
            Err(_) => false,
        };
        if !p.system.axioms.iter().all(holds) {
            continue;
        }
        report.roots += 1;
        for (idx, l) in p.lines.iter().enumerate() {
            if !holds(&l.poly) {
                report.violations.push((bits, idx));
            }
        }
    }
    Ok(report)
}
