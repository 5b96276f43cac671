//! Divisibility audits for derivations from `M + x_1 + 2x_2 + ... + 2^{n-1}x_n`.
//!
//! For a prime `p < 2^n` pick `t ≡ -M (mod p)` with `0 ≤ t < 2^n` and set the
//! inputs to the bits of `t`. Every line derived without the EBVP rule then
//! evaluates to a multiple of `p` once extension variables are substituted in
//! definition order. The audits below check this line by line and classify
//! each prime for derivations of clause-shaped lines.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{ceil_log2, Monomial, Polynomial, Registry, Ring, VarId, VarKind};
use crate::proofs::{check_proof, proof_size, Justification, PairSide, Proof, System};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerBoundError {
    #[error("n must be at least 1")]
    ZeroBits,
    #[error("M must be positive")]
    NonPositiveM,
    #[error("axiom {0} is neither the eBVP polynomial nor a Boolean axiom")]
    ForeignAxiom(usize),
    #[error("the system has no eBVP axiom")]
    NoInstance,
    #[error("line {0} uses a rule outside the divisibility argument")]
    UncoveredRule(usize),
    #[error("proof is over Q; clear denominators first")]
    RationalRing,
    #[error("line {0} is not of the designated shape")]
    Shape(usize),
    #[error("line {0} is out of range")]
    NoSuchLine(usize),
    #[error("variable {0:?} has no designated Boolean equation")]
    MissingBooleanEquation(VarId),
    #[error("variable name clash: {0}")]
    Name(String),
}

fn string<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn strings<S: serde::Serializer, T: std::fmt::Display>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EbvpInstance {
    pub n: usize,
    pub m: BigInt,
    /// `x_1..x_n`, with `x_i` weighted `2^{i-1}`.
    pub vars: Vec<VarId>,
    pub polynomial: Polynomial,
}

fn ebvp_polynomial(m: &BigInt, vars: &[VarId]) -> Polynomial {
    let mut p = Polynomial::constant_int(Ring::Z, m.clone());
    for (i, &x) in vars.iter().enumerate() {
        p = &p + &Polynomial::var(Ring::Z, x).scale_int(&(BigInt::one() << i));
    }
    p
}

/// `M + Σ 2^{i-1} x_i` over inputs `x1..xn` (declared when missing), packaged
/// with its Boolean axioms.
pub fn gen_ebvp(
    n: usize,
    m: &BigInt,
    reg: &mut Registry,
) -> Result<(EbvpInstance, System), LowerBoundError> {
    if n == 0 {
        return Err(LowerBoundError::ZeroBits);
    }
    if !m.is_positive() {
        return Err(LowerBoundError::NonPositiveM);
    }
    let mut vars = Vec::with_capacity(n);
    for i in 1..=n {
        let name = format!("x{i}");
        let v = match reg.lookup(&name) {
            Some(v) if reg.kind(v) == VarKind::Input => v,
            Some(_) => return Err(LowerBoundError::Name(name)),
            None => reg
                .declare(&name, VarKind::Input)
                .map_err(|e| LowerBoundError::Name(e.to_string()))?,
        };
        vars.push(v);
    }
    let polynomial = ebvp_polynomial(m, &vars);
    let system = System::new(
        Ring::Z,
        vars.clone(),
        vec![polynomial.clone()],
        vars.clone(),
    );
    Ok((
        EbvpInstance {
            n,
            m: m.clone(),
            vars,
            polynomial,
        },
        system,
    ))
}

/// Reads `M + Σ 2^{i-1} x_i` back from a polynomial.
pub fn recognize_ebvp(p: &Polynomial) -> Option<EbvpInstance> {
    if p.degree() != 1 {
        return None;
    }
    let m = p.constant_term();
    if !m.is_integer() || !m.is_positive() {
        return None;
    }
    let mut by_weight: BTreeMap<u64, VarId> = BTreeMap::new();
    for (mono, c) in p.terms() {
        if mono.is_one() {
            continue;
        }
        let c = c.to_integer();
        let mag = c.magnitude();
        if !c.is_positive() || (mag & (mag - 1u32)) != Zero::zero() {
            return None;
        }
        by_weight.insert(mag.bits() - 1, mono.max_var()?);
    }
    let n = by_weight.len();
    if by_weight.keys().copied().ne(0..n as u64) {
        return None;
    }
    let vars: Vec<VarId> = by_weight.into_values().collect();
    Some(EbvpInstance {
        n,
        m: m.to_integer(),
        vars,
        polynomial: p.clone(),
    })
}

fn is_boolean_axiom(p: &Polynomial) -> bool {
    let Some(v) = p.max_var() else { return false };
    let x = Polynomial::var(p.ring(), v);
    *p == &(&x * &x) - &x
}

/// The unique eBVP axiom of a system whose other axioms are Boolean axioms.
pub fn ebvp_of_system(sys: &System) -> Result<EbvpInstance, LowerBoundError> {
    let mut found = None;
    for (i, a) in sys.axioms.iter().enumerate() {
        if is_boolean_axiom(a) {
            continue;
        }
        match recognize_ebvp(a) {
            Some(inst) if found.is_none() => found = Some(inst),
            _ => return Err(LowerBoundError::ForeignAxiom(i)),
        }
    }
    found.ok_or(LowerBoundError::NoInstance)
}

/// Values of the inputs and of every extension variable under one assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub assignment: BTreeMap<VarId, BigInt>,
    /// Extension values in definition order.
    pub ext: Vec<(VarId, BigRational)>,
    values: BTreeMap<VarId, BigRational>,
}

impl Closure {
    pub fn value(&self, v: VarId) -> Option<&BigRational> {
        self.values.get(&v)
    }

    pub fn eval(&self, p: &Polynomial) -> Option<BigRational> {
        if p.ring() == Ring::Z && self.values.values().all(|x| x.is_integer()) {
            return self.eval_integer(p).map(BigRational::from_integer);
        }
        p.eval_with(|v| self.values.get(&v).cloned()).ok()
    }

    /// Integer evaluation; terms with a zero factor are skipped without
    /// multiplying out their coefficient.
    fn eval_integer(&self, p: &Polynomial) -> Option<BigInt> {
        let mut acc = BigInt::zero();
        for (m, c) in p.terms() {
            let mut prod = Some(BigInt::one());
            for &(v, e) in m.pairs() {
                let x = self.values.get(&v)?.numer();
                prod = match prod {
                    _ if x.is_zero() => None,
                    Some(q) if !x.is_one() => Some(q * num_traits::pow(x.clone(), e as usize)),
                    other => other,
                };
            }
            if let Some(q) = prod {
                acc += c.numer() * q;
            }
        }
        Some(acc)
    }
}

/// Extension definitions of any dialect, in proof order.
pub fn definitions(proof: &Proof) -> Vec<(VarId, Polynomial)> {
    proof
        .lines
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

/// Evaluates every extension variable of `proof` in definition order.
pub fn substitute_closure(proof: &Proof, assignment: &BTreeMap<VarId, BigInt>) -> Closure {
    let mut values: BTreeMap<VarId, BigRational> = assignment
        .iter()
        .map(|(v, b)| (*v, BigRational::from_integer(b.clone())))
        .collect();
    let mut ext = Vec::new();
    for (y, q) in definitions(proof) {
        if let Ok(val) = q.eval_with(|v| values.get(&v).cloned()) {
            values.insert(y, val.clone());
            ext.push((y, val));
        }
    }
    Closure {
        assignment: assignment.clone(),
        ext,
        values,
    }
}

/// Primes below `limit` by the sieve of Eratosthenes.
pub fn primes_below(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n];
    let mut out = Vec::new();
    for i in 2..n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j < n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Least `t ≥ 0` with `t ≡ -M (mod p)` and the assignment `x_i = bit_{i-1}(t)`.
pub fn assignment_for_prime(inst: &EbvpInstance, p: u64) -> (u64, BTreeMap<VarId, BigInt>) {
    let t = (-&inst.m).mod_floor(&BigInt::from(p));
    let t: u64 = t.try_into().expect("residue below p");
    let a = inst
        .vars
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, BigInt::from((t >> i) & 1)))
        .collect();
    (t, a)
}

fn prime_set(inst: &EbvpInstance, prime_limit: u64) -> Vec<u64> {
    let cap = if inst.n >= 63 {
        u64::MAX
    } else {
        1u64 << inst.n
    };
    primes_below(cap.min(prime_limit))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Condition {
    /// Every audited line evaluates to a multiple of `p`.
    LineDivisibility,
    /// Every designated Boolean equation of `var` has a constant divisible by `p`.
    BooleanConstant {
        var: u32,
        lines: Vec<usize>,
    },
    /// A clause that evaluates to one modulo `p` has a constant divisible by `p`.
    ClauseConstant {
        line: usize,
    },
    Uncovered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    LineNotDivisible {
        line: usize,
        #[serde(serialize_with = "string")]
        value: BigRational,
    },
    Unevaluable {
        line: usize,
    },
    /// `C'(y^2 - y)` vanishes mod `p` but neither `C'` nor `y^2 - y` does.
    NotBooleanModP {
        line: usize,
        var: u32,
    },
    /// A clause evaluates to one modulo `p` but its constant is not divisible by `p`.
    ClauseConstantNotDivisible {
        line: usize,
    },
    Uncovered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeFinding {
    pub p: u64,
    pub t: u64,
    /// `b_1..b_n`.
    pub bits: Vec<u8>,
    pub condition: Condition,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstantRecord {
    pub line: usize,
    pub role: &'static str,
    #[serde(serialize_with = "string")]
    pub value: BigInt,
    pub distinct_prime_divisors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub num_primes: usize,
    pub max_distinct_prime_divisors: usize,
    /// `|P| / 2^{n/3 + 1}`.
    pub bound: f64,
    pub constants: Vec<ConstantRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub n: usize,
    #[serde(serialize_with = "string")]
    pub m: BigInt,
    pub kernel_accepted: bool,
    pub primes: Vec<PrimeFinding>,
    pub summary: AuditSummary,
}

impl AuditReport {
    pub fn violation_count(&self) -> usize {
        self.primes.iter().map(|f| f.violations.len()).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }
}

fn divides(p: u64, v: &BigRational) -> bool {
    v.is_integer() && v.to_integer().mod_floor(&BigInt::from(p)).is_zero()
}

fn distinct_prime_divisors(c: &BigInt, primes: &[u64]) -> usize {
    primes
        .iter()
        .filter(|&&p| c.mod_floor(&BigInt::from(p)).is_zero())
        .count()
}

fn summarize(
    inst: &EbvpInstance,
    primes: &[u64],
    constants: Vec<(usize, &'static str, BigInt)>,
) -> AuditSummary {
    let constants: Vec<ConstantRecord> = constants
        .into_iter()
        .map(|(line, role, value)| ConstantRecord {
            line,
            role,
            distinct_prime_divisors: distinct_prime_divisors(&value, primes),
            value,
        })
        .collect();
    AuditSummary {
        num_primes: primes.len(),
        max_distinct_prime_divisors: constants
            .iter()
            .map(|c| c.distinct_prime_divisors)
            .max()
            .unwrap_or(0),
        bound: primes.len() as f64 / 2f64.powf(inst.n as f64 / 3.0 + 1.0),
        constants,
    }
}

fn audit_preconditions(proof: &Proof) -> Result<EbvpInstance, LowerBoundError> {
    if proof.system.ring != Ring::Z {
        return Err(LowerBoundError::RationalRing);
    }
    let inst = ebvp_of_system(&proof.system)?;
    for (i, l) in proof.lines.iter().enumerate() {
        if matches!(l.just, Justification::Ebvp { .. }) || l.just.is_inequality_rule() {
            return Err(LowerBoundError::UncoveredRule(i));
        }
    }
    Ok(inst)
}

fn line_violations(proof: &Proof, closure: &Closure, p: u64) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, l) in proof.lines.iter().enumerate() {
        match closure.eval(&l.poly) {
            Some(v) if divides(p, &v) => {}
            Some(value) => out.push(Violation::LineNotDivisible { line: i, value }),
            None => out.push(Violation::Unevaluable { line: i }),
        }
    }
    out
}

fn bits_of(inst: &EbvpInstance, t: u64) -> Vec<u8> {
    (0..inst.n).map(|i| ((t >> i) & 1) as u8).collect()
}

/// Checks that every line of a derivation from an eBVP instance vanishes
/// modulo every prime below `min(2^n, prime_limit)` under the matching closure.
pub fn audit_divisibility(proof: &Proof, prime_limit: u64) -> Result<AuditReport, LowerBoundError> {
    let inst = audit_preconditions(proof)?;
    let primes = prime_set(&inst, prime_limit);
    let mut findings = Vec::with_capacity(primes.len());
    for &p in &primes {
        let (t, a) = assignment_for_prime(&inst, p);
        let closure = substitute_closure(proof, &a);
        let violations = line_violations(proof, &closure, p);
        let condition = if violations.is_empty() {
            Condition::LineDivisibility
        } else {
            Condition::Uncovered
        };
        findings.push(PrimeFinding {
            p,
            t,
            bits: bits_of(&inst, t),
            condition,
            violations,
        });
    }
    let constants = proof
        .lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            l.poly
                .as_constant()
                .filter(|c| !c.is_zero())
                .map(|c| (i, "constant-line", c.to_integer()))
        })
        .collect();
    Ok(AuditReport {
        n: inst.n,
        m: inst.m.clone(),
        kernel_accepted: check_proof(proof).accepted,
        summary: summarize(&inst, &primes, constants),
        primes: findings,
    })
}

/// `C · Π v` with every variable to the first power.
fn clause_shape(p: &Polynomial) -> Option<(BigInt, Vec<VarId>)> {
    let mut terms = p.terms();
    let (m, c) = terms.next()?;
    if terms.next().is_some() || !c.is_integer() || c.is_zero() {
        return None;
    }
    if m.pairs().iter().any(|&(_, e)| e != 1) {
        return None;
    }
    Some((c.to_integer(), m.pairs().iter().map(|&(v, _)| v).collect()))
}

/// `C' · (y^2 - y)`.
fn boolean_shape(p: &Polynomial) -> Option<(BigInt, VarId)> {
    let y = p.max_var()?;
    if p.num_terms() != 2 {
        return None;
    }
    let c = p.coefficient(&Monomial::var(y).mul_var(y));
    if !c.is_integer() || c.is_zero() {
        return None;
    }
    let x = Polynomial::var(Ring::Z, y);
    (*p == (&(&x * &x) - &x).scale_int(&c.to_integer())).then(|| (c.to_integer(), y))
}

/// Variable whose negation `v` is, when `v` is defined as `1 - u`.
fn negation_base(defs: &[(VarId, Polynomial)], v: VarId) -> Option<VarId> {
    let (_, q) = defs.iter().find(|(y, _)| *y == v)?;
    let u = q.max_var()?;
    (*q == &Polynomial::one(Ring::Z) - &Polynomial::var(Ring::Z, u)).then_some(u)
}

/// Per-prime case analysis for a derivation of clause lines `C · Π literals`
/// together with Boolean equations `C' (y^2 - y)` for the clause variables.
pub fn audit_cnf_derivation(
    proof: &Proof,
    clause_lines: &[usize],
    boolean_eq_lines: &[usize],
    prime_limit: u64,
) -> Result<AuditReport, LowerBoundError> {
    let inst = audit_preconditions(proof)?;
    let line = |i: usize| {
        proof
            .lines
            .get(i)
            .map(|l| &l.poly)
            .ok_or(LowerBoundError::NoSuchLine(i))
    };
    let mut clauses = Vec::with_capacity(clause_lines.len());
    for &i in clause_lines {
        let (c, vars) = clause_shape(line(i)?).ok_or(LowerBoundError::Shape(i))?;
        clauses.push((i, c, vars));
    }
    let mut candidates: BTreeMap<VarId, Vec<(usize, BigInt)>> = BTreeMap::new();
    for &i in boolean_eq_lines {
        let (c, y) = boolean_shape(line(i)?).ok_or(LowerBoundError::Shape(i))?;
        candidates.entry(y).or_default().push((i, c));
    }
    let defs = definitions(proof);
    let inputs: BTreeSet<VarId> = inst.vars.iter().copied().collect();
    let mut base_vars: BTreeSet<VarId> = BTreeSet::new();
    for (_, _, vars) in &clauses {
        for &v in vars {
            let u = negation_base(&defs, v).unwrap_or(v);
            if !inputs.contains(&u) {
                base_vars.insert(u);
            }
        }
    }
    for &u in &base_vars {
        if !candidates.contains_key(&u) {
            return Err(LowerBoundError::MissingBooleanEquation(u));
        }
    }

    let primes = prime_set(&inst, prime_limit);
    let bp = |p: u64| BigInt::from(p);
    let mut findings = Vec::with_capacity(primes.len());
    for &p in &primes {
        let (t, a) = assignment_for_prime(&inst, p);
        let closure = substitute_closure(proof, &a);
        let mut violations = line_violations(proof, &closure, p);
        for (y, cands) in &candidates {
            let Some(val) = closure.value(*y) else {
                continue;
            };
            for (i, c) in cands {
                let boolean = divides(p, val) || divides(p, &(val - BigRational::one()));
                if !c.mod_floor(&bp(p)).is_zero() && !boolean {
                    violations.push(Violation::NotBooleanModP { line: *i, var: y.0 });
                }
            }
        }
        let blocked = base_vars.iter().find_map(|y| {
            let cands = &candidates[y];
            cands
                .iter()
                .all(|(_, c)| c.mod_floor(&bp(p)).is_zero())
                .then(|| (*y, cands.iter().map(|x| x.0).collect()))
        });
        let condition = match blocked {
            Some((y, lines)) => Condition::BooleanConstant { var: y.0, lines },
            None => {
                let mut hit = None;
                for (i, c, vars) in &clauses {
                    let prod = vars.iter().try_fold(BigRational::one(), |acc, v| {
                        closure.value(*v).map(|x| acc * x)
                    });
                    let Some(prod) = prod else { continue };
                    if !divides(p, &(prod - BigRational::one())) {
                        continue;
                    }
                    if c.mod_floor(&bp(p)).is_zero() {
                        hit.get_or_insert(*i);
                    } else {
                        violations.push(Violation::ClauseConstantNotDivisible { line: *i });
                    }
                }
                match hit {
                    Some(line) => Condition::ClauseConstant { line },
                    None => {
                        violations.push(Violation::Uncovered);
                        Condition::Uncovered
                    }
                }
            }
        };
        findings.push(PrimeFinding {
            p,
            t,
            bits: bits_of(&inst, t),
            condition,
            violations,
        });
    }
    let mut constants: Vec<(usize, &'static str, BigInt)> = clauses
        .iter()
        .map(|(i, c, _)| (*i, "clause", c.clone()))
        .collect();
    for cands in candidates.values() {
        constants.extend(
            cands
                .iter()
                .map(|(i, c)| (*i, "boolean-equation", c.clone())),
        );
    }
    Ok(AuditReport {
        n: inst.n,
        m: inst.m.clone(),
        kernel_accepted: check_proof(proof).accepted,
        summary: summarize(&inst, &primes, constants),
        primes: findings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DenominatorReport {
    /// Denominators of linear-combination constants.
    #[serde(serialize_with = "strings")]
    pub deltas: Vec<BigInt>,
    /// Per line, the product of the denominators of its coefficients.
    #[serde(serialize_with = "strings")]
    pub l_values: Vec<BigInt>,
    /// `Σ ⌈log δ⌉ + Σ ⌈log L_i⌉`.
    pub log_sum: u64,
    pub proof_size: u64,
    /// Bit size of the linear-combination constants.
    pub rule_constant_size: u64,
    /// Whether `log_sum ≤ proof_size + rule_constant_size`.
    pub within_size: bool,
}

fn rational_size(c: &BigRational) -> u64 {
    ceil_log2(c.numer().magnitude()) + ceil_log2(c.denom().magnitude()) + 1
}

/// Denominator accounting for a proof over `Q`; trivial over `Z`.
pub fn collect_denominators(proof: &Proof) -> DenominatorReport {
    let mut deltas: BTreeSet<BigInt> = BTreeSet::new();
    let mut rule_constant_size = 0;
    let mut l_values = Vec::with_capacity(proof.lines.len());
    let rational = proof.system.ring == Ring::Q;
    for l in &proof.lines {
        if let Justification::LinComb { alpha, beta, .. } = &l.just {
            for c in [alpha, beta] {
                rule_constant_size += rational_size(c);
                if rational && !c.denom().is_one() {
                    deltas.insert(c.denom().clone());
                }
            }
        }
        let prod: BigInt = if rational {
            l.poly.terms().map(|(_, c)| c.denom().clone()).product()
        } else {
            BigInt::one()
        };
        l_values.push(prod);
    }
    let log = |b: &BigInt| ceil_log2(b.magnitude());
    let log_sum = deltas.iter().map(log).sum::<u64>() + l_values.iter().map(log).sum::<u64>();
    let size = proof_size(proof);
    DenominatorReport {
        deltas: deltas.into_iter().collect(),
        l_values,
        log_sum,
        proof_size: size,
        rule_constant_size,
        within_size: log_sum <= size + rule_constant_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proofs::{Dialect, ProofLine};

    fn v(x: VarId) -> Polynomial {
        Polynomial::var(Ring::Z, x)
    }

    #[test]
    fn gen_examples() {
        let mut reg = Registry::new();
        let (inst, sys) = gen_ebvp(3, &BigInt::from(1), &mut reg).unwrap();
        let x = &inst.vars;
        let expect = &(&(&Polynomial::constant_int(Ring::Z, 1) + &v(x[0]))
            + &v(x[1]).scale_int(&BigInt::from(2)))
            + &v(x[2]).scale_int(&BigInt::from(4));
        assert_eq!(inst.polynomial, expect);
        assert_eq!(sys.boolean_vars, inst.vars);
        assert_eq!(recognize_ebvp(&inst.polynomial).unwrap(), inst);
        assert_eq!(
            gen_ebvp(2, &BigInt::zero(), &mut reg),
            Err(LowerBoundError::NonPositiveM)
        );
        let (i2, _) = gen_ebvp(2, &BigInt::from(5), &mut reg).unwrap();
        assert_eq!(i2.polynomial.constant_term().to_integer(), BigInt::from(5));
    }

    #[test]
    fn closures_follow_definition_order() {
        let mut reg = Registry::new();
        let x1 = reg.declare("x1", VarKind::Input).unwrap();
        let x2 = reg.declare("x2", VarKind::Input).unwrap();
        let y1 = reg.declare("y1", VarKind::Extension).unwrap();
        let y2 = reg.declare("y2", VarKind::Extension).unwrap();
        let q1 = &v(x1) * &v(x2);
        let q2 = &v(y1) + &Polynomial::constant_int(Ring::Z, 3);
        let sys = System::new(Ring::Z, vec![x1, x2], vec![], vec![x1, x2]);
        let lines = vec![
            ProofLine::new(
                &v(y1) - &q1,
                Justification::ExtDef {
                    var: y1,
                    def: q1.clone(),
                },
            ),
            ProofLine::new(
                &v(y2) - &q2,
                Justification::ExtDef {
                    var: y2,
                    def: q2.clone(),
                },
            ),
        ];
        let p = Proof::new(sys, Dialect::ExtPC, lines, false);
        let at = |a: i64, b: i64| BTreeMap::from([(x1, BigInt::from(a)), (x2, BigInt::from(b))]);
        let c = substitute_closure(&p, &at(1, 1));
        assert_eq!(c.value(y1), Some(&BigRational::one()));
        let c = substitute_closure(&p, &at(0, 0));
        assert_eq!(c.value(y2), Some(&BigRational::from_integer(3.into())));
        let empty = Proof::new(p.system.clone(), Dialect::ExtPC, vec![], false);
        assert!(substitute_closure(&empty, &at(0, 1)).ext.is_empty());
    }

    #[test]
    fn sieve_matches_trial_division() {
        let primes = primes_below(1 << 16);
        let trial: Vec<u64> = (2..1u64 << 16)
            .filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0))
            .collect();
        assert_eq!(primes, trial);
    }

    #[test]
    fn residue_choice() {
        let mut reg = Registry::new();
        let (inst, _) = gen_ebvp(3, &BigInt::one(), &mut reg).unwrap();
        let (t, a) = assignment_for_prime(&inst, 5);
        assert_eq!(t, 4);
        let vals: Vec<BigInt> = inst.vars.iter().map(|x| a[x].clone()).collect();
        assert_eq!(vals, vec![BigInt::zero(), BigInt::zero(), BigInt::one()]);
        let c = substitute_closure(
            &Proof::new(
                System::new(Ring::Z, vec![], vec![], vec![]),
                Dialect::PC,
                vec![],
                false,
            ),
            &a,
        );
        assert_eq!(
            c.eval(&inst.polynomial),
            Some(BigRational::from_integer(5.into()))
        );
    }

    #[test]
    fn denominators() {
        let mut reg = Registry::new();
        let x = reg.declare("x", VarKind::Input).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        let third = BigRational::new(1.into(), 3.into());
        let f = Polynomial::var(Ring::Q, x);
        let g = &f.scale(&third).unwrap() + &Polynomial::constant(Ring::Q, half.clone()).unwrap();
        let sys = System::new(Ring::Q, vec![x], vec![f.clone(), g.clone()], vec![x]);
        let h = &f.scale(&half).unwrap() + &g;
        let lines = vec![
            ProofLine::new(f.clone(), Justification::Axiom(0)),
            ProofLine::new(g.clone(), Justification::Axiom(1)),
            ProofLine::new(
                h,
                Justification::LinComb {
                    alpha: half,
                    i: 0,
                    beta: BigRational::one(),
                    j: 1,
                },
            ),
        ];
        let p = Proof::new(sys, Dialect::PC, lines, false);
        assert!(check_proof(&p).accepted);
        let r = collect_denominators(&p);
        assert!(r.deltas.contains(&BigInt::from(2)));
        assert_eq!(r.l_values[1], BigInt::from(6));
        assert!(r.within_size);

        let mut z = p.clone();
        z.system.ring = Ring::Z;
        let r = collect_denominators(&z);
        assert!(r.deltas.is_empty());
        assert!(r.l_values.iter().all(|l| l.is_one()));
        assert_eq!(r.log_sum, 0);
    }
}
