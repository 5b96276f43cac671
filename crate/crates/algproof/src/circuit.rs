//! Algebraic circuits over the integers and their use as representations of
//! polynomials, extension variables and whole inequality proofs.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{ceil_log2, int, Monomial, Polynomial, Registry, Ring, VarId, VarKind};
use crate::proofs::{Justification, Proof};

pub type GateRef = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Input(VarId),
    Const(BigInt),
    Add(GateRef, GateRef),
    Mul(GateRef, GateRef),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("gate {0} references a later gate")]
    NotTopological(usize),
    #[error("output gate {0} out of range")]
    BadOutput(usize),
    #[error("rational constant in circuit")]
    RationalConstant,
    #[error("extension variable {0:?} used before its definition")]
    ForwardReference(VarId),
    #[error("variable {0:?} is neither an input nor a defined extension variable")]
    UndefinedVariable(VarId),
    #[error("variable {0:?} unassigned")]
    Unassigned(VarId),
    #[error("malformed proof: {0}")]
    MalformedProof(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub gates: Vec<Gate>,
    pub output: GateRef,
}

impl Circuit {
    pub fn validate(&self) -> Result<(), CircuitError> {
        for (i, g) in self.gates.iter().enumerate() {
            if let Gate::Add(a, b) | Gate::Mul(a, b) = *g {
                if a >= i || b >= i {
                    return Err(CircuitError::NotTopological(i));
                }
            }
        }
        if self.output >= self.gates.len() {
            return Err(CircuitError::BadOutput(self.output));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Integer value of every gate under the given input values.
    pub fn eval_gates<F>(&self, mut value: F) -> Result<Vec<BigInt>, CircuitError>
    where
        F: FnMut(VarId) -> Option<BigInt>,
    {
        eval_gates(&self.gates, &mut value)
    }

    pub fn eval<F>(&self, value: F) -> Result<BigInt, CircuitError>
    where
        F: FnMut(VarId) -> Option<BigInt>,
    {
        Ok(self.eval_gates(value)?.swap_remove(self.output))
    }

    /// Expands the output into a polynomial; exponential in multiplicative depth.
    pub fn to_polynomial(&self) -> Polynomial {
        let mut polys: Vec<Polynomial> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let p = match g {
                Gate::Input(v) => Polynomial::var(Ring::Z, *v),
                Gate::Const(c) => Polynomial::constant_int(Ring::Z, c.clone()),
                Gate::Add(a, b) => &polys[*a] + &polys[*b],
                Gate::Mul(a, b) => &polys[*a] * &polys[*b],
            };
            polys.push(p);
        }
        polys.swap_remove(self.output)
    }
}

pub(crate) fn eval_gates<F>(gates: &[Gate], value: &mut F) -> Result<Vec<BigInt>, CircuitError>
where
    F: FnMut(VarId) -> Option<BigInt>,
{
    let mut out: Vec<BigInt> = Vec::with_capacity(gates.len());
    for g in gates {
        let v = match g {
            Gate::Input(v) => value(*v).ok_or(CircuitError::Unassigned(*v))?,
            Gate::Const(c) => c.clone(),
            Gate::Add(a, b) => &out[*a] + &out[*b],
            Gate::Mul(a, b) => &out[*a] * &out[*b],
        };
        out.push(v);
    }
    Ok(out)
}

/// Per-gate syntactic length. Inputs count as one bit, `Const 0` as one bit.
pub fn syntactic_lengths(gates: &[Gate]) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(gates.len());
    for g in gates {
        let s = match g {
            Gate::Input(_) => 1,
            Gate::Const(c) if c.is_zero() => 1,
            Gate::Const(c) => ceil_log2(c.magnitude()),
            Gate::Add(a, b) => out[*a].max(out[*b]) + 1,
            Gate::Mul(a, b) => out[*a] + out[*b] + 3,
        };
        out.push(s);
    }
    out
}

pub fn syntactic_length(c: &Circuit) -> u64 {
    syntactic_lengths(&c.gates)[c.output]
}

/// Append-only gate arena. Inputs and constants are shared.
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    inputs: HashMap<VarId, GateRef>,
    consts: HashMap<BigInt, GateRef>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn push(&mut self, g: Gate) -> GateRef {
        self.gates.push(g);
        self.gates.len() - 1
    }

    pub fn input(&mut self, v: VarId) -> GateRef {
        if let Some(&r) = self.inputs.get(&v) {
            return r;
        }
        let r = self.push(Gate::Input(v));
        self.inputs.insert(v, r);
        r
    }

    pub fn constant(&mut self, c: BigInt) -> GateRef {
        if let Some(&r) = self.consts.get(&c) {
            return r;
        }
        let r = self.push(Gate::Const(c.clone()));
        self.consts.insert(c, r);
        r
    }

    pub fn add(&mut self, a: GateRef, b: GateRef) -> GateRef {
        self.push(Gate::Add(a, b))
    }

    pub fn mul(&mut self, a: GateRef, b: GateRef) -> GateRef {
        self.push(Gate::Mul(a, b))
    }

    /// Term-list scheme: terms from the highest monomial down, each monomial
    /// by repeated multiplication, a non-unit coefficient multiplied last,
    /// terms summed left to right.
    pub fn polynomial<F>(&mut self, f: &Polynomial, leaf: &mut F) -> Result<GateRef, CircuitError>
    where
        F: FnMut(&mut Self, VarId) -> Result<GateRef, CircuitError>,
    {
        let mut acc: Option<GateRef> = None;
        for (m, c) in f.terms_desc() {
            if !c.is_integer() {
                return Err(CircuitError::RationalConstant);
            }
            let c = c.to_integer();
            let term = if m.is_one() {
                self.constant(c)
            } else {
                let mut mono: Option<GateRef> = None;
                for &(v, e) in m.pairs() {
                    for _ in 0..e {
                        let g = leaf(self, v)?;
                        mono = Some(match mono {
                            None => g,
                            Some(prev) => self.mul(prev, g),
                        });
                    }
                }
                let mono = mono.expect("non-constant monomial");
                if c.is_one() {
                    mono
                } else {
                    let k = self.constant(c);
                    self.mul(mono, k)
                }
            };
            acc = Some(match acc {
                None => term,
                Some(prev) => self.add(prev, term),
            });
        }
        Ok(match acc {
            Some(g) => g,
            None => self.constant(BigInt::zero()),
        })
    }

    pub fn finish(self, output: GateRef) -> Circuit {
        Circuit {
            gates: self.gates,
            output,
        }
    }

    pub fn snapshot(&self, output: GateRef) -> Circuit {
        Circuit {
            gates: self.gates[..=output].to_vec(),
            output,
        }
    }
}

pub fn circuit_of_axiom(f: &Polynomial) -> Result<Circuit, CircuitError> {
    let mut b = CircuitBuilder::new();
    let out = b.polynomial(f, &mut |b, v| Ok(b.input(v)))?;
    Ok(b.finish(out))
}

/// Shared arena holding the circuits `Y_j` of extension variables plus any
/// further circuits built on top of them.
#[derive(Debug, Clone)]
pub struct ExtArena {
    pub builder: CircuitBuilder,
    ext: HashMap<VarId, GateRef>,
}

impl ExtArena {
    /// Builds `Y_1..Y_m` in order; each definition may only use inputs and
    /// earlier extension variables.
    pub fn new(defs: &[(VarId, Polynomial)]) -> Result<Self, CircuitError> {
        let defined: HashMap<VarId, usize> =
            defs.iter().enumerate().map(|(i, (v, _))| (*v, i)).collect();
        let mut arena = ExtArena {
            builder: CircuitBuilder::new(),
            ext: HashMap::new(),
        };
        for (j, (y, q)) in defs.iter().enumerate() {
            for v in q.vars() {
                if let Some(&k) = defined.get(&v) {
                    if k >= j {
                        return Err(CircuitError::ForwardReference(v));
                    }
                }
            }
            let ext = &arena.ext;
            let g = arena.builder.polynomial(q, &mut |b, v| {
                Ok(ext.get(&v).copied().unwrap_or_else(|| b.input(v)))
            })?;
            arena.ext.insert(*y, g);
        }
        Ok(arena)
    }

    pub fn ext_gate(&self, y: VarId) -> Option<GateRef> {
        self.ext.get(&y).copied()
    }

    /// Leaf for variable `v`: its `Y` circuit, or an input gate for inputs.
    pub fn leaf(&mut self, v: VarId, reg: &Registry) -> Result<GateRef, CircuitError> {
        if let Some(g) = self.ext_gate(v) {
            return Ok(g);
        }
        if reg.contains(v) && reg.kind(v) == VarKind::Input {
            Ok(self.builder.input(v))
        } else {
            Err(CircuitError::UndefinedVariable(v))
        }
    }

    pub fn polynomial(&mut self, g: &Polynomial, reg: &Registry) -> Result<GateRef, CircuitError> {
        let ext = &self.ext;
        self.builder.polynomial(g, &mut |b, v| {
            if let Some(&g) = ext.get(&v) {
                Ok(g)
            } else if reg.contains(v) && reg.kind(v) == VarKind::Input {
                Ok(b.input(v))
            } else {
                Err(CircuitError::UndefinedVariable(v))
            }
        })
    }
}

pub fn circuit_of_extension_vars(
    defs: &[(VarId, Polynomial)],
) -> Result<HashMap<VarId, Circuit>, CircuitError> {
    let arena = ExtArena::new(defs)?;
    Ok(defs
        .iter()
        .map(|(y, _)| {
            let g = arena.ext[y];
            (*y, arena.builder.snapshot(g))
        })
        .collect())
}

pub fn circuit_of_polynomial(
    g: &Polynomial,
    defs: &[(VarId, Polynomial)],
    reg: &Registry,
) -> Result<Circuit, CircuitError> {
    let mut arena = ExtArena::new(defs)?;
    let out = arena.polynomial(g, reg)?;
    Ok(arena.builder.finish(out))
}

/// Circuits `P_1..P_m` of an inequality proof, sharing one arena.
#[derive(Debug, Clone)]
pub struct ProofCircuit {
    pub arena: ExtArena,
    pub line_outputs: Vec<GateRef>,
}

impl ProofCircuit {
    pub fn gates(&self) -> &[Gate] {
        self.arena.builder.gates()
    }

    pub fn line_circuit(&self, l: usize) -> Circuit {
        self.arena.builder.snapshot(self.line_outputs[l])
    }
}

/// Extension definitions introduced by the `y - f` side of each pair, in order.
pub fn extls_definitions(proof: &Proof) -> Vec<(VarId, Polynomial)> {
    proof
        .lines
        .iter()
        .filter_map(|line| match &line.just {
            Justification::IneqExtPair {
                var,
                def,
                which: crate::proofs::PairSide::YMinusF,
            } => Some((*var, def.clone())),
            _ => None,
        })
        .collect()
}

pub fn circuit_of_extls_proof(proof: &Proof, reg: &Registry) -> Result<ProofCircuit, CircuitError> {
    let defs = extls_definitions(proof);
    let mut arena = ExtArena::new(&defs)?;
    let mut outs: Vec<GateRef> = Vec::with_capacity(proof.lines.len());
    let zero = BigInt::zero();
    for (l, line) in proof.lines.iter().enumerate() {
        let premise = |i: usize| -> Result<GateRef, CircuitError> {
            if i < l {
                Ok(outs[i])
            } else {
                Err(CircuitError::MalformedProof(format!(
                    "line {l} uses later line {i}"
                )))
            }
        };
        let g = match &line.just {
            Justification::IneqAxiom(_) => arena
                .builder
                .polynomial(&line.poly, &mut |b, v| Ok(b.input(v)))?,
            Justification::IneqVar(x) => arena.builder.input(*x),
            Justification::IneqOneMinusVar(x) => {
                let f = Polynomial::linear(Ring::Z, vec![(*x, -1)], 1);
                arena.builder.polynomial(&f, &mut |b, v| Ok(b.input(v)))?
            }
            Justification::IneqSquare(z) => {
                let q = arena.leaf(*z, reg)?;
                arena.builder.mul(q, q)
            }
            Justification::IneqSum(i, j) => {
                let (a, b) = (premise(*i)?, premise(*j)?);
                arena.builder.add(a, b)
            }
            Justification::IneqProduct(i, j) => {
                let (a, b) = (premise(*i)?, premise(*j)?);
                arena.builder.mul(a, b)
            }
            Justification::IneqExtPair { .. } | Justification::IneqBoolSlack { .. } => {
                arena.builder.constant(zero.clone())
            }
            other => {
                return Err(CircuitError::MalformedProof(format!(
                    "line {l}: rule {} is not an inequality rule",
                    other.tag()
                )))
            }
        };
        outs.push(g);
    }
    Ok(ProofCircuit {
        arena,
        line_outputs: outs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationalRep {
    pub equations: Vec<(VarId, Polynomial)>,
    pub output_var: VarId,
}

/// Defining polynomial of gamma for one gate, given the gamma variables so far.
pub fn gate_equation(g: &Gate, gammas: &[VarId]) -> Polynomial {
    let v = |r: GateRef| Polynomial::var(Ring::Z, gammas[r]);
    match g {
        Gate::Input(x) => Polynomial::var(Ring::Z, *x),
        Gate::Const(c) => Polynomial::constant_int(Ring::Z, c.clone()),
        Gate::Add(a, b) => &v(*a) + &v(*b),
        Gate::Mul(a, b) => {
            if a == b {
                Polynomial::term(Ring::Z, Monomial::from_pairs([(gammas[*a], 2)]), int(1)).unwrap()
            } else {
                &v(*a) * &v(*b)
            }
        }
    }
}

/// One fresh extension variable per gate, in gate order.
pub fn equational_representation_of_gates(
    gates: &[Gate],
    reg: &mut Registry,
) -> Vec<(VarId, Polynomial)> {
    let mut gammas: Vec<VarId> = Vec::with_capacity(gates.len());
    let mut eqs = Vec::with_capacity(gates.len());
    for g in gates {
        let q = gate_equation(g, &gammas);
        let y = reg.fresh("g", VarKind::Extension);
        gammas.push(y);
        eqs.push((y, q));
    }
    eqs
}

pub fn equational_representation(c: &Circuit, reg: &mut Registry) -> EquationalRep {
    let equations = equational_representation_of_gates(&c.gates, reg);
    let output_var = equations[c.output].0;
    EquationalRep {
        equations,
        output_var,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proofs::{Dialect, PairSide, ProofLine, System};

    fn setup(n: usize) -> (Registry, Vec<VarId>) {
        let mut reg = Registry::new();
        let v = (0..n)
            .map(|i| reg.declare(&format!("x{}", i + 1), VarKind::Input).unwrap())
            .collect();
        (reg, v)
    }

    fn x(v: VarId) -> Polynomial {
        Polynomial::var(Ring::Z, v)
    }

    fn k(n: i64) -> Polynomial {
        Polynomial::constant_int(Ring::Z, n)
    }

    fn konst(n: i64) -> Gate {
        Gate::Const(BigInt::from(n))
    }

    #[test]
    fn syntactic_length_examples() {
        let c = Circuit {
            gates: vec![konst(5)],
            output: 0,
        };
        assert_eq!(syntactic_length(&c), 3);
        // Add over (3, 4): constants 5 (len 3) and 9 (len 4).
        let add = Circuit {
            gates: vec![konst(5), konst(9), Gate::Add(0, 1)],
            output: 2,
        };
        assert_eq!(syntactic_length(&add), 5);
        let mul = Circuit {
            gates: vec![konst(5), konst(9), Gate::Mul(0, 1)],
            output: 2,
        };
        assert_eq!(syntactic_length(&mul), 10);
        assert_eq!(
            syntactic_lengths(&[konst(0), konst(1), konst(-1), konst(-8)]),
            vec![1, 0, 0, 3]
        );
    }

    #[test]
    fn axiom_scheme() {
        let (_, v) = setup(1);
        let c = circuit_of_axiom(&x(v[0])).unwrap();
        assert_eq!(c.gates, vec![Gate::Input(v[0])]);
        let f = Polynomial::linear(Ring::Z, vec![(v[0], 2)], 1);
        let c = circuit_of_axiom(&f).unwrap();
        assert_eq!(
            c.gates,
            vec![
                Gate::Input(v[0]),
                konst(2),
                Gate::Mul(0, 1),
                konst(1),
                Gate::Add(2, 3)
            ]
        );
        assert_eq!(c.output, 4);
        let z = circuit_of_axiom(&Polynomial::zero(Ring::Z)).unwrap();
        assert_eq!(z.gates, vec![konst(0)]);
        let half =
            Polynomial::constant(Ring::Q, num_rational::BigRational::new(1.into(), 2.into()))
                .unwrap();
        assert_eq!(circuit_of_axiom(&half), Err(CircuitError::RationalConstant));
    }

    #[test]
    fn equational_examples() {
        let (mut reg, v) = setup(1);
        let c = Circuit {
            gates: vec![Gate::Input(v[0]), konst(1), Gate::Add(0, 1)],
            output: 2,
        };
        let rep = equational_representation(&c, &mut reg);
        let g: Vec<VarId> = rep.equations.iter().map(|e| e.0).collect();
        assert_eq!(rep.equations[0].1, x(v[0]));
        assert_eq!(rep.equations[1].1, k(1));
        assert_eq!(rep.equations[2].1, x(g[0]) + x(g[1]));
        assert_eq!(rep.output_var, g[2]);

        let sq = Circuit {
            gates: vec![Gate::Input(v[0]), Gate::Mul(0, 0)],
            output: 1,
        };
        let rep = equational_representation(&sq, &mut reg);
        let g0 = rep.equations[0].0;
        assert_eq!(rep.equations[1].1, &x(g0) * &x(g0));
        assert_eq!(reg.name(g0), "g4");
    }

    #[test]
    fn extension_circuits_share() {
        let (mut reg, v) = setup(2);
        let y1 = reg.declare("y1", VarKind::Extension).unwrap();
        let y2 = reg.declare("y2", VarKind::Extension).unwrap();
        let defs = vec![(y1, &x(v[0]) * &x(v[1])), (y2, x(y1) + k(1))];
        let circuits = circuit_of_extension_vars(&defs).unwrap();
        assert_eq!(
            circuits[&y1].gates,
            vec![Gate::Input(v[0]), Gate::Input(v[1]), Gate::Mul(0, 1)]
        );
        let c2 = &circuits[&y2];
        assert_eq!(c2.gates[c2.output], Gate::Add(2, 3));
        assert_eq!(c2.gates[3], konst(1));
        assert!(circuit_of_extension_vars(&[]).unwrap().is_empty());
        let bad = vec![(y2, x(y1)), (y1, x(v[0]))];
        assert_eq!(
            circuit_of_extension_vars(&bad),
            Err(CircuitError::ForwardReference(y1))
        );

        let g = circuit_of_polynomial(&(x(y1) + k(1)), &defs, &reg).unwrap();
        assert_eq!(g.gates[g.output], Gate::Add(2, 3));
        let g = circuit_of_polynomial(&(&x(y1) * &x(y1)), &defs, &reg).unwrap();
        assert_eq!(g.gates[g.output], Gate::Mul(2, 2));
        let g = circuit_of_polynomial(&x(v[0]), &[], &reg).unwrap();
        assert_eq!(g.gates, vec![Gate::Input(v[0])]);
        let undefined = reg.declare("y3", VarKind::Extension).unwrap();
        assert!(matches!(
            circuit_of_polynomial(&x(undefined), &defs, &reg),
            Err(CircuitError::UndefinedVariable(_))
        ));
    }

    #[test]
    fn extls_proof_cases() {
        let (mut reg, v) = setup(2);
        let y = reg.declare("y", VarKind::Extension).unwrap();
        let prod = &x(v[0]) * &x(v[1]);
        let sys = System::new(Ring::Z, v.clone(), vec![], v.clone());
        let lines = vec![
            ProofLine::new(
                &x(v[0]) * &x(v[0]) - x(v[0]),
                Justification::IneqBoolSlack {
                    var: v[0],
                    dir: crate::proofs::SlackDir::SquareMinusVar,
                },
            ),
            ProofLine::new(
                x(y) - prod.clone(),
                Justification::IneqExtPair {
                    var: y,
                    def: prod.clone(),
                    which: PairSide::YMinusF,
                },
            ),
            ProofLine::new(&x(y) * &x(y), Justification::IneqSquare(y)),
            ProofLine::new(x(v[1]), Justification::IneqVar(v[1])),
            ProofLine::new(&x(y) * &x(y) + x(v[1]), Justification::IneqSum(2, 3)),
        ];
        let proof = Proof::new(sys, Dialect::ExtLS, lines, false);
        let pc = circuit_of_extls_proof(&proof, &reg).unwrap();
        let gates = pc.gates();
        assert_eq!(gates[pc.line_outputs[0]], konst(0));
        assert_eq!(gates[pc.line_outputs[1]], konst(0));
        let yg = pc.arena.ext_gate(y).unwrap();
        assert_eq!(gates[pc.line_outputs[2]], Gate::Mul(yg, yg));
        assert_eq!(
            gates[pc.line_outputs[4]],
            Gate::Add(pc.line_outputs[2], pc.line_outputs[3])
        );
        for a in 0..2i64 {
            for b in 0..2i64 {
                let val = |w: VarId| Some(BigInt::from(if w == v[0] { a } else { b }));
                let vals = eval_gates(gates, &mut { val }).unwrap();
                assert_eq!(vals[pc.line_outputs[4]], BigInt::from(a * b + b));
            }
        }
    }

    #[test]
    fn fidelity_and_bit_growth_exhaustive() {
        let (_, v) = setup(3);
        let polys = vec![
            Polynomial::linear(Ring::Z, vec![(v[0], 3), (v[1], -5)], 7),
            &(&x(v[0]) * &x(v[1])) * &x(v[2]) - x(v[2]).scale_int(&BigInt::from(4)),
            (&x(v[0]) - &k(2)).pow(3),
        ];
        for f in &polys {
            let c = circuit_of_axiom(f).unwrap();
            let lens = syntactic_lengths(&c.gates);
            for bits in 0..8u32 {
                let val = |w: VarId| Some(BigInt::from((bits >> w.0) & 1));
                let vals = c.eval_gates(val).unwrap();
                let expect = f.eval_with(|w| Some(int((bits >> w.0) & 1))).unwrap();
                assert_eq!(int(vals[c.output].clone()), expect);
                for (i, val) in vals.iter().enumerate() {
                    assert!(val.magnitude().bits() <= lens[i] + 1, "gate {i}");
                }
            }
        }
    }
}
