//! Proof compilers into `ExtPCeBVP`.
//!
//! [`simulate_extls`] turns an inequality refutation of `f ≥ 0, -f ≥ 0` pairs
//! into an equational refutation of the `f` themselves: every line value is
//! bit-blasted, the binary value of each line is tied to the line polynomial,
//! every sign bit is shown to vanish, and the negative final constant yields a
//! contradiction through one EBVP step. [`eliminate_sqrt`] replaces every
//! square-root step by a bit-level argument over the circuit of its conclusion.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::algebra::{Polynomial, Registry, Ring, VarId};
use crate::bitblast::{emit_bit_gates, Bit, BitEnv, Emitter, GateBits};
use crate::circuit::{
    circuit_of_extls_proof, extls_definitions, syntactic_lengths, CircuitError, ExtArena, Gate,
    GateRef,
};
use crate::lemmas::{
    binary_values, bits_of_zero, define_gammas, ext_equalities, gadget_vars, output_equalities,
    poly_circuit_equality, prod_vars, square_part1, square_part2, zero_by_facts, BinaryValues,
    Certificate, DeriveError, Deriver, GateGammas, LineId, LogEntry, Src,
};
use crate::proofs::{check_proof, proof_size, Dialect, Justification, Proof, System};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("input proof is not accepted: {0}")]
    NotAccepted(String),
    #[error("input proof does not end in a refutation")]
    NotARefutation,
    #[error("only proofs over Z are supported")]
    RationalRing,
    #[error("expected a {expected} proof, got {got}")]
    WrongDialect { expected: Dialect, got: Dialect },
    #[error("axioms are not the two-inequality encoding of an equation system")]
    NotAnEncoding,
    #[error("input variable {0:?} is not Boolean")]
    NonBooleanInput(VarId),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Derive(#[from] DeriveError),
    #[error("translated proof rejected at line {0}: {1}")]
    OutputRejected(usize, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationArtifacts {
    pub output: Proof,
    pub size_in: u64,
    pub size_out: u64,
    /// Line ranges of the output produced by each generator.
    pub fragment_log: Vec<LogEntry>,
}

/// Inequality system `f_1, -f_1, f_2, -f_2, ...` for an equation system.
pub fn inequality_encoding(eqs: &System) -> System {
    let axioms = eqs
        .axioms
        .iter()
        .flat_map(|f| [f.clone(), -f.clone()])
        .collect();
    System::new(
        eqs.ring,
        eqs.inputs.clone(),
        axioms,
        eqs.boolean_vars.clone(),
    )
}

/// Recovers the equation system from its two-inequality encoding.
pub fn equations_of_encoding(sys: &System) -> Result<System, TranslateError> {
    if !sys.axioms.len().is_multiple_of(2) {
        return Err(TranslateError::NotAnEncoding);
    }
    let eqs = System::new(
        sys.ring,
        sys.inputs.clone(),
        sys.axioms.iter().step_by(2).cloned().collect(),
        sys.boolean_vars.clone(),
    );
    if inequality_encoding(&eqs).axioms != sys.axioms {
        return Err(TranslateError::NotAnEncoding);
    }
    Ok(eqs)
}

/// Sum over the gates of a circuit of one plus the gate's syntactic length.
pub fn syntactic_size(gates: &[Gate]) -> u64 {
    syntactic_lengths(gates).iter().map(|s| 1 + s).sum()
}

fn require_accepted(p: &Proof, dialect: Dialect) -> Result<(), TranslateError> {
    require_accepted_within(p, dialect, |d| d == dialect)
}

fn require_accepted_within(
    p: &Proof,
    dialect: Dialect,
    allowed: impl Fn(Dialect) -> bool,
) -> Result<(), TranslateError> {
    if p.system.ring != Ring::Z {
        return Err(TranslateError::RationalRing);
    }
    if !allowed(p.dialect) {
        return Err(TranslateError::WrongDialect {
            expected: dialect,
            got: p.dialect,
        });
    }
    let rep = check_proof(p);
    if let Some((l, r)) = rep.first_failure {
        return Err(TranslateError::NotAccepted(format!("line {l}: {r}")));
    }
    Ok(())
}

fn require_boolean_inputs(gates: &[Gate], boolean: &[VarId]) -> Result<(), TranslateError> {
    for g in gates {
        if let Gate::Input(x) = g {
            if !boolean.contains(x) {
                return Err(TranslateError::NonBooleanInput(*x));
            }
        }
    }
    Ok(())
}

fn finish(
    d: Deriver,
    system: System,
    claims_refutation: bool,
    size_in: u64,
) -> Result<TranslationArtifacts, TranslateError> {
    let output = Proof::new(system, Dialect::ExtPCeBVP, d.lines, claims_refutation);
    let rep = check_proof(&output);
    if let Some((l, r)) = rep.first_failure {
        return Err(TranslateError::OutputRejected(l, r.to_string()));
    }
    Ok(TranslationArtifacts {
        size_out: proof_size(&output),
        output,
        size_in,
        fragment_log: d.log,
    })
}

/// Cuts the proof right after a derived nonzero constant.
fn truncate_at(d: &mut Deriver, l: LineId) -> Result<(), TranslateError> {
    match d.poly(l).as_constant() {
        Some(c) if !c.is_zero() => {
            d.lines.truncate(l + 1);
            d.log.retain_mut(|e| {
                e.end = e.end.min(l + 1);
                e.start <= e.end
            });
            Ok(())
        }
        _ => Err(TranslateError::Derive(DeriveError::Shape(l))),
    }
}

fn reachable(gates: &[Gate], out: GateRef) -> Vec<GateRef> {
    let mut seen = vec![false; gates.len()];
    let mut stack = vec![out];
    while let Some(r) = stack.pop() {
        if std::mem::replace(&mut seen[r], true) {
            continue;
        }
        if let Gate::Add(a, b) | Gate::Mul(a, b) = gates[r] {
            stack.push(a);
            stack.push(b);
        }
    }
    (0..gates.len()).filter(|&r| seen[r]).collect()
}

fn gadget_scope(env: &BitEnv, gates: &[GateRef]) -> Vec<VarId> {
    let mut scope = Vec::new();
    for &r in gates {
        match &env.gadgets[r] {
            GateBits::Add(g) => scope.extend(gadget_vars(g)),
            GateBits::Mul(g) => scope.extend(prod_vars(g)),
            GateBits::Input | GateBits::Const => {}
        }
    }
    scope
}

fn sign_by_facts(
    d: &mut Deriver,
    scope: &[VarId],
    seeds: &[LineId],
    sign: Bit,
) -> Result<LineId, DeriveError> {
    if sign == Bit::Zero {
        return Ok(d.zero_line());
    }
    let lines = zero_by_facts(d, scope, seeds, &[sign])?;
    Ok(lines[0])
}

/// Outcome of a stage that may stop early on a derived contradiction.
enum Flow<T> {
    Go(T),
    Stop(LineId),
}

fn flow<T>(r: Result<T, DeriveError>) -> Result<Flow<T>, TranslateError> {
    match r {
        Ok(v) => Ok(Flow::Go(v)),
        Err(DeriveError::Contradiction(l)) => Ok(Flow::Stop(l)),
        Err(e) => Err(e.into()),
    }
}

/// Compiles an `ExtLS` refutation of the two-inequality encoding of an
/// equation system into an `ExtPCeBVP` refutation of the equations.
pub fn simulate_extls(
    p: &Proof,
    reg: &mut Registry,
) -> Result<TranslationArtifacts, TranslateError> {
    require_accepted(p, Dialect::ExtLS)?;
    let eqs = equations_of_encoding(&p.system)?;
    let last = p.lines.last().ok_or(TranslateError::NotARefutation)?;
    let m = match last.poly.as_constant() {
        Some(c) if c.is_negative() && c.is_integer() => -c.to_integer(),
        _ => return Err(TranslateError::NotARefutation),
    };

    let defs = extls_definitions(p);
    let pc = circuit_of_extls_proof(p, reg)?;
    let gates = pc.gates().to_vec();
    require_boolean_inputs(&gates, &eqs.boolean_vars)?;
    let size_in = syntactic_size(&gates);

    let mut d = Deriver::new(eqs.boolean_vars.iter().copied());
    d.logged("extension-definitions", |d| {
        for (y, q) in &defs {
            d.ext_def(*y, q.clone(), false);
        }
    });
    let mut gammas = GateGammas { vars: Vec::new() };
    d.logged("gate-definitions", |d| {
        define_gammas(d, &gates, &mut gammas, reg)
    });
    let env = {
        let mut em = Emitter::new(reg);
        let mut env = BitEnv {
            vectors: Vec::new(),
            gadgets: Vec::new(),
            defs: Vec::new(),
        };
        emit_bit_gates(&mut em, &gates, &mut env);
        env
    };
    d.logged("bit-definitions", |d| {
        for def in &env.defs {
            d.ext_def(def.var, def.def.clone(), true);
        }
    });

    let run = |d: &mut Deriver| -> Result<Flow<()>, TranslateError> {
        let eq = d.logged("output-equality", |d| {
            ext_equalities(d, &pc.arena, &defs, &gammas)
        })?;
        let outs = d.logged("output-equality", |d| {
            output_equalities(d, p, &pc.line_outputs, &eq, &gammas)
        })?;
        let mut bv = BinaryValues::default();
        if let Flow::Stop(l) = flow(d.logged("binary-value", |d| {
            binary_values(d, &gates, &gammas, &env, &mut bv)
        }))? {
            return Ok(Flow::Stop(l));
        }
        // `VAL(BIT(P_l)) - p_l`.
        let value_line = |d: &mut Deriver, l: usize| {
            d.lincomb(
                &BigInt::one(),
                outs[l],
                &-BigInt::one(),
                bv.lines[pc.line_outputs[l]],
            )
        };

        let mut axiom_lines: HashMap<usize, LineId> = HashMap::new();
        let mut signs: Vec<LineId> = Vec::with_capacity(p.lines.len());
        for (l, line) in p.lines.iter().enumerate() {
            let out = pc.line_outputs[l];
            let bits = &env.vectors[out];
            let step = match &line.just {
                Justification::IneqAxiom(i) => d.logged("bits-of-zero", |d| {
                    let j = i / 2;
                    let a = *axiom_lines
                        .entry(j)
                        .or_insert_with(|| d.push(eqs.axioms[j].clone(), Justification::Axiom(j)));
                    let v = value_line(d, l);
                    let sign = if i % 2 == 0 {
                        BigInt::one()
                    } else {
                        -BigInt::one()
                    };
                    let z = d.lincomb(&BigInt::one(), v, &sign, a);
                    if let Some(c) = d.poly(z).as_constant() {
                        return if c.is_zero() {
                            Ok(d.zero_line())
                        } else {
                            Err(DeriveError::Contradiction(z))
                        };
                    }
                    let res = bits_of_zero(d, bits, z)?;
                    Ok(*res.zeros.last().expect("non-empty vector"))
                }),
                Justification::IneqSquare(_) => match &env.gadgets[out] {
                    GateBits::Mul(g) => d.logged("square-lemma", |d| square_part1(d, g)),
                    _ => Err(DeriveError::Stuck(format!(
                        "line {l}: square without a product gadget"
                    ))),
                },
                Justification::IneqSum(i, j) | Justification::IneqProduct(i, j) => {
                    let scope = gadget_scope(&env, &[out]);
                    let seeds = [signs[*i], signs[*j]];
                    d.logged("sign-monotone", |d| {
                        sign_by_facts(d, &scope, &seeds, bits.sign())
                    })
                }
                _ => {
                    let scope = gadget_scope(&env, &reachable(&gates, out));
                    d.logged("sign-direct", |d| {
                        sign_by_facts(d, &scope, &[], bits.sign())
                    })
                }
            };
            match flow(step)? {
                Flow::Go(s) => signs.push(s),
                Flow::Stop(c) => return Ok(Flow::Stop(c)),
            }
        }

        // VAL(BIT(P_m)) + M with a zero sign bit is a nonnegative sum plus M.
        d.logged("final-ebvp", |d| {
            let l = p.lines.len() - 1;
            let bits = &env.vectors[pc.line_outputs[l]];
            let v = value_line(d, l);
            let top = bits.width() - 1;
            let f = d.lincomb(&BigInt::one(), v, &(BigInt::one() << top), signs[l]);
            let mut fs = Vec::with_capacity(top);
            let mut wit = Vec::with_capacity(top);
            for b in &bits.0[..top] {
                fs.push(b.poly());
                wit.push(match b {
                    Bit::Var(x) => d.bool_line(*x)?,
                    _ => d.zero_line(),
                });
            }
            d.ebvp(f, Polynomial::one(Ring::Z), m.clone(), fs, wit);
            Ok::<_, TranslateError>(())
        })?;
        Ok(Flow::Go(()))
    };
    if let Flow::Stop(l) = run(&mut d)? {
        truncate_at(&mut d, l)?;
    }
    let system = System::new(
        Ring::Z,
        eqs.inputs.clone(),
        eqs.axioms.clone(),
        eqs.boolean_vars.clone(),
    );
    finish(d, system, true, size_in)
}

/// Derives `g` from the line `g²` (index `premise` in `d`) without a square
/// root step. Returns `Stop` when the bit-level argument exposes a constant
/// contradiction instead.
fn simulate_sqrt(
    d: &mut Deriver,
    g: &Polynomial,
    premise: LineId,
    defs: &[(VarId, Polynomial)],
    boolean: &[VarId],
    reg: &mut Registry,
) -> Result<Flow<LineId>, TranslateError> {
    if let Some(c) = g.as_constant() {
        return Ok(if c.is_zero() {
            Flow::Go(d.lincomb(&BigInt::zero(), premise, &BigInt::zero(), premise))
        } else {
            Flow::Stop(premise)
        });
    }
    let mut arena = ExtArena::new(defs)?;
    let out = arena.polynomial(g, reg)?;
    let sq = arena.builder.mul(out, out);
    let gates = arena.builder.gates().to_vec();
    require_boolean_inputs(&gates, boolean)?;

    let mut gammas = GateGammas { vars: Vec::new() };
    d.logged("gate-definitions", |d| {
        define_gammas(d, &gates, &mut gammas, reg)
    });
    let env = {
        let mut em = Emitter::new(reg);
        let mut env = BitEnv {
            vectors: Vec::new(),
            gadgets: Vec::new(),
            defs: Vec::new(),
        };
        emit_bit_gates(&mut em, &gates, &mut env);
        env
    };
    d.logged("bit-definitions", |d| {
        for def in &env.defs {
            d.ext_def(def.var, def.def.clone(), true);
        }
    });

    let eq_line = d.logged("poly-circuit-equality", |d| {
        let eq = ext_equalities(d, &arena, defs, &gammas)?;
        poly_circuit_equality(d, &eq, &gammas, out, g)
    })?;
    let gam_out = gammas.poly(out);
    let square_line = d.logged("poly-circuit-equality", |d| {
        // γ_sq - g² = def(γ_sq) + γ_out (γ_out - g) + g (γ_out - g).
        let target = &gammas.poly(sq) - &(g * g);
        let manual: Certificate = vec![
            (Polynomial::one(Ring::Z), Src::Def(gammas.vars[sq])),
            (gam_out.clone(), Src::Line(eq_line)),
            (g.clone(), Src::Line(eq_line)),
        ];
        let t = d.derive_local(&target, manual, [])?;
        Ok::<_, DeriveError>(d.lincomb(&BigInt::one(), t, &BigInt::one(), premise))
    })?;
    let mut bv = BinaryValues::default();
    if let Flow::Stop(l) = flow(d.logged("binary-value", |d| {
        binary_values(d, &gates, &gammas, &env, &mut bv)
    }))? {
        return Ok(Flow::Stop(l));
    }
    let val_sq = d.lincomb(&BigInt::one(), square_line, &-BigInt::one(), bv.lines[sq]);
    let zeros = match flow(d.logged("bits-of-zero", |d| {
        bits_of_zero(d, &env.vectors[sq], val_sq)
    }))? {
        Flow::Go(z) => z.zeros,
        Flow::Stop(l) => return Ok(Flow::Stop(l)),
    };
    let GateBits::Mul(prod) = &env.gadgets[sq] else {
        return Err(DeriveError::Stuck("square gate without a product gadget".into()).into());
    };
    let r_zeros = match flow(d.logged("square-lemma", |d| square_part2(d, prod, &zeros)))? {
        Flow::Go(z) => z,
        Flow::Stop(l) => return Ok(Flow::Stop(l)),
    };
    // g = VAL(BIT(G)) + (γ_out - VAL) - (γ_out - g), with every bit zero.
    let line = d.logged("sqrt-conclusion", |d| {
        let w = prod.y.width();
        let mut cert: Certificate = Vec::with_capacity(w + 2);
        for (i, &z) in r_zeros.iter().enumerate() {
            let mut c = BigInt::one() << i;
            if i + 1 == w {
                c = -c;
            }
            cert.push((Polynomial::constant_int(Ring::Z, c), Src::Line(z)));
        }
        debug_assert_eq!(prod.y, env.vectors[out].padded(w));
        cert.push((Polynomial::one(Ring::Z), Src::Line(bv.lines[out])));
        cert.push((-Polynomial::one(Ring::Z), Src::Line(eq_line)));
        d.emit_checked(g, &cert)
    })?;
    Ok(Flow::Go(line))
}

/// Removes every square-root step from an equational proof; the result is
/// tagged `ExtPCeBVP`.
pub fn eliminate_sqrt(
    p: &Proof,
    reg: &mut Registry,
) -> Result<TranslationArtifacts, TranslateError> {
    // Every equational dialect is contained in ExtPCSqrtEBVP.
    require_accepted_within(p, Dialect::ExtPCSqrtEBVP, |d| !d.is_inequality())?;
    let size_in = p
        .lines
        .iter()
        .map(|l| {
            let defs: Vec<(VarId, Polynomial)> = Vec::new();
            let mut arena = ExtArena::new(&defs).expect("empty");
            arena
                .builder
                .polynomial(&l.poly, &mut |b, v| Ok(b.input(v)))
                .map(|_| syntactic_size(arena.builder.gates()))
                .unwrap_or(0)
        })
        .sum();
    let has_sqrt = p
        .lines
        .iter()
        .any(|l| matches!(l.just, Justification::Sqrt(_)));
    if !has_sqrt {
        let output = Proof::new(
            p.system.clone(),
            Dialect::ExtPCeBVP,
            p.lines.clone(),
            p.claims_refutation,
        );
        return Ok(TranslationArtifacts {
            size_out: proof_size(&output),
            output,
            size_in,
            fragment_log: Vec::new(),
        });
    }

    let boolean = p.system.boolean_vars.clone();
    let mut d = Deriver::new(boolean.iter().copied());
    let mut map: Vec<LineId> = Vec::with_capacity(p.lines.len());
    let mut defs: Vec<(VarId, Polynomial)> = Vec::new();
    let mut claims = p.claims_refutation;
    for line in &p.lines {
        let l = match &line.just {
            Justification::Sqrt(i) => {
                match simulate_sqrt(&mut d, &line.poly, map[*i], &defs, &boolean, reg)? {
                    Flow::Go(l) => l,
                    Flow::Stop(c) => {
                        truncate_at(&mut d, c)?;
                        claims = true;
                        break;
                    }
                }
            }
            Justification::ExtDef { var, def } => {
                defs.push((*var, def.clone()));
                d.ext_def(*var, def.clone(), false)
            }
            Justification::BooleanAxiom(v) => {
                let l = d.push(line.poly.clone(), line.just.clone());
                d.register_bool(*v, l);
                l
            }
            other => {
                let just = other.map_premises(&mut |i| map[i]);
                d.push(line.poly.clone(), just)
            }
        };
        map.push(l);
    }
    finish(d, p.system.clone(), claims, size_in)
}
