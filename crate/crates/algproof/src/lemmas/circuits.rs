//! Circuit-level identities: gate values against the polynomials they compute,
//! and binary values of bit-blasted gates.

use std::collections::{HashMap, HashSet};

use super::gadgets::{derive_add, derive_prod};
use super::{Certificate, DeriveError, Deriver, Fragment, FragmentBuilder, LineId, Rules, Src};
use crate::algebra::{Polynomial, Registry, Ring, VarId, VarKind};
use crate::bitblast::{emit_bit_gates, val_polynomial, BitEnv, Emitter, GateBits};
use crate::circuit::{
    circuit_of_extls_proof, equational_representation_of_gates, extls_definitions, Circuit,
    ExtArena, Gate, GateRef,
};
use crate::proofs::{Justification, PairSide, Proof, SlackDir};

fn one() -> Polynomial {
    Polynomial::one(Ring::Z)
}

/// Gamma variable of every gate in an arena.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateGammas {
    pub vars: Vec<VarId>,
}

impl GateGammas {
    pub fn poly(&self, r: GateRef) -> Polynomial {
        Polynomial::var(Ring::Z, self.vars[r])
    }
}

/// Lines `γ_r - VAL(BIT(G_r))`, one per gate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BinaryValues {
    pub lines: Vec<LineId>,
}

/// Extends `bv` to cover every gate in `env`.
pub fn binary_values(
    d: &mut Deriver,
    gates: &[Gate],
    gammas: &GateGammas,
    env: &BitEnv,
    bv: &mut BinaryValues,
) -> Result<(), DeriveError> {
    #[allow(clippy::needless_range_loop)]
    for r in bv.lines.len()..env.vectors.len() {
        let gam = gammas.vars[r];
        let target = &gammas.poly(r) - &val_polynomial(&env.vectors[r]);
        let l = match (&gates[r], &env.gadgets[r]) {
            (Gate::Input(_), _) | (Gate::Const(_), _) => {
                let l = d.def_line(gam).ok_or(DeriveError::NoDefinition(gam))?;
                if *d.poly(l) != target {
                    return Err(DeriveError::Shape(l));
                }
                l
            }
            (Gate::Add(a, b), GateBits::Add(g)) => {
                let add = derive_add(d, g)?;
                let manual: Certificate = vec![
                    (one(), Src::Def(gam)),
                    (one(), Src::Line(bv.lines[*a])),
                    (one(), Src::Line(bv.lines[*b])),
                    (-one(), Src::Line(add)),
                ];
                d.derive_local(&target, manual, [])?
            }
            (Gate::Mul(a, b), GateBits::Mul(g)) => {
                let prod = derive_prod(d, g)?;
                let manual: Certificate = vec![
                    (one(), Src::Def(gam)),
                    (gammas.poly(*b), Src::Line(bv.lines[*a])),
                    (val_polynomial(&env.vectors[*a]), Src::Line(bv.lines[*b])),
                    (-one(), Src::Line(prod)),
                ];
                d.derive_local(&target, manual, [])?
            }
            _ => {
                return Err(DeriveError::Stuck(format!(
                    "gate {r} has no matching gadget"
                )))
            }
        };
        bv.lines.push(l);
    }
    Ok(())
}

/// Substitution rules for gate-value identities: gamma variables unfold to
/// their gate equations unless redirected to an already proven equality.
pub struct GateRules<'a> {
    d: &'a Deriver,
    unfold: &'a HashSet<VarId>,
    base: &'a HashMap<VarId, (Polynomial, LineId)>,
    extra: HashMap<VarId, (Polynomial, LineId)>,
}

impl Rules for GateRules<'_> {
    fn subst(&self, v: VarId) -> Option<(&Polynomial, Src)> {
        if let Some((p, l)) = self.extra.get(&v).or_else(|| self.base.get(&v)) {
            return Some((p, Src::Line(*l)));
        }
        if self.unfold.contains(&v) {
            return self.d.def(v).map(|q| (q, Src::Def(v)));
        }
        None
    }

    fn is_atom(&self, _: VarId) -> bool {
        false
    }
}

/// Equalities between gate values and extension variables.
pub struct ArenaEqualities {
    pub unfold: HashSet<VarId>,
    /// `γ_Y -> y` for extension circuits with their own output gate, and
    /// `y -> def(y)` for extension variables whose circuit is a shared leaf.
    pub redirect: HashMap<VarId, (Polynomial, LineId)>,
}

impl ArenaEqualities {
    pub fn rules<'a>(
        &'a self,
        d: &'a Deriver,
        extra: HashMap<VarId, (Polynomial, LineId)>,
    ) -> GateRules<'a> {
        GateRules {
            d,
            unfold: &self.unfold,
            base: &self.redirect,
            extra,
        }
    }
}

/// Proves `γ_{Y_y} = y` for every extension variable in definition order.
/// Extension definitions and gamma definitions must already be lines of `d`.
pub fn ext_equalities(
    d: &mut Deriver,
    arena: &ExtArena,
    defs: &[(VarId, Polynomial)],
    gammas: &GateGammas,
) -> Result<ArenaEqualities, DeriveError> {
    let mut eq = ArenaEqualities {
        unfold: gammas.vars.iter().copied().collect(),
        redirect: HashMap::new(),
    };
    let gates = arena.builder.gates();
    let mut claimed: HashSet<GateRef> = HashSet::new();
    for (y, q) in defs {
        let gate = arena.ext_gate(*y).expect("extension circuit");
        let def_line = d.def_line(*y).ok_or(DeriveError::NoDefinition(*y))?;
        let own = matches!(gates[gate], Gate::Add(..) | Gate::Mul(..)) && claimed.insert(gate);
        if !own {
            eq.redirect.insert(*y, (q.clone(), def_line));
            continue;
        }
        let yv = Polynomial::var(Ring::Z, *y);
        let target = &gammas.poly(gate) - &yv;
        let mut extra = HashMap::new();
        extra.insert(*y, (q.clone(), def_line));
        let cert = {
            let rules = eq.rules(d, extra);
            d.plan(&target, &[], &rules)?
        };
        let l = d.emit_checked(&target, &cert)?;
        eq.redirect.insert(gammas.vars[gate], (yv, l));
    }
    Ok(eq)
}

/// `γ_out - g` for a polynomial whose circuit is rooted at `out`.
pub fn poly_circuit_equality(
    d: &mut Deriver,
    eq: &ArenaEqualities,
    gammas: &GateGammas,
    out: GateRef,
    g: &Polynomial,
) -> Result<LineId, DeriveError> {
    let target = &gammas.poly(out) - g;
    let cert = {
        let rules = eq.rules(d, HashMap::new());
        d.plan(&target, &[], &rules)?
    };
    d.emit_checked(&target, &cert)
}

/// `π_l - p_l` for every line of an inequality proof.
pub fn output_equalities(
    d: &mut Deriver,
    proof: &Proof,
    line_outputs: &[GateRef],
    eq: &ArenaEqualities,
    gammas: &GateGammas,
) -> Result<Vec<LineId>, DeriveError> {
    let mut out: Vec<LineId> = Vec::with_capacity(proof.lines.len());
    for (l, line) in proof.lines.iter().enumerate() {
        let pi = gammas.poly(line_outputs[l]);
        let target = &pi - &line.poly;
        let mut manual: Certificate = Vec::new();
        let mut extra = HashMap::new();
        match &line.just {
            Justification::IneqExtPair { var, which, .. } => {
                let def = d.def_line(*var).ok_or(DeriveError::NoDefinition(*var))?;
                let sign = if *which == PairSide::YMinusF {
                    -one()
                } else {
                    one()
                };
                manual.push((sign, Src::Line(def)));
            }
            Justification::IneqBoolSlack { var, dir } => {
                let sign = if *dir == SlackDir::SquareMinusVar {
                    -one()
                } else {
                    one()
                };
                manual.push((sign, Src::Bool(*var)));
            }
            Justification::IneqSum(i, j) | Justification::IneqProduct(i, j) => {
                for &p in [i, j] {
                    extra.insert(
                        gammas.vars[line_outputs[p]],
                        (proof.lines[p].poly.clone(), out[p]),
                    );
                }
            }
            _ => {}
        }
        let cert = {
            let rules = eq.rules(d, extra);
            d.plan(&target, &manual, &rules)?
        };
        manual.extend(cert);
        out.push(d.emit_checked(&target, &manual)?);
    }
    Ok(out)
}

/// Adds `γ` definitions for gates `from..` and returns the extended gamma list.
pub fn define_gammas(d: &mut Deriver, gates: &[Gate], gammas: &mut GateGammas, reg: &mut Registry) {
    let start = gammas.vars.len();
    let mut all = gammas.vars.clone();
    for g in &gates[start..] {
        let q = crate::circuit::gate_equation(g, &all);
        let y = reg.fresh("g", VarKind::Extension);
        all.push(y);
        d.ext_def(y, q, false);
    }
    gammas.vars = all;
}

fn assume_all(
    fb: &mut FragmentBuilder,
    ext: &[(VarId, Polynomial)],
    gammas: &[(VarId, Polynomial)],
) {
    for (v, q) in ext.iter().chain(gammas) {
        fb.assume_def(*v, q, false);
    }
}

fn boolean_inputs(vars: impl IntoIterator<Item = VarId>, reg: &Registry) -> Vec<VarId> {
    let mut v: Vec<VarId> = vars
        .into_iter()
        .filter(|v| reg.kind(*v) == VarKind::Input)
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Fragment proving `π_l = p_l` for every line of an inequality proof over
/// Boolean inputs. Assumes the extension definitions and the gamma
/// definitions of the shared arena.
pub fn derive_output_equality(proof: &Proof, reg: &mut Registry) -> Result<Fragment, DeriveError> {
    let pc = circuit_of_extls_proof(proof, reg).map_err(|e| DeriveError::Stuck(e.to_string()))?;
    let defs = extls_definitions(proof);
    let eqs = equational_representation_of_gates(pc.gates(), reg);
    let mut fb = FragmentBuilder::new(proof.system.boolean_vars.clone());
    assume_all(&mut fb, &defs, &eqs);
    let gammas = GateGammas {
        vars: eqs.iter().map(|e| e.0).collect(),
    };
    let d = &mut fb.d;
    let eq = ext_equalities(d, &pc.arena, &defs, &gammas)?;
    let lines = output_equalities(d, proof, &pc.line_outputs, &eq, &gammas)?;
    Ok(fb.finish(lines))
}

/// Fragment proving `γ_out = g` for the circuit of `g` over the given
/// extension definitions.
pub fn derive_poly_circuit_equality(
    g: &Polynomial,
    defs: &[(VarId, Polynomial)],
    reg: &mut Registry,
) -> Result<Fragment, DeriveError> {
    let mut arena = ExtArena::new(defs).map_err(|e| DeriveError::Stuck(e.to_string()))?;
    let out = arena
        .polynomial(g, reg)
        .map_err(|e| DeriveError::Stuck(e.to_string()))?;
    let eqs = equational_representation_of_gates(arena.builder.gates(), reg);
    let inputs = boolean_inputs(
        g.vars()
            .into_iter()
            .chain(defs.iter().flat_map(|(_, q)| q.vars())),
        reg,
    );
    let mut fb = FragmentBuilder::new(inputs);
    assume_all(&mut fb, defs, &eqs);
    let gammas = GateGammas {
        vars: eqs.iter().map(|e| e.0).collect(),
    };
    let d = &mut fb.d;
    let eq = ext_equalities(d, &arena, defs, &gammas)?;
    let l = poly_circuit_equality(d, &eq, &gammas, out, g)?;
    Ok(fb.finish(vec![l]))
}

/// Fragment proving `γ_r = VAL(BIT(G_r))` for every gate of `c`. Assumes the
/// gamma definitions and the bit definitions; inputs are Boolean.
pub fn derive_binary_value(
    c: &Circuit,
    reg: &mut Registry,
) -> Result<(Fragment, BitEnv), DeriveError> {
    let eqs = equational_representation_of_gates(&c.gates, reg);
    let env = {
        let mut em = Emitter::new(reg);
        let mut env = BitEnv {
            vectors: Vec::new(),
            gadgets: Vec::new(),
            defs: Vec::new(),
        };
        emit_bit_gates(&mut em, &c.gates, &mut env);
        env
    };
    let inputs = boolean_inputs(
        c.gates.iter().filter_map(|g| {
            if let Gate::Input(x) = g {
                Some(*x)
            } else {
                None
            }
        }),
        reg,
    );
    let mut fb = FragmentBuilder::new(inputs);
    assume_all(&mut fb, &[], &eqs);
    for def in &env.defs {
        fb.assume_def(def.var, &def.def, true);
    }
    let gammas = GateGammas {
        vars: eqs.iter().map(|e| e.0).collect(),
    };
    let mut bv = BinaryValues::default();
    binary_values(&mut fb.d, &c.gates, &gammas, &env, &mut bv)?;
    Ok((fb.finish(bv.lines), env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proofs::{check_proof, Dialect, ProofLine, System};
    use num_bigint::BigInt;

    fn x(v: VarId) -> Polynomial {
        Polynomial::var(Ring::Z, v)
    }

    #[test]
    fn binary_value_small_circuits() {
        let mut reg = Registry::new();
        let a = reg.declare("x1", VarKind::Input).unwrap();
        let b = reg.declare("x2", VarKind::Input).unwrap();
        let circuits = vec![
            Circuit {
                gates: vec![Gate::Const(BigInt::from(5))],
                output: 0,
            },
            Circuit {
                gates: vec![
                    Gate::Input(a),
                    Gate::Const(BigInt::from(1)),
                    Gate::Add(0, 1),
                ],
                output: 2,
            },
            Circuit {
                gates: vec![Gate::Input(a), Gate::Input(b), Gate::Mul(0, 1)],
                output: 2,
            },
            Circuit {
                gates: vec![
                    Gate::Input(a),
                    Gate::Const(BigInt::from(-2)),
                    Gate::Mul(0, 1),
                    Gate::Mul(2, 2),
                ],
                output: 3,
            },
        ];
        for c in circuits {
            let (frag, _) = derive_binary_value(&c, &mut reg).unwrap();
            let rep = check_proof(&frag.to_proof());
            assert!(rep.accepted, "{:?}", rep.first_failure);
            assert_eq!(frag.conclusions.len(), c.gates.len());
        }
    }

    #[test]
    fn poly_circuit_equality_with_extension() {
        let mut reg = Registry::new();
        let a = reg.declare("x1", VarKind::Input).unwrap();
        let b = reg.declare("x2", VarKind::Input).unwrap();
        let y = reg.declare("y1", VarKind::Extension).unwrap();
        let defs = vec![(y, &x(a) * &x(b))];
        let frag = derive_poly_circuit_equality(&x(y), &defs, &mut reg).unwrap();
        assert!(check_proof(&frag.to_proof()).accepted);
        let frag =
            derive_poly_circuit_equality(&Polynomial::constant_int(Ring::Z, 4), &[], &mut reg)
                .unwrap();
        assert!(check_proof(&frag.to_proof()).accepted);
    }

    #[test]
    fn output_equality_on_small_proof() {
        let mut reg = Registry::new();
        let a = reg.declare("x", VarKind::Input).unwrap();
        let f = Polynomial::linear(Ring::Z, vec![(a, 2)], -1);
        let sys = System::new(Ring::Z, vec![a], vec![f.clone(), -f.clone()], vec![a]);
        let sq = &(&x(a) * &x(a)) - &x(a);
        let lines = vec![
            ProofLine::new(f.clone(), Justification::IneqAxiom(0)),
            ProofLine::new(-f.clone(), Justification::IneqAxiom(1)),
            ProofLine::new(&f * &-f.clone(), Justification::IneqProduct(0, 1)),
            ProofLine::new(
                sq.clone(),
                Justification::IneqBoolSlack {
                    var: a,
                    dir: SlackDir::SquareMinusVar,
                },
            ),
            ProofLine::new(&sq + &sq, Justification::IneqSum(3, 3)),
        ];
        let p = Proof::new(sys, Dialect::ExtLS, lines, false);
        let frag = derive_output_equality(&p, &mut reg).unwrap();
        let rep = check_proof(&frag.to_proof());
        assert!(rep.accepted, "{:?}", rep.first_failure);
        assert_eq!(frag.conclusions.len(), 5);
    }
}
