use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::process::ExitCode;
use std::time::Instant;

use algproof::algebra::{int, size_of, Monomial, Polynomial, Registry, Ring, VarId, VarKind};
use algproof::bitblast::{emit_bit, eval_defs, vec_value, Bit, BitVec, GateBits};
use algproof::circuit::{syntactic_length, syntactic_lengths, Circuit, Gate};
use algproof::corpus::{self, CorpusEntry};
use algproof::lemmas::{
    derive_binary_value, derive_bits_of_zero, derive_sign_monotone, derive_square_lemma, Fragment,
};
use algproof::lowerbound::{
    assignment_for_prime, audit_cnf_derivation, audit_divisibility, definitions, ebvp_of_system,
    Condition, Violation,
};
use algproof::proofs::{check_proof, validate_step, Dialect, Justification, Proof};
use algproof::translate::{eliminate_sqrt, equations_of_encoding, simulate_extls};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Size constant in `size_out <= C * size_in^3`.
const SIZE_CONSTANT: u64 = 4;
const MUTATIONS_PER_PROOF: usize = 100;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget_secs: f64,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "kernel validity",
            budget_secs: 10.0,
            run: kernel_validity,
        },
        Criterion {
            id: 2,
            name: "bit-blasting semantics",
            budget_secs: 60.0,
            run: bitblast_semantics,
        },
        Criterion {
            id: 3,
            name: "lemma generators self-verify",
            budget_secs: 120.0,
            run: lemma_generators,
        },
        Criterion {
            id: 4,
            name: "Ext-LS simulation",
            budget_secs: 120.0,
            run: extls_simulation,
        },
        Criterion {
            id: 5,
            name: "square-root elimination",
            budget_secs: 120.0,
            run: sqrt_elimination,
        },
        Criterion {
            id: 6,
            name: "divisibility audits",
            budget_secs: 60.0,
            run: divisibility_audits,
        },
        Criterion {
            id: 7,
            name: "measures golden table",
            budget_secs: 10.0,
            run: measures,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let res = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match res {
            Ok(d) if secs <= c.budget_secs => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {}: {} {} ({}; {:.2}s of {}s)",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            secs,
            c.budget_secs
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn var(v: VarId) -> Polynomial {
    Polynomial::var(Ring::Z, v)
}

// ---------------------------------------------------------------- criterion 1

fn mutate(poly: &Polynomial, rng: &mut ChaCha8Rng) -> Polynomial {
    let monos: Vec<Monomial> = poly.terms().map(|(m, _)| m.clone()).collect();
    let pick = rng.gen_range(0..=monos.len());
    let m = monos.get(pick).cloned().unwrap_or_else(Monomial::one);
    let mut delta = 0i64;
    while delta == 0 {
        delta = rng.gen_range(-5..=5);
    }
    let bump = Polynomial::term(poly.ring(), m, int(delta)).expect("integer coefficient");
    poly.try_add(&bump).expect("same ring")
}

fn mutation_rejected(p: &Proof, idx: usize) -> bool {
    validate_step(p, idx).is_err() || !check_proof(p).accepted
}

fn kernel_validity() -> Outcome {
    let entries = corpus::corpus();
    ensure(entries.len() >= 10, || {
        format!("corpus has {} proofs", entries.len())
    })?;
    let dialects: BTreeSet<&str> = entries.iter().map(|e| e.proof.dialect.as_str()).collect();
    for d in [
        Dialect::PC,
        Dialect::ExtPC,
        Dialect::ExtPCSqrt,
        Dialect::ExtPCeBVP,
        Dialect::ExtLS,
    ] {
        ensure(dialects.contains(d.as_str()), || {
            format!("no corpus proof in {}", d.as_str())
        })?;
    }
    let two_x = corpus::sample("two-x-minus-one").map_err(|e| e.to_string())?;
    let x = two_x.proof.system.inputs[0];
    let f = Polynomial::linear(Ring::Z, vec![(x, 2)], -1);
    ensure(
        two_x.proof.system.axioms.contains(&f) && two_x.proof.dialect == Dialect::ExtLS,
        || "two-x-minus-one is not an Ext-LS proof from 2x - 1".into(),
    )?;
    let sq = corpus::sample("sqrt-square").map_err(|e| e.to_string())?;
    ensure(
        sq.proof
            .lines
            .iter()
            .any(|l| matches!(l.just, Justification::Sqrt(_))),
        || "sqrt-square uses no square-root step".into(),
    )?;

    let mut mutants = 0;
    for (k, e) in entries.iter().enumerate() {
        let rep = check_proof(&e.proof);
        ensure(rep.accepted, || {
            format!("{} rejected: {:?}", e.name, rep.first_failure)
        })?;
        ensure(
            !e.proof.claims_refutation || rep.refutation_constant.is_some(),
            || format!("{} claims a refutation without a constant", e.name),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(0xA1 + k as u64);
        let mut done = 0;
        while done < MUTATIONS_PER_PROOF {
            let idx = rng.gen_range(0..e.proof.lines.len());
            let line = &e.proof.lines[idx];
            let poly = mutate(&line.poly, &mut rng);
            if matches!(line.just, Justification::Sqrt(_)) && poly == -line.poly.clone() {
                continue;
            }
            let mut p = e.proof.clone();
            p.lines[idx].poly = poly;
            ensure(mutation_rejected(&p, idx), || {
                format!("{}: mutation of line {idx} accepted", e.name)
            })?;
            done += 1;
        }
        mutants += done;
    }
    Ok(format!(
        "{} proofs over {} dialects accepted; {mutants} mutants rejected",
        entries.len(),
        dialects.len()
    ))
}

// ---------------------------------------------------------------- criterion 2

const LEAF_CONSTANTS: [i64; 5] = [-2, -1, 0, 1, 3];

fn leaves(inputs: &[VarId]) -> Vec<Gate> {
    inputs
        .iter()
        .map(|&x| Gate::Input(x))
        .chain(LEAF_CONSTANTS.iter().map(|&c| Gate::Const(BigInt::from(c))))
        .collect()
}

/// Every gate list of length `1..=max_gates`; the output is the last gate.
fn all_circuits(inputs: &[VarId], max_gates: usize) -> Vec<Circuit> {
    let leaves = leaves(inputs);
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Gate>> = vec![Vec::new()];
    for _ in 0..max_gates {
        let mut next = Vec::new();
        for gates in &frontier {
            let n = gates.len();
            let mut choices = leaves.clone();
            for a in 0..n {
                for b in 0..n {
                    choices.push(Gate::Add(a, b));
                    choices.push(Gate::Mul(a, b));
                }
            }
            for g in choices {
                let mut gs = gates.clone();
                gs.push(g);
                out.push(Circuit {
                    output: gs.len() - 1,
                    gates: gs.clone(),
                });
                next.push(gs);
            }
        }
        frontier = next;
    }
    out
}

fn random_circuit(rng: &mut ChaCha8Rng, inputs: &[VarId]) -> Circuit {
    let mut gates: Vec<Gate> = inputs.iter().map(|&x| Gate::Input(x)).collect();
    for _ in 0..rng.gen_range(1..=2) {
        gates.push(Gate::Const(BigInt::from(rng.gen_range(-9i64..=9))));
    }
    for _ in 0..rng.gen_range(2..=7) {
        let a = rng.gen_range(0..gates.len());
        let b = rng.gen_range(0..gates.len());
        gates.push(if rng.gen_bool(0.5) {
            Gate::Add(a, b)
        } else {
            Gate::Mul(a, b)
        });
    }
    Circuit {
        output: gates.len() - 1,
        gates,
    }
}

fn assignments(vars: &[VarId]) -> impl Iterator<Item = HashMap<VarId, BigInt>> + '_ {
    (0u64..1 << vars.len()).map(move |t| {
        vars.iter()
            .enumerate()
            .map(|(i, &v)| (v, BigInt::from((t >> i) & 1)))
            .collect()
    })
}

fn width_laws(env: &algproof::bitblast::BitEnv, gates: &[Gate]) -> Result<(), String> {
    for (r, g) in gates.iter().enumerate() {
        let w = |i: usize| env.vectors[i].width();
        let out = w(r);
        match (g, &env.gadgets[r]) {
            (Gate::Input(_), GateBits::Input) => ensure(out == 2, || format!("input width {out}"))?,
            (Gate::Const(_), GateBits::Const) => {}
            (Gate::Add(a, b), GateBits::Add(add)) => {
                let k = w(*a).max(w(*b)) - 1;
                ensure(out == k + 2 && add.out.width() == out, || {
                    format!("ADD of width {} gave {out}", k + 1)
                })?
            }
            (Gate::Mul(a, b), GateBits::Mul(prd)) => {
                let k = w(*a).max(w(*b)) - 1;
                let abs_ok = prd.abs_y.out.width() == k + 2 && prd.abs_z().out.width() == k + 2;
                let plus_ok = prd.prod_plus.out.width() == 2 * (k + 2);
                ensure(abs_ok && plus_ok && out == k + k + 5, || {
                    format!("PRD of width {} gave {out}", k + 1)
                })?
            }
            _ => return Err(format!("gate {r} has a mismatched gadget record")),
        }
    }
    Ok(())
}

/// Bit-blasts `c` and compares every gate against direct evaluation.
fn bitblast_matches(c: &Circuit, inputs: &[VarId], reg: &mut Registry) -> Result<(), String> {
    let (env, _) = emit_bit(&c.gates, c.output, reg);
    width_laws(&env, &c.gates)?;
    let defs: Vec<(VarId, Polynomial)> = env.defs.iter().map(|d| (d.var, d.def.clone())).collect();
    for asg in assignments(inputs) {
        let expect = c
            .eval_gates(|v| asg.get(&v).cloned())
            .map_err(|e| e.to_string())?;
        let vals = eval_defs(&defs, &asg).map_err(|e| e.to_string())?;
        for d in &env.defs {
            let b = &vals[&d.var];
            ensure(b.is_zero() || b.is_one(), || {
                format!("bit {} took value {b}", d.var.0)
            })?;
        }
        for (r, want) in expect.iter().enumerate() {
            let got = vec_value(&env.vectors[r], &vals);
            ensure(got.as_ref() == Some(want), || {
                format!("gate {r} of {:?}: VAL {:?} != {want}", c.gates, got)
            })?;
        }
    }
    Ok(())
}

fn declare_inputs(reg: &mut Registry, n: usize) -> Vec<VarId> {
    (1..=n)
        .map(|i| reg.declare(&format!("x{i}"), VarKind::Input).unwrap())
        .collect()
}

fn bitblast_semantics() -> Outcome {
    let mut reg = Registry::new();
    let inputs = declare_inputs(&mut reg, 3);
    let small = all_circuits(&inputs, 3);
    for c in &small {
        bitblast_matches(c, &inputs, &mut reg)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xB17);
    let mut random = 0;
    let mut max_len = 0;
    while random < 20 {
        let mut reg = Registry::new();
        let n = rng.gen_range(1..=4);
        let inputs = declare_inputs(&mut reg, n);
        let c = random_circuit(&mut rng, &inputs);
        let len = syntactic_length(&c);
        if len > 40 {
            continue;
        }
        max_len = max_len.max(len);
        bitblast_matches(&c, &inputs, &mut reg)?;
        random += 1;
    }
    Ok(format!(
        "{} exhaustive circuits and {random} random circuits (max syntactic length {max_len})",
        small.len()
    ))
}

// ---------------------------------------------------------------- criterion 3

/// Checks that whenever the assumptions of `frag` hold under a Boolean
/// assignment of its free variables, every conclusion evaluates to zero.
/// Returns the number of satisfying assignments.
fn closure_holds(frag: &Fragment, reg: &Registry) -> Result<usize, String> {
    let mut defs: Vec<(VarId, Polynomial)> = Vec::new();
    let mut defined = BTreeSet::new();
    let mut constraints = Vec::new();
    for a in &frag.assumptions {
        let head = a.vars().into_iter().rev().find(|&v| {
            reg.kind(v) != VarKind::Input
                && !defined.contains(&v)
                && a.coefficient(&Monomial::var(v)).is_one()
                && !(&var(v) - a).vars().contains(&v)
        });
        match head {
            Some(v) => {
                defs.push((v, &var(v) - a));
                defined.insert(v);
            }
            None => constraints.push(a.clone()),
        }
    }
    for (v, q) in definitions(&frag.to_proof()) {
        if defined.insert(v) {
            defs.push((v, q));
        }
    }
    let conclusions = frag.conclusion_polys();
    let free: Vec<VarId> = frag
        .assumptions
        .iter()
        .chain(conclusions.iter().copied())
        .flat_map(|p| p.vars())
        .chain(defs.iter().flat_map(|(_, q)| q.vars()))
        .filter(|v| !defined.contains(v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    ensure(free.len() <= 16, || {
        format!("{} free variables", free.len())
    })?;
    let mut satisfied = 0;
    for asg in assignments(&free) {
        let vals = eval_defs(&defs, &asg).map_err(|e| e.to_string())?;
        let eval = |p: &Polynomial| {
            p.eval_with(|v| vals.get(&v).map(|x| int(x.clone())))
                .map_err(|e| e.to_string())
        };
        for (v, _) in &defs {
            if reg.kind(*v) == VarKind::Bit {
                let b = &vals[v];
                ensure(b.is_zero() || b.is_one(), || {
                    format!("bit {} took value {b}", reg.name(*v))
                })?;
            }
        }
        let mut holds = true;
        for c in &constraints {
            holds &= eval(c)?.is_zero();
        }
        if !holds {
            continue;
        }
        satisfied += 1;
        for c in &conclusions {
            let v = eval(c)?;
            ensure(v.is_zero(), || {
                format!("conclusion {} evaluates to {v}", c.display(reg))
            })?;
        }
    }
    ensure(satisfied > 0, || "assumptions are unsatisfiable".into())?;
    Ok(satisfied)
}

fn verify_fragment(what: &str, frag: &Fragment, reg: &Registry) -> Result<(), String> {
    let rep = check_proof(&frag.to_proof());
    ensure(rep.accepted, || {
        format!("{what}: kernel rejected {:?}", rep.first_failure)
    })?;
    ensure(!frag.conclusions.is_empty(), || {
        format!("{what}: no conclusions")
    })?;
    closure_holds(frag, reg).map_err(|e| format!("{what}: {e}"))?;
    Ok(())
}

fn operand(reg: &mut Registry, prefix: &str, w: usize) -> BitVec {
    BitVec(
        (0..w)
            .map(|i| {
                Bit::Var(
                    reg.declare(&format!("{prefix}{i}"), VarKind::Input)
                        .unwrap(),
                )
            })
            .collect(),
    )
}

fn operand_widths_at_most(c: &Circuit, reg: &mut Registry, limit: usize) -> bool {
    let (env, _) = emit_bit(&c.gates, c.output, reg);
    c.gates.iter().all(|g| match g {
        Gate::Add(a, b) | Gate::Mul(a, b) => {
            env.vectors[*a].width() <= limit && env.vectors[*b].width() <= limit
        }
        _ => true,
    })
}

fn lemma_generators() -> Outcome {
    let mut count = 0;
    for w in 1..=4 {
        let mut reg = Registry::new();
        let r = operand(&mut reg, "r", w);
        let (frag, _) = derive_bits_of_zero(&r).map_err(|e| e.to_string())?;
        verify_fragment(&format!("bits-of-zero w={w}"), &frag, &reg)?;
        for b in &r.0 {
            ensure(frag.conclusion_polys().contains(&&b.poly()), || {
                format!("bits-of-zero w={w} misses a bit")
            })?;
        }
        for with_zero in [false, true] {
            let mut reg = Registry::new();
            let r = operand(&mut reg, "r", w);
            let frag = derive_square_lemma(&r, with_zero, &mut reg).map_err(|e| e.to_string())?;
            verify_fragment(&format!("square w={w} zero={with_zero}"), &frag, &reg)?;
        }
        for w2 in 1..=4 {
            let mut reg = Registry::new();
            let r = operand(&mut reg, "r", w);
            let s = operand(&mut reg, "s", w2);
            let frag = derive_sign_monotone(&r, &s, &mut reg).map_err(|e| e.to_string())?;
            verify_fragment(&format!("sign-monotone {w}x{w2}"), &frag, &reg)?;
            count += 1;
        }
        count += 3;
    }

    let mut reg = Registry::new();
    let inputs = declare_inputs(&mut reg, 2);
    let mut pool: Vec<Circuit> = all_circuits(&inputs, 3)
        .into_iter()
        .filter(|c| c.gates.len() == 3)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut picked = 0;
    while picked < 24 && !pool.is_empty() {
        let c = pool.swap_remove(rng.gen_range(0..pool.len()));
        let mut probe = reg.clone();
        if !operand_widths_at_most(&c, &mut probe, 4) {
            continue;
        }
        let mut local = reg.clone();
        let (frag, _) = derive_binary_value(&c, &mut local).map_err(|e| e.to_string())?;
        ensure(frag.conclusions.len() == c.gates.len(), || {
            format!("binary value of {:?}: wrong conclusion count", c.gates)
        })?;
        verify_fragment(&format!("binary value {:?}", c.gates), &frag, &local)?;
        picked += 1;
    }
    ensure(picked == 24, || {
        format!("only {picked} binary-value circuits")
    })?;
    Ok(format!(
        "{} fragments accepted and closure-checked",
        count + picked
    ))
}

// ---------------------------------------------------------------- criterion 4

fn extls_simulation() -> Outcome {
    let mut ratios = Vec::new();
    for e in corpus::corpus() {
        if e.proof.dialect != Dialect::ExtLS || !e.proof.claims_refutation {
            continue;
        }
        let mut reg = e.registry.clone();
        let art = simulate_extls(&e.proof, &mut reg).map_err(|err| format!("{}: {err}", e.name))?;
        let rep = check_proof(&art.output);
        ensure(
            rep.accepted && art.output.dialect == Dialect::ExtPCeBVP,
            || format!("{}: output rejected {:?}", e.name, rep.first_failure),
        )?;
        ensure(
            art.output.claims_refutation && rep.refutation_constant.is_some(),
            || format!("{}: output is not a refutation", e.name),
        )?;
        let eqs = equations_of_encoding(&e.proof.system).map_err(|err| err.to_string())?;
        ensure(art.output.system.axioms == eqs.axioms, || {
            format!("{}: output refutes a different system", e.name)
        })?;
        let bound = SIZE_CONSTANT * art.size_in.pow(3);
        ensure(art.size_out <= bound, || {
            format!("{}: size {} above {bound}", e.name, art.size_out)
        })?;
        ratios.push(format!(
            "{} {}->{} ({:.2})",
            e.name,
            art.size_in,
            art.size_out,
            art.size_out as f64 / art.size_in.pow(3) as f64
        ));
    }
    ensure(!ratios.is_empty(), || "no Ext-LS refutations".into())?;
    Ok(format!("C = {SIZE_CONSTANT}: {}", ratios.join(", ")))
}

// ---------------------------------------------------------------- criterion 5

fn has_sqrt(p: &Proof) -> bool {
    p.lines
        .iter()
        .any(|l| matches!(l.just, Justification::Sqrt(_)))
}

fn sqrt_elimination() -> Outcome {
    let (mut with, mut without) = (0, 0);
    for e in corpus::corpus() {
        if e.proof.dialect.is_inequality() || e.proof.ring() != Ring::Z {
            continue;
        }
        let mut reg = e.registry.clone();
        let art = eliminate_sqrt(&e.proof, &mut reg).map_err(|err| format!("{}: {err}", e.name))?;
        let out = &art.output;
        ensure(!has_sqrt(out), || format!("{}: square root left", e.name))?;
        let rep = check_proof(out);
        ensure(rep.accepted, || {
            format!("{}: output rejected {:?}", e.name, rep.first_failure)
        })?;
        ensure(
            out.claims_refutation == e.proof.claims_refutation
                && out.system == e.proof.system
                && out.dialect == Dialect::ExtPCeBVP,
            || format!("{}: system or claim changed", e.name),
        )?;
        if has_sqrt(&e.proof) {
            with += 1;
        } else {
            ensure(out.lines == e.proof.lines, || {
                format!("{}: sqrt-free proof was rewritten", e.name)
            })?;
            without += 1;
        }
    }
    ensure(with >= 3, || {
        format!("only {with} proofs with square roots")
    })?;
    Ok(format!(
        "{with} proofs rewritten, {without} sqrt-free proofs unchanged"
    ))
}

// ---------------------------------------------------------------- criterion 6

fn is_prime(p: u64) -> bool {
    p >= 2
        && (2..)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

/// Recomputes every line value from scratch in exact rational arithmetic.
fn cross_check(proof: &Proof, a: &BTreeMap<VarId, BigInt>, p: u64) -> Result<(), String> {
    let mut vals: HashMap<VarId, BigRational> =
        a.iter().map(|(v, b)| (*v, int(b.clone()))).collect();
    for l in &proof.lines {
        if let Justification::ExtDef { var, .. } = &l.just {
            let q = &self::var(*var) - &l.poly;
            let v = q
                .eval_with(|w| vals.get(&w).cloned())
                .map_err(|e| e.to_string())?;
            vals.insert(*var, v);
        }
    }
    for (i, l) in proof.lines.iter().enumerate() {
        let v = l
            .poly
            .eval_with(|w| vals.get(&w).cloned())
            .map_err(|e| e.to_string())?;
        ensure(
            v.is_integer() && v.to_integer().is_multiple_of(&BigInt::from(p)),
            || format!("line {i} is {v}, not a multiple of {p}"),
        )?;
    }
    Ok(())
}

fn audit_ebvp8(e: &CorpusEntry) -> Result<usize, String> {
    let rep = audit_divisibility(&e.proof, 256).map_err(|err| err.to_string())?;
    ensure(rep.kernel_accepted && rep.n == 8, || {
        format!("{}: bad audit preconditions", e.name)
    })?;
    ensure(rep.is_clean(), || {
        format!("{}: {} violations", e.name, rep.violation_count())
    })?;
    let oracle: Vec<u64> = (2..256).filter(|&p| is_prime(p)).collect();
    let audited: Vec<u64> = rep.primes.iter().map(|f| f.p).collect();
    ensure(audited == oracle, || {
        format!("{}: audited prime set differs", e.name)
    })?;
    let inst = ebvp_of_system(&e.proof.system).map_err(|err| err.to_string())?;
    for f in &rep.primes {
        ensure(f.t < 256 && ((&inst.m + f.t) % f.p).is_zero(), || {
            format!("{}: p = {} does not divide M + t", e.name, f.p)
        })?;
    }
    for &p in &[2, 3, 127, 251] {
        let (_, a) = assignment_for_prime(&inst, p);
        cross_check(&e.proof, &a, p).map_err(|err| format!("{}: {err}", e.name))?;
    }
    Ok(rep.primes.len())
}

fn divisibility_audits() -> Outcome {
    let mut primes = 0;
    for name in ["ebvp8-m1", "ebvp8-m5"] {
        let e = corpus::sample(name).map_err(|err| err.to_string())?;
        primes += audit_ebvp8(&e)?;
    }

    let e = corpus::sample("ebvp8-m1").map_err(|err| err.to_string())?;
    let mut bad = e.proof.clone();
    let last = bad.lines.len() - 1;
    bad.lines[last].poly = &bad.lines[last].poly + &Polynomial::one(Ring::Z);
    let rep = audit_divisibility(&bad, 256).map_err(|err| err.to_string())?;
    let caught = rep.primes.iter().all(|f| {
        f.violations
            .iter()
            .any(|v| matches!(v, Violation::LineNotDivisible { line, .. } if *line == last))
    });
    ensure(!rep.kernel_accepted && caught, || {
        "corrupted constant was not detected at every prime".into()
    })?;

    let e = corpus::sample("ebvp4-cnf-y-not-y").map_err(|err| err.to_string())?;
    let rep = audit_cnf_derivation(&e.proof, &e.clause_lines, &e.boolean_eq_lines, 16)
        .map_err(|err| err.to_string())?;
    let oracle: Vec<u64> = (2..16).filter(|&p| is_prime(p)).collect();
    let audited: Vec<u64> = rep.primes.iter().map(|f| f.p).collect();
    ensure(audited == oracle, || "CNF audit prime set differs".into())?;
    let uncovered = rep
        .primes
        .iter()
        .filter(|f| f.condition == Condition::Uncovered || !f.violations.is_empty())
        .count();
    ensure(uncovered == 0 && rep.kernel_accepted, || {
        format!("{uncovered} uncovered primes in the CNF audit")
    })?;
    Ok(format!(
        "{primes} prime audits clean, corruption caught, {} CNF primes covered",
        rep.primes.len()
    ))
}

// ---------------------------------------------------------------- criterion 7

fn measures() -> Outcome {
    let mut reg = Registry::new();
    let x = reg.declare("x", VarKind::Input).unwrap();
    let y = reg.declare("y", VarKind::Input).unwrap();
    let k = |c: i64| Gate::Const(BigInt::from(c));
    let half = Polynomial::term(
        Ring::Q,
        Monomial::var(x),
        BigRational::new(BigInt::one(), BigInt::from(2)),
    )
    .unwrap();
    let sizes: [(&str, Polynomial, u64); 5] = [
        ("3x + 2", Polynomial::linear(Ring::Z, vec![(x, 3)], 2), 5),
        ("-1", Polynomial::constant_int(Ring::Z, -1), 1),
        (
            "xy - x + 7",
            &(&(&var(x) * &var(y)) - &var(x)) + &Polynomial::constant_int(Ring::Z, 7),
            6,
        ),
        ("x/2 over Q", half, 2),
        (
            "1024 x^2",
            (&var(x) * &var(x)).scale_int(&BigInt::from(1024)),
            11,
        ),
    ];
    let lengths: [(&str, Vec<Gate>, u64); 5] = [
        ("Const 5", vec![k(5)], 3),
        ("Mul(3,4)", vec![k(5), k(9), Gate::Mul(0, 1)], 10),
        ("Const 0", vec![k(0)], 1),
        ("Add(x, 5)", vec![Gate::Input(x), k(5), Gate::Add(0, 1)], 4),
        (
            "Mul(x, y)",
            vec![Gate::Input(x), Gate::Input(y), Gate::Mul(0, 1)],
            5,
        ),
    ];
    for (name, p, want) in &sizes {
        let got = size_of(p);
        ensure(got == *want, || format!("size of {name}: {got} != {want}"))?;
    }
    for (name, gates, want) in &lengths {
        let c = Circuit {
            output: gates.len() - 1,
            gates: gates.clone(),
        };
        let got = syntactic_length(&c);
        ensure(
            got == *want && syntactic_lengths(gates)[c.output] == got,
            || format!("syntactic length of {name}: {got} != {want}"),
        )?;
    }
    Ok(format!("{} golden values", sizes.len() + lengths.len()))
}
