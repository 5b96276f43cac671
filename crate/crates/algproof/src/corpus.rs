//! Handcrafted proofs used by the tests and the `gen` command.
//!
//! Every entry carries its own registry so that variable names survive
//! serialization. Entries derived from an eBVP system also record which lines
//! are clauses and which are Boolean equations, for the CNF audit.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{Monomial, Polynomial, Registry, Ring, VarId, VarKind};
use crate::lemmas::{normal_form, DeriveError, Deriver, LineId, LocalRules, Src};
use crate::lowerbound::{gen_ebvp, EbvpInstance, LowerBoundError};
use crate::proofs::{Dialect, Justification, PairSide, Proof, ProofLine, SlackDir, System};
use crate::translate::inequality_encoding;

/// Largest eBVP width the interpolating generator accepts.
pub const MAX_EBVP_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("unknown sample `{name}`; known samples: {known}", name = .0, known = SAMPLE_NAMES.join(", "))]
    UnknownSample(String),
    #[error("eBVP width {0} exceeds {MAX_EBVP_BITS}")]
    TooWide(usize),
    #[error("target is not a multiple of the eBVP polynomial on the cube")]
    NotAMultiple,
    #[error(transparent)]
    Instance(#[from] LowerBoundError),
    #[error(transparent)]
    Derive(#[from] DeriveError),
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub registry: Registry,
    pub proof: Proof,
    /// Lines of the shape `C · Π literals`.
    pub clause_lines: Vec<usize>,
    /// Lines of the shape `C' (y^2 - y)`.
    pub boolean_eq_lines: Vec<usize>,
}

impl CorpusEntry {
    fn plain(name: &'static str, registry: Registry, proof: Proof) -> Self {
        CorpusEntry {
            name,
            registry,
            proof,
            clause_lines: Vec::new(),
            boolean_eq_lines: Vec::new(),
        }
    }

    pub fn is_ebvp_derived(&self) -> bool {
        self.name.starts_with("ebvp")
    }
}

pub const SAMPLE_NAMES: [&str; 14] = [
    "pc-product",
    "extpc-xor",
    "sqrt-square",
    "sqrt-extension",
    "ebvp-direct",
    "sqrt-ebvp",
    "two-x-minus-one",
    "ls-constant-three",
    "ls-square-extension",
    "ebvp8-m1",
    "ebvp8-m5",
    "ebvp4-cnf-y-not-y",
    "ebvp2-cnf-cells",
    "q-halves",
];

pub fn sample(name: &str) -> Result<CorpusEntry, CorpusError> {
    match name {
        "pc-product" => Ok(pc_product()),
        "extpc-xor" => Ok(extpc_xor()),
        "sqrt-square" => Ok(sqrt_square()),
        "sqrt-extension" => Ok(sqrt_extension()),
        "ebvp-direct" => Ok(ebvp_direct()),
        "sqrt-ebvp" => Ok(sqrt_ebvp()),
        "two-x-minus-one" => Ok(two_x_minus_one()),
        "ls-constant-three" => Ok(ls_constant_three()),
        "ls-square-extension" => Ok(ls_square_extension()),
        "ebvp8-m1" => ebvp_sample("ebvp8-m1", 8, 1),
        "ebvp8-m5" => ebvp_sample("ebvp8-m5", 8, 5),
        "ebvp4-cnf-y-not-y" => cnf_y_not_y(),
        "ebvp2-cnf-cells" => cnf_cells(),
        "q-halves" => Ok(q_halves()),
        other => Err(CorpusError::UnknownSample(other.to_string())),
    }
}

pub fn corpus() -> Vec<CorpusEntry> {
    SAMPLE_NAMES
        .iter()
        .map(|n| sample(n).expect("corpus samples build"))
        .collect()
}

fn int(n: i64) -> Polynomial {
    Polynomial::constant_int(Ring::Z, n)
}

fn var(v: VarId) -> Polynomial {
    Polynomial::var(Ring::Z, v)
}

fn lc(a: i64, i: usize, b: i64, j: usize) -> Justification {
    Justification::LinComb {
        alpha: BigRational::from_integer(a.into()),
        i,
        beta: BigRational::from_integer(b.into()),
        j,
    }
}

fn inputs(reg: &mut Registry, names: &[&str]) -> Vec<VarId> {
    names
        .iter()
        .map(|n| reg.declare(n, VarKind::Input).expect("fresh registry"))
        .collect()
}

/// Fills in line polynomials for equational steps; `Sqrt` steps take their
/// conclusions from `roots` in order.
fn equational_lines(
    sys: &System,
    steps: Vec<Justification>,
    roots: Vec<Polynomial>,
) -> Vec<ProofLine> {
    let mut roots = roots.into_iter();
    let mut lines: Vec<ProofLine> = Vec::new();
    for j in steps {
        let poly = match &j {
            Justification::Axiom(i) => sys.axioms[*i].clone(),
            Justification::BooleanAxiom(x) => &(&var(*x) * &var(*x)) - &var(*x),
            Justification::ExtDef { var: y, def } => &var(*y) - def,
            Justification::MulVar { var: x, i } => lines[*i].poly.mul_var(*x),
            Justification::LinComb { alpha, i, beta, j } => {
                let mut p = lines[*i].poly.scale(alpha).expect("integral");
                p.add_assign_scaled(&lines[*j].poly, beta);
                p
            }
            Justification::Sqrt(_) => roots.next().expect("a root per step"),
            other => panic!("not an equational step: {other:?}"),
        };
        lines.push(ProofLine::new(poly, j));
    }
    lines
}

fn ineq_lines(sys: &System, steps: Vec<Justification>) -> Vec<ProofLine> {
    let mut lines: Vec<ProofLine> = Vec::new();
    for j in steps {
        let poly = match &j {
            Justification::IneqAxiom(i) => sys.axioms[*i].clone(),
            Justification::IneqVar(x) => var(*x),
            Justification::IneqOneMinusVar(x) => &int(1) - &var(*x),
            Justification::IneqBoolSlack { var: x, dir } => {
                let s = &(&var(*x) * &var(*x)) - &var(*x);
                match dir {
                    SlackDir::SquareMinusVar => s,
                    SlackDir::VarMinusSquare => -s,
                }
            }
            Justification::IneqSquare(z) => &var(*z) * &var(*z),
            Justification::IneqSum(i, k) => &lines[*i].poly + &lines[*k].poly,
            Justification::IneqProduct(i, k) => &lines[*i].poly * &lines[*k].poly,
            Justification::IneqExtPair { var: y, def, which } => match which {
                PairSide::YMinusF => &var(*y) - def,
                PairSide::FMinusY => def - &var(*y),
            },
            other => panic!("not an inequality step: {other:?}"),
        };
        lines.push(ProofLine::new(poly, j));
    }
    lines
}

fn pc_product() -> CorpusEntry {
    let mut reg = Registry::new();
    let v = inputs(&mut reg, &["x", "y"]);
    let (x, y) = (v[0], v[1]);
    let sys = System::new(
        Ring::Z,
        vec![x, y],
        vec![&(&var(x) * &var(y)) - &int(1), var(x)],
        vec![x, y],
    );
    let lines = equational_lines(
        &sys,
        vec![
            Justification::Axiom(0),
            Justification::Axiom(1),
            Justification::MulVar { var: y, i: 1 },
            lc(1, 0, -1, 2),
        ],
        vec![],
    );
    CorpusEntry::plain("pc-product", reg, Proof::new(sys, Dialect::PC, lines, true))
}

/// `x1 xor x2 = 1` and `x1 = x2`, with `y` naming the xor.
fn extpc_xor() -> CorpusEntry {
    let mut reg = Registry::new();
    let v = inputs(&mut reg, &["x1", "x2"]);
    let (x1, x2) = (v[0], v[1]);
    let y = reg.declare("y", VarKind::Extension).expect("fresh");
    let def = &(&var(x1) + &var(x2)) - &(&var(x1) * &var(x2)).scale_int(&BigInt::from(2));
    let sys = System::new(
        Ring::Z,
        vec![x1, x2],
        vec![&def - &int(1), &var(x1) - &var(x2)],
        vec![x1, x2],
    );
    let mut d = Deriver::new([x1, x2]);
    d.ext_def(y, def, true);
    let xl = d.push(sys.axioms[0].clone(), Justification::Axiom(0));
    let al = d.push(sys.axioms[1].clone(), Justification::Axiom(1));
    let one = Polynomial::one(Ring::Z);
    let yl = d
        .emit_checked(
            &(&var(y) - &int(1)),
            &[(one.clone(), Src::Def(y)), (one.clone(), Src::Line(xl))],
        )
        .expect("certificate is exact");
    // The xor vanishes once x2 is replaced by x1.
    let cert = vec![
        (int(-1), Src::Line(yl)),
        (one, Src::Def(y)),
        (int(-2), Src::Bool(x1)),
        (int(-1), Src::Line(al)),
        (var(x1).scale_int(&BigInt::from(2)), Src::Line(al)),
    ];
    d.emit_checked(&int(1), &cert)
        .expect("certificate is exact");
    let proof = Proof::new(sys, Dialect::ExtPC, d.lines, true);
    CorpusEntry::plain("extpc-xor", reg, proof)
}

/// `{x^2, x - 1}`.
fn sqrt_square() -> CorpusEntry {
    let mut reg = Registry::new();
    let x = inputs(&mut reg, &["x"])[0];
    let sq = &var(x) * &var(x);
    let sys = System::new(Ring::Z, vec![x], vec![sq, &var(x) - &int(1)], vec![x]);
    let lines = equational_lines(
        &sys,
        vec![
            Justification::Axiom(0),
            Justification::Sqrt(0),
            Justification::Axiom(1),
            lc(1, 1, -1, 2),
        ],
        vec![var(x)],
    );
    let proof = Proof::new(sys, Dialect::ExtPCSqrt, lines, true);
    CorpusEntry::plain("sqrt-square", reg, proof)
}

/// Derives `y1` from `(x1 + x2 - 1)^2` with `y1 = x1 + x2 - 1`.
fn sqrt_extension() -> CorpusEntry {
    let mut reg = Registry::new();
    let v = inputs(&mut reg, &["x1", "x2"]);
    let (x1, x2) = (v[0], v[1]);
    let y = reg.declare("y1", VarKind::Extension).expect("fresh");
    let q = &(&var(x1) + &var(x2)) - &int(1);
    let sys = System::new(Ring::Z, vec![x1, x2], vec![&q * &q], vec![x1, x2]);
    let lines = equational_lines(
        &sys,
        vec![
            Justification::ExtDef {
                var: y,
                def: q.clone(),
            },
            Justification::Axiom(0),
            Justification::MulVar { var: y, i: 0 },
            Justification::MulVar { var: x1, i: 0 },
            Justification::MulVar { var: x2, i: 0 },
            lc(1, 2, 1, 3),
            lc(1, 5, 1, 4),
            lc(1, 6, -1, 0),
            lc(1, 7, 1, 1),
            Justification::Sqrt(8),
        ],
        vec![var(y)],
    );
    let proof = Proof::new(sys, Dialect::ExtPCSqrtEBVP, lines, false);
    CorpusEntry::plain("sqrt-extension", reg, proof)
}

fn ebvp_step(
    lines: &mut Vec<ProofLine>,
    premise: usize,
    m: i64,
    vars: &[VarId],
) -> (usize, Vec<usize>) {
    let mut bool_lines = Vec::new();
    for &x in vars {
        lines.push(ProofLine::new(
            &(&var(x) * &var(x)) - &var(x),
            Justification::BooleanAxiom(x),
        ));
        bool_lines.push(lines.len() - 1);
    }
    lines.push(ProofLine::new(
        int(1),
        Justification::Ebvp {
            premise,
            g: int(1),
            m: BigInt::from(m),
            fs: vars.iter().map(|&x| var(x)).collect(),
            bool_lines: bool_lines.clone(),
        },
    ));
    (lines.len() - 1, bool_lines)
}

/// eBVP_3 with `M = 1` refuted by a single EBVP step.
fn ebvp_direct() -> CorpusEntry {
    let mut reg = Registry::new();
    let (inst, sys) = gen_ebvp(3, &BigInt::one(), &mut reg).expect("valid instance");
    let mut lines = vec![ProofLine::new(
        sys.axioms[0].clone(),
        Justification::Axiom(0),
    )];
    ebvp_step(&mut lines, 0, 1, &inst.vars);
    let proof = Proof::new(sys, Dialect::ExtPCeBVP, lines, true);
    CorpusEntry::plain("ebvp-direct", reg, proof)
}

/// `{(1 + x1 + 2 x2)^2}`: a square root followed by an EBVP step.
fn sqrt_ebvp() -> CorpusEntry {
    let mut reg = Registry::new();
    let v = inputs(&mut reg, &["x1", "x2"]);
    let g = Polynomial::linear(Ring::Z, vec![(v[0], 1), (v[1], 2)], 1);
    let sys = System::new(Ring::Z, v.clone(), vec![&g * &g], v.clone());
    let mut lines = equational_lines(
        &sys,
        vec![Justification::Axiom(0), Justification::Sqrt(0)],
        vec![g.clone()],
    );
    ebvp_step(&mut lines, 1, 1, &v);
    let proof = Proof::new(sys, Dialect::ExtPCSqrtEBVP, lines, true);
    CorpusEntry::plain("sqrt-ebvp", reg, proof)
}

/// `-(2x-1)^2 + 4(x^2 - x) = -1`.
fn two_x_minus_one() -> CorpusEntry {
    let mut reg = Registry::new();
    let x = inputs(&mut reg, &["x"])[0];
    let eqs = System::new(
        Ring::Z,
        vec![x],
        vec![&var(x).scale_int(&BigInt::from(2)) - &int(1)],
        vec![x],
    );
    let sys = inequality_encoding(&eqs);
    let lines = ineq_lines(
        &sys,
        vec![
            Justification::IneqAxiom(0),
            Justification::IneqAxiom(1),
            Justification::IneqProduct(0, 1),
            Justification::IneqBoolSlack {
                var: x,
                dir: SlackDir::SquareMinusVar,
            },
            Justification::IneqSum(3, 3),
            Justification::IneqSum(4, 4),
            Justification::IneqSum(2, 5),
        ],
    );
    let proof = Proof::new(sys, Dialect::ExtLS, lines, true);
    CorpusEntry::plain("two-x-minus-one", reg, proof)
}

/// `{x, x - 1}` refuted with final constant `-3`.
fn ls_constant_three() -> CorpusEntry {
    let mut reg = Registry::new();
    let x = inputs(&mut reg, &["x"])[0];
    let eqs = System::new(Ring::Z, vec![x], vec![var(x), &var(x) - &int(1)], vec![x]);
    let sys = inequality_encoding(&eqs);
    let lines = ineq_lines(
        &sys,
        vec![
            Justification::IneqAxiom(1),
            Justification::IneqAxiom(2),
            Justification::IneqSum(0, 1),
            Justification::IneqSum(2, 2),
            Justification::IneqSum(2, 3),
        ],
    );
    let proof = Proof::new(sys, Dialect::ExtLS, lines, true);
    CorpusEntry::plain("ls-constant-three", reg, proof)
}

/// `{(x1 x2)^2 + 1}` with `y = x1 x2`.
fn ls_square_extension() -> CorpusEntry {
    let mut reg = Registry::new();
    let v = inputs(&mut reg, &["x1", "x2"]);
    let (x1, x2) = (v[0], v[1]);
    let y = reg.declare("y", VarKind::Extension).expect("fresh");
    let q = &var(x1) * &var(x2);
    let eqs = System::new(
        Ring::Z,
        vec![x1, x2],
        vec![&(&q * &q) + &int(1)],
        vec![x1, x2],
    );
    let sys = inequality_encoding(&eqs);
    let pair = |which| Justification::IneqExtPair {
        var: y,
        def: q.clone(),
        which,
    };
    let lines = ineq_lines(
        &sys,
        vec![
            Justification::IneqAxiom(1),
            pair(PairSide::YMinusF),
            pair(PairSide::FMinusY),
            Justification::IneqVar(x1),
            Justification::IneqVar(x2),
            Justification::IneqProduct(3, 4),
            Justification::IneqSum(1, 5),
            Justification::IneqSum(5, 6),
            Justification::IneqProduct(2, 7),
            Justification::IneqSquare(y),
            Justification::IneqSum(8, 9),
            Justification::IneqSum(0, 10),
        ],
    );
    let proof = Proof::new(sys, Dialect::ExtLS, lines, true);
    CorpusEntry::plain("ls-square-extension", reg, proof)
}

/// `{2x - 1}` over Q: halving gives `x - 1/2`, and `(x - 1/2)` times
/// `(x - 1/2)` against `x^2 - x` leaves `1/4`.
fn q_halves() -> CorpusEntry {
    let mut reg = Registry::new();
    let x = inputs(&mut reg, &["x"])[0];
    let f = Polynomial::linear(Ring::Q, vec![(x, 2)], -1);
    let sys = System::new(Ring::Q, vec![x], vec![f], vec![x]);
    let half = BigRational::new(1.into(), 2.into());
    let q = |p: Polynomial| p.to_ring(Ring::Q).expect("integral");
    let h = q(var(x)).try_sub(&Polynomial::constant(Ring::Q, half.clone()).unwrap());
    let h = h.expect("same ring");
    let xq = Polynomial::var(Ring::Q, x);
    let lines = vec![
        ProofLine::new(sys.axioms[0].clone(), Justification::Axiom(0)),
        ProofLine::new(
            h.clone(),
            Justification::LinComb {
                alpha: half.clone(),
                i: 0,
                beta: BigRational::zero(),
                j: 0,
            },
        ),
        ProofLine::new(&h * &xq, Justification::MulVar { var: x, i: 1 }),
        ProofLine::new(&(&xq * &xq) - &xq, Justification::BooleanAxiom(x)),
        // x(x - 1/2) - 1/2 (x - 1/2) - (x^2 - x) = 1/4
        ProofLine::new(
            &(&h * &xq) - &h.scale(&half).unwrap(),
            Justification::LinComb {
                alpha: BigRational::one(),
                i: 2,
                beta: -half.clone(),
                j: 1,
            },
        ),
        ProofLine::new(
            Polynomial::constant(Ring::Q, BigRational::new(1.into(), 4.into())).unwrap(),
            Justification::LinComb {
                alpha: BigRational::one(),
                i: 4,
                beta: -BigRational::one(),
                j: 3,
            },
        ),
        ProofLine::new(
            Polynomial::one(Ring::Q),
            Justification::LinComb {
                alpha: BigRational::from_integer(4.into()),
                i: 5,
                beta: BigRational::zero(),
                j: 5,
            },
        ),
    ];
    let proof = Proof::new(sys, Dialect::PC, lines, true);
    CorpusEntry::plain("q-halves", reg, proof)
}

/// Values of `inst.polynomial` on the cube, indexed by `t = Σ 2^{i-1} b_i`.
fn cube_values(inst: &EbvpInstance) -> Vec<BigInt> {
    (0..1usize << inst.n)
        .map(|t| &inst.m + BigInt::from(t))
        .collect()
}

/// Multilinear polynomial over `vars` taking `values[t]` at the point with
/// bits of `t`.
pub fn interpolate(vars: &[VarId], values: &[BigInt]) -> Polynomial {
    let mut a: Vec<BigInt> = values.to_vec();
    for i in 0..vars.len() {
        for mask in 0..a.len() {
            if mask >> i & 1 == 1 {
                let lower = a[mask ^ (1 << i)].clone();
                a[mask] -= lower;
            }
        }
    }
    Polynomial::from_int_terms(
        Ring::Z,
        a.into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(mask, c)| {
                let m = Monomial::from_pairs(
                    vars.iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, &v)| (v, 1)),
                );
                (m, c)
            }),
    )
}

/// Derives `target` from the line `f_line` holding the eBVP polynomial, using
/// the multiplier that agrees with `target / f` on the cube. Variables in
/// `local` are unfolded through their definitions first.
pub fn derive_multiple(
    d: &mut Deriver,
    inst: &EbvpInstance,
    f_line: LineId,
    target: &Polynomial,
    local: &[VarId],
) -> Result<LineId, CorpusError> {
    let (flat, _) = normal_form(target, &LocalRules::new(d, local.iter().copied()));
    let fs = cube_values(inst);
    let mut hs = Vec::with_capacity(fs.len());
    for (t, f) in fs.iter().enumerate() {
        let value = flat
            .eval_with(|v| {
                let i = inst.vars.iter().position(|&x| x == v)?;
                Some(BigRational::from_integer(BigInt::from(t >> i & 1)))
            })
            .map_err(|_| CorpusError::NotAMultiple)?
            .to_integer();
        let (q, r) = value.div_rem(f);
        if !r.is_zero() {
            return Err(CorpusError::NotAMultiple);
        }
        hs.push(q);
    }
    let h = interpolate(&inst.vars, &hs);
    Ok(d.derive_local(target, vec![(h, Src::Line(f_line))], local.iter().copied())?)
}

fn ebvp_start(
    n: usize,
    m: i64,
) -> Result<(Registry, EbvpInstance, System, Deriver, LineId), CorpusError> {
    if n > MAX_EBVP_BITS {
        return Err(CorpusError::TooWide(n));
    }
    let mut reg = Registry::new();
    let (inst, sys) = gen_ebvp(n, &BigInt::from(m), &mut reg)?;
    let mut d = Deriver::new(inst.vars.iter().copied());
    let f_line = d.push(sys.axioms[0].clone(), Justification::Axiom(0));
    Ok((reg, inst, sys, d, f_line))
}

/// Refutes eBVP_n by deriving `lcm(M, ..., M + 2^n - 1)`. The top bit is
/// split off with `x_k` and `not_x_k = 1 - x_k`, recursively, and the cells
/// are recombined with lcm multipliers.
pub fn ebvp_refutation(n: usize, m: i64) -> Result<(Registry, Proof), CorpusError> {
    let (mut reg, inst, sys, mut d, f_line) = ebvp_start(n, m)?;
    let mut neg = Vec::with_capacity(n);
    for (i, &x) in inst.vars.iter().enumerate() {
        let nx = reg
            .declare(&format!("not_x{}", i + 1), VarKind::Extension)
            .expect("fresh");
        d.ext_def(nx, &int(1) - &var(x), true);
        neg.push(nx);
    }
    let (_, k) = split_cells(&mut d, &inst.vars, &neg, f_line, &Monomial::one(), n)?;
    debug_assert!(d
        .lines
        .last()
        .is_some_and(|l| l.poly.as_constant().is_some()));
    debug_assert_eq!(
        k,
        cube_values(&inst)
            .iter()
            .fold(BigInt::one(), |acc, f| acc.lcm(f))
    );
    Ok((reg, Proof::new(sys, Dialect::ExtPC, d.lines, true)))
}

/// `line` is `σ (c + Σ_{i<=k} 2^{i-1} x_i)`; returns a line `K σ` with `K` the
/// lcm of the cell values below `σ`.
fn split_cells(
    d: &mut Deriver,
    vars: &[VarId],
    neg: &[VarId],
    line: LineId,
    sigma: &Monomial,
    k: usize,
) -> Result<(LineId, BigInt), CorpusError> {
    if k == 0 {
        let c = d.poly(line).coefficient(sigma).to_integer();
        return Ok((line, c));
    }
    let (x, nx) = (vars[k - 1], neg[k - 1]);
    let w = Polynomial::from_int_terms(Ring::Z, [(sigma.clone(), BigInt::one() << (k - 1))]);
    let hi = d.emit_certificate(&[(var(x), Src::Line(line)), (-w.clone(), Src::Bool(x))])?;
    let lo = d.emit_certificate(&[
        (var(nx), Src::Line(line)),
        (-w.mul_var(x), Src::Def(nx)),
        (w, Src::Bool(x)),
    ])?;
    let (hi, k1) = split_cells(d, vars, neg, hi, &sigma.mul_var(x), k - 1)?;
    let (lo, k0) = split_cells(d, vars, neg, lo, &sigma.mul_var(nx), k - 1)?;
    let l = k1.lcm(&k0);
    let s = Polynomial::from_int_terms(Ring::Z, [(sigma.clone(), l.clone())]);
    let out = d.emit_certificate(&[
        (Polynomial::constant_int(Ring::Z, &l / &k1), Src::Line(hi)),
        (Polynomial::constant_int(Ring::Z, &l / &k0), Src::Line(lo)),
        (-s.clone(), Src::Def(nx)),
    ])?;
    if *d.poly(out) != s {
        return Err(CorpusError::Derive(DeriveError::Shape(out)));
    }
    Ok((out, l))
}

fn ebvp_sample(name: &'static str, n: usize, m: i64) -> Result<CorpusEntry, CorpusError> {
    let (reg, proof) = ebvp_refutation(n, m)?;
    Ok(CorpusEntry::plain(name, reg, proof))
}

fn lcm_where(inst: &EbvpInstance, pred: impl Fn(usize) -> bool) -> BigInt {
    cube_values(inst)
        .iter()
        .enumerate()
        .filter(|(t, _)| pred(*t))
        .fold(BigInt::one(), |acc, (_, f)| acc.lcm(f))
}

/// The CNF `(y) ∧ (¬y)` from eBVP_4 with `M = 1`, where `y = x1` and
/// `¬y = 1 - y`.
fn cnf_y_not_y() -> Result<CorpusEntry, CorpusError> {
    let (mut reg, inst, sys, mut d, f_line) = ebvp_start(4, 1)?;
    let x1 = inst.vars[0];
    let y = reg.declare("y", VarKind::Extension).expect("fresh");
    let ny = reg.declare("not_y", VarKind::Extension).expect("fresh");
    d.ext_def(y, var(x1), true);
    d.ext_def(ny, &int(1) - &var(y), true);
    let by = d.bool_line(y)?;
    let c1 = lcm_where(&inst, |t| t & 1 == 1);
    let c0 = lcm_where(&inst, |t| t & 1 == 0);
    let l1 = derive_multiple(&mut d, &inst, f_line, &var(y).scale_int(&c1), &[y])?;
    let l0 = derive_multiple(&mut d, &inst, f_line, &var(ny).scale_int(&c0), &[ny, y])?;
    Ok(CorpusEntry {
        name: "ebvp4-cnf-y-not-y",
        registry: reg,
        proof: Proof::new(sys, Dialect::ExtPC, d.lines, false),
        clause_lines: vec![l1, l0],
        boolean_eq_lines: vec![by],
    })
}

/// All four cells of eBVP_2 with `M = 1`, each as a clause over `x_i` or
/// `¬x_i = 1 - x_i` with constant `f` at that cell.
fn cnf_cells() -> Result<CorpusEntry, CorpusError> {
    let (mut reg, inst, sys, mut d, f_line) = ebvp_start(2, 1)?;
    let mut neg = Vec::new();
    for (i, &x) in inst.vars.iter().enumerate() {
        let n = reg
            .declare(&format!("not_x{}", i + 1), VarKind::Extension)
            .expect("fresh");
        d.ext_def(n, &int(1) - &var(x), true);
        neg.push(n);
    }
    let fs = cube_values(&inst);
    let mut clause_lines = Vec::new();
    for (t, f) in fs.iter().enumerate() {
        let mut target = Polynomial::constant_int(Ring::Z, f.clone());
        let mut local = Vec::new();
        for (i, &x) in inst.vars.iter().enumerate() {
            if t >> i & 1 == 1 {
                target = target.mul_var(x);
            } else {
                target = target.mul_var(neg[i]);
                local.push(neg[i]);
            }
        }
        clause_lines.push(derive_multiple(&mut d, &inst, f_line, &target, &local)?);
    }
    Ok(CorpusEntry {
        name: "ebvp2-cnf-cells",
        registry: reg,
        proof: Proof::new(sys, Dialect::ExtPC, d.lines, false),
        clause_lines,
        boolean_eq_lines: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proofs::check_proof;

    #[test]
    fn every_sample_is_accepted() {
        for e in corpus() {
            let rep = check_proof(&e.proof);
            assert!(rep.accepted, "{}: {:?}", e.name, rep.first_failure);
        }
    }

    #[test]
    fn dialects_are_covered() {
        let c = corpus();
        for dialect in Dialect::ALL {
            assert!(c.iter().any(|e| e.proof.dialect == dialect), "{dialect}");
        }
    }

    #[test]
    fn interpolation_matches_table() {
        let mut reg = Registry::new();
        let v = inputs(&mut reg, &["a", "b", "c"]);
        let values: Vec<BigInt> = (0..8).map(|t| BigInt::from(t * t - 3)).collect();
        let p = interpolate(&v, &values);
        for (t, want) in values.iter().enumerate() {
            let got = p
                .eval_with(|x| {
                    let i = v.iter().position(|&w| w == x)?;
                    Some(BigRational::from_integer(BigInt::from(t >> i & 1)))
                })
                .unwrap();
            assert_eq!(got.to_integer(), *want);
        }
    }

    #[test]
    fn lcm_constant() {
        let (_, p) = ebvp_refutation(2, 1).unwrap();
        assert_eq!(p.lines.last().unwrap().poly, int(12));
        let (_, p) = ebvp_refutation(3, 5).unwrap();
        assert!(check_proof(&p).accepted);
        let want = (5..13).fold(BigInt::one(), |a, f| a.lcm(&BigInt::from(f)));
        assert_eq!(
            p.lines.last().unwrap().poly.as_constant(),
            Some(BigRational::from_integer(want))
        );
    }

    #[test]
    fn non_multiple_is_refused() {
        let (_, inst, _, mut d, f) = ebvp_start(2, 1).unwrap();
        assert_eq!(
            derive_multiple(&mut d, &inst, f, &int(6), &[]),
            Err(CorpusError::NotAMultiple)
        );
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(sample("nope"), Err(CorpusError::UnknownSample(_))));
    }
}
