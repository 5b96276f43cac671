//! Versioned JSON documents for systems, proofs, circuits and emissions.
//!
//! Polynomials are lists of `[coefficient, [[var, exponent], ...]]` with
//! coefficients as decimal strings (`"a/b"` for non-integers). Variables are
//! referenced by name and declared once in the header, in registry order, so
//! parsing and re-serializing reproduces the same bytes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Monomial, Polynomial, Registry, Ring, VarId, VarKind};
use crate::circuit::{Circuit, Gate};
use crate::proofs::{Dialect, Justification, PairSide, Proof, ProofLine, SlackDir, System};

pub const FORMAT: &str = "algproof/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unsupported format `{0}`, expected `{FORMAT}`")]
    Version(String),
    #[error("expected a `{expected}` document, got `{got}`")]
    Kind { expected: &'static str, got: String },
    #[error("unknown ring `{0}`")]
    Ring(String),
    #[error("unknown dialect `{0}`")]
    Dialect(String),
    #[error("unknown variable kind `{0}`")]
    VarKind(String),
    #[error("variable `{0}`: {1}")]
    Declaration(String, String),
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("bad number `{0}`")]
    Number(String),
    #[error("polynomial: {0}")]
    Polynomial(String),
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("gate {0}: {1}")]
    Gate(usize, String),
}

pub type Term = (String, Vec<(String, u32)>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarDecl {
    pub name: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub inputs: Vec<String>,
    pub axioms: Vec<Vec<Term>>,
    pub boolean_vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub ring: String,
    pub dialect: String,
    pub refutation: bool,
    pub variables: Vec<VarDecl>,
    pub system: SystemDoc,
}

/// Rule-specific data; absent fields are omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aux {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub axiom: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub var: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub def: Option<Vec<Term>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g: Option<Vec<Term>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fs: Option<Vec<Vec<Term>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub side: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDoc {
    pub id: usize,
    pub poly: Vec<Term>,
    pub rule: String,
    pub premises: Vec<usize>,
    #[serde(skip_serializing_if = "is_default", default)]
    pub aux: Aux,
}

fn is_default(a: &Aux) -> bool {
    *a == Aux::default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofDocument {
    pub format: String,
    pub kind: String,
    pub header: Header,
    pub body: Vec<LineDoc>,
}

pub fn rational_to_string(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, FormatError> {
    let bad = || FormatError::Number(s.to_string());
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
        Some((a, b)) => {
            let a: BigInt = a.parse().map_err(|_| bad())?;
            let b: BigInt = b.parse().map_err(|_| bad())?;
            if b == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(a, b))
        }
    }
}

pub fn parse_integer(s: &str) -> Result<BigInt, FormatError> {
    s.parse().map_err(|_| FormatError::Number(s.to_string()))
}

pub fn poly_to_doc(p: &Polynomial, reg: &Registry) -> Vec<Term> {
    p.terms()
        .map(|(m, c)| {
            let vars = m
                .pairs()
                .iter()
                .map(|(v, e)| (reg.name(*v).to_string(), *e))
                .collect();
            (rational_to_string(c), vars)
        })
        .collect()
}

pub fn poly_from_doc(
    terms: &[Term],
    ring: Ring,
    reg: &Registry,
) -> Result<Polynomial, FormatError> {
    let mut out = Vec::with_capacity(terms.len());
    for (c, vars) in terms {
        let c = parse_rational(c)?;
        let mut pairs = Vec::with_capacity(vars.len());
        for (name, e) in vars {
            if *e == 0 {
                return Err(FormatError::Polynomial(format!(
                    "zero exponent on `{name}`"
                )));
            }
            pairs.push((lookup(reg, name)?, *e));
        }
        out.push((Monomial::from_pairs(pairs), c));
    }
    Polynomial::from_terms(ring, out).map_err(|e| FormatError::Polynomial(e.to_string()))
}

fn lookup(reg: &Registry, name: &str) -> Result<VarId, FormatError> {
    reg.lookup(name)
        .ok_or_else(|| FormatError::Undeclared(name.to_string()))
}

fn ring_str(r: Ring) -> String {
    r.to_string()
}

pub fn parse_ring(s: &str) -> Result<Ring, FormatError> {
    match s {
        "Z" => Ok(Ring::Z),
        "Q" => Ok(Ring::Q),
        _ => Err(FormatError::Ring(s.to_string())),
    }
}

fn check_version(format: &str) -> Result<(), FormatError> {
    if format != FORMAT {
        return Err(FormatError::Version(format.to_string()));
    }
    Ok(())
}

fn declarations(reg: &Registry) -> Vec<VarDecl> {
    reg.iter()
        .map(|(_, info)| VarDecl {
            name: info.name.clone(),
            kind: info.kind.as_str().to_string(),
        })
        .collect()
}

fn registry_of(decls: &[VarDecl]) -> Result<Registry, FormatError> {
    let mut reg = Registry::new();
    for d in decls {
        let kind = VarKind::parse(&d.kind).ok_or_else(|| FormatError::VarKind(d.kind.clone()))?;
        reg.declare(&d.name, kind)
            .map_err(|e| FormatError::Declaration(d.name.clone(), e.to_string()))?;
    }
    Ok(reg)
}

fn aux_of(j: &Justification, reg: &Registry) -> Aux {
    let name = |v: &VarId| Some(reg.name(*v).to_string());
    let mut a = Aux::default();
    match j {
        Justification::Axiom(i) | Justification::IneqAxiom(i) => a.axiom = Some(*i),
        Justification::BooleanAxiom(v)
        | Justification::MulVar { var: v, .. }
        | Justification::IneqVar(v)
        | Justification::IneqOneMinusVar(v)
        | Justification::IneqSquare(v) => a.var = name(v),
        Justification::ExtDef { var, def } => {
            a.var = name(var);
            a.def = Some(poly_to_doc(def, reg));
        }
        Justification::LinComb { alpha, beta, .. } => {
            a.alpha = Some(rational_to_string(alpha));
            a.beta = Some(rational_to_string(beta));
        }
        Justification::Sqrt(_) | Justification::IneqSum(..) | Justification::IneqProduct(..) => {}
        Justification::Ebvp { g, m, fs, .. } => {
            a.g = Some(poly_to_doc(g, reg));
            a.m = Some(m.to_string());
            a.fs = Some(fs.iter().map(|f| poly_to_doc(f, reg)).collect());
        }
        Justification::IneqBoolSlack { var, dir } => {
            a.var = name(var);
            a.dir = Some(
                match dir {
                    SlackDir::SquareMinusVar => "square-minus-var",
                    SlackDir::VarMinusSquare => "var-minus-square",
                }
                .to_string(),
            );
        }
        Justification::IneqExtPair { var, def, which } => {
            a.var = name(var);
            a.def = Some(poly_to_doc(def, reg));
            a.side = Some(
                match which {
                    PairSide::YMinusF => "y-minus-f",
                    PairSide::FMinusY => "f-minus-y",
                }
                .to_string(),
            );
        }
    }
    a
}

pub fn proof_to_doc(p: &Proof, reg: &Registry) -> ProofDocument {
    let names = |vs: &[VarId]| vs.iter().map(|v| reg.name(*v).to_string()).collect();
    ProofDocument {
        format: FORMAT.to_string(),
        kind: "proof".to_string(),
        header: Header {
            ring: ring_str(p.system.ring),
            dialect: p.dialect.as_str().to_string(),
            refutation: p.claims_refutation,
            variables: declarations(reg),
            system: SystemDoc {
                inputs: names(&p.system.inputs),
                axioms: p
                    .system
                    .axioms
                    .iter()
                    .map(|a| poly_to_doc(a, reg))
                    .collect(),
                boolean_vars: names(&p.system.boolean_vars),
            },
        },
        body: p
            .lines
            .iter()
            .enumerate()
            .map(|(id, l)| LineDoc {
                id,
                poly: poly_to_doc(&l.poly, reg),
                rule: l.just.tag().to_string(),
                premises: l.just.premises(),
                aux: aux_of(&l.just, reg),
            })
            .collect(),
    }
}

/// A system alone is a proof document with an empty body.
pub fn system_to_doc(sys: &System, dialect: Dialect, reg: &Registry) -> ProofDocument {
    let mut doc = proof_to_doc(&Proof::new(sys.clone(), dialect, Vec::new(), false), reg);
    doc.kind = "system".to_string();
    doc
}

struct LineCtx<'a> {
    id: usize,
    doc: &'a LineDoc,
    ring: Ring,
    reg: &'a Registry,
}

impl LineCtx<'_> {
    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::Line(self.id, msg.into())
    }

    fn premises(&self, n: usize) -> Result<&[usize], FormatError> {
        if self.doc.premises.len() != n {
            return Err(self.err(format!(
                "rule `{}` takes {n} premises, got {}",
                self.doc.rule,
                self.doc.premises.len()
            )));
        }
        Ok(&self.doc.premises)
    }

    fn var(&self) -> Result<VarId, FormatError> {
        let name = self
            .doc
            .aux
            .var
            .as_ref()
            .ok_or_else(|| self.err("missing `var`"))?;
        lookup(self.reg, name)
    }

    fn poly(&self, field: &Option<Vec<Term>>, what: &str) -> Result<Polynomial, FormatError> {
        let t = field
            .as_ref()
            .ok_or_else(|| self.err(format!("missing `{what}`")))?;
        poly_from_doc(t, self.ring, self.reg)
    }

    fn scalar(&self, field: &Option<String>, what: &str) -> Result<BigRational, FormatError> {
        parse_rational(
            field
                .as_ref()
                .ok_or_else(|| self.err(format!("missing `{what}`")))?,
        )
    }

    fn axiom(&self) -> Result<usize, FormatError> {
        self.doc
            .aux
            .axiom
            .ok_or_else(|| self.err("missing `axiom`"))
    }

    fn justification(&self) -> Result<Justification, FormatError> {
        let a = &self.doc.aux;
        let j = match self.doc.rule.as_str() {
            "axiom" => {
                self.premises(0)?;
                Justification::Axiom(self.axiom()?)
            }
            "boolean" => {
                self.premises(0)?;
                Justification::BooleanAxiom(self.var()?)
            }
            "extdef" => {
                self.premises(0)?;
                Justification::ExtDef {
                    var: self.var()?,
                    def: self.poly(&a.def, "def")?,
                }
            }
            "lincomb" => {
                let p = self.premises(2)?;
                Justification::LinComb {
                    alpha: self.scalar(&a.alpha, "alpha")?,
                    i: p[0],
                    beta: self.scalar(&a.beta, "beta")?,
                    j: p[1],
                }
            }
            "mulvar" => Justification::MulVar {
                var: self.var()?,
                i: self.premises(1)?[0],
            },
            "sqrt" => Justification::Sqrt(self.premises(1)?[0]),
            "ebvp" => {
                let fs_doc = a.fs.as_ref().ok_or_else(|| self.err("missing `fs`"))?;
                let fs = fs_doc
                    .iter()
                    .map(|t| poly_from_doc(t, self.ring, self.reg))
                    .collect::<Result<Vec<_>, _>>()?;
                let p = self.premises(fs.len() + 1)?;
                Justification::Ebvp {
                    premise: p[0],
                    g: self.poly(&a.g, "g")?,
                    m: parse_integer(a.m.as_deref().ok_or_else(|| self.err("missing `m`"))?)?,
                    fs,
                    bool_lines: p[1..].to_vec(),
                }
            }
            "ineq-axiom" => {
                self.premises(0)?;
                Justification::IneqAxiom(self.axiom()?)
            }
            "ineq-var" => {
                self.premises(0)?;
                Justification::IneqVar(self.var()?)
            }
            "ineq-one-minus-var" => {
                self.premises(0)?;
                Justification::IneqOneMinusVar(self.var()?)
            }
            "ineq-square" => {
                self.premises(0)?;
                Justification::IneqSquare(self.var()?)
            }
            "ineq-bool-slack" => {
                self.premises(0)?;
                let dir = match a.dir.as_deref() {
                    Some("square-minus-var") => SlackDir::SquareMinusVar,
                    Some("var-minus-square") => SlackDir::VarMinusSquare,
                    other => return Err(self.err(format!("bad `dir` {other:?}"))),
                };
                Justification::IneqBoolSlack {
                    var: self.var()?,
                    dir,
                }
            }
            "ineq-sum" => {
                let p = self.premises(2)?;
                Justification::IneqSum(p[0], p[1])
            }
            "ineq-product" => {
                let p = self.premises(2)?;
                Justification::IneqProduct(p[0], p[1])
            }
            "ineq-ext-pair" => {
                self.premises(0)?;
                let which = match a.side.as_deref() {
                    Some("y-minus-f") => PairSide::YMinusF,
                    Some("f-minus-y") => PairSide::FMinusY,
                    other => return Err(self.err(format!("bad `side` {other:?}"))),
                };
                Justification::IneqExtPair {
                    var: self.var()?,
                    def: self.poly(&a.def, "def")?,
                    which,
                }
            }
            other => return Err(self.err(format!("unknown rule `{other}`"))),
        };
        // Reject stray auxiliary fields so that re-serialization is exact.
        if aux_of(&j, self.reg) != *a {
            return Err(self.err("auxiliary data does not match the rule"));
        }
        Ok(j)
    }
}

pub fn proof_from_doc(doc: &ProofDocument) -> Result<(Proof, Registry), FormatError> {
    check_version(&doc.format)?;
    if doc.kind != "proof" && doc.kind != "system" {
        return Err(FormatError::Kind {
            expected: "proof",
            got: doc.kind.clone(),
        });
    }
    let h = &doc.header;
    let ring = parse_ring(&h.ring)?;
    let dialect =
        Dialect::parse(&h.dialect).ok_or_else(|| FormatError::Dialect(h.dialect.clone()))?;
    let reg = registry_of(&h.variables)?;
    let vars = |names: &[String]| {
        names
            .iter()
            .map(|n| lookup(&reg, n))
            .collect::<Result<Vec<_>, _>>()
    };
    let axioms = h
        .system
        .axioms
        .iter()
        .map(|t| poly_from_doc(t, ring, &reg))
        .collect::<Result<Vec<_>, _>>()?;
    let system = System::new(
        ring,
        vars(&h.system.inputs)?,
        axioms,
        vars(&h.system.boolean_vars)?,
    );
    let mut lines = Vec::with_capacity(doc.body.len());
    for (id, l) in doc.body.iter().enumerate() {
        if l.id != id {
            return Err(FormatError::Line(
                id,
                format!("id {} out of sequence", l.id),
            ));
        }
        let ctx = LineCtx {
            id,
            doc: l,
            ring,
            reg: &reg,
        };
        let just = ctx.justification()?;
        lines.push(ProofLine::new(poly_from_doc(&l.poly, ring, &reg)?, just));
    }
    Ok((Proof::new(system, dialect, lines, h.refutation), reg))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("documents serialize");
    s.push('\n');
    s
}

pub fn serialize_proof(p: &Proof, reg: &Registry) -> String {
    to_json(&proof_to_doc(p, reg))
}

pub fn parse_proof(text: &str) -> Result<(Proof, Registry), FormatError> {
    let doc: ProofDocument =
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    proof_from_doc(&doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDoc {
    pub op: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub var: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub args: Vec<usize>,
}

/// A circuit over Boolean inputs, declared by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDocument {
    pub format: String,
    pub kind: String,
    pub inputs: Vec<String>,
    pub gates: Vec<GateDoc>,
    pub output: usize,
}

pub fn circuit_to_doc(c: &Circuit, inputs: &[VarId], reg: &Registry) -> CircuitDocument {
    let gates = c
        .gates
        .iter()
        .map(|g| match g {
            Gate::Input(v) => GateDoc {
                op: "input".into(),
                var: Some(reg.name(*v).to_string()),
                value: None,
                args: vec![],
            },
            Gate::Const(k) => GateDoc {
                op: "const".into(),
                var: None,
                value: Some(k.to_string()),
                args: vec![],
            },
            Gate::Add(a, b) | Gate::Mul(a, b) => GateDoc {
                op: if matches!(g, Gate::Add(..)) {
                    "add"
                } else {
                    "mul"
                }
                .into(),
                var: None,
                value: None,
                args: vec![*a, *b],
            },
        })
        .collect();
    CircuitDocument {
        format: FORMAT.to_string(),
        kind: "circuit".to_string(),
        inputs: inputs.iter().map(|v| reg.name(*v).to_string()).collect(),
        gates,
        output: c.output,
    }
}

/// Declares the circuit inputs in a fresh registry.
pub fn circuit_from_doc(
    doc: &CircuitDocument,
) -> Result<(Circuit, Vec<VarId>, Registry), FormatError> {
    check_version(&doc.format)?;
    if doc.kind != "circuit" {
        return Err(FormatError::Kind {
            expected: "circuit",
            got: doc.kind.clone(),
        });
    }
    let mut reg = Registry::new();
    let mut inputs = Vec::new();
    for n in &doc.inputs {
        let v = reg
            .declare(n, VarKind::Input)
            .map_err(|e| FormatError::Declaration(n.clone(), e.to_string()))?;
        inputs.push(v);
    }
    let mut gates = Vec::with_capacity(doc.gates.len());
    for (i, g) in doc.gates.iter().enumerate() {
        let err = |m: &str| FormatError::Gate(i, m.to_string());
        let gate = match (g.op.as_str(), &g.var, &g.value, g.args.as_slice()) {
            ("input", Some(n), None, []) => Gate::Input(lookup(&reg, n)?),
            ("const", None, Some(k), []) => Gate::Const(parse_integer(k)?),
            ("add", None, None, [a, b]) => Gate::Add(*a, *b),
            ("mul", None, None, [a, b]) => Gate::Mul(*a, *b),
            _ => return Err(err("malformed gate")),
        };
        gates.push(gate);
    }
    let c = Circuit {
        gates,
        output: doc.output,
    };
    c.validate()
        .map_err(|e| FormatError::Gate(doc.output, e.to_string()))?;
    Ok((c, inputs, reg))
}

pub fn parse_circuit(text: &str) -> Result<(Circuit, Vec<VarId>, Registry), FormatError> {
    let doc: CircuitDocument =
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    circuit_from_doc(&doc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitDefDoc {
    pub var: String,
    pub connective: String,
    pub def: Vec<Term>,
    pub gate: Option<usize>,
}

/// Bit-blasting output: definitions in order and the bit vector of every gate,
/// least significant bit first, with `"0"`/`"1"` for constant bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmissionDocument {
    pub format: String,
    pub kind: String,
    pub inputs: Vec<String>,
    pub definitions: Vec<BitDefDoc>,
    pub gate_bits: Vec<Vec<String>>,
    pub output: usize,
    pub closure_checked_assignments: u64,
}

/// Counts of rule tags, for `stats`.
pub fn rule_histogram(p: &Proof) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for l in &p.lines {
        *h.entry(l.just.tag().to_string()).or_insert(0) += 1;
    }
    h
}
