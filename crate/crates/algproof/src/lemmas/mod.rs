//! Generators for kernel-checkable derivations.
//!
//! A [`Deriver`] appends lines to a growing proof over `Z` and keeps track of
//! definitional lines, Boolean lines and a cache of variable multiples. Every
//! identity is produced by a certificate `target = Σ h_k · line_k`, where the
//! multipliers are found by [`normal_form`] and compiled to `MulVar` chains
//! joined by a balanced `LinComb` tree.

mod circuits;
mod facts;
mod gadgets;
mod zero;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{Monomial, Polynomial, Ring, VarId};
use crate::proofs::{Dialect, Justification, Proof, ProofLine, System};

pub use circuits::{
    binary_values, define_gammas, derive_binary_value, derive_output_equality,
    derive_poly_circuit_equality, ext_equalities, output_equalities, poly_circuit_equality,
    ArenaEqualities, BinaryValues, GateGammas, GateRules,
};
pub use facts::Facts;
pub use gadgets::{
    derive_abs, derive_add, derive_prod, derive_prod_plus, derive_sign_monotone, derive_xor,
    gadget_vars, prod_vars, zero_by_facts, AbsLines,
};
pub use zero::{
    bits_of_zero, derive_bits_of_zero, derive_square_lemma, peel_zero, square_part1, square_part2,
    BitsOfZero,
};

pub type LineId = usize;

/// Where a certificate multiplier applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Src {
    Line(LineId),
    /// `v - def(v)`.
    Def(VarId),
    /// `v^2 - v`.
    Bool(VarId),
    /// A fact held by a [`Facts`] engine.
    Fact(usize),
}

pub type Certificate = Vec<(Polynomial, Src)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeriveError {
    #[error("identity does not reduce to zero; residual {0}")]
    Residual(Polynomial),
    #[error("variable {0:?} has no Boolean justification")]
    NotBoolean(VarId),
    #[error("variable {0:?} has no definition")]
    NoDefinition(VarId),
    #[error("line {0} does not have the expected shape")]
    Shape(LineId),
    #[error("derived a nonzero constant at line {0}")]
    Contradiction(LineId),
    #[error("could not establish {0}")]
    Stuck(String),
}

/// Rewriting rules used by [`normal_form`].
pub trait Rules {
    /// Replacement for `v`, justified by a source whose polynomial is `v - replacement`.
    fn subst(&self, v: VarId) -> Option<(&Polynomial, Src)>;
    /// Whether `v^2 = v` may be used.
    fn is_atom(&self, v: VarId) -> bool;
}

/// Reduces `target` by substitution (largest variable first) and then
/// multilinearization of atoms. Returns the residual and a certificate with
/// `target - residual = Σ h · src`.
pub fn normal_form(target: &Polynomial, rules: &impl Rules) -> (Polynomial, Certificate) {
    let mut t = target.clone();
    let mut cert: BTreeMap<Src, Polynomial> = BTreeMap::new();
    while let Some(v) = t
        .vars()
        .into_iter()
        .rev()
        .find(|v| rules.subst(*v).is_some())
    {
        let (q, src) = rules.subst(v).expect("checked");
        let h = Polynomial::from_terms(
            Ring::Z,
            t.terms()
                .filter(|(m, _)| m.exponent(v) > 0)
                .map(|(m, c)| (m.div_var(v, 1).unwrap(), c.clone())),
        )
        .expect("integral");
        t = &(&t - &h.mul_var(v)) + &(&h * q);
        accumulate(&mut cert, src, h);
    }
    loop {
        let v = t
            .terms()
            .flat_map(|(m, _)| {
                m.pairs()
                    .iter()
                    .filter(|(_, e)| *e >= 2)
                    .map(|(v, _)| *v)
                    .collect::<Vec<_>>()
            })
            .filter(|v| rules.is_atom(*v))
            .max();
        let Some(v) = v else { break };
        let h = Polynomial::from_terms(
            Ring::Z,
            t.terms()
                .filter(|(m, _)| m.exponent(v) >= 2)
                .map(|(m, c)| (m.div_var(v, 2).unwrap(), c.clone())),
        )
        .expect("integral");
        let sq_minus = &h.mul_var(v).mul_var(v) - &h.mul_var(v);
        t = &t - &sq_minus;
        accumulate(&mut cert, Src::Bool(v), h);
    }
    (
        t,
        cert.into_iter()
            .filter(|(_, h)| !h.is_zero())
            .map(|(s, h)| (h, s))
            .collect(),
    )
}

fn accumulate(cert: &mut BTreeMap<Src, Polynomial>, src: Src, h: Polynomial) {
    match cert.get_mut(&src) {
        Some(acc) => *acc = &*acc + &h,
        None => {
            cert.insert(src, h);
        }
    }
}

/// Substitutes the given local variables by their definitions; any Boolean
/// variable known to the deriver is an atom.
pub struct LocalRules<'a> {
    d: &'a Deriver,
    local: HashSet<VarId>,
}

impl<'a> LocalRules<'a> {
    pub fn new(d: &'a Deriver, local: impl IntoIterator<Item = VarId>) -> Self {
        LocalRules {
            d,
            local: local.into_iter().collect(),
        }
    }
}

impl Rules for LocalRules<'_> {
    fn subst(&self, v: VarId) -> Option<(&Polynomial, Src)> {
        if self.local.contains(&v) {
            self.d.defs.get(&v).map(|(q, _)| (q, Src::Def(v)))
        } else {
            None
        }
    }

    fn is_atom(&self, v: VarId) -> bool {
        self.d.is_boolean(v)
    }
}

/// Range of lines produced by one generator invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub generator: &'static str,
    pub start: LineId,
    pub end: LineId,
}

pub struct Deriver {
    pub lines: Vec<ProofLine>,
    boolean_inputs: BTreeSet<VarId>,
    boolean_defs: HashSet<VarId>,
    defs: HashMap<VarId, (Polynomial, LineId)>,
    bool_lines: HashMap<VarId, LineId>,
    zero: Option<LineId>,
    mul_cache: HashMap<(LineId, Monomial), LineId>,
    pub log: Vec<LogEntry>,
}

fn z(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

impl Deriver {
    pub fn new(boolean_inputs: impl IntoIterator<Item = VarId>) -> Self {
        Deriver {
            lines: Vec::new(),
            boolean_inputs: boolean_inputs.into_iter().collect(),
            boolean_defs: HashSet::new(),
            defs: HashMap::new(),
            bool_lines: HashMap::new(),
            zero: None,
            mul_cache: HashMap::new(),
            log: Vec::new(),
        }
    }

    pub fn poly(&self, l: LineId) -> &Polynomial {
        &self.lines[l].poly
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn push(&mut self, poly: Polynomial, just: Justification) -> LineId {
        self.lines.push(ProofLine::new(poly, just));
        self.lines.len() - 1
    }

    /// Runs `f` and records the lines it appended under `generator`. An empty
    /// range means the result was already available.
    pub fn logged<T>(&mut self, generator: &'static str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = self.lines.len();
        let out = f(self);
        let end = self.lines.len();
        self.log.push(LogEntry {
            generator,
            start,
            end,
        });
        out
    }

    pub fn is_boolean(&self, v: VarId) -> bool {
        self.boolean_inputs.contains(&v)
            || self.boolean_defs.contains(&v)
            || self.bool_lines.contains_key(&v)
    }

    pub fn def(&self, v: VarId) -> Option<&Polynomial> {
        self.defs.get(&v).map(|(q, _)| q)
    }

    pub fn def_line(&self, v: VarId) -> Option<LineId> {
        self.defs.get(&v).map(|(_, l)| *l)
    }

    /// Records that line `l` is `v - q`. Boolean definitions make `v` an atom.
    pub fn register_def(&mut self, v: VarId, q: Polynomial, l: LineId, boolean: bool) {
        debug_assert_eq!(self.lines[l].poly, &Polynomial::var(Ring::Z, v) - &q);
        self.defs.insert(v, (q, l));
        if boolean {
            self.boolean_defs.insert(v);
        }
    }

    pub fn register_bool(&mut self, v: VarId, l: LineId) {
        self.bool_lines.insert(v, l);
    }

    pub fn ext_def(&mut self, v: VarId, q: Polynomial, boolean: bool) -> LineId {
        let poly = &Polynomial::var(Ring::Z, v) - &q;
        let l = self.push(
            poly,
            Justification::ExtDef {
                var: v,
                def: q.clone(),
            },
        );
        self.register_def(v, q, l, boolean);
        l
    }

    pub fn lincomb(&mut self, a: &BigInt, i: LineId, b: &BigInt, j: LineId) -> LineId {
        let mut poly = self.lines[i].poly.scale_int(a);
        poly.add_assign_scaled(&self.lines[j].poly, &z(b.clone()));
        self.push(
            poly,
            Justification::LinComb {
                alpha: z(a.clone()),
                i,
                beta: z(b.clone()),
                j,
            },
        )
    }

    pub fn scale(&mut self, a: &BigInt, i: LineId) -> LineId {
        if a.is_one() {
            return i;
        }
        self.lincomb(a, i, &BigInt::zero(), i)
    }

    pub fn mul_var(&mut self, v: VarId, i: LineId) -> LineId {
        let poly = self.lines[i].poly.mul_var(v);
        self.push(poly, Justification::MulVar { var: v, i })
    }

    pub fn zero_line(&mut self) -> LineId {
        if let Some(l) = self.zero {
            return l;
        }
        let base = if self.lines.is_empty() {
            let v = *self
                .boolean_inputs
                .iter()
                .next()
                .expect("a line or a Boolean input to anchor zero");
            self.bool_line(v).expect("Boolean input")
        } else {
            0
        };
        let l = self.lincomb(&BigInt::zero(), base, &BigInt::zero(), base);
        self.zero = Some(l);
        l
    }

    /// Line `v^2 - v`, derived from definitions when needed.
    pub fn bool_line(&mut self, v: VarId) -> Result<LineId, DeriveError> {
        let mut stack = vec![v];
        while let Some(&u) = stack.last() {
            if self.bool_lines.contains_key(&u) {
                stack.pop();
                continue;
            }
            if self.boolean_inputs.contains(&u) {
                let x = Polynomial::var(Ring::Z, u);
                let l = self.push(&(&x * &x) - &x, Justification::BooleanAxiom(u));
                self.bool_lines.insert(u, l);
                stack.pop();
                continue;
            }
            if !self.boolean_defs.contains(&u) {
                return Err(DeriveError::NotBoolean(u));
            }
            let q = self.defs[&u].0.clone();
            let missing: Vec<VarId> = q
                .vars()
                .into_iter()
                .filter(|w| !self.bool_lines.contains_key(w))
                .collect();
            if !missing.is_empty() {
                stack.extend(missing);
                continue;
            }
            let x = Polynomial::var(Ring::Z, u);
            let target = &(&x * &x) - &x;
            let l = self.derive_local(&target, Vec::new(), [u])?;
            self.bool_lines.insert(u, l);
            stack.pop();
        }
        Ok(self.bool_lines[&v])
    }

    /// Polynomial of a certificate source.
    pub fn src_poly(&self, s: Src) -> Polynomial {
        match s {
            Src::Line(l) => self.lines[l].poly.clone(),
            Src::Def(v) => &Polynomial::var(Ring::Z, v) - &self.defs[&v].0,
            Src::Bool(v) => {
                let x = Polynomial::var(Ring::Z, v);
                &(&x * &x) - &x
            }
            Src::Fact(_) => panic!("facts must be resolved before use"),
        }
    }

    fn resolve(&mut self, s: Src) -> Result<LineId, DeriveError> {
        match s {
            Src::Line(l) => Ok(l),
            Src::Def(v) => self.def_line(v).ok_or(DeriveError::NoDefinition(v)),
            Src::Bool(v) => self.bool_line(v),
            Src::Fact(_) => panic!("facts must be resolved before use"),
        }
    }

    fn mul_chain(&mut self, line: LineId, m: &Monomial) -> LineId {
        let mut cur = line;
        let mut prefix = Monomial::one();
        for &(v, e) in m.pairs() {
            for _ in 0..e {
                prefix = prefix.mul_var(v);
                let key = (line, prefix.clone());
                cur = match self.mul_cache.get(&key) {
                    Some(&l) => l,
                    None => {
                        let l = self.mul_var(v, cur);
                        self.mul_cache.insert(key, l);
                        l
                    }
                };
            }
        }
        cur
    }

    /// Emits `Σ h · src` as a single line.
    pub fn emit_certificate(&mut self, cert: &[(Polynomial, Src)]) -> Result<LineId, DeriveError> {
        let mut leaves: Vec<(BigInt, LineId)> = Vec::new();
        for (h, s) in cert {
            if h.is_zero() {
                continue;
            }
            let base = self.resolve(*s)?;
            for (m, c) in h.terms() {
                let l = self.mul_chain(base, m);
                leaves.push((c.to_integer(), l));
            }
        }
        if leaves.is_empty() {
            return Ok(self.zero_line());
        }
        while leaves.len() > 1 {
            let mut next = Vec::with_capacity(leaves.len() / 2 + 1);
            let mut it = leaves.into_iter();
            while let Some((a, i)) = it.next() {
                match it.next() {
                    Some((b, j)) => next.push((BigInt::one(), self.lincomb(&a, i, &b, j))),
                    None => next.push((a, i)),
                }
            }
            leaves = next;
        }
        let (c, l) = leaves.pop().expect("one leaf");
        Ok(self.scale(&c, l))
    }

    /// Certificate for `target - Σ manual` found by the reducer.
    pub fn plan(
        &self,
        target: &Polynomial,
        manual: &[(Polynomial, Src)],
        rules: &impl Rules,
    ) -> Result<Certificate, DeriveError> {
        let mut rem = target.clone();
        for (h, s) in manual {
            rem = &rem - &(h * &self.src_poly(*s));
        }
        let (res, extra) = normal_form(&rem, rules);
        if !res.is_zero() {
            return Err(DeriveError::Residual(res));
        }
        Ok(extra)
    }

    /// Derives `target` from the hand-given certificate `manual` plus whatever
    /// the reducer finds for the remainder.
    pub fn derive(
        &mut self,
        target: &Polynomial,
        mut manual: Certificate,
        rules: &impl Rules,
    ) -> Result<LineId, DeriveError> {
        let extra = self.plan(target, &manual, rules)?;
        manual.extend(extra);
        self.emit_checked(target, &manual)
    }

    pub fn emit_checked(
        &mut self,
        target: &Polynomial,
        cert: &[(Polynomial, Src)],
    ) -> Result<LineId, DeriveError> {
        let l = self.emit_certificate(cert)?;
        if self.lines[l].poly != *target {
            return Err(DeriveError::Residual(&self.lines[l].poly - target));
        }
        Ok(l)
    }

    /// Derives `target` by unfolding the definitions of `local`.
    pub fn derive_local(
        &mut self,
        target: &Polynomial,
        manual: Certificate,
        local: impl IntoIterator<Item = VarId>,
    ) -> Result<LineId, DeriveError> {
        let extra = {
            let rules = LocalRules::new(self, local);
            self.plan(target, &manual, &rules)?
        };
        let mut cert = manual;
        cert.extend(extra);
        self.emit_checked(target, &cert)
    }

    pub fn ebvp(
        &mut self,
        premise: LineId,
        g: Polynomial,
        m: BigInt,
        fs: Vec<Polynomial>,
        bool_lines: Vec<LineId>,
    ) -> LineId {
        self.push(
            g.clone(),
            Justification::Ebvp {
                premise,
                g,
                m,
                fs,
                bool_lines,
            },
        )
    }
}

/// A proof fragment whose first `assumptions.len()` lines are `Axiom` lines
/// standing for ambient lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub system: System,
    pub lines: Vec<ProofLine>,
    pub assumptions: Vec<Polynomial>,
    pub conclusions: Vec<LineId>,
}

impl Fragment {
    pub fn to_proof(&self) -> Proof {
        Proof::new(
            self.system.clone(),
            Dialect::ExtPCeBVP,
            self.lines.clone(),
            false,
        )
    }

    pub fn conclusion_polys(&self) -> Vec<&Polynomial> {
        self.conclusions
            .iter()
            .map(|&l| &self.lines[l].poly)
            .collect()
    }

    /// Appends the fragment to `target`, binding assumption `i` to `handles[i]`.
    /// Returns the positions of the conclusions in `target`.
    pub fn splice(&self, target: &mut Vec<ProofLine>, handles: &[LineId]) -> Vec<LineId> {
        assert_eq!(
            handles.len(),
            self.assumptions.len(),
            "one handle per assumption"
        );
        let mut map: Vec<LineId> = Vec::with_capacity(self.lines.len());
        for (idx, line) in self.lines.iter().enumerate() {
            if idx < self.assumptions.len() {
                map.push(handles[idx]);
                continue;
            }
            let just = line.just.map_premises(&mut |p| map[p]);
            target.push(ProofLine::new(line.poly.clone(), just));
            map.push(target.len() - 1);
        }
        self.conclusions.iter().map(|&c| map[c]).collect()
    }
}

/// Deriver whose first lines are the given assumptions.
pub struct FragmentBuilder {
    pub d: Deriver,
    assumptions: Vec<Polynomial>,
    inputs: BTreeSet<VarId>,
    boolean_inputs: Vec<VarId>,
}

impl FragmentBuilder {
    pub fn new(boolean_inputs: Vec<VarId>) -> Self {
        FragmentBuilder {
            d: Deriver::new(boolean_inputs.iter().copied()),
            assumptions: Vec::new(),
            inputs: boolean_inputs.iter().copied().collect(),
            boolean_inputs,
        }
    }

    pub fn assume(&mut self, poly: Polynomial) -> LineId {
        assert_eq!(
            self.d.len(),
            self.assumptions.len(),
            "assumptions come first"
        );
        self.inputs.extend(poly.vars());
        let i = self.assumptions.len();
        self.assumptions.push(poly.clone());
        self.d.push(poly, Justification::Axiom(i))
    }

    /// Assumes the definition `v = q`.
    pub fn assume_def(&mut self, v: VarId, q: &Polynomial, boolean: bool) -> LineId {
        let l = self.assume(&Polynomial::var(Ring::Z, v) - q);
        self.d.register_def(v, q.clone(), l, boolean);
        l
    }

    pub fn assume_bool(&mut self, v: VarId) -> LineId {
        let x = Polynomial::var(Ring::Z, v);
        let l = self.assume(&(&x * &x) - &x);
        self.d.register_bool(v, l);
        l
    }

    pub fn finish(self, conclusions: Vec<LineId>) -> Fragment {
        let system = System::new(
            Ring::Z,
            self.inputs.into_iter().collect(),
            self.assumptions.clone(),
            self.boolean_inputs,
        );
        Fragment {
            system,
            lines: self.d.lines,
            assumptions: self.assumptions,
            conclusions,
        }
    }
}
