//! Exact sparse multivariate polynomials over the integers or the rationals.
//!
//! Coefficients are stored as [`BigRational`] in both rings; a polynomial
//! tagged [`Ring::Z`] only ever holds integral coefficients, and every
//! constructor that could break this returns [`AlgebraError::NotIntegral`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Scalar = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("ring mismatch: {0:?} vs {1:?}")]
    RingMismatch(Ring, Ring),
    #[error("coefficient {0} is not an integer")]
    NotIntegral(BigRational),
    #[error("variable {0:?} is unassigned")]
    Unassigned(VarId),
    #[error("variable name `{0}` already declared")]
    DuplicateName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ring {
    Z,
    Q,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ring::Z => "Z",
            Ring::Q => "Q",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Input,
    Extension,
    Bit,
}

impl VarKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VarKind::Input => "input",
            VarKind::Extension => "extension",
            VarKind::Bit => "bit",
        }
    }

    pub fn parse(s: &str) -> Option<VarKind> {
        match s {
            "input" => Some(VarKind::Input),
            "extension" => Some(VarKind::Extension),
            "bit" => Some(VarKind::Bit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub kind: VarKind,
}

/// Global variable table shared by inputs, extension variables and bits.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    vars: Vec<VarInfo>,
    by_name: HashMap<String, VarId>,
    counters: HashMap<String, u64>,
}

impl PartialEq for Registry {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars
    }
}

impl Eq for Registry {}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, kind: VarKind) -> Result<VarId, AlgebraError> {
        if self.by_name.contains_key(name) {
            return Err(AlgebraError::DuplicateName(name.to_string()));
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarInfo {
            name: name.to_string(),
            kind,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Allocates `prefix<n>` for the smallest counter value not yet taken.
    pub fn fresh(&mut self, prefix: &str, kind: VarKind) -> VarId {
        let counter = self.counters.entry(prefix.to_string()).or_insert(0);
        loop {
            *counter += 1;
            let name = format!("{prefix}{counter}");
            if !self.by_name.contains_key(&name) {
                let id = VarId(self.vars.len() as u32);
                self.vars.push(VarInfo {
                    name: name.clone(),
                    kind,
                });
                self.by_name.insert(name, id);
                return id;
            }
        }
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        v.index() < self.vars.len()
    }

    pub fn kind(&self, v: VarId) -> VarKind {
        self.vars[v.index()].kind
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &VarInfo)> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, info)| (VarId(i as u32), info))
    }
}

/// Product of variable powers, kept sorted by variable with positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn from_pairs<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<VarId, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn pairs(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.0
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.0.last().map(|&(v, _)| v)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn mul_var(&self, v: VarId) -> Monomial {
        self.mul(&Monomial::var(v))
    }

    /// Divides by `v^e`; `None` if `v` does not occur with exponent at least `e`.
    pub fn div_var(&self, v: VarId, e: u32) -> Option<Monomial> {
        let pos = self.0.iter().position(|&(w, _)| w == v)?;
        let have = self.0[pos].1;
        if have < e {
            return None;
        }
        let mut out = self.0.clone();
        if have == e {
            out.remove(pos);
        } else {
            out[pos].1 = have - e;
        }
        Some(Monomial(out))
    }

    /// Every variable raised to exponent one.
    pub fn is_multilinear(&self) -> bool {
        self.0.iter().all(|&(_, e)| e == 1)
    }

    pub fn eval<F>(&self, value: &mut F) -> Result<BigRational, AlgebraError>
    where
        F: FnMut(VarId) -> Option<BigRational>,
    {
        let mut acc = BigRational::one();
        for &(v, e) in &self.0 {
            let x = value(v).ok_or(AlgebraError::Unassigned(v))?;
            acc *= num_traits::pow(x, e as usize);
        }
        Ok(acc)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical sparse polynomial. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    ring: Ring,
    terms: BTreeMap<Monomial, BigRational>,
}

pub fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

pub fn ceil_log2(n: &BigUint) -> u64 {
    if n.is_zero() {
        0
    } else {
        (n - 1u32).bits()
    }
}

fn check_scalar(ring: Ring, c: &BigRational) -> Result<(), AlgebraError> {
    if ring == Ring::Z && !c.is_integer() {
        Err(AlgebraError::NotIntegral(c.clone()))
    } else {
        Ok(())
    }
}

impl Polynomial {
    pub fn zero(ring: Ring) -> Self {
        Polynomial {
            ring,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ring: Ring) -> Self {
        Self::constant_int(ring, 1)
    }

    pub fn constant(ring: Ring, c: BigRational) -> Result<Self, AlgebraError> {
        Self::from_terms(ring, [(Monomial::one(), c)])
    }

    pub fn constant_int(ring: Ring, c: impl Into<BigInt>) -> Self {
        Self::term_unchecked(ring, Monomial::one(), int(c))
    }

    pub fn var(ring: Ring, v: VarId) -> Self {
        Self::term_unchecked(ring, Monomial::var(v), BigRational::one())
    }

    pub fn term(ring: Ring, m: Monomial, c: BigRational) -> Result<Self, AlgebraError> {
        Self::from_terms(ring, [(m, c)])
    }

    fn term_unchecked(ring: Ring, m: Monomial, c: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Polynomial { ring, terms }
    }

    /// Builds a polynomial from possibly repeated terms, merging and dropping zeros.
    pub fn from_terms<I>(ring: Ring, terms: I) -> Result<Self, AlgebraError>
    where
        I: IntoIterator<Item = (Monomial, BigRational)>,
    {
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (m, c) in terms {
            check_scalar(ring, &c)?;
            *map.entry(m).or_insert_with(BigRational::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Polynomial { ring, terms: map })
    }

    /// Integer-coefficient shorthand used heavily by generators.
    pub fn from_int_terms<I, C>(ring: Ring, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, C)>,
        C: Into<BigInt>,
    {
        Self::from_terms(ring, terms.into_iter().map(|(m, c)| (m, int(c))))
            .expect("integral coefficients")
    }

    /// `Σ c_i v_i + c` for a list of `(var, coefficient)` pairs.
    pub fn linear<C: Into<BigInt>>(ring: Ring, vars: Vec<(VarId, C)>, c: C) -> Self {
        let mut terms: Vec<(Monomial, BigInt)> = vars
            .into_iter()
            .map(|(v, a)| (Monomial::var(v), a.into()))
            .collect();
        terms.push((Monomial::one(), c.into()));
        Self::from_int_terms(ring, terms)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// Terms from the highest graded monomial down; the serialization order.
    pub fn terms_desc(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter().rev()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn constant_term(&self) -> BigRational {
        self.coefficient(&Monomial::one())
    }

    /// The value if the polynomial is constant (zero included).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .next_back()
            .map(Monomial::degree)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.terms.keys().filter_map(Monomial::max_var).max()
    }

    /// Total bit length of the coefficients.
    pub fn size(&self) -> u64 {
        self.terms
            .values()
            .map(|c| {
                let a = c.numer().magnitude();
                let b = c.denom().magnitude();
                let den = if self.ring == Ring::Q {
                    ceil_log2(b)
                } else {
                    0
                };
                ceil_log2(a) + den + 1
            })
            .sum()
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, AlgebraError> {
        self.same_ring(other)?;
        let mut out = self.clone();
        out.add_assign_scaled(other, &BigRational::one());
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, AlgebraError> {
        self.same_ring(other)?;
        let mut out = self.clone();
        out.add_assign_scaled(other, &-BigRational::one());
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, AlgebraError> {
        self.same_ring(other)?;
        let mut map: BTreeMap<Monomial, BigRational> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                *map.entry(m1.mul(m2)).or_insert_with(BigRational::zero) += c1 * c2;
            }
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Polynomial {
            ring: self.ring,
            terms: map,
        })
    }

    fn same_ring(&self, other: &Polynomial) -> Result<(), AlgebraError> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(AlgebraError::RingMismatch(self.ring, other.ring))
        }
    }

    /// `self += c * other`; the caller guarantees ring compatibility of `c`.
    pub fn add_assign_scaled(&mut self, other: &Polynomial, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        for (m, a) in &other.terms {
            let prod = a * c;
            match self.terms.get_mut(m) {
                Some(slot) => {
                    *slot += prod;
                    if slot.is_zero() {
                        self.terms.remove(m);
                    }
                }
                None => {
                    self.terms.insert(m.clone(), prod);
                }
            }
        }
    }

    /// `self += c * m * other`.
    pub fn add_assign_term_product(&mut self, other: &Polynomial, m: &Monomial, c: &BigRational) {
        if c.is_zero() {
            return;
        }
        for (m2, a) in &other.terms {
            let key = m.mul(m2);
            let prod = a * c;
            match self.terms.get_mut(&key) {
                Some(slot) => {
                    *slot += prod;
                    if slot.is_zero() {
                        self.terms.remove(&key);
                    }
                }
                None => {
                    self.terms.insert(key, prod);
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Result<Polynomial, AlgebraError> {
        check_scalar(self.ring, c)?;
        if c.is_zero() {
            return Ok(Polynomial::zero(self.ring));
        }
        Ok(Polynomial {
            ring: self.ring,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        })
    }

    pub fn scale_int(&self, c: &BigInt) -> Polynomial {
        self.scale(&BigRational::from_integer(c.clone()))
            .expect("integer scale")
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial {
            ring: self.ring,
            terms: self
                .terms
                .iter()
                .map(|(m2, a)| (m.mul(m2), a.clone()))
                .collect(),
        }
    }

    pub fn mul_var(&self, v: VarId) -> Polynomial {
        self.mul_monomial(&Monomial::var(v))
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one(self.ring);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval_with<F>(&self, mut value: F) -> Result<BigRational, AlgebraError>
    where
        F: FnMut(VarId) -> Option<BigRational>,
    {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            acc += c * m.eval(&mut value)?;
        }
        Ok(acc)
    }

    pub fn eval(
        &self,
        assignment: &HashMap<VarId, BigRational>,
    ) -> Result<BigRational, AlgebraError> {
        self.eval_with(|v| assignment.get(&v).cloned())
    }

    /// Replaces every occurrence of `v` by `q`.
    pub fn substitute(&self, v: VarId, q: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.ring);
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                out.add_assign_term_product(&Polynomial::one(self.ring), m, c);
            } else {
                let rest = m.div_var(v, e).expect("exponent present");
                out.add_assign_term_product(&q.pow(e), &rest, c);
            }
        }
        out
    }

    pub fn to_ring(&self, ring: Ring) -> Result<Polynomial, AlgebraError> {
        for c in self.terms.values() {
            check_scalar(ring, c)?;
        }
        Ok(Polynomial {
            ring,
            terms: self.terms.clone(),
        })
    }

    /// Human-readable rendering with registry names, highest terms first.
    pub fn display<'a>(&'a self, reg: &'a Registry) -> PolyDisplay<'a> {
        PolyDisplay {
            poly: self,
            reg: Some(reg),
        }
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    reg: Option<&'a Registry>,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.poly.terms_desc().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if k == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let show_coef = m.is_one() || !abs.is_one();
            if show_coef {
                write!(f, "{abs}")?;
            }
            for (i, &(v, e)) in m.pairs().iter().enumerate() {
                if show_coef || i > 0 {
                    f.write_str("*")?;
                }
                match self.reg {
                    Some(r) if r.contains(v) => f.write_str(r.name(v))?,
                    _ => write!(f, "v{}", v.0)?,
                }
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        PolyDisplay {
            poly: self,
            reg: None,
        }
        .fmt(f)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $call:ident) => {
        impl std::ops::$tr<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$call(rhs).expect("ring mismatch")
            }
        }
        impl std::ops::$tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$call(&rhs).expect("ring mismatch")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            ring: self.ring,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl std::ops::Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

pub fn poly_add(a: &Polynomial, b: &Polynomial) -> Result<Polynomial, AlgebraError> {
    a.try_add(b)
}

pub fn poly_mul(a: &Polynomial, b: &Polynomial) -> Result<Polynomial, AlgebraError> {
    a.try_mul(b)
}

pub fn poly_eval(
    f: &Polynomial,
    assignment: &HashMap<VarId, BigRational>,
) -> Result<BigRational, AlgebraError> {
    f.eval(assignment)
}

pub fn size_of(f: &Polynomial) -> u64 {
    f.size()
}

pub fn poly_degree(f: &Polynomial) -> u32 {
    f.degree()
}
