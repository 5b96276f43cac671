//! Forward and backward propagation of small equalities over bit variables.
//!
//! A fact `v = value` says that a bit variable equals a polynomial of at most
//! a few terms in earlier variables. Facts come from definitions (forward:
//! the reduced definition is small) and from relations between two values of
//! the same variable (backward: `a·w + rest = 0` with `a = ±1` fixes `w`).
//! Certificates refer to earlier facts, so emission walks a DAG.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::One;

use super::{normal_form, Certificate, DeriveError, Deriver, LineId, Rules, Src};
use crate::algebra::{Monomial, Polynomial, Ring, VarId};
use crate::bitblast::Bit;

const MAX_TERMS: usize = 6;

#[derive(Debug, Clone)]
struct FactRec {
    var: VarId,
    value: Polynomial,
    /// `var - value = Σ h · src`.
    cert: Certificate,
}

pub struct Facts {
    recs: Vec<FactRec>,
    current: HashMap<VarId, usize>,
    emitted: HashMap<usize, LineId>,
    scope: BTreeSet<VarId>,
    dependents: HashMap<VarId, Vec<VarId>>,
    contradiction: Option<Certificate>,
}

struct FactRules<'a> {
    f: &'a Facts,
    d: &'a Deriver,
}

impl Rules for FactRules<'_> {
    fn subst(&self, v: VarId) -> Option<(&Polynomial, Src)> {
        self.f
            .current
            .get(&v)
            .map(|&id| (&self.f.recs[id].value, Src::Fact(id)))
    }

    fn is_atom(&self, v: VarId) -> bool {
        self.d.is_boolean(v)
    }
}

fn rank(p: &Polynomial) -> (u8, usize) {
    (u8::from(!p.is_constant()), p.num_terms())
}

/// Splits `p = a·w + rest` with `w` the largest variable, occurring only as
/// the bare monomial `w` with `a = ±1`.
fn pivot(p: &Polynomial) -> Option<(VarId, BigInt, Polynomial)> {
    let w = p.max_var()?;
    let with_w: Vec<(&Monomial, _)> = p.terms().filter(|(m, _)| m.exponent(w) > 0).collect();
    if with_w.len() != 1 || *with_w[0].0 != Monomial::var(w) {
        return None;
    }
    let a = with_w[0].1.to_integer();
    if !(a.is_one() || a == -BigInt::one()) {
        return None;
    }
    let rest = p - &Polynomial::var(Ring::Z, w).scale_int(&a);
    (rest.num_terms() <= MAX_TERMS).then_some((w, a, rest))
}

fn scaled(cert: &[(Polynomial, Src)], c: &BigInt) -> Certificate {
    cert.iter().map(|(h, s)| (h.scale_int(c), *s)).collect()
}

impl Facts {
    pub fn new(d: &Deriver, scope: impl IntoIterator<Item = VarId>) -> Self {
        let scope: BTreeSet<VarId> = scope.into_iter().filter(|v| d.def(*v).is_some()).collect();
        let mut dependents: HashMap<VarId, Vec<VarId>> = HashMap::new();
        for &v in &scope {
            for w in d.def(v).expect("filtered").vars() {
                dependents.entry(w).or_default().push(v);
            }
        }
        Facts {
            recs: Vec::new(),
            current: HashMap::new(),
            emitted: HashMap::new(),
            scope,
            dependents,
            contradiction: None,
        }
    }

    pub fn value(&self, v: VarId) -> Option<&Polynomial> {
        self.current.get(&v).map(|&id| &self.recs[id].value)
    }

    pub fn has_contradiction(&self) -> bool {
        self.contradiction.is_some()
    }

    /// Uses an ambient line of the shape `±w + rest` as a relation.
    pub fn assume_line(&mut self, d: &Deriver, l: LineId) {
        let p = d.poly(l).clone();
        let mut queue = BTreeSet::new();
        self.relate(
            d,
            &p,
            vec![(Polynomial::one(Ring::Z), Src::Line(l))],
            &mut queue,
        );
    }

    /// Propagates to a fixpoint.
    pub fn run(&mut self, d: &Deriver) {
        let mut queue: BTreeSet<VarId> = self.scope.clone();
        while let Some(v) = queue.pop_first() {
            if self.contradiction.is_some() {
                return;
            }
            let Some(q) = d.def(v) else { continue };
            if !self.scope.contains(&v) {
                continue;
            }
            let (n, cq) = normal_form(q, &FactRules { f: self, d });
            let mut cert: Certificate = vec![(Polynomial::one(Ring::Z), Src::Def(v))];
            cert.extend(cq);
            if n.num_terms() <= MAX_TERMS {
                self.offer(d, v, n, cert, &mut queue);
            } else if let Some(&id) = self.current.get(&v) {
                let old = self.recs[id].value.clone();
                cert.push((-Polynomial::one(Ring::Z), Src::Fact(id)));
                self.relate(d, &(&old - &n), cert, &mut queue);
            }
        }
    }

    fn offer(
        &mut self,
        d: &Deriver,
        v: VarId,
        value: Polynomial,
        cert: Certificate,
        queue: &mut BTreeSet<VarId>,
    ) {
        match self.current.get(&v).copied() {
            None => {
                self.install(v, value, cert, queue);
            }
            Some(id) => {
                let old = self.recs[id].value.clone();
                if old == value {
                    return;
                }
                let mut rel = cert.clone();
                rel.push((-Polynomial::one(Ring::Z), Src::Fact(id)));
                self.relate(d, &(&old - &value), rel, queue);
                if rank(&value) < rank(&old) && self.current.get(&v) == Some(&id) {
                    self.install(v, value, cert, queue);
                }
            }
        }
    }

    fn install(
        &mut self,
        v: VarId,
        value: Polynomial,
        cert: Certificate,
        queue: &mut BTreeSet<VarId>,
    ) {
        self.recs.push(FactRec {
            var: v,
            value,
            cert,
        });
        self.current.insert(v, self.recs.len() - 1);
        queue.insert(v);
        if let Some(ds) = self.dependents.get(&v) {
            queue.extend(ds.iter().copied());
        }
    }

    /// `p = Σ cert` is known to vanish.
    fn relate(
        &mut self,
        d: &Deriver,
        p: &Polynomial,
        cert: Certificate,
        queue: &mut BTreeSet<VarId>,
    ) {
        if let Some((w, a, rest)) = pivot(p) {
            if self.value(w).is_none_or(|old| rank(&rest) < rank(old)) {
                let value = rest.scale_int(&-a.clone());
                self.offer(d, w, value, scaled(&cert, &a), queue);
                return;
            }
        }
        let (r, c2) = normal_form(p, &FactRules { f: self, d });
        if r.is_zero() {
            return;
        }
        let mut cert_r = cert;
        cert_r.extend(scaled(&c2, &-BigInt::one()));
        if r.is_constant() {
            self.contradiction = Some(cert_r);
            return;
        }
        if let Some((w, a, rest)) = pivot(&r) {
            let value = rest.scale_int(&-a.clone());
            self.offer(d, w, value, scaled(&cert_r, &a), queue);
        }
    }

    fn emit_fact(&mut self, d: &mut Deriver, id: usize) -> Result<LineId, DeriveError> {
        let mut stack = vec![id];
        while let Some(&top) = stack.last() {
            if self.emitted.contains_key(&top) {
                stack.pop();
                continue;
            }
            let missing: Vec<usize> = self.recs[top]
                .cert
                .iter()
                .filter_map(|(_, s)| match s {
                    Src::Fact(j) if !self.emitted.contains_key(j) => Some(*j),
                    _ => None,
                })
                .collect();
            if !missing.is_empty() {
                stack.extend(missing);
                continue;
            }
            let cert = self.resolved(&self.recs[top].cert);
            let rec = &self.recs[top];
            let target = &Polynomial::var(Ring::Z, rec.var) - &rec.value;
            let l = d.emit_checked(&target, &cert)?;
            self.emitted.insert(top, l);
            stack.pop();
        }
        Ok(self.emitted[&id])
    }

    fn resolved(&self, cert: &[(Polynomial, Src)]) -> Certificate {
        cert.iter()
            .map(|(h, s)| match s {
                Src::Fact(j) => (h.clone(), Src::Line(self.emitted[j])),
                other => (h.clone(), *other),
            })
            .collect()
    }

    /// Line `v - value(v)`.
    pub fn emit(&mut self, d: &mut Deriver, v: VarId) -> Result<Option<LineId>, DeriveError> {
        match self.current.get(&v).copied() {
            Some(id) => self.emit_fact(d, id).map(Some),
            None => Ok(None),
        }
    }

    /// Line `b` when `b` is known to be zero.
    pub fn zero_line(&mut self, d: &mut Deriver, b: Bit) -> Result<LineId, DeriveError> {
        match b {
            Bit::Zero => Ok(d.zero_line()),
            Bit::One => Err(DeriveError::Stuck("constant one bit is not zero".into())),
            Bit::Var(v) => match self.value(v) {
                Some(val) if val.is_zero() => Ok(self.emit(d, v)?.expect("fact exists")),
                _ => Err(DeriveError::Stuck(format!("no zero fact for {v:?}"))),
            },
        }
    }

    /// Emits the contradiction line if one was found.
    pub fn emit_contradiction(&mut self, d: &mut Deriver) -> Result<Option<LineId>, DeriveError> {
        let Some(cert) = self.contradiction.clone() else {
            return Ok(None);
        };
        for (_, s) in &cert {
            if let Src::Fact(j) = s {
                self.emit_fact(d, *j)?;
            }
        }
        let cert = self.resolved(&cert);
        let l = d.emit_certificate(&cert)?;
        Ok(Some(l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Registry, VarKind};
    use crate::bitblast::Emitter;

    #[test]
    fn forward_and_backward() {
        let mut reg = Registry::new();
        let a = reg.declare("a", VarKind::Input).unwrap();
        let b = reg.declare("b", VarKind::Input).unwrap();
        let mut em = Emitter::new(&mut reg);
        let u = em.xor(Bit::Var(a), Bit::Var(b));
        let w = em.xor(u, Bit::Var(b));
        let defs: Vec<(VarId, Polynomial)> =
            em.defs.iter().map(|d| (d.var, d.def.clone())).collect();
        let mut d = Deriver::new([a, b]);
        for (v, q) in &defs {
            d.ext_def(*v, q.clone(), true);
        }
        let mut f = Facts::new(&d, defs.iter().map(|p| p.0));
        f.run(&d);
        // (a xor b) xor b reduces to a.
        assert_eq!(
            f.value(w.var().unwrap()),
            Some(&Polynomial::var(Ring::Z, a))
        );
        let l = f.emit(&mut d, w.var().unwrap()).unwrap().unwrap();
        assert_eq!(
            d.poly(l),
            &(&Polynomial::var(Ring::Z, w.var().unwrap()) - &Polynomial::var(Ring::Z, a))
        );

        // w = 0 forces a = 0.
        let wl = d.push(
            Polynomial::var(Ring::Z, w.var().unwrap()),
            crate::proofs::Justification::Axiom(0),
        );
        f.assume_line(&d, wl);
        f.run(&d);
        assert_eq!(f.value(a), Some(&Polynomial::zero(Ring::Z)));
    }
}
