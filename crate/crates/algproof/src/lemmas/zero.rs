//! Bits of a zero value, and the square lemma.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::gadgets::{fragment_for_gadget, prod_vars, zero_by_facts};
use super::{DeriveError, Deriver, Fragment, FragmentBuilder, LineId};
use crate::algebra::{Polynomial, Registry, Ring, VarId};
use crate::bitblast::{emit_prod, val_polynomial, Bit, BitVec, ProdGadget};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitsOfZero {
    /// One line per bit of the input vector, each equal to that bit.
    pub zeros: Vec<LineId>,
    pub ebvp_steps: usize,
}

fn power_of_two(w: &BigInt) -> Option<usize> {
    let m = w.magnitude();
    if m.is_zero() || (m & (m - 1u32)) != Zero::zero() {
        None
    } else {
        Some(m.bits() as usize - 1)
    }
}

/// From a line equal to `Σ w_i r_i + c` over distinct Boolean variables with
/// power-of-two weights, derives `r_i = 0` for every variable, peeling the
/// variable of largest weight each round with one EBVP step.
pub fn peel_zero(
    d: &mut Deriver,
    line: LineId,
) -> Result<(HashMap<VarId, LineId>, usize), DeriveError> {
    let mut cur = line;
    let mut zeros = HashMap::new();
    let mut steps = 0;
    loop {
        let p = d.poly(cur).clone();
        if p.degree() > 1 {
            return Err(DeriveError::Shape(cur));
        }
        let c = p.constant_term().to_integer();
        let mut weights: Vec<(VarId, BigInt)> = p
            .terms()
            .filter(|(m, _)| !m.is_one())
            .map(|(m, w)| (m.max_var().expect("linear"), w.to_integer()))
            .collect();
        if weights.is_empty() {
            if c.is_zero() {
                return Ok((zeros, steps));
            }
            return Err(DeriveError::Contradiction(cur));
        }
        weights.sort_by(|a, b| a.1.magnitude().cmp(b.1.magnitude()).then(a.0.cmp(&b.0)));
        let (rj, wj) = weights.pop().expect("non-empty");
        let mut slots: Vec<Option<(VarId, BigInt)>> = Vec::new();
        for (v, w) in &weights {
            let t = power_of_two(w).ok_or(DeriveError::Shape(cur))?;
            if slots.len() <= t {
                slots.resize(t + 1, None);
            }
            if slots[t].is_some() {
                return Err(DeriveError::Shape(cur));
            }
            slots[t] = Some((*v, w.clone()));
        }
        let pos: BigInt = weights
            .iter()
            .filter(|(_, w)| w.is_positive())
            .map(|(_, w)| w.clone())
            .sum();
        let neg: BigInt = weights
            .iter()
            .filter(|(_, w)| w.is_negative())
            .map(|(_, w)| -w.clone())
            .sum();
        let m_plus = &wj + &c - &neg;
        let m_minus = -&wj - &c - &pos;
        let (orient, m) = if m_plus.is_positive() {
            (BigInt::one(), m_plus)
        } else if m_minus.is_positive() {
            (-BigInt::one(), m_minus)
        } else {
            return Err(DeriveError::Stuck(format!(
                "no positive constant at line {cur}"
            )));
        };
        let l1 = d.mul_var(rj, cur);
        let bj = d.bool_line(rj)?;
        let l2 = d.lincomb(&BigInt::one(), l1, &-wj.clone(), bj);
        let premise = d.scale(&orient, l2);
        let mut fs = Vec::with_capacity(slots.len());
        let mut wit = Vec::with_capacity(slots.len());
        for slot in &slots {
            match slot {
                Some((v, w)) => {
                    let x = Polynomial::var(Ring::Z, *v);
                    let f = if (w * &orient).is_positive() {
                        x
                    } else {
                        &Polynomial::one(Ring::Z) - &x
                    };
                    fs.push(f);
                    wit.push(d.bool_line(*v)?);
                }
                None => {
                    fs.push(Polynomial::zero(Ring::Z));
                    wit.push(d.zero_line());
                }
            }
        }
        let e = d.ebvp(premise, Polynomial::var(Ring::Z, rj), m, fs, wit);
        steps += 1;
        zeros.insert(rj, e);
        cur = d.lincomb(&BigInt::one(), cur, &-wj, e);
    }
}

/// Zero lines for every bit of `bits`, given a line equal to `VAL(bits)`.
pub fn bits_of_zero(
    d: &mut Deriver,
    bits: &BitVec,
    line: LineId,
) -> Result<BitsOfZero, DeriveError> {
    if *d.poly(line) != val_polynomial(bits) {
        return Err(DeriveError::Shape(line));
    }
    let (map, steps) = peel_zero(d, line)?;
    let mut zeros = Vec::with_capacity(bits.width());
    for b in &bits.0 {
        zeros.push(match b {
            Bit::Zero => d.zero_line(),
            Bit::One => {
                return Err(DeriveError::Stuck(
                    "constant one bit in a zero value".into(),
                ))
            }
            Bit::Var(v) => *map.get(v).ok_or(DeriveError::Shape(line))?,
        });
    }
    Ok(BitsOfZero {
        zeros,
        ebvp_steps: steps,
    })
}

/// Fragment: Boolean lines for the variable bits and `VAL(bits) = 0` give
/// every bit equal to zero.
pub fn derive_bits_of_zero(bits: &BitVec) -> Result<(Fragment, BitsOfZero), DeriveError> {
    let mut fb = FragmentBuilder::new(Vec::new());
    let mut seen = std::collections::HashSet::new();
    for b in &bits.0 {
        if let Bit::Var(v) = b {
            if seen.insert(*v) {
                fb.assume_bool(*v);
            }
        }
    }
    let l = fb.assume(val_polynomial(bits));
    let res = bits_of_zero(&mut fb.d, bits, l)?;
    Ok((fb.finish(res.zeros.clone()), res))
}

/// Sign of `PRD(r, r)` is zero.
pub fn square_part1(d: &mut Deriver, g: &ProdGadget) -> Result<LineId, DeriveError> {
    let lines = zero_by_facts(d, &prod_vars(g), &[], &[g.out.sign()])?;
    Ok(lines[0])
}

/// With every output bit of `PRD(r, r)` zero, every bit of `r` is zero.
pub fn square_part2(
    d: &mut Deriver,
    g: &ProdGadget,
    zero_lines: &[LineId],
) -> Result<Vec<LineId>, DeriveError> {
    if zero_lines.len() != g.out.width() {
        return Err(DeriveError::Stuck(
            "one zero line per product bit is required".into(),
        ));
    }
    zero_by_facts(d, &prod_vars(g), zero_lines, &g.y.0)
}

/// Square lemma as a fragment over fresh gadget variables. Conclusions: the
/// product sign line, then (with `with_zero_product`) one zero line per bit of `r`.
pub fn derive_square_lemma(
    r: &BitVec,
    with_zero_product: bool,
    reg: &mut Registry,
) -> Result<Fragment, DeriveError> {
    let (mut fb, g) = fragment_for_gadget(reg, &[r], |em| emit_prod(em, r, r));
    let mut zero_lines = Vec::new();
    if with_zero_product {
        for b in &g.out.0 {
            zero_lines.push(match b {
                Bit::Var(_) => fb.assume(b.poly()),
                _ => usize::MAX,
            });
        }
    }
    let d = &mut fb.d;
    let mut concl = vec![square_part1(d, &g)?];
    if with_zero_product {
        let z = d.zero_line();
        let lines: Vec<LineId> = zero_lines
            .iter()
            .map(|&l| if l == usize::MAX { z } else { l })
            .collect();
        concl.extend(square_part2(d, &g, &lines)?);
    }
    Ok(fb.finish(concl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::VarKind;
    use crate::proofs::{check_proof, Justification};

    fn operand(reg: &mut Registry, w: usize) -> BitVec {
        BitVec(
            (0..w)
                .map(|i| Bit::Var(reg.declare(&format!("r{i}"), VarKind::Input).unwrap()))
                .collect(),
        )
    }

    #[test]
    fn bits_of_zero_small() {
        for w in 1..=4 {
            let mut reg = Registry::new();
            let r = operand(&mut reg, w);
            let (frag, res) = derive_bits_of_zero(&r).unwrap();
            let rep = check_proof(&frag.to_proof());
            assert!(rep.accepted, "{:?}", rep.first_failure);
            assert_eq!(res.ebvp_steps, w);
            let ebvps = frag
                .lines
                .iter()
                .filter(|l| matches!(l.just, Justification::Ebvp { .. }))
                .count();
            assert_eq!(ebvps, w);
            for (l, b) in frag.conclusion_polys().into_iter().zip(&r.0) {
                assert_eq!(*l, b.poly());
            }
        }
    }

    #[test]
    fn first_round_orientation() {
        let mut reg = Registry::new();
        let r = operand(&mut reg, 2);
        let (frag, _) = derive_bits_of_zero(&r).unwrap();
        let first = frag.lines.iter().find_map(|l| match &l.just {
            Justification::Ebvp { m, fs, .. } => Some((m.clone(), fs.clone())),
            _ => None,
        });
        let (m, fs) = first.unwrap();
        assert_eq!(m, BigInt::one());
        let r0 = r.0[0].poly();
        assert_eq!(fs, vec![&Polynomial::one(Ring::Z) - &r0]);
    }

    #[test]
    fn square_lemma_parts() {
        for w in 1..=3 {
            let mut reg = Registry::new();
            let r = operand(&mut reg, w);
            let frag = derive_square_lemma(&r, false, &mut reg).unwrap();
            assert!(check_proof(&frag.to_proof()).accepted);
            let frag = derive_square_lemma(&r, true, &mut reg).unwrap();
            let rep = check_proof(&frag.to_proof());
            assert!(rep.accepted, "{:?}", rep.first_failure);
            let polys = frag.conclusion_polys();
            for (i, b) in r.0.iter().enumerate() {
                assert_eq!(*polys[i + 1], b.poly());
            }
        }
    }
}
