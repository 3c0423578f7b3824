//! Finitely presented, evenly graded commutative rings over exact rationals.
//!
//! A ring is presented by generators with positive even cohomological
//! degrees and a confluent set of rewrite rules `leading monomial ->
//! lower-order polynomial`. Everything above the top degree `2n` is
//! truncated to zero, which is what makes the presentations of closed
//! 2n-manifolds finite. Elements are kept in normal form at all times:
//! no rule's leading monomial divides a stored monomial, and zero
//! coefficients are never stored.
//!
//! All scalar arithmetic is exact (arbitrary-precision rationals); the
//! factorization verdicts built on top of this module are proofs, so no
//! floating point is allowed anywhere in here.

mod parse;

pub use parse::{parse_expression, parse_manifold_spec, ParseError, ParsedSpec};

use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Exact scalar type used throughout the algebra subsystem.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RingError {
    #[error("generator `{name}` has degree {degree}; degrees must be positive and even")]
    BadGeneratorDegree { name: String, degree: i64 },
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("relation {index}: leading monomial has degree {degree}, above top degree {top}")]
    RelationAboveTop { index: usize, degree: u32, top: u32 },
    #[error("relation {index}: right-hand side is not lower than the leading monomial in the term order")]
    RelationNotDecreasing { index: usize },
    #[error("presentation is not confluent: monomial `{monomial}` reduces to distinct normal forms via rules {rule_a} and {rule_b}")]
    NotConfluent {
        monomial: String,
        rule_a: usize,
        rule_b: usize,
    },
    #[error("top degree {0} must be positive and even")]
    BadTopDegree(u32),
    #[error("elements belong to different rings")]
    MismatchedRings,
    #[error("cannot invert: constant term is zero")]
    ZeroConstantTerm,
    #[error("the zero element has no degree")]
    ZeroElement,
    #[error("invalid manifold data: {0}")]
    BadManifold(String),
}

/// A generator together with its cohomological degree (positive, even).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: u32,
}

/// Exponent vector over the ring's generators, with its cohomological
/// degree cached. Ordered by (degree, then exponents compared from the
/// last generator backwards); the order is multiplication-compatible,
/// so rewriting along it terminates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    degree: u32,
    exps: Vec<u32>,
}

impl Monomial {
    fn new(exps: Vec<u32>, gens: &[Generator]) -> Self {
        debug_assert_eq!(exps.len(), gens.len());
        let degree = exps
            .iter()
            .zip(gens)
            .map(|(&e, g)| e * g.degree)
            .sum::<u32>();
        Monomial { degree, exps }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn is_unit(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    fn quotient(&self, divisor: &Monomial) -> Monomial {
        let exps: Vec<u32> = self
            .exps
            .iter()
            .zip(&divisor.exps)
            .map(|(a, b)| a - b)
            .collect();
        Monomial {
            degree: self.degree - divisor.degree,
            exps,
        }
    }

    fn product(&self, other: &Monomial) -> Monomial {
        let exps: Vec<u32> = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(a, b)| a + b)
            .collect();
        Monomial {
            degree: self.degree + other.degree,
            exps,
        }
    }

    pub fn format(&self, ring: &RingPresentation) -> String {
        if self.is_unit() {
            return "1".to_string();
        }
        let mut parts = Vec::new();
        for (e, g) in self.exps.iter().zip(&ring.generators) {
            match e {
                0 => {}
                1 => parts.push(g.name.clone()),
                _ => parts.push(format!("{}^{}", g.name, e)),
            }
        }
        parts.join("*")
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| self.exps.iter().rev().cmp(other.exps.iter().rev()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A rewrite rule `lead -> rhs`, with every monomial of `rhs` strictly
/// below `lead` in the term order.
#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    pub lead: Monomial,
    pub rhs: Vec<(Monomial, Rational)>,
}

/// Presentation of an evenly graded commutative algebra over the
/// rationals, truncated above `top_degree`.
#[derive(Debug, PartialEq)]
pub struct RingPresentation {
    generators: Vec<Generator>,
    relations: Vec<RewriteRule>,
    top_degree: u32,
}

/// Raw polynomial input for [`RingPresentation::normalize`]: pairs of
/// exponent vectors and coefficients, in no particular order.
pub type RawPoly = Vec<(Vec<u32>, Rational)>;

impl RingPresentation {
    /// Validates and loads a presentation. Relations are given as
    /// `(lead exponents, rhs)`; confluence is verified by exhaustively
    /// reducing every monomial of degree at most `top_degree` one step
    /// along each applicable rule and comparing full normal forms.
    pub fn new(
        generators: Vec<Generator>,
        relations: Vec<(Vec<u32>, RawPoly)>,
        top_degree: u32,
    ) -> Result<Arc<Self>, RingError> {
        if top_degree == 0 || top_degree % 2 != 0 {
            return Err(RingError::BadTopDegree(top_degree));
        }
        let mut seen = std::collections::BTreeSet::new();
        for g in &generators {
            if g.degree == 0 || g.degree % 2 != 0 {
                return Err(RingError::BadGeneratorDegree {
                    name: g.name.clone(),
                    degree: g.degree as i64,
                });
            }
            if !seen.insert(g.name.clone()) {
                return Err(RingError::DuplicateGenerator(g.name.clone()));
            }
        }

        let mut rules = Vec::new();
        for (index, (lead_exps, rhs_raw)) in relations.into_iter().enumerate() {
            let lead = Monomial::new(lead_exps, &generators);
            if lead.degree > top_degree {
                return Err(RingError::RelationAboveTop {
                    index,
                    degree: lead.degree,
                    top: top_degree,
                });
            }
            let mut rhs: BTreeMap<Monomial, Rational> = BTreeMap::new();
            for (exps, coeff) in rhs_raw {
                if coeff.is_zero() {
                    continue;
                }
                let m = Monomial::new(exps, &generators);
                let entry = rhs.entry(m).or_insert_with(Rational::zero);
                *entry += coeff;
            }
            rhs.retain(|_, c| !c.is_zero());
            if rhs.keys().any(|m| *m >= lead) {
                return Err(RingError::RelationNotDecreasing { index });
            }
            rules.push(RewriteRule {
                lead,
                rhs: rhs.into_iter().collect(),
            });
        }

        let ring = RingPresentation {
            generators,
            relations: rules,
            top_degree,
        };
        ring.check_confluence()?;
        Ok(Arc::new(ring))
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn relations(&self) -> &[RewriteRule] {
        &self.relations
    }

    pub fn top_degree(&self) -> u32 {
        self.top_degree
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    /// All monomials (normal or not) of cohomological degree at most `cap`.
    fn monomials_up_to(&self, cap: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut exps = vec![0u32; self.generators.len()];
        self.enumerate_rec(0, cap, &mut exps, &mut out);
        out
    }

    fn enumerate_rec(&self, idx: usize, budget: u32, exps: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if idx == self.generators.len() {
            out.push(Monomial::new(exps.clone(), &self.generators));
            return;
        }
        let deg = self.generators[idx].degree;
        let max_e = budget / deg;
        for e in 0..=max_e {
            exps[idx] = e;
            self.enumerate_rec(idx + 1, budget - e * deg, exps, out);
        }
        exps[idx] = 0;
    }

    fn is_normal_monomial(&self, m: &Monomial) -> bool {
        m.degree <= self.top_degree && !self.relations.iter().any(|r| r.lead.divides(m))
    }

    /// The integral monomial basis: normal-form monomials of degree at
    /// most the top degree, in increasing term order.
    pub fn basis(&self) -> Vec<Monomial> {
        let mut v: Vec<Monomial> = self
            .monomials_up_to(self.top_degree)
            .into_iter()
            .filter(|m| self.is_normal_monomial(m))
            .collect();
        v.sort();
        v
    }

    /// Normal-form monomials of exactly the given cohomological degree.
    pub fn basis_of_degree(&self, degree: u32) -> Vec<Monomial> {
        self.basis()
            .into_iter()
            .filter(|m| m.degree == degree)
            .collect()
    }

    /// Minimal normal-form monomials (w.r.t. the explicit relations only)
    /// whose degree exceeds the top degree. Materializing these as
    /// explicit relations reproduces the truncation of this ring inside a
    /// larger ambient ring, which is what the product construction needs.
    pub fn truncation_frontier(&self) -> Vec<Monomial> {
        let max_gen = self.generators.iter().map(|g| g.degree).max().unwrap_or(2);
        let mut frontier: Vec<Monomial> = self
            .monomials_up_to(self.top_degree + max_gen)
            .into_iter()
            .filter(|m| {
                m.degree > self.top_degree && !self.relations.iter().any(|r| r.lead.divides(m))
            })
            .collect();
        frontier.sort();
        let mut minimal: Vec<Monomial> = Vec::new();
        for m in frontier {
            if !minimal.iter().any(|f| f.divides(&m)) {
                minimal.push(m);
            }
        }
        minimal
    }

    /// Reduce a raw polynomial to normal form. Truncation above the top
    /// degree and the rewrite rules are applied until no rule fires;
    /// confluence (checked at load) makes the result order-independent.
    fn reduce(&self, terms: Vec<(Monomial, Rational)>) -> BTreeMap<Monomial, Rational> {
        let mut out: BTreeMap<Monomial, Rational> = BTreeMap::new();
        let mut stack = terms;
        while let Some((mono, coeff)) = stack.pop() {
            if coeff.is_zero() || mono.degree > self.top_degree {
                continue;
            }
            match self.relations.iter().find(|r| r.lead.divides(&mono)) {
                Some(rule) => {
                    let q = mono.quotient(&rule.lead);
                    for (rm, rc) in &rule.rhs {
                        stack.push((rm.product(&q), rc * &coeff));
                    }
                }
                None => {
                    let entry = out.entry(mono).or_insert_with(Rational::zero);
                    *entry += coeff;
                    // defer zero-cleanup to the end
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn check_confluence(&self) -> Result<(), RingError> {
        for mono in self.monomials_up_to(self.top_degree) {
            let applicable: Vec<usize> = self
                .relations
                .iter()
                .enumerate()
                .filter(|(_, r)| r.lead.divides(&mono))
                .map(|(i, _)| i)
                .collect();
            if applicable.len() < 2 {
                continue;
            }
            let mut forms: Vec<(usize, BTreeMap<Monomial, Rational>)> = Vec::new();
            for &ri in &applicable {
                let rule = &self.relations[ri];
                let q = mono.quotient(&rule.lead);
                let one_step: Vec<(Monomial, Rational)> = rule
                    .rhs
                    .iter()
                    .map(|(rm, rc)| (rm.product(&q), rc.clone()))
                    .collect();
                forms.push((ri, self.reduce(one_step)));
            }
            for w in forms.windows(2) {
                if w[0].1 != w[1].1 {
                    return Err(RingError::NotConfluent {
                        monomial: mono.format(self),
                        rule_a: w[0].0,
                        rule_b: w[1].0,
                    });
                }
            }
        }
        Ok(())
    }
}

/// An element in normal form: a finite linear combination of normal-form
/// basis monomials with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RingElement {
    ring: Arc<RingPresentation>,
    terms: BTreeMap<Monomial, Rational>,
}

impl RingElement {
    pub fn zero(ring: &Arc<RingPresentation>) -> Self {
        RingElement {
            ring: Arc::clone(ring),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(ring: &Arc<RingPresentation>) -> Self {
        Self::scalar(ring, Rational::one())
    }

    pub fn scalar(ring: &Arc<RingPresentation>, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::new(vec![0; ring.generators.len()], &ring.generators), c);
        }
        RingElement {
            ring: Arc::clone(ring),
            terms,
        }
    }

    pub fn generator(ring: &Arc<RingPresentation>, name: &str) -> Result<Self, RingError> {
        let idx = ring
            .generator_index(name)
            .ok_or_else(|| RingError::UnknownGenerator(name.to_string()))?;
        let mut exps = vec![0u32; ring.generators.len()];
        exps[idx] = 1;
        Ok(Self::normalize(ring, vec![(exps, Rational::one())]))
    }

    /// Normal form of a raw polynomial in the generators.
    pub fn normalize(ring: &Arc<RingPresentation>, raw: RawPoly) -> Self {
        let terms = raw
            .into_iter()
            .map(|(exps, c)| (Monomial::new(exps, &ring.generators), c))
            .collect();
        RingElement {
            ring: Arc::clone(ring),
            terms: ring.reduce(terms),
        }
    }

    pub fn from_monomial(ring: &Arc<RingPresentation>, m: &Monomial, c: Rational) -> Self {
        RingElement {
            ring: Arc::clone(ring),
            terms: ring.reduce(vec![(m.clone(), c)]),
        }
    }

    pub fn ring(&self) -> &Arc<RingPresentation> {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.terms
            .iter()
            .find(|(m, _)| m.is_unit())
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero)
    }

    fn same_ring(&self, other: &RingElement) -> Result<(), RingError> {
        if Arc::ptr_eq(&self.ring, &other.ring) || self.ring == other.ring {
            Ok(())
        } else {
            Err(RingError::MismatchedRings)
        }
    }

    pub fn try_add(&self, other: &RingElement) -> Result<RingElement, RingError> {
        self.same_ring(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            let entry = terms.entry(m.clone()).or_insert_with(Rational::zero);
            *entry += c;
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(RingElement {
            ring: Arc::clone(&self.ring),
            terms,
        })
    }

    pub fn try_sub(&self, other: &RingElement) -> Result<RingElement, RingError> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> RingElement {
        RingElement {
            ring: Arc::clone(&self.ring),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> RingElement {
        if c.is_zero() {
            return Self::zero(&self.ring);
        }
        RingElement {
            ring: Arc::clone(&self.ring),
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Exact product, normalized and truncated above the top degree.
    pub fn try_mul(&self, other: &RingElement) -> Result<RingElement, RingError> {
        self.same_ring(other)?;
        let top = self.ring.top_degree;
        let mut raw: Vec<(Monomial, Rational)> = Vec::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma.degree + mb.degree > top {
                    continue;
                }
                raw.push((ma.product(mb), ca * cb));
            }
        }
        Ok(RingElement {
            ring: Arc::clone(&self.ring),
            terms: self.ring.reduce(raw),
        })
    }

    pub fn pow(&self, e: u32) -> RingElement {
        let mut acc = Self::one(&self.ring);
        for _ in 0..e {
            acc = acc.try_mul(self).expect("same ring");
        }
        acc
    }

    /// Inverse of a unit. The constant term must be a nonzero rational;
    /// the inverse is the truncated geometric series, exact in this ring.
    pub fn invert_unit(&self) -> Result<RingElement, RingError> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(RingError::ZeroConstantTerm);
        }
        let c0_inv = c0.recip();
        // x = c0 (1 + u) with deg u > 0; 1/x = c0^{-1} sum (-u)^k.
        let u = self.scale(&c0_inv).try_sub(&Self::one(&self.ring))?;
        let minus_u = u.neg();
        let steps = self.ring.top_degree / 2;
        let mut acc = Self::one(&self.ring);
        let mut pw = Self::one(&self.ring);
        for _ in 0..steps {
            pw = pw.try_mul(&minus_u)?;
            if pw.is_zero() {
                break;
            }
            acc = acc.try_add(&pw)?;
        }
        let inv = acc.scale(&c0_inv);
        debug_assert_eq!(inv.try_mul(self).unwrap(), Self::one(&self.ring));
        Ok(inv)
    }

    /// The component of this element in cohomological degree `2k`.
    pub fn project_degree(&self, k: u32) -> RingElement {
        RingElement {
            ring: Arc::clone(&self.ring),
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree == 2 * k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Maximal `k` such that the projection to degree `2k` is nonzero.
    pub fn degree(&self) -> Result<u32, RingError> {
        self.terms
            .keys()
            .map(|m| m.degree / 2)
            .max()
            .ok_or(RingError::ZeroElement)
    }

    /// True iff every coefficient in the normal-form monomial basis is an
    /// integer. The integral lattice is the integer span of that basis.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.denom().is_one())
    }

    /// True iff this element is supported in degrees `H^{4j}` only, i.e.
    /// its projection to `H^{2k}` vanishes for every odd `k`.
    pub fn has_only_even_degree_terms(&self) -> bool {
        self.terms.keys().all(|m| m.degree % 4 == 0)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_unit() {
                write!(f, "{}", mag)?;
            } else if mag.is_one() {
                write!(f, "{}", m.format(&self.ring))?;
            } else {
                write!(f, "{}*{}", mag, m.format(&self.ring))?;
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &RingElement {
    type Output = RingElement;
    fn add(self, rhs: &RingElement) -> RingElement {
        self.try_add(rhs).expect("ring mismatch")
    }
}

impl std::ops::Sub for &RingElement {
    type Output = RingElement;
    fn sub(self, rhs: &RingElement) -> RingElement {
        self.try_sub(rhs).expect("ring mismatch")
    }
}

impl std::ops::Mul for &RingElement {
    type Output = RingElement;
    fn mul(self, rhs: &RingElement) -> RingElement {
        self.try_mul(rhs).expect("ring mismatch")
    }
}

/// A closed symplectic manifold at the level this toolkit sees it: its
/// rational cohomology ring, complex dimension, full Chern class, and the
/// user-declared fact that `H^1 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldData {
    pub ring: Arc<RingPresentation>,
    pub n: u32,
    pub chern: RingElement,
    pub h1_zero: bool,
}

impl ManifoldData {
    pub fn new(
        ring: Arc<RingPresentation>,
        n: u32,
        chern: RingElement,
        h1_zero: bool,
    ) -> Result<Self, RingError> {
        if ring.top_degree() != 2 * n {
            return Err(RingError::BadManifold(format!(
                "top degree {} does not equal 2n = {}",
                ring.top_degree(),
                2 * n
            )));
        }
        if chern.ring().as_ref() != ring.as_ref() {
            return Err(RingError::MismatchedRings);
        }
        if !chern.constant_term().is_one() {
            return Err(RingError::BadManifold(
                "full Chern class must have constant term 1".into(),
            ));
        }
        Ok(ManifoldData {
            ring,
            n,
            chern,
            h1_zero,
        })
    }

    /// The top Chern class: projection of the full class to degree `2n`.
    pub fn top_chern(&self) -> RingElement {
        self.chern.project_degree(self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blowup_ring() -> Arc<RingPresentation> {
        // Q[a,b] / (ab, b^3 - a^3), truncated above degree 6.
        RingPresentation::new(
            vec![
                Generator { name: "a".into(), degree: 2 },
                Generator { name: "b".into(), degree: 2 },
            ],
            vec![
                (vec![1, 1], vec![]),
                (vec![0, 3], vec![(vec![3, 0], rat(1))]),
            ],
            6,
        )
        .unwrap()
    }

    fn cp_ring(n: u32) -> Arc<RingPresentation> {
        RingPresentation::new(
            vec![Generator { name: "a".into(), degree: 2 }],
            vec![],
            2 * n,
        )
        .unwrap()
    }

    #[test]
    fn b_cubed_normalizes_to_a_cubed() {
        let ring = blowup_ring();
        let b3 = RingElement::normalize(&ring, vec![(vec![0, 3], rat(1))]);
        let a3 = RingElement::normalize(&ring, vec![(vec![3, 0], rat(1))]);
        assert_eq!(b3, a3);
    }

    #[test]
    fn ab_normalizes_to_zero() {
        let ring = blowup_ring();
        let ab = RingElement::normalize(&ring, vec![(vec![1, 1], rat(1))]);
        assert!(ab.is_zero());
    }

    #[test]
    fn truncation_kills_a_to_the_n_plus_one() {
        let ring = cp_ring(3);
        let a4 = RingElement::normalize(&ring, vec![(vec![4], rat(1))]);
        assert!(a4.is_zero());
    }

    #[test]
    fn a_squared_already_normal() {
        let ring = blowup_ring();
        let a2 = RingElement::normalize(&ring, vec![(vec![2, 0], rat(1))]);
        assert_eq!(a2.terms.len(), 1);
        assert_eq!(a2.degree().unwrap(), 2);
    }

    #[test]
    fn unit_law_and_square_in_cp1() {
        let ring = cp_ring(1);
        let one = RingElement::one(&ring);
        let a = RingElement::generator(&ring, "a").unwrap();
        let x = &one + &a;
        assert_eq!(&one * &x, x);
        // (1+a)^2 = 1 + 2a with a^2 = 0
        let sq = x.pow(2);
        let expect = RingElement::normalize(&ring, vec![(vec![0], rat(1)), (vec![1], rat(2))]);
        assert_eq!(sq, expect);
    }

    #[test]
    fn invert_one_plus_a_in_cp2() {
        let ring = cp_ring(2);
        let a = RingElement::generator(&ring, "a").unwrap();
        let x = &RingElement::one(&ring) + &a;
        let inv = x.invert_unit().unwrap();
        // 1 - a + a^2
        let expect = RingElement::normalize(
            &ring,
            vec![(vec![0], rat(1)), (vec![1], rat(-1)), (vec![2], rat(1))],
        );
        assert_eq!(inv, expect);
        assert_eq!(&inv * &x, RingElement::one(&ring));
    }

    #[test]
    fn invert_unit_round_trip_in_blowup() {
        let ring = blowup_ring();
        // 1 + 4a - 2b
        let x = RingElement::normalize(
            &ring,
            vec![
                (vec![0, 0], rat(1)),
                (vec![1, 0], rat(4)),
                (vec![0, 1], rat(-2)),
            ],
        );
        let inv = x.invert_unit().unwrap();
        assert_eq!(&inv * &x, RingElement::one(&ring));
    }

    #[test]
    fn invert_rejects_zero_constant_term() {
        let ring = cp_ring(2);
        let a = RingElement::generator(&ring, "a").unwrap();
        assert_eq!(a.invert_unit(), Err(RingError::ZeroConstantTerm));
    }

    #[test]
    fn projections_sum_to_identity() {
        let ring = blowup_ring();
        let x = RingElement::normalize(
            &ring,
            vec![
                (vec![0, 0], rat(1)),
                (vec![1, 0], rat(4)),
                (vec![2, 0], rat(6)),
                (vec![3, 0], rat(6)),
                (vec![0, 1], rat(-2)),
            ],
        );
        let mut acc = RingElement::zero(&ring);
        for k in 0..=3 {
            acc = &acc + &x.project_degree(k);
        }
        assert_eq!(acc, x);
        assert_eq!(x.project_degree(0).constant_term(), rat(1));
    }

    #[test]
    fn degree_of_mixed_element() {
        let ring = blowup_ring();
        // 6a^3 - 2b has degree 3
        let x = RingElement::normalize(
            &ring,
            vec![(vec![3, 0], rat(6)), (vec![0, 1], rat(-2))],
        );
        assert_eq!(x.degree().unwrap(), 3);
        assert_eq!(RingElement::one(&ring).degree().unwrap(), 0);
        assert_eq!(
            RingElement::zero(&ring).degree(),
            Err(RingError::ZeroElement)
        );
    }

    #[test]
    fn integrality_checks() {
        let ring = blowup_ring();
        let x = RingElement::normalize(
            &ring,
            vec![(vec![1, 0], rat(1)), (vec![0, 1], rat(2))],
        );
        assert!(x.is_integral());
        let y = RingElement::normalize(&ring, vec![(vec![1, 0], ratio(1, 2))]);
        assert!(!y.is_integral());
    }

    #[test]
    fn rejects_odd_generator_degree() {
        let err = RingPresentation::new(
            vec![Generator { name: "t".into(), degree: 3 }],
            vec![],
            6,
        )
        .unwrap_err();
        assert!(matches!(err, RingError::BadGeneratorDegree { .. }));
    }

    #[test]
    fn rejects_non_confluent_presentation() {
        // x^2 -> x-ish collisions: two rules with the same lead but
        // different right-hand sides can never be confluent.
        let err = RingPresentation::new(
            vec![
                Generator { name: "x".into(), degree: 2 },
                Generator { name: "y".into(), degree: 2 },
            ],
            vec![
                (vec![1, 1], vec![]),
                (vec![1, 1], vec![(vec![2, 0], rat(1))]),
            ],
            8,
        )
        .unwrap_err();
        assert!(matches!(err, RingError::NotConfluent { .. }));
    }

    #[test]
    fn mismatched_rings_error() {
        let r1 = cp_ring(2);
        let r2 = blowup_ring();
        let x = RingElement::one(&r1);
        let y = RingElement::one(&r2);
        assert_eq!(x.try_mul(&y), Err(RingError::MismatchedRings));
    }

    #[test]
    fn blowup_truncation_frontier_is_a4() {
        let ring = blowup_ring();
        let frontier = ring.truncation_frontier();
        assert_eq!(frontier.len(), 1);
        assert_eq!(frontier[0].exponents(), &[4, 0]);
    }
}
