//! Univariate polynomials with exact rational coefficients.
//!
//! Two independent gcd routes are kept side by side: the primary monic
//! Euclidean algorithm over Q, and the subresultant polynomial remainder
//! sequence over Z used to replay gcd certificates. They must agree on
//! whether a gcd is constant; tests and certificate replays rely on the
//! routes being genuinely independent.

use crate::ring::Rational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolyError {
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("coefficients too large for exact root enumeration")]
    CoefficientsTooLarge,
}

/// Dense univariate polynomial over Q; `coeffs[i]` multiplies `x^i`.
/// No trailing zero coefficients are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<Rational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: vec![] }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Substitute `x -> -x`: negate odd coefficients.
    pub fn mirror(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 1 { -c.clone() } else { c.clone() })
                .collect(),
        )
    }

    pub fn scale(&self, k: &Rational) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            out.push(self.coeff(i) - other.coeff(i));
        }
        UniPoly::new(out)
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    /// Quotient and remainder over Q; divisor must be nonzero.
    pub fn div_rem(&self, divisor: &UniPoly) -> (UniPoly, UniPoly) {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dd = divisor.degree().unwrap();
        let lead_inv = divisor.leading().unwrap().recip();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rational::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let factor = rem.last().unwrap() * &lead_inv;
            if !factor.is_zero() {
                for (i, c) in divisor.coeffs.iter().enumerate() {
                    let idx = k + i;
                    let v = &rem[idx] - &(c * &factor);
                    rem[idx] = v;
                }
                quot[k] = factor;
            }
            rem.pop();
        }
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    pub fn monic(&self) -> UniPoly {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => UniPoly::zero(),
        }
    }

    /// Monic gcd by the Euclidean algorithm over Q. This is the primary
    /// route; certificates are replayed with [`gcd_subresultant`].
    pub fn gcd_euclid(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Clear denominators and remove integer content; returns the
    /// primitive integer coefficient vector (low degree first).
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        if self.is_zero() {
            return vec![];
        }
        let mut lcm = BigInt::one();
        for c in &self.coeffs {
            lcm = lcm.lcm(c.denom());
        }
        let mut ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&lcm / c.denom()))
            .collect();
        let mut content = BigInt::zero();
        for v in &ints {
            content = content.gcd(v);
        }
        if !content.is_zero() && !content.is_one() {
            for v in &mut ints {
                *v /= &content;
            }
        }
        ints
    }

    /// All rational roots, each listed once, together with the polynomial
    /// deflated by those roots (with multiplicity). Complete: a rational
    /// number is a root iff it appears in the list.
    pub fn rational_roots(&self) -> Result<(Vec<Rational>, UniPoly), PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let mut p = self.clone();
        let mut roots = Vec::new();

        // factor out x^k
        let zero_mult = p.coeffs.iter().take_while(|c| c.is_zero()).count();
        if zero_mult > 0 {
            roots.push(Rational::zero());
            p = UniPoly::new(p.coeffs[zero_mult..].to_vec());
        }
        if p.degree() == Some(0) || p.is_zero() {
            return Ok((roots, p));
        }

        let ints = p.primitive_integer();
        let a0 = ints.first().unwrap().clone();
        let alead = ints.last().unwrap().clone();
        debug_assert!(!a0.is_zero());
        let p_divs = divisors(&a0.abs())?;
        let q_divs = divisors(&alead.abs())?;
        let mut candidates: Vec<Rational> = Vec::new();
        for pd in &p_divs {
            for qd in &q_divs {
                let r = Rational::new(pd.clone(), qd.clone());
                if !candidates.contains(&r) {
                    candidates.push(r.clone());
                    candidates.push(-r);
                }
            }
        }
        candidates.sort();
        for cand in candidates {
            while p.degree().map_or(false, |d| d >= 1) && p.eval(&cand).is_zero() {
                if !roots.contains(&cand) {
                    roots.push(cand.clone());
                }
                p = p.deflate(&cand);
            }
        }
        roots.sort();
        Ok((roots, p))
    }

    /// Synthetic division by (x - root); the root must be exact.
    pub fn deflate(&self, root: &Rational) -> UniPoly {
        let n = self.coeffs.len();
        if n <= 1 {
            return UniPoly::zero();
        }
        let mut out = vec![Rational::zero(); n - 1];
        let mut carry = Rational::zero();
        for i in (0..n - 1).rev() {
            let c = &self.coeffs[i + 1] + &(&carry * root);
            carry = c.clone();
            out[i] = c;
        }
        debug_assert!((&self.coeffs[0] + &(&carry * root)).is_zero());
        UniPoly::new(out)
    }

    /// Numeric roots via the companion matrix.
    pub fn numeric_roots(&self) -> Vec<nalgebra::Complex<f64>> {
        let d = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => return vec![],
        };
        let monic = self.monic();
        let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            m[(i, d - 1)] = -monic.coeff(i).to_f64().unwrap_or(f64::NAN);
        }
        let eig = m.complex_eigenvalues();
        let mut roots: Vec<nalgebra::Complex<f64>> = eig.iter().cloned().collect();
        roots.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        roots
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
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
            if i == 0 {
                write!(f, "{}", mag)?;
            } else {
                if !mag.is_one() {
                    write!(f, "{}*", mag)?;
                }
                if i == 1 {
                    write!(f, "x")?;
                } else {
                    write!(f, "x^{}", i)?;
                }
            }
        }
        Ok(())
    }
}

fn divisors(n: &BigInt) -> Result<Vec<BigInt>, PolyError> {
    let n = n
        .to_u64()
        .ok_or(PolyError::CoefficientsTooLarge)?;
    if n == 0 {
        return Ok(vec![BigInt::one()]);
    }
    if n > 1_000_000_000_000 {
        return Err(PolyError::CoefficientsTooLarge);
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d != n / d {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    Ok(out)
}

/// Gcd of the primitive parts by the subresultant polynomial remainder
/// sequence over Z (Collins). Independent of [`UniPoly::gcd_euclid`].
pub fn gcd_subresultant(a: &UniPoly, b: &UniPoly) -> UniPoly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    let mut r0 = a.primitive_integer();
    let mut r1 = b.primitive_integer();
    if int_degree(&r0) < int_degree(&r1) {
        std::mem::swap(&mut r0, &mut r1);
    }
    if int_degree(&r1) == 0 {
        return UniPoly::constant(Rational::one());
    }
    let mut g = BigInt::one();
    let mut h = BigInt::one();
    loop {
        let d = int_degree(&r0) - int_degree(&r1);
        let prem = trim_int(pseudo_rem(&r0, &r1));
        if prem.iter().all(|c| c.is_zero()) {
            let prim = primitive_part(&r1);
            return UniPoly::new(prim.iter().map(|c| Rational::from_integer(c.clone())).collect())
                .monic();
        }
        if int_degree(&prem) == 0 {
            return UniPoly::constant(Rational::one());
        }
        let divisor = &g * h.pow(d as u32);
        let r2: Vec<BigInt> = prem.iter().map(|c| c / &divisor).collect();
        g = r1[int_degree(&r1)].clone();
        h = if d == 0 {
            h
        } else {
            let gd = g.pow(d as u32);
            if d == 1 {
                gd
            } else {
                &gd / h.pow((d - 1) as u32)
            }
        };
        r0 = r1;
        r1 = trim_int(r2);
    }
}

fn trim_int(mut v: Vec<BigInt>) -> Vec<BigInt> {
    while v.len() > 1 && v.last().map_or(false, |c| c.is_zero()) {
        v.pop();
    }
    v
}

fn int_degree(p: &[BigInt]) -> usize {
    p.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

fn primitive_part(p: &[BigInt]) -> Vec<BigInt> {
    let mut content = BigInt::zero();
    for c in p {
        content = content.gcd(c);
    }
    if content.is_zero() || content.is_one() {
        return p.to_vec();
    }
    p.iter().map(|c| c / &content).collect()
}

/// Pseudo-remainder of integer polynomials: rem(lc(b)^{d+1} * a, b),
/// with the power of lc(b) kept exact so Collins' divisions stay exact.
fn pseudo_rem(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let db = int_degree(b);
    let da = int_degree(a);
    let lb = b[db].clone();
    debug_assert!(!lb.is_zero());
    let mut r: Vec<BigInt> = a.to_vec();
    let mut e = (da - db) as i64 + 1;
    while !r.iter().all(|c| c.is_zero()) {
        let dr = int_degree(&r);
        if dr < db {
            break;
        }
        let lr = r[dr].clone();
        // r = lb * r - lr * x^{dr-db} * b
        for c in r.iter_mut() {
            *c *= &lb;
        }
        for (i, bc) in b.iter().enumerate().take(db + 1) {
            r[dr - db + i] -= &lr * bc;
        }
        debug_assert!(r[dr].is_zero());
        e -= 1;
    }
    if e > 0 {
        let pad = lb.pow(e as u32);
        for c in r.iter_mut() {
            *c *= &pad;
        }
    }
    r
}
