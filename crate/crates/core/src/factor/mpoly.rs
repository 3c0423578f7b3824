//! Small multivariate polynomials over Q, sized for elimination in a
//! handful of unknowns, plus exact arithmetic in a real quadratic
//! extension Q(sqrt(d)) used to exhibit irrational solution sets.

use super::unipoly::UniPoly;
use crate::ring::Rational;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Multivariate polynomial; keys are exponent vectors of fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; nvars], c);
        }
        MPoly { nvars, terms }
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exps, Rational::one());
        MPoly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: Rational) {
        debug_assert_eq!(exps.len(), self.nvars);
        let entry = self.terms.entry(exps).or_insert_with(Rational::zero);
        *entry += c;
        self.terms.retain(|_, v| !v.is_zero());
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let entry = out.terms.entry(e.clone()).or_insert_with(Rational::zero);
            *entry += c;
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    pub fn neg(&self) -> MPoly {
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let entry = out.terms.entry(exps).or_insert_with(Rational::zero);
                *entry += ca * cb;
            }
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    pub fn scale(&self, k: &Rational) -> MPoly {
        if k.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
    }

    /// Some(c) iff the polynomial is the constant c.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            return Some(Rational::zero());
        }
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            if e.iter().all(|&x| x == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Indices of variables that actually occur.
    pub fn vars_present(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for v in 0..self.nvars {
            if self.terms.keys().any(|e| e[v] > 0) {
                out.push(v);
            }
        }
        out
    }

    /// Coefficients of powers of `var` as polynomials in the others;
    /// index k holds the coefficient of var^k.
    pub fn coeffs_in(&self, var: usize) -> Vec<MPoly> {
        let d = self.degree_in(var) as usize;
        let mut out = vec![MPoly::zero(self.nvars); d + 1];
        for (e, c) in &self.terms {
            let k = e[var] as usize;
            let mut e2 = e.clone();
            e2[var] = 0;
            out[k].add_term(e2, c.clone());
        }
        out
    }

    /// Substitute `var := replacement`.
    pub fn substitute(&self, var: usize, replacement: &MPoly) -> MPoly {
        let coeffs = self.coeffs_in(var);
        let mut out = MPoly::zero(self.nvars);
        let mut pw = MPoly::constant(self.nvars, Rational::one());
        for (k, c) in coeffs.into_iter().enumerate() {
            if k > 0 {
                pw = pw.mul(replacement);
            }
            out = out.add(&c.mul(&pw));
        }
        out
    }

    /// View as univariate in `var` if no other variable occurs.
    pub fn as_univariate(&self, var: usize) -> Option<UniPoly> {
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if i != var && x > 0 {
                    return None;
                }
            }
        }
        let d = self.degree_in(var) as usize;
        let mut coeffs = vec![Rational::zero(); d + 1];
        for (e, c) in &self.terms {
            coeffs[e[var] as usize] = c.clone();
        }
        Some(UniPoly::new(coeffs))
    }

    pub fn eval_rational(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t *= &point[i];
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_quad(&self, point: &[QuadExt]) -> QuadExt {
        let d = point
            .iter()
            .find(|q| !q.is_rational())
            .map(|q| q.d.clone())
            .unwrap_or_else(|| BigInt::from(2));
        let mut acc = QuadExt::rational(Rational::zero(), d.clone());
        for (e, c) in &self.terms {
            let mut t = QuadExt::rational(c.clone(), d.clone());
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t = t.mul(&point[i]);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Render with the given variable names.
    pub fn format(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        let mut first = true;
        for (e, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    s.push('-');
                }
                first = false;
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || e.iter().all(|&x| x == 0) {
                parts.push(mag.to_string());
            }
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => parts.push(names[i].clone()),
                    _ => parts.push(format!("{}^{}", names[i], k)),
                }
            }
            s.push_str(&parts.join("*"));
        }
        s
    }
}

/// Resultant of `p` and `q` with respect to `var` (up to sign), by the
/// subresultant polynomial remainder sequence over the polynomial ring
/// in the other variables. The sign is irrelevant for zero sets, which
/// is all the elimination engine uses. Exact divisions are guaranteed by
/// the subresultant theory; a failed division is a bug, not an input
/// condition.
pub fn resultant(p: &MPoly, q: &MPoly, var: usize) -> MPoly {
    let dp = p.degree_in(var);
    let dq = q.degree_in(var);
    if dp == 0 && dq == 0 {
        // no occurrences: conventionally 1 (no condition on the others)
        return MPoly::constant(p.nvars, Rational::one());
    }
    if dp < dq {
        return resultant(q, p, var);
    }
    if dq == 0 {
        // Res(p, c) = c^{deg p}
        let mut acc = MPoly::constant(p.nvars, Rational::one());
        for _ in 0..dp {
            acc = acc.mul(q);
        }
        return acc;
    }

    let mut a = trim(p.coeffs_in(var), p.nvars);
    let mut b = trim(q.coeffs_in(var), q.nvars);
    let nvars = p.nvars;
    let one = MPoly::constant(nvars, Rational::one());
    let mut g = one.clone();
    let mut h = one.clone();

    loop {
        let da = a.len() - 1;
        let db = b.len() - 1;
        let d = da - db;
        let prem = ppseudo_rem(&a, &b, nvars);
        if prem.iter().all(|c| c.is_zero()) {
            // nontrivial common factor in `var`
            return MPoly::zero(nvars);
        }
        let divisor = {
            let mut acc = g.clone();
            for _ in 0..d {
                acc = acc.mul(&h);
            }
            acc
        };
        let r: Vec<MPoly> = prem
            .iter()
            .map(|c| exact_div(c, &divisor).expect("subresultant division is exact"))
            .collect();
        let r = trim(r, nvars);
        g = b.last().unwrap().clone();
        h = if d == 0 {
            h
        } else {
            let mut gd = one.clone();
            for _ in 0..d {
                gd = gd.mul(&g);
            }
            if d == 1 {
                gd
            } else {
                let mut hd = one.clone();
                for _ in 0..d - 1 {
                    hd = hd.mul(&h);
                }
                exact_div(&gd, &hd).expect("subresultant h update is exact")
            }
        };
        a = b;
        b = r;
        if b.len() == 1 {
            // degree 0 in var: finish with the standard last step
            let da_final = a.len() - 1;
            let mut num = one.clone();
            for _ in 0..da_final {
                num = num.mul(&b[0]);
            }
            let mut den = one.clone();
            for _ in 0..da_final.saturating_sub(1) {
                den = den.mul(&h);
            }
            return exact_div(&num, &den).expect("final subresultant division is exact");
        }
    }
}

fn trim(mut v: Vec<MPoly>, nvars: usize) -> Vec<MPoly> {
    while v.len() > 1 && v.last().map_or(false, |c| c.is_zero()) {
        v.pop();
    }
    if v.is_empty() {
        v.push(MPoly::zero(nvars));
    }
    v
}

/// Pseudo-remainder over MPoly coefficients with the exact lc(b)^{d+1}
/// factor, mirroring the integer version.
fn ppseudo_rem(a: &[MPoly], b: &[MPoly], nvars: usize) -> Vec<MPoly> {
    let db = b.len() - 1;
    let da = a.len() - 1;
    let lb = b.last().unwrap().clone();
    let mut r = trim(a.to_vec(), nvars);
    let mut e = (da - db) as i64 + 1;
    while !r.iter().all(|c| c.is_zero()) {
        let dr = r.len() - 1;
        if dr < db {
            break;
        }
        let lr = r.last().unwrap().clone();
        let mut next: Vec<MPoly> = r.iter().map(|c| c.mul(&lb)).collect();
        for (i, bc) in b.iter().enumerate() {
            let idx = dr - db + i;
            next[idx] = next[idx].sub(&lr.mul(bc));
        }
        // the leading term cancels exactly
        debug_assert!(next.last().unwrap().is_zero());
        next.pop();
        r = trim(next, nvars);
        e -= 1;
    }
    if e > 0 {
        let mut pad = MPoly::constant(nvars, Rational::one());
        for _ in 0..e {
            pad = pad.mul(&lb);
        }
        r = r.iter().map(|c| c.mul(&pad)).collect();
    }
    r
}

/// Exact multivariate division; None if the division is not exact.
pub fn exact_div(num: &MPoly, den: &MPoly) -> Option<MPoly> {
    if num.is_zero() {
        return Some(MPoly::zero(num.nvars));
    }
    if let Some(c) = den.as_constant() {
        if c.is_zero() {
            return None;
        }
        return Some(num.scale(&c.recip()));
    }
    let mut rem = num.clone();
    let mut quot = MPoly::zero(num.nvars);
    let (dlead, dc) = den.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone()))?;
    while !rem.is_zero() {
        let (rlead, rc) = rem.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone()))?;
        if !dlead.iter().zip(&rlead).all(|(d, r)| d <= r) {
            return None;
        }
        let exps: Vec<u32> = rlead.iter().zip(&dlead).map(|(r, d)| r - d).collect();
        let coeff = &rc / &dc;
        let mut t = MPoly::zero(num.nvars);
        t.add_term(exps, coeff);
        quot = quot.add(&t);
        rem = rem.sub(&t.mul(den));
    }
    Some(quot)
}

/// Exact element of Q(sqrt(d)): `a + b*sqrt(d)` with d a positive
/// non-square integer (b may be zero, making the value rational).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadExt {
    pub a: Rational,
    pub b: Rational,
    pub d: BigInt,
}

impl QuadExt {
    pub fn rational(a: Rational, d: BigInt) -> Self {
        QuadExt {
            a,
            b: Rational::zero(),
            d,
        }
    }

    pub fn new(a: Rational, b: Rational, d: BigInt) -> Self {
        QuadExt { a, b, d }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.is_rational() && self.a.denom().is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, other: &QuadExt) -> QuadExt {
        debug_assert!(self.b.is_zero() || other.b.is_zero() || self.d == other.d);
        QuadExt {
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            d: if self.b.is_zero() { other.d.clone() } else { self.d.clone() },
        }
    }

    pub fn mul(&self, other: &QuadExt) -> QuadExt {
        debug_assert!(self.b.is_zero() || other.b.is_zero() || self.d == other.d);
        let d = if self.b.is_zero() { other.d.clone() } else { self.d.clone() };
        let dr = Rational::from_integer(d.clone());
        QuadExt {
            a: &(&self.a * &other.a) + &(&(&self.b * &other.b) * &dr),
            b: &(&self.a * &other.b) + &(&self.b * &other.a),
            d,
        }
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        let sq = self.d.to_f64().unwrap_or(f64::NAN).sqrt();
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * sq
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.a.is_zero() {
            return write!(f, "{}*sqrt({})", self.b, self.d);
        }
        if self.b.is_negative() {
            write!(f, "{} - {}*sqrt({})", self.a, self.b.abs(), self.d)
        } else {
            write!(f, "{} + {}*sqrt({})", self.a, self.b, self.d)
        }
    }
}

/// Exact roots of a quadratic with positive non-square discriminant.
/// Returns None when the discriminant is negative (no real roots) or a
/// perfect square (the roots are rational and belong elsewhere).
pub fn quadratic_roots(p: &UniPoly) -> Option<(QuadExt, QuadExt)> {
    if p.degree() != Some(2) {
        return None;
    }
    let a = p.coeff(2);
    let b = p.coeff(1);
    let c = p.coeff(0);
    let disc = &b * &b - Rational::from_integer(4.into()) * &a * &c;
    if !disc.is_positive() {
        return None;
    }
    // disc = num/den; sqrt(num/den) = sqrt(num*den)/den
    let scaled = disc.numer() * disc.denom();
    let root = scaled.sqrt();
    if &root * &root == scaled {
        return None; // rational roots
    }
    // x = (-b ± sqrt(disc)) / (2a), sqrt(disc) = sqrt(scaled)/den
    let two_a = Rational::from_integer(2.into()) * &a;
    let base = -&b / &two_a;
    let coef = Rational::new(BigInt::one(), disc.denom().clone()) / &two_a;
    Some((
        QuadExt::new(base.clone(), coef.clone(), scaled.clone()),
        QuadExt::new(base, -coef, scaled),
    ))
}
