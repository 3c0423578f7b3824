//! Text formats for rings, manifolds and polynomial expressions.
//!
//! A manifold spec is a sectioned key/value file:
//!
//! ```text
//! # one-point blow-up of CP^3
//! [generators]
//! a = 2
//! b = 2
//!
//! [relations]
//! a*b = 0
//! b^3 = a^3
//!
//! [manifold]
//! n = 3
//! chern = 1 + 4*a + 6*a^2 + 6*a^3 - 2*b
//! h1_zero = true
//!
//! [classes]
//! candidate = 1 + 6*a^2
//! ```
//!
//! Expressions admit integers, rationals `p/q`, decimal literals (read
//! exactly), generator names, `+`, `-`, `*` (or juxtaposition), `^`, and
//! parentheses. Relations are written `leading_monomial = polynomial`.

use super::{Generator, ManifoldData, Rational, RawPoly, RingElement, RingPresentation};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

/// A polynomial over named variables, before resolution against a ring.
pub type NamedPoly = Vec<(BTreeMap<String, u32>, Rational)>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

fn lex(src: &str, line: usize, col0: usize) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push((Tok::Plus, line, col));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, line, col));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, line, col));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, line, col));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, line, col));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, line, col));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, line, col));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                // decimal literal, read exactly as a rational
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    let frac_start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(ParseError::new(line, col0 + i, "expected digits after `.`"));
                    }
                    let int_part: String = chars[start..frac_start - 1].iter().collect();
                    let frac_part: String = chars[frac_start..i].iter().collect();
                    let digits = format!("{}{}", int_part, frac_part);
                    let num: BigInt = digits.parse().unwrap();
                    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
                    // encode as Int(num) Slash Int(den) so the parser's
                    // rational path picks it up unchanged
                    toks.push((Tok::Int(num), line, col));
                    toks.push((Tok::Slash, line, col));
                    toks.push((Tok::Int(den), line, col));
                } else {
                    let s: String = chars[start..i].iter().collect();
                    toks.push((Tok::Int(s.parse().unwrap()), line, col));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                toks.push((Tok::Name(s), line, col));
            }
            other => {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("unexpected character `{}`", other),
                ));
            }
        }
    }
    Ok(Lexer {
        toks,
        pos: 0,
        line,
        end_col: col0 + chars.len(),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or((self.line, self.end_col))
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::new(line, col, message)
    }
}

fn poly_add(a: NamedPoly, b: NamedPoly) -> NamedPoly {
    let mut map: BTreeMap<BTreeMap<String, u32>, Rational> = BTreeMap::new();
    for (m, c) in a.into_iter().chain(b) {
        let e = map.entry(m).or_insert_with(Rational::zero);
        *e += c;
    }
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn poly_neg(a: NamedPoly) -> NamedPoly {
    a.into_iter().map(|(m, c)| (m, -c)).collect()
}

fn poly_mul(a: &NamedPoly, b: &NamedPoly) -> NamedPoly {
    let mut map: BTreeMap<BTreeMap<String, u32>, Rational> = BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let mut m = ma.clone();
            for (name, e) in mb {
                *m.entry(name.clone()).or_insert(0) += e;
            }
            let entry = map.entry(m).or_insert_with(Rational::zero);
            *entry += ca * cb;
        }
    }
    map.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn poly_const(c: Rational) -> NamedPoly {
    if c.is_zero() {
        vec![]
    } else {
        vec![(BTreeMap::new(), c)]
    }
}

fn parse_expr(lx: &mut Lexer) -> Result<NamedPoly, ParseError> {
    let mut negate = false;
    if matches!(lx.peek(), Some(Tok::Minus)) {
        lx.bump();
        negate = true;
    }
    let mut acc = parse_term(lx)?;
    if negate {
        acc = poly_neg(acc);
    }
    loop {
        match lx.peek() {
            Some(Tok::Plus) => {
                lx.bump();
                let t = parse_term(lx)?;
                acc = poly_add(acc, t);
            }
            Some(Tok::Minus) => {
                lx.bump();
                let t = parse_term(lx)?;
                acc = poly_add(acc, poly_neg(t));
            }
            _ => break,
        }
    }
    Ok(acc)
}

fn starts_atom(t: Option<&Tok>) -> bool {
    matches!(t, Some(Tok::Int(_)) | Some(Tok::Name(_)) | Some(Tok::LParen))
}

fn parse_term(lx: &mut Lexer) -> Result<NamedPoly, ParseError> {
    let mut acc = parse_factor(lx)?;
    loop {
        if matches!(lx.peek(), Some(Tok::Star)) {
            lx.bump();
            let f = parse_factor(lx)?;
            acc = poly_mul(&acc, &f);
        } else if starts_atom(lx.peek()) {
            // juxtaposition, e.g. `4a` or `6a^2`
            let f = parse_factor(lx)?;
            acc = poly_mul(&acc, &f);
        } else {
            break;
        }
    }
    Ok(acc)
}

fn parse_factor(lx: &mut Lexer) -> Result<NamedPoly, ParseError> {
    let base = parse_atom(lx)?;
    if matches!(lx.peek(), Some(Tok::Caret)) {
        lx.bump();
        let e = match lx.bump() {
            Some(Tok::Int(n)) => {
                use num_traits::ToPrimitive;
                n.to_u32()
                    .ok_or_else(|| lx.err("exponent out of range"))?
            }
            _ => return Err(lx.err("expected integer exponent after `^`")),
        };
        let mut acc = poly_const(Rational::one());
        for _ in 0..e {
            acc = poly_mul(&acc, &base);
        }
        return Ok(acc);
    }
    Ok(base)
}

fn parse_atom(lx: &mut Lexer) -> Result<NamedPoly, ParseError> {
    match lx.bump() {
        Some(Tok::Int(n)) => {
            if matches!(lx.peek(), Some(Tok::Slash)) {
                lx.bump();
                match lx.bump() {
                    Some(Tok::Int(d)) => {
                        if d.is_zero() {
                            return Err(lx.err("zero denominator"));
                        }
                        Ok(poly_const(Rational::new(n, d)))
                    }
                    _ => Err(lx.err("expected integer after `/` (rationals are written p/q)")),
                }
            } else {
                Ok(poly_const(Rational::from_integer(n)))
            }
        }
        Some(Tok::Name(name)) => {
            let mut m = BTreeMap::new();
            m.insert(name, 1u32);
            Ok(vec![(m, Rational::one())])
        }
        Some(Tok::LParen) => {
            let inner = parse_expr(lx)?;
            match lx.bump() {
                Some(Tok::RParen) => Ok(inner),
                _ => Err(lx.err("expected `)`")),
            }
        }
        Some(Tok::Minus) => {
            let inner = parse_factor(lx)?;
            Ok(poly_neg(inner))
        }
        _ => Err(lx.err("expected a number, name, or `(`")),
    }
}

/// Parse a polynomial expression over named variables. `line` and `col0`
/// locate `src` inside a larger file for error reporting.
pub fn parse_expression(src: &str, line: usize, col0: usize) -> Result<NamedPoly, ParseError> {
    let mut lx = lex(src, line, col0)?;
    let p = parse_expr(&mut lx)?;
    if lx.peek().is_some() {
        return Err(lx.err("unexpected trailing input"));
    }
    Ok(p)
}

fn resolve(
    poly: &NamedPoly,
    ring: &RingPresentation,
    line: usize,
) -> Result<RawPoly, ParseError> {
    let mut out = Vec::new();
    for (m, c) in poly {
        let mut exps = vec![0u32; ring.generators().len()];
        for (name, e) in m {
            let idx = ring.generator_index(name).ok_or_else(|| {
                ParseError::new(line, 1, format!("unknown generator `{}`", name))
            })?;
            exps[idx] += e;
        }
        out.push((exps, c.clone()));
    }
    Ok(out)
}

/// Result of parsing a manifold spec file.
#[derive(Debug)]
pub struct ParsedSpec {
    pub ring: Arc<RingPresentation>,
    pub manifold: ManifoldData,
    /// Named classes from the optional `[classes]` section.
    pub classes: BTreeMap<String, RingElement>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parse a sectioned manifold spec file.
pub fn parse_manifold_spec(src: &str) -> Result<ParsedSpec, ParseError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Generators,
        Relations,
        Manifold,
        Classes,
    }

    let mut section = Section::None;
    let mut generators: Vec<Generator> = Vec::new();
    // (line_no, lead_src, rhs_src)
    let mut relation_lines: Vec<(usize, String, String)> = Vec::new();
    let mut manifold_keys: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut class_lines: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw_line) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "generators" => Section::Generators,
                "relations" => Section::Relations,
                "manifold" => Section::Manifold,
                "classes" => Section::Classes,
                other => {
                    return Err(ParseError::new(
                        line_no,
                        1,
                        format!("unknown section `[{}]`", other),
                    ))
                }
            };
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), v.trim().to_string()),
            None => {
                return Err(ParseError::new(line_no, 1, "expected `key = value`"));
            }
        };
        match section {
            Section::None => {
                return Err(ParseError::new(
                    line_no,
                    1,
                    "content before the first section header",
                ));
            }
            Section::Generators => {
                let degree: u32 = value.parse().map_err(|_| {
                    ParseError::new(line_no, 1, format!("invalid degree `{}`", value))
                })?;
                generators.push(Generator { name: key, degree });
            }
            Section::Relations => relation_lines.push((line_no, key, value)),
            Section::Manifold => {
                manifold_keys.insert(key, (line_no, value));
            }
            Section::Classes => class_lines.push((line_no, key, value)),
        }
    }

    if generators.is_empty() {
        return Err(ParseError::new(1, 1, "no generators declared"));
    }
    let (n_line, n_str) = manifold_keys
        .get("n")
        .ok_or_else(|| ParseError::new(1, 1, "missing `n` in [manifold]"))?;
    let n: u32 = n_str
        .parse()
        .map_err(|_| ParseError::new(*n_line, 1, format!("invalid n `{}`", n_str)))?;
    if n == 0 {
        return Err(ParseError::new(*n_line, 1, "n must be positive"));
    }
    let top_degree = 2 * n;
    if let Some((l, v)) = manifold_keys.get("top_degree") {
        let td: u32 = v
            .parse()
            .map_err(|_| ParseError::new(*l, 1, format!("invalid top_degree `{}`", v)))?;
        if td != top_degree {
            return Err(ParseError::new(
                *l,
                1,
                format!("top_degree {} does not equal 2n = {}", td, top_degree),
            ));
        }
    }

    // Build the ring: relations need the generator list first. Leads must
    // be single monomials with coefficient 1.
    let probe = RingPresentation::new(generators.clone(), vec![], top_degree)
        .map_err(|e| ParseError::new(1, 1, e.to_string()))?;
    let mut relations = Vec::new();
    for (line_no, lead_src, rhs_src) in &relation_lines {
        let lead_poly = parse_expression(lead_src, *line_no, 1)?;
        let lead_raw = resolve(&lead_poly, &probe, *line_no)?;
        if lead_raw.len() != 1 || !lead_raw[0].1.is_one() {
            return Err(ParseError::new(
                *line_no,
                1,
                "relation left-hand side must be a single monomial with coefficient 1",
            ));
        }
        let rhs_poly = parse_expression(rhs_src, *line_no, lead_src.len() + 3)?;
        let rhs_raw = resolve(&rhs_poly, &probe, *line_no)?;
        relations.push((lead_raw[0].0.clone(), rhs_raw));
    }
    let ring = RingPresentation::new(generators, relations, top_degree)
        .map_err(|e| ParseError::new(1, 1, e.to_string()))?;

    let (c_line, c_src) = manifold_keys
        .get("chern")
        .ok_or_else(|| ParseError::new(1, 1, "missing `chern` in [manifold]"))?;
    let chern_poly = parse_expression(c_src, *c_line, 1)?;
    let chern = RingElement::normalize(&ring, resolve(&chern_poly, &ring, *c_line)?);

    let h1_zero = match manifold_keys.get("h1_zero") {
        Some((l, v)) => match v.as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(ParseError::new(
                    *l,
                    1,
                    format!("h1_zero must be true or false, got `{}`", other),
                ))
            }
        },
        None => false,
    };

    let manifold = ManifoldData::new(Arc::clone(&ring), n, chern, h1_zero)
        .map_err(|e| ParseError::new(*c_line, 1, e.to_string()))?;

    let mut classes = BTreeMap::new();
    for (line_no, name, src) in &class_lines {
        let p = parse_expression(src, *line_no, 1)?;
        let el = RingElement::normalize(&ring, resolve(&p, &ring, *line_no)?);
        classes.insert(name.clone(), el);
    }

    Ok(ParsedSpec {
        ring,
        manifold,
        classes,
    })
}
