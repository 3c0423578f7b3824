//! Even factorizations of full Chern classes.
//!
//! An even factorization is a product `c(M) = alpha * beta` of integral
//! classes with `alpha` supported in degrees `H^{4j}`, `0 < deg(alpha) <
//! n` and `deg(alpha) + deg(beta) <= n`. Its existence obstructs the
//! genericity criterion checked by [`obstruction_report`], so "no"
//! answers must be proofs: the decision procedure closes each admissible
//! degree split with a complete method (the univariate gcd criterion or
//! exact elimination) and only falls back to a bounded search, honestly
//! labelled, when neither applies.

pub mod elim;
mod mpoly;
mod unipoly;

pub use mpoly::{quadratic_roots, MPoly, QuadExt};
pub use unipoly::{gcd_subresultant, PolyError, UniPoly};

use crate::report::Doc;
use crate::ring::{ManifoldData, Monomial, Rational, RingElement, RingError};
use num_traits::{One, Zero};
use std::time::{Duration, Instant};

#[derive(Debug, thiserror::Error)]
pub enum FactorError {
    #[error("invalid search configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Knobs for the decision procedure.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Bound on integer alpha-coefficients in the fallback search.
    pub coeff_bound: i64,
    /// Use the univariate gcd criterion when the ring allows it.
    pub enable_gcd_criterion: bool,
    /// Use exact elimination when the alpha-unknown count is small.
    pub enable_elimination: bool,
    /// Elimination is attempted when alpha has at most this many unknowns.
    pub max_alpha_unknowns: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            coeff_bound: 50,
            enable_gcd_criterion: true,
            enable_elimination: true,
            max_alpha_unknowns: 4,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), FactorError> {
        if self.coeff_bound < 1 {
            return Err(FactorError::BadConfig(format!(
                "coefficient bound must be at least 1, got {}",
                self.coeff_bound
            )));
        }
        Ok(())
    }
}

/// A verified even factorization.
#[derive(Debug, Clone)]
pub struct FactorizationWitness {
    pub alpha: RingElement,
    pub beta: RingElement,
    pub deg_alpha: u32,
    pub deg_beta: u32,
}

/// Which complete method proved a "no".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoMethod {
    GcdCriterion,
    ExactElimination,
    /// No even degree split with 0 < d < n exists at all (in particular
    /// every 4-manifold with nonzero top Chern class lands here unless
    /// the ring is univariate, where the gcd tier answers first).
    NoAdmissibleSplit,
}

impl std::fmt::Display for NoMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NoMethod::GcdCriterion => "gcd_criterion",
            NoMethod::ExactElimination => "exact_elimination",
            NoMethod::NoAdmissibleSplit => "no_admissible_split",
        };
        write!(f, "{}", s)
    }
}

#[derive(Debug, Clone)]
pub enum FactorizationVerdict {
    Yes(FactorizationWitness),
    NoProved(NoMethod),
    NoWithinBound { bound: i64 },
}

/// Certificate for the univariate gcd criterion: `gcd` was computed from
/// `c_poly` and its mirror by the monic Euclidean algorithm; replaying
/// recomputes it with the independent subresultant route.
#[derive(Debug, Clone)]
pub struct GcdCertificate {
    pub c_poly: UniPoly,
    pub mirrored: UniPoly,
    pub gcd: UniPoly,
}

impl GcdCertificate {
    /// True iff the certificate is internally consistent and the
    /// independent subresultant gcd confirms a constant gcd.
    pub fn replay(&self) -> bool {
        if self.mirrored != self.c_poly.mirror() {
            return false;
        }
        if self.gcd != self.c_poly.gcd_euclid(&self.mirrored) {
            return false;
        }
        let sub = gcd_subresultant(&self.c_poly, &self.mirrored);
        self.gcd.degree() == Some(0) && sub.degree() == Some(0)
    }
}

/// Outcome of exact elimination on one degree split.
#[derive(Debug)]
pub struct EliminationSummary {
    pub deg_alpha: u32,
    pub alpha_monomials: Vec<Monomial>,
    pub beta_monomials: Vec<Monomial>,
    pub outcome: elim::Outcome,
    /// When a contradiction closes the split at a pure power of a single
    /// generator, the restriction of c(M) to that generator's powers is
    /// the univariate residual whose roots exhibit the obstruction.
    pub univariate_residual: Option<UniPoly>,
}

#[derive(Debug, Clone)]
pub struct BoundedRecord {
    pub requested_bound: i64,
    /// Bound actually exhausted (lowered if the candidate count would be
    /// astronomical; the verdict reports the effective bound).
    pub effective_bound: i64,
    pub candidates_tried: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMethod {
    GcdCriterion,
    Elimination,
    BoundedSearch,
}

impl std::fmt::Display for SplitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SplitMethod::GcdCriterion => "gcd_criterion",
            SplitMethod::Elimination => "elimination",
            SplitMethod::BoundedSearch => "bounded_search",
        };
        write!(f, "{}", s)
    }
}

/// Per-split record in the decision trace.
#[derive(Debug)]
pub struct SplitRecord {
    pub deg_alpha: u32,
    pub alpha_unknowns: usize,
    pub method: SplitMethod,
    /// True iff a complete method established "no" for this split.
    pub closed: bool,
    pub elimination: Option<EliminationSummary>,
    pub bounded: Option<BoundedRecord>,
}

/// Full account of a factorization decision: verdict, certificates, the
/// split enumeration, and timing.
#[derive(Debug)]
pub struct DecisionTrace {
    pub verdict: FactorizationVerdict,
    pub gcd_certificate: Option<GcdCertificate>,
    pub splits: Vec<SplitRecord>,
    pub elapsed: Duration,
}

/// Restriction of an element to powers of a single generator, as a
/// univariate polynomial (coefficients of 1, g, g^2, ...).
pub fn univariate_restriction(x: &RingElement, gen_index: usize) -> UniPoly {
    let ngens = x.ring().generators().len();
    let mut coeffs: Vec<Rational> = Vec::new();
    for (m, c) in x.terms() {
        let exps = m.exponents();
        if exps
            .iter()
            .enumerate()
            .all(|(i, &e)| i == gen_index || e == 0)
        {
            let k = exps[gen_index] as usize;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, Rational::zero());
            }
            coeffs[k] = c.clone();
        }
    }
    debug_assert!(gen_index < ngens);
    UniPoly::new(coeffs)
}

/// Check whether `alpha` divides `c` admissibly: `beta := c * alpha^{-1}`
/// is forced, and the witness is returned iff every constraint holds
/// (`alpha` integral with constant term 1 and only even-degree terms,
/// `0 < deg(alpha) < n`, `beta` integral, `deg(alpha) + deg(beta) <= n`,
/// and the product replays exactly).
pub fn divide_check(
    c: &RingElement,
    alpha: &RingElement,
    n: u32,
) -> Option<FactorizationWitness> {
    if !alpha.constant_term().is_one() {
        return None;
    }
    if !alpha.has_only_even_degree_terms() {
        return None;
    }
    let deg_alpha = alpha.degree().ok()?;
    if deg_alpha == 0 || deg_alpha >= n {
        return None;
    }
    if !alpha.is_integral() {
        return None;
    }
    let beta = c.try_mul(&alpha.invert_unit().ok()?).ok()?;
    let deg_beta = beta.degree().ok()?;
    if deg_alpha + deg_beta > n {
        return None;
    }
    if !beta.is_integral() {
        return None;
    }
    // replay the product exactly
    if &alpha.try_mul(&beta).ok()? != c {
        return None;
    }
    Some(FactorizationWitness {
        alpha: alpha.clone(),
        beta,
        deg_alpha,
        deg_beta,
    })
}

/// The univariate root-pairing criterion: an even nonconstant factor of
/// `c` forces `gcd(c(x), c(-x))` to be nonconstant, so a constant gcd
/// proves that no even factorization exists. Returns true iff the gcd is
/// a nonzero constant.
pub fn univariate_gcd_criterion(c_poly: &UniPoly) -> Result<bool, FactorError> {
    if c_poly.is_zero() {
        return Err(FactorError::Poly(PolyError::ZeroPolynomial));
    }
    let g = c_poly.gcd_euclid(&c_poly.mirror());
    Ok(g.degree() == Some(0))
}

/// Per-split polynomial system: unknowns are the alpha-coefficients on
/// basis monomials of degree 4j <= 2*deg_alpha, then the
/// beta-coefficients on basis monomials of degree 2k <= 2*(n -
/// deg_alpha); equations match every coefficient of `alpha*beta` against
/// `c` on the non-unit basis monomials.
struct SplitSystem {
    names: Vec<String>,
    alpha_monomials: Vec<Monomial>,
    beta_monomials: Vec<Monomial>,
    equations: Vec<elim::Equation>,
}

fn build_split_system(m: &ManifoldData, deg_alpha: u32) -> SplitSystem {
    let ring = &m.ring;
    let mut alpha_monomials: Vec<Monomial> = Vec::new();
    let mut k = 2u32;
    while k <= deg_alpha {
        alpha_monomials.extend(ring.basis_of_degree(2 * k));
        k += 2;
    }
    let mut beta_monomials: Vec<Monomial> = Vec::new();
    for k in 1..=(m.n - deg_alpha) {
        beta_monomials.extend(ring.basis_of_degree(2 * k));
    }
    let nvars = alpha_monomials.len() + beta_monomials.len();
    let mut names: Vec<String> = Vec::new();
    for mo in &alpha_monomials {
        names.push(format!("alpha[{}]", mo.format(ring)));
    }
    for mo in &beta_monomials {
        names.push(format!("beta[{}]", mo.format(ring)));
    }

    // symbolic product (1 + sum u_i mu_i)(1 + sum w_j nu_j)
    let one = RingElement::one(ring);
    let unit_poly = MPoly::constant(nvars, Rational::one());
    let mut alpha_terms: Vec<(RingElement, MPoly)> = vec![(one.clone(), unit_poly.clone())];
    for (i, mo) in alpha_monomials.iter().enumerate() {
        alpha_terms.push((
            RingElement::from_monomial(ring, mo, Rational::one()),
            MPoly::var(nvars, i),
        ));
    }
    let mut beta_terms: Vec<(RingElement, MPoly)> = vec![(one, unit_poly)];
    for (j, mo) in beta_monomials.iter().enumerate() {
        beta_terms.push((
            RingElement::from_monomial(ring, mo, Rational::one()),
            MPoly::var(nvars, alpha_monomials.len() + j),
        ));
    }

    let mut acc: std::collections::BTreeMap<Monomial, MPoly> = std::collections::BTreeMap::new();
    for (ea, pa) in &alpha_terms {
        for (eb, pb) in &beta_terms {
            let prod = ea.try_mul(eb).expect("same ring");
            let upoly = pa.mul(pb);
            for (mono, coeff) in prod.terms() {
                let entry = acc
                    .entry(mono.clone())
                    .or_insert_with(|| MPoly::zero(nvars));
                *entry = entry.add(&upoly.scale(coeff));
            }
        }
    }

    let mut equations = Vec::new();
    for mono in m.ring.basis() {
        if mono.is_unit() {
            continue;
        }
        let lhs = acc.remove(&mono).unwrap_or_else(|| MPoly::zero(nvars));
        let target = m.chern.coefficient(&mono);
        let poly = lhs.sub(&MPoly::constant(nvars, target));
        equations.push(elim::Equation {
            label: mono.format(&m.ring),
            poly,
        });
    }

    SplitSystem {
        names,
        alpha_monomials,
        beta_monomials,
        equations,
    }
}

fn alpha_from_solution(
    m: &ManifoldData,
    alpha_monomials: &[Monomial],
    values: &[Rational],
) -> RingElement {
    let mut alpha = RingElement::one(&m.ring);
    for (mo, v) in alpha_monomials.iter().zip(values) {
        if !v.is_zero() {
            let t = RingElement::from_monomial(&m.ring, mo, v.clone());
            alpha = alpha.try_add(&t).expect("same ring");
        }
    }
    alpha
}

const BOUNDED_CANDIDATE_CAP: u64 = 10_000_000;

fn bounded_effective(bound: i64, unknowns: usize) -> i64 {
    let mut b = bound;
    while b > 0 {
        let width = 2 * b as u64 + 1;
        let mut total: u64 = 1;
        let mut overflow = false;
        for _ in 0..unknowns {
            total = match total.checked_mul(width) {
                Some(t) if t <= BOUNDED_CANDIDATE_CAP => t,
                _ => {
                    overflow = true;
                    break;
                }
            };
        }
        if !overflow {
            return b;
        }
        b /= 2;
    }
    0
}

fn bounded_search(
    m: &ManifoldData,
    alpha_monomials: &[Monomial],
    bound: i64,
) -> (Option<FactorizationWitness>, BoundedRecord) {
    let k = alpha_monomials.len();
    let effective = bounded_effective(bound, k);
    let mut record = BoundedRecord {
        requested_bound: bound,
        effective_bound: effective,
        candidates_tried: 0,
    };
    if effective == 0 || k == 0 {
        return (None, record);
    }
    let mut coeffs = vec![-effective; k];
    loop {
        record.candidates_tried += 1;
        let values: Vec<Rational> = coeffs.iter().map(|&v| crate::ring::rat(v)).collect();
        let alpha = alpha_from_solution(m, alpha_monomials, &values);
        if let Some(w) = divide_check(&m.chern, &alpha, m.n) {
            return (Some(w), record);
        }
        // odometer, first coordinate most significant
        let mut i = k;
        loop {
            if i == 0 {
                return (None, record);
            }
            i -= 1;
            if coeffs[i] < effective {
                coeffs[i] += 1;
                for c in coeffs.iter_mut().skip(i + 1) {
                    *c = -effective;
                }
                break;
            }
        }
    }
}

/// Decide the existence of an even factorization of `m.chern`.
///
/// Splits `deg(alpha) = 2, 4, ...` below `n` are enumerated in
/// increasing order. Univariate degree-2 rings are answered globally by
/// the gcd criterion when it proves "no"; otherwise each split is closed
/// by exact elimination when the alpha-unknown count admits it, with a
/// bounded integer search as the honest fallback.
pub fn decide_even_factorization(
    m: &ManifoldData,
    cfg: &SearchConfig,
) -> Result<DecisionTrace, FactorError> {
    cfg.validate()?;
    let start = Instant::now();

    let splits: Vec<u32> = (2..m.n).step_by(2).collect();
    let univariate_deg2 =
        m.ring.generators().len() == 1 && m.ring.generators()[0].degree == 2;

    let mut gcd_certificate = None;
    if cfg.enable_gcd_criterion && univariate_deg2 {
        let c_poly = univariate_restriction(&m.chern, 0);
        let mirrored = c_poly.mirror();
        let gcd = c_poly.gcd_euclid(&mirrored);
        let constant = gcd.degree() == Some(0);
        gcd_certificate = Some(GcdCertificate {
            c_poly,
            mirrored,
            gcd,
        });
        if constant {
            let split_records = splits
                .iter()
                .map(|&d| SplitRecord {
                    deg_alpha: d,
                    alpha_unknowns: 0,
                    method: SplitMethod::GcdCriterion,
                    closed: true,
                    elimination: None,
                    bounded: None,
                })
                .collect();
            return Ok(DecisionTrace {
                verdict: FactorizationVerdict::NoProved(NoMethod::GcdCriterion),
                gcd_certificate,
                splits: split_records,
                elapsed: start.elapsed(),
            });
        }
    }

    if splits.is_empty() {
        return Ok(DecisionTrace {
            verdict: FactorizationVerdict::NoProved(NoMethod::NoAdmissibleSplit),
            gcd_certificate,
            splits: vec![],
            elapsed: start.elapsed(),
        });
    }

    let mut records: Vec<SplitRecord> = Vec::new();
    for &deg_alpha in &splits {
        let sys = build_split_system(m, deg_alpha);
        let alpha_unknowns = sys.alpha_monomials.len();
        let mut record = SplitRecord {
            deg_alpha,
            alpha_unknowns,
            method: SplitMethod::BoundedSearch,
            closed: false,
            elimination: None,
            bounded: None,
        };

        if cfg.enable_elimination && alpha_unknowns <= cfg.max_alpha_unknowns {
            record.method = SplitMethod::Elimination;
            let outcome = elim::solve_system(sys.names.clone(), sys.equations.clone());
            let complete = matches!(outcome, elim::Outcome::Complete { .. });
            let mut witness = None;
            if let elim::Outcome::Complete {
                ref rational_solutions,
                ..
            } = outcome
            {
                for sol in rational_solutions {
                    let alpha =
                        alpha_from_solution(m, &sys.alpha_monomials, &sol[..alpha_unknowns]);
                    if let Some(w) = divide_check(&m.chern, &alpha, m.n) {
                        witness = Some(w);
                        break;
                    }
                }
            }
            let univariate_residual = match &outcome {
                elim::Outcome::Complete { certificate, .. } => {
                    certificate.contradiction().and_then(|(label, _)| {
                        pure_power_generator(m, label).map(|g| univariate_restriction(&m.chern, g))
                    })
                }
                _ => None,
            };
            record.elimination = Some(EliminationSummary {
                deg_alpha,
                alpha_monomials: sys.alpha_monomials.clone(),
                beta_monomials: sys.beta_monomials.clone(),
                outcome,
                univariate_residual,
            });
            if let Some(w) = witness {
                record.closed = false;
                records.push(record);
                return Ok(DecisionTrace {
                    verdict: FactorizationVerdict::Yes(w),
                    gcd_certificate,
                    splits: records,
                    elapsed: start.elapsed(),
                });
            }
            if complete {
                record.closed = true;
                records.push(record);
                continue;
            }
            // incomplete elimination: fall through to the bounded search
            record.method = SplitMethod::BoundedSearch;
        }

        let (witness, brec) = bounded_search(m, &sys.alpha_monomials, cfg.coeff_bound);
        record.bounded = Some(brec);
        records.push(record);
        if let Some(w) = witness {
            return Ok(DecisionTrace {
                verdict: FactorizationVerdict::Yes(w),
                gcd_certificate,
                splits: records,
                elapsed: start.elapsed(),
            });
        }
    }

    let all_closed = records.iter().all(|r| r.closed);
    let verdict = if all_closed {
        FactorizationVerdict::NoProved(NoMethod::ExactElimination)
    } else {
        let bound = records
            .iter()
            .filter(|r| !r.closed)
            .filter_map(|r| r.bounded.as_ref().map(|b| b.effective_bound))
            .min()
            .unwrap_or(0);
        FactorizationVerdict::NoWithinBound { bound }
    };
    Ok(DecisionTrace {
        verdict,
        gcd_certificate,
        splits: records,
        elapsed: start.elapsed(),
    })
}

/// If `label` names a pure power of one generator, return its index.
fn pure_power_generator(m: &ManifoldData, label: &str) -> Option<usize> {
    for mono in m.ring.basis() {
        if mono.format(&m.ring) == label {
            let nonzero: Vec<usize> = mono
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, _)| i)
                .collect();
            return if nonzero.len() == 1 {
                Some(nonzero[0])
            } else {
                None
            };
        }
    }
    None
}

/// Status of the genericity obstruction criterion for one manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstructionStatus {
    /// h1_zero, nonzero top Chern class, and a proved "no factorization".
    Satisfied,
    /// A hypothesis fails or a factorization exists.
    NotSatisfied,
    /// The factorization search was bounded and found nothing.
    Inconclusive,
    /// The user did not declare H^1 = 0.
    NotApplicable,
}

impl std::fmt::Display for ObstructionStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ObstructionStatus::Satisfied => "satisfied",
            ObstructionStatus::NotSatisfied => "not_satisfied",
            ObstructionStatus::Inconclusive => "inconclusive",
            ObstructionStatus::NotApplicable => "not_applicable",
        };
        write!(f, "{}", s)
    }
}

#[derive(Debug)]
pub struct ObstructionReport {
    pub name: Option<String>,
    pub h1_zero: bool,
    pub n: u32,
    pub top_chern: RingElement,
    pub top_chern_nonzero: bool,
    pub trace: DecisionTrace,
    pub status: ObstructionStatus,
}

/// Run the full obstruction check: echo the H^1 flag, test the top Chern
/// class, decide the factorization, and combine.
pub fn obstruction_report(
    m: &ManifoldData,
    name: Option<&str>,
    cfg: &SearchConfig,
) -> Result<ObstructionReport, FactorError> {
    let trace = decide_even_factorization(m, cfg)?;
    let top_chern = m.top_chern();
    let top_chern_nonzero = !top_chern.is_zero();
    let status = if !m.h1_zero {
        ObstructionStatus::NotApplicable
    } else if !top_chern_nonzero {
        ObstructionStatus::NotSatisfied
    } else {
        match &trace.verdict {
            FactorizationVerdict::NoProved(_) => ObstructionStatus::Satisfied,
            FactorizationVerdict::Yes(_) => ObstructionStatus::NotSatisfied,
            FactorizationVerdict::NoWithinBound { .. } => ObstructionStatus::Inconclusive,
        }
    };
    Ok(ObstructionReport {
        name: name.map(|s| s.to_string()),
        h1_zero: m.h1_zero,
        n: m.n,
        top_chern,
        top_chern_nonzero,
        trace,
        status,
    })
}

impl DecisionTrace {
    /// Structured document: the split enumeration, per-split method,
    /// witness or certificate. Timing is deliberately excluded so that
    /// identical inputs render byte-identical documents.
    pub fn to_doc(&self) -> Doc {
        let mut d = Doc::new();
        match &self.verdict {
            FactorizationVerdict::Yes(w) => {
                d.push("verdict", "yes");
                d.push("witness.alpha", &w.alpha);
                d.push("witness.beta", &w.beta);
                d.push("witness.deg_alpha", w.deg_alpha);
                d.push("witness.deg_beta", w.deg_beta);
            }
            FactorizationVerdict::NoProved(method) => {
                d.push("verdict", "no_proved");
                d.push("method", method);
            }
            FactorizationVerdict::NoWithinBound { bound } => {
                d.push("verdict", "no_within_bound");
                d.push("bound", bound);
            }
        }
        if let Some(g) = &self.gcd_certificate {
            d.push("gcd.c_poly", &g.c_poly);
            d.push("gcd.mirrored", &g.mirrored);
            d.push("gcd.gcd", &g.gcd);
            d.push("gcd.constant", g.gcd.degree() == Some(0));
        }
        d.push("splits.count", self.splits.len());
        for (i, s) in self.splits.iter().enumerate() {
            let p = format!("split.{}", i);
            d.push(format!("{}.deg_alpha", p), s.deg_alpha);
            d.push(format!("{}.method", p), s.method);
            d.push(format!("{}.closed", p), s.closed);
            d.push(format!("{}.alpha_unknowns", p), s.alpha_unknowns);
            if let Some(e) = &s.elimination {
                d.nest(&p, elimination_doc(e));
            }
            if let Some(b) = &s.bounded {
                d.push(format!("{}.bounded.requested", p), b.requested_bound);
                d.push(format!("{}.bounded.effective", p), b.effective_bound);
                d.push(format!("{}.bounded.tried", p), b.candidates_tried);
            }
        }
        d
    }
}

fn elimination_doc(e: &EliminationSummary) -> Doc {
    let mut d = Doc::new();
    match &e.outcome {
        elim::Outcome::Complete {
            rational_solutions,
            quadratic_solutions,
            certificate,
        } => {
            d.push("elimination.outcome", "complete");
            d.push("elimination.unknowns", certificate.unknowns.join(","));
            for (i, eq) in certificate.equations.iter().enumerate() {
                d.push(
                    format!("elimination.equation.{}", i),
                    format!(
                        "[{}] {} = 0",
                        eq.label,
                        eq.poly.format(&certificate.unknowns)
                    ),
                );
            }
            for (i, s) in certificate.steps.iter().enumerate() {
                d.push(format!("elimination.step.{}", i), step_text(s));
            }
            d.push(
                "elimination.solutions.rational",
                rational_solutions.len(),
            );
            for (i, sol) in rational_solutions.iter().enumerate() {
                let rendered: Vec<String> = certificate
                    .unknowns
                    .iter()
                    .zip(sol)
                    .map(|(n, v)| format!("{}={}", n, v))
                    .collect();
                d.push(
                    format!("elimination.solution.rational.{}", i),
                    rendered.join(", "),
                );
            }
            d.push(
                "elimination.solutions.quadratic",
                quadratic_solutions.len(),
            );
            for (i, sol) in quadratic_solutions.iter().enumerate() {
                let rendered: Vec<String> = certificate
                    .unknowns
                    .iter()
                    .zip(sol)
                    .map(|(n, v)| format!("{}={}", n, v))
                    .collect();
                d.push(
                    format!("elimination.solution.quadratic.{}", i),
                    rendered.join(", "),
                );
                d.push(
                    format!("elimination.solution.quadratic.{}.all_integer", i),
                    sol.iter().all(|v| v.is_integer()),
                );
            }
            d.push(
                "elimination.exhibits_exhaustive",
                certificate.exhibits_exhaustive,
            );
        }
        elim::Outcome::Incomplete {
            reason,
            certificate,
        } => {
            d.push("elimination.outcome", "incomplete");
            d.push("elimination.reason", reason);
            for (i, s) in certificate.steps.iter().enumerate() {
                d.push(format!("elimination.step.{}", i), step_text(s));
            }
        }
    }
    if let Some(u) = &e.univariate_residual {
        d.push("elimination.univariate_residual", u);
        let roots = u.numeric_roots();
        for (i, r) in roots.iter().enumerate() {
            d.push(
                format!("elimination.univariate_residual.root.{}", i),
                format!("{} {}", r.re, r.im),
            );
        }
    }
    d
}

fn step_text(s: &elim::Step) -> String {
    match s {
        elim::Step::Forced {
            unknown,
            value,
            equation,
        } => format!("[{}] forced {} = {}", equation, unknown, value),
        elim::Step::Linear {
            unknown,
            expr,
            equation,
        } => format!("[{}] substituted {} = {}", equation, unknown, expr),
        elim::Step::RationalRoots {
            unknown,
            poly,
            roots,
            residual_degree,
            equation,
        } => {
            let rendered: Vec<String> = roots.iter().map(|r| r.to_string()).collect();
            format!(
                "[{}] rational roots of {} in {}: {{{}}} (residual degree {})",
                equation,
                poly,
                unknown,
                rendered.join(", "),
                residual_degree
            )
        }
        elim::Step::QuadraticClosure {
            unknown,
            poly,
            discriminant,
            equation,
        } => format!(
            "[{}] closing quadratic {} in {} (discriminant {})",
            equation, poly, unknown, discriminant
        ),
        elim::Step::NonRationalResidual {
            unknown,
            poly,
            degree,
            equation,
        } => format!(
            "[{}] residual {} in {} has no rational roots (degree {})",
            equation, poly, unknown, degree
        ),
        elim::Step::Resultant {
            eliminated,
            pivot,
            against,
        } => format!(
            "eliminated {} via resultant of [{}] and [{}]",
            eliminated, pivot, against
        ),
        elim::Step::Contradiction { equation, residual } => {
            format!("[{}] contradiction: residual {} != 0", equation, residual)
        }
    }
}

impl ObstructionReport {
    pub fn to_doc(&self) -> Doc {
        let mut d = Doc::new();
        if let Some(n) = &self.name {
            d.push("manifold", n);
        }
        d.push("n", self.n);
        d.push("h1_zero", self.h1_zero);
        d.push("top_chern", &self.top_chern);
        d.push("top_chern_nonzero", self.top_chern_nonzero);
        d.nest("factorization", self.trace.to_doc());
        d.push("criterion", self.status);
        d
    }

    /// Human-readable report, including timing.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        if let Some(n) = &self.name {
            s.push_str(&format!("manifold: {}\n", n));
        }
        s.push_str(&format!("n = {}\n", self.n));
        s.push_str(&format!("H^1 = 0 declared: {}\n", self.h1_zero));
        s.push_str(&format!(
            "top Chern class: {} ({})\n",
            self.top_chern,
            if self.top_chern_nonzero {
                "nonzero"
            } else {
                "zero"
            }
        ));
        match &self.trace.verdict {
            FactorizationVerdict::Yes(w) => {
                s.push_str("even factorization: YES\n");
                s.push_str(&format!(
                    "  alpha = {} (degree {})\n",
                    w.alpha, w.deg_alpha
                ));
                s.push_str(&format!("  beta  = {} (degree {})\n", w.beta, w.deg_beta));
            }
            FactorizationVerdict::NoProved(method) => {
                s.push_str(&format!("even factorization: NO (proved, {})\n", method));
            }
            FactorizationVerdict::NoWithinBound { bound } => {
                s.push_str(&format!(
                    "even factorization: none with |coefficients| <= {} (inconclusive)\n",
                    bound
                ));
            }
        }
        for rec in &self.splits_with_detail() {
            s.push_str(rec);
        }
        let status_line = match self.status {
            ObstructionStatus::Satisfied => "criterion satisfied",
            ObstructionStatus::NotSatisfied => "criterion not satisfied",
            ObstructionStatus::Inconclusive => "inconclusive",
            ObstructionStatus::NotApplicable => "criterion not applicable (H^1 = 0 not declared)",
        };
        s.push_str(&format!("verdict: {}\n", status_line));
        s.push_str(&format!(
            "elapsed: {:.3} ms\n",
            self.trace.elapsed.as_secs_f64() * 1e3
        ));
        s
    }

    fn splits_with_detail(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(g) = &self.trace.gcd_certificate {
            out.push(format!(
                "gcd criterion: gcd({}, {}) = {}\n",
                g.c_poly, g.mirrored, g.gcd
            ));
        }
        for s in &self.trace.splits {
            out.push(format!(
                "split deg(alpha) = {}: method {}, {}\n",
                s.deg_alpha,
                s.method,
                if s.closed { "closed" } else { "open" }
            ));
            if let Some(e) = &s.elimination {
                if let elim::Outcome::Complete {
                    rational_solutions,
                    quadratic_solutions,
                    certificate,
                } = &e.outcome
                {
                    for st in &certificate.steps {
                        out.push(format!("  {}\n", step_text(st)));
                    }
                    for sol in rational_solutions {
                        let rendered: Vec<String> = certificate
                            .unknowns
                            .iter()
                            .zip(sol)
                            .map(|(n, v)| format!("{}={}", n, v))
                            .collect();
                        out.push(format!("  solution: {}\n", rendered.join(", ")));
                    }
                    for sol in quadratic_solutions {
                        let rendered: Vec<String> = certificate
                            .unknowns
                            .iter()
                            .zip(sol)
                            .map(|(n, v)| format!("{}={}", n, v))
                            .collect();
                        out.push(format!("  solution (non-rational): {}\n", rendered.join(", ")));
                    }
                }
                if let Some(u) = &e.univariate_residual {
                    out.push(format!("  univariate residual: {}\n", u));
                    for r in u.numeric_roots() {
                        if r.im.abs() < 1e-12 {
                            out.push(format!("    root: {}\n", r.re));
                        } else {
                            out.push(format!("    root: {} + {}i\n", r.re, r.im));
                        }
                    }
                }
            }
            if let Some(b) = &s.bounded {
                out.push(format!(
                    "  bounded search: |coeff| <= {} ({} candidates)\n",
                    b.effective_bound, b.candidates_tried
                ));
            }
        }
        out
    }
}
