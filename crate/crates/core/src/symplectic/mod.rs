//! Linear symplectic machinery: symplecticity checks, eigenvalue
//! classification, modulus splittings with isotropy verification,
//! rational-angle perturbation of elliptic matrices, and identity order.
//!
//! Conventions: vectors in R^{2n} are ordered (q_1..q_n, p_1..p_n), the
//! standard form is omega(u, v) = u^T J v with J = [[0, I], [-I, 0]], so
//! omega(e_i, e_{n+i}) = 1. An elliptic block with angle t acts on the
//! plane (u_j, v_j) as the rotation R(t) = [[cos t, -sin t], [sin t,
//! cos t]] written in that basis.

use nalgebra::{Complex, DMatrix, DVector};
use num_integer::Integer;
use std::fmt::Write as _;

pub mod io;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SymplecticError {
    #[error("matrix must be square with even dimension, got {rows}x{cols}")]
    OddDimension { rows: usize, cols: usize },
    #[error("matrix is not symplectic: defect {defect:e} exceeds tolerance {tol:e}")]
    NotSymplectic { defect: f64, tol: f64 },
    #[error("matrix is not elliptic: {0}")]
    NotElliptic(String),
    #[error("eigenvalue modulus {modulus} is ambiguous at the gap boundary (gap {gap})")]
    AmbiguousModulus { modulus: f64, gap: f64 },
    #[error("eigenvalue solver failed: {0}")]
    EigenSolver(String),
    #[error("subspace extraction failed: {0}")]
    Subspace(String),
    #[error("identity order overflows a 64-bit integer")]
    OrderOverflow,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Default tolerance for the symplecticity defect.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Default tolerance for ||lambda| - 1| when classifying unit-circle
/// eigenvalues.
pub const MODULUS_TOL: f64 = 1e-8;
/// Default pairwise separation below which eigenvalues count as
/// non-simple, and the non-real test threshold on |Im lambda|.
pub const SEP_TOL: f64 = 1e-6;
/// Default modulus gap for invariant splittings.
pub const GAP_DEFAULT: f64 = 1e-3;

/// The standard skew form J on R^{2n}, in (q, p) block order.
pub fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// omega(u, v) = u^T J v for the standard form.
pub fn omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len() / 2;
    let mut acc = 0.0;
    for i in 0..n {
        acc += u[i] * v[n + i] - u[n + i] * v[i];
    }
    acc
}

/// Max-abs-entry norm of M^T J M - J.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let j = standard_j(n);
    let d = m.transpose() * &j * m - j;
    d.iter().fold(0.0, |acc: f64, &x| acc.max(x.abs()))
}

/// True iff M is square of even dimension with symplectic defect at
/// most `tol`.
pub fn is_symplectic(m: &DMatrix<f64>, tol: f64) -> Result<bool, SymplecticError> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
        return Err(SymplecticError::OddDimension {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(symplectic_defect(m) <= tol)
}

/// A validated symplectic matrix.
#[derive(Debug, Clone)]
pub struct SymplecticMatrix {
    mat: DMatrix<f64>,
    n: usize,
    tol: f64,
}

impl SymplecticMatrix {
    pub fn new(mat: DMatrix<f64>, tol: f64) -> Result<Self, SymplecticError> {
        if mat.nrows() != mat.ncols() || mat.nrows() % 2 != 0 || mat.nrows() == 0 {
            return Err(SymplecticError::OddDimension {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let defect = symplectic_defect(&mat);
        if defect > tol {
            return Err(SymplecticError::NotSymplectic { defect, tol });
        }
        let n = mat.nrows() / 2;
        Ok(SymplecticMatrix { mat, n, tol })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.mat)
    }
}

/// Modulus class of one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusClass {
    UnitCircle,
    Expanding,
    Contracting,
}

/// Eigenvalues with modulus labels and the elliptic flag.
#[derive(Debug, Clone)]
pub struct EigenClassification {
    pub eigenvalues: Vec<Complex<f64>>,
    pub labels: Vec<ModulusClass>,
    pub elliptic: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub modulus_tol: f64,
    pub sep_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            modulus_tol: MODULUS_TOL,
            sep_tol: SEP_TOL,
        }
    }
}

/// Classify the spectrum. Elliptic means: all eigenvalues simple
/// (pairwise separation above `sep_tol`), non-real (|Im| above
/// `sep_tol`), and of norm 1 (within `modulus_tol`).
pub fn classify(m: &SymplecticMatrix, opts: &ClassifyOptions) -> EigenClassification {
    let eig = m.mat.clone().complex_eigenvalues();
    let mut eigenvalues: Vec<Complex<f64>> = eig.iter().cloned().collect();
    eigenvalues.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let labels: Vec<ModulusClass> = eigenvalues
        .iter()
        .map(|l| {
            let r = l.norm();
            if (r - 1.0).abs() <= opts.modulus_tol {
                ModulusClass::UnitCircle
            } else if r > 1.0 {
                ModulusClass::Expanding
            } else {
                ModulusClass::Contracting
            }
        })
        .collect();

    let mut elliptic = labels.iter().all(|l| *l == ModulusClass::UnitCircle);
    if elliptic {
        for l in &eigenvalues {
            if l.im.abs() <= opts.sep_tol {
                elliptic = false;
            }
        }
    }
    if elliptic {
        'outer: for i in 0..eigenvalues.len() {
            for j in (i + 1)..eigenvalues.len() {
                if (eigenvalues[i] - eigenvalues[j]).norm() <= opts.sep_tol {
                    elliptic = false;
                    break 'outer;
                }
            }
        }
    }
    EigenClassification {
        eigenvalues,
        labels,
        elliptic,
    }
}

/// Invariant splitting by eigenvalue modulus: E^u for |lambda| > 1, E^s
/// for |lambda| < 1, E^c for the unit-circle part. Bases are
/// orthonormal columns spanning the real generalized eigenspaces.
#[derive(Debug, Clone)]
pub struct InvariantSplitting {
    pub e_u: Vec<DVector<f64>>,
    pub e_c: Vec<DVector<f64>>,
    pub e_s: Vec<DVector<f64>>,
    pub gap: f64,
    /// Worst relative invariance residual over the three subspaces.
    pub invariance_defect: f64,
}

/// Compute the modulus splitting with the given gap. Every eigenvalue
/// must be either within `MODULUS_TOL` of the unit circle or at modulus
/// distance at least `gap` from it.
pub fn invariant_splitting(
    m: &SymplecticMatrix,
    gap: f64,
) -> Result<InvariantSplitting, SymplecticError> {
    let eig = m.mat.clone().complex_eigenvalues();
    let eigenvalues: Vec<Complex<f64>> = eig.iter().cloned().collect();
    let mut unit = Vec::new();
    let mut expanding = Vec::new();
    let mut contracting = Vec::new();
    for l in &eigenvalues {
        let r = l.norm();
        if (r - 1.0).abs() <= MODULUS_TOL {
            unit.push(*l);
        } else if r >= 1.0 + gap {
            expanding.push(*l);
        } else if r <= 1.0 - gap {
            contracting.push(*l);
        } else {
            return Err(SymplecticError::AmbiguousModulus { modulus: r, gap });
        }
    }

    let e_u = generalized_space(&m.mat, &expanding)?;
    let e_s = generalized_space(&m.mat, &contracting)?;
    let e_c = generalized_space(&m.mat, &unit)?;
    if e_u.len() != e_s.len() {
        return Err(SymplecticError::Subspace(format!(
            "rank(E^u) = {} differs from rank(E^s) = {}",
            e_u.len(),
            e_s.len()
        )));
    }

    let mut defect: f64 = 0.0;
    for basis in [&e_u, &e_c, &e_s] {
        defect = defect.max(invariance_residual(&m.mat, basis));
    }
    if defect > 1e-6 {
        return Err(SymplecticError::Subspace(format!(
            "invariance residual {:e} too large",
            defect
        )));
    }

    Ok(InvariantSplitting {
        e_u,
        e_c,
        e_s,
        gap,
        invariance_defect: defect,
    })
}

/// Orthonormal basis of the generalized eigenspace for the given
/// multiset of eigenvalues: the kernel of prod (M - lambda I) with
/// conjugate pairs combined into real quadratic factors.
fn generalized_space(
    m: &DMatrix<f64>,
    eigenvalues: &[Complex<f64>],
) -> Result<Vec<DVector<f64>>, SymplecticError> {
    let dim = m.nrows();
    let want = eigenvalues.len();
    if want == 0 {
        return Ok(vec![]);
    }
    let id = DMatrix::<f64>::identity(dim, dim);
    let mut product = id.clone();
    let mut remaining: Vec<Complex<f64>> = eigenvalues.to_vec();
    while let Some(l) = remaining.pop() {
        if l.im.abs() < 1e-12 {
            product = &product * (m - id.scale(l.re));
        } else {
            // pair with the closest conjugate
            let conj = l.conj();
            let idx = remaining
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (**a - conj).norm().partial_cmp(&(**b - conj).norm()).unwrap()
                })
                .map(|(i, _)| i);
            match idx {
                Some(i) if (remaining[i] - conj).norm() < 1e-6 => {
                    remaining.remove(i);
                }
                _ => {
                    return Err(SymplecticError::EigenSolver(
                        "complex eigenvalue without a conjugate partner".into(),
                    ))
                }
            }
            // (M - l)(M - conj l) = M^2 - 2 Re(l) M + |l|^2
            let quad = m * m - m.scale(2.0 * l.re) + id.scale(l.norm_sqr());
            product = &product * quad;
        }
    }
    // scale for conditioning
    let scale = product.norm();
    if scale > 0.0 {
        product /= scale;
    }
    let svd = product.svd(true, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| SymplecticError::EigenSolver("SVD failed".into()))?;
    let mut sv: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    sv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let smax = sv.last().map(|x| x.0).unwrap_or(1.0).max(1e-300);
    // the `want` smallest singular values must be a clear null cluster
    if want < dim {
        let boundary = sv[want].0 / smax;
        let inside = sv[want - 1].0 / smax;
        if inside > 1e-6 || boundary < 1e-4 {
            return Err(SymplecticError::Subspace(format!(
                "null-space cluster not separated (sigma_{} = {:e}, sigma_{} = {:e})",
                want - 1,
                inside,
                want,
                boundary
            )));
        }
    }
    let mut basis = Vec::with_capacity(want);
    for k in 0..want {
        let row = sv[k].1;
        basis.push(DVector::from_iterator(dim, v_t.row(row).iter().cloned()));
    }
    Ok(basis)
}

fn invariance_residual(m: &DMatrix<f64>, basis: &[DVector<f64>]) -> f64 {
    if basis.is_empty() {
        return 0.0;
    }
    let dim = m.nrows();
    let mut b = DMatrix::<f64>::zeros(dim, basis.len());
    for (j, v) in basis.iter().enumerate() {
        b.set_column(j, v);
    }
    // orthogonal projector onto span(basis)
    let qr = b.clone().qr();
    let q = qr.q();
    let mut worst: f64 = 0.0;
    for v in basis {
        let mv = m * v;
        let proj = &q * (q.transpose() * &mv);
        let res = (&mv - proj).norm() / mv.norm().max(1e-300);
        worst = worst.max(res);
    }
    worst
}

/// Max |omega(u_i, u_j)| over pairs from the basis.
pub fn isotropy_defect(basis: &[DVector<f64>]) -> Result<f64, SymplecticError> {
    if basis.is_empty() {
        return Ok(0.0);
    }
    let dim = basis[0].len();
    if dim % 2 != 0 {
        return Err(SymplecticError::DimensionMismatch(format!(
            "vectors of odd dimension {}",
            dim
        )));
    }
    for v in basis {
        if v.len() != dim {
            return Err(SymplecticError::DimensionMismatch(
                "basis vectors of unequal dimension".into(),
            ));
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            worst = worst.max(omega(&basis[i], &basis[j]).abs());
        }
    }
    Ok(worst)
}

/// Reduced angle p/q representing 2*pi*p/q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalAngle {
    p: i64,
    q: i64,
}

impl RationalAngle {
    pub fn new(p: i64, q: i64) -> Self {
        assert!(q > 0, "denominator must be positive");
        let g = p.abs().gcd(&q).max(1);
        RationalAngle { p: p / g, q: q / g }
    }

    pub fn numer(&self) -> i64 {
        self.p
    }

    pub fn denom(&self) -> i64 {
        self.q
    }

    pub fn radians(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.p as f64 / self.q as f64
    }

    /// Fractional value p/q reduced into (-1/2, 1/2].
    pub fn reduced_fraction(&self) -> (i64, i64) {
        let mut p = self.p.rem_euclid(self.q);
        if 2 * p > self.q {
            p -= self.q;
        }
        (p, self.q)
    }
}

impl std::fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// Best rational approximation of theta/(2*pi) with minimal denominator:
/// the Stern-Brocot descent toward the interval [t - eps, t + eps],
/// with runs of same-direction steps collapsed into continued-fraction
/// coefficients. Deterministic.
pub fn rational_angle_approx(theta: f64, eps: f64) -> RationalAngle {
    assert!(eps > 0.0, "eps must be positive");
    let t = theta / (2.0 * std::f64::consts::PI);
    // denominator 1 always wins when it fits; ties go to the nearest
    // integer
    let nearest = t.round();
    if (t - nearest).abs() <= eps {
        return RationalAngle::new(nearest as i64, 1);
    }
    let base = t.floor();
    let frac = t - base;
    // both endpoints are now strictly inside (0, 1)
    let (p, q) = simplest_in_interval(frac - eps, frac + eps, 0);
    RationalAngle::new(base as i64 * q + p, q)
}

/// The fraction with the smallest denominator inside [lo, hi], by the
/// Stern-Brocot / continued-fraction descent.
fn simplest_in_interval(lo: f64, hi: f64, depth: usize) -> (i64, i64) {
    debug_assert!(lo <= hi);
    if depth > 64 {
        // numerically degenerate interval; fall back to the midpoint
        let q = (2.0 / (hi - lo).max(1e-12)).ceil() as i64;
        return ((0.5 * (lo + hi) * q as f64).round() as i64, q);
    }
    let c = lo.ceil();
    if c <= hi.floor() {
        return (c as i64, 1);
    }
    let a = lo.floor();
    // x = a + 1/y with y simplest in the inverted interval
    let (p, q) = simplest_in_interval(1.0 / (hi - a), 1.0 / (lo - a), depth + 1);
    (a as i64 * p + q, p)
}

/// Least k with k * p_j/q_j integral for all j: lcm of the denominators.
pub fn identity_order(angles: &[RationalAngle]) -> Result<u64, SymplecticError> {
    let mut acc: u64 = 1;
    for a in angles {
        let q = a.denom() as u64;
        let g = acc.gcd(&q);
        acc = acc
            .checked_mul(q / g)
            .ok_or(SymplecticError::OrderOverflow)?;
    }
    Ok(acc)
}

/// Result of perturbing an elliptic matrix to rational angles.
#[derive(Debug, Clone)]
pub struct RationalPerturbation {
    /// T = P * R(2 pi p/q) * P^{-1}, symplectic.
    pub matrix: SymplecticMatrix,
    pub angles: Vec<RationalAngle>,
    /// Angles of the input, in block order, radians in (-pi, pi).
    pub original_angles: Vec<f64>,
    /// The symplectic basis bringing the input to rotation form.
    pub basis: DMatrix<f64>,
    /// 2-norm condition number of the basis.
    pub cond_basis: f64,
    /// ||T - input||_2.
    pub distance: f64,
}

/// Block-diagonal rotation normal form in (q, p) layout: the matrix
/// acting as R(theta_j) on each plane (e_j, e_{n+j}).
pub fn rotation_normal_form(angles: &[f64]) -> DMatrix<f64> {
    let n = angles.len();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (j, &t) in angles.iter().enumerate() {
        let (s, c) = t.sin_cos();
        m[(j, j)] = c;
        m[(n + j, n + j)] = c;
        m[(j, n + j)] = -s;
        m[(n + j, j)] = s;
    }
    m
}

/// Perturb an elliptic matrix to one with the same invariant planes but
/// exactly rational angles: T = P * R(2 pi p_j/q_j) * P^{-1} with
/// p_j/q_j the minimal-denominator approximations within `eps` of
/// theta_j/(2 pi), repaired to keep the eigenvalues simple and non-real.
pub fn perturb_to_rational_angles(
    m: &SymplecticMatrix,
    eps: f64,
    opts: &ClassifyOptions,
) -> Result<RationalPerturbation, SymplecticError> {
    let cls = classify(m, opts);
    if !cls.elliptic {
        return Err(SymplecticError::NotElliptic(format!(
            "spectrum:\n{}",
            format_spectrum(&cls)
        )));
    }
    let n = m.n;
    let dim = 2 * n;

    // one eigenvalue per conjugate pair, with negative imaginary part
    let mut lower: Vec<Complex<f64>> = cls
        .eigenvalues
        .iter()
        .cloned()
        .filter(|l| l.im < 0.0)
        .collect();
    if lower.len() != n {
        return Err(SymplecticError::EigenSolver(format!(
            "expected {} conjugate pairs, found {}",
            n,
            lower.len()
        )));
    }
    // deterministic block order: by |angle|
    lower.sort_by(|a, b| a.arg().abs().partial_cmp(&b.arg().abs()).unwrap());

    let mut planes: Vec<(DVector<f64>, DVector<f64>)> = Vec::with_capacity(n);
    let mut thetas: Vec<f64> = Vec::with_capacity(n);
    for l in &lower {
        let w = complex_null_vector(&m.mat, *l)?;
        let mut u = DVector::from_iterator(dim, w.iter().map(|z| z.re));
        let mut v = DVector::from_iterator(dim, w.iter().map(|z| z.im));
        // lambda = e^{-i theta}: action on (u, v) is R(theta)
        let mut theta = -l.arg();
        let s = omega(&u, &v);
        if s.abs() < 1e-12 {
            return Err(SymplecticError::NotElliptic(
                "eigenplane is omega-degenerate".into(),
            ));
        }
        if s < 0.0 {
            v = -v;
            theta = -theta;
        }
        let scale = 1.0 / omega(&u, &v).sqrt();
        u *= scale;
        v *= scale;
        planes.push((u, v));
        thetas.push(theta);
    }

    // symplectic Gram-Schmidt across planes: remove omega-components
    // along the previous planes, then renormalize
    for j in 0..n {
        let (mut u, mut v) = planes[j].clone();
        for i in 0..j {
            let (ui, vi) = planes[i].clone();
            for x in [&mut u, &mut v] {
                let a = omega(x, &vi);
                let b = omega(x, &ui);
                *x -= ui.scale(a);
                *x += vi.scale(b);
            }
        }
        let s = omega(&u, &v);
        if s <= 0.0 {
            return Err(SymplecticError::Subspace(
                "symplectic orthogonalization lost positivity".into(),
            ));
        }
        let sc = 1.0 / s.sqrt();
        planes[j] = (u.scale(sc), v.scale(sc));
    }

    let mut p = DMatrix::<f64>::zeros(dim, dim);
    for (j, (u, v)) in planes.iter().enumerate() {
        p.set_column(j, u);
        p.set_column(n + j, v);
    }

    // rational angles with distinctness repair: a collision (equal
    // fractions up to sign, or a real value 0 or 1/2) re-approximates
    // the later block with half the tolerance
    let mut angles: Vec<RationalAngle> = Vec::with_capacity(n);
    for j in 0..n {
        let mut local_eps = eps;
        loop {
            let cand = rational_angle_approx(thetas[j], local_eps);
            let (cp, cq) = cand.reduced_fraction();
            let real = cp == 0 || 2 * cp.abs() == cq;
            let collides = angles.iter().any(|a| {
                let (ap, aq) = a.reduced_fraction();
                (ap, aq) == (cp, cq) || (-ap, aq) == (cp, cq)
            });
            if !real && !collides {
                angles.push(cand);
                break;
            }
            local_eps /= 2.0;
            if local_eps < 1e-15 {
                return Err(SymplecticError::NotElliptic(
                    "could not separate rational angles".into(),
                ));
            }
        }
    }

    let rot = rotation_normal_form(&angles.iter().map(|a| a.radians()).collect::<Vec<_>>());
    let p_inv = p
        .clone()
        .try_inverse()
        .ok_or_else(|| SymplecticError::Subspace("basis not invertible".into()))?;
    let t = &p * rot * &p_inv;

    let svd = p.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin.max(1e-300);
    let distance = (&t - &m.mat).norm();

    let matrix = SymplecticMatrix::new(t, SYMPLECTIC_TOL)?;
    Ok(RationalPerturbation {
        matrix,
        angles,
        original_angles: thetas,
        basis: p,
        cond_basis: cond,
        distance,
    })
}

/// Null vector of (M - lambda I) over C via complex SVD.
fn complex_null_vector(
    m: &DMatrix<f64>,
    lambda: Complex<f64>,
) -> Result<DVector<Complex<f64>>, SymplecticError> {
    let dim = m.nrows();
    let mut a = DMatrix::<Complex<f64>>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            a[(i, j)] = Complex::new(m[(i, j)], 0.0);
        }
        a[(i, i)] -= lambda;
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| SymplecticError::EigenSolver("complex SVD failed".into()))?;
    let mut idx = 0;
    let mut best = f64::INFINITY;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < best {
            best = *s;
            idx = i;
        }
    }
    let row = v_t.row(idx);
    Ok(DVector::from_iterator(dim, row.iter().map(|z| z.conj())))
}

/// Matrix exponential by scaling and squaring with a truncated series.
/// Plenty for the desk-scale matrices used here.
pub fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let norm = a.norm();
    let s = norm.log2().ceil().max(0.0) as u32 + 1;
    let scaled = a.scale(1.0 / f64::powi(2.0, s as i32));
    let mut term = DMatrix::<f64>::identity(dim, dim);
    let mut acc = DMatrix::<f64>::identity(dim, dim);
    for k in 1..=20 {
        term = &term * &scaled / (k as f64);
        acc += &term;
    }
    let mut result = acc;
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Matrix power by binary exponentiation.
pub fn matrix_power(m: &DMatrix<f64>, mut e: u64) -> DMatrix<f64> {
    let dim = m.nrows();
    let mut base = m.clone();
    let mut acc = DMatrix::<f64>::identity(dim, dim);
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    acc
}

/// Render the spectrum for diagnostics.
pub fn format_spectrum(cls: &EigenClassification) -> String {
    let mut s = String::new();
    for (l, lab) in cls.eigenvalues.iter().zip(&cls.labels) {
        let tag = match lab {
            ModulusClass::UnitCircle => "unit",
            ModulusClass::Expanding => "expanding",
            ModulusClass::Contracting => "contracting",
        };
        let _ = writeln!(s, "  {} + {}i  |.| = {}  [{}]", l.re, l.im, l.norm(), tag);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot2(theta: f64) -> DMatrix<f64> {
        rotation_normal_form(&[theta])
    }

    #[test]
    fn j_is_symplectic() {
        let j = standard_j(2);
        assert!(is_symplectic(&j, 1e-14).unwrap());
    }

    #[test]
    fn rotations_are_symplectic() {
        for theta in [0.3, 1.2, -2.0, std::f64::consts::PI / 2.0] {
            assert!(is_symplectic(&rot2(theta), 1e-14).unwrap());
        }
    }

    #[test]
    fn odd_dimension_is_an_error() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            is_symplectic(&m, 1e-10),
            Err(SymplecticError::OddDimension { .. })
        ));
    }

    #[test]
    fn omega_of_standard_pair_is_one() {
        let n = 3;
        let mut e1 = DVector::zeros(2 * n);
        e1[0] = 1.0;
        let mut en1 = DVector::zeros(2 * n);
        en1[n] = 1.0;
        assert_eq!(omega(&e1, &en1), 1.0);
        assert_eq!(isotropy_defect(&[e1.clone(), en1]).unwrap(), 1.0);
        assert_eq!(isotropy_defect(&[e1]).unwrap(), 0.0);
    }

    #[test]
    fn classify_rotation_pairs() {
        let m = rotation_normal_form(&[0.7, 1.9]);
        let sm = SymplecticMatrix::new(m, 1e-10).unwrap();
        let cls = classify(&sm, &ClassifyOptions::default());
        assert!(cls.elliptic);

        // repeated angle: not simple
        let m2 = rotation_normal_form(&[0.7, 0.7]);
        let sm2 = SymplecticMatrix::new(m2, 1e-10).unwrap();
        assert!(!classify(&sm2, &ClassifyOptions::default()).elliptic);

        // real hyperbolic pair
        let mut m3 = DMatrix::<f64>::zeros(2, 2);
        m3[(0, 0)] = 2.0;
        m3[(1, 1)] = 0.5;
        let sm3 = SymplecticMatrix::new(m3, 1e-10).unwrap();
        assert!(!classify(&sm3, &ClassifyOptions::default()).elliptic);
    }

    #[test]
    fn splitting_of_block_diagonal() {
        // diag(2, 1/2) on (q1, p1) and R(0.9) on (q2, p2)
        let mut m = DMatrix::<f64>::zeros(4, 4);
        m[(0, 0)] = 2.0;
        m[(2, 2)] = 0.5;
        let (s, c) = 0.9f64.sin_cos();
        m[(1, 1)] = c;
        m[(3, 3)] = c;
        m[(1, 3)] = -s;
        m[(3, 1)] = s;
        let sm = SymplecticMatrix::new(m, 1e-10).unwrap();
        let split = invariant_splitting(&sm, 1e-3).unwrap();
        assert_eq!(split.e_u.len(), 1);
        assert_eq!(split.e_s.len(), 1);
        assert_eq!(split.e_c.len(), 2);
        assert!(split.invariance_defect < 1e-8);
    }

    #[test]
    fn elliptic_matrix_has_trivial_hyperbolic_parts() {
        let m = rotation_normal_form(&[0.7, 1.9]);
        let sm = SymplecticMatrix::new(m, 1e-10).unwrap();
        let split = invariant_splitting(&sm, 1e-3).unwrap();
        assert!(split.e_u.is_empty());
        assert!(split.e_s.is_empty());
        assert_eq!(split.e_c.len(), 4);
    }

    #[test]
    fn rational_angle_examples() {
        // 2*pi/3 -> exactly 1/3
        let a = rational_angle_approx(2.0 * std::f64::consts::PI / 3.0, 1e-6);
        assert_eq!((a.numer(), a.denom()), (1, 3));
        // huge eps -> integer
        let b = rational_angle_approx(1.0, 0.6);
        assert_eq!(b.denom(), 1);
        // 1 rad, 1e-3: brute-force minimal denominator agreement
        let c = rational_angle_approx(1.0, 1e-3);
        let t = 1.0 / (2.0 * std::f64::consts::PI);
        let mut brute = None;
        'outer: for q in 1..2000i64 {
            let p = (t * q as f64).round() as i64;
            if (t - p as f64 / q as f64).abs() <= 1e-3 {
                brute = Some((p, q));
                break 'outer;
            }
        }
        assert_eq!((c.numer(), c.denom()), brute.unwrap());
        // negative angles reduce symmetrically: -2pi * 2/5 radians
        let d = rational_angle_approx(-2.0 * std::f64::consts::PI * 2.0 / 5.0, 1e-9);
        assert_eq!((d.numer(), d.denom()), (-2, 5));
    }

    #[test]
    fn identity_order_is_lcm() {
        let a = RationalAngle::new(1, 3);
        let b = RationalAngle::new(1, 4);
        assert_eq!(identity_order(&[a, b]).unwrap(), 12);
        assert_eq!(identity_order(&[RationalAngle::new(0, 1)]).unwrap(), 1);
        let f = RationalAngle::new(1, 5);
        assert_eq!(identity_order(&[f]).unwrap(), 5);
        let r = rotation_normal_form(&[f.radians()]);
        let r5 = matrix_power(&r, 5);
        let id = DMatrix::<f64>::identity(2, 2);
        assert!((r5 - id).norm() < 1e-12);
    }

    #[test]
    fn exp_of_hamiltonian_matrix_is_symplectic() {
        // JS with S symmetric is a Hamiltonian matrix; its exponential
        // is symplectic.
        let n = 2;
        let mut s = DMatrix::<f64>::zeros(2 * n, 2 * n);
        let vals = [0.3, -0.1, 0.7, 0.2, -0.5, 0.4, 0.1, -0.2, 0.6, 0.05];
        let mut k = 0;
        for i in 0..2 * n {
            for j in i..2 * n {
                s[(i, j)] = vals[k % vals.len()];
                s[(j, i)] = s[(i, j)];
                k += 1;
            }
        }
        let m = matrix_exp(&(standard_j(n) * s));
        assert!(symplectic_defect(&m) < 1e-8);
    }

    #[test]
    fn perturb_rotation_with_rational_angle_returns_itself() {
        let theta = 2.0 * std::f64::consts::PI / 5.0;
        let m = rot2(theta);
        let sm = SymplecticMatrix::new(m.clone(), 1e-10).unwrap();
        let out = perturb_to_rational_angles(&sm, 1e-3, &ClassifyOptions::default()).unwrap();
        assert_eq!(out.angles.len(), 1);
        let (p, q) = out.angles[0].reduced_fraction();
        assert_eq!((p.abs(), q), (1, 5));
        assert!((out.matrix.matrix() - &m).norm() < 1e-9);
        assert_eq!(identity_order(&out.angles).unwrap(), 5);
    }

    #[test]
    fn perturb_rejects_non_elliptic() {
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 0.5;
        let sm = SymplecticMatrix::new(m, 1e-10).unwrap();
        assert!(matches!(
            perturb_to_rational_angles(&sm, 1e-3, &ClassifyOptions::default()),
            Err(SymplecticError::NotElliptic(_))
        ));
    }

    #[test]
    fn perturbed_output_is_elliptic_and_rational() {
        let angles = [1.0f64, 2.0];
        let mbar = rotation_normal_form(&angles);
        let sm = SymplecticMatrix::new(mbar.clone(), 1e-10).unwrap();
        let out = perturb_to_rational_angles(&sm, 1e-3, &ClassifyOptions::default()).unwrap();
        assert!(out.matrix.defect() <= 1e-10);
        let cls = classify(&out.matrix, &ClassifyOptions::default());
        assert!(cls.elliptic);
        assert!(out.distance <= 10.0 * 1e-3 * out.cond_basis);
    }
}
