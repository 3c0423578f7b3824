//! Generating functions of symplectic maps fixing 0, and cutoff blending
//! to the linearization.
//!
//! A map f(q, p) = (q', p') with invertible dq'/dp block at 0 has a
//! generating function S(q, q') with dS/dq = -p and dS/dq' = p'. Writing
//! S as its quadratic part plus a remainder k of order >= 3, the blended
//! function replaces k by a_delta(|(q, q')|) * k, which produces a
//! symplectomorphism equal to df(0) near 0 and to f outside the 2*delta
//! ball. The remainder is represented numerically: S itself is obtained
//! by integrating the gradient identities along radial paths, and the
//! map defined by a blended S is recovered by Newton solves.

mod cutoff;
mod poly;

pub use cutoff::{smoothstep, smoothstep_deriv, smoothstep_deriv2, CutoffProfile};
pub use poly::Poly;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::OnceLock;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BlendError {
    #[error("degenerate chart: dq'/dp at 0 has |det| = {0:e} (no generating function of this type)")]
    DegenerateChart(f64),
    #[error("map is not symplectic on the sample grid (worst Jacobian defect {0:e})")]
    NotSymplectic(f64),
    #[error("map must fix the origin, got |f(0)| = {0:e}")]
    OriginNotFixed(f64),
    #[error("only n = 1 or n = 2 are supported, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("component count {found} does not match 2n = {expected}")]
    ComponentCount { found: usize, expected: usize },
    #[error("delta {delta} too large for the working box of half-width {box_half}")]
    DeltaTooLarge { delta: f64, box_half: f64 },
    #[error("Newton did not converge ({0})")]
    NewtonDiverged(String),
    #[error("inconsistent linear part: {0}")]
    BadLinearPart(String),
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// A polynomial symplectic map of R^{2n} fixing the origin. Components
/// are polynomials in (q_1..q_n, p_1..p_n); the Jacobian is checked to
/// be symplectic on a sample grid of the working box at construction.
#[derive(Debug, Clone)]
pub struct PolySymplecticMap {
    n: usize,
    comps: Vec<Poly>,
    box_half: f64,
}

impl PolySymplecticMap {
    pub fn new(n: usize, comps: Vec<Poly>, box_half: f64) -> Result<Self, BlendError> {
        if n == 0 || n > 2 {
            return Err(BlendError::UnsupportedDimension(n));
        }
        if comps.len() != 2 * n {
            return Err(BlendError::ComponentCount {
                found: comps.len(),
                expected: 2 * n,
            });
        }
        let map = PolySymplecticMap {
            n,
            comps,
            box_half,
        };
        let origin = vec![0.0; 2 * n];
        let f0 = map.eval(&origin);
        let f0_norm = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if f0_norm > 1e-12 {
            return Err(BlendError::OriginNotFixed(f0_norm));
        }
        let mut worst: f64 = 0.0;
        for x in grid(2 * n, box_half, 5) {
            let j = map.jacobian(&x);
            worst = worst.max(crate::symplectic::symplectic_defect(&j));
        }
        if worst > 1e-6 {
            return Err(BlendError::NotSymplectic(worst));
        }
        Ok(map)
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn box_half(&self) -> f64 {
        self.box_half
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|p| p.eval(x)).collect()
    }

    /// Exact Jacobian from formal partials.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = 2 * self.n;
        let mut j = DMatrix::zeros(d, d);
        for (i, comp) in self.comps.iter().enumerate() {
            for v in 0..d {
                j[(i, v)] = comp.partial(v).eval(x);
            }
        }
        j
    }

    /// Exact second partials of component `k`.
    pub fn hessian(&self, k: usize, x: &[f64]) -> DMatrix<f64> {
        let d = 2 * self.n;
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d {
            let pi = self.comps[k].partial(i);
            for j in i..d {
                let v = pi.partial(j).eval(x);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }

    /// Rotation of R^2 by theta.
    pub fn rotation(theta: f64, box_half: f64) -> Result<Self, BlendError> {
        let (s, c) = theta.sin_cos();
        let q = Poly::var(2, 0);
        let p = Poly::var(2, 1);
        let comps = vec![
            lin_comb(&[(c, &q), (-s, &p)]),
            lin_comb(&[(s, &q), (c, &p)]),
        ];
        PolySymplecticMap::new(1, comps, box_half)
    }

    /// Rotation by theta composed with the cubic polynomial shear
    /// (q, p) |-> (q, p + c2 q^2 + c3 q^3). The linear part at 0 is the
    /// plain rotation; the generating-function remainder is
    /// (c2/3) q^3 + (c3/4) q^4, so a nonzero c2 produces the generic
    /// third-order remainder.
    pub fn cubic_shear_rotation(
        theta: f64,
        c2: f64,
        c3: f64,
        box_half: f64,
    ) -> Result<Self, BlendError> {
        let (s, c) = theta.sin_cos();
        // (q, p) -> (c q - s (p + c2 q^2 + c3 q^3),
        //            s q + c (p + c2 q^2 + c3 q^3))
        let comps = vec![
            Poly::new(
                2,
                vec![
                    (vec![1, 0], c),
                    (vec![0, 1], -s),
                    (vec![2, 0], -s * c2),
                    (vec![3, 0], -s * c3),
                ],
            ),
            Poly::new(
                2,
                vec![
                    (vec![1, 0], s),
                    (vec![0, 1], c),
                    (vec![2, 0], c * c2),
                    (vec![3, 0], c * c3),
                ],
            ),
        ];
        PolySymplecticMap::new(1, comps, box_half)
    }
}

fn lin_comb(parts: &[(f64, &Poly)]) -> Poly {
    let nvars = parts[0].1.nvars();
    let mut terms = Vec::new();
    for (c, p) in parts {
        for (e, k) in p.terms() {
            terms.push((e.clone(), c * k));
        }
    }
    Poly::new(nvars, terms)
}

/// Uniform grid over [-half, half]^dims with `per_axis` points per axis.
fn grid(dims: usize, half: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; dims];
    loop {
        let point: Vec<f64> = idx
            .iter()
            .map(|&i| {
                if per_axis == 1 {
                    0.0
                } else {
                    -half + 2.0 * half * i as f64 / (per_axis - 1) as f64
                }
            })
            .collect();
        out.push(point);
        let mut k = dims;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] + 1 < per_axis {
                idx[k] += 1;
                for v in idx.iter_mut().skip(k + 1) {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre_01(n: usize) -> &'static Vec<(f64, f64)> {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    assert_eq!(n, 32);
    NODES.get_or_init(|| {
        let n = 32usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            // Newton on P_n with the Chebyshev initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (pn, dpn) = legendre(n, x);
                let dx = pn / dpn;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dpn) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dpn * dpn);
            // map [-1, 1] -> [0, 1]
            out.push(((x + 1.0) / 2.0, w / 2.0));
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    })
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Generating function of type S(q, q'): quadratic part in the matrices
/// M1, M2, M3 plus a remainder of order >= 3 represented through the
/// source map, optionally multiplied by a radial cutoff.
#[derive(Debug, Clone)]
pub struct GeneratingFunctionModel {
    n: usize,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub m3: DMatrix<f64>,
    /// Blocks of df(0) in (q, p) order.
    lin: (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>),
    map: Option<PolySymplecticMap>,
    cutoff: Option<CutoffProfile>,
    box_half: f64,
}

impl GeneratingFunctionModel {
    /// Extract the generating function of `f`. The quadratic part comes
    /// exactly from df(0) = [[A, B], [C, D]]: M2 = -B^{-1}, M1 =
    /// B^{-1}A/2, M3 = DB^{-1}/2; the remainder is f-defined.
    pub fn from_map(f: &PolySymplecticMap) -> Result<Self, BlendError> {
        let n = f.n;
        let origin = vec![0.0; 2 * n];
        let j = f.jacobian(&origin);
        let a = j.view((0, 0), (n, n)).into_owned();
        let b = j.view((0, n), (n, n)).into_owned();
        let c = j.view((n, 0), (n, n)).into_owned();
        let d = j.view((n, n), (n, n)).into_owned();
        let det_b = b.determinant();
        if det_b.abs() < 1e-8 {
            return Err(BlendError::DegenerateChart(det_b.abs()));
        }
        let b_inv = b
            .clone()
            .try_inverse()
            .ok_or(BlendError::DegenerateChart(det_b.abs()))?;
        let m2 = -&b_inv;
        let m1 = sym(&(&b_inv * &a)) * 0.5;
        let m3 = sym(&(&d * &b_inv)) * 0.5;
        // the symplectic identity forces M2^T = C - D B^{-1} A
        let lhs = m2.transpose();
        let rhs = &c - &d * &b_inv * &a;
        let defect = (&lhs - &rhs).norm();
        if defect > 1e-8 {
            return Err(BlendError::BadLinearPart(format!(
                "M2 consistency defect {:e}",
                defect
            )));
        }
        Ok(GeneratingFunctionModel {
            n,
            m1,
            m2,
            m3,
            lin: (a, b, c, d),
            map: Some(f.clone()),
            cutoff: None,
            box_half: f.box_half,
        })
    }

    /// A purely quadratic generating function (k = 0) for the linear map
    /// with blocks (A, B, C, D).
    pub fn quadratic(
        n: usize,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        box_half: f64,
    ) -> Result<Self, BlendError> {
        let det_b = b.determinant();
        if det_b.abs() < 1e-8 {
            return Err(BlendError::DegenerateChart(det_b.abs()));
        }
        let b_inv = b.clone().try_inverse().unwrap();
        Ok(GeneratingFunctionModel {
            n,
            m1: sym(&(&b_inv * &a)) * 0.5,
            m2: -&b_inv,
            m3: sym(&(&d * &b_inv)) * 0.5,
            lin: (a, b, c, d),
            map: None,
            cutoff: None,
            box_half,
        })
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn box_half(&self) -> f64 {
        self.box_half
    }

    pub fn cutoff(&self) -> Option<&CutoffProfile> {
        self.cutoff.as_ref()
    }

    /// The linear map encoded by the quadratic part.
    pub fn linear_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let (a, b, c, d) = &self.lin;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        m.view_mut((0, n), (n, n)).copy_from(b);
        m.view_mut((n, 0), (n, n)).copy_from(c);
        m.view_mut((n, n), (n, n)).copy_from(d);
        m
    }

    /// Blend: multiply the remainder by a_delta(|(q, q')|). The 2*delta
    /// ball must sit inside the working box.
    pub fn blend(&self, delta: f64) -> Result<Self, BlendError> {
        if delta <= 0.0 || 2.0 * delta > self.box_half {
            return Err(BlendError::DeltaTooLarge {
                delta,
                box_half: self.box_half,
            });
        }
        let mut out = self.clone();
        out.cutoff = Some(CutoffProfile::new(delta));
        Ok(out)
    }

    /// Solve f_q(q, p1) = q' for p1 (the implicit chart inversion).
    fn p1_solve(&self, q: &[f64], qp: &[f64]) -> Result<DVector<f64>, BlendError> {
        let f = self.map.as_ref().expect("p1_solve requires a source map");
        let n = self.n;
        let (a, b, _, _) = &self.lin;
        let qv = DVector::from_column_slice(q);
        let qpv = DVector::from_column_slice(qp);
        // linear prediction p1 = B^{-1}(q' - A q)
        let mut p1 = b
            .clone()
            .lu()
            .solve(&(&qpv - a * &qv))
            .ok_or(BlendError::DegenerateChart(0.0))?;
        for _ in 0..NEWTON_MAX_ITER {
            let mut x = q.to_vec();
            x.extend(p1.iter());
            let fx = f.eval(&x);
            let res = DVector::from_iterator(n, (0..n).map(|i| fx[i] - qp[i]));
            if res.norm() <= NEWTON_TOL {
                return Ok(p1);
            }
            let j = f.jacobian(&x);
            let jqp = j.view((0, n), (n, n)).into_owned();
            let step = jqp
                .lu()
                .solve(&res)
                .ok_or_else(|| BlendError::NewtonDiverged("singular chart Jacobian".into()))?;
            p1 -= step;
        }
        Err(BlendError::NewtonDiverged(format!(
            "p1 solve at q = {:?}, q' = {:?}",
            q, qp
        )))
    }

    /// Gradient of the full S (quadratic + remainder) at (q, q'),
    /// through the defining identities dS/dq = -p1, dS/dq' = p2.
    fn grad_full(&self, q: &[f64], qp: &[f64]) -> Result<(DVector<f64>, DVector<f64>), BlendError> {
        let f = self.map.as_ref().expect("grad_full requires a source map");
        let n = self.n;
        let p1 = self.p1_solve(q, qp)?;
        let mut x = q.to_vec();
        x.extend(p1.iter());
        let fx = f.eval(&x);
        let p2 = DVector::from_iterator(n, (n..2 * n).map(|i| fx[i]));
        Ok((-p1, p2))
    }

    fn grad_quadratic(&self, q: &[f64], qp: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let qv = DVector::from_column_slice(q);
        let qpv = DVector::from_column_slice(qp);
        let g1 = (&self.m1 + self.m1.transpose()) * &qv + &self.m2 * &qpv;
        let g2 = self.m2.transpose() * &qv + (&self.m3 + self.m3.transpose()) * &qpv;
        (g1, g2)
    }

    /// Remainder value k(q, q') = S - S_quad, with S integrated along the
    /// radial path by 32-node Gauss-Legendre.
    pub fn remainder(&self, q: &[f64], qp: &[f64]) -> Result<f64, BlendError> {
        if self.map.is_none() {
            return Ok(0.0);
        }
        let n = self.n;
        let mut s = 0.0;
        for &(t, w) in gauss_legendre_01(32) {
            let qt: Vec<f64> = q.iter().map(|v| v * t).collect();
            let qpt: Vec<f64> = qp.iter().map(|v| v * t).collect();
            let (gq, gqp) = self.grad_full(&qt, &qpt)?;
            let mut dot = 0.0;
            for i in 0..n {
                dot += gq[i] * q[i] + gqp[i] * qp[i];
            }
            s += w * dot;
        }
        let s_quad = self.quadratic_value(q, qp);
        Ok(s - s_quad)
    }

    fn quadratic_value(&self, q: &[f64], qp: &[f64]) -> f64 {
        let qv = DVector::from_column_slice(q);
        let qpv = DVector::from_column_slice(qp);
        (qv.transpose() * &self.m1 * &qv)[(0, 0)]
            + (qv.transpose() * &self.m2 * &qpv)[(0, 0)]
            + (qpv.transpose() * &self.m3 * &qpv)[(0, 0)]
    }

    /// Gradient of the (possibly blended) generating function.
    pub fn gradient(&self, q: &[f64], qp: &[f64]) -> Result<(DVector<f64>, DVector<f64>), BlendError> {
        let (gq_quad, gqp_quad) = self.grad_quadratic(q, qp);
        if self.map.is_none() {
            return Ok((gq_quad, gqp_quad));
        }
        match &self.cutoff {
            None => self.grad_full(q, qp),
            Some(a) => {
                let n = self.n;
                let r2: f64 = q.iter().chain(qp.iter()).map(|v| v * v).sum();
                let r = r2.sqrt();
                let av = a.value(r);
                let ad = a.deriv(r);
                if av == 0.0 && ad == 0.0 {
                    return Ok((gq_quad, gqp_quad));
                }
                let (gq_full, gqp_full) = self.grad_full(q, qp)?;
                let mut gq = gq_quad.clone() + (gq_full - &gq_quad) * av;
                let mut gqp = gqp_quad.clone() + (gqp_full - &gqp_quad) * av;
                if ad != 0.0 && r > 0.0 {
                    let k = self.remainder(q, qp)?;
                    for i in 0..n {
                        gq[i] += ad * (q[i] / r) * k;
                        gqp[i] += ad * (qp[i] / r) * k;
                    }
                }
                Ok((gq, gqp))
            }
        }
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// The symplectic map defined implicitly by a generating function:
/// given (q, p), solve dS/dq(q, q') = -p for q', then p' = dS/dq'.
#[derive(Debug, Clone)]
pub struct ImplicitMap {
    pub gen: GeneratingFunctionModel,
}

impl ImplicitMap {
    pub fn new(gen: GeneratingFunctionModel) -> Self {
        ImplicitMap { gen }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, BlendError> {
        let n = self.gen.n;
        let q = &x[..n];
        let p = &x[n..];
        // start from the linear prediction q' = A q + B p
        let (a, b, _, _) = &self.gen.lin;
        let qv = DVector::from_column_slice(q);
        let pv = DVector::from_column_slice(p);
        let mut qp = a * &qv + b * &pv;
        let fd = 1e-7;
        for _ in 0..NEWTON_MAX_ITER {
            let qp_slice: Vec<f64> = qp.iter().cloned().collect();
            let (gq, _) = self.gen.gradient(q, &qp_slice)?;
            let res = DVector::from_iterator(n, (0..n).map(|i| gq[i] + p[i]));
            if res.norm() <= 1e-11 {
                let (_, gqp) = self.gen.gradient(q, &qp_slice)?;
                let mut out = qp_slice;
                out.extend(gqp.iter());
                return Ok(out);
            }
            // finite-difference Jacobian d(res)/d(q')
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut plus = qp_slice.clone();
                plus[j] += fd;
                let mut minus = qp_slice.clone();
                minus[j] -= fd;
                let (gp, _) = self.gen.gradient(q, &plus)?;
                let (gm, _) = self.gen.gradient(q, &minus)?;
                for i in 0..n {
                    jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * fd);
                }
            }
            let step = jac
                .lu()
                .solve(&res)
                .ok_or_else(|| BlendError::NewtonDiverged("singular implicit Jacobian".into()))?;
            qp -= step;
        }
        Err(BlendError::NewtonDiverged(format!("eval at {:?}", x)))
    }

    /// Finite-difference Jacobian of the map.
    pub fn jacobian_fd(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>, BlendError> {
        let d = x.len();
        let mut j = DMatrix::zeros(d, d);
        for v in 0..d {
            let mut plus = x.to_vec();
            plus[v] += h;
            let mut minus = x.to_vec();
            minus[v] -= h;
            let fp = self.eval(&plus)?;
            let fm = self.eval(&minus)?;
            for i in 0..d {
                j[(i, v)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(j)
    }
}

/// Build the blended map for `f` at the given delta: equal to df(0) near
/// the origin and to f outside the 2*delta ball.
pub fn blended_map(f: &PolySymplecticMap, delta: f64) -> Result<ImplicitMap, BlendError> {
    let gen = GeneratingFunctionModel::from_map(f)?.blend(delta)?;
    Ok(ImplicitMap::new(gen))
}

/// Closeness report for a blended map.
#[derive(Debug, Clone)]
pub struct BlendReport {
    /// max |g - df(0)| over a grid of the ball of radius delta/2.
    pub inside_defect: f64,
    /// max |g - f| over the box grid outside the 2*delta ball.
    pub outside_defect: f64,
    /// max Jacobian symplectic defect over the box grid including the
    /// blending annulus.
    pub symplectic_defect: f64,
    /// max (|dg - df| + |g - f|) over the box grid.
    pub c1_distance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub fd_step: f64,
    /// Points per axis for 2D box grids (n = 1); 4D grids use at most 9.
    pub per_axis: usize,
    pub inside_per_axis: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            fd_step: 1e-4,
            per_axis: 61,
            inside_per_axis: 7,
        }
    }
}

fn verify_grid(dims: usize, half: f64, opts: &VerifyOptions) -> Vec<Vec<f64>> {
    let per_axis = if dims == 2 { opts.per_axis } else { 9 };
    grid(dims, half, per_axis)
}

/// Annulus-focused sample points for n = 1: circles of radii spanning
/// [delta/2, 2.5*delta].
fn annulus_points(delta: f64, box_half: f64) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for ir in 0..24 {
        let r = delta * (0.5 + 2.0 * ir as f64 / 23.0);
        if r > box_half {
            continue;
        }
        for ia in 0..48 {
            let t = 2.0 * std::f64::consts::PI * ia as f64 / 48.0;
            pts.push(vec![r * t.cos(), r * t.sin()]);
        }
    }
    pts
}

/// Evaluate the closeness of the blended map `g` to `f` and to the
/// linearization df(0).
pub fn verify_blend(
    f: &PolySymplecticMap,
    g: &ImplicitMap,
    delta: f64,
    opts: &VerifyOptions,
) -> Result<BlendReport, BlendError> {
    let dims = 2 * f.n;
    let lin = g.gen.linear_matrix();

    // inside: over the delta/2 ball, g should be the linear map
    let inside_pts: Vec<Vec<f64>> = grid(dims, delta / 2.0, opts.inside_per_axis)
        .into_iter()
        .filter(|x| norm(x) <= delta / 2.0)
        .collect();
    let inside_defect = inside_pts
        .par_iter()
        .map(|x| -> Result<f64, BlendError> {
            let gx = g.eval(x)?;
            let lx = &lin * DVector::from_column_slice(x);
            Ok(diff_norm(&gx, lx.as_slice()))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    // box grid for outside / symplectic / C1
    let mut box_pts = verify_grid(dims, f.box_half * 0.98, opts);
    if dims == 2 {
        box_pts.extend(annulus_points(delta, f.box_half));
    }

    let outside_defect = box_pts
        .par_iter()
        .filter(|x| norm(x) >= 2.0 * delta)
        .map(|x| -> Result<f64, BlendError> {
            let gx = g.eval(x)?;
            let fx = f.eval(x);
            Ok(diff_norm(&gx, &fx))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    let symplectic_defect = box_pts
        .par_iter()
        .map(|x| -> Result<f64, BlendError> {
            let j = g.jacobian_fd(x, opts.fd_step)?;
            Ok(crate::symplectic::symplectic_defect(&j))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    let c1_distance = box_pts
        .par_iter()
        .map(|x| -> Result<f64, BlendError> {
            let gx = g.eval(x)?;
            let fx = f.eval(x);
            let jg = g.jacobian_fd(x, opts.fd_step)?;
            let jf = f.jacobian(x);
            Ok((jg - jf).norm() + diff_norm(&gx, &fx))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;

    Ok(BlendReport {
        inside_defect,
        outside_defect,
        symplectic_defect,
        c1_distance,
    })
}

/// Max over the grid of the Frobenius distance between the second
/// derivatives of g and f (g by second differences, f exactly).
pub fn c2_distance(
    f: &PolySymplecticMap,
    g: &ImplicitMap,
    delta: f64,
    _opts: &VerifyOptions,
) -> Result<f64, BlendError> {
    let dims = 2 * f.n;
    let per_axis = if dims == 2 { 21 } else { 7 };
    let mut pts = grid(dims, f.box_half * 0.9, per_axis);
    if dims == 2 {
        pts.extend(annulus_points(delta, f.box_half));
    }
    let h = 2e-4;
    pts.par_iter()
        .map(|x| -> Result<f64, BlendError> {
            let mut worst: f64 = 0.0;
            for comp in 0..dims {
                let hf = f.hessian(comp, x);
                let hg = hessian_fd(g, comp, x, h)?;
                worst = worst.max((hg - hf).norm());
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

fn hessian_fd(g: &ImplicitMap, comp: usize, x: &[f64], h: f64) -> Result<DMatrix<f64>, BlendError> {
    let d = x.len();
    let mut out = DMatrix::zeros(d, d);
    let center = g.eval(x)?[comp];
    for i in 0..d {
        let mut xp = x.to_vec();
        xp[i] += h;
        let mut xm = x.to_vec();
        xm[i] -= h;
        let fp = g.eval(&xp)?[comp];
        let fm = g.eval(&xm)?[comp];
        out[(i, i)] = (fp - 2.0 * center + fm) / (h * h);
        for j in (i + 1)..d {
            let mut xpp = x.to_vec();
            xpp[i] += h;
            xpp[j] += h;
            let mut xpm = x.to_vec();
            xpm[i] += h;
            xpm[j] -= h;
            let mut xmp = x.to_vec();
            xmp[i] -= h;
            xmp[j] += h;
            let mut xmm = x.to_vec();
            xmm[i] -= h;
            xmm[j] -= h;
            let v = (g.eval(&xpp)?[comp] - g.eval(&xpm)?[comp] - g.eval(&xmp)?[comp]
                + g.eval(&xmm)?[comp])
                / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI_2: f64 = std::f64::consts::FRAC_PI_2;

    #[test]
    fn rotation_generating_function_matches_closed_form() {
        let f = PolySymplecticMap::rotation(PI_2, 1.0).unwrap();
        let gen = GeneratingFunctionModel::from_map(&f).unwrap();
        // theta = pi/2: A = 0, B = -1 => M2 = 1, M1 = M3 = 0
        assert!((gen.m2[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(gen.m1[(0, 0)].abs() < 1e-12);
        assert!(gen.m3[(0, 0)].abs() < 1e-12);
        // remainder vanishes for a linear map
        assert!(gen.remainder(&[0.3], &[0.4]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn identity_map_is_a_degenerate_chart() {
        let q = Poly::var(2, 0);
        let p = Poly::var(2, 1);
        let f = PolySymplecticMap::new(1, vec![q, p], 1.0).unwrap();
        assert!(matches!(
            GeneratingFunctionModel::from_map(&f),
            Err(BlendError::DegenerateChart(_))
        ));
    }

    #[test]
    fn shear_remainder_matches_closed_form() {
        // f = R(pi/2) o shear: S = q q' + (c2/3) q^3 + (c3/4) q^4 exactly
        let (c2, c3) = (0.2, 0.3);
        let f = PolySymplecticMap::cubic_shear_rotation(PI_2, c2, c3, 1.0).unwrap();
        let gen = GeneratingFunctionModel::from_map(&f).unwrap();
        for (q, qp) in [(0.4, 0.2), (-0.5, 0.7), (0.9, -0.3)] {
            let k = gen.remainder(&[q], &[qp]).unwrap();
            let expect = c2 / 3.0 * q.powi(3) + c3 / 4.0 * q.powi(4);
            assert!(
                (k - expect).abs() < 1e-10,
                "k({}, {}) = {} vs {}",
                q,
                qp,
                k,
                expect
            );
        }
    }

    #[test]
    fn round_trip_reproduces_the_map() {
        let f = PolySymplecticMap::cubic_shear_rotation(PI_2, 0.2, 0.3, 1.0).unwrap();
        let gen = GeneratingFunctionModel::from_map(&f).unwrap();
        let g = ImplicitMap::new(gen);
        for x in grid(2, 0.8, 7) {
            let fx = f.eval(&x);
            let gx = g.eval(&x).unwrap();
            assert!(
                diff_norm(&fx, &gx) < 1e-6,
                "round trip failed at {:?}: {:?} vs {:?}",
                x,
                fx,
                gx
            );
        }
    }

    #[test]
    fn quadratic_only_model_gives_the_linear_map() {
        let f = PolySymplecticMap::cubic_shear_rotation(PI_2, 0.2, 0.3, 1.0).unwrap();
        let mut gen = GeneratingFunctionModel::from_map(&f).unwrap();
        gen.map = None; // keep only the quadratic part
        let g = ImplicitMap::new(gen.clone());
        let lin = gen.linear_matrix();
        for x in grid(2, 0.5, 5) {
            let gx = g.eval(&x).unwrap();
            let lx = &lin * DVector::from_column_slice(&x);
            assert!(diff_norm(&gx, lx.as_slice()) < 1e-9);
        }
    }

    #[test]
    fn blend_rejects_large_delta() {
        let f = PolySymplecticMap::rotation(PI_2, 1.0).unwrap();
        let gen = GeneratingFunctionModel::from_map(&f).unwrap();
        assert!(matches!(
            gen.blend(0.6),
            Err(BlendError::DeltaTooLarge { .. })
        ));
        assert!(gen.blend(0.2).is_ok());
    }

    #[test]
    fn blended_map_plateaus() {
        let f = PolySymplecticMap::cubic_shear_rotation(PI_2, 0.2, 0.3, 1.0).unwrap();
        let delta = 0.2;
        let g = blended_map(&f, delta).unwrap();
        let lin = g.gen.linear_matrix();
        // at |x| = delta/2 the map is exactly linear
        let x = vec![0.07, 0.07];
        let gx = g.eval(&x).unwrap();
        let lx = &lin * DVector::from_column_slice(&x);
        assert!(diff_norm(&gx, lx.as_slice()) < 1e-10);
        // at |x| = 3*delta the map is exactly f
        let y = vec![0.45, 0.4];
        let gy = g.eval(&y).unwrap();
        let fy = f.eval(&y);
        assert!(diff_norm(&gy, &fy) < 1e-10);
    }

    #[test]
    fn linear_map_blends_to_itself() {
        let f = PolySymplecticMap::rotation(1.1, 1.0).unwrap();
        let g = blended_map(&f, 0.2).unwrap();
        for x in grid(2, 0.9, 7) {
            let gx = g.eval(&x).unwrap();
            let fx = f.eval(&x);
            assert!(diff_norm(&gx, &fx) < 1e-10);
        }
    }
}
