//! Calabi invariants of compactly supported Hamiltonians on a box in
//! R^{2n}, Hamiltonian flows, composition and conjugation, and the
//! orbit-copy construction.
//!
//! The Calabi invariant is the plain double integral of the generating
//! function over time and the box (Darboux coordinates, so the volume
//! form is Lebesgue). Every value carries a self-reported quadrature
//! error from a Richardson comparison of two grid resolutions; the
//! identity tests (homomorphism, conjugation invariance, orbit-copy
//! multiplicativity) are asserted against those bounds.
//!
//! Flows use the implicit midpoint rule, which keeps the time-1 maps
//! volume preserving to solver tolerance. Inverse flows (needed for
//! composition) integrate the time-reversed Hamiltonian -F(t - s, x)
//! forward, which is the same trajectory walked backwards.

use crate::blend::{smoothstep, smoothstep_deriv, smoothstep_deriv2};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CalabiError {
    #[error("box half-width must be positive, got {0}")]
    BadBox(f64),
    #[error("only n = 1 or n = 2 are supported, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("support ball (center offset {offset:.4}, radius {radius:.4}) leaves the collar of the box (half-width {half:.4})")]
    SupportOutsideBox {
        offset: f64,
        radius: f64,
        half: f64,
    },
    #[error("grid samples do not vanish on the boundary collar")]
    CollarNotZero,
    #[error("grid data has {found} samples, expected {expected}")]
    GridSize { found: usize, expected: usize },
    #[error("fixed-point iteration for the implicit midpoint step diverged at t = {0}")]
    StepDivergence(f64),
    #[error("total volume must be positive, got {0}")]
    NonPositiveVolume(f64),
    #[error("placement maps produce overlapping support balls ({0} and {1})")]
    OverlappingPlacements(usize, usize),
    #[error("map is not symplectic: defect {0:e}")]
    NotSymplectic(f64),
    #[error("second derivatives are not available for composed Hamiltonians")]
    HessianUnavailable,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("time {0} outside [0, 1]")]
    TimeOutOfRange(f64),
}

/// The working box [-half, half]^{2n}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2n {
    pub n: usize,
    pub half: f64,
}

impl Box2n {
    pub fn new(n: usize, half: f64) -> Result<Self, CalabiError> {
        if n == 0 || n > 2 {
            return Err(CalabiError::UnsupportedDimension(n));
        }
        if half <= 0.0 {
            return Err(CalabiError::BadBox(half));
        }
        Ok(Box2n { n, half })
    }

    pub fn dims(&self) -> usize {
        2 * self.n
    }

    pub fn volume(&self) -> f64 {
        (2.0 * self.half).powi(self.dims() as i32)
    }

    /// Support must keep this margin from the boundary (5% collar).
    fn collar_limit(&self) -> f64 {
        0.95 * self.half
    }
}

/// Time profile multiplying an autonomous spatial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Const,
    /// 6 t (1 - t): integrates to 1 over [0, 1].
    Parabolic,
}

impl TimeProfile {
    fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Const => 1.0,
            TimeProfile::Parabolic => 6.0 * t * (1.0 - t),
        }
    }
}

/// An affine symplectic map x -> M x + c.
#[derive(Debug, Clone)]
pub struct AffineSymplectic {
    pub m: DMatrix<f64>,
    pub c: DVector<f64>,
    m_inv: DMatrix<f64>,
}

impl AffineSymplectic {
    pub fn new(m: DMatrix<f64>, c: DVector<f64>) -> Result<Self, CalabiError> {
        let defect = crate::symplectic::symplectic_defect(&m);
        if defect > 1e-10 {
            return Err(CalabiError::NotSymplectic(defect));
        }
        if m.nrows() != c.len() {
            return Err(CalabiError::Dimension(format!(
                "matrix {}x{} with offset of length {}",
                m.nrows(),
                m.ncols(),
                c.len()
            )));
        }
        let m_inv = m
            .clone()
            .try_inverse()
            .ok_or(CalabiError::NotSymplectic(f64::INFINITY))?;
        Ok(AffineSymplectic { m, c, m_inv })
    }

    pub fn identity(n: usize) -> Self {
        let d = 2 * n;
        AffineSymplectic {
            m: DMatrix::identity(d, d),
            c: DVector::zeros(d),
            m_inv: DMatrix::identity(d, d),
        }
    }

    pub fn translation(c: DVector<f64>) -> Self {
        let d = c.len();
        AffineSymplectic {
            m: DMatrix::identity(d, d),
            c,
            m_inv: DMatrix::identity(d, d),
        }
    }

    pub fn linear(m: DMatrix<f64>) -> Result<Self, CalabiError> {
        let d = m.nrows();
        Self::new(m, DVector::zeros(d))
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.m * DVector::from_column_slice(x) + &self.c;
        v.iter().cloned().collect()
    }

    pub fn apply_inv(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.m_inv * (DVector::from_column_slice(x) - &self.c);
        v.iter().cloned().collect()
    }

    pub fn operator_norm(&self) -> f64 {
        self.m.clone().svd(false, false).singular_values.max()
    }
}

/// Grid-sampled Hamiltonian: `nt` time slices of row-major samples on a
/// uniform spatial grid, interpolated multilinearly in space and
/// linearly in time.
#[derive(Debug, Clone)]
pub struct GridData {
    pub nt: usize,
    pub per_axis: usize,
    samples: Vec<f64>,
}

impl GridData {
    fn slice_len(&self, dims: usize) -> usize {
        self.per_axis.pow(dims as u32)
    }

    fn sample(&self, dims: usize, slice: usize, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for &i in idx {
            flat = flat * self.per_axis + i;
        }
        self.samples[slice * self.slice_len(dims) + flat]
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// amplitude * exp(1 - 1/(1 - s)) with s = |x - c|^2 / r^2.
    Bump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
        time: TimeProfile,
    },
    /// g(s) = (base + slope * s) * (1 - sigma((s - s1)/(s2 - s1))) with
    /// s = |x - c|^2: a radial rotator, exactly linear-in-s inside s1.
    Rotator {
        center: Vec<f64>,
        base: f64,
        slope: f64,
        s1: f64,
        s2: f64,
        time: TimeProfile,
    },
    Grid(GridData),
    Sum(Vec<Arc<CompactHamiltonian>>),
    Scaled {
        inner: Arc<CompactHamiltonian>,
        factor: f64,
    },
    Conjugated {
        inner: Arc<CompactHamiltonian>,
        map: AffineSymplectic,
    },
    /// (F # G)(t, x) = F(t, x) + G(t, (phi_F^t)^{-1} x): generates the
    /// composed flow.
    Composed {
        f: Arc<CompactHamiltonian>,
        g: Arc<CompactHamiltonian>,
        flow_steps: usize,
    },
}

/// A time-dependent compactly supported Hamiltonian on a box.
#[derive(Debug, Clone)]
pub struct CompactHamiltonian {
    kind: Kind,
    box_: Box2n,
    support_center: Vec<f64>,
    support_radius: f64,
}

impl CompactHamiltonian {
    pub fn bump(
        box_: Box2n,
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
        time: TimeProfile,
    ) -> Result<Self, CalabiError> {
        check_support(&box_, &center, radius)?;
        Ok(CompactHamiltonian {
            kind: Kind::Bump {
                center: center.clone(),
                radius,
                amplitude,
                time,
            },
            box_,
            support_center: center,
            support_radius: radius,
        })
    }

    pub fn rotator(
        box_: Box2n,
        center: Vec<f64>,
        base: f64,
        slope: f64,
        s1: f64,
        s2: f64,
        time: TimeProfile,
    ) -> Result<Self, CalabiError> {
        if s1 <= 0.0 || s2 <= s1 {
            return Err(CalabiError::Dimension(format!(
                "rotator needs 0 < s1 < s2, got s1 = {}, s2 = {}",
                s1, s2
            )));
        }
        let radius = s2.sqrt();
        check_support(&box_, &center, radius)?;
        Ok(CompactHamiltonian {
            kind: Kind::Rotator {
                center: center.clone(),
                base,
                slope,
                s1,
                s2,
                time,
            },
            box_,
            support_center: center,
            support_radius: radius,
        })
    }

    /// Grid samples: `nt` time slices (nt >= 1) on a uniform spatial
    /// grid over the whole box; the collar cells must be zero.
    pub fn from_grid(
        box_: Box2n,
        nt: usize,
        per_axis: usize,
        samples: Vec<f64>,
    ) -> Result<Self, CalabiError> {
        let dims = box_.dims();
        let expected = nt * per_axis.pow(dims as u32);
        if nt == 0 || per_axis < 4 || samples.len() != expected {
            return Err(CalabiError::GridSize {
                found: samples.len(),
                expected,
            });
        }
        let data = GridData {
            nt,
            per_axis,
            samples,
        };
        // collar check: any sample with a coordinate beyond the collar
        // must vanish
        let h = 2.0 * box_.half / (per_axis - 1) as f64;
        let limit = box_.collar_limit();
        let mut idx = vec![0usize; dims];
        loop {
            let out_of_collar = idx
                .iter()
                .any(|&i| (-box_.half + i as f64 * h).abs() > limit);
            if out_of_collar {
                for slice in 0..nt {
                    if data.sample(dims, slice, &idx).abs() > 0.0 {
                        return Err(CalabiError::CollarNotZero);
                    }
                }
            }
            if !advance(&mut idx, per_axis) {
                break;
            }
        }
        Ok(CompactHamiltonian {
            kind: Kind::Grid(data),
            support_center: vec![0.0; dims],
            support_radius: limit * (dims as f64).sqrt(),
            box_,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CompactHamiltonian {
            kind: Kind::Scaled {
                inner: Arc::new(self.clone()),
                factor,
            },
            box_: self.box_,
            support_center: self.support_center.clone(),
            support_radius: self.support_radius,
        }
    }

    pub fn box_(&self) -> Box2n {
        self.box_
    }

    pub fn support_ball(&self) -> (&[f64], f64) {
        (&self.support_center, self.support_radius)
    }

    /// F(t, x).
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Bump {
                center,
                radius,
                amplitude,
                time,
            } => {
                let s = dist_sq(x, center) / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    amplitude * time.value(t) * (1.0 - 1.0 / (1.0 - s)).exp()
                }
            }
            Kind::Rotator {
                center,
                base,
                slope,
                s1,
                s2,
                time,
            } => {
                let s = dist_sq(x, center);
                if s >= *s2 {
                    0.0
                } else {
                    let m = 1.0 - smoothstep((s - s1) / (s2 - s1));
                    time.value(t) * (base + slope * s) * m
                }
            }
            Kind::Grid(data) => grid_value(data, &self.box_, t, x),
            Kind::Sum(parts) => parts.iter().map(|p| p.value(t, x)).sum(),
            Kind::Scaled { inner, factor } => factor * inner.value(t, x),
            Kind::Conjugated { inner, map } => inner.value(t, &map.apply_inv(x)),
            Kind::Composed { f, g, flow_steps } => {
                let y = inverse_flow_point(f, t, x, *flow_steps);
                f.value(t, x) + g.value(t, &y)
            }
        }
    }

    /// Spatial gradient of F at (t, x).
    pub fn grad(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Bump {
                center,
                radius,
                amplitude,
                time,
            } => {
                let r2 = radius * radius;
                let s = dist_sq(x, center) / r2;
                if s >= 1.0 {
                    return vec![0.0; x.len()];
                }
                let w = (1.0 - 1.0 / (1.0 - s)).exp();
                let dw = -w / ((1.0 - s) * (1.0 - s));
                let k = amplitude * time.value(t) * dw * 2.0 / r2;
                x.iter()
                    .zip(center)
                    .map(|(xi, ci)| k * (xi - ci))
                    .collect()
            }
            Kind::Rotator {
                center,
                base,
                slope,
                s1,
                s2,
                time,
            } => {
                let s = dist_sq(x, center);
                if s >= *s2 {
                    return vec![0.0; x.len()];
                }
                let width = s2 - s1;
                let u = (s - s1) / width;
                let m = 1.0 - smoothstep(u);
                let dm = -smoothstep_deriv(u) / width;
                let gprime = slope * m + (base + slope * s) * dm;
                let k = time.value(t) * gprime * 2.0;
                x.iter()
                    .zip(center)
                    .map(|(xi, ci)| k * (xi - ci))
                    .collect()
            }
            Kind::Grid(_) => fd_grad(self, t, x, 1e-5),
            Kind::Sum(parts) => {
                let mut acc = vec![0.0; x.len()];
                for p in parts {
                    for (a, g) in acc.iter_mut().zip(p.grad(t, x)) {
                        *a += g;
                    }
                }
                acc
            }
            Kind::Scaled { inner, factor } => {
                inner.grad(t, x).into_iter().map(|g| g * factor).collect()
            }
            Kind::Conjugated { inner, map } => {
                let gi = inner.grad(t, &map.apply_inv(x));
                let v = map.m_inv.transpose() * DVector::from_column_slice(&gi);
                v.iter().cloned().collect()
            }
            Kind::Composed { .. } => fd_grad(self, t, x, 1e-5),
        }
    }

    /// Spatial Hessian; unavailable for composed Hamiltonians.
    pub fn hessian(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>, CalabiError> {
        let d = x.len();
        match &self.kind {
            Kind::Bump {
                center,
                radius,
                amplitude,
                time,
            } => {
                let r2 = radius * radius;
                let s = dist_sq(x, center) / r2;
                if s >= 1.0 {
                    return Ok(DMatrix::zeros(d, d));
                }
                let w = (1.0 - 1.0 / (1.0 - s)).exp();
                let om = 1.0 - s;
                let dw = -w / (om * om);
                let ddw = w / (om * om * om * om) - 2.0 * w / (om * om * om);
                let a = amplitude * time.value(t);
                let mut h = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        let xi = x[i] - center[i];
                        let xj = x[j] - center[j];
                        h[(i, j)] = a * ddw * (2.0 / r2) * (2.0 / r2) * xi * xj;
                        if i == j {
                            h[(i, j)] += a * dw * 2.0 / r2;
                        }
                    }
                }
                Ok(h)
            }
            Kind::Rotator {
                center,
                base,
                slope,
                s1,
                s2,
                time,
            } => {
                let s = dist_sq(x, center);
                if s >= *s2 {
                    return Ok(DMatrix::zeros(d, d));
                }
                let width = s2 - s1;
                let u = (s - s1) / width;
                let m = 1.0 - smoothstep(u);
                let dm = -smoothstep_deriv(u) / width;
                let ddm = -smoothstep_deriv2(u) / (width * width);
                let g1 = slope * m + (base + slope * s) * dm;
                let g2 = 2.0 * slope * dm + (base + slope * s) * ddm;
                let a = time.value(t);
                let mut h = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        let xi = x[i] - center[i];
                        let xj = x[j] - center[j];
                        h[(i, j)] = a * 4.0 * g2 * xi * xj;
                        if i == j {
                            h[(i, j)] += a * 2.0 * g1;
                        }
                    }
                }
                Ok(h)
            }
            Kind::Grid(_) => {
                let h = 1e-4;
                Ok(fd_hessian(self, t, x, h))
            }
            Kind::Sum(parts) => {
                let mut acc = DMatrix::zeros(d, d);
                for p in parts {
                    acc += p.hessian(t, x)?;
                }
                Ok(acc)
            }
            Kind::Scaled { inner, factor } => Ok(inner.hessian(t, x)? * *factor),
            Kind::Conjugated { inner, map } => {
                let hi = inner.hessian(t, &map.apply_inv(x))?;
                Ok(map.m_inv.transpose() * hi * &map.m_inv)
            }
            Kind::Composed { .. } => Err(CalabiError::HessianUnavailable),
        }
    }

    /// Hamiltonian vector field: X_F = J grad F.
    pub fn sgrad(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let g = self.grad(t, x);
        let n = x.len() / 2;
        let mut out = vec![0.0; x.len()];
        for i in 0..n {
            out[i] = g[n + i];
            out[n + i] = -g[i];
        }
        out
    }
}

fn check_support(box_: &Box2n, center: &[f64], radius: f64) -> Result<(), CalabiError> {
    if center.len() != box_.dims() {
        return Err(CalabiError::Dimension(format!(
            "center has {} coordinates, box has {}",
            center.len(),
            box_.dims()
        )));
    }
    let offset = center.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if offset + radius > box_.collar_limit() {
        return Err(CalabiError::SupportOutsideBox {
            offset,
            radius,
            half: box_.half,
        });
    }
    Ok(())
}

fn dist_sq(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn advance(idx: &mut [usize], per_axis: usize) -> bool {
    let mut k = idx.len();
    loop {
        if k == 0 {
            return false;
        }
        k -= 1;
        if idx[k] + 1 < per_axis {
            idx[k] += 1;
            for v in idx.iter_mut().skip(k + 1) {
                *v = 0;
            }
            return true;
        }
    }
}

fn fd_grad(f: &CompactHamiltonian, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        xp[i] += h;
        let mut xm = x.to_vec();
        xm[i] -= h;
        out[i] = (f.value(t, &xp) - f.value(t, &xm)) / (2.0 * h);
    }
    out
}

fn fd_hessian(f: &CompactHamiltonian, t: f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let mut out = DMatrix::zeros(d, d);
    let center = f.value(t, x);
    for i in 0..d {
        let mut xp = x.to_vec();
        xp[i] += h;
        let mut xm = x.to_vec();
        xm[i] -= h;
        out[(i, i)] = (f.value(t, &xp) - 2.0 * center + f.value(t, &xm)) / (h * h);
        for j in (i + 1)..d {
            let mut a = x.to_vec();
            a[i] += h;
            a[j] += h;
            let mut b = x.to_vec();
            b[i] += h;
            b[j] -= h;
            let mut c = x.to_vec();
            c[i] -= h;
            c[j] += h;
            let mut e = x.to_vec();
            e[i] -= h;
            e[j] -= h;
            let v = (f.value(t, &a) - f.value(t, &b) - f.value(t, &c) + f.value(t, &e))
                / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Multilinear interpolation in space, linear in time.
fn grid_value(data: &GridData, box_: &Box2n, t: f64, x: &[f64]) -> f64 {
    let dims = box_.dims();
    // time slice weights
    let (s0, s1, wt) = if data.nt == 1 {
        (0, 0, 0.0)
    } else {
        let ft = t.clamp(0.0, 1.0) * (data.nt - 1) as f64;
        let i = (ft.floor() as usize).min(data.nt - 2);
        (i, i + 1, ft - i as f64)
    };
    let h = 2.0 * box_.half / (data.per_axis - 1) as f64;
    // locate the cell
    let mut base = vec![0usize; dims];
    let mut frac = vec![0.0f64; dims];
    for (k, &xi) in x.iter().enumerate() {
        let u = (xi + box_.half) / h;
        if u < 0.0 || u > (data.per_axis - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(data.per_axis - 2);
        base[k] = i;
        frac[k] = u - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dims) {
        let mut w = 1.0;
        let mut idx = vec![0usize; dims];
        for k in 0..dims {
            if corner & (1 << k) != 0 {
                idx[k] = base[k] + 1;
                w *= frac[k];
            } else {
                idx[k] = base[k];
                w *= 1.0 - frac[k];
            }
        }
        let v0 = data.sample(dims, s0, &idx);
        let v = if data.nt == 1 {
            v0
        } else {
            (1.0 - wt) * v0 + wt * data.sample(dims, s1, &idx)
        };
        acc += w * v;
    }
    acc
}

/// Flow integration options.
#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Implicit midpoint steps per unit time.
    pub steps_per_unit: usize,
    pub fp_tol: f64,
    pub max_fp_iter: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            steps_per_unit: 1000,
            fp_tol: 1e-13,
            max_fp_iter: 50,
        }
    }
}

fn midpoint_step(
    f: &CompactHamiltonian,
    t: f64,
    h: f64,
    x: &[f64],
    opts: &FlowOptions,
) -> Result<Vec<f64>, CalabiError> {
    let t_mid = t + h / 2.0;
    // fixed point z = x + (h/2) X(t_mid, z)
    let mut z: Vec<f64> = {
        let v = f.sgrad(t_mid, x);
        x.iter().zip(&v).map(|(xi, vi)| xi + 0.5 * h * vi).collect()
    };
    let mut converged = false;
    for _ in 0..opts.max_fp_iter {
        let v = f.sgrad(t_mid, &z);
        let mut delta: f64 = 0.0;
        let mut z_new = Vec::with_capacity(x.len());
        for (xi, vi) in x.iter().zip(&v) {
            z_new.push(xi + 0.5 * h * vi);
        }
        for (a, b) in z.iter().zip(&z_new) {
            delta = delta.max((a - b).abs());
        }
        z = z_new;
        if delta <= opts.fp_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(CalabiError::StepDivergence(t));
    }
    Ok(x.iter().zip(&z).map(|(xi, zi)| 2.0 * zi - xi).collect())
}

/// Flow points along X_F from time 0 to time t (t in [0, 1]).
pub fn flow(
    f: &CompactHamiltonian,
    t: f64,
    points: &[Vec<f64>],
    opts: &FlowOptions,
) -> Result<Vec<Vec<f64>>, CalabiError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(CalabiError::TimeOutOfRange(t));
    }
    points
        .par_iter()
        .map(|p| flow_one(f, t, p, opts))
        .collect()
}

fn flow_one(
    f: &CompactHamiltonian,
    t: f64,
    point: &[f64],
    opts: &FlowOptions,
) -> Result<Vec<f64>, CalabiError> {
    if t == 0.0 {
        return Ok(point.to_vec());
    }
    let steps = ((opts.steps_per_unit as f64) * t).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = point.to_vec();
    for k in 0..steps {
        x = midpoint_step(f, k as f64 * h, h, &x, opts)?;
    }
    Ok(x)
}

/// Flow with the tangent map, integrated by the variational midpoint
/// rule: each step contributes the Cayley factor (I - h/2 A)^{-1}(I +
/// h/2 A) with A = J Hess F at the midpoint, which is exactly
/// symplectic, so the returned Jacobians have determinant 1 up to
/// roundoff. Requires Hessians (not available for composed inputs).
pub fn flow_with_jacobian(
    f: &CompactHamiltonian,
    t: f64,
    points: &[Vec<f64>],
    opts: &FlowOptions,
) -> Result<Vec<(Vec<f64>, DMatrix<f64>)>, CalabiError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(CalabiError::TimeOutOfRange(t));
    }
    points
        .par_iter()
        .map(|p| -> Result<(Vec<f64>, DMatrix<f64>), CalabiError> {
            let d = p.len();
            let n = d / 2;
            let j = crate::symplectic::standard_j(n);
            let mut jac = DMatrix::<f64>::identity(d, d);
            if t == 0.0 {
                return Ok((p.to_vec(), jac));
            }
            let steps = ((opts.steps_per_unit as f64) * t).ceil().max(1.0) as usize;
            let h = t / steps as f64;
            let mut x = p.to_vec();
            for k in 0..steps {
                let t_k = k as f64 * h;
                let next = midpoint_step(f, t_k, h, &x, opts)?;
                let mid: Vec<f64> = x.iter().zip(&next).map(|(a, b)| 0.5 * (a + b)).collect();
                let hess = f.hessian(t_k + h / 2.0, &mid)?;
                let a = &j * hess;
                let id = DMatrix::<f64>::identity(d, d);
                let left = &id - &a * (h / 2.0);
                let right = &id + &a * (h / 2.0);
                let step_jac = left
                    .lu()
                    .solve(&right)
                    .ok_or(CalabiError::StepDivergence(t_k))?;
                jac = step_jac * jac;
                x = next;
            }
            Ok((x, jac))
        })
        .collect()
}

/// The time-t map of the flow, as a value.
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub ham: Arc<CompactHamiltonian>,
    pub t: f64,
    pub opts: FlowOptions,
}

impl FlowMap {
    pub fn apply(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CalabiError> {
        flow(&self.ham, self.t, points, &self.opts)
    }
}

/// (phi_F^t)^{-1}(x): integrate the time-reversed Hamiltonian
/// -F(t - s, .) from 0 to t starting at x, with the implicit midpoint
/// rule (so the map stays volume preserving to solver tolerance).
fn inverse_flow_point(f: &CompactHamiltonian, t: f64, x: &[f64], steps_per_unit: usize) -> Vec<f64> {
    if t == 0.0 {
        return x.to_vec();
    }
    let steps = ((steps_per_unit as f64) * t).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let opts = FlowOptions {
        steps_per_unit,
        fp_tol: 1e-13,
        max_fp_iter: 50,
    };
    let mut y = x.to_vec();
    for k in 0..steps {
        let s_k = k as f64 * h;
        // reversed field at (s, y): -X_F(t - s, y); reuse the midpoint
        // step by flowing the reversed Hamiltonian
        let t_mid = t - (s_k + h / 2.0);
        let mut z: Vec<f64> = {
            let v = f.sgrad(t_mid, &y);
            y.iter().zip(&v).map(|(yi, vi)| yi - 0.5 * h * vi).collect()
        };
        for _ in 0..opts.max_fp_iter {
            let v = f.sgrad(t_mid, &z);
            let mut delta: f64 = 0.0;
            let z_new: Vec<f64> = y.iter().zip(&v).map(|(yi, vi)| yi - 0.5 * h * vi).collect();
            for (a, b) in z.iter().zip(&z_new) {
                delta = delta.max((a - b).abs());
            }
            z = z_new;
            if delta <= opts.fp_tol {
                break;
            }
        }
        y = y.iter().zip(&z).map(|(yi, zi)| 2.0 * zi - yi).collect();
    }
    y
}

/// Quadrature resolution for Calabi integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Simpson intervals in time (even, at least 2).
    pub time_intervals: usize,
    /// Simpson nodes per spatial axis (odd, at least 5).
    pub space_per_axis: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            time_intervals: 64,
            space_per_axis: 129,
        }
    }
}

/// A Calabi value with its self-reported quadrature error (Richardson
/// comparison against the half-resolution grid).
#[derive(Debug, Clone, Copy)]
pub struct CalabiValue {
    pub value: f64,
    pub quad_error: f64,
}

fn simpson_weights(nodes: usize) -> Vec<f64> {
    // nodes odd: composite Simpson weights h/3 * (1 4 2 4 ... 4 1)
    let mut w = vec![0.0; nodes];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == nodes - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
    }
    w
}

fn calabi_at(f: &CompactHamiltonian, time_intervals: usize, space_per_axis: usize) -> f64 {
    let box_ = f.box_;
    let dims = box_.dims();
    let nt = time_intervals + 1;
    let ht = 1.0 / time_intervals as f64;
    let tw = simpson_weights(nt);
    let hs = 2.0 * box_.half / (space_per_axis - 1) as f64;
    let sw = simpson_weights(space_per_axis);

    let spatial_scale = (hs / 3.0).powi(dims as i32);
    let time_scale = ht / 3.0;

    let mut total = 0.0;
    for it in 0..nt {
        let t = it as f64 * ht;
        // iterate the tensor grid in parallel over the first axis
        let slice_sum: f64 = (0..space_per_axis)
            .into_par_iter()
            .map(|i0| {
                let x0 = -box_.half + i0 as f64 * hs;
                let mut idx = vec![0usize; dims - 1];
                let mut acc = 0.0;
                loop {
                    let mut x = Vec::with_capacity(dims);
                    x.push(x0);
                    let mut w = sw[i0];
                    for (k, &i) in idx.iter().enumerate() {
                        let _ = k;
                        x.push(-box_.half + i as f64 * hs);
                        w *= sw[i];
                    }
                    acc += w * f.value(t, &x);
                    if dims == 1 || !advance(&mut idx, space_per_axis) {
                        break;
                    }
                }
                acc
            })
            .sum();
        total += tw[it] * time_scale * slice_sum * spatial_scale;
    }
    total
}

/// Cal(F) = int_0^1 int_box F dt dx by composite Simpson in time and
/// space, with the error estimated by comparison against the
/// half-resolution grid.
pub fn calabi(f: &CompactHamiltonian, opts: &QuadratureOptions) -> Result<CalabiValue, CalabiError> {
    let time_intervals = opts.time_intervals.max(2).next_multiple_of(2);
    let mut space = opts.space_per_axis.max(5);
    if space % 2 == 0 {
        space += 1;
    }
    let fine = calabi_at(f, time_intervals, space);
    let coarse_space = (space - 1) / 2 + 1;
    let coarse_space = if coarse_space % 2 == 0 {
        coarse_space + 1
    } else {
        coarse_space
    };
    let coarse = calabi_at(f, time_intervals / 2, coarse_space);
    Ok(CalabiValue {
        value: fine,
        quad_error: (fine - coarse).abs().max(1e-14),
    })
}

/// (F # G)_t = F_t + G_t o (phi_F^t)^{-1}: generates phi_F^t o phi_G^t.
pub fn compose_hamiltonians(
    f: &CompactHamiltonian,
    g: &CompactHamiltonian,
    flow_steps: usize,
) -> Result<CompactHamiltonian, CalabiError> {
    if f.box_ != g.box_ {
        return Err(CalabiError::Dimension(
            "composed Hamiltonians must share the working box".into(),
        ));
    }
    // supp(F # G) is contained in supp F union phi_F(supp G), and the
    // flow of F fixes the complement of supp F, so the merged ball of
    // the two supports bounds it
    let (cf, rf) = f.support_ball();
    let (cg, rg) = g.support_ball();
    let (center, radius) = merge_balls(cf, rf, cg, rg);
    check_support(&f.box_, &center, radius)?;
    Ok(CompactHamiltonian {
        kind: Kind::Composed {
            f: Arc::new(f.clone()),
            g: Arc::new(g.clone()),
            flow_steps,
        },
        box_: f.box_,
        support_center: center,
        support_radius: radius,
    })
}

fn merge_balls(c1: &[f64], r1: f64, c2: &[f64], r2: f64) -> (Vec<f64>, f64) {
    let d = dist_sq(c1, c2).sqrt();
    if d + r2 <= r1 {
        return (c1.to_vec(), r1);
    }
    if d + r1 <= r2 {
        return (c2.to_vec(), r2);
    }
    let r = (d + r1 + r2) / 2.0;
    let s = if d > 0.0 { (r - r1) / d } else { 0.0 };
    let center: Vec<f64> = c1
        .iter()
        .zip(c2)
        .map(|(a, b)| a + s * (b - a))
        .collect();
    (center, r)
}

/// F o psi^{-1}: generates psi o phi_F^t o psi^{-1}; the Calabi
/// invariant is unchanged (volume-preserving change of variables).
pub fn conjugate_hamiltonian(
    f: &CompactHamiltonian,
    psi: &AffineSymplectic,
) -> Result<CompactHamiltonian, CalabiError> {
    let (c, r) = f.support_ball();
    let center = psi.apply(c);
    let radius = r * psi.operator_norm();
    check_support(&f.box_, &center, radius)?;
    Ok(CompactHamiltonian {
        kind: Kind::Conjugated {
            inner: Arc::new(f.clone()),
            map: psi.clone(),
        },
        box_: f.box_,
        support_center: center,
        support_radius: radius,
    })
}

/// Placement maps for the orbit-copy construction.
#[derive(Debug, Clone)]
pub struct OrbitCopyConfig {
    pub placements: Vec<AffineSymplectic>,
}

impl OrbitCopyConfig {
    /// k translates spaced along the q_1 axis: j * spacing for j = 0..k.
    pub fn translations(n: usize, k: usize, spacing: f64) -> Self {
        let d = 2 * n;
        let placements = (0..k)
            .map(|j| {
                let mut c = DVector::zeros(d);
                c[0] = j as f64 * spacing;
                AffineSymplectic::translation(c)
            })
            .collect();
        OrbitCopyConfig { placements }
    }
}

/// Sum of k conjugated copies of F under the placement maps; the copies
/// must have pairwise disjoint support balls. Cal of the result is k
/// times Cal(F).
pub fn orbit_copy(
    f: &CompactHamiltonian,
    cfg: &OrbitCopyConfig,
) -> Result<CompactHamiltonian, CalabiError> {
    let (c, r) = f.support_ball();
    let mut balls: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut parts = Vec::new();
    for (j, g) in cfg.placements.iter().enumerate() {
        let center = g.apply(c);
        let radius = r * g.operator_norm();
        for (i, (ci, ri)) in balls.iter().enumerate() {
            if dist_sq(&center, ci).sqrt() <= radius + ri {
                return Err(CalabiError::OverlappingPlacements(i, j));
            }
        }
        balls.push((center, radius));
        parts.push(Arc::new(conjugate_hamiltonian(f, g)?));
    }
    // merged support
    let mut center = balls[0].0.clone();
    let mut radius = balls[0].1;
    for (c2, r2) in balls.iter().skip(1) {
        let (nc, nr) = merge_balls(&center, radius, c2, *r2);
        center = nc;
        radius = nr;
    }
    check_support(&f.box_, &center, radius)?;
    Ok(CompactHamiltonian {
        kind: Kind::Sum(parts),
        box_: f.box_,
        support_center: center,
        support_radius: radius,
    })
}

/// sigma on a displaceable support: -Cal(F)/V.
pub fn sigma_displaceable(
    f: &CompactHamiltonian,
    total_volume: f64,
    opts: &QuadratureOptions,
) -> Result<CalabiValue, CalabiError> {
    if total_volume <= 0.0 {
        return Err(CalabiError::NonPositiveVolume(total_volume));
    }
    let cal = calabi(f, opts)?;
    Ok(CalabiValue {
        value: -cal.value / total_volume,
        quad_error: cal.quad_error / total_volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Box2n {
        Box2n::new(1, 1.0).unwrap()
    }

    fn small_bump() -> CompactHamiltonian {
        CompactHamiltonian::bump(unit_box(), vec![0.0, 0.0], 0.5, 1.0, TimeProfile::Const)
            .unwrap()
    }

    #[test]
    fn support_collar_is_enforced() {
        let err = CompactHamiltonian::bump(
            unit_box(),
            vec![0.6, 0.0],
            0.5,
            1.0,
            TimeProfile::Const,
        )
        .unwrap_err();
        assert!(matches!(err, CalabiError::SupportOutsideBox { .. }));
    }

    #[test]
    fn bump_gradient_matches_finite_differences() {
        let f = small_bump();
        for x in [[0.1, 0.2], [0.3, -0.1], [-0.25, 0.2]] {
            let g = f.grad(0.0, &x);
            let fd = fd_grad(&f, 0.0, &x, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn rotator_hessian_matches_finite_differences() {
        let f = CompactHamiltonian::rotator(
            unit_box(),
            vec![0.0, 0.0],
            0.8,
            -1.1,
            0.09,
            0.36,
            TimeProfile::Const,
        )
        .unwrap();
        for x in [[0.1, 0.05], [0.35, 0.2], [0.45, -0.3]] {
            let h = f.hessian(0.0, &x).unwrap();
            let fd = fd_hessian(&f, 0.0, &x, 1e-4);
            assert!((h - fd).norm() < 1e-3);
        }
    }

    #[test]
    fn zero_hamiltonian_flows_to_identity() {
        let f = small_bump().scaled(0.0);
        let pts = vec![vec![0.3, 0.1], vec![-0.2, 0.4]];
        let out = flow(&f, 1.0, &pts, &FlowOptions::default()).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn calabi_of_scaled_is_scaled() {
        let f = small_bump();
        let opts = QuadratureOptions {
            time_intervals: 8,
            space_per_axis: 65,
        };
        let c1 = calabi(&f, &opts).unwrap();
        let c2 = calabi(&f.scaled(0.25), &opts).unwrap();
        assert!((c2.value - 0.25 * c1.value).abs() < 1e-12);
    }

    #[test]
    fn calabi_against_polar_closed_form() {
        // int of exp(1 - 1/(1 - s)) over the disc of radius R: in polar
        // coordinates 2 pi int_0^R e^{1 - 1/(1 - r^2/R^2)} r dr; compare
        // against a dense 1-D radial quadrature
        let r_sup = 0.5;
        let f = small_bump();
        let opts = QuadratureOptions {
            time_intervals: 16,
            space_per_axis: 257,
        };
        let c = calabi(&f, &opts).unwrap();
        let m = 200_000;
        let mut radial = 0.0;
        for i in 0..m {
            let r = (i as f64 + 0.5) / m as f64 * r_sup;
            let s = (r / r_sup) * (r / r_sup);
            radial += (1.0 - 1.0 / (1.0 - s)).exp() * r * (r_sup / m as f64);
        }
        let expect = 2.0 * std::f64::consts::PI * radial;
        assert!(
            (c.value - expect).abs() < 1e-5,
            "quadrature {} vs polar {}",
            c.value,
            expect
        );
        assert!((c.value - expect).abs() <= 10.0 * c.quad_error.max(1e-9));
    }

    #[test]
    fn sigma_sign_and_scaling() {
        let f = small_bump();
        let opts = QuadratureOptions {
            time_intervals: 8,
            space_per_axis: 65,
        };
        let v = f.box_().volume();
        let s1 = sigma_displaceable(&f, v, &opts).unwrap();
        assert!(s1.value < 0.0);
        let s2 = sigma_displaceable(&f.scaled(0.5), v, &opts).unwrap();
        assert!((s2.value - 0.5 * s1.value).abs() < 1e-12);
        assert!(sigma_displaceable(&f, 0.0, &opts).is_err());
    }

    #[test]
    fn conjugation_by_translation_preserves_values() {
        let f = CompactHamiltonian::bump(
            unit_box(),
            vec![0.0, 0.0],
            0.3,
            1.0,
            TimeProfile::Const,
        )
        .unwrap();
        let psi = AffineSymplectic::translation(DVector::from_column_slice(&[0.4, 0.2]));
        let g = conjugate_hamiltonian(&f, &psi).unwrap();
        assert!((g.value(0.0, &[0.4, 0.2]) - f.value(0.0, &[0.0, 0.0])).abs() < 1e-15);
    }

    #[test]
    fn orbit_copy_requires_disjoint_placements() {
        let f = CompactHamiltonian::bump(
            unit_box(),
            vec![-0.6, 0.0],
            0.15,
            1.0,
            TimeProfile::Const,
        )
        .unwrap();
        let cfg = OrbitCopyConfig::translations(1, 3, 0.2);
        assert!(matches!(
            orbit_copy(&f, &cfg),
            Err(CalabiError::OverlappingPlacements(_, _))
        ));
        let cfg2 = OrbitCopyConfig::translations(1, 3, 0.55);
        assert!(orbit_copy(&f, &cfg2).is_ok());
    }

    #[test]
    fn grid_interpolation_reproduces_samples() {
        let box_ = unit_box();
        let per_axis = 33;
        let f = small_bump();
        let h = 2.0 / (per_axis - 1) as f64;
        let mut samples = Vec::new();
        for i in 0..per_axis {
            for j in 0..per_axis {
                let x = [-1.0 + i as f64 * h, -1.0 + j as f64 * h];
                samples.push(f.value(0.0, &x));
            }
        }
        let g = CompactHamiltonian::from_grid(box_, 1, per_axis, samples).unwrap();
        for i in 0..per_axis {
            for j in 0..per_axis {
                let x = [-1.0 + i as f64 * h, -1.0 + j as f64 * h];
                assert!((g.value(0.5, &x) - f.value(0.0, &x)).abs() < 1e-12);
            }
        }
        // interior points agree to multilinear interpolation accuracy
        assert!((g.value(0.0, &[0.11, 0.07]) - f.value(0.0, &[0.11, 0.07])).abs() < 2e-2);
    }

    #[test]
    fn time_profile_scales_the_integral() {
        let box_ = unit_box();
        let const_bump = small_bump();
        let pulsed = CompactHamiltonian::bump(
            box_,
            vec![0.0, 0.0],
            0.5,
            1.0,
            TimeProfile::Parabolic,
        )
        .unwrap();
        let opts = QuadratureOptions {
            time_intervals: 32,
            space_per_axis: 65,
        };
        let a = calabi(&const_bump, &opts).unwrap();
        let b = calabi(&pulsed, &opts).unwrap();
        // the parabolic profile integrates to 1 in time
        assert!((a.value - b.value).abs() < 1e-9);
    }
}
