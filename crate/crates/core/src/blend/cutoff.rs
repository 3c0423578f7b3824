//! Smooth cutoff profile: 0 on (-inf, delta], 1 on [2*delta, inf), with
//! the transition given by the normalized integral of the standard bump
//! exp(-1/(t(1-t))). The unit smoothstep is tabulated once (cumulative
//! Simpson on a fine grid) and evaluated by Hermite cubics whose slopes
//! are the exact integrand values, so the interpolant is C^1 and the
//! derivative is available in closed form.

use std::sync::OnceLock;

const TABLE_N: usize = 2048;

fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

struct Table {
    /// sigma values at t_i = i/TABLE_N, normalized to sigma(1) = 1.
    sigma: Vec<f64>,
    /// node slopes for the Hermite interpolant: the exact integrand,
    /// limited to 3x the adjacent secant slopes so the interpolant is
    /// monotone (the limit only bites in the flat tails).
    slope: Vec<f64>,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = TABLE_N;
        let h = 1.0 / n as f64;
        let mut sigma = vec![0.0; n + 1];
        for i in 1..=n {
            let a = (i - 1) as f64 * h;
            let m = a + 0.5 * h;
            let b = i as f64 * h;
            sigma[i] = sigma[i - 1] + h / 6.0 * (bump(a) + 4.0 * bump(m) + bump(b));
        }
        let total = sigma[n];
        for v in sigma.iter_mut() {
            *v /= total;
        }
        let mut slope: Vec<f64> = (0..=n).map(|i| bump(i as f64 * h) / total).collect();
        for i in 0..=n {
            let left = if i > 0 {
                (sigma[i] - sigma[i - 1]) / h
            } else {
                0.0
            };
            let right = if i < n {
                (sigma[i + 1] - sigma[i]) / h
            } else {
                0.0
            };
            let cap = 3.0 * left.min(right).max(0.0);
            if slope[i] > cap {
                slope[i] = cap;
            }
        }
        Table { sigma, slope }
    })
}

/// The unit smoothstep sigma: 0 at 0, 1 at 1, C^infinity in between.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let t = table();
    let x = s * TABLE_N as f64;
    let i = (x.floor() as usize).min(TABLE_N - 1);
    let u = x - i as f64;
    let h = 1.0 / TABLE_N as f64;
    let (y0, y1) = (t.sigma[i], t.sigma[i + 1]);
    let (d0, d1) = (t.slope[i] * h, t.slope[i + 1] * h);
    // cubic Hermite on [0, 1]
    let u2 = u * u;
    let u3 = u2 * u;
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0
        + (u3 - 2.0 * u2 + u) * d0
        + (-2.0 * u3 + 3.0 * u2) * y1
        + (u3 - u2) * d1
}

/// Derivative of the unit smoothstep: the exact derivative of the same
/// Hermite interpolant, so finite differences of [`smoothstep`] agree.
pub fn smoothstep_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let t = table();
    let x = s * TABLE_N as f64;
    let i = (x.floor() as usize).min(TABLE_N - 1);
    let u = x - i as f64;
    let h = 1.0 / TABLE_N as f64;
    let (y0, y1) = (t.sigma[i], t.sigma[i + 1]);
    let (d0, d1) = (t.slope[i] * h, t.slope[i + 1] * h);
    let u2 = u * u;
    ((6.0 * u2 - 6.0 * u) * y0
        + (3.0 * u2 - 4.0 * u + 1.0) * d0
        + (-6.0 * u2 + 6.0 * u) * y1
        + (3.0 * u2 - 2.0 * u) * d1)
        / h
}

/// Second derivative of the unit smoothstep, in closed form:
/// d/ds [exp(-1/(s(1-s)))] = exp(-1/(s(1-s))) * (1-2s)/(s^2 (1-s)^2).
pub fn smoothstep_deriv2(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let normalized = bump(s) / normalization();
    normalized * (1.0 - 2.0 * s) / (s * s * (1.0 - s) * (1.0 - s))
}

fn normalization() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        let n = TABLE_N;
        let h = 1.0 / n as f64;
        let mut total = 0.0;
        for i in 1..=n {
            let a = (i - 1) as f64 * h;
            let m = a + 0.5 * h;
            let b = i as f64 * h;
            total += h / 6.0 * (bump(a) + 4.0 * bump(m) + bump(b));
        }
        total
    })
}

/// Radial cutoff a_delta: 0 for r <= delta, 1 for r >= 2*delta.
#[derive(Debug, Clone, Copy)]
pub struct CutoffProfile {
    pub delta: f64,
}

impl CutoffProfile {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0);
        CutoffProfile { delta }
    }

    pub fn value(&self, r: f64) -> f64 {
        smoothstep((r - self.delta) / self.delta)
    }

    pub fn deriv(&self, r: f64) -> f64 {
        smoothstep_deriv((r - self.delta) / self.delta) / self.delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_are_exact() {
        let a = CutoffProfile::new(0.1);
        assert_eq!(a.value(0.05), 0.0);
        assert_eq!(a.value(0.1), 0.0);
        assert_eq!(a.value(0.2), 1.0);
        assert_eq!(a.value(0.3), 1.0);
        assert_eq!(a.deriv(0.05), 0.0);
        assert_eq!(a.deriv(0.25), 0.0);
    }

    #[test]
    fn transition_is_monotone_and_matches_derivative() {
        let a = CutoffProfile::new(0.1);
        let mut prev = 0.0;
        for k in 1..100 {
            let r = 0.1 + 0.1 * k as f64 / 100.0;
            let v = a.value(r);
            assert!(v >= prev);
            prev = v;
            // finite-difference check of the derivative
            let h = 1e-6;
            let fd = (a.value(r + h) - a.value(r - h)) / (2.0 * h);
            assert!((fd - a.deriv(r)).abs() < 1e-6, "r = {}", r);
        }
        assert!((a.value(0.2) - 1.0).abs() < 1e-15);
    }
}
