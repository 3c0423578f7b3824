//! Dense little multivariate polynomials over f64 for map components.

/// Polynomial in `nvars` variables; terms are (exponents, coefficient).
#[derive(Debug, Clone)]
pub struct Poly {
    nvars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl Poly {
    pub fn new(nvars: usize, terms: Vec<(Vec<u32>, f64)>) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(e, c)| {
                assert_eq!(e.len(), nvars, "exponent vector length mismatch");
                *c != 0.0
            })
            .collect();
        Poly { nvars, terms }
    }

    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: vec![],
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Poly::new(nvars, vec![(vec![0; nvars], c)])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::new(nvars, vec![(e, 1.0)])
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Poly {
        let mut terms = Vec::new();
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            terms.push((e2, c * e[i] as f64));
        }
        Poly {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|(e, _)| e.iter().all(|&k| k == 0))
            .map(|(_, c)| *c)
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_partial() {
        // p = 2 x0^3 - x1
        let p = Poly::new(2, vec![(vec![3, 0], 2.0), (vec![0, 1], -1.0)]);
        assert_eq!(p.eval(&[2.0, 5.0]), 11.0);
        let dp0 = p.partial(0);
        assert_eq!(dp0.eval(&[2.0, 5.0]), 24.0);
        let dp1 = p.partial(1);
        assert_eq!(dp1.eval(&[2.0, 5.0]), -1.0);
    }
}
