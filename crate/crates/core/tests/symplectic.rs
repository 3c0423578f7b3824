//! Random-matrix properties: symplectic eigenvalue quadruples, splitting
//! isotropy, and the rational-angle perturbation contract.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympl_core::symplectic::{
    classify, identity_order, invariant_splitting, isotropy_defect, matrix_exp, matrix_power,
    perturb_to_rational_angles, rotation_normal_form, standard_j, symplectic_defect,
    ClassifyOptions, SymplecticMatrix,
};

fn random_symmetric(dim: usize, rng: &mut ChaCha8Rng, scale: f64) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = rng.gen_range(-scale..scale);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

fn random_symplectic(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> DMatrix<f64> {
    matrix_exp(&(standard_j(n) * random_symmetric(2 * n, rng, scale)))
}

/// Random elliptic 4x4: conjugate a rotation normal form by a random
/// symplectic basis.
fn random_elliptic_4x4(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let t1 = rng.gen_range(0.2..std::f64::consts::PI - 0.2);
        let t2 = rng.gen_range(0.2..std::f64::consts::PI - 0.2);
        if (t1 - t2).abs() < 0.05 {
            continue;
        }
        let p = random_symplectic(2, rng, 0.4);
        let rot = rotation_normal_form(&[t1, t2]);
        let p_inv = p.clone().try_inverse().unwrap();
        return &p * rot * p_inv;
    }
}

/// Random 6x6 symplectic with a 2-dimensional contracting part: lift a
/// contracting 2x2 block A to (A, A^{-T}) on (q1, q2, p1, p2), add an
/// elliptic plane, and conjugate.
fn random_with_contracting_pair(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let rho: f64 = rng.gen_range(0.3..0.7);
    let phi: f64 = rng.gen_range(0.3..2.8);
    let theta: f64 = rng.gen_range(0.3..2.8);
    let mut m = DMatrix::<f64>::zeros(6, 6);
    let (s, c) = phi.sin_cos();
    // A = rho * R(phi) on (q1, q2); A^{-T} = rho^{-1} R(phi) on (p1, p2)
    let a = [[rho * c, -rho * s], [rho * s, rho * c]];
    let ait = [[c / rho, -s / rho], [s / rho, c / rho]];
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = a[i][j];
            m[(3 + i, 3 + j)] = ait[i][j];
        }
    }
    let (se, ce) = theta.sin_cos();
    m[(2, 2)] = ce;
    m[(5, 5)] = ce;
    m[(2, 5)] = -se;
    m[(5, 2)] = se;
    let p = random_symplectic(3, rng, 0.3);
    let p_inv = p.clone().try_inverse().unwrap();
    &p * m * p_inv
}

#[test]
fn eigenvalues_come_in_symplectic_quadruples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let m = random_symplectic(2, &mut rng, 0.6);
        let eig = m.complex_eigenvalues();
        let eigs: Vec<Complex<f64>> = eig.iter().cloned().collect();
        for l in &eigs {
            let inv = Complex::new(1.0, 0.0) / l;
            let closest = eigs
                .iter()
                .map(|m| (m - inv).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-8, "1/lambda missing for {}", l);
            let conj = l.conj();
            let closest_c = eigs
                .iter()
                .map(|m| (m - conj).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(closest_c < 1e-8);
        }
    }
}

#[test]
fn splitting_ranks_match_and_stable_space_is_isotropic() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..50 {
        let m = random_with_contracting_pair(&mut rng);
        let sm = SymplecticMatrix::new(m, 1e-8).unwrap();
        let split = invariant_splitting(&sm, 1e-2).unwrap();
        assert_eq!(split.e_u.len(), split.e_s.len(), "case {}", i);
        assert_eq!(split.e_s.len(), 2);
        let defect = isotropy_defect(&split.e_s).unwrap();
        assert!(defect <= 1e-10, "case {}: isotropy defect {}", i, defect);
        let defect_u = isotropy_defect(&split.e_u).unwrap();
        assert!(defect_u <= 1e-10);
    }
}

#[test]
fn defective_contracting_block_is_handled() {
    // Jordan block A = [[rho, 1], [0, rho]] lifted to (A, A^{-T}):
    // E^s is the full 2-dimensional generalized eigenspace
    let rho: f64 = 0.5;
    let mut m = DMatrix::<f64>::zeros(6, 6);
    m[(0, 0)] = rho;
    m[(0, 1)] = 1.0;
    m[(1, 1)] = rho;
    // A^{-T} for A = [[rho, 1], [0, rho]]: inverse transpose
    let a = DMatrix::from_row_slice(2, 2, &[rho, 1.0, 0.0, rho]);
    let ait = a.try_inverse().unwrap().transpose();
    for i in 0..2 {
        for j in 0..2 {
            m[(3 + i, 3 + j)] = ait[(i, j)];
        }
    }
    let (s, c) = 1.1f64.sin_cos();
    m[(2, 2)] = c;
    m[(5, 5)] = c;
    m[(2, 5)] = -s;
    m[(5, 2)] = s;
    let sm = SymplecticMatrix::new(m, 1e-10).unwrap();
    let split = invariant_splitting(&sm, 1e-2).unwrap();
    assert_eq!(split.e_s.len(), 2);
    assert_eq!(split.e_u.len(), 2);
    assert!(isotropy_defect(&split.e_s).unwrap() <= 1e-10);
}

#[test]
fn perturbation_contract_on_random_elliptic_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let eps = 1e-3;
    for i in 0..25 {
        let mbar = random_elliptic_4x4(&mut rng);
        let sm = SymplecticMatrix::new(mbar.clone(), 1e-8).unwrap();
        let out = perturb_to_rational_angles(&sm, eps, &ClassifyOptions::default()).unwrap();
        assert!(
            out.matrix.defect() <= 1e-10,
            "case {}: defect {}",
            i,
            out.matrix.defect()
        );
        assert!(
            out.distance <= 10.0 * eps * out.cond_basis,
            "case {}: distance {} vs bound {}",
            i,
            out.distance,
            10.0 * eps * out.cond_basis
        );
        let cls = classify(&out.matrix, &ClassifyOptions::default());
        assert!(cls.elliptic, "case {}", i);
        // angles approximate the originals within eps of a turn
        for (a, t) in out.angles.iter().zip(&out.original_angles) {
            let frac = t / (2.0 * std::f64::consts::PI);
            let approx = a.numer() as f64 / a.denom() as f64;
            assert!((frac - approx).abs() <= eps + 1e-12);
        }
    }
}

#[test]
fn perturbed_matrix_has_finite_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    // angles near small distinct rationals keep the denominators below
    // 50 so the matrix powers stay well-conditioned
    let fractions: [(i64, i64); 8] = [
        (1, 3),
        (1, 4),
        (1, 5),
        (1, 7),
        (2, 5),
        (2, 7),
        (3, 7),
        (3, 8),
    ];
    for _ in 0..20 {
        let i = rng.gen_range(0..fractions.len());
        let j = rng.gen_range(0..fractions.len());
        if i == j {
            continue;
        }
        let (p1, q1) = fractions[i];
        let (p2, q2) = fractions[j];
        let t1 =
            2.0 * std::f64::consts::PI * p1 as f64 / q1 as f64 + rng.gen_range(-1e-5..1e-5);
        let t2 =
            2.0 * std::f64::consts::PI * p2 as f64 / q2 as f64 + rng.gen_range(-1e-5..1e-5);
        let p = random_symplectic(2, &mut rng, 0.4);
        let p_inv = p.clone().try_inverse().unwrap();
        let mbar = &p * rotation_normal_form(&[t1, t2]) * p_inv;
        let sm = SymplecticMatrix::new(mbar, 1e-8).unwrap();
        let out = perturb_to_rational_angles(&sm, 1e-3, &ClassifyOptions::default()).unwrap();
        let order = identity_order(&out.angles).unwrap();
        assert!(out.angles.iter().all(|a| a.denom() <= 50));
        let power = matrix_power(out.matrix.matrix(), order);
        let id = DMatrix::<f64>::identity(4, 4);
        assert!(
            (power - id).norm() <= 1e-8,
            "order {} power defect too large",
            order
        );
    }
}

#[test]
fn random_symplectic_matrices_pass_the_defect_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..50 {
        let m = random_symplectic(2, &mut rng, 0.7);
        assert!(symplectic_defect(&m) <= 1e-8);
    }
}
