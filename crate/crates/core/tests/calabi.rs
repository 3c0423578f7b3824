//! Calabi identities against self-reported quadrature bounds, flow
//! checks against analytic solutions, and the Monte-Carlo oracle.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sympl_core::calabi::{
    calabi, compose_hamiltonians, conjugate_hamiltonian, flow, flow_with_jacobian, orbit_copy,
    AffineSymplectic, Box2n, CompactHamiltonian, FlowOptions, OrbitCopyConfig, QuadratureOptions,
    TimeProfile,
};
use sympl_core::symplectic::rotation_normal_form;

fn unit_box() -> Box2n {
    Box2n::new(1, 1.0).unwrap()
}

fn quad_opts() -> QuadratureOptions {
    QuadratureOptions {
        time_intervals: 16,
        space_per_axis: 65,
    }
}

fn random_bump(rng: &mut ChaCha8Rng, box_: Box2n) -> CompactHamiltonian {
    let r: f64 = rng.gen_range(0.15..0.3);
    let limit = 0.95 * box_.half - r - 0.05;
    let cx = rng.gen_range(-limit..limit);
    let cy = rng.gen_range(-limit..limit);
    let amp = rng.gen_range(0.2..1.2);
    CompactHamiltonian::bump(box_, vec![cx, cy], r, amp, TimeProfile::Const).unwrap()
}

#[test]
fn homomorphism_within_quadrature_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let box_ = unit_box();
    let opts = quad_opts();
    for case in 0..20 {
        let f = random_bump(&mut rng, box_);
        let g = random_bump(&mut rng, box_);
        let composed = match compose_hamiltonians(&f, &g, 64) {
            Ok(c) => c,
            Err(_) => continue, // merged support too close to the collar
        };
        let cf = calabi(&f, &opts).unwrap();
        let cg = calabi(&g, &opts).unwrap();
        let cfg_val = calabi(&composed, &opts).unwrap();
        let lhs = (cfg_val.value - cf.value - cg.value).abs();
        let bound = 2.0 * (cfg_val.quad_error + cf.quad_error + cg.quad_error);
        assert!(
            lhs <= bound,
            "case {}: |Cal(F#G) - Cal F - Cal G| = {:e} > bound {:e}",
            case,
            lhs,
            bound
        );
    }
}

#[test]
fn composed_flow_matches_composition_of_flows() {
    let box_ = unit_box();
    let f = CompactHamiltonian::bump(box_, vec![-0.2, 0.0], 0.3, 0.8, TimeProfile::Const).unwrap();
    let g = CompactHamiltonian::bump(box_, vec![0.25, 0.1], 0.3, -0.6, TimeProfile::Const).unwrap();
    let composed = compose_hamiltonians(&f, &g, 256).unwrap();
    let opts = FlowOptions {
        steps_per_unit: 400,
        ..FlowOptions::default()
    };
    let pts = vec![vec![-0.15, 0.05], vec![0.3, 0.05], vec![0.0, -0.2]];
    let via_g = flow(&g, 1.0, &pts, &opts).unwrap();
    let expected = flow(&f, 1.0, &via_g, &opts).unwrap();
    let actual = flow(&composed, 1.0, &pts, &opts).unwrap();
    for (a, e) in actual.iter().zip(&expected) {
        let d: f64 = a
            .iter()
            .zip(e)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(d < 5e-4, "flow mismatch {:?} vs {:?}", a, e);
    }
}

#[test]
fn disjoint_supports_compose_additively_and_commute() {
    let box_ = unit_box();
    let f = CompactHamiltonian::bump(box_, vec![-0.45, 0.0], 0.2, 1.0, TimeProfile::Const).unwrap();
    let g = CompactHamiltonian::bump(box_, vec![0.45, 0.0], 0.2, 0.7, TimeProfile::Const).unwrap();
    let composed = compose_hamiltonians(&f, &g, 64).unwrap();
    // F # G = F + G pointwise when the supports are disjoint
    for x in [[-0.45, 0.05], [0.45, -0.05], [0.0, 0.0], [-0.3, 0.2]] {
        let direct = f.value(0.3, &x) + g.value(0.3, &x);
        assert!((composed.value(0.3, &x) - direct).abs() < 1e-9);
    }
    // and the time-1 maps commute pointwise
    let opts = FlowOptions {
        steps_per_unit: 500,
        ..FlowOptions::default()
    };
    let pts = vec![vec![-0.4, 0.05], vec![0.5, 0.02], vec![0.1, 0.1]];
    let fg = flow(&g, 1.0, &flow(&f, 1.0, &pts, &opts).unwrap(), &opts).unwrap();
    let gf = flow(&f, 1.0, &flow(&g, 1.0, &pts, &opts).unwrap(), &opts).unwrap();
    for (a, b) in fg.iter().zip(&gf) {
        let d: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(d <= 1e-8, "commutator defect {}", d);
    }
}

#[test]
fn conjugation_invariance_of_calabi() {
    let box_ = unit_box();
    let opts = quad_opts();
    let f = CompactHamiltonian::bump(box_, vec![0.1, 0.0], 0.25, 0.9, TimeProfile::Const).unwrap();
    let base = calabi(&f, &opts).unwrap();

    // translation
    let psi = AffineSymplectic::translation(DVector::from_column_slice(&[-0.3, 0.2]));
    let ft = conjugate_hamiltonian(&f, &psi).unwrap();
    let ct = calabi(&ft, &opts).unwrap();
    assert!((ct.value - base.value).abs() <= 2.0 * (ct.quad_error + base.quad_error));

    // linear symplectic rotation
    let rot = AffineSymplectic::linear(rotation_normal_form(&[0.7])).unwrap();
    let fr = conjugate_hamiltonian(&f, &rot).unwrap();
    let cr = calabi(&fr, &opts).unwrap();
    assert!((cr.value - base.value).abs() <= 2.0 * (cr.quad_error + base.quad_error));

    // identity conjugation is the identity
    let id = AffineSymplectic::identity(1);
    let fi = conjugate_hamiltonian(&f, &id).unwrap();
    assert_eq!(fi.value(0.2, &[0.05, 0.1]), f.value(0.2, &[0.05, 0.1]));
}

#[test]
fn orbit_copy_multiplies_calabi() {
    let box_ = unit_box();
    let opts = quad_opts();
    let f =
        CompactHamiltonian::bump(box_, vec![-0.7, 0.0], 0.08, 1.0, TimeProfile::Const).unwrap();
    let base = calabi(&f, &opts).unwrap();
    for k in 1..=5usize {
        let cfg = OrbitCopyConfig::translations(1, k, 0.34);
        let copies = orbit_copy(&f, &cfg).unwrap();
        let ck = calabi(&copies, &opts).unwrap();
        let bound = (k as f64) * (base.quad_error + ck.quad_error) + 1e-12;
        assert!(
            (ck.value - k as f64 * base.value).abs() <= bound,
            "k = {}: {} vs {}",
            k,
            ck.value,
            k as f64 * base.value
        );
    }
}

#[test]
fn orbit_copies_commute_pairwise() {
    let box_ = unit_box();
    let f =
        CompactHamiltonian::bump(box_, vec![-0.6, 0.0], 0.1, 0.8, TimeProfile::Const).unwrap();
    let cfg = OrbitCopyConfig::translations(1, 3, 0.45);
    let copies: Vec<CompactHamiltonian> = cfg
        .placements
        .iter()
        .map(|g| conjugate_hamiltonian(&f, g).unwrap())
        .collect();
    let opts = FlowOptions {
        steps_per_unit: 400,
        ..FlowOptions::default()
    };
    let pts = vec![vec![-0.6, 0.05], vec![-0.15, 0.0], vec![0.3, -0.02]];
    for i in 0..copies.len() {
        for j in (i + 1)..copies.len() {
            let ij = flow(&copies[j], 1.0, &flow(&copies[i], 1.0, &pts, &opts).unwrap(), &opts)
                .unwrap();
            let ji = flow(&copies[i], 1.0, &flow(&copies[j], 1.0, &pts, &opts).unwrap(), &opts)
                .unwrap();
            for (a, b) in ij.iter().zip(&ji) {
                let d: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!(d <= 1e-8);
            }
        }
    }
}

#[test]
fn rotator_flow_matches_analytic_frequency() {
    let box_ = unit_box();
    // inside the inner plateau the Hamiltonian is base + slope * s, so
    // the flow rotates rigidly by angle -2 * slope * t
    let slope = -0.9;
    let f = CompactHamiltonian::rotator(
        box_,
        vec![0.0, 0.0],
        0.7,
        slope,
        0.16,
        0.49,
        TimeProfile::Const,
    )
    .unwrap();
    let opts = FlowOptions::default();
    let x0 = vec![0.3, 0.0];
    for t in [0.25, 0.5, 1.0] {
        let out = flow(&f, t, &[x0.clone()], &opts).unwrap();
        // qdot = 2 g' p, pdot = -2 g' q: counterclockwise at -2 * slope
        let expect_angle = -2.0 * slope * t;
        let expected = [0.3 * expect_angle.cos(), 0.3 * expect_angle.sin()];
        let d = ((out[0][0] - expected[0]).powi(2) + (out[0][1] - expected[1]).powi(2)).sqrt();
        assert!(
            d < 1e-4,
            "t = {}: flowed {:?}, analytic {:?}",
            t,
            out[0],
            expected
        );
    }
}

#[test]
fn flow_jacobians_have_unit_determinant()
{
    let box_ = unit_box();
    let f = CompactHamiltonian::bump(box_, vec![0.0, 0.0], 0.45, 1.0, TimeProfile::Const).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let pts: Vec<Vec<f64>> = (0..100)
        .map(|_| vec![rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)])
        .collect();
    let opts = FlowOptions::default();
    let out = flow_with_jacobian(&f, 1.0, &pts, &opts).unwrap();
    for (_, jac) in &out {
        let det = jac.determinant();
        assert!((det - 1.0).abs() <= 1e-6, "det = {}", det);
    }
}

#[test]
fn grid_sampled_bump_agrees_with_monte_carlo_oracle() {
    let box_ = unit_box();
    // truncated, smoothed Gaussian-like bump sampled on a grid
    let f = CompactHamiltonian::bump(box_, vec![0.05, -0.1], 0.5, 1.3, TimeProfile::Const).unwrap();
    let per_axis = 129;
    let h = 2.0 / (per_axis - 1) as f64;
    let mut samples = Vec::with_capacity(per_axis * per_axis);
    for i in 0..per_axis {
        for j in 0..per_axis {
            let x = [-1.0 + i as f64 * h, -1.0 + j as f64 * h];
            samples.push(f.value(0.0, &x));
        }
    }
    let g = CompactHamiltonian::from_grid(box_, 1, per_axis, samples).unwrap();
    let quad = calabi(
        &g,
        &QuadratureOptions {
            time_intervals: 8,
            space_per_axis: 129,
        },
    )
    .unwrap();

    // Monte-Carlo oracle, 10^7 samples over the box
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n_samples = 10_000_000usize;
    let mut acc = 0.0f64;
    for _ in 0..n_samples {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        acc += f.value(0.0, &x);
    }
    let mc = acc / n_samples as f64 * box_.volume();
    let rel = (quad.value - mc).abs() / quad.value.abs();
    assert!(
        rel < 1.5e-3,
        "quadrature {} vs Monte-Carlo {} (relative {})",
        quad.value,
        mc,
        rel
    );
}

#[test]
fn calabi_reports_scale_linearly() {
    let box_ = unit_box();
    let opts = quad_opts();
    let f = CompactHamiltonian::bump(box_, vec![0.0, 0.0], 0.4, 1.0, TimeProfile::Const).unwrap();
    let c1 = calabi(&f, &opts).unwrap();
    let c2 = calabi(&f.scaled(3.0), &opts).unwrap();
    assert!((c2.value - 3.0 * c1.value).abs() < 1e-12);
}
