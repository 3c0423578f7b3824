//! Built-in manifolds: complex projective spaces, products, the one-point
//! blow-up of CP³, and the 2-sphere.

use crate::ring::{rat, Generator, ManifoldData, Rational, RingElement, RingError, RingPresentation};
/// A named manifold with a note on where its data comes from.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub data: ManifoldData,
    pub provenance: String,
}

/// Complex projective space CP^n with its standard generator named `a`:
/// ring Q[a] truncated above degree 2n (which enforces a^{n+1} = 0), full
/// Chern class (1+a)^{n+1} - a^{n+1}, and H^1 = 0.
pub fn cp(n: u32) -> Result<ManifoldData, RingError> {
    cp_named(n, "a")
}

/// CP^n with a custom generator name (used to build products with
/// non-colliding names).
pub fn cp_named(n: u32, gen_name: &str) -> Result<ManifoldData, RingError> {
    if n < 1 {
        return Err(RingError::BadManifold("cp(n) requires n >= 1".into()));
    }
    let ring = RingPresentation::new(
        vec![Generator {
            name: gen_name.to_string(),
            degree: 2,
        }],
        vec![],
        2 * n,
    )?;
    // (1+a)^{n+1} - a^{n+1}; the a^{n+1} terms die to truncation anyway.
    let one = RingElement::one(&ring);
    let a = RingElement::generator(&ring, gen_name)?;
    let chern = (&one + &a).pow(n + 1).try_sub(&a.pow(n + 1))?;
    ManifoldData::new(ring, n, chern, true)
}

/// The 2-sphere: ring Q[a]/(a^2), n = 1, c = 1 + 2a. Presented exactly
/// like CP^1.
pub fn sphere2() -> ManifoldData {
    cp(1).expect("sphere2 construction cannot fail")
}

/// One-point blow-up of CP³. All data is fixed, known cohomology: the
/// ring is Q[a,b]/(ab, b³ - a³) with top degree 6, and the full Chern
/// class is 1 + 4a + 6a² + 6a³ - 2b.
pub fn blowup_cp3_point() -> ManifoldData {
    let ring = RingPresentation::new(
        vec![
            Generator {
                name: "a".into(),
                degree: 2,
            },
            Generator {
                name: "b".into(),
                degree: 2,
            },
        ],
        vec![
            (vec![1, 1], vec![]),
            (vec![0, 3], vec![(vec![3, 0], rat(1))]),
        ],
        6,
    )
    .expect("blow-up presentation is confluent");
    let chern = RingElement::normalize(
        &ring,
        vec![
            (vec![0, 0], rat(1)),
            (vec![1, 0], rat(4)),
            (vec![2, 0], rat(6)),
            (vec![3, 0], rat(6)),
            (vec![0, 1], rat(-2)),
        ],
    );
    ManifoldData::new(ring, 3, chern, true).expect("blow-up data is well-formed")
}

/// Pick a fresh name for a colliding second-factor generator by
/// appending 2, 3, ... until it is unused.
fn fresh_name(base: &str, taken: &[String]) -> String {
    if !taken.iter().any(|t| t == base) {
        return base.to_string();
    }
    let mut k = 2usize;
    loop {
        let candidate = format!("{}{}", base, k);
        if !taken.iter().any(|t| t == &candidate) {
            return candidate;
        }
        k += 1;
    }
}

/// Product manifold: tensor ring with the union of the factor relations
/// (colliding second-factor generator names get a numeric suffix),
/// n = n1 + n2, Whitney product Chern class, and H^1 = 0 iff both
/// factors declare it.
///
/// Each factor's truncation is materialized as explicit relations (its
/// minimal over-top monomials map to zero), because the product's top
/// degree is weaker than the factors' own.
pub fn product(m1: &ManifoldData, m2: &ManifoldData) -> Result<ManifoldData, RingError> {
    let g1 = m1.ring.generators();
    let g2 = m2.ring.generators();
    let mut names: Vec<String> = g1.iter().map(|g| g.name.clone()).collect();
    let mut renamed: Vec<String> = Vec::new();
    for g in g2 {
        let name = fresh_name(&g.name, &names);
        names.push(name.clone());
        renamed.push(name);
    }

    let mut generators: Vec<Generator> = g1.to_vec();
    for (g, name) in g2.iter().zip(&renamed) {
        generators.push(Generator {
            name: name.clone(),
            degree: g.degree,
        });
    }

    let k1 = g1.len();
    let k2 = g2.len();
    let embed1 = |exps: &[u32]| -> Vec<u32> {
        let mut v = vec![0u32; k1 + k2];
        v[..k1].copy_from_slice(exps);
        v
    };
    let embed2 = |exps: &[u32]| -> Vec<u32> {
        let mut v = vec![0u32; k1 + k2];
        v[k1..].copy_from_slice(exps);
        v
    };

    let mut relations: Vec<(Vec<u32>, Vec<(Vec<u32>, Rational)>)> = Vec::new();
    for r in m1.ring.relations() {
        relations.push((
            embed1(r.lead.exponents()),
            r.rhs
                .iter()
                .map(|(m, c)| (embed1(m.exponents()), c.clone()))
                .collect(),
        ));
    }
    for m in m1.ring.truncation_frontier() {
        relations.push((embed1(m.exponents()), vec![]));
    }
    for r in m2.ring.relations() {
        relations.push((
            embed2(r.lead.exponents()),
            r.rhs
                .iter()
                .map(|(m, c)| (embed2(m.exponents()), c.clone()))
                .collect(),
        ));
    }
    for m in m2.ring.truncation_frontier() {
        relations.push((embed2(m.exponents()), vec![]));
    }

    let n = m1.n + m2.n;
    let ring = RingPresentation::new(generators, relations, 2 * n)?;

    let lift = |src: &RingElement, embed: &dyn Fn(&[u32]) -> Vec<u32>| -> RingElement {
        RingElement::normalize(
            &ring,
            src.terms()
                .map(|(m, c)| (embed(m.exponents()), c.clone()))
                .collect(),
        )
    };
    let c1 = lift(&m1.chern, &embed1);
    let c2 = lift(&m2.chern, &embed2);
    let chern = c1.try_mul(&c2)?;

    ManifoldData::new(ring, n, chern, m1.h1_zero && m2.h1_zero)
}

/// Resolve a catalog name. Known names: `cp1` .. `cp8`, `s2`,
/// `blowup-cp3`, and `cp2xcp2`.
pub fn lookup(name: &str) -> Option<CatalogEntry> {
    let entry = |name: &str, data: ManifoldData, provenance: &str| CatalogEntry {
        name: name.to_string(),
        data,
        provenance: provenance.to_string(),
    };
    match name {
        "s2" => Some(entry(
            name,
            sphere2(),
            "2-sphere, standard cohomology",
        )),
        "blowup-cp3" => Some(entry(
            name,
            blowup_cp3_point(),
            "one-point blow-up of CP^3, fixed cohomology data",
        )),
        "cp2xcp2" => {
            let a = cp_named(2, "a").ok()?;
            let b = cp_named(2, "b").ok()?;
            Some(entry(
                name,
                product(&a, &b).ok()?,
                "product CP^2 x CP^2, Whitney product",
            ))
        }
        _ => {
            let n: u32 = name.strip_prefix("cp")?.parse().ok()?;
            if (1..=8).contains(&n) {
                Some(entry(
                    name,
                    cp(n).ok()?,
                    "complex projective space, standard cohomology",
                ))
            } else {
                None
            }
        }
    }
}

/// All catalog names, for CLI listings and error messages.
pub fn names() -> Vec<&'static str> {
    vec![
        "cp1", "cp2", "cp3", "cp4", "cp5", "cp6", "cp7", "cp8", "s2", "blowup-cp3", "cp2xcp2",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cp_top_coefficient_is_n_plus_one() {
        for n in 1..=8 {
            let m = cp(n).unwrap();
            assert_eq!(m.chern.degree().unwrap(), n);
            let top = m.top_chern();
            let (_, c) = top.terms().next().unwrap();
            assert_eq!(c, &rat(n as i64 + 1));
            assert!(m.chern.is_integral());
        }
    }

    #[test]
    fn cp1_chern_is_one_plus_2a() {
        let m = cp(1).unwrap();
        let expect = RingElement::normalize(
            &m.ring,
            vec![(vec![0], rat(1)), (vec![1], rat(2))],
        );
        assert_eq!(m.chern, expect);
    }

    #[test]
    fn cp2_chern_is_one_plus_3a_plus_3a2() {
        let m = cp(2).unwrap();
        let expect = RingElement::normalize(
            &m.ring,
            vec![(vec![0], rat(1)), (vec![1], rat(3)), (vec![2], rat(3))],
        );
        assert_eq!(m.chern, expect);
    }

    #[test]
    fn sphere2_matches_cp1() {
        let s = sphere2();
        let c = cp(1).unwrap();
        assert_eq!(s.ring.as_ref(), c.ring.as_ref());
        assert_eq!(s.chern, c.chern);
        assert!(!s.top_chern().is_zero());
    }

    #[test]
    fn blowup_components() {
        let m = blowup_cp3_point();
        let c1 = m.chern.project_degree(1);
        let expect_c1 = RingElement::normalize(
            &m.ring,
            vec![(vec![1, 0], rat(4)), (vec![0, 1], rat(-2))],
        );
        assert_eq!(c1, expect_c1);
        let c2 = m.chern.project_degree(2);
        let expect_c2 = RingElement::normalize(&m.ring, vec![(vec![2, 0], rat(6))]);
        assert_eq!(c2, expect_c2);
        // top coefficient 6 = Euler characteristic of the blow-up
        let top = m.top_chern();
        let (_, c) = top.terms().next().unwrap();
        assert_eq!(c, &rat(6));
        // ab = 0 in this ring
        let ab = RingElement::normalize(&m.ring, vec![(vec![1, 1], rat(1))]);
        assert!(ab.is_zero());
    }

    #[test]
    fn product_of_cp2s_matches_known_presentation() {
        let e = lookup("cp2xcp2").unwrap();
        let m = e.data;
        assert_eq!(m.n, 4);
        // relations a^3 = b^3 = 0 and nothing else
        assert_eq!(m.ring.relations().len(), 2);
        for r in m.ring.relations() {
            assert!(r.rhs.is_empty());
            assert_eq!(r.lead.degree(), 6);
        }
        // c = (1+3a+3a^2)(1+3b+3b^2): check a few coefficients
        let c = &m.chern;
        let basis = m.ring.basis();
        let ab = basis
            .iter()
            .find(|mo| mo.exponents() == [1, 1])
            .unwrap();
        assert_eq!(c.coefficient(ab), rat(9));
        let a2b2 = basis
            .iter()
            .find(|mo| mo.exponents() == [2, 2])
            .unwrap();
        assert_eq!(c.coefficient(a2b2), rat(9));
        assert!(m.h1_zero);
    }

    #[test]
    fn product_renames_colliding_generators() {
        let m1 = cp(2).unwrap();
        let m2 = cp(2).unwrap();
        let p = product(&m1, &m2).unwrap();
        let names: Vec<&str> = p.ring.generators().iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, vec!["a", "a2"]);
    }

    #[test]
    fn product_dimension_is_additive() {
        let p = product(&cp(1).unwrap(), &cp(2).unwrap()).unwrap();
        assert_eq!(p.n, 3);
        assert!(p.chern.is_integral());
    }

    #[test]
    fn product_is_associative_on_chern_classes() {
        // ((cp1 x cp1) x cp2) vs (cp1 x (cp1 x cp2)): same generator
        // degrees in the same order, so the chern classes can be compared
        // after identification of the rings.
        let a = cp_named(1, "a").unwrap();
        let b = cp_named(1, "b").unwrap();
        let c = cp_named(2, "c").unwrap();
        let left = product(&product(&a, &b).unwrap(), &c).unwrap();
        let right = product(&a, &product(&b, &c).unwrap()).unwrap();
        assert_eq!(left.ring.as_ref(), right.ring.as_ref());
        assert_eq!(left.chern, right.chern);
    }

    #[test]
    fn catalog_names_resolve() {
        for name in names() {
            let e = lookup(name).unwrap();
            assert!(e.data.chern.is_integral());
            assert!(!e.data.top_chern().is_zero());
        }
        assert!(lookup("cp9").is_none());
        assert!(lookup("torus").is_none());
    }
}
