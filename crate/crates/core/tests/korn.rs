#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use thinwall_core::korn::{
    h1_form, korn_constant, project, strain_energy_of, strain_operator, BandedSym, CrossSectionMesh, RigidSpace,
};
use thinwall_core::{ArcLengthCurve, Error};

fn curves() -> Vec<ArcLengthCurve> {
    vec![ArcLengthCurve::unit_arc(), ArcLengthCurve::signed_lobe(), ArcLengthCurve::plateau()]
}

fn h1_dist(b: &BandedSym, u: &[f64], v: &[f64]) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(x, y)| x - y).collect();
    b.quad_form(&d).sqrt()
}

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn rigid_fields_are_strain_free() {
    for curve in curves() {
        for eps in [0.2, 0.1, 0.05, 0.025] {
            let space = RigidSpace::new(&curve, eps);
            for k in 0..3 {
                let e = strain_energy_of(&curve, eps, &|s, t| space.basis(k, s, t), 64, 16);
                assert!(e <= 1e-20, "basis {k} at eps {eps}: {e:e}");
            }
        }
    }
}

#[test]
fn linear_shear_on_the_straight_strip() {
    // tau = e2, n = e3: v = (0, s) has sym strain [[0, 1/2], [1/2, 0]], so |sym|^2 = 1/2
    let curve = ArcLengthCurve::straight();
    let mesh = CrossSectionMesh::new(6, 8).unwrap();
    for eps in [0.3, 0.01] {
        let a = strain_operator(&curve, eps, &mesh).unwrap();
        let mut v = vec![0.0; mesh.dof_count()];
        for i in 0..=mesh.ns {
            for j in 0..=mesh.nt {
                v[2 * mesh.node(i, j) + 1] = mesh.coords(i, j).0;
            }
        }
        assert!((a.quad_form(&v) - 0.5).abs() < 1e-10);
        let e = strain_energy_of(&curve, eps, &|s, _| ([0.0, s], [0.0, 1.0], [0.0, 0.0]), 4, 4);
        assert!((e - 0.5).abs() < 1e-14);
    }
}

#[test]
fn projection_onto_rigid_fields() {
    let curve = ArcLengthCurve::signed_lobe();
    let mesh = CrossSectionMesh::new(12, 8).unwrap();
    let b = h1_form(&mesh);
    let z = RigidSpace::new(&curve, 0.1).nodal(&mesh);
    let z = z.to_vec();
    let u = pseudo_random(mesh.dof_count(), 1);
    let v = pseudo_random(mesh.dof_count(), 2);
    let pu = project(&b, &z, &u);
    assert!(h1_dist(&b, &project(&b, &z, &pu), &pu) <= 1e-12 * b.quad_form(&u).sqrt());
    let bv = b.mul_vec(&v);
    let pv = project(&b, &z, &v);
    let lhs: f64 = pu.iter().zip(&bv).map(|(x, y)| x * y).sum();
    let rhs: f64 = u.iter().zip(&b.mul_vec(&pv)).map(|(x, y)| x * y).sum();
    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));

    let rigid: Vec<f64> = (0..u.len()).map(|i| 0.3 * z[0][i] - z[1][i] + 2.0 * z[2][i]).collect();
    assert!(h1_dist(&b, &project(&b, &z, &rigid), &rigid) <= 1e-12);
    let orth: Vec<f64> = u.iter().zip(&pu).map(|(x, y)| x - y).collect();
    assert!(b.quad_form(&project(&b, &z, &orth)).sqrt() <= 1e-10);
    let mixed: Vec<f64> = rigid.iter().zip(&orth).map(|(x, y)| x + y).collect();
    assert!(h1_dist(&b, &project(&b, &z, &mixed), &rigid) <= 1e-10);
}

#[test]
fn rigid_space_tends_to_its_limit_linearly() {
    let curve = ArcLengthCurve::unit_arc();
    let mesh = CrossSectionMesh::new(16, 8).unwrap();
    let b = h1_form(&mesh);
    let z0 = RigidSpace::new(&curve, 0.0).nodal(&mesh);
    let d: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|eps| h1_dist(&b, &RigidSpace::new(&curve, *eps).nodal(&mesh)[2], &z0[2]))
        .collect();
    assert!((d[0] / d[1] - 2.0).abs() < 1e-12 && (d[1] / d[2] - 2.0).abs() < 1e-12);
    assert!(h1_dist(&b, &RigidSpace::new(&curve, 0.1).nodal(&mesh)[0], &z0[0]) == 0.0);
}

/// Cyclic Jacobi eigenvalues of a dense symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[test]
fn smallest_eigenvalue_matches_a_dense_oracle() {
    let curve = ArcLengthCurve::signed_lobe();
    let mesh = CrossSectionMesh::new(4, 8).unwrap();
    let eps = 0.2;
    let a = strain_operator(&curve, eps, &mesh).unwrap();
    let b = h1_form(&mesh);
    let n = mesh.dof_count();
    let bdot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(&b.mul_vec(v)).map(|(x, y)| x * y).sum() };
    // B-orthonormal basis: rigid fields first, then unit vectors
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let rigid = RigidSpace::new(&curve, eps).nodal(&mesh);
    let candidates = rigid.iter().cloned().chain((0..n).map(|i| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }));
    for mut c in candidates {
        for _ in 0..2 {
            for q in &basis {
                let r = bdot(&c, q);
                c.iter_mut().zip(q).for_each(|(x, y)| *x -= r * y);
            }
        }
        let nrm = bdot(&c, &c).sqrt();
        if nrm > 1e-6 {
            basis.push(c.iter().map(|x| x / nrm).collect());
        }
    }
    assert_eq!(basis.len(), n);
    let comp = &basis[3..];
    let ac: Vec<Vec<f64>> = comp.iter().map(|u| a.mul_vec(u)).collect();
    let reduced: Vec<Vec<f64>> =
        comp.iter().map(|u| ac.iter().map(|av| u.iter().zip(av).map(|(x, y)| x * y).sum()).collect()).collect();
    let oracle = jacobi_eigenvalues(reduced).into_iter().fold(f64::INFINITY, f64::min);
    let r = korn_constant(&curve, eps, &mesh, 1e-12, 500).unwrap();
    assert!(oracle > 0.0);
    assert!((r.sigma_min - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", r.sigma_min);
    assert!((r.constant - 1.0 / oracle.sqrt()).abs() <= 1e-8 * r.constant);
}

#[test]
fn korn_constant_grows_like_inverse_thickness() {
    let curve = ArcLengthCurve::unit_arc();
    let mesh = CrossSectionMesh::new(64, 16).unwrap();
    let k1 = korn_constant(&curve, 0.2, &mesh, 1e-10, 500).unwrap();
    let k2 = korn_constant(&curve, 0.1, &mesh, 1e-10, 500).unwrap();
    assert!(k1.sigma_min > 0.0 && k2.sigma_min > 0.0);
    let ratio = k2.constant / k1.constant;
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
    // deterministic
    assert_eq!(korn_constant(&curve, 0.1, &mesh, 1e-10, 500).unwrap(), k2);
}

#[test]
fn invalid_korn_inputs() {
    let curve = ArcLengthCurve::unit_arc();
    assert!(matches!(CrossSectionMesh::new(16, 4), Err(Error::Configuration(_))));
    assert!(CrossSectionMesh::new(0, 8).is_err());
    let mesh = CrossSectionMesh::new(8, 8).unwrap();
    assert!(matches!(strain_operator(&curve, 2.0, &mesh), Err(Error::Configuration(_))));
    assert!(matches!(strain_operator(&curve, 0.0, &mesh), Err(Error::Configuration(_))));
    assert!(matches!(korn_constant(&curve, 0.1, &mesh, 1e-30, 3), Err(Error::Numerical { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn banded_cholesky_matches_matrix_vector_product(seed in 0u64..1000, n in 3usize..40, bw in 0usize..5) {
        let vals = pseudo_random(n * (bw + 1) + n, seed);
        let mut a = BandedSym::zeros(n, bw);
        let mut k = 0;
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, vals[k]);
                k += 1;
            }
            a.add(i, i, 2.0 * bw as f64 + 1.0);
        }
        let x = pseudo_random(n, seed + 7);
        let y = a.cholesky().unwrap().solve(&a.mul_vec(&x));
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() < 1e-12);
        }
        prop_assert!((a.quad_form(&x) - x.iter().zip(&a.mul_vec(&x)).map(|(p, q)| p * q).sum::<f64>()).abs() < 1e-12);
    }
}
