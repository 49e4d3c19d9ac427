#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinwall_core::material::MaterialModel;
use thinwall_core::math::{mat_mul, transpose, Mat3, IDENTITY};

fn random_matrix(rng: &mut ChaCha8Rng, scale: f64) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x = scale * rng.gen_range(-1.0..1.0);
        }
    }
    m
}

fn rotation(axis: [f64; 3], angle: f64) -> Mat3 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|a| a / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

fn random_material(rng: &mut ChaCha8Rng) -> MaterialModel {
    MaterialModel::new(rng.gen_range(0.0..3.0), rng.gen_range(0.2..3.0)).unwrap()
}

fn scaled(c: f64, g: &Mat3) -> Mat3 {
    g.map(|row| row.map(|x| c * x))
}

/// Second derivative of `t -> W(Id + t G)` at zero by Richardson-extrapolated
/// central differences; exact for the quartic stored energy.
fn fd_second_variation(m: &MaterialModel, g: &Mat3, step: f64) -> f64 {
    let d = |t: f64| (m.energy_density(&scaled(t, g)) + m.energy_density(&scaled(-t, g))) / (t * t);
    (4.0 * d(step / 2.0) - d(step)) / 3.0
}

/// Bilinear form recovered from `q3` alone.
fn polar(m: &MaterialModel, a: &Mat3, b: &Mat3) -> f64 {
    let mut p = *a;
    let mut q = *a;
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] += b[i][j];
            q[i][j] -= b[i][j];
        }
    }
    0.25 * (m.q3(&p) - m.q3(&q))
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        x[r] = (b[r] - (r + 1..n).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
    }
    x
}

/// Brute-force cross-sectional relaxation assembled from `q3` evaluations.
fn q2_oracle(m: &MaterialModel, r0: &Mat3, a: f64, b: f64) -> (f64, [f64; 3]) {
    let rot = |x: Mat3| mat_mul(&mat_mul(r0, &x), &transpose(r0));
    let base = rot([[0.0, a, 0.0], [a, b, 0.0], [0.0, 0.0, 0.0]]);
    let dirs = [
        rot([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        rot([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
        rot([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    ];
    let h: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| polar(m, &dirs[i], &dirs[j])).collect()).collect();
    let l: Vec<f64> = (0..3).map(|i| -polar(m, &dirs[i], &base)).collect();
    let s = gauss_solve(h, l);
    let mut full = base;
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                full[i][j] += s[k] * dirs[k][i][j];
            }
        }
    }
    (m.q3(&full), [s[0], s[1], s[2]])
}

/// `min_{a,b} q3(e1 | a | b)` by conjugate gradients over all six entries,
/// using only `q3` evaluations. The form is singular in one direction, which
/// conjugate gradients started at zero tolerates.
fn modulus_oracle(m: &MaterialModel) -> f64 {
    let mat = |x: &[f64]| [[1.0, x[0], x[3]], [0.0, x[1], x[4]], [0.0, x[2], x[5]]];
    let basis = |k: usize| {
        let mut e = [0.0; 6];
        e[k] = 1.0;
        e
    };
    let zero = [[0.0; 3]; 3];
    let lin = |x: &[f64]| {
        let mut y = mat(x);
        y[0][0] = 0.0;
        y
    };
    let h: Vec<Vec<f64>> =
        (0..6).map(|i| (0..6).map(|j| polar(m, &lin(&basis(i)), &lin(&basis(j)))).collect()).collect();
    let e11 = [[1.0, 0.0, 0.0], zero[1], zero[2]];
    let g: Vec<f64> = (0..6).map(|i| polar(m, &lin(&basis(i)), &e11)).collect();
    let mut x = vec![0.0; 6];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut p = r.clone();
    for _ in 0..50 {
        let rr: f64 = r.iter().map(|v| v * v).sum();
        if rr < 1e-30 {
            break;
        }
        let hp: Vec<f64> = (0..6).map(|i| (0..6).map(|j| h[i][j] * p[j]).sum()).collect();
        let alpha = rr / p.iter().zip(&hp).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..6 {
            x[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        let beta = r.iter().map(|v| v * v).sum::<f64>() / rr;
        for i in 0..6 {
            p[i] = r[i] + beta * p[i];
        }
    }
    m.q3(&mat(&x))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn q3_is_the_second_variation_of_the_stored_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let m = random_material(&mut rng);
        let g = random_matrix(&mut rng, 1.0);
        let fd = fd_second_variation(&m, &g, 1e-4);
        assert!(rel(m.q3(&g), fd) < 1e-10, "{} vs {}", m.q3(&g), fd);
    }
}

#[test]
fn relaxed_modulus_matches_brute_force_and_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let m = random_material(&mut rng);
        let e = m.modulus_e();
        assert!(rel(e, modulus_oracle(&m)) < 1e-10);
        let closed = m.mu * (3.0 * m.lambda + 2.0 * m.mu) / (m.lambda + m.mu);
        assert!(rel(e, closed) < 1e-10);
        let f = m.matrix_f();
        let mut y = f;
        y[0][0] += 1.0;
        assert!(rel(m.q3(&y), e) < 1e-10);
        assert_eq!([f[0][0], f[1][0], f[2][0]], [0.0; 3]);
        let nu = m.nu();
        assert!((f[1][1] + nu).abs() < 1e-12 && (f[2][2] + nu).abs() < 1e-12);
        assert!(f[0][1].abs() < 1e-12 && f[1][2].abs() < 1e-12);
    }
}

#[test]
fn cross_section_relaxation_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let m = random_material(&mut rng);
        let th: f64 = rng.gen_range(0.0..6.3);
        let r0 = [[1.0, 0.0, 0.0], [0.0, th.cos(), -th.sin()], [0.0, th.sin(), th.cos()]];
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let got = m.q2(&r0, a, b);
        let (value, sigma) = q2_oracle(&m, &r0, a, b);
        assert!(rel(got.value, value) < 1e-10);
        for i in 0..3 {
            assert!((got.sigma[i] - sigma[i]).abs() < 1e-10 * (1.0 + sigma[i].abs()));
        }
        let iso = 4.0 * m.mu * a * a + 4.0 * m.mu * (m.lambda + m.mu) / (m.lambda + 2.0 * m.mu) * b * b;
        assert!(rel(got.value, iso) < 1e-10);
    }
}

#[test]
fn relaxation_minimizer_moves_consistently_with_the_frame() {
    let m = MaterialModel::new(1.3, 0.6).unwrap();
    let frame = |th: f64| [[1.0, 0.0, 0.0], [0.0, th.cos(), -th.sin()], [0.0, th.sin(), th.cos()]];
    let dframe = |th: f64| [[0.0, 0.0, 0.0], [0.0, -th.sin(), -th.cos()], [0.0, th.cos(), -th.sin()]];
    let (sigma, dsigma) = m.q2_sigma_derivative(&frame(0.4), &dframe(0.4), 0.7, -1.1);
    let s1 = m.q2(&frame(0.4 + 1e-5), 0.7, -1.1).sigma;
    let s0 = m.q2(&frame(0.4 - 1e-5), 0.7, -1.1).sigma;
    for i in 0..3 {
        assert!((dsigma[i] - (s1[i] - s0[i]) / 2e-5).abs() < 1e-8);
        assert!((sigma[i] - m.q2(&frame(0.4), 0.7, -1.1).sigma[i]).abs() < 1e-15);
    }
}

#[test]
fn frame_indifference_and_natural_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let m = MaterialModel::default();
    assert_eq!(m.energy_density_full(&IDENTITY), 0.0);
    for _ in 0..20 {
        let r = rotation([rng.gen(), rng.gen(), rng.gen::<f64>() + 0.1], rng.gen_range(-3.0..3.0));
        let mut f = random_matrix(&mut rng, 0.3);
        for (i, row) in f.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        assert!(rel(m.energy_density_full(&mat_mul(&r, &f)), m.energy_density_full(&f)) < 1e-10);
        assert!(m.energy_density_full(&r) < 1e-28);
    }
}

/// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations.
fn sym_eigenvalues(mut a: Mat3) -> [f64; 3] {
    for _ in 0..50 {
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut j = IDENTITY;
            j[p][p] = c;
            j[q][q] = c;
            j[p][q] = s;
            j[q][p] = -s;
            a = mat_mul(&mat_mul(&transpose(&j), &a), &j);
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

#[test]
fn coercive_near_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let m = random_material(&mut rng);
        let r = rotation([rng.gen(), rng.gen(), rng.gen::<f64>() + 0.1], rng.gen_range(-3.0..3.0));
        let mut u = random_matrix(&mut rng, 0.4);
        for (i, row) in u.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        let f = mat_mul(&r, &u);
        if determinant(&f) <= 0.0 {
            continue;
        }
        // dist(F, SO(3)) = |sqrt(F^T F) - Id| when det F > 0
        let dist2: f64 = sym_eigenvalues(mat_mul(&transpose(&f), &f)).iter().map(|l| (l.sqrt() - 1.0).powi(2)).sum();
        assert!(m.energy_density_full(&f) >= m.mu / 8.0 * dist2 * (1.0 - 1e-12));
    }
}

fn determinant(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

proptest! {
    #[test]
    fn q3_is_nonnegative_and_blind_to_skew_parts(
        lambda in 0.0f64..5.0, mu in 0.1f64..5.0,
        entries in proptest::array::uniform9(-3.0f64..3.0),
    ) {
        let m = MaterialModel::new(lambda, mu).unwrap();
        let g = [[entries[0], entries[1], entries[2]], [entries[3], entries[4], entries[5]], [entries[6], entries[7], entries[8]]];
        prop_assert!(m.q3(&g) >= 0.0);
        let skew = [[0.0, entries[1], entries[2]], [-entries[1], 0.0, entries[5]], [-entries[2], -entries[5], 0.0]];
        prop_assert!(m.q3(&skew).abs() < 1e-12);
    }

    #[test]
    fn relaxation_never_exceeds_the_unrelaxed_form(
        lambda in 0.0f64..5.0, mu in 0.1f64..5.0, a in -2.0f64..2.0, b in -2.0f64..2.0, th in 0.0f64..6.3,
    ) {
        let m = MaterialModel::new(lambda, mu).unwrap();
        let r0 = [[1.0, 0.0, 0.0], [0.0, th.cos(), -th.sin()], [0.0, th.sin(), th.cos()]];
        let q = m.q2(&r0, a, b);
        let unrelaxed = m.q3(&mat_mul(&mat_mul(&r0, &[[0.0, a, 0.0], [a, b, 0.0], [0.0, 0.0, 0.0]]), &transpose(&r0)));
        prop_assert!(q.value >= -1e-12);
        prop_assert!(q.value <= unrelaxed + 1e-12);
    }
}
