//! St. Venant–Kirchhoff material, its quadratic forms and the relaxed
//! moduli used by the limit energy.
//!
//! `modulus_e`, `matrix_f` and `q2` only see the material through
//! [`MaterialModel::q3_bilinear`], so they stay valid for any positive
//! quadratic form on symmetric matrices.

use crate::error::{config, Result};
use crate::math::{frob2, mat_add, mat_mul, mat_scale, solve_dense, sym, trace, transpose, Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    pub lambda: f64,
    pub mu: f64,
}

/// Minimizer of the cross-sectional relaxation at one point of the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedBending {
    pub value: f64,
    pub sigma: Vec3,
}

fn unit_sym(i: usize, j: usize) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    m[i][j] = 1.0;
    m[j][i] = 1.0;
    m
}

/// Basis `E11, E22, E33, E12+E21, E13+E31, E23+E32` of symmetric matrices.
const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl MaterialModel {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite()) || lambda < 0.0 || mu <= 0.0 {
            return Err(config("Lamé constants need lambda >= 0 and mu > 0"));
        }
        Ok(MaterialModel { lambda, mu })
    }

    /// `W(Id + p)` in Green–Lagrange form, so that small perturbations do
    /// not lose digits to the subtraction `F^T F - Id`.
    pub fn energy_density(&self, p: &Mat3) -> f64 {
        let pt = transpose(p);
        let e = mat_add(&mat_add(p, &pt), &mat_mul(&pt, p));
        let tr = trace(&e);
        self.lambda / 8.0 * tr * tr + self.mu / 4.0 * frob2(&e)
    }

    /// `W(f)` for a full deformation gradient.
    pub fn energy_density_full(&self, f: &Mat3) -> f64 {
        let mut p = *f;
        for (i, row) in p.iter_mut().enumerate() {
            row[i] -= 1.0;
        }
        self.energy_density(&p)
    }

    /// Second variation of `W` at the identity.
    pub fn q3(&self, g: &Mat3) -> f64 {
        self.q3_bilinear(g, g)
    }

    pub fn q3_bilinear(&self, a: &Mat3, b: &Mat3) -> f64 {
        let (sa, sb) = (sym(a), sym(b));
        self.lambda * trace(&sa) * trace(&sb) + 2.0 * self.mu * crate::math::ddot(&sa, &sb)
    }

    fn gram(&self) -> [[f64; 6]; 6] {
        let mut g = [[0.0; 6]; 6];
        for (i, &(a, b)) in SYM_INDEX.iter().enumerate() {
            for (j, &(c, d)) in SYM_INDEX.iter().enumerate() {
                let x = if a == b { unit_sym_diag(a) } else { unit_sym(a, b) };
                let y = if c == d { unit_sym_diag(c) } else { unit_sym(c, d) };
                g[i][j] = self.q3_bilinear(&x, &y);
            }
        }
        g
    }

    /// Coordinates of the symmetric minimizer of `q3` among symmetric
    /// matrices with `(1,1)` entry one, and the minimum.
    fn axial_relaxation(&self) -> ([f64; 5], f64) {
        let g = self.gram();
        let mut rr = [0.0; 25];
        let mut rhs = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 {
                rr[i * 5 + j] = g[i + 1][j + 1];
            }
            rhs[i] = -g[i + 1][0];
        }
        let x = solve_dense(5, &rr, &rhs).expect("q3 is positive on symmetric matrices");
        let mut value = g[0][0];
        for i in 0..5 {
            value += g[0][i + 1] * x[i];
        }
        ([x[0], x[1], x[2], x[3], x[4]], value)
    }

    /// Young's modulus: `min_{a,b} q3(e1 | a | b)`.
    pub fn modulus_e(&self) -> f64 {
        self.axial_relaxation().1
    }

    /// Matrix with vanishing first column realizing the minimum in
    /// [`Self::modulus_e`]: `q3(e1 (x) e1 + F) = E`. The skew part is fixed by
    /// taking the lower `2 x 2` block symmetric.
    pub fn matrix_f(&self) -> Mat3 {
        let (x, _) = self.axial_relaxation();
        // x = (S22, S33, S12, S13, S23) of the symmetric minimizer
        [[0.0, 2.0 * x[2], 2.0 * x[3]], [0.0, x[0], x[4]], [0.0, x[4], x[1]]]
    }

    /// Poisson ratio; for isotropic materials `matrix_f = diag(0, -nu, -nu)`.
    pub fn nu(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }

    /// `min_sigma q3(R0 [[0, a, s1], [a, b, s2], [s1, s2, s3]] R0^T)`.
    pub fn q2(&self, r0: &Mat3, a: f64, b: f64) -> RelaxedBending {
        let (h, l, c) = self.relaxation_system(r0, a, b);
        let sigma = solve3(&h, &[-l[0], -l[1], -l[2]]);
        RelaxedBending { value: c + l[0] * sigma[0] + l[1] * sigma[1] + l[2] * sigma[2], sigma }
    }

    /// Minimizer of [`Self::q2`] and its derivative when the frame moves
    /// with derivative `r0_prime`.
    pub fn q2_sigma_derivative(&self, r0: &Mat3, r0_prime: &Mat3, a: f64, b: f64) -> (Vec3, Vec3) {
        let (h, l, _) = self.relaxation_system(r0, a, b);
        let sigma = solve3(&h, &[-l[0], -l[1], -l[2]]);
        let xs = relaxation_directions();
        let rotate = |m: &Mat3| mat_mul(&mat_mul(r0, m), &transpose(r0));
        let drotate = |m: &Mat3| {
            mat_add(&mat_mul(&mat_mul(r0_prime, m), &transpose(r0)), &mat_mul(&mat_mul(r0, m), &transpose(r0_prime)))
        };
        let a0 = mat_add(&mat_scale(a, &unit_sym(0, 1)), &mat_scale(b, &unit_sym_diag(1)));
        let (ra0, da0) = (rotate(&a0), drotate(&a0));
        let mut rhs = [0.0; 3];
        for i in 0..3 {
            let (xi, dxi) = (rotate(&xs[i]), drotate(&xs[i]));
            let mut acc = self.q3_bilinear(&dxi, &ra0) + self.q3_bilinear(&xi, &da0);
            for j in 0..3 {
                let (xj, dxj) = (rotate(&xs[j]), drotate(&xs[j]));
                acc += (self.q3_bilinear(&dxi, &xj) + self.q3_bilinear(&xi, &dxj)) * sigma[j];
            }
            rhs[i] = -acc;
        }
        (sigma, solve3(&h, &rhs))
    }

    fn relaxation_system(&self, r0: &Mat3, a: f64, b: f64) -> ([[f64; 3]; 3], Vec3, f64) {
        let rotate = |m: &Mat3| mat_mul(&mat_mul(r0, m), &transpose(r0));
        let xs = relaxation_directions().map(|m| rotate(&m));
        let a0 = rotate(&mat_add(&mat_scale(a, &unit_sym(0, 1)), &mat_scale(b, &unit_sym_diag(1))));
        let mut h = [[0.0; 3]; 3];
        let mut l = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                h[i][j] = self.q3_bilinear(&xs[i], &xs[j]);
            }
            l[i] = self.q3_bilinear(&xs[i], &a0);
        }
        (h, l, self.q3(&a0))
    }

    /// Checked constructor used by configuration code.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.lambda, self.mu).map(|_| ())
    }
}

fn unit_sym_diag(i: usize) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    m[i][i] = 1.0;
    m
}

/// Directions of `sigma_1, sigma_2, sigma_3` in the frame of the curve.
fn relaxation_directions() -> [Mat3; 3] {
    [unit_sym(0, 2), unit_sym(1, 2), unit_sym_diag(2)]
}

fn solve3(h: &[[f64; 3]; 3], rhs: &Vec3) -> Vec3 {
    let flat = [h[0][0], h[0][1], h[0][2], h[1][0], h[1][1], h[1][2], h[2][0], h[2][1], h[2][2]];
    match solve_dense(3, &flat, rhs) {
        Some(x) => [x[0], x[1], x[2]],
        None => [f64::NAN; 3],
    }
}

impl Default for MaterialModel {
    fn default() -> Self {
        MaterialModel { lambda: 1.0, mu: 1.0 }
    }
}
