//! Korn constant of the thin curved strip `S = (0, 1) x (-1/2, 1/2)` with
//! the scaled gradient `(ds v / (1 - eps t k) | dt v / eps)`.
//!
//! `K(eps)` is the best constant in
//! `|v - P v|_{H^1} <= K |sym(grad_eps v R^T)|_{L^2}`, where `P` is the
//! `H^1`-orthogonal projection onto the rigid fields `M_eps`. It is computed
//! as `1 / sqrt(sigma_min)` for the generalized eigenproblem `A v = sigma B v`
//! restricted to the `B`-orthogonal complement of `M_eps`, with `A` the
//! strain form and `B` the `H^1` form, both discretized by bilinear elements.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::geometry::ArcLengthCurve;
use crate::math::{abs, solve_dense, sqrt};
use crate::quadrature::gauss_on;

/// Structured mesh of `ns x nt` bilinear elements on `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossSectionMesh {
    pub ns: usize,
    pub nt: usize,
}

impl CrossSectionMesh {
    pub fn new(ns: usize, nt: usize) -> Result<Self> {
        if ns == 0 || nt < 8 {
            return Err(config("mesh needs ns >= 1 and nt >= 8"));
        }
        Ok(CrossSectionMesh { ns, nt })
    }

    pub fn node_count(&self) -> usize {
        (self.ns + 1) * (self.nt + 1)
    }

    pub fn dof_count(&self) -> usize {
        2 * self.node_count()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * (self.nt + 1) + j
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 / self.ns as f64, -0.5 + j as f64 / self.nt as f64)
    }

    fn bandwidth(&self) -> usize {
        2 * (self.nt + 2) + 1
    }
}

/// Symmetric band matrix stored by rows of its lower band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        if a - b > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)` (and its mirror).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// `self + c other` for matrices of the same shape.
    pub fn plus_scaled(&self, c: f64, other: &BandedSym) -> BandedSym {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        out
    }

    pub fn cholesky(&self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.data.clone();
        let at = |i: usize, j: usize| i * (bw + 1) + (j + bw - i);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut sum = l[at(i, j)];
                for k in klo..j {
                    sum -= l[at(i, k)] * l[at(j, k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Numerical { what: "banded Cholesky (matrix not positive)", residual: sum });
                    }
                    l[at(i, i)] = sqrt(sum);
                } else {
                    l[at(i, j)] = sum / l[at(j, j)];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let at = |i: usize, j: usize| i * (bw + 1) + (j + bw - i);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[at(i, k)] * y[k];
            }
            y[i] = s / self.l[at(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.l[at(k, i)] * y[k];
            }
            y[i] = s / self.l[at(i, i)];
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::math::pairwise_sum(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>())
}

/// In-plane field value and its two partial derivatives.
pub type PlaneJet = ([f64; 2], [f64; 2], [f64; 2]);

/// `|sym(grad_eps v R^T)|^2` at one point, from `v`, `ds v`, `dt v`.
pub fn strain_density(curve: &ArcLengthCurve, eps: f64, s: f64, t: f64, ds: &[f64; 2], dt: &[f64; 2]) -> f64 {
    let fr = curve.frame_unchecked(s);
    let tau = [fr.tau[1], fr.tau[2]];
    let n = [fr.n[1], fr.n[2]];
    let m = strain_matrix(ds, dt, &tau, &n, 1.0 / (1.0 - eps * t * fr.k), 1.0 / eps);
    m[0][0] * m[0][0] + 2.0 * m[0][1] * m[0][1] + m[1][1] * m[1][1]
}

fn strain_matrix(ds: &[f64; 2], dt: &[f64; 2], tau: &[f64; 2], n: &[f64; 2], js: f64, jt: f64) -> [[f64; 2]; 2] {
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g[i][j] = js * ds[i] * tau[j] + jt * dt[i] * n[j];
        }
    }
    [[g[0][0], 0.5 * (g[0][1] + g[1][0])], [0.5 * (g[0][1] + g[1][0]), g[1][1]]]
}

/// `int_S |sym(grad_eps v R^T)|^2` for an analytic field, by tensor Gauss
/// quadrature with `nq_s x nq_t` nodes.
pub fn strain_energy_of(
    curve: &ArcLengthCurve,
    eps: f64,
    field: &dyn Fn(f64, f64) -> PlaneJet,
    nq_s: usize,
    nq_t: usize,
) -> f64 {
    let (sn, sw) = gauss_on(nq_s, 0.0, 1.0);
    let (tn, tw) = gauss_on(nq_t, -0.5, 0.5);
    let mut vals = Vec::with_capacity(nq_s * nq_t);
    for (s, ws) in sn.iter().zip(&sw) {
        for (t, wt) in tn.iter().zip(&tw) {
            let (_, ds, dt) = field(*s, *t);
            vals.push(ws * wt * strain_density(curve, eps, *s, *t, &ds, &dt));
        }
    }
    crate::math::pairwise_sum(&vals)
}

/// Rigid fields of the strip: the two translations and
/// `(-gamma_3, gamma_2) - eps t tau`.
#[derive(Debug, Clone)]
pub struct RigidSpace {
    pub curve: ArcLengthCurve,
    pub eps: f64,
}

impl RigidSpace {
    pub fn new(curve: &ArcLengthCurve, eps: f64) -> Self {
        RigidSpace { curve: curve.clone(), eps }
    }

    /// Basis field `k` (0, 1: translations, 2: rotation) with derivatives.
    pub fn basis(&self, k: usize, s: f64, t: f64) -> PlaneJet {
        match k {
            0 => ([1.0, 0.0], [0.0; 2], [0.0; 2]),
            1 => ([0.0, 1.0], [0.0; 2], [0.0; 2]),
            _ => {
                let g = self.curve.gamma(s.clamp(0.0, 1.0)).expect("clamped");
                let fr = self.curve.frame_unchecked(s);
                let (tau, n) = ([fr.tau[1], fr.tau[2]], [fr.n[1], fr.n[2]]);
                let e = self.eps;
                let v = [-g[2] - e * t * tau[0], g[1] - e * t * tau[1]];
                let ds = [(1.0 - e * t * fr.k) * n[0], (1.0 - e * t * fr.k) * n[1]];
                let dt = [-e * tau[0], -e * tau[1]];
                (v, ds, dt)
            }
        }
    }

    /// Nodal interpolants of the three basis fields.
    pub fn nodal(&self, mesh: &CrossSectionMesh) -> [Vec<f64>; 3] {
        let mut out = [vec![0.0; mesh.dof_count()], vec![0.0; mesh.dof_count()], vec![0.0; mesh.dof_count()]];
        for i in 0..=mesh.ns {
            for j in 0..=mesh.nt {
                let (s, t) = mesh.coords(i, j);
                let node = mesh.node(i, j);
                for (k, o) in out.iter_mut().enumerate() {
                    let (v, _, _) = self.basis(k, s, t);
                    o[2 * node] = v[0];
                    o[2 * node + 1] = v[1];
                }
            }
        }
        out
    }
}

/// `(s, t, weight, N, dN/ds, dN/dt)` at one Gauss point.
type GaussPoint = (f64, f64, f64, [f64; 4], [f64; 4], [f64; 4]);

/// Shape function values and derivatives at the 2x2 Gauss points of an
/// element `[s0, s0 + hs] x [t0, t0 + ht]`.
fn element_points(s0: f64, t0: f64, hs: f64, ht: f64) -> Vec<GaussPoint> {
    let g = 0.5 / sqrt(3.0);
    let mut pts = Vec::with_capacity(4);
    for xi in [0.5 - g, 0.5 + g] {
        for eta in [0.5 - g, 0.5 + g] {
            // local node order: (0,0), (1,0), (0,1), (1,1) in (s, t)
            let n = [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), (1.0 - xi) * eta, xi * eta];
            let dns = [-(1.0 - eta) / hs, (1.0 - eta) / hs, -eta / hs, eta / hs];
            let dnt = [-(1.0 - xi) / ht, -xi / ht, (1.0 - xi) / ht, xi / ht];
            pts.push((s0 + xi * hs, t0 + eta * ht, 0.25 * hs * ht, n, dns, dnt));
        }
    }
    pts
}

fn element_nodes(mesh: &CrossSectionMesh, i: usize, j: usize) -> [usize; 4] {
    [mesh.node(i, j), mesh.node(i + 1, j), mesh.node(i, j + 1), mesh.node(i + 1, j + 1)]
}

/// Local stiffness of one element; local dofs are `2 * node + component`
/// with nodes ordered `(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)`.
pub type ElementMatrix = [[f64; 8]; 8];

fn check_strip(curve: &ArcLengthCurve, eps: f64) -> Result<()> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(config("eps must be positive"));
    }
    if eps * 0.5 * curve.max_abs_curvature() >= 1.0 {
        return Err(config("1 - eps t k vanishes on the strip"));
    }
    Ok(())
}

/// Element `(i, j)` of the strain form (lower triangle filled).
pub fn strain_element(curve: &ArcLengthCurve, eps: f64, mesh: &CrossSectionMesh, i: usize, j: usize) -> ElementMatrix {
    let (hs, ht) = (1.0 / mesh.ns as f64, 1.0 / mesh.nt as f64);
    let (s0, t0) = mesh.coords(i, j);
    let mut ke = [[0.0; 8]; 8];
    for (s, t, w, _, dns, dnt) in element_points(s0, t0, hs, ht) {
        let fr = curve.frame_unchecked(s);
        let (tau, n) = ([fr.tau[1], fr.tau[2]], [fr.n[1], fr.n[2]]);
        let js = 1.0 / (1.0 - eps * t * fr.k);
        let mut sm = [[[0.0; 2]; 2]; 8];
        for a in 0..4 {
            for c in 0..2 {
                let mut ds = [0.0; 2];
                let mut dt = [0.0; 2];
                ds[c] = dns[a];
                dt[c] = dnt[a];
                sm[2 * a + c] = strain_matrix(&ds, &dt, &tau, &n, js, 1.0 / eps);
            }
        }
        for p in 0..8 {
            for q in 0..=p {
                let mut v = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        v += sm[p][r][c] * sm[q][r][c];
                    }
                }
                ke[p][q] += w * v;
            }
        }
    }
    ke
}

/// Element `(i, j)` of the `H^1` form (lower triangle filled).
pub fn h1_element(mesh: &CrossSectionMesh, i: usize, j: usize) -> ElementMatrix {
    let (hs, ht) = (1.0 / mesh.ns as f64, 1.0 / mesh.nt as f64);
    let (s0, t0) = mesh.coords(i, j);
    let mut ke = [[0.0; 8]; 8];
    for (_, _, w, nv, dns, dnt) in element_points(s0, t0, hs, ht) {
        for p in 0..8 {
            for q in 0..=p {
                if p % 2 == q % 2 {
                    let (a, b) = (p / 2, q / 2);
                    ke[p][q] += w * (nv[a] * nv[b] + dns[a] * dns[b] + dnt[a] * dnt[b]);
                }
            }
        }
    }
    ke
}

/// Sums element matrices given in row-major element order `(i, j)`.
/// The summation order is fixed, so the result does not depend on how the
/// element matrices were computed.
pub fn assemble(mesh: &CrossSectionMesh, elements: &[ElementMatrix]) -> BandedSym {
    assert_eq!(elements.len(), mesh.ns * mesh.nt, "one matrix per element");
    let mut a = BandedSym::zeros(mesh.dof_count(), mesh.bandwidth());
    for i in 0..mesh.ns {
        for j in 0..mesh.nt {
            scatter(&mut a, &element_nodes(mesh, i, j), &elements[i * mesh.nt + j]);
        }
    }
    a
}

/// Strain form `A(v, v) = int_S |sym(grad_eps v R^T)|^2` on the mesh.
pub fn strain_operator(curve: &ArcLengthCurve, eps: f64, mesh: &CrossSectionMesh) -> Result<BandedSym> {
    check_strip(curve, eps)?;
    let elements: Vec<ElementMatrix> = (0..mesh.ns * mesh.nt)
        .map(|e| strain_element(curve, eps, mesh, e / mesh.nt, e % mesh.nt))
        .collect();
    Ok(assemble(mesh, &elements))
}

fn scatter(a: &mut BandedSym, nodes: &[usize; 4], ke: &[[f64; 8]; 8]) {
    for p in 0..8 {
        for q in 0..=p {
            let gp = 2 * nodes[p / 2] + p % 2;
            let gq = 2 * nodes[q / 2] + q % 2;
            a.add(gp, gq, ke[p][q]);
        }
    }
}

/// `H^1(S)` form `int |v|^2 + |ds v|^2 + |dt v|^2`.
pub fn h1_form(mesh: &CrossSectionMesh) -> BandedSym {
    let elements: Vec<ElementMatrix> = (0..mesh.ns * mesh.nt).map(|e| h1_element(mesh, e / mesh.nt, e % mesh.nt)).collect();
    assemble(mesh, &elements)
}

/// `B`-orthogonal projection of `v` onto the span of `z`.
pub fn project(b: &BandedSym, z: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let bz: Vec<Vec<f64>> = z.iter().map(|zi| b.mul_vec(zi)).collect();
    let m = z.len();
    let gram: Vec<f64> = (0..m * m).map(|k| dot(&z[k / m], &bz[k % m])).collect();
    let rhs: Vec<f64> = bz.iter().map(|bzi| dot(bzi, v)).collect();
    let c = solve_dense(m, &gram, &rhs).unwrap_or_else(|| vec![0.0; m]);
    let mut out = vec![0.0; v.len()];
    for (ci, zi) in c.iter().zip(z) {
        for (o, x) in out.iter_mut().zip(zi) {
            *o += ci * x;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KornResult {
    pub eps: f64,
    pub sigma_min: f64,
    pub constant: f64,
    pub iterations: usize,
    /// Relative change of the Rayleigh quotient at the last step.
    pub residual: f64,
    /// `|A x - sigma B x|` on the constrained space, relative to `max diag A`.
    pub eigen_residual: f64,
}

/// Deterministic seed vector (splitmix64).
fn seed_vector(n: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Shift-inverted solves restricted to `{x : (B z_k) . x = 0}`.
struct ConstrainedSolver {
    chol: BandCholesky,
    bz: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    schur: Vec<f64>,
}

impl ConstrainedSolver {
    fn new(a: &BandedSym, b: &BandedSym, bz: &[Vec<f64>], shift: f64) -> Result<Self> {
        let chol = a.plus_scaled(shift, b).cholesky()?;
        let w: Vec<Vec<f64>> = bz.iter().map(|v| chol.solve(v)).collect();
        let m = bz.len();
        let schur = (0..m * m).map(|k| dot(&bz[k / m], &w[k % m])).collect();
        Ok(ConstrainedSolver { chol, bz: bz.to_vec(), w, schur })
    }

    fn solve(&self, r: &[f64]) -> Vec<f64> {
        let mut x = self.chol.solve(r);
        let m = self.bz.len();
        let rhs: Vec<f64> = self.bz.iter().map(|v| dot(v, &x)).collect();
        let lam = solve_dense(m, &self.schur, &rhs).unwrap_or_else(|| vec![0.0; m]);
        for (l, wk) in lam.iter().zip(&self.w) {
            for (xi, wi) in x.iter_mut().zip(wk) {
                *xi -= l * wi;
            }
        }
        x
    }
}

/// `K(eps)` by inverse iteration on the complement of the rigid fields.
pub fn korn_constant(
    curve: &ArcLengthCurve,
    eps: f64,
    mesh: &CrossSectionMesh,
    tol: f64,
    max_iter: usize,
) -> Result<KornResult> {
    let a = strain_operator(curve, eps, mesh)?;
    let b = h1_form(mesh);
    korn_constant_assembled(curve, eps, mesh, &a, &b, tol, max_iter)
}

/// As [`korn_constant`], with the two forms already assembled.
pub fn korn_constant_assembled(
    curve: &ArcLengthCurve,
    eps: f64,
    mesh: &CrossSectionMesh,
    a: &BandedSym,
    b: &BandedSym,
    tol: f64,
    max_iter: usize,
) -> Result<KornResult> {
    check_strip(curve, eps)?;
    let z = RigidSpace::new(curve, eps).nodal(mesh);
    let bz: Vec<Vec<f64>> = z.iter().map(|zi| b.mul_vec(zi)).collect();
    let m = bz.len();
    let bz_gram: Vec<f64> = (0..m * m).map(|k| dot(&bz[k / m], &bz[k % m])).collect();

    let mut x = seed_vector(mesh.dof_count());
    let p = project(b, &z, &x);
    for (xi, pi) in x.iter_mut().zip(&p) {
        *xi -= pi;
    }
    normalize(b, &mut x);
    let mut sigma = a.quad_form(&x);
    let mut shift = 1e-2 * sigma;
    let mut solver = ConstrainedSolver::new(a, b, &bz, shift)?;
    let a_scale = (0..a.size()).map(|i| a.get(i, i)).fold(0.0, f64::max);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut y = solver.solve(&b.mul_vec(&x));
        normalize(b, &mut y);
        x = y;
        let previous = sigma;
        sigma = a.quad_form(&x);
        residual = abs(sigma - previous) / abs(sigma);
        if residual <= tol {
            let eigen_residual = eigen_residual(a, b, &bz, &bz_gram, &x, sigma) / a_scale;
            return Ok(KornResult {
                eps,
                sigma_min: sigma,
                constant: 1.0 / sqrt(sigma),
                iterations: it,
                residual,
                eigen_residual,
            });
        }
        if shift > 0.1 * sigma {
            shift = 1e-2 * sigma;
            solver = ConstrainedSolver::new(a, b, &bz, shift)?;
        }
    }
    Err(Error::Numerical { what: "Korn inverse iteration", residual })
}

/// `|A x - sigma B x|` after removing its component in `range(B Z)`, which
/// the constraint multipliers absorb.
fn eigen_residual(a: &BandedSym, b: &BandedSym, bz: &[Vec<f64>], bz_gram: &[f64], x: &[f64], sigma: f64) -> f64 {
    let ax = a.mul_vec(x);
    let bx = b.mul_vec(x);
    let mut r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - sigma * q).collect();
    let rhs: Vec<f64> = bz.iter().map(|v| dot(v, &r)).collect();
    if let Some(mu) = solve_dense(bz.len(), bz_gram, &rhs) {
        for (muk, v) in mu.iter().zip(bz) {
            for (ri, vi) in r.iter_mut().zip(v) {
                *ri -= muk * vi;
            }
        }
    }
    sqrt(dot(&r, &r))
}

fn normalize(b: &BandedSym, x: &mut [f64]) {
    let n = sqrt(b.quad_form(x));
    for xi in x.iter_mut() {
        *xi /= n;
    }
}
