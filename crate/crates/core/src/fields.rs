//! Scaling regimes, separable deformation fields on the reference domain
//! `(0, L) x (0, 1) x (-1/2, 1/2)`, the rescaled energy and the observables
//! that identify limits.
//!
//! A field is `[psi^h] + sum_k c_k(h, delta, eps) a_k(x1) p_k(t) V_k(s)`.
//! Every summand carries exact partial derivatives, and the reference map
//! `psi^h` is never added numerically: its rescaled gradient is the frame
//! `R0` itself, so the perturbation `grad y R0^T - Id` is just the sum of the
//! other summands' contributions.

use alloc::vec::Vec;

use crate::error::{config, Result};
use crate::geometry::{ArcLengthCurve, Frame};
use crate::jet::VectorFn;
use crate::material::MaterialModel;
use crate::math::{
    add, axpy, dot, from_columns, mat_add, mat_mul, mat_scale, mat_sub, pairwise_sum, pow, powi, transpose, Mat3,
    Vec3, E1, IDENTITY, ZERO3,
};
use crate::poly::Polynomial;
use crate::quadrature::{gauss_on, QuadratureGrid};

/// Value of a limit of scaling ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitValue {
    Zero,
    Finite(f64),
    Infinite,
}

/// `delta_h = c_delta h^p`, `eps_h = c_eps h^q` on a beam of length `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRegime {
    pub length: f64,
    pub c_delta: f64,
    pub p_delta: f64,
    pub c_eps: f64,
    pub q_eps: f64,
}

const EXPONENT_TOL: f64 = 1e-12;

impl ScalingRegime {
    pub fn new(length: f64, c_delta: f64, p_delta: f64, c_eps: f64, q_eps: f64) -> Result<Self> {
        let r = ScalingRegime { length, c_delta, p_delta, c_eps, q_eps };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.length, self.c_delta, self.p_delta, self.c_eps, self.q_eps];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(config("regime parameters must be finite"));
        }
        if self.length <= 0.0 || self.c_delta <= 0.0 || self.c_eps <= 0.0 {
            return Err(config("L, c_delta and c_eps must be positive"));
        }
        if self.p_delta <= 1.0 {
            return Err(config("delta_h / h must vanish: p_delta > 1"));
        }
        if self.q_eps < 2.0 * self.p_delta - EXPONENT_TOL {
            return Err(config("eps_h / delta_h^2 must stay bounded: q_eps >= 2 p_delta"));
        }
        Ok(())
    }

    pub fn delta(&self, h: f64) -> f64 {
        self.c_delta * pow(h, self.p_delta)
    }

    pub fn eps(&self, h: f64) -> f64 {
        self.c_eps * pow(h, self.q_eps)
    }

    /// `lim eps_h / delta_h^2`.
    pub fn ell(&self) -> LimitValue {
        if (self.q_eps - 2.0 * self.p_delta).abs() <= EXPONENT_TOL {
            LimitValue::Finite(self.c_eps / (self.c_delta * self.c_delta))
        } else {
            LimitValue::Zero
        }
    }

    /// `lim delta_h / h^2`.
    pub fn lambda_class(&self) -> LimitValue {
        threshold(self.c_delta, self.p_delta, 2.0)
    }

    /// `lim delta_h / h^3`.
    pub fn mu_class(&self) -> LimitValue {
        threshold(self.c_delta, self.p_delta, 3.0)
    }
}

fn threshold(c: f64, p: f64, at: f64) -> LimitValue {
    if (p - at).abs() <= EXPONENT_TOL {
        LimitValue::Finite(c)
    } else if p < at {
        LimitValue::Infinite
    } else {
        LimitValue::Zero
    }
}

/// `c h^a delta^b eps^e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub c: f64,
    pub h: i32,
    pub delta: i32,
    pub eps: i32,
}

impl Scale {
    pub const fn new(c: f64, h: i32, delta: i32, eps: i32) -> Self {
        Scale { c, h, delta, eps }
    }

    pub fn eval(&self, h: f64, delta: f64, eps: f64) -> f64 {
        self.c * powi(h, self.h) * powi(delta, self.delta) * powi(eps, self.eps)
    }
}

/// One separable summand `c a(x1) p(t) V(s)`.
#[derive(Clone)]
pub struct Term {
    pub scale: Scale,
    pub x1: Polynomial,
    pub t: Polynomial,
    pub profile: VectorFn,
    pub label: &'static str,
    dx1: Polynomial,
    dt: Polynomial,
}

impl core::fmt::Debug for Term {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Term")
            .field("label", &self.label)
            .field("scale", &self.scale)
            .field("x1", &self.x1)
            .field("t", &self.t)
            .finish()
    }
}

impl Term {
    pub fn new(label: &'static str, scale: Scale, x1: Polynomial, t: Polynomial, profile: VectorFn) -> Self {
        let dx1 = x1.derivative();
        let dt = t.derivative();
        Term { scale, x1, t, profile, label, dx1, dt }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x1: f64,
    pub s: f64,
    pub t: f64,
}

impl Point {
    pub const fn new(x1: f64, s: f64, t: f64) -> Self {
        Point { x1, s, t }
    }
}

/// The three scale factors at a given `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    pub h: f64,
    pub delta: f64,
    pub eps: f64,
}

impl Scaling {
    pub fn at(regime: &ScalingRegime, h: f64) -> Self {
        Scaling { h, delta: regime.delta(h), eps: regime.eps(h) }
    }
}

#[derive(Debug, Clone)]
pub struct DeformationField {
    pub curve: ArcLengthCurve,
    /// Whether `psi^h` is part of the field.
    pub base_included: bool,
    pub terms: Vec<Term>,
}

/// Partial derivatives `(d1, ds, dt)` of the non-reference summands.
type Partials = (Vec3, Vec3, Vec3);

impl DeformationField {
    /// The reference map `psi^h` alone.
    pub fn reference(curve: &ArcLengthCurve) -> Self {
        DeformationField { curve: curve.clone(), base_included: true, terms: Vec::new() }
    }

    pub fn push(&mut self, term: Term) {
        self.terms.push(term);
    }

    /// `Q psi^h + c` for a rotation `Q`: the reference plus `(Q - Id) psi^h`.
    pub fn rotated_reference(curve: &ArcLengthCurve, q: &Mat3, c: Vec3) -> Self {
        let mut f = Self::reference(curve);
        let m = mat_sub(q, &IDENTITY);
        let me1 = crate::math::mat_vec(&m, &E1);
        let one = Polynomial::constant(1.0);
        let x = Polynomial::monomial(1.0, 1);
        f.push(Term::new("rotation x1", Scale::new(1.0, 0, 0, 0), x, one.clone(), crate::jet::constant_vector(me1)));
        f.push(Term::new(
            "rotation gamma",
            Scale::new(1.0, 1, 0, 0),
            one.clone(),
            one.clone(),
            crate::jet::matrix_times(m, &curve.gamma_fn()),
        ));
        f.push(Term::new(
            "rotation normal",
            Scale::new(1.0, 0, 1, 0),
            one.clone(),
            Polynomial::monomial(1.0, 1),
            crate::jet::matrix_times(m, &curve.normal_fn()),
        ));
        f.push(Term::new("translation", Scale::new(1.0, 0, 0, 0), one.clone(), one, crate::jet::constant_vector(c)));
        f
    }

    fn partials(&self, sc: &Scaling, p: &Point) -> Partials {
        let mut d1 = ZERO3;
        let mut ds = ZERO3;
        let mut dt = ZERO3;
        for term in &self.terms {
            let c = term.scale.eval(sc.h, sc.delta, sc.eps);
            if c == 0.0 {
                continue;
            }
            let (v, dv) = (term.profile)(p.s);
            let (a, da) = (term.x1.eval(p.x1), term.dx1.eval(p.x1));
            let (q, dq) = (term.t.eval(p.t), term.dt.eval(p.t));
            axpy(&mut d1, c * da * q, &v);
            axpy(&mut ds, c * a * q, &dv);
            axpy(&mut dt, c * a * dq, &v);
        }
        (d1, ds, dt)
    }

    /// `y(x)`.
    pub fn eval(&self, regime: &ScalingRegime, h: f64, p: &Point) -> Result<Vec3> {
        let sc = Scaling::at(regime, h);
        let mut y = if self.base_included {
            self.curve.psi_h(h, sc.delta, p.x1, p.s, p.t)?
        } else {
            ZERO3
        };
        for term in &self.terms {
            let c = term.scale.eval(sc.h, sc.delta, sc.eps);
            let (v, _) = (term.profile)(p.s);
            axpy(&mut y, c * term.x1.eval(p.x1) * term.t.eval(p.t), &v);
        }
        Ok(y)
    }

    /// `(d1 y | ds y / (h - delta t k) | dt y / delta)`.
    pub fn rescaled_gradient(&self, regime: &ScalingRegime, h: f64, p: &Point) -> Result<Mat3> {
        let sc = Scaling::at(regime, h);
        self.curve.check_scaling(h, sc.delta)?;
        let frame = self.curve.frame(p.s)?;
        let (d1, ds, dt) = self.partials(&sc, p);
        let g = gradient_columns(&sc, &frame, p.t, &d1, &ds, &dt);
        Ok(if self.base_included { mat_add(&frame.r0, &g) } else { g })
    }

    /// `grad y R0^T - Id`, computed from the non-reference summands only.
    pub fn perturbation(&self, regime: &ScalingRegime, h: f64, p: &Point) -> Result<Mat3> {
        let sc = Scaling::at(regime, h);
        self.curve.check_scaling(h, sc.delta)?;
        let frame = self.curve.frame(p.s)?;
        let (d1, ds, dt) = self.partials(&sc, p);
        Ok(perturbation_from(&sc, &frame, p.t, &d1, &ds, &dt))
    }

    /// `(1 / (2 eps)) (P + P^T + P^T P)`, the scaled Green–Lagrange strain.
    pub fn strain_gl(&self, regime: &ScalingRegime, h: f64, p: &Point) -> Result<Mat3> {
        let eps = regime.eps(h);
        let pm = self.perturbation(regime, h, p)?;
        let pt = transpose(&pm);
        Ok(mat_scale(0.5 / eps, &mat_add(&mat_add(&pm, &pt), &mat_mul(&pt, &pm))))
    }

    /// `(1/eps) d1 (y_1 - x_1)`.
    pub fn observable_g(&self, regime: &ScalingRegime, h: f64, p: &Point) -> Result<f64> {
        check_point(p)?;
        let sc = Scaling::at(regime, h);
        let (d1, _, _) = self.partials(&sc, p);
        Ok(d1[0] / sc.eps)
    }

    /// `(delta / (h eps)) int ds(y - psi^h) . n dt`.
    pub fn observable_w(&self, regime: &ScalingRegime, h: f64, x1: f64, s: f64, nt: usize) -> Result<f64> {
        check_point(&Point::new(x1, s, 0.0))?;
        let sc = Scaling::at(regime, h);
        let n = self.curve.frame(s)?.n;
        let (tn, tw) = gauss_on(nt, -0.5, 0.5);
        let vals: Vec<f64> =
            tn.iter().zip(&tw).map(|(t, w)| w * dot(&self.partials(&sc, &Point::new(x1, s, *t)).1, &n)).collect();
        Ok(sc.delta / (h * sc.eps) * pairwise_sum(&vals))
    }

    /// `(1/h) ds w^h` by central differences of step `ds`, one-sided at the
    /// ends of `[0, 1]`.
    pub fn observable_b(&self, regime: &ScalingRegime, h: f64, x1: f64, s: f64, nt: usize, ds: f64) -> Result<f64> {
        check_point(&Point::new(x1, s, 0.0))?;
        let lo = (s - ds).max(0.0);
        let hi = (s + ds).min(1.0);
        let wl = self.observable_w(regime, h, x1, lo, nt)?;
        let wh = self.observable_w(regime, h, x1, hi, nt)?;
        Ok((wh - wl) / ((hi - lo) * h))
    }

    /// Moments of the tangential block `(e1 | tau)^T E (e1 | tau)` of
    /// [`Self::strain_gl`] over the thickness: `12 int t E_tan dt` and
    /// `int E_11 dt`, with `nt` Gauss nodes.
    pub fn strain_moments(
        &self,
        regime: &ScalingRegime,
        h: f64,
        x1: f64,
        s: f64,
        nt: usize,
    ) -> Result<StrainMoments> {
        let tau = self.curve.frame(s)?.tau;
        let (tn, tw) = gauss_on(nt, -0.5, 0.5);
        let mut first = [[0.0; 2]; 2];
        let mut mean11 = 0.0;
        for (t, w) in tn.iter().zip(&tw) {
            let e = self.strain_gl(regime, h, &Point::new(x1, s, *t))?;
            let basis = [E1, tau];
            for a in 0..2 {
                for b in 0..2 {
                    first[a][b] += 12.0 * w * t * dot(&basis[a], &crate::math::mat_vec(&e, &basis[b]));
                }
            }
            mean11 += w * e[0][0];
        }
        Ok(StrainMoments { first, mean11 })
    }

    /// `J^h(y) = int ((h - delta t k) / h) W(grad y R0^T)` on the reference domain.
    pub fn energy(
        &self,
        material: &MaterialModel,
        regime: &ScalingRegime,
        h: f64,
        grid: &QuadratureGrid,
    ) -> Result<f64> {
        let integrand = EnergyIntegrand::new(self, material, regime, h, grid)?;
        let slabs: Vec<f64> = (0..integrand.slab_count()).map(|i| integrand.slab(i)).collect();
        Ok(pairwise_sum(&slabs))
    }
}

/// Thickness moments of the scaled strain at one `(x1, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainMoments {
    /// `12 int t E_tan dt` in the basis `(e1, tau)`.
    pub first: [[f64; 2]; 2],
    /// `int E_11 dt`.
    pub mean11: f64,
}

fn check_point(p: &Point) -> Result<()> {
    if !(0.0..=1.0).contains(&p.s) {
        return Err(crate::Error::Domain { what: "arclength s", value: p.s });
    }
    if !(-0.5..=0.5).contains(&p.t) {
        return Err(crate::Error::Domain { what: "thickness coordinate t", value: p.t });
    }
    Ok(())
}

fn gradient_columns(sc: &Scaling, frame: &Frame, t: f64, d1: &Vec3, ds: &Vec3, dt: &Vec3) -> Mat3 {
    let jac = sc.h - sc.delta * t * frame.k;
    from_columns(d1, &crate::math::scale(1.0 / jac, ds), &crate::math::scale(1.0 / sc.delta, dt))
}

fn perturbation_from(sc: &Scaling, frame: &Frame, t: f64, d1: &Vec3, ds: &Vec3, dt: &Vec3) -> Mat3 {
    let jac = sc.h - sc.delta * t * frame.k;
    let c1 = crate::math::scale(1.0 / jac, ds);
    let c2 = crate::math::scale(1.0 / sc.delta, dt);
    let mut p = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            p[i][j] = d1[i] * E1[j] + c1[i] * frame.tau[j] + c2[i] * frame.n[j];
        }
    }
    p
}

/// The energy integrand split into slabs along `x1`, one per Gauss node.
/// Summing [`EnergyIntegrand::slab`] over all slabs in index order with
/// [`pairwise_sum`] gives [`DeformationField::energy`] bit for bit, however
/// the slabs are scheduled.
pub struct EnergyIntegrand<'a> {
    field: &'a DeformationField,
    material: MaterialModel,
    sc: Scaling,
    x1: (Vec<f64>, Vec<f64>),
    s_weights: Vec<f64>,
    frames: Vec<Frame>,
    t: (Vec<f64>, Vec<f64>),
    /// `[s][term]` profile values and derivatives.
    profiles: Vec<Vec<(Vec3, Vec3)>>,
    /// `[t][term]` thickness factors and derivatives.
    t_factors: Vec<Vec<(f64, f64)>>,
    coeffs: Vec<f64>,
}

impl<'a> EnergyIntegrand<'a> {
    pub fn new(
        field: &'a DeformationField,
        material: &MaterialModel,
        regime: &ScalingRegime,
        h: f64,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        regime.validate()?;
        let sc = Scaling::at(regime, h);
        field.curve.check_scaling(h, sc.delta)?;
        let x1 = grid.x1_rule(regime.length);
        let (s_nodes, s_weights) = grid.s_rule();
        let t = grid.t_rule();
        let frames: Vec<Frame> = s_nodes.iter().map(|s| field.curve.frame_unchecked(*s)).collect();
        let profiles = s_nodes.iter().map(|s| field.terms.iter().map(|term| (term.profile)(*s)).collect()).collect();
        let t_factors =
            t.0.iter().map(|tv| field.terms.iter().map(|term| (term.t.eval(*tv), term.dt.eval(*tv))).collect()).collect();
        let coeffs = field.terms.iter().map(|term| term.scale.eval(sc.h, sc.delta, sc.eps)).collect();
        Ok(EnergyIntegrand { field, material: *material, sc, x1, s_weights, frames, t, profiles, t_factors, coeffs })
    }

    pub fn slab_count(&self) -> usize {
        self.x1.0.len()
    }

    /// Contribution of the `i`-th `x1` node, weight included.
    pub fn slab(&self, i: usize) -> f64 {
        let x1 = self.x1.0[i];
        let terms = &self.field.terms;
        let a: Vec<(f64, f64)> = terms.iter().map(|term| (term.x1.eval(x1), term.dx1.eval(x1))).collect();
        let mut vals = Vec::with_capacity(self.frames.len() * self.t.0.len());
        for (si, frame) in self.frames.iter().enumerate() {
            for (ti, &t) in self.t.0.iter().enumerate() {
                let mut d1 = ZERO3;
                let mut ds = ZERO3;
                let mut dt = ZERO3;
                for k in 0..terms.len() {
                    let c = self.coeffs[k];
                    let (v, dv) = self.profiles[si][k];
                    let (q, dq) = self.t_factors[ti][k];
                    axpy(&mut d1, c * a[k].1 * q, &v);
                    axpy(&mut ds, c * a[k].0 * q, &dv);
                    axpy(&mut dt, c * a[k].0 * dq, &v);
                }
                let p = perturbation_from(&self.sc, frame, t, &d1, &ds, &dt);
                let jac = 1.0 - self.sc.delta / self.sc.h * t * frame.k;
                vals.push(self.s_weights[si] * self.t.1[ti] * jac * self.material.energy_density(&p));
            }
        }
        self.x1.1[i] * pairwise_sum(&vals)
    }
}

/// Sum of two vectors, re-exported for field builders.
pub fn vec_add(a: &Vec3, b: &Vec3) -> Vec3 {
    add(a, b)
}
