//! Limit triples `(w, g, b)`, their admissible classes, the limit functional
//! and class-membership residuals.
//!
//! Fields of `(x1, s)` are kept separable, `sum_j a_j(x1) f_j(s)`, with
//! polynomial `a_j` and jet-valued `f_j`, so that every derivative used by the
//! recovery sequences is exact.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::fields::{LimitValue, ScalingRegime};
use crate::geometry::ArcLengthCurve;
use crate::jet::{constant_scalar, dot_vectors, scalar, scalar_times_vector, Jet, ScalarFn, VectorFn};
use crate::material::MaterialModel;
use crate::math::{cos, dot, pairwise_sum, powi, sin, sqrt, Vec3};
use crate::poly::Polynomial;
use crate::quadrature::gauss_on;

/// Scalar field `sum_j a_j(x1) f_j(s)`.
#[derive(Clone, Default)]
pub struct SepField {
    pub terms: Vec<(Polynomial, ScalarFn)>,
}

impl core::fmt::Debug for SepField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.terms.iter().map(|(p, _)| p)).finish()
    }
}

impl SepField {
    pub fn zero() -> Self {
        SepField { terms: Vec::new() }
    }

    pub fn single(a: Polynomial, f: ScalarFn) -> Self {
        SepField { terms: vec![(a, f)] }
    }

    pub fn push(&mut self, a: Polynomial, f: ScalarFn) {
        if !a.is_zero() {
            self.terms.push((a, f));
        }
    }

    pub fn extend(&mut self, other: &SepField) {
        for (a, f) in &other.terms {
            self.push(a.clone(), f.clone());
        }
    }

    pub fn scaled(&self, c: f64) -> SepField {
        SepField { terms: self.terms.iter().map(|(a, f)| (a.scaled(c), f.clone())).collect() }
    }

    /// `d1^order` applied to the `x1` factors.
    pub fn d1(&self, order: usize) -> SepField {
        let mut out = SepField::zero();
        for (a, f) in &self.terms {
            let mut d = a.clone();
            for _ in 0..order {
                d = d.derivative();
            }
            out.push(d, f.clone());
        }
        out
    }

    fn combine(&self, x1: f64, s: f64, pick: impl Fn(Jet) -> f64, order: usize) -> f64 {
        self.terms
            .iter()
            .map(|(a, f)| {
                let mut p = a.clone();
                for _ in 0..order {
                    p = p.derivative();
                }
                p.eval(x1) * pick(f(s))
            })
            .sum()
    }

    pub fn eval(&self, x1: f64, s: f64) -> f64 {
        self.combine(x1, s, |j| j.v, 0)
    }

    pub fn ds(&self, x1: f64, s: f64) -> f64 {
        self.combine(x1, s, |j| j.d1, 0)
    }

    pub fn dss(&self, x1: f64, s: f64) -> f64 {
        self.combine(x1, s, |j| j.d2, 0)
    }

    pub fn dx1(&self, x1: f64, s: f64) -> f64 {
        self.combine(x1, s, |j| j.v, 1)
    }

    pub fn dx1x1(&self, x1: f64, s: f64) -> f64 {
        self.combine(x1, s, |j| j.v, 2)
    }
}

/// Vector field `sum_j a_j(x1) V_j(s)`.
#[derive(Clone, Default)]
pub struct VecSepField {
    pub terms: Vec<(Polynomial, VectorFn)>,
}

impl core::fmt::Debug for VecSepField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.terms.iter().map(|(p, _)| p)).finish()
    }
}

impl VecSepField {
    pub fn push(&mut self, a: Polynomial, v: VectorFn) {
        if !a.is_zero() {
            self.terms.push((a, v));
        }
    }

    /// Value and `s`-derivative after applying `d1^order`.
    pub fn eval(&self, x1: f64, s: f64, order: usize) -> (Vec3, Vec3) {
        let mut val = [0.0; 3];
        let mut der = [0.0; 3];
        for (a, v) in &self.terms {
            let mut p = a.clone();
            for _ in 0..order {
                p = p.derivative();
            }
            let c = p.eval(x1);
            let (x, dx) = v(s);
            crate::math::axpy(&mut val, c, &x);
            crate::math::axpy(&mut der, c, &dx);
        }
        (val, der)
    }
}

/// Functions of `s` available for the bending field `b` and generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SBasis {
    Constant,
    /// `s^p`.
    Power(u32),
    /// `cos(2 pi m s)`.
    Cos(u32),
    /// `sin(2 pi m s)`.
    Sin(u32),
}

impl SBasis {
    pub fn function(self) -> ScalarFn {
        let two_pi = 2.0 * core::f64::consts::PI;
        match self {
            SBasis::Constant => constant_scalar(1.0),
            SBasis::Power(p) => scalar(move |s| {
                let p = p as i32;
                let v = powi(s, p);
                let d1 = if p >= 1 { p as f64 * powi(s, p - 1) } else { 0.0 };
                let d2 = if p >= 2 { (p * (p - 1)) as f64 * powi(s, p - 2) } else { 0.0 };
                Jet::new(v, d1, d2)
            }),
            SBasis::Cos(m) => scalar(move |s| {
                let w = two_pi * m as f64;
                Jet::new(cos(w * s), -w * sin(w * s), -w * w * cos(w * s))
            }),
            SBasis::Sin(m) => scalar(move |s| {
                let w = two_pi * m as f64;
                Jet::new(sin(w * s), w * cos(w * s), -w * w * sin(w * s))
            }),
        }
    }
}

/// Admissible class of limit triples, determined by the limits of
/// `delta_h / h^2` (lambda) and `delta_h / h^3` (mu).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassTag {
    /// lambda = mu = infinity.
    AInfInf,
    /// 0 < lambda < infinity, mu = infinity.
    ALambdaInf { lambda: f64 },
    /// lambda = 0, mu = infinity.
    AZeroInf,
    /// lambda = 0, 0 < mu < infinity.
    AZeroMu { mu: f64 },
    /// lambda = mu = 0.
    AZeroZero,
}

impl ClassTag {
    pub fn for_regime(regime: &ScalingRegime) -> Result<Self> {
        Ok(match (regime.lambda_class(), regime.mu_class()) {
            (LimitValue::Infinite, _) => ClassTag::AInfInf,
            (LimitValue::Finite(lambda), _) => ClassTag::ALambdaInf { lambda },
            (LimitValue::Zero, LimitValue::Infinite) => ClassTag::AZeroInf,
            (LimitValue::Zero, LimitValue::Finite(mu)) => ClassTag::AZeroMu { mu },
            (LimitValue::Zero, LimitValue::Zero) => ClassTag::AZeroZero,
        })
    }

    /// Classes with `lambda = 0` force `w'' = 0`.
    pub fn requires_affine_twist(&self) -> bool {
        matches!(self, ClassTag::AZeroInf | ClassTag::AZeroMu { .. } | ClassTag::AZeroZero)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassTag::AInfInf => "A_inf_inf",
            ClassTag::ALambdaInf { .. } => "A_lambda_inf",
            ClassTag::AZeroInf => "A_0_inf",
            ClassTag::AZeroMu { .. } => "A_0_mu",
            ClassTag::AZeroZero => "A_0_0",
        }
    }
}

/// `q = int_0^s b`, `v = int_0^s q n`, and `int_0^s v . tau`, for a separable
/// `b`. `v` has vanishing first component.
#[derive(Debug, Clone)]
pub struct BendingProfile {
    pub q: SepField,
    pub v: VecSepField,
    pub v_tau: SepField,
}

/// The bending profile of `b`: `ds v . tau = 0`, `ds (ds v . n) = b`, with all
/// constants of integration zero.
pub fn solve_bending_profile(b: &SepField, curve: &ArcLengthCurve) -> Result<BendingProfile> {
    let mut q = SepField::zero();
    let mut v = VecSepField::default();
    let mut v_tau = SepField::zero();
    let normal = curve.normal_fn();
    let tau = curve.tau_fn();
    for (a, beta) in &b.terms {
        let qj = curve.antiderivative(beta)?;
        let integrand = scalar_times_vector(&qj, &normal);
        let v2 = curve.antiderivative(&component(&integrand, 1))?;
        let v3 = curve.antiderivative(&component(&integrand, 2))?;
        let vj = vector_from_components(v2, v3);
        let uj = curve.antiderivative(&dot_vectors(&vj, &tau))?;
        q.push(a.clone(), qj);
        v.push(a.clone(), vj);
        v_tau.push(a.clone(), uj);
    }
    Ok(BendingProfile { q, v, v_tau })
}

fn component(v: &VectorFn, i: usize) -> ScalarFn {
    let v = v.clone();
    scalar(move |s| {
        let (x, dx) = v(s);
        Jet::new(x[i], dx[i], f64::NAN)
    })
}

fn vector_from_components(a: ScalarFn, b: ScalarFn) -> VectorFn {
    crate::jet::vector(move |s| {
        let (x, y) = (a(s), b(s));
        ([0.0, x.v, y.v], [0.0, x.d1, y.d1])
    })
}

/// Data generating an isometric displacement `phi`: `q0`, `b`, the
/// `x1`-dependent offset `phi_bar0 = (phi_2, phi_3)(x1, 0)` and
/// `phi1_0 = phi_1(x1, 0)`, together with the twist `w`.
#[derive(Debug, Clone)]
pub struct PhiGenerator {
    pub w: Polynomial,
    pub q0: Polynomial,
    pub b: SepField,
    pub phi_bar0: [Polynomial; 2],
    pub phi1_0: Polynomial,
}

/// An isometry `phi` with `e(phi) = diag(mu g, 0)` and `ds(ds phi . n) = b`.
#[derive(Debug, Clone)]
pub struct Isometry {
    pub phi1: SepField,
    /// `(0, phi_2, phi_3)`.
    pub phi_bar: VecSepField,
    /// `ds phi . n`.
    pub q: SepField,
}

/// Potentials `(u, z)` with `ds^2 u = k z`; they generate `g = d1^2 u`.
#[derive(Debug, Clone)]
pub struct GPotential {
    pub u: SepField,
    pub z: SepField,
}

impl GPotential {
    /// `u = a1 int N + a2 gamma_2 + a3 gamma_3 + a4`,
    /// `z = -a1 T - a2 tau_3 + a3 tau_2`.
    pub fn from_generator(curve: &ArcLengthCurve, alphas: &[Polynomial; 4]) -> Self {
        let mut u = SepField::zero();
        u.push(alphas[0].clone(), curve.int_normal_scalar());
        u.push(alphas[1].clone(), curve.gamma_component(2));
        u.push(alphas[2].clone(), curve.gamma_component(3));
        u.push(alphas[3].clone(), constant_scalar(1.0));
        let mut z = SepField::zero();
        z.push(alphas[0].scaled(-1.0), curve.tangent_scalar());
        z.push(alphas[1].scaled(-1.0), curve.tau_component(3));
        z.push(alphas[2].clone(), curve.tau_component(2));
        GPotential { u, z }
    }
}

#[derive(Debug, Clone)]
pub struct LimitTriple {
    pub class: ClassTag,
    pub w: Polynomial,
    pub g: SepField,
    pub b: SepField,
    /// Coefficients `alpha_1..alpha_4` when `g` comes from the generator form.
    pub generator: Option<[Polynomial; 4]>,
    pub potential: Option<GPotential>,
    pub isometry: Option<Isometry>,
}

/// `a1'' int N + a2'' gamma_2 + a3'' gamma_3 + a4''`.
fn generator_g(curve: &ArcLengthCurve, alphas: &[Polynomial; 4]) -> SepField {
    let d2 = |p: &Polynomial| p.derivative().derivative();
    let mut g = SepField::zero();
    g.push(d2(&alphas[0]), curve.int_normal_scalar());
    g.push(d2(&alphas[1]), curve.gamma_component(2));
    g.push(d2(&alphas[2]), curve.gamma_component(3));
    g.push(d2(&alphas[3]), constant_scalar(1.0));
    g
}

impl LimitTriple {
    /// Triples of the classes with `mu = infinity`, where `g` is given by the
    /// generator `alpha_1..alpha_4`. For `A_lambda_inf` the `int N`
    /// coefficient is pinned to `w'' / lambda`, so `alpha_1` must vanish
    /// there and in `A_inf_inf`.
    pub fn from_generator(
        class: ClassTag,
        curve: &ArcLengthCurve,
        w: Polynomial,
        alphas: [Polynomial; 4],
        b: SepField,
    ) -> Result<Self> {
        let mut g = generator_g(curve, &alphas);
        match class {
            ClassTag::AInfInf | ClassTag::ALambdaInf { .. } if !alphas[0].derivative().derivative().is_zero() => {
                return Err(config("alpha_1 is not free in this class"));
            }
            ClassTag::ALambdaInf { lambda } => {
                g.push(w.derivative().derivative().scaled(1.0 / lambda), curve.int_normal_scalar());
            }
            ClassTag::AZeroInf if !w.derivative().derivative().is_zero() => {
                return Err(config("class A_0_inf needs an affine twist w"));
            }
            ClassTag::AZeroMu { .. } | ClassTag::AZeroZero => {
                return Err(config("use the isometry constructors for classes with finite mu"));
            }
            _ => {}
        }
        Ok(LimitTriple { class, w, g, b, generator: Some(alphas), potential: None, isometry: None })
    }

    /// `A_0_0` triple: `g = d1^2 u` from the potentials and `b` from the
    /// isometry data (whose `phi_1` must not depend on `x1`).
    pub fn zero_zero(curve: &ArcLengthCurve, potential: GPotential, phi: &PhiGenerator) -> Result<Self> {
        let mut t = make_triple_from_phi(phi, curve, 0.0)?;
        t.g = potential.u.d1(2);
        t.potential = Some(potential);
        Ok(t)
    }
}

/// Builds the triple `(w, g, b)` of an isometry: `q = q0 + int b`,
/// `phi_bar = phi_bar0 + int q n`, `phi_1 = phi1_0 - int d1 phi_bar . tau`
/// and `g = d1 phi_1 / mu`. With `mu = 0` the construction requires
/// `d1 phi_1 = 0` and leaves `g = 0`.
pub fn make_triple_from_phi(phi: &PhiGenerator, curve: &ArcLengthCurve, mu: f64) -> Result<LimitTriple> {
    if !phi.w.derivative().derivative().is_zero() {
        return Err(config("classes with lambda = 0 need an affine twist w"));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(config("mu must be finite and nonnegative"));
    }
    let profile = solve_bending_profile(&phi.b, curve)?;
    let mut q = SepField::zero();
    q.push(phi.q0.clone(), constant_scalar(1.0));
    q.extend(&profile.q);

    let mut phi_bar = VecSepField::default();
    phi_bar.push(phi.phi_bar0[0].clone(), crate::jet::constant_vector([0.0, 1.0, 0.0]));
    phi_bar.push(phi.phi_bar0[1].clone(), crate::jet::constant_vector([0.0, 0.0, 1.0]));
    // int_0^s n = (0, -gamma_3, gamma_2)
    phi_bar.push(phi.q0.clone(), curve.rotated_gamma_fn());
    for t in &profile.v.terms {
        phi_bar.push(t.0.clone(), t.1.clone());
    }

    // d1 phi_bar . tau integrates to: c' . gamma + q0' (-int N) + sum a_j' v_tau_j
    let mut phi1 = SepField::zero();
    phi1.push(phi.phi1_0.clone(), constant_scalar(1.0));
    phi1.push(phi.phi_bar0[0].derivative().scaled(-1.0), curve.gamma_component(2));
    phi1.push(phi.phi_bar0[1].derivative().scaled(-1.0), curve.gamma_component(3));
    phi1.push(phi.q0.derivative(), curve.int_normal_scalar());
    phi1.extend(&profile.v_tau.d1(1).scaled(-1.0));

    let g = if mu > 0.0 {
        phi1.d1(1).scaled(1.0 / mu)
    } else {
        let d = phi1.d1(1);
        let mut worst = 0.0f64;
        for i in 0..=16 {
            for j in 0..=16 {
                worst = worst.max(crate::math::abs(d.eval(i as f64 / 16.0, j as f64 / 16.0)));
            }
        }
        if worst > 1e-10 {
            return Err(Error::Construction { what: "d1 phi_1 must vanish when mu = 0", residual: worst });
        }
        SepField::zero()
    };
    let class = if mu > 0.0 { ClassTag::AZeroMu { mu } } else { ClassTag::AZeroZero };
    Ok(LimitTriple {
        class,
        w: phi.w.clone(),
        g,
        b: phi.b.clone(),
        generator: None,
        potential: None,
        isometry: Some(Isometry { phi1, phi_bar, q }),
    })
}

/// `(1/24) int Q2(s, w', b) + (1/2) E int g^2` over `(0, L) x (0, 1)`.
pub fn j_limit(triple: &LimitTriple, material: &MaterialModel, curve: &ArcLengthCurve, length: f64, nx1: usize, ns: usize) -> f64 {
    let (xn, xw) = gauss_on(nx1, 0.0, length);
    let (sn, sw) = gauss_on(ns, 0.0, 1.0);
    let e = material.modulus_e();
    let dw = triple.w.derivative();
    let frames: Vec<_> = sn.iter().map(|s| curve.frame_unchecked(*s)).collect();
    let mut slabs = Vec::with_capacity(nx1);
    for (x, wx) in xn.iter().zip(&xw) {
        let a = dw.eval(*x);
        let vals: Vec<f64> = sn
            .iter()
            .zip(&sw)
            .zip(&frames)
            .map(|((s, ws), fr)| {
                let q2 = material.q2(&fr.r0, a, triple.b.eval(*x, *s)).value;
                let g = triple.g.eval(*x, *s);
                ws * (q2 / 24.0 + 0.5 * e * g * g)
            })
            .collect();
        slabs.push(wx * pairwise_sum(&vals));
    }
    pairwise_sum(&slabs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub class: ClassTag,
    pub residuals: Vec<Residual>,
}

/// Residuals below this count as satisfied constraints.
pub const MEMBER_TOL: f64 = 1e-8;

impl ResidualReport {
    pub fn is_member(&self) -> bool {
        self.residuals.iter().all(|r| r.value <= MEMBER_TOL)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }
}

/// A triple given only through point evaluations; derivatives are taken by
/// finite differences.
pub struct RawTriple<'a> {
    pub w: &'a dyn Fn(f64) -> f64,
    pub g: &'a dyn Fn(f64, f64) -> f64,
    pub b: &'a dyn Fn(f64, f64) -> f64,
}

/// Point-evaluation interface shared by exact and raw triples.
trait TripleSource {
    fn w2(&self, x1: f64) -> f64;
    fn g(&self, x1: f64, s: f64) -> f64;
    fn g_s(&self, x1: f64, s: f64) -> f64;
    fn b_11(&self, x1: f64, s: f64) -> f64;
}

impl TripleSource for LimitTriple {
    fn w2(&self, x1: f64) -> f64 {
        self.w.derivative().derivative().eval(x1)
    }
    fn g(&self, x1: f64, s: f64) -> f64 {
        self.g.eval(x1, s)
    }
    fn g_s(&self, x1: f64, s: f64) -> f64 {
        self.g.ds(x1, s)
    }
    fn b_11(&self, x1: f64, s: f64) -> f64 {
        self.b.dx1x1(x1, s)
    }
}

const FD_S: f64 = 1e-4;
const FD_X: f64 = 1e-3;

impl TripleSource for RawTriple<'_> {
    fn w2(&self, x1: f64) -> f64 {
        ((self.w)(x1 + FD_X) - 2.0 * (self.w)(x1) + (self.w)(x1 - FD_X)) / (FD_X * FD_X)
    }
    fn g(&self, x1: f64, s: f64) -> f64 {
        (self.g)(x1, s)
    }
    fn g_s(&self, x1: f64, s: f64) -> f64 {
        ((self.g)(x1, s + FD_S) - (self.g)(x1, s - FD_S)) / (2.0 * FD_S)
    }
    fn b_11(&self, x1: f64, s: f64) -> f64 {
        ((self.b)(x1 + FD_X, s) - 2.0 * (self.b)(x1, s) + (self.b)(x1 - FD_X, s)) / (FD_X * FD_X)
    }
}

/// Residuals of the constraints defining `class`, as `L^2` norms over
/// `(0, L) x (0, 1)` on a Gauss grid. Generator constraints are tested by
/// least-squares projection of `ds g` (or of the isometry compatibility
/// field) onto the admissible span at each `x1` node.
pub fn class_residuals(
    triple: &LimitTriple,
    curve: &ArcLengthCurve,
    length: f64,
    nx1: usize,
    ns: usize,
) -> Result<ResidualReport> {
    let mut report = residuals_for(triple, triple.class, curve, length, nx1, ns)?;
    if let Some(p) = &triple.potential {
        let (xn, xw) = gauss_on(nx1, 0.0, length);
        let (sn, sw) = gauss_on(ns, 0.0, 1.0);
        let k = curve.curvature_fn();
        let u11 = p.u.d1(2);
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for (x, wx) in xn.iter().zip(&xw) {
            for (s, ws) in sn.iter().zip(&sw) {
                let a = p.u.dss(*x, *s) - k(*s).v * p.z.eval(*x, *s);
                let b = u11.eval(*x, *s) - triple.g.eval(*x, *s);
                r1 += wx * ws * a * a;
                r2 += wx * ws * b * b;
            }
        }
        report.residuals.push(Residual { name: "potential_ss", value: sqrt(r1) });
        report.residuals.push(Residual { name: "potential_g", value: sqrt(r2) });
    }
    if let Some(iso) = &triple.isometry {
        report.residuals.extend(isometry_residuals(iso, triple, curve, length, nx1, ns));
    }
    Ok(report)
}

/// Residuals for point-evaluated data tested against a class.
pub fn class_residuals_raw(
    raw: &RawTriple<'_>,
    class: ClassTag,
    curve: &ArcLengthCurve,
    length: f64,
    nx1: usize,
    ns: usize,
) -> Result<ResidualReport> {
    residuals_for(raw, class, curve, length, nx1, ns)
}

fn residuals_for(
    src: &dyn TripleSource,
    class: ClassTag,
    curve: &ArcLengthCurve,
    length: f64,
    nx1: usize,
    ns: usize,
) -> Result<ResidualReport> {
    let (xn, xw) = gauss_on(nx1, 0.0, length);
    let (sn, sw) = gauss_on(ns, 0.0, 1.0);
    let tau2 = curve.tau_component(2);
    let tau3 = curve.tau_component(3);
    let nsc = curve.normal_scalar();
    let basis_tau: Vec<Vec<f64>> = vec![sn.iter().map(|s| tau2(*s).v).collect(), sn.iter().map(|s| tau3(*s).v).collect()];
    let n_col: Vec<f64> = sn.iter().map(|s| nsc(*s).v).collect();
    let mut residuals = Vec::new();

    if class.requires_affine_twist() {
        let v: f64 = xn.iter().zip(&xw).map(|(x, w)| w * src.w2(*x) * src.w2(*x)).sum();
        residuals.push(Residual { name: "w''", value: sqrt(v) });
    }

    match class {
        ClassTag::AInfInf | ClassTag::ALambdaInf { .. } | ClassTag::AZeroInf => {
            let mut basis = basis_tau.clone();
            if class == ClassTag::AZeroInf {
                basis.push(n_col.clone());
            }
            let mut total = 0.0;
            for (x, wx) in xn.iter().zip(&xw) {
                let pinned = match class {
                    ClassTag::ALambdaInf { lambda } => src.w2(*x) / lambda,
                    _ => 0.0,
                };
                let vals: Vec<f64> = sn.iter().zip(&n_col).map(|(s, n)| src.g_s(*x, *s) - pinned * n).collect();
                total += wx * projection_residual2(&vals, &basis, &sw);
            }
            residuals.push(Residual { name: "generator", value: sqrt(total) });
        }
        ClassTag::AZeroMu { mu } => {
            residuals.push(Residual { name: "isometry", value: compatibility_residual(src, mu, curve, &xn, &xw, &sn, &sw)? });
        }
        ClassTag::AZeroZero => {
            residuals.push(Residual { name: "isometry", value: compatibility_residual(src, 0.0, curve, &xn, &xw, &sn, &sw)? });
            residuals.push(Residual { name: "plateau_affine", value: plateau_residual(src, curve, &xn, &xw, ns) });
        }
    }
    Ok(ResidualReport { class, residuals })
}

/// A pair `(g, b)` comes from an isometry iff
/// `mu ds g + d1^2 v . tau` lies in `span{tau_2, tau_3, N}` for each `x1`,
/// where `v` is the bending profile of `b`.
fn compatibility_residual(
    src: &dyn TripleSource,
    mu: f64,
    curve: &ArcLengthCurve,
    xn: &[f64],
    xw: &[f64],
    sn: &[f64],
    sw: &[f64],
) -> Result<f64> {
    let tau2 = curve.tau_component(2);
    let tau3 = curve.tau_component(3);
    let nsc = curve.normal_scalar();
    let basis: Vec<Vec<f64>> = vec![
        sn.iter().map(|s| tau2(*s).v).collect(),
        sn.iter().map(|s| tau3(*s).v).collect(),
        sn.iter().map(|s| nsc(*s).v).collect(),
    ];
    let normal = curve.normal_fn();
    let tau = curve.tau_fn();
    let mut total = 0.0;
    for (x, wx) in xn.iter().zip(xw) {
        let x = *x;
        let b11 = |s: f64| src.b_11(x, s);
        let q = crate::quadrature::AntiderivativeTable::build(&b11, &curve.breaks(), 1e-12)?;
        let v2 = crate::quadrature::AntiderivativeTable::build(&|s| q.eval(s) * normal(s).0[1], &curve.breaks(), 1e-12)?;
        let v3 = crate::quadrature::AntiderivativeTable::build(&|s| q.eval(s) * normal(s).0[2], &curve.breaks(), 1e-12)?;
        let vals: Vec<f64> = sn
            .iter()
            .map(|s| mu * src.g_s(x, *s) + dot(&[0.0, v2.eval(*s), v3.eval(*s)], &tau(*s).0))
            .collect();
        total += wx * projection_residual2(&vals, &basis, sw);
    }
    Ok(sqrt(total))
}

/// Distance of `g(x1, .)` from affine functions on the intervals where the
/// curvature vanishes.
fn plateau_residual(src: &dyn TripleSource, curve: &ArcLengthCurve, xn: &[f64], xw: &[f64], ns: usize) -> f64 {
    let mut total = 0.0;
    for (a, b) in curve.zero_curvature_intervals() {
        let (sn, sw) = gauss_on(ns, a, b);
        let basis = vec![vec![1.0; ns], sn.clone()];
        for (x, wx) in xn.iter().zip(xw) {
            let vals: Vec<f64> = sn.iter().map(|s| src.g(*x, *s)).collect();
            total += wx * projection_residual2(&vals, &basis, &sw);
        }
    }
    sqrt(total)
}

/// Squared weighted `L^2` norm of what is left of `vals` after projecting
/// onto the span of `basis` (modified Gram–Schmidt, dependent columns dropped).
fn projection_residual2(vals: &[f64], basis: &[Vec<f64>], w: &[f64]) -> f64 {
    let ip = |a: &[f64], b: &[f64]| pairwise_sum(&a.iter().zip(b).zip(w).map(|((x, y), wi)| wi * x * y).collect::<Vec<_>>());
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let scale = basis.iter().map(|c| sqrt(ip(c, c))).fold(0.0f64, f64::max);
    for col in basis {
        let mut c = col.clone();
        for _ in 0..2 {
            for q in &ortho {
                let r = ip(&c, q);
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= r * qi;
                }
            }
        }
        let nrm = sqrt(ip(&c, &c));
        if nrm > 1e-10 * scale.max(1e-300) {
            ortho.push(c.iter().map(|x| x / nrm).collect());
        }
    }
    let mut r = vals.to_vec();
    for _ in 0..2 {
        for q in &ortho {
            let c = ip(&r, q);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
    }
    ip(&r, &r)
}

/// Defining identities of a stored isometry.
fn isometry_residuals(
    iso: &Isometry,
    triple: &LimitTriple,
    curve: &ArcLengthCurve,
    length: f64,
    nx1: usize,
    ns: usize,
) -> Vec<Residual> {
    let (xn, xw) = gauss_on(nx1, 0.0, length);
    let (sn, sw) = gauss_on(ns, 0.0, 1.0);
    let mu = match triple.class {
        ClassTag::AZeroMu { mu } => mu,
        _ => 0.0,
    };
    let mut r = [0.0; 4];
    for (x, wx) in xn.iter().zip(&xw) {
        for (s, ws) in sn.iter().zip(&sw) {
            let fr = curve.frame_unchecked(*s);
            let (_, dphi) = iso.phi_bar.eval(*x, *s, 0);
            let (d1phi, _) = iso.phi_bar.eval(*x, *s, 1);
            let tangential = dot(&dphi, &fr.tau);
            let bending = iso.q.ds(*x, *s) - triple.b.eval(*x, *s);
            let q_match = dot(&dphi, &fr.n) - iso.q.eval(*x, *s);
            let shear = iso.phi1.ds(*x, *s) + dot(&d1phi, &fr.tau);
            let axial = iso.phi1.dx1(*x, *s) - mu * triple.g.eval(*x, *s);
            let w = wx * ws;
            r[0] += w * tangential * tangential;
            r[1] += w * (bending * bending + q_match * q_match);
            r[2] += w * shear * shear;
            r[3] += w * axial * axial;
        }
    }
    vec![
        Residual { name: "phi_tangential", value: sqrt(r[0]) },
        Residual { name: "phi_bending", value: sqrt(r[1]) },
        Residual { name: "phi_shear", value: sqrt(r[2]) },
        Residual { name: "phi_axial", value: sqrt(r[3]) },
    ]
}

/// `b` as `sum_j a_j(x1) f_j(s)` from basis functions.
pub fn separable(terms: &[(Polynomial, SBasis)]) -> SepField {
    let mut f = SepField::zero();
    for (a, basis) in terms {
        f.push(a.clone(), basis.function());
    }
    f
}
