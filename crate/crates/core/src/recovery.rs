//! Recovery sequences: explicit deformations `y^h` whose rescaled energy
//! converges to the limit functional, one construction per scaling regime.
//!
//! Each builder lists the summands of `y^h - psi^h` with their
//! `(h, delta, eps)` prefactors; see [`crate::fields`] for how they are
//! differentiated and integrated.

use alloc::vec::Vec;

use crate::error::{config, Result};
use crate::fields::{DeformationField, Point, Scale, ScalingRegime, Term};
use crate::geometry::ArcLengthCurve;
use crate::jet::{
    constant_vector, dot_vectors, matrix_times, product, scalar, scalar_along, scalar_times_vector, vector,
    ScalarFn, VectorFn,
};
use crate::limit::{
    make_triple_from_phi, separable, solve_bending_profile, BendingProfile, ClassTag, GPotential, LimitTriple,
    PhiGenerator, SBasis, SepField,
};
use crate::material::MaterialModel;
use crate::math::{from_columns, mat_vec, pairwise_sum, scale, sqrt, Mat3, Vec3, E1};
use crate::poly::Polynomial;
use crate::quadrature::QuadratureGrid;

/// The regime used for each construction: `delta = h^p`, `eps = delta^2`.
pub fn regime_presets(step: u8) -> Result<ScalingRegime> {
    let p = match step {
        1 => 1.5,
        2 => 2.0,
        3 => 2.5,
        4 => 3.0,
        5 => 4.0,
        _ => return Err(config("recovery steps are numbered 1 to 5")),
    };
    ScalingRegime::new(1.0, 1.0, p, 1.0, 2.0 * p)
}

/// Class of limit triples handled by each construction.
pub fn step_for_class(class: &ClassTag) -> u8 {
    match class {
        ClassTag::AInfInf => 1,
        ClassTag::ALambdaInf { .. } => 2,
        ClassTag::AZeroInf => 3,
        ClassTag::AZeroMu { .. } => 4,
        ClassTag::AZeroZero => 5,
    }
}

/// Everything a construction needs besides the regime.
#[derive(Debug, Clone)]
pub struct RecoveryInputs {
    pub triple: LimitTriple,
    pub material: MaterialModel,
    pub curve: ArcLengthCurve,
    /// Matrix with zero first column realizing Young's modulus.
    pub f_matrix: Mat3,
    /// Bending profile of `b`.
    pub bending: BendingProfile,
}

impl RecoveryInputs {
    pub fn prepare(triple: LimitTriple, material: MaterialModel, curve: &ArcLengthCurve) -> Result<Self> {
        let bending = solve_bending_profile(&triple.b, curve)?;
        Ok(RecoveryInputs { f_matrix: material.matrix_f(), triple, material, curve: curve.clone(), bending })
    }

    /// Minimizer `sigma(x1, s)` of the cross-sectional relaxation for
    /// `(w'(x1), b(x1, s))`.
    pub fn sigma_at(&self, x1: f64, s: f64) -> Result<Vec3> {
        let fr = self.curve.frame(s)?;
        Ok(self.material.q2(&fr.r0, self.triple.w.derivative().eval(x1), self.triple.b.eval(x1, s)).sigma)
    }

    /// `2 sigma_1 e1 + 2 sigma_2 tau + sigma_3 n` for unit `(a, b)`.
    fn relaxation_profile(&self, a: f64, b: f64) -> VectorFn {
        let curve = self.curve.clone();
        let material = self.material;
        vector(move |s| {
            let fr = curve.frame_unchecked(s);
            let kn = scale(fr.k, &fr.n);
            let mkt = scale(-fr.k, &fr.tau);
            let r0p = from_columns(&[0.0; 3], &kn, &mkt);
            let (sg, dsg) = material.q2_sigma_derivative(&fr.r0, &r0p, a, b);
            let mut v = [0.0; 3];
            let mut d = [0.0; 3];
            for i in 0..3 {
                v[i] = 2.0 * sg[0] * E1[i] + 2.0 * sg[1] * fr.tau[i] + sg[2] * fr.n[i];
                d[i] = 2.0 * dsg[0] * E1[i]
                    + 2.0 * dsg[1] * fr.tau[i]
                    + 2.0 * sg[1] * kn[i]
                    + dsg[2] * fr.n[i]
                    + sg[2] * mkt[i];
            }
            (v, d)
        })
    }
}

fn one() -> Polynomial {
    Polynomial::constant(1.0)
}

fn t_lin() -> Polynomial {
    Polynomial::monomial(1.0, 1)
}

/// `t^2 / 2 - 1/24`, the profile with zero mean over the thickness.
fn t_relax() -> Polynomial {
    Polynomial::new([-1.0 / 24.0, 0.0, 0.5])
}

fn shifted(f: &ScalarFn) -> ScalarFn {
    let f = f.clone();
    scalar(move |s| f(s).shift())
}

fn e_i(i: usize) -> Vec3 {
    let mut e = [0.0; 3];
    e[i] = 1.0;
    e
}

struct Builder<'a> {
    inputs: &'a RecoveryInputs,
    terms: Vec<Term>,
}

impl<'a> Builder<'a> {
    fn new(inputs: &'a RecoveryInputs) -> Self {
        Builder { inputs, terms: Vec::new() }
    }

    fn add(&mut self, label: &'static str, sc: Scale, x1: Polynomial, t: Polynomial, profile: VectorFn) {
        if !x1.is_zero() && sc.c != 0.0 {
            self.terms.push(Term::new(label, sc, x1, t, profile));
        }
    }

    fn curve(&self) -> &ArcLengthCurve {
        &self.inputs.curve
    }

    /// `F int_0^s G tau` with derivative `G F tau`.
    fn f_integral(&self, g: &ScalarFn) -> Result<VectorFn> {
        let c = self.curve();
        let i2 = c.antiderivative(&product(g, &c.tau_component(2)))?;
        let i3 = c.antiderivative(&product(g, &c.tau_component(3)))?;
        let f = self.inputs.f_matrix;
        Ok(vector(move |s| {
            let (a, b) = (i2(s), i3(s));
            (mat_vec(&f, &[0.0, a.v, b.v]), mat_vec(&f, &[0.0, a.d1, b.d1]))
        }))
    }

    /// `eps F (h int_0^s g tau + delta t g n)` scaled by `h^a delta^b eps^e`
    /// on top of `eps`.
    fn f_corrector(&mut self, g: &SepField, extra: (i32, i32, i32)) -> Result<()> {
        let fn_ = matrix_times(self.inputs.f_matrix, &self.curve().normal_fn());
        let (a, b, e) = extra;
        for (x, gj) in &g.terms {
            let integral = self.f_integral(gj)?;
            self.add("F int g tau", Scale::new(1.0, 1 + a, b, 1 + e), x.clone(), one(), integral);
            self.add("F g n", Scale::new(1.0, a, 1 + b, 1 + e), x.clone(), t_lin(), scalar_times_vector(gj, &fn_));
        }
        Ok(())
    }

    /// `(eps/delta) w (h rot(gamma) - delta t tau)`.
    fn twist(&mut self, w: &Polynomial) {
        let c = self.curve().clone();
        self.add("twist", Scale::new(1.0, 1, -1, 1), w.clone(), one(), c.rotated_gamma_fn());
        self.add("twist t tau", Scale::new(-1.0, 0, 0, 1), w.clone(), t_lin(), c.tau_fn());
    }

    /// `-(h eps/delta) w' (delta t T - h int N) e1`.
    fn twist_warping(&mut self, w: &Polynomial) {
        let c = self.curve().clone();
        let dw = w.derivative();
        self.add("warping T", Scale::new(-1.0, 1, 0, 1), dw.clone(), t_lin(), scalar_along(&c.tangent_scalar(), E1));
        self.add("warping int N", Scale::new(1.0, 2, -1, 1), dw, one(), scalar_along(&c.int_normal_scalar(), E1));
    }

    /// `-(eps^2 / (2 delta^2)) w^2 (h gamma + delta t n)`.
    fn twist_quadratic(&mut self, w: &Polynomial) {
        let c = self.curve().clone();
        let w2 = w.mul(w);
        self.add("twist^2 gamma", Scale::new(-0.5, 1, -2, 2), w2.clone(), one(), c.gamma_fn());
        self.add("twist^2 n", Scale::new(-0.5, 0, -1, 2), w2, t_lin(), c.normal_fn());
    }

    /// `-t h eps q tau + (h^2 eps/delta) v` for `q = ds v . n`.
    fn bending(&mut self, q: &SepField, v: &[(Polynomial, VectorFn)]) {
        let tau = self.curve().tau_fn();
        for (x, qj) in &q.terms {
            self.add("bending t q tau", Scale::new(-1.0, 1, 0, 1), x.clone(), t_lin(), scalar_times_vector(qj, &tau));
        }
        for (x, vj) in v {
            self.add("bending v", Scale::new(1.0, 2, -1, 1), x.clone(), one(), vj.clone());
        }
    }

    /// `-eps delta (t^2/2 - 1/24) (2 sigma_1 e1 + 2 sigma_2 tau + sigma_3 n)`.
    fn relaxation(&mut self) {
        let inputs = self.inputs;
        let pa = inputs.relaxation_profile(1.0, 0.0);
        let pb = inputs.relaxation_profile(0.0, 1.0);
        self.add("relaxation w'", Scale::new(-1.0, 0, 1, 1), inputs.triple.w.derivative(), t_relax(), pa);
        for (x, beta) in &inputs.triple.b.terms {
            self.add("relaxation b", Scale::new(-1.0, 0, 1, 1), x.clone(), t_relax(), scalar_times_vector(beta, &pb));
        }
    }

    /// Generator part `alpha_2, alpha_3, alpha_4` of the first construction.
    fn generator_translations(&mut self, alphas: &[Polynomial; 4]) {
        let c = self.curve().clone();
        for i in [2usize, 3] {
            let a = &alphas[i - 1];
            let da = a.derivative();
            // n_2 = -tau_3, n_3 = tau_2
            let n_i: VectorFn = {
                let (tj, sign) = if i == 2 { (c.tau_component(3), -1.0) } else { (c.tau_component(2), 1.0) };
                scalar_along(&tj, scale(sign, &E1))
            };
            self.add("alpha' gamma e1", Scale::new(1.0, 0, 0, 1), da.clone(), one(), scalar_along(&c.gamma_component(i), E1));
            self.add("alpha' t n e1", Scale::new(1.0, -1, 1, 1), da, t_lin(), n_i);
            self.add("alpha e", Scale::new(-1.0, -1, 0, 1), a.clone(), one(), constant_vector(e_i(i - 1)));
        }
        self.add("alpha4' e1", Scale::new(1.0, 0, 0, 1), alphas[3].derivative(), one(), constant_vector(E1));
    }

    /// `(h^3 eps/delta) (u - (delta/h) t d1 v . n) e1` with `ds u = -d1 v . tau`.
    fn axial_corrector(&mut self) {
        let bend = &self.inputs.bending;
        let normal = self.curve().normal_fn();
        let u_terms: Vec<_> = bend.v_tau.terms.iter().map(|(x, u)| (x.derivative().scaled(-1.0), u.clone())).collect();
        for (x, u) in u_terms {
            self.add("axial u", Scale::new(1.0, 3, -1, 1), x, one(), scalar_along(&u, E1));
        }
        let v_terms: Vec<_> = bend.v.terms.iter().map(|(x, v)| (x.derivative(), v.clone())).collect();
        for (x, v) in v_terms {
            self.add("axial t v.n", Scale::new(-1.0, 2, 0, 1), x, t_lin(), scalar_along(&dot_vectors(&v, &normal), E1));
        }
    }

    /// Terms built from a stored isometry `phi`.
    fn isometry(&mut self) -> Result<()> {
        let iso = self.inputs.triple.isometry.clone().ok_or_else(|| config("this construction needs isometry data"))?;
        let normal = self.curve().normal_fn();
        for (x, p1) in &iso.phi1.terms {
            self.add("phi1 e1", Scale::new(1.0, 3, -1, 1), x.clone(), one(), scalar_along(p1, E1));
        }
        self.bending(&iso.q, &iso.phi_bar.terms);
        for (x, v) in &iso.phi_bar.terms {
            self.add("phi t d1 phi.n", Scale::new(-1.0, 2, 0, 1), x.derivative(), t_lin(), scalar_along(&dot_vectors(v, &normal), E1));
        }
        Ok(())
    }

    fn finish(self) -> DeformationField {
        let mut f = DeformationField::reference(&self.inputs.curve);
        f.terms = self.terms;
        f
    }
}

fn check_regime(step: u8, inputs: &RecoveryInputs, regime: &ScalingRegime) -> Result<()> {
    let class = ClassTag::for_regime(regime)?;
    if step_for_class(&class) != step {
        return Err(config("the scaling regime does not match this construction"));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let ok = match (class, inputs.triple.class) {
        (ClassTag::ALambdaInf { lambda: a }, ClassTag::ALambdaInf { lambda: b }) => close(a, b),
        (ClassTag::AZeroMu { mu: a }, ClassTag::AZeroMu { mu: b }) => close(a, b),
        (a, b) => core::mem::discriminant(&a) == core::mem::discriminant(&b),
    };
    if !ok {
        return Err(config("the limit triple belongs to a different class than the regime"));
    }
    Ok(())
}

/// `y^h` for the construction `step` (1 to 5).
pub fn build_recovery(step: u8, inputs: &RecoveryInputs, regime: &ScalingRegime) -> Result<DeformationField> {
    check_regime(step, inputs, regime)?;
    let triple = &inputs.triple;
    let mut b = Builder::new(inputs);
    let w = triple.w.clone();
    match step {
        1..=3 => {
            let alphas = triple.generator.clone().ok_or_else(|| config("this construction needs generator data"))?;
            b.generator_translations(&alphas);
            let mut g_alpha = SepField::zero();
            let curve = inputs.curve.clone();
            let d2 = |p: &Polynomial| p.derivative().derivative();
            g_alpha.push(d2(&alphas[1]), curve.gamma_component(2));
            g_alpha.push(d2(&alphas[2]), curve.gamma_component(3));
            g_alpha.push(d2(&alphas[3]), crate::jet::constant_scalar(1.0));
            if step == 3 {
                g_alpha.push(d2(&alphas[0]), curve.int_normal_scalar());
                let a1 = &alphas[0];
                let int_n = curve.int_normal_scalar();
                b.add("alpha1' int N e1", Scale::new(1.0, 0, 0, 1), a1.derivative(), one(), scalar_along(&int_n, E1));
                b.add("alpha1' t T e1", Scale::new(-1.0, -1, 1, 1), a1.derivative(), t_lin(), scalar_along(&curve.tangent_scalar(), E1));
                b.add("alpha1 rot gamma", Scale::new(1.0, -1, 0, 1), a1.clone(), one(), curve.rotated_gamma_fn());
                b.add("alpha1 t tau", Scale::new(-1.0, -2, 1, 1), a1.clone(), t_lin(), curve.tau_fn());
            }
            b.f_corrector(&g_alpha, (0, 0, 0))?;
            b.twist(&w);
            b.twist_warping(&w);
            let bend = inputs.bending.clone();
            b.bending(&bend.q, &bend.v.terms);
            b.relaxation();
            b.twist_quadratic(&w);
            if step == 2 {
                let w2 = w.derivative().derivative();
                let g_pinned = SepField::single(w2, curve.int_normal_scalar());
                // (h^2 eps / delta) F (h w'' int (int N) tau + delta t w'' (int N) n)
                b.f_corrector(&g_pinned, (2, -1, 0))?;
            }
            if step >= 2 {
                b.axial_corrector();
            }
        }
        4 | 5 => {
            if step == 5 {
                if !inputs.curve.satisfies_sign_hypothesis() {
                    return Err(config("the curvature needs finitely many sign changes"));
                }
                let pot = triple.potential.clone().ok_or_else(|| config("this construction needs potentials (u, z)"))?;
                potential_terms(&mut b, &pot.u, &pot.z);
            }
            b.f_corrector(&triple.g, (0, 0, 0))?;
            b.twist(&w);
            b.twist_warping(&w);
            b.isometry()?;
            b.relaxation();
            b.twist_quadratic(&w);
        }
        _ => return Err(config("recovery steps are numbered 1 to 5")),
    }
    Ok(b.finish())
}

/// `eps (d1 u + (delta/h) t d1 z) e1 - (eps/h)(ds u tau + z n)
///  + (eps delta/h^2) t (k ds u + ds z) tau`.
fn potential_terms(b: &mut Builder<'_>, u: &SepField, z: &SepField) {
    let c = b.curve().clone();
    let tau = c.tau_fn();
    let normal = c.normal_fn();
    let k = c.curvature_fn();
    for (x, uj) in &u.terms {
        let du = shifted(uj);
        b.add("u' e1", Scale::new(1.0, 0, 0, 1), x.derivative(), one(), scalar_along(uj, E1));
        b.add("u_s tau", Scale::new(-1.0, -1, 0, 1), x.clone(), one(), scalar_times_vector(&du, &tau));
        b.add("t k u_s tau", Scale::new(1.0, -2, 1, 1), x.clone(), t_lin(), scalar_times_vector(&product(&du, &k), &tau));
    }
    for (x, zj) in &z.terms {
        b.add("z' t e1", Scale::new(1.0, -1, 1, 1), x.derivative(), t_lin(), scalar_along(zj, E1));
        b.add("z n", Scale::new(-1.0, -1, 0, 1), x.clone(), one(), scalar_times_vector(zj, &normal));
        b.add("t z_s tau", Scale::new(1.0, -2, 1, 1), x.clone(), t_lin(), scalar_times_vector(&shifted(zj), &tau));
    }
}


/// Reference nonzero triple for each construction, with `b = 1` and the
/// generator `alpha_4 = x1^2 / 2` (so `g = 1` away from the isometry
/// classes).
///
/// * 1: `w = x1`.
/// * 2: `w = x1 + x1^2 / 2`, which makes the pinned `w'' int N / lambda`
///   term active.
/// * 3: `w = x1`, `alpha_1 = (x1^2 - x1) / 2`. This `alpha_1` has zero mean
///   derivative on `(0, 1)`, which removes the `w' alpha_1'` cross term of
///   order `h^(1/2)` from the energy; other choices converge at that rate.
/// * 4: `w = x1`, `phi_1(x1, 0) = x1` with `mu = 1`.
/// * 5: `w = x1` and the potential `u = x1^2 / 2`.
pub fn sample_triple(step: u8, curve: &ArcLengthCurve) -> Result<LimitTriple> {
    let regime = regime_presets(step)?;
    let class = ClassTag::for_regime(&regime)?;
    let p = |c: &[f64]| Polynomial::new(c.to_vec());
    let b = separable(&[(p(&[1.0]), SBasis::Constant)]);
    let a4 = p(&[0.0, 0.0, 0.5]);
    let zero = Polynomial::zero;
    match step {
        1 => LimitTriple::from_generator(class, curve, p(&[0.0, 1.0]), [zero(), zero(), zero(), a4], b),
        2 => LimitTriple::from_generator(class, curve, p(&[0.0, 1.0, 0.5]), [zero(), zero(), zero(), a4], b),
        3 => LimitTriple::from_generator(class, curve, p(&[0.0, 1.0]), [p(&[0.0, -0.5, 0.5]), zero(), zero(), a4], b),
        4 => {
            let gen = PhiGenerator { w: p(&[0.0, 1.0]), q0: zero(), b, phi_bar0: [zero(), zero()], phi1_0: p(&[0.0, 1.0]) };
            make_triple_from_phi(&gen, curve, 1.0)
        }
        _ => {
            let gen = PhiGenerator { w: p(&[0.0, 1.0]), q0: zero(), b, phi_bar0: [zero(), zero()], phi1_0: zero() };
            let pot = GPotential::from_generator(curve, &[zero(), zero(), zero(), a4]);
            LimitTriple::zero_zero(curve, pot, &gen)
        }
    }
}

/// `L^2` distances of the observables of `y^h` to the limit triple:
/// `g^h` to `g` on `(0, L) x (0, 1) x (-1/2, 1/2)`, and `w^h` to `w` and
/// `(1/h) ds w^h` to `b` on `(0, L) x (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableErrors {
    pub g: f64,
    pub w: f64,
    pub b: f64,
}

/// Central-difference step used for `(1/h) ds w^h`.
pub const OBSERVABLE_DS: f64 = 1e-4;

pub fn observable_errors(
    field: &DeformationField,
    triple: &LimitTriple,
    regime: &ScalingRegime,
    h: f64,
    grid: &QuadratureGrid,
) -> Result<ObservableErrors> {
    let (xn, xw) = grid.x1_rule(regime.length);
    let (sn, sw) = grid.s_rule();
    let (tn, tw) = grid.t_rule();
    let (mut eg, mut ew, mut eb) = (Vec::new(), Vec::new(), Vec::new());
    for (x, wx) in xn.iter().zip(&xw) {
        let w = triple.w.eval(*x);
        for (s, ws) in sn.iter().zip(&sw) {
            let g = triple.g.eval(*x, *s);
            for (t, wt) in tn.iter().zip(&tw) {
                let d = field.observable_g(regime, h, &Point::new(*x, *s, *t))? - g;
                eg.push(wx * ws * wt * d * d);
            }
            let d = field.observable_w(regime, h, *x, *s, grid.nt)? - w;
            ew.push(wx * ws * d * d);
            let d = field.observable_b(regime, h, *x, *s, grid.nt, OBSERVABLE_DS)? - triple.b.eval(*x, *s);
            eb.push(wx * ws * d * d);
        }
    }
    Ok(ObservableErrors { g: sqrt(pairwise_sum(&eg)), w: sqrt(pairwise_sum(&ew)), b: sqrt(pairwise_sum(&eb)) })
}
