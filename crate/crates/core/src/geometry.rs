//! Arclength-parametrized cross-section curves `gamma(s) = (0, g2, g3)` on
//! `[0, 1]` with their moving frame and the derived scalars.
//!
//! The tangent angle is `theta(s) = theta0 + int_0^s k`, which is available
//! in closed form for every curvature law below; `gamma` and `int_0^s N` are
//! tabulated once at construction.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::jet::{scalar, vector, Jet, ScalarFn, VectorFn};
use crate::math::{abs, cos, from_columns, powi, sin, Mat3, Vec3, E1};
use crate::poly::Polynomial;
use crate::quadrature::{antiderivative, AntiderivativeTable};

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum Curvature {
    /// `k(s) = sum c_i s^i`.
    Polynomial(Polynomial),
    /// `k(s) = amplitude * cos(2 pi frequency s)`.
    Cosine { amplitude: f64, frequency: f64 },
    /// Zero on `[start, end]`; `amplitude * ((start - s) / start)^6` to the
    /// left and `amplitude * ((s - end) / (1 - end))^6` to the right.
    Plateau { start: f64, end: f64, amplitude: f64 },
}

impl Curvature {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Curvature::Polynomial(p) => p.eval(s),
            Curvature::Cosine { amplitude, frequency } => amplitude * cos(TWO_PI * frequency * s),
            Curvature::Plateau { start, end, amplitude } => {
                if s < *start {
                    amplitude * powi((start - s) / start, 6)
                } else if s > *end {
                    amplitude * powi((s - end) / (1.0 - end), 6)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Curvature::Polynomial(p) => p.derivative().eval(s),
            Curvature::Cosine { amplitude, frequency } => {
                -amplitude * TWO_PI * frequency * sin(TWO_PI * frequency * s)
            }
            Curvature::Plateau { start, end, amplitude } => {
                if s < *start {
                    -6.0 * amplitude * powi((start - s) / start, 5) / start
                } else if s > *end {
                    6.0 * amplitude * powi((s - end) / (1.0 - end), 5) / (1.0 - end)
                } else {
                    0.0
                }
            }
        }
    }

    /// `int_0^s k`.
    pub fn integral(&self, s: f64) -> f64 {
        match self {
            Curvature::Polynomial(p) => p.antiderivative().eval(s),
            Curvature::Cosine { amplitude, frequency } => {
                if *frequency == 0.0 {
                    amplitude * s
                } else {
                    amplitude * sin(TWO_PI * frequency * s) / (TWO_PI * frequency)
                }
            }
            Curvature::Plateau { start, end, amplitude } => {
                let left = |x: f64| amplitude * start / 7.0 * (1.0 - powi((start - x) / start, 7));
                if s <= *start {
                    left(s)
                } else if s <= *end {
                    left(*start)
                } else {
                    left(*start) + amplitude * (1.0 - end) / 7.0 * powi((s - end) / (1.0 - end), 7)
                }
            }
        }
    }

    /// Points where the law is only finitely smooth.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            Curvature::Plateau { start, end, .. } => vec![*start, *end],
            _ => Vec::new(),
        }
    }

    /// Maximal subintervals of `[0, 1]` on which `k` vanishes identically.
    pub fn zero_intervals(&self) -> Vec<(f64, f64)> {
        match self {
            Curvature::Polynomial(p) if p.is_zero() => vec![(0.0, 1.0)],
            Curvature::Cosine { amplitude, .. } if *amplitude == 0.0 => vec![(0.0, 1.0)],
            Curvature::Plateau { amplitude, .. } if *amplitude == 0.0 => vec![(0.0, 1.0)],
            Curvature::Plateau { start, end, .. } => vec![(*start, *end)],
            _ => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Curvature::Polynomial(p) if p.coeffs().iter().any(|c| !c.is_finite()) => {
                Err(config("curvature coefficients must be finite"))
            }
            Curvature::Cosine { amplitude, frequency } if !amplitude.is_finite() || !frequency.is_finite() => {
                Err(config("curvature amplitude and frequency must be finite"))
            }
            Curvature::Plateau { start, end, amplitude } => {
                if !(0.0 < *start && start < end && *end < 1.0) || !amplitude.is_finite() {
                    Err(config("plateau needs 0 < start < end < 1"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub tau: Vec3,
    pub n: Vec3,
    pub k: f64,
    /// `(e1 | tau | n)`.
    pub r0: Mat3,
}

/// `N = gamma . n`, `T = gamma . tau` and `int_0^s N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalars {
    pub n: f64,
    pub t: f64,
    pub int_n: f64,
}

struct Inner {
    curvature: Curvature,
    theta0: f64,
    gamma2: AntiderivativeTable,
    gamma3: AntiderivativeTable,
    int_n: AntiderivativeTable,
    max_abs_k: f64,
}

/// Cheap to clone; the tables are shared.
#[derive(Clone)]
pub struct ArcLengthCurve {
    inner: Arc<Inner>,
}

impl core::fmt::Debug for ArcLengthCurve {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ArcLengthCurve")
            .field("curvature", &self.inner.curvature)
            .field("theta0", &self.inner.theta0)
            .finish()
    }
}

impl ArcLengthCurve {
    pub fn new(curvature: Curvature, theta0: f64) -> Result<Self> {
        curvature.validate()?;
        if !theta0.is_finite() {
            return Err(config("theta0 must be finite"));
        }
        let breaks = curvature.breaks();
        let theta = |s: f64| theta0 + curvature.integral(s);
        let gamma2 = AntiderivativeTable::build(&|s| cos(theta(s)), &breaks, 1e-13)?;
        let gamma3 = AntiderivativeTable::build(&|s| sin(theta(s)), &breaks, 1e-13)?;
        let normal_scalar = |s: f64| {
            let th = theta(s);
            -gamma2.eval(s) * sin(th) + gamma3.eval(s) * cos(th)
        };
        let int_n = AntiderivativeTable::build(&normal_scalar, &breaks, 1e-13)?;
        let mut max_abs_k = match &curvature {
            Curvature::Cosine { amplitude, .. } | Curvature::Plateau { amplitude, .. } => abs(*amplitude),
            Curvature::Polynomial(_) => 0.0,
        };
        for i in 0..=4000 {
            max_abs_k = max_abs_k.max(abs(curvature.value(i as f64 / 4000.0)));
        }
        Ok(ArcLengthCurve {
            inner: Arc::new(Inner { curvature, theta0, gamma2, gamma3, int_n, max_abs_k }),
        })
    }

    /// `k = 0`, `gamma(s) = (0, s, 0)`.
    pub fn straight() -> Self {
        Self::new(Curvature::Polynomial(Polynomial::zero()), 0.0).expect("catalog curve")
    }

    /// `k = 1`, `gamma(s) = (0, sin s, 1 - cos s)`.
    pub fn unit_arc() -> Self {
        Self::new(Curvature::Polynomial(Polynomial::constant(1.0)), 0.0).expect("catalog curve")
    }

    /// `k(s) = cos(2 pi s)`, changing sign twice.
    pub fn signed_lobe() -> Self {
        Self::new(Curvature::Cosine { amplitude: 1.0, frequency: 1.0 }, 0.0).expect("catalog curve")
    }

    /// Curved ends around a straight middle section on `[0.35, 0.65]`.
    pub fn plateau() -> Self {
        Self::new(Curvature::Plateau { start: 0.35, end: 0.65, amplitude: 3.0 }, 0.0).expect("catalog curve")
    }

    pub fn curvature_law(&self) -> &Curvature {
        &self.inner.curvature
    }

    pub fn theta0(&self) -> f64 {
        self.inner.theta0
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.inner.max_abs_k
    }

    /// Finitely many sign changes of `k`, with `k` of one sign or identically
    /// zero between them. Polynomial and trigonometric laws have isolated
    /// zeros unless they vanish, and the plateau law is nonnegative, so every
    /// law this type can hold qualifies.
    pub fn satisfies_sign_hypothesis(&self) -> bool {
        true
    }

    pub fn zero_curvature_intervals(&self) -> Vec<(f64, f64)> {
        self.inner.curvature.zero_intervals()
    }

    pub fn breaks(&self) -> Vec<f64> {
        self.inner.curvature.breaks()
    }

    fn check(s: f64) -> Result<()> {
        if (0.0..=1.0).contains(&s) {
            Ok(())
        } else {
            Err(Error::Domain { what: "arclength s", value: s })
        }
    }

    /// `(theta, k, k')`.
    pub fn theta_jet(&self, s: f64) -> Jet {
        let c = &self.inner.curvature;
        Jet::new(self.inner.theta0 + c.integral(s), c.value(s), c.derivative(s))
    }

    pub fn curvature(&self, s: f64) -> Result<f64> {
        Self::check(s)?;
        Ok(self.inner.curvature.value(s))
    }

    pub fn frame(&self, s: f64) -> Result<Frame> {
        Self::check(s)?;
        Ok(self.frame_unchecked(s))
    }

    pub(crate) fn frame_unchecked(&self, s: f64) -> Frame {
        let th = self.theta_jet(s);
        let (c, sn) = (cos(th.v), sin(th.v));
        let tau = [0.0, c, sn];
        let n = [0.0, -sn, c];
        Frame { tau, n, k: th.d1, r0: from_columns(&E1, &tau, &n) }
    }

    pub fn gamma(&self, s: f64) -> Result<Vec3> {
        Self::check(s)?;
        Ok(self.gamma_unchecked(s))
    }

    fn gamma_unchecked(&self, s: f64) -> Vec3 {
        [0.0, self.inner.gamma2.eval(s), self.inner.gamma3.eval(s)]
    }

    pub fn scalars(&self, s: f64) -> Result<Scalars> {
        Self::check(s)?;
        let f = self.frame_unchecked(s);
        let g = self.gamma_unchecked(s);
        Ok(Scalars { n: crate::math::dot(&g, &f.n), t: crate::math::dot(&g, &f.tau), int_n: self.inner.int_n.eval(s) })
    }

    /// Rejects `(h, delta)` for which `h - delta t k(s)` can vanish on the
    /// closed domain.
    pub fn check_scaling(&self, h: f64, delta: f64) -> Result<()> {
        if !(h > 0.0 && delta > 0.0) {
            return Err(config("h and delta must be positive"));
        }
        if h - 0.5 * delta * self.inner.max_abs_k <= 0.0 {
            return Err(config("h - delta t k(s) vanishes on the scaled domain"));
        }
        Ok(())
    }

    /// `psi^h(x) = x1 e1 + h gamma(s) + delta t n(s)`.
    pub fn psi_h(&self, h: f64, delta: f64, x1: f64, s: f64, t: f64) -> Result<Vec3> {
        self.check_scaling(h, delta)?;
        Self::check(s)?;
        let g = self.gamma_unchecked(s);
        let f = self.frame_unchecked(s);
        Ok([x1, h * g[1] + delta * t * f.n[1], h * g[2] + delta * t * f.n[2]])
    }

    /// Antiderivative from zero of a function of `s`, tabulated with this
    /// curve's break points.
    pub fn antiderivative(&self, f: &ScalarFn) -> Result<ScalarFn> {
        antiderivative(f, &self.breaks())
    }

    pub fn curvature_fn(&self) -> ScalarFn {
        let c = self.clone();
        scalar(move |s| {
            let th = c.theta_jet(s);
            Jet::new(th.d1, th.d2, f64::NAN)
        })
    }

    /// `tau_2` (`i = 2`) or `tau_3` (`i = 3`).
    pub fn tau_component(&self, i: usize) -> ScalarFn {
        let c = self.clone();
        scalar(move |s| {
            let th = c.theta_jet(s);
            let (cs, sn) = (cos(th.v), sin(th.v));
            let k = th.d1;
            if i == 2 {
                Jet::new(cs, -sn * k, -cs * k * k - sn * th.d2)
            } else {
                Jet::new(sn, cs * k, -sn * k * k + cs * th.d2)
            }
        })
    }

    /// `gamma_2` (`i = 2`) or `gamma_3` (`i = 3`).
    pub fn gamma_component(&self, i: usize) -> ScalarFn {
        let c = self.clone();
        let tau = self.tau_component(i);
        scalar(move |s| {
            let t = tau(s);
            let g = c.gamma_unchecked(s);
            Jet::new(g[i - 1], t.v, t.d1)
        })
    }

    /// `N = gamma . n`.
    pub fn normal_scalar(&self) -> ScalarFn {
        let c = self.clone();
        scalar(move |s| {
            let th = c.theta_jet(s);
            let f = c.frame_unchecked(s);
            let g = c.gamma_unchecked(s);
            let n = crate::math::dot(&g, &f.n);
            let t = crate::math::dot(&g, &f.tau);
            Jet::new(n, -th.d1 * t, -th.d2 * t - th.d1 * (1.0 + th.d1 * n))
        })
    }

    /// `T = gamma . tau`.
    pub fn tangent_scalar(&self) -> ScalarFn {
        let c = self.clone();
        scalar(move |s| {
            let th = c.theta_jet(s);
            let f = c.frame_unchecked(s);
            let g = c.gamma_unchecked(s);
            let n = crate::math::dot(&g, &f.n);
            let t = crate::math::dot(&g, &f.tau);
            Jet::new(t, 1.0 + th.d1 * n, th.d2 * n - th.d1 * th.d1 * t)
        })
    }

    /// `int_0^s N`.
    pub fn int_normal_scalar(&self) -> ScalarFn {
        let c = self.clone();
        let n = self.normal_scalar();
        scalar(move |s| {
            let j = n(s);
            Jet::new(c.inner.int_n.eval(s), j.v, j.d1)
        })
    }

    pub fn tau_fn(&self) -> VectorFn {
        let c = self.clone();
        vector(move |s| {
            let f = c.frame_unchecked(s);
            (f.tau, crate::math::scale(f.k, &f.n))
        })
    }

    pub fn normal_fn(&self) -> VectorFn {
        let c = self.clone();
        vector(move |s| {
            let f = c.frame_unchecked(s);
            (f.n, crate::math::scale(-f.k, &f.tau))
        })
    }

    pub fn gamma_fn(&self) -> VectorFn {
        let c = self.clone();
        vector(move |s| (c.gamma_unchecked(s), c.frame_unchecked(s).tau))
    }

    /// `(0, -gamma_3, gamma_2)`, the quarter turn of `gamma`; its derivative is `n`.
    pub fn rotated_gamma_fn(&self) -> VectorFn {
        let c = self.clone();
        vector(move |s| {
            let g = c.gamma_unchecked(s);
            ([0.0, -g[2], g[1]], c.frame_unchecked(s).n)
        })
    }
}
