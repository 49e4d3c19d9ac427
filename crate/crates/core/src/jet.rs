//! Functions of the arclength parameter carried together with their
//! derivatives, so that fields built from them have exact partial
//! derivatives.

use alloc::sync::Arc;

use crate::math::Vec3;

/// Value with first and second derivative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet { v, d1, d2 }
    }

    pub const fn constant(v: f64) -> Self {
        Jet { v, d1: 0.0, d2: 0.0 }
    }

    pub fn scale(self, c: f64) -> Jet {
        Jet::new(c * self.v, c * self.d1, c * self.d2)
    }

    /// Jet of the derivative. Its second derivative is unknown and set to NaN
    /// so that accidental use is visible.
    pub fn shift(self) -> Jet {
        Jet::new(self.d1, self.d2, f64::NAN)
    }
}

impl core::ops::Add for Jet {
    type Output = Jet;

    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl core::ops::Sub for Jet {
    type Output = Jet;

    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

/// Leibniz rule.
impl core::ops::Mul for Jet {
    type Output = Jet;

    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }
}

/// Scalar function of `s` returning its 2-jet.
pub type ScalarFn = Arc<dyn Fn(f64) -> Jet + Send + Sync>;

/// Vector function of `s` returning value and first derivative.
pub type VectorFn = Arc<dyn Fn(f64) -> (Vec3, Vec3) + Send + Sync>;

pub fn scalar(f: impl Fn(f64) -> Jet + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

pub fn vector(f: impl Fn(f64) -> (Vec3, Vec3) + Send + Sync + 'static) -> VectorFn {
    Arc::new(f)
}

pub fn constant_scalar(c: f64) -> ScalarFn {
    scalar(move |_| Jet::constant(c))
}

pub fn constant_vector(v: Vec3) -> VectorFn {
    vector(move |_| (v, [0.0; 3]))
}

pub fn product(a: &ScalarFn, b: &ScalarFn) -> ScalarFn {
    let (a, b) = (a.clone(), b.clone());
    scalar(move |s| a(s) * b(s))
}

/// `f(s) v(s)`.
pub fn scalar_times_vector(f: &ScalarFn, v: &VectorFn) -> VectorFn {
    let (f, v) = (f.clone(), v.clone());
    vector(move |s| {
        let j = f(s);
        let (x, dx) = v(s);
        let mut val = [0.0; 3];
        let mut der = [0.0; 3];
        for i in 0..3 {
            val[i] = j.v * x[i];
            der[i] = j.d1 * x[i] + j.v * dx[i];
        }
        (val, der)
    })
}

/// `f(s) e` for a fixed vector `e`.
pub fn scalar_along(f: &ScalarFn, e: Vec3) -> VectorFn {
    let f = f.clone();
    vector(move |s| {
        let j = f(s);
        ([j.v * e[0], j.v * e[1], j.v * e[2]], [j.d1 * e[0], j.d1 * e[1], j.d1 * e[2]])
    })
}

pub fn sum_vectors(a: &VectorFn, b: &VectorFn) -> VectorFn {
    let (a, b) = (a.clone(), b.clone());
    vector(move |s| {
        let (x, dx) = a(s);
        let (y, dy) = b(s);
        (crate::math::add(&x, &y), crate::math::add(&dx, &dy))
    })
}

/// `a(s) . b(s)` with first derivative; the second derivative is NaN.
pub fn dot_vectors(a: &VectorFn, b: &VectorFn) -> ScalarFn {
    let (a, b) = (a.clone(), b.clone());
    scalar(move |s| {
        let (x, dx) = a(s);
        let (y, dy) = b(s);
        let v = crate::math::dot(&x, &y);
        let d1 = crate::math::dot(&dx, &y) + crate::math::dot(&x, &dy);
        Jet::new(v, d1, f64::NAN)
    })
}

/// `m v(s)` for a fixed matrix.
pub fn matrix_times(m: crate::math::Mat3, v: &VectorFn) -> VectorFn {
    let v = v.clone();
    vector(move |s| {
        let (x, dx) = v(s);
        (crate::math::mat_vec(&m, &x), crate::math::mat_vec(&m, &dx))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leibniz_rule() {
        // (s^2)(s^3) at s = 2
        let a = Jet::new(4.0, 4.0, 2.0);
        let b = Jet::new(8.0, 12.0, 12.0);
        let p = a * b;
        assert_eq!(p.v, 32.0);
        assert_eq!(p.d1, 80.0);
        assert_eq!(p.d2, 160.0);
    }
}
