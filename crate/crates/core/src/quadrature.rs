//! Gauss rules, tensor quadrature grids and tabulated antiderivatives.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config, Result};
use crate::jet::{scalar, Jet, ScalarFn};
use crate::math::{abs, cos};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "a Gauss rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if abs(dz) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule mapped to `[a, b]`.
pub fn gauss_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    (x.iter().map(|xi| c + r * xi).collect(), w.iter().map(|wi| r * wi).collect())
}

/// Tensor Gauss grid on `(0, L) x (0, 1) x (-1/2, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureGrid {
    pub nx1: usize,
    pub ns: usize,
    pub nt: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { nx1: 32, ns: 64, nt: 8 }
    }
}

impl QuadratureGrid {
    pub fn new(nx1: usize, ns: usize, nt: usize) -> Result<Self> {
        if nx1 == 0 || ns == 0 || nt == 0 {
            return Err(config("quadrature sizes must be positive"));
        }
        Ok(QuadratureGrid { nx1, ns, nt })
    }

    pub fn x1_rule(&self, length: f64) -> (Vec<f64>, Vec<f64>) {
        gauss_on(self.nx1, 0.0, length)
    }

    pub fn s_rule(&self) -> (Vec<f64>, Vec<f64>) {
        gauss_on(self.ns, 0.0, 1.0)
    }

    pub fn t_rule(&self) -> (Vec<f64>, Vec<f64>) {
        gauss_on(self.nt, -0.5, 0.5)
    }
}

const KRONROD_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_W: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS7_W: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate of `int_a^b f` and its difference from the
/// embedded 7-point Gauss rule.
pub fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = KRONROD_W[7] * fc;
    let mut g = GAUSS7_W[3] * fc;
    for i in 0..7 {
        let f1 = f(c - r * KRONROD_X[i]);
        let f2 = f(c + r * KRONROD_X[i]);
        k += KRONROD_W[i] * (f1 + f2);
        if i % 2 == 1 {
            g += GAUSS7_W[i / 2] * (f1 + f2);
        }
    }
    (r * k, abs(r * (k - g)))
}

const CHEB_DEGREE: usize = 24;
const MAX_DEPTH: usize = 14;

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    /// Value of the antiderivative at `a`.
    base: f64,
    /// Chebyshev coefficients of the antiderivative on the panel, zero at `a`.
    coeffs: Vec<f64>,
}

/// Antiderivative `F(s) = int_0^s f` on `[0, 1]`, stored as panel-local
/// Chebyshev series built adaptively and cross-checked with Gauss–Kronrod.
#[derive(Debug, Clone)]
pub struct AntiderivativeTable {
    panels: Vec<Panel>,
}

impl AntiderivativeTable {
    /// `breaks` are interior points where `f` may lose smoothness.
    pub fn build(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64) -> Result<Self> {
        let mut edges = vec![0.0];
        for &b in breaks {
            if b > 0.0 && b < 1.0 {
                edges.push(b);
            }
        }
        edges.push(1.0);
        let mut panels = Vec::new();
        for w in edges.windows(2) {
            subdivide(f, w[0], w[1], tol, 0, &mut panels)?;
        }
        let mut base = 0.0;
        for p in panels.iter_mut() {
            p.base = base;
            base += clenshaw(&p.coeffs, 1.0);
        }
        Ok(AntiderivativeTable { panels })
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    pub fn eval(&self, s: f64) -> f64 {
        let idx = match self.panels.binary_search_by(|p| {
            if s < p.a {
                core::cmp::Ordering::Greater
            } else if s > p.b {
                core::cmp::Ordering::Less
            } else {
                core::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => i,
            Err(i) => i.min(self.panels.len() - 1),
        };
        let p = &self.panels[idx];
        let x = (2.0 * s - p.a - p.b) / (p.b - p.a);
        p.base + clenshaw(&p.coeffs, x)
    }
}

fn subdivide(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    out: &mut Vec<Panel>,
) -> Result<()> {
    let n = CHEB_DEGREE;
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let pi = core::f64::consts::PI;
    let samples: Vec<f64> = (0..n).map(|j| f(c + r * cos(pi * (j as f64 + 0.5) / n as f64))).collect();
    let mut fc = vec![0.0; n];
    for (k, ck) in fc.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, fj) in samples.iter().enumerate() {
            acc += fj * cos(pi * k as f64 * (j as f64 + 0.5) / n as f64);
        }
        *ck = 2.0 * acc / n as f64;
    }
    fc[0] *= 0.5;
    let scale = fc.iter().fold(1.0f64, |m, x| m.max(abs(*x)));
    let tail = fc[n - 3..].iter().fold(0.0f64, |m, x| m.max(abs(*x)));

    let mut ic = vec![0.0; n + 1];
    for k in 1..=n {
        let prev = if k == 1 { 2.0 * fc[0] } else { fc[k - 1] };
        let next = if k + 1 < n { fc[k + 1] } else { 0.0 };
        ic[k] = r * (prev - next) / (2.0 * k as f64);
    }
    // zero at the left end, where T_k(-1) = (-1)^k
    ic[0] = -(1..=n).map(|k| if k % 2 == 0 { ic[k] } else { -ic[k] }).sum::<f64>();
    let integral = clenshaw(&ic, 1.0);
    let (kr, _) = gauss_kronrod(f, a, b);
    let agree = abs(kr - integral) <= tol * (b - a).max(1e-3);

    if (tail <= 1e-14 * scale && agree) || depth >= MAX_DEPTH {
        if !agree && depth >= MAX_DEPTH {
            return Err(crate::Error::Numerical { what: "antiderivative table", residual: abs(kr - integral) });
        }
        out.push(Panel { a, b, base: 0.0, coeffs: ic });
        return Ok(());
    }
    subdivide(f, a, c, tol, depth + 1, out)?;
    subdivide(f, c, b, tol, depth + 1, out)
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for ck in c.iter().skip(1).rev() {
        let t = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = t;
    }
    x * b1 - b2 + c[0]
}

/// Antiderivative of a jet-valued function as a jet-valued function:
/// the value comes from the table, the derivatives from `f` itself.
pub fn antiderivative(f: &ScalarFn, breaks: &[f64]) -> Result<ScalarFn> {
    let g = f.clone();
    let table = AntiderivativeTable::build(&|s| g(s).v, breaks, 1e-13)?;
    let f = f.clone();
    Ok(scalar(move |s| {
        let j = f(s);
        Jet::new(table.eval(s), j.v, j.d1)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sin;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 8, 32, 64] {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * crate::math::powi(*xi, p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p} {q} {exact}");
            }
        }
    }

    #[test]
    fn kronrod_integrates_sine() {
        let (v, err) = gauss_kronrod(&|x| sin(x), 0.0, 1.0);
        assert!((v - (1.0 - cos(1.0))).abs() < 1e-15);
        assert!(err < 1e-10);
    }

    #[test]
    fn table_reproduces_closed_form_antiderivative() {
        let t = AntiderivativeTable::build(&|s| cos(7.0 * s), &[], 1e-13).unwrap();
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            assert!((t.eval(s) - sin(7.0 * s) / 7.0).abs() < 1e-14);
        }
    }

    #[test]
    fn table_handles_kinks_at_breaks() {
        let f = |s: f64| if s < 0.4 { 0.0 } else { (s - 0.4) * (s - 0.4) };
        let t = AntiderivativeTable::build(&f, &[0.4], 1e-13).unwrap();
        let exact = |s: f64| if s < 0.4 { 0.0 } else { crate::math::powi(s - 0.4, 3) / 3.0 };
        for i in 0..=50 {
            let s = i as f64 / 50.0;
            assert!((t.eval(s) - exact(s)).abs() < 1e-15);
        }
    }
}
