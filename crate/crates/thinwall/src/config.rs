//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment, lists are comma separated.
//! Keys not given fall back to the defaults of [`RunConfig::default`]; the
//! triple falls back to the sample triple of the configured step.
//!
//! ```text
//! curve.kind = unit_arc        # straight | unit_arc | signed_lobe | plateau | polynomial
//! curve.k_coeffs = 1, 0.5      # polynomial curvature, ascending powers of s
//! curve.theta0 = 0
//! material.lambda = 1
//! material.mu = 1
//! step = 1                     # recovery construction, 1 to 5
//! regime.L = 1                 # delta = c_delta h^p_delta, eps = c_eps h^q_eps
//! regime.c_delta = 1
//! regime.p_delta = 1.5
//! regime.c_eps = 1
//! regime.q_eps = 3
//! quad.nx1 = 32
//! quad.ns = 64
//! quad.nt = 8
//! h_list = 0.2, 0.1, 0.05, 0.025
//! eps_list = 0.2, 0.1, 0.05, 0.025
//! mesh = 64x16
//! output = sweep.csv
//! triple.w_coeffs = 0, 1       # polynomials in x1, ascending powers
//! triple.alpha1_coeffs = 0     # ... up to alpha4
//! triple.q0_coeffs = 0
//! triple.phi1_coeffs = 0, 1    # phi_1(x1, 0), classes with finite mu
//! triple.phibar2_coeffs = 0    # phi_bar(x1, 0)
//! triple.phibar3_coeffs = 0
//! triple.b = 1:0:1; 0.5:1:cos1 # sum of coef * x1^deg * f(s), f in 1 | s^n | cosM | sinM
//! triple.g = 1:0:s^2           # only for class-check: test a raw g instead
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thinwall_core::limit::{separable, SBasis, SepField};
use thinwall_core::recovery::regime_presets;
use thinwall_core::{ArcLengthCurve, Curvature, MaterialModel, Polynomial, QuadratureGrid, ScalingRegime};

/// A configuration problem, with the offending key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// One `coef:x1_degree:basis` summand of a separable field.
#[derive(Debug, Clone, PartialEq)]
pub struct SepTerm {
    pub coef: f64,
    pub degree: u32,
    pub basis: SBasis,
}

/// Limit triple as configured. Unset parts are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripleSpec {
    pub w: Option<Vec<f64>>,
    pub alphas: [Option<Vec<f64>>; 4],
    pub q0: Option<Vec<f64>>,
    pub phi1: Option<Vec<f64>>,
    pub phibar: [Option<Vec<f64>>; 2],
    pub b: Option<Vec<SepTerm>>,
    pub g: Option<Vec<SepTerm>>,
}

impl TripleSpec {
    /// True if no key of the triple was given.
    pub fn is_empty(&self) -> bool {
        *self == TripleSpec::default()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub curve: ArcLengthCurve,
    pub material: MaterialModel,
    pub step: u8,
    /// `None` means the preset of `step`.
    pub regime: Option<ScalingRegime>,
    pub quad: QuadratureGrid,
    pub h_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub mesh: (usize, usize),
    pub output: Option<PathBuf>,
    pub triple: TripleSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            curve: ArcLengthCurve::unit_arc(),
            material: MaterialModel::default(),
            step: 1,
            regime: None,
            quad: QuadratureGrid::default(),
            h_list: vec![0.2, 0.1, 0.05, 0.025],
            eps_list: vec![0.2, 0.1, 0.05, 0.025],
            mesh: (64, 16),
            output: None,
            triple: TripleSpec::default(),
        }
    }
}

impl RunConfig {
    /// The configured regime, or the preset of the step.
    pub fn regime(&self) -> Result<ScalingRegime, ConfigError> {
        match self.regime {
            Some(r) => Ok(r),
            None => regime_presets(self.step).map_err(|e| ConfigError::new("step", e.to_string())),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = entries(text)?;
        let mut cfg = RunConfig::default();
        let get = |k: &str| entries.get(k).map(String::as_str);

        if let Some(kind) = get("curve.kind") {
            let theta0 = match get("curve.theta0") {
                Some(v) => scalar("curve.theta0", v)?,
                None => 0.0,
            };
            cfg.curve = match kind {
                "straight" | "unit_arc" | "signed_lobe" | "plateau" if get("curve.k_coeffs").is_some() => {
                    return Err(ConfigError::new("curve.k_coeffs", "only used with curve.kind = polynomial"));
                }
                "straight" => ArcLengthCurve::new(Curvature::Polynomial(Polynomial::zero()), theta0),
                "unit_arc" => ArcLengthCurve::new(Curvature::Polynomial(Polynomial::constant(1.0)), theta0),
                "signed_lobe" => ArcLengthCurve::new(ArcLengthCurve::signed_lobe().curvature_law().clone(), theta0),
                "plateau" => ArcLengthCurve::new(ArcLengthCurve::plateau().curvature_law().clone(), theta0),
                "polynomial" => {
                    let c = list("curve.k_coeffs", get("curve.k_coeffs").ok_or_else(|| {
                        ConfigError::new("curve.k_coeffs", "required for a polynomial curve")
                    })?)?;
                    ArcLengthCurve::new(Curvature::Polynomial(Polynomial::new(c)), theta0)
                }
                other => return Err(ConfigError::new("curve.kind", format!("unknown curve {other:?}"))),
            }
            .map_err(|e| ConfigError::new("curve", e.to_string()))?;
        } else if get("curve.k_coeffs").is_some() || get("curve.theta0").is_some() {
            return Err(ConfigError::new("curve.kind", "required when other curve keys are set"));
        }

        if get("material.lambda").is_some() || get("material.mu").is_some() {
            let lambda = scalar("material.lambda", get("material.lambda").unwrap_or("1"))?;
            let mu = scalar("material.mu", get("material.mu").unwrap_or("1"))?;
            cfg.material = MaterialModel::new(lambda, mu).map_err(|e| ConfigError::new("material", e.to_string()))?;
        }

        if let Some(v) = get("step") {
            cfg.step = parse_step("step", v)?;
        }

        let regime_keys = ["regime.L", "regime.c_delta", "regime.p_delta", "regime.c_eps", "regime.q_eps"];
        if regime_keys.iter().any(|k| get(k).is_some()) {
            let preset = cfg.regime()?;
            let val = |k: &str, d: f64| get(k).map(|v| scalar(k, v)).unwrap_or(Ok(d));
            let r = ScalingRegime {
                length: val("regime.L", preset.length)?,
                c_delta: val("regime.c_delta", preset.c_delta)?,
                p_delta: val("regime.p_delta", preset.p_delta)?,
                c_eps: val("regime.c_eps", preset.c_eps)?,
                q_eps: val("regime.q_eps", preset.q_eps)?,
            };
            r.validate().map_err(|e| ConfigError::new("regime", e.to_string()))?;
            cfg.regime = Some(r);
        }

        if ["quad.nx1", "quad.ns", "quad.nt"].iter().any(|k| get(k).is_some()) {
            let d = QuadratureGrid::default();
            let val = |k: &str, d: usize| get(k).map(|v| count(k, v)).unwrap_or(Ok(d));
            cfg.quad = QuadratureGrid::new(val("quad.nx1", d.nx1)?, val("quad.ns", d.ns)?, val("quad.nt", d.nt)?)
                .map_err(|e| ConfigError::new("quad", e.to_string()))?;
        }
        if let Some(v) = get("h_list") {
            cfg.h_list = positive_list("h_list", v)?;
        }
        if let Some(v) = get("eps_list") {
            cfg.eps_list = positive_list("eps_list", v)?;
        }
        if let Some(v) = get("mesh") {
            cfg.mesh = parse_mesh("mesh", v)?;
        }
        if let Some(v) = get("output") {
            cfg.output = Some(PathBuf::from(v));
        }

        let poly = |k: &str| get(k).map(|v| list(k, v)).transpose();
        cfg.triple = TripleSpec {
            w: poly("triple.w_coeffs")?,
            alphas: [
                poly("triple.alpha1_coeffs")?,
                poly("triple.alpha2_coeffs")?,
                poly("triple.alpha3_coeffs")?,
                poly("triple.alpha4_coeffs")?,
            ],
            q0: poly("triple.q0_coeffs")?,
            phi1: poly("triple.phi1_coeffs")?,
            phibar: [poly("triple.phibar2_coeffs")?, poly("triple.phibar3_coeffs")?],
            b: get("triple.b").map(|v| sep_terms("triple.b", v)).transpose()?,
            g: get("triple.g").map(|v| sep_terms("triple.g", v)).transpose()?,
        };
        Ok(cfg)
    }
}

const KEYS: &[&str] = &[
    "curve.kind",
    "curve.k_coeffs",
    "curve.theta0",
    "material.lambda",
    "material.mu",
    "step",
    "regime.L",
    "regime.c_delta",
    "regime.p_delta",
    "regime.c_eps",
    "regime.q_eps",
    "quad.nx1",
    "quad.ns",
    "quad.nt",
    "h_list",
    "eps_list",
    "mesh",
    "output",
    "triple.w_coeffs",
    "triple.alpha1_coeffs",
    "triple.alpha2_coeffs",
    "triple.alpha3_coeffs",
    "triple.alpha4_coeffs",
    "triple.q0_coeffs",
    "triple.phi1_coeffs",
    "triple.phibar2_coeffs",
    "triple.phibar3_coeffs",
    "triple.b",
    "triple.g",
];

fn entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new("", format!("line {}: expected `key = value`", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::new(k, "unknown key"));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::new(k, "given twice"));
        }
    }
    Ok(out)
}

pub fn scalar(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.trim().parse().map_err(|_| ConfigError::new(key, format!("not a number: {v:?}")))?;
    if !x.is_finite() {
        return Err(ConfigError::new(key, "must be finite"));
    }
    Ok(x)
}

fn count(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim().parse().map_err(|_| ConfigError::new(key, format!("not a count: {v:?}")))
}

pub fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|x| scalar(key, x)).collect()
}

pub fn positive_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let xs = list(key, v)?;
    if xs.iter().any(|x| *x <= 0.0) {
        return Err(ConfigError::new(key, "values must be positive"));
    }
    Ok(xs)
}

pub fn parse_step(key: &str, v: &str) -> Result<u8, ConfigError> {
    match v.trim().parse::<u8>() {
        Ok(s @ 1..=5) => Ok(s),
        _ => Err(ConfigError::new(key, format!("step must be 1 to 5, got {v:?}"))),
    }
}

/// `NsxNt`, e.g. `64x16`.
pub fn parse_mesh(key: &str, v: &str) -> Result<(usize, usize), ConfigError> {
    let (a, b) = v.trim().split_once('x').ok_or_else(|| ConfigError::new(key, "expected NsxNt, e.g. 64x16"))?;
    Ok((count(key, a)?, count(key, b)?))
}

/// `nx1,ns,nt`.
pub fn parse_quad(key: &str, v: &str) -> Result<QuadratureGrid, ConfigError> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 3 {
        return Err(ConfigError::new(key, "expected nx1,ns,nt"));
    }
    QuadratureGrid::new(count(key, parts[0])?, count(key, parts[1])?, count(key, parts[2])?)
        .map_err(|e| ConfigError::new(key, e.to_string()))
}

fn sep_terms(key: &str, v: &str) -> Result<Vec<SepTerm>, ConfigError> {
    let mut out = Vec::new();
    for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ConfigError::new(key, format!("expected coef:degree:basis, got {item:?}")));
        }
        let coef = scalar(key, parts[0])?;
        let degree: u32 = parts[1].parse().map_err(|_| ConfigError::new(key, format!("bad x1 degree in {item:?}")))?;
        let num = |s: &str| s.parse::<u32>().map_err(|_| ConfigError::new(key, format!("bad basis in {item:?}")));
        let basis = match parts[2] {
            "1" => SBasis::Constant,
            b if b.starts_with("s^") => SBasis::Power(num(&b[2..])?),
            "s" => SBasis::Power(1),
            b if b.starts_with("cos") => SBasis::Cos(num(&b[3..])?),
            b if b.starts_with("sin") => SBasis::Sin(num(&b[3..])?),
            b => return Err(ConfigError::new(key, format!("unknown basis {b:?} (1, s^n, cosM, sinM)"))),
        };
        out.push(SepTerm { coef, degree, basis });
    }
    Ok(out)
}

/// The field `sum coef x1^degree f(s)`.
pub fn sep_field(terms: &[SepTerm]) -> SepField {
    let t: Vec<(Polynomial, SBasis)> =
        terms.iter().map(|t| (Polynomial::monomial(t.coef, t.degree as usize), t.basis)).collect();
    separable(&t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_example() {
        let text = "
            curve.kind = polynomial   # comment
            curve.k_coeffs = 1, 0.5
            material.lambda = 2
            step = 2
            quad.nt = 4
            h_list = 0.1, 0.05
            mesh = 32x8
            triple.w_coeffs = 0, 1
            triple.b = 1:0:1; 0.5:1:cos1
        ";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.curve.curvature(1.0).unwrap(), 1.5);
        assert_eq!(c.material.lambda, 2.0);
        assert_eq!(c.step, 2);
        assert_eq!((c.quad.nx1, c.quad.nt), (32, 4));
        assert_eq!(c.h_list, vec![0.1, 0.05]);
        assert_eq!(c.mesh, (32, 8));
        let b = c.triple.b.as_ref().unwrap();
        assert_eq!(b[1], SepTerm { coef: 0.5, degree: 1, basis: SBasis::Cos(1) });
        assert_eq!(c.regime().unwrap().p_delta, 2.0);
    }

    #[test]
    fn errors_name_the_key() {
        for (text, key) in [
            ("bogus = 1", "bogus"),
            ("step = 7", "step"),
            ("material.mu = -1", "material"),
            ("curve.kind = spiral", "curve.kind"),
            ("h_list = 0.1, x", "h_list"),
            ("triple.b = 1:0:tan1", "triple.b"),
            ("mesh = 64", "mesh"),
            ("regime.p_delta = 0.5", "regime"),
            ("step = 1\nstep = 2", "step"),
        ] {
            assert_eq!(RunConfig::parse(text).unwrap_err().key, key, "{text}");
        }
    }
}
