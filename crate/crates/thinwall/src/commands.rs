//! The batch operations behind the command line subcommands.

use std::fmt;

use rayon::prelude::*;
use thinwall_core::fields::EnergyIntegrand;
use thinwall_core::korn::{self, CrossSectionMesh, ElementMatrix, KornResult};
use thinwall_core::limit::{
    class_residuals, class_residuals_raw, j_limit, make_triple_from_phi, ClassTag, GPotential, LimitTriple,
    PhiGenerator, RawTriple, MEMBER_TOL,
};
use thinwall_core::math::pairwise_sum;
use thinwall_core::recovery::{build_recovery, observable_errors, sample_triple, RecoveryInputs};
use thinwall_core::{ArcLengthCurve, DeformationField, MaterialModel, Point, Polynomial, QuadratureGrid, ScalingRegime};

use crate::config::{sep_field, ConfigError, RunConfig};
use crate::output::{Cell, Table};

/// Why a command did not produce its table.
#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Numerical(thinwall_core::Error),
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "configuration error: {e}"),
            CommandError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for CommandError {}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

impl From<thinwall_core::Error> for CommandError {
    fn from(e: thinwall_core::Error) -> Self {
        use thinwall_core::Error;
        match e {
            Error::Numerical { .. } | Error::Construction { .. } => CommandError::Numerical(e),
            Error::Domain { .. } | Error::Configuration(_) => CommandError::Config(ConfigError::new("", e.to_string())),
        }
    }
}

/// A table plus the outcome of the command's acceptance checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    /// Human readable failed checks; empty when everything passed.
    pub failures: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn poly(c: &Option<Vec<f64>>) -> Polynomial {
    c.as_ref().map(|c| Polynomial::new(c.clone())).unwrap_or_else(Polynomial::zero)
}

/// The configured limit triple, or the sample triple of the step when no
/// triple key is set. The class follows from the regime.
pub fn triple_from_config(cfg: &RunConfig) -> Result<LimitTriple, CommandError> {
    let t = &cfg.triple;
    if t.g.is_some() {
        return Err(ConfigError::new("triple.g", "a raw g is only accepted by class-check").into());
    }
    if t.is_empty() {
        return Ok(sample_triple(cfg.step, &cfg.curve)?);
    }
    let class = ClassTag::for_regime(&cfg.regime()?)?;
    let curve = &cfg.curve;
    let w = poly(&t.w);
    let b = t.b.as_deref().map(sep_field).unwrap_or_default();
    let alphas = [poly(&t.alphas[0]), poly(&t.alphas[1]), poly(&t.alphas[2]), poly(&t.alphas[3])];
    let phi = || PhiGenerator {
        w: w.clone(),
        q0: poly(&t.q0),
        b: b.clone(),
        phi_bar0: [poly(&t.phibar[0]), poly(&t.phibar[1])],
        phi1_0: poly(&t.phi1),
    };
    let triple = match class {
        ClassTag::AZeroMu { mu } => make_triple_from_phi(&phi(), curve, mu)?,
        ClassTag::AZeroZero => LimitTriple::zero_zero(curve, GPotential::from_generator(curve, &alphas), &phi())?,
        _ => LimitTriple::from_generator(class, curve, w.clone(), alphas, b.clone())?,
    };
    Ok(triple)
}

/// `J^h` with the `x1` slabs evaluated in parallel; bit-identical to
/// [`DeformationField::energy`].
pub fn energy_parallel(
    field: &DeformationField,
    material: &MaterialModel,
    regime: &ScalingRegime,
    h: f64,
    grid: &QuadratureGrid,
) -> thinwall_core::Result<f64> {
    let integrand = EnergyIntegrand::new(field, material, regime, h, grid)?;
    let slabs: Vec<f64> = (0..integrand.slab_count()).into_par_iter().map(|i| integrand.slab(i)).collect();
    Ok(pairwise_sum(&slabs))
}

/// Energy ratio, limit value and observable errors over the `h` list.
/// Fails its checks unless the relative error decreases along the list
/// and ends at most [`SWEEP_FINAL_TOL`].
pub fn gamma_sweep(cfg: &RunConfig) -> Result<Report, CommandError> {
    let regime = cfg.regime()?;
    let triple = triple_from_config(cfg)?;
    let j = j_limit(&triple, &cfg.material, &cfg.curve, regime.length, cfg.quad.nx1, cfg.quad.ns);
    let inputs = RecoveryInputs::prepare(triple.clone(), cfg.material, &cfg.curve)?;
    let field = build_recovery(cfg.step, &inputs, &regime)?;
    let mut hs = cfg.h_list.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup();
    let rows: Vec<thinwall_core::Result<Vec<Cell>>> = hs
        .par_iter()
        .map(|&h| {
            let e = energy_parallel(&field, &cfg.material, &regime, h, &cfg.quad)?;
            let eps = regime.eps(h);
            let ratio = e / (eps * eps);
            let rel = if j == 0.0 && ratio == 0.0 { 0.0 } else { (ratio - j).abs() / j.abs() };
            let obs = observable_errors(&field, &triple, &regime, h, &cfg.quad)?;
            Ok(vec![h.into(), regime.delta(h).into(), eps.into(), ratio.into(), j.into(), rel.into(), obs.g.into(), obs.w.into(), obs.b.into()])
        })
        .collect();
    let mut table =
        Table::new(vec!["h", "delta", "eps", "ratio", "j_limit", "rel_err", "err_g", "err_w", "err_b"]);
    for r in rows {
        table.push(r?);
    }
    let rel: Vec<f64> = table.column("rel_err").iter().map(|c| c.as_num().unwrap_or(f64::NAN)).collect();
    let mut failures = Vec::new();
    for (i, w) in rel.windows(2).enumerate() {
        if !(w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0)) {
            failures.push(format!("rel_err not decreasing from h = {} to h = {}", hs[i], hs[i + 1]));
        }
    }
    if let Some(last) = rel.last() {
        if last.is_nan() || *last > SWEEP_FINAL_TOL {
            failures.push(format!("final rel_err {last:e} above {SWEEP_FINAL_TOL:e}"));
        }
    }
    Ok(Report { table, failures })
}

pub const SWEEP_FINAL_TOL: f64 = 2e-2;

/// Young's modulus, Poisson ratio and the coefficients of
/// `Q2(a, b) = q2_aa a^2 + q2_ab a b + q2_bb b^2`, taken on the configured
/// curve at `s = 0`.
pub fn material_table(cfg: &RunConfig) -> Result<Report, CommandError> {
    let m = &cfg.material;
    let r0 = cfg.curve.frame(0.0)?.r0;
    let aa = m.q2(&r0, 1.0, 0.0).value;
    let bb = m.q2(&r0, 0.0, 1.0).value;
    let ab = m.q2(&r0, 1.0, 1.0).value - aa - bb;
    let mut table = Table::new(vec!["lambda", "mu", "E", "nu", "q2_aa", "q2_ab", "q2_bb"]);
    table.push(vec![m.lambda.into(), m.mu.into(), m.modulus_e().into(), m.nu().into(), aa.into(), ab.into(), bb.into()]);
    Ok(Report { table, failures: Vec::new() })
}

const CHECK_NX1: usize = 16;
const CHECK_NS: usize = 48;

/// Residual report of the configured triple (or of a raw `g` given by
/// `triple.g`) against the class of the regime. Fails its checks when a
/// residual exceeds [`MEMBER_TOL`].
pub fn class_check(cfg: &RunConfig) -> Result<Report, CommandError> {
    let regime = cfg.regime()?;
    let report = if let Some(g) = &cfg.triple.g {
        let class = ClassTag::for_regime(&regime)?;
        let (w, g, b) = (poly(&cfg.triple.w), sep_field(g), cfg.triple.b.as_deref().map(sep_field).unwrap_or_default());
        let wf = |x: f64| w.eval(x);
        let gf = |x: f64, s: f64| g.eval(x, s);
        let bf = |x: f64, s: f64| b.eval(x, s);
        let raw = RawTriple { w: &wf, g: &gf, b: &bf };
        class_residuals_raw(&raw, class, &cfg.curve, regime.length, CHECK_NX1, CHECK_NS)?
    } else {
        class_residuals(&triple_from_config(cfg)?, &cfg.curve, regime.length, CHECK_NX1, CHECK_NS)?
    };
    let mut table = Table::new(vec!["class", "residual", "value", "member"]);
    let mut failures = Vec::new();
    for r in &report.residuals {
        let ok = r.value <= MEMBER_TOL;
        if !ok {
            failures.push(format!("{} residual {:e} above {MEMBER_TOL:e}", r.name, r.value));
        }
        table.push(vec![report.class.name().into(), r.name.into(), r.value.into(), if ok { "yes" } else { "no" }.into()]);
    }
    Ok(Report { table, failures })
}

pub const KORN_TOL: f64 = 1e-10;
pub const KORN_MAX_ITER: usize = 500;

/// `K(eps)` with the element matrices computed in parallel.
pub fn korn_at(curve: &ArcLengthCurve, eps: f64, mesh: &CrossSectionMesh) -> thinwall_core::Result<KornResult> {
    // validates eps against the curve before the parallel part
    let _ = korn::strain_operator(curve, eps, &CrossSectionMesh::new(1, 8)?)?;
    let (ns, nt) = (mesh.ns, mesh.nt);
    let strain: Vec<ElementMatrix> =
        (0..ns * nt).into_par_iter().map(|e| korn::strain_element(curve, eps, mesh, e / nt, e % nt)).collect();
    let h1: Vec<ElementMatrix> = (0..ns * nt).into_par_iter().map(|e| korn::h1_element(mesh, e / nt, e % nt)).collect();
    let a = korn::assemble(mesh, &strain);
    let b = korn::assemble(mesh, &h1);
    korn::korn_constant_assembled(curve, eps, mesh, &a, &b, KORN_TOL, KORN_MAX_ITER)
}

/// `eps, sigma_min, K, eps K` per `eps`. Fails its checks when `eps K`
/// varies by more than a factor 2 over the list.
pub fn korn_scan(cfg: &RunConfig) -> Result<Report, CommandError> {
    let mesh = CrossSectionMesh::new(cfg.mesh.0, cfg.mesh.1).map_err(|e| ConfigError::new("mesh", e.to_string()))?;
    let mut table = Table::new(vec!["eps", "sigma_min", "K", "eps_times_K"]);
    let mut band = Vec::new();
    for &eps in &cfg.eps_list {
        let r = korn_at(&cfg.curve, eps, &mesh)?;
        band.push(eps * r.constant);
        table.push(vec![eps.into(), r.sigma_min.into(), r.constant.into(), (eps * r.constant).into()]);
    }
    let mut failures = Vec::new();
    let (lo, hi) = band.iter().fold((f64::INFINITY, 0.0f64), |(l, h), x| (l.min(*x), h.max(*x)));
    if !band.is_empty() && hi > 2.0 * lo {
        failures.push(format!("eps K ranges over [{lo}, {hi}], more than a factor 2"));
    }
    Ok(Report { table, failures })
}

/// Diagnostics of the recovery field at one `h`: term count, energy ratio,
/// limit value, the largest perturbation entry on a sample grid, and the
/// tangential strain at a few points.
pub fn recovery_probe(cfg: &RunConfig, h: f64) -> Result<Report, CommandError> {
    if h.is_nan() || h <= 0.0 {
        return Err(ConfigError::new("h", "must be positive").into());
    }
    let regime = cfg.regime()?;
    let triple = triple_from_config(cfg)?;
    let j = j_limit(&triple, &cfg.material, &cfg.curve, regime.length, cfg.quad.nx1, cfg.quad.ns);
    let inputs = RecoveryInputs::prepare(triple, cfg.material, &cfg.curve)?;
    let field = build_recovery(cfg.step, &inputs, &regime)?;
    let eps = regime.eps(h);
    let ratio = energy_parallel(&field, &cfg.material, &regime, h, &cfg.quad)? / (eps * eps);

    let mut table = Table::new(vec!["quantity", "x1", "s", "t", "value"]);
    let global = |name: &str, v: Cell| vec![name.into(), Cell::Empty, Cell::Empty, Cell::Empty, v];
    table.push(global("terms", field.terms.len().into()));
    table.push(global("ratio", ratio.into()));
    table.push(global("j_limit", j.into()));
    let mut max_p = 0.0f64;
    for i in 0..=4 {
        for k in 0..=8 {
            for l in 0..=2 {
                let p = Point::new(regime.length * i as f64 / 4.0, k as f64 / 8.0, -0.5 + l as f64 / 2.0);
                let pm = field.perturbation(&regime, h, &p)?;
                max_p = pm.iter().flatten().fold(max_p, |m, x| m.max(x.abs()));
            }
        }
    }
    table.push(global("max_abs_P", max_p.into()));
    for (x1, s, t) in [(0.25, 0.25, -0.5), (0.5, 0.5, 0.0), (0.75, 0.75, 0.5)] {
        let x1 = x1 * regime.length;
        let e = field.strain_gl(&regime, h, &Point::new(x1, s, t))?;
        let tau = cfg.curve.frame(s)?.tau;
        let et = |a: [f64; 3], b: [f64; 3]| -> f64 {
            (0..3).map(|i| a[i] * (0..3).map(|j| e[i][j] * b[j]).sum::<f64>()).sum()
        };
        let e1 = [1.0, 0.0, 0.0];
        for (name, v) in [("E_11", et(e1, e1)), ("E_1tau", et(e1, tau)), ("E_tautau", et(tau, tau))] {
            table.push(vec![name.into(), x1.into(), s.into(), t.into(), v.into()]);
        }
    }
    Ok(Report { table, failures: Vec::new() })
}
