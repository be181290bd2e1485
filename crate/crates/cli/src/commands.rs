use std::time::Instant;

use hbspace::analysis::{mz_test, norm_formula, reverse_carleson, cauchy_dual, bergman_dirichlet_unitary, LimitSchedule};
use hbspace::harmonic::unit;
use hbspace::model::{Params, SpaceHandle};
use hbspace::subspaces::poly_density_residual;
use hbspace::suite::{run_all, verify_space, CheckResult, SuiteOptions};
use hbspace::symbols::{estimate_rank, kernel_eval, random_disk_point, RowSymbol};
use hbspace::{Error, Result, C64, VERSION};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{load_symbol, parse_complex, parse_function, parse_points};
use crate::output::{Cell, OutDir};
use crate::{Cmd, Global};

pub struct Outcome {
    pub human: String,
    pub json: Value,
    pub passed: bool,
}

impl Outcome {
    fn ok(human: String, json: Value) -> Self {
        Self { human, json, passed: true }
    }
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub schema: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub space: Option<String>,
    pub seed: u64,
    pub quick: bool,
    pub grid: usize,
    pub passed: bool,
    pub seconds: f64,
    pub checks: &'a [CheckResult],
}

pub const REPORT_SCHEMA: &str = "hbspace-report/1";

fn params(g: &Global) -> Params {
    Params::with_grid(g.grid)
}

fn space(g: &Global) -> Result<SpaceHandle> {
    SpaceHandle::new(load_symbol(g.space.as_deref(), g.named.as_deref())?, params(g))
}

fn out(g: &Global, command: &str, label: &str) -> Result<OutDir> {
    OutDir::new(
        &g.out,
        format!("hbspace {VERSION} command={command} space={label} seed={} grid={}", g.seed, g.grid),
    )
}

fn cx(v: C64) -> Value {
    json!([v.re, v.im])
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn files(o: &OutDir) -> Value {
    json!(o.written().iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

pub fn run(cmd: &Cmd, g: &Global) -> Result<Outcome> {
    match cmd {
        Cmd::Kernel { z, lambda, points } => kernel(g, z, lambda, *points),
        Cmd::Embed { f, terms } => embed(g, f, *terms),
        Cmd::Norm { f } => norm(g, f),
        Cmd::NormFormula { f, k_min, k_max } => norm_formula_cmd(g, f, *k_min, *k_max),
        Cmd::Carleson { k_min, k_max, samples } => carleson(g, *k_min, *k_max, *samples),
        Cmd::MzTest => mz(g),
        Cmd::PolyDensity { f, max_degree } => poly_density(g, f, *max_degree),
        Cmd::Factor { terms } => factor(g, *terms),
        Cmd::Rank { size, tol } => rank(g, *size, *tol),
        Cmd::Dual { weights, size } => dual(g, weights.as_deref(), *size),
        Cmd::Verify => verify(g),
        Cmd::Suite => suite(g),
    }
}

fn kernel(g: &Global, z: &[String], lambda: &[String], points: usize) -> Result<Outcome> {
    let sym = load_symbol(g.space.as_deref(), g.named.as_deref())?;
    let zs = if z.is_empty() {
        let mut r = rng(g.seed, 1);
        (0..points).map(|_| random_disk_point(&mut r, 0.9)).collect()
    } else {
        parse_points(z)?
    };
    let ls = if lambda.is_empty() {
        let mut r = rng(g.seed, 2);
        (0..points).map(|_| random_disk_point(&mut r, 0.9)).collect()
    } else {
        parse_points(lambda)?
    };
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for &zz in &zs {
        for &l in &ls {
            let k = kernel_eval(&sym, zz, l)?;
            values.push(json!({"z": cx(zz), "lambda": cx(l), "k": cx(k)}));
            rows.push(vec![Cell::F(zz.re), Cell::F(zz.im), Cell::F(l.re), Cell::F(l.im), Cell::F(k.re), Cell::F(k.im)]);
        }
    }
    let mut o = out(g, "kernel", sym.label())?;
    o.csv("kernel.csv", &["z_re", "z_im", "lambda_re", "lambda_im", "k_re", "k_im"], rows)?;
    if !g.no_plots {
        let (nr, nt) = (20, 64);
        let grid: Vec<Vec<f64>> = (0..nr)
            .map(|i| {
                let r = 0.95 * (i as f64 + 0.5) / nr as f64;
                (0..nt)
                    .map(|j| {
                        let w = unit(std::f64::consts::TAU * (j as f64 + 0.5) / nt as f64) * r;
                        kernel_eval(&sym, w, w).map_or(f64::NAN, |v| v.re)
                    })
                    .collect()
            })
            .collect();
        o.heatmap("kernel_diagonal.svg", "k(w, w) at w = r e^{i theta}", (0.0, std::f64::consts::TAU), (0.0, 0.95), &grid)?;
    }
    let human = format!("{} kernel values written to {}", zs.len() * ls.len(), o.path("kernel.csv").display());
    Ok(Outcome::ok(human, json!({"space": sym.label(), "values": values, "files": files(&o)})))
}

fn embed(g: &Global, f: &str, terms: usize) -> Result<Outcome> {
    let s = space(g)?;
    let f = parse_function(f, &s)?;
    let m = s.membership_test(&f)?;
    let p = s.embed(&f)?;
    let mut cols = vec!["k".to_string(), "f_re".into(), "f_im".into()];
    for i in 0..p.f1.len() {
        cols.push(format!("f1_{}_re", i + 1));
        cols.push(format!("f1_{}_im", i + 1));
    }
    let rows = (0..terms.min(p.f.len()))
        .map(|k| {
            let mut r = vec![Cell::from(k), Cell::F(p.f.coeff(k).re), Cell::F(p.f.coeff(k).im)];
            for h in &p.f1 {
                r.push(Cell::F(h.coeff(k).re));
                r.push(Cell::F(h.coeff(k).im));
            }
            r
        })
        .collect();
    let mut o = out(g, "embed", s.symbol().label())?;
    let colrefs: Vec<&str> = cols.iter().map(|c| c.as_str()).collect();
    o.csv("embed.csv", &colrefs, rows)?;
    let human = format!(
        "member: {}  residual: {:.3e}  norm: {:.12}  companion change: {:.3e}",
        m.member, m.residual, m.norm, m.companion_change
    );
    Ok(Outcome::ok(human, json!({"membership": m, "files": files(&o)})))
}

fn norm(g: &Global, f: &str) -> Result<Outcome> {
    let s = space(g)?;
    let f = parse_function(f, &s)?;
    let m = s.membership_test(&f)?;
    let mut o = out(g, "norm", s.symbol().label())?;
    o.csv(
        "norm.csv",
        &["member", "norm", "norm_sq", "residual", "companion_change"],
        vec![vec![m.member.into(), m.norm.into(), (m.norm * m.norm).into(), m.residual.into(), m.companion_change.into()]],
    )?;
    if !m.member {
        return Err(Error::NotMember(m.residual));
    }
    let human = format!("||f|| = {:.15}  (||f||^2 = {:.15})", m.norm, m.norm * m.norm);
    Ok(Outcome::ok(human, json!({"membership": m, "files": files(&o)})))
}

fn schedule(g: &Global, k_min: u32, k_max: Option<u32>, default_max: u32) -> Result<LimitSchedule> {
    let k_max = k_max.unwrap_or(if g.quick { 8 } else { default_max });
    LimitSchedule::new(k_min, k_max)
}

fn norm_formula_cmd(g: &Global, f: &str, k_min: u32, k_max: Option<u32>) -> Result<Outcome> {
    let s = space(g)?;
    let f = parse_function(f, &s)?;
    let sch = schedule(g, k_min, k_max, 10)?;
    let est = norm_formula(&s, &f, &sch)?;
    let n2 = s.hb_norm(&f)?.powi(2);
    let rows = (0..est.values.len())
        .map(|i| {
            vec![
                Cell::from((sch.k_min as usize) + i),
                Cell::F(est.radii[i]),
                Cell::from(sch.grids[i]),
                Cell::F(est.values[i]),
                Cell::F(n2),
            ]
        })
        .collect();
    let mut o = out(g, "norm-formula", s.symbol().label())?;
    o.csv("norm_formula.csv", &["k", "r", "grid", "estimate", "norm_sq"], rows)?;
    if !g.no_plots {
        let ks: Vec<f64> = (0..est.values.len()).map(|i| (sch.k_min as usize + i) as f64).collect();
        o.line_plot(
            "norm_formula.svg",
            "norm formula estimate, r = 1 - 2^-k",
            "k",
            "estimate",
            &[
                ("estimate", ks.iter().copied().zip(est.values.iter().copied()).collect()),
                ("||f||^2", ks.iter().map(|&k| (k, n2)).collect()),
            ],
        )?;
    }
    let human = format!(
        "estimate {:.12} at r = {:.10}; ||f||^2 = {:.12}; richardson {:?}",
        est.final_value,
        sch.final_radius(),
        n2,
        est.richardson
    );
    Ok(Outcome::ok(human, json!({"estimate": est, "norm_sq": n2, "files": files(&o)})))
}

fn carleson(g: &Global, k_min: u32, k_max: Option<u32>, samples: usize) -> Result<Outcome> {
    let s = space(g)?;
    let sch = schedule(g, k_min, k_max, 12)?;
    let rep = reverse_carleson(&s, &sch, samples)?;
    let mut o = out(g, "carleson", s.symbol().label())?;
    if !rep.applicable {
        let human = "space is not M_z-invariant; reverse Carleson densities do not apply".to_string();
        return Ok(Outcome::ok(human, json!({"report": rep, "files": files(&o)})));
    }
    let rows = (0..rep.radii.len())
        .map(|i| vec![Cell::from(sch.k_min as usize + i), Cell::F(rep.radii[i]), Cell::F(rep.h1_integrals[i]), Cell::F(rep.h2_integrals[i])])
        .collect();
    o.csv("carleson_integrals.csv", &["k", "r", "h1_integral", "h2_integral"], rows)?;
    let rows = rep
        .samples
        .iter()
        .map(|p| vec![Cell::F(p.theta), Cell::F(p.h1), Cell::F(p.h2), Cell::F(p.g)])
        .collect();
    o.csv("carleson_density.csv", &["theta", "h1", "h2", "g"], rows)?;
    if !g.no_plots {
        let pick = |f: fn(&hbspace::analysis::CarlesonSample) -> f64| rep.samples.iter().map(|p| (p.theta, f(p))).collect::<Vec<_>>();
        o.line_plot(
            "carleson_density.svg",
            &format!("densities at r = {:.8}", rep.density_radius),
            "theta",
            "density",
            &[("h1", pick(|p| p.h1)), ("h2", pick(|p| p.h2)), ("g", pick(|p| p.g))],
        )?;
    }
    let human = format!(
        "integrals bounded: {}; final h1 integral {:.10}, h2 integral {:.10}",
        rep.bounded,
        rep.h1_integrals.last().copied().unwrap_or(f64::NAN),
        rep.h2_integrals.last().copied().unwrap_or(f64::NAN)
    );
    Ok(Outcome::ok(human, json!({"report": rep, "files": files(&o)})))
}

fn mz(g: &Global) -> Result<Outcome> {
    let sym = load_symbol(g.space.as_deref(), g.named.as_deref())?;
    let v = mz_test(&sym, g.grid);
    let mut o = out(g, "mz-test", sym.label())?;
    let rows = v.grid_sizes.iter().zip(&v.estimates).map(|(n, e)| vec![Cell::from(*n), Cell::F(*e)]).collect();
    o.csv("mz_test.csv", &["grid", "log_integral_estimate"], rows)?;
    let human = format!(
        "M_z-invariant: {}{}{}",
        v.invariant,
        v.log_integral.map_or(String::new(), |l| format!("  (log integral {l:.12})")),
        if v.conclusive { String::new() } else { format!("  [{}]", v.note) }
    );
    Ok(Outcome::ok(human, json!({"verdict": v, "files": files(&o)})))
}

fn poly_density(g: &Global, f: &str, max_degree: usize) -> Result<Outcome> {
    let s = space(g)?;
    let f = parse_function(f, &s)?;
    let degs: Vec<usize> = (0..=max_degree).collect();
    let r = poly_density_residual(&s, &f, &degs)?;
    let mut o = out(g, "poly-density", s.symbol().label())?;
    o.csv("poly_density.csv", &["degree", "residual"], degs.iter().zip(&r).map(|(d, v)| vec![Cell::from(*d), Cell::F(*v)]).collect())?;
    if !g.no_plots {
        let pts = degs.iter().zip(&r).map(|(d, v)| (*d as f64, v.max(1e-300).log10())).collect();
        o.line_plot("poly_density.svg", "distance to polynomials", "degree", "log10 residual", &[("residual", pts)])?;
    }
    let human = format!("residual at degree {max_degree}: {:.6e}", r[max_degree]);
    Ok(Outcome::ok(human, json!({"degrees": degs, "residuals": r, "files": files(&o)})))
}

fn factor(g: &Global, terms: usize) -> Result<Outcome> {
    let s = space(g)?;
    let Some(a) = s.factor() else {
        return Err(Error::ExtremeType);
    };
    let n = a.dim();
    let mut rows = Vec::new();
    for k in 0..terms.min(a.len()) {
        let c = a.coeff(k);
        for i in 0..n {
            for j in 0..n {
                rows.push(vec![Cell::from(k), Cell::from(i), Cell::from(j), Cell::F(c[(i, j)].re), Cell::F(c[(i, j)].im)]);
            }
        }
    }
    let mut o = out(g, "factor", s.symbol().label())?;
    o.csv("factor.csv", &["k", "row", "col", "re", "im"], rows)?;
    let summary = s.factor_summary();
    let human = match summary {
        Some(f) => format!(
            "method {:?}, {} iterations, residual {:.3e}, regularized {}, log det integral {:.12}",
            f.method, f.iterations, f.residual, f.regularized, f.log_det_integral
        ),
        None => "rank 0: the defect is the zero matrix function".to_string(),
    };
    Ok(Outcome::ok(human, json!({"rank": n, "summary": summary, "files": files(&o)})))
}

fn rank(g: &Global, size: usize, tol: f64) -> Result<Outcome> {
    let s = space(g)?;
    let est = estimate_rank(&s.monomial_gram(size.saturating_sub(1))?, tol)?;
    let mut o = out(g, "rank", s.symbol().label())?;
    o.csv(
        "rank.csv",
        &["index", "eigenvalue"],
        est.eigenvalues.iter().enumerate().map(|(i, v)| vec![Cell::from(i), Cell::F(*v)]).collect(),
    )?;
    let human = format!("numerical rank of I - LL*: {} (tol {tol:e})", est.rank);
    Ok(Outcome::ok(human, json!({"estimate": est, "files": files(&o)})))
}

fn dual(g: &Global, weights: Option<&str>, size: usize) -> Result<Outcome> {
    let w: Vec<f64> = match weights {
        Some(list) => list
            .split(',')
            .map(|v| parse_complex(v).map(|c| c.re))
            .collect::<Result<_>>()?,
        None => (0..size).map(|k| 1.0 / (k as f64 + 1.0)).collect(),
    };
    let n = w.len();
    let gram = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(w[i], 0.0) } else { C64::new(0.0, 0.0) });
    let d = cauchy_dual(&gram)?;
    let mut o = out(g, "dual", "weighted")?;
    o.csv(
        "dual.csv",
        &["k", "weight", "dual_weight"],
        (0..n).map(|k| vec![Cell::from(k), Cell::F(w[k]), Cell::F(d[k])]).collect(),
    )?;
    let mut human = format!("dual weights of {n} monomials written to {}", o.path("dual.csv").display());
    let mut extra = Value::Null;
    if weights.is_none() {
        let u = bergman_dirichlet_unitary(n);
        human.push_str(&format!("; Bergman to Dirichlet unitary residual {:.3e}", u.residual));
        extra = json!(u.residual);
    }
    Ok(Outcome::ok(human, json!({"weights": w, "dual": d, "unitary_residual": extra, "files": files(&o)})))
}

fn table(checks: &[CheckResult]) -> String {
    let mut s = String::new();
    for c in checks {
        s.push_str(&format!(
            "{:>3}  {}  {:<38} {:>7.2}s  {}\n",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.seconds,
            c.detail
        ));
    }
    s
}

fn report(g: &Global, command: &'static str, space: Option<String>, checks: &[CheckResult], seconds: f64) -> Result<Outcome> {
    let passed = checks.iter().all(|c| c.passed);
    let r = Report {
        schema: REPORT_SCHEMA,
        version: VERSION,
        command,
        space: space.clone(),
        seed: g.seed,
        quick: g.quick,
        grid: g.grid,
        passed,
        seconds,
        checks,
    };
    let value = serde_json::to_value(&r).expect("report serializes");
    let mut o = OutDir::new(&g.out, String::new())?;
    o.write("report.json", serde_json::to_string_pretty(&value).expect("json").as_bytes())?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let human = format!(
        "{}{} of {} checks passed in {seconds:.2}s{}",
        table(checks),
        checks.len() - failed,
        checks.len(),
        space.map_or(String::new(), |s| format!(" for {s}"))
    );
    Ok(Outcome { human, json: value, passed })
}

fn verify(g: &Global) -> Result<Outcome> {
    let t = Instant::now();
    let sym: RowSymbol = match load_symbol(g.space.as_deref(), g.named.as_deref()) {
        Ok(s) => s,
        Err(Error::Invariant(msg)) => {
            let checks = [CheckResult {
                id: 0,
                name: "symbol constraints".into(),
                passed: false,
                detail: msg,
                seconds: t.elapsed().as_secs_f64(),
            }];
            return report(g, "verify", None, &checks, t.elapsed().as_secs_f64());
        }
        Err(e) => return Err(e),
    };
    let label = sym.label().to_string();
    let s = SpaceHandle::new(sym, params(g))?;
    let checks = verify_space(&s, g.seed);
    report(g, "verify", Some(label), &checks, t.elapsed().as_secs_f64())
}

fn suite(g: &Global) -> Result<Outcome> {
    let t = Instant::now();
    let checks = run_all(SuiteOptions {
        quick: g.quick,
        seed: g.seed,
        params: params(g),
    })?;
    report(g, "suite", None, &checks, t.elapsed().as_secs_f64())
}
