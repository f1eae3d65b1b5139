use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use semiclassical::algebra::{bracket_single_dof, truncate, weyl_bracket_oracle};
use semiclassical::dynamics::{
    barrier_correlation, sweep_csv, tunneling_run_from, tunneling_sweep, BarrierSpec, IntegratorOptions, SweepParam,
    TunnelModel,
};
use semiclassical::effective::{exact_ground_state_checked, ground_state_estimate, Potential, Potential2};
use semiclassical::effpot2::{low_energy_grid, low_energy_shift, minimize_moment_sector, stationarity_residuals};
use semiclassical::realizations::closure_certificate;
use semiclassical::reconstruction::{density_from_moments, impurity_candidates, phase_from_moments, MAX_ORDER};
use semiclassical::thermo::{ensemble_grid, thermo_tolerance, two_point_grid, vacuum_two_point};
use semiclassical::{Exec, MomentIndex, Realization};

use crate::config::{opt, resolve, CliError, CliResult, Sink};
use crate::{BracketArgs, EffpotArgs, GroundArgs, ReconstructArgs, RealizeArgs, ThermoArgs, TunnelArgs};

pub struct Context {
    pub file: Map<String, Value>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl Context {
    fn sink(&self, name: &'static str) -> CliResult<Sink> {
        Sink::new(self.out.clone(), name, self.seed, self.tol)
    }
}

const EXEC: Exec = Exec::Parallel;

fn one() -> f64 {
    1.0
}

/// Object-valued key of the file map with flag values merged in.
fn merged_object(file: &Map<String, Value>, key: &str, base: Option<Value>, entries: Vec<(&str, Option<Value>)>) -> Option<Value> {
    if base.is_none() && entries.iter().all(|(_, v)| v.is_none()) {
        return None;
    }
    let mut obj = match file.get(key) {
        Some(Value::Object(m)) => m.clone(),
        _ => Map::new(),
    };
    if let Some(Value::Object(b)) = base {
        obj.extend(b);
    }
    for (k, v) in entries {
        if let Some(v) = v {
            obj.insert(k.to_string(), v);
        }
    }
    Some(Value::Object(obj))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BracketConfig {
    lhs: String,
    rhs: String,
    order: Option<u32>,
    #[serde(default)]
    oracle: bool,
}

pub fn bracket(ctx: Context, a: BracketArgs) -> CliResult<()> {
    let cfg: BracketConfig = resolve(
        ctx.file.clone(),
        vec![
            ("lhs", opt(Some(a.lhs))),
            ("rhs", opt(Some(a.rhs))),
            ("order", opt(a.order)),
            ("oracle", a.oracle.then_some(Value::Bool(true))),
        ],
    )?;
    let lhs = MomentIndex::parse(&cfg.lhs, 1)?;
    let rhs = MomentIndex::parse(&cfg.rhs, 1)?;
    let p = if cfg.oracle {
        let full = weyl_bracket_oracle(&lhs, &rhs)?;
        match cfg.order {
            Some(s) => truncate(&full, s),
            None => full,
        }
    } else {
        bracket_single_dof(&lhs, &rhs, cfg.order)?
    };
    ctx.sink("bracket")?.finish_text(&cfg, "bracket.txt", &p.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizeConfig {
    realization: String,
    point: Option<BTreeMap<String, f64>>,
    certify: Option<usize>,
    #[serde(default = "closure_tol")]
    tol: f64,
}

fn closure_tol() -> f64 {
    1e-9
}

fn parse_point(s: &str) -> CliResult<Value> {
    let mut m = Map::new();
    for item in s.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("point entry `{item}` is not name=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| CliError::Usage(format!("point entry `{item}`: {e}")))?;
        m.insert(k.trim().to_string(), json!(v));
    }
    Ok(Value::Object(m))
}

pub fn realize(ctx: Context, a: RealizeArgs) -> CliResult<()> {
    let point = a.point.as_deref().map(parse_point).transpose()?;
    let cfg: RealizeConfig = resolve(
        ctx.file.clone(),
        vec![
            ("realization", opt(a.realization)),
            ("point", point),
            ("certify", opt(a.certify)),
            ("tol", opt(ctx.tol)),
        ],
    )?;
    let r = Realization::by_name(&cfg.realization)?;
    let x = match &cfg.point {
        Some(p) => {
            let pairs: Vec<(&str, f64)> = p.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            r.chart().point(&pairs)?.values().to_vec()
        }
        None => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
            r.random_regular_point(&mut rng)
        }
    };
    let state = r.realize_values(&x)?;
    let names: BTreeMap<&str, f64> = r.chart().names().into_iter().zip(x.iter().copied()).collect();
    let certificate = cfg
        .certify
        .map(|n| closure_certificate(&r, n, ctx.seed, EXEC))
        .transpose()?;
    let result = json!({
        "realization": r.name(),
        "point": names,
        "state": state,
        "certificate": certificate,
    });
    ctx.sink("realize")?
        .finish(&cfg, json!({ "closure_rel": cfg.tol }), &result)?;
    match certificate {
        Some(c) if c.max_rel_error > cfg.tol => Err(CliError::Numerical(format!(
            "closure certificate failed: {:.3e} > {:.1e}",
            c.max_rel_error, cfg.tol
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    param: SweepParam,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TunnelConfig {
    v_top: f64,
    gamma: f64,
    #[serde(rename = "U")]
    u: f64,
    #[serde(default = "one")]
    mass: f64,
    #[serde(default = "all_orders")]
    model: TunnelModel,
    #[serde(default = "default_t_max")]
    t_max: f64,
    #[serde(default)]
    q0: f64,
    #[serde(default = "default_rtol")]
    rtol: f64,
    sweep: Option<SweepConfig>,
}

fn all_orders() -> TunnelModel {
    TunnelModel::AllOrders
}

fn default_t_max() -> f64 {
    50.0
}

fn default_rtol() -> f64 {
    IntegratorOptions::default().rtol
}

pub fn tunnel(ctx: Context, a: TunnelArgs) -> CliResult<()> {
    let sweep = merged_object(&ctx.file, "sweep", None, vec![("param", opt(a.sweep)), ("values", opt(a.values))]);
    let cfg: TunnelConfig = resolve(
        ctx.file.clone(),
        vec![
            ("v_top", opt(a.v_top)),
            ("gamma", opt(a.gamma)),
            ("U", opt(a.u)),
            ("model", opt(a.model)),
            ("t_max", opt(a.t_max)),
            ("rtol", opt(ctx.tol)),
            ("sweep", sweep),
        ],
    )?;
    let spec = BarrierSpec {
        v_top: cfg.v_top,
        gamma: cfg.gamma,
        u: cfg.u,
        mass: cfg.mass,
    };
    spec.validate()?;
    let opts = IntegratorOptions::with_tol(cfg.rtol);
    let mut sink = ctx.sink("tunnel")?;
    let tolerances = json!({ "rtol": opts.rtol, "atol": opts.atol });
    let result = match &cfg.sweep {
        Some(sw) => {
            let rows = tunneling_sweep(&spec, cfg.model, sw.param, &sw.values, cfg.t_max, &opts, EXEC);
            sink.file("sweep.csv", &sweep_csv(&rows))?;
            json!({ "model": cfg.model, "sweep": rows })
        }
        None => {
            let run = tunneling_run_from(&spec, cfg.model, cfg.q0, cfg.t_max, &opts)?;
            sink.file("trajectory.csv", &run.trajectory.to_csv())?;
            json!({
                "run": run,
                "events": run.trajectory.events,
                "barrier_correlation": barrier_correlation(&spec, &run),
            })
        }
    };
    sink.finish(&cfg, tolerances, &result)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoPointConfig {
    distances: Vec<f64>,
    #[serde(default = "one")]
    mass: f64,
    #[serde(default = "default_two_point_beta")]
    beta: f64,
    #[serde(default = "default_k_cutoff")]
    k_cutoff: f64,
    #[serde(default = "default_two_point_tol")]
    tol: f64,
}

fn default_two_point_beta() -> f64 {
    1e6
}

fn default_k_cutoff() -> f64 {
    1e7
}

fn default_two_point_tol() -> f64 {
    1e-10
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThermoConfig {
    beta: Option<f64>,
    omega: Option<f64>,
    betas: Option<Vec<f64>>,
    omegas: Option<Vec<f64>>,
    #[serde(default = "one")]
    hbar: f64,
    two_point: Option<TwoPointConfig>,
}

pub fn thermo(ctx: Context, a: ThermoArgs) -> CliResult<()> {
    let two_point = merged_object(
        &ctx.file,
        "two_point",
        None,
        vec![("distances", opt(a.two_point)), ("tol", opt(ctx.tol))],
    );
    let cfg: ThermoConfig = resolve(
        ctx.file.clone(),
        vec![
            ("beta", opt(a.beta)),
            ("omega", opt(a.omega)),
            ("betas", opt(a.betas)),
            ("omegas", opt(a.omegas)),
            ("hbar", opt(a.hbar)),
            ("two_point", two_point.filter(|v| v.get("distances").is_some())),
        ],
    )?;
    let list = |many: &Option<Vec<f64>>, single: Option<f64>, key: &str| {
        many.clone()
            .or(single.map(|x| vec![x]))
            .ok_or_else(|| CliError::Usage(format!("missing field `{key}`")))
    };
    let betas = list(&cfg.betas, cfg.beta, "beta")?;
    let omegas = list(&cfg.omegas, cfg.omega, "omega")?;
    let rows = ensemble_grid(&betas, &omegas, cfg.hbar, EXEC)
        .into_iter()
        .collect::<semiclassical::Result<Vec<_>>>()?;
    let mut sink = ctx.sink("thermo")?;
    sink.csv("thermo.csv", &rows)?;
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).expect("rows serialize");
            v["max_rel_gap"] = json!(r.max_rel_gap());
            v
        })
        .collect();
    let mut result = json!({ "rows": json_rows });
    if let Some(tp) = &cfg.two_point {
        let values = two_point_grid(&tp.distances, tp.mass, tp.beta, cfg.hbar, tp.k_cutoff, tp.tol, EXEC)
            .into_iter()
            .collect::<semiclassical::Result<Vec<_>>>()?;
        sink.csv("two_point.csv", &values)?;
        let vacuum: Vec<f64> = tp.distances.iter().map(|&r| vacuum_two_point(r, tp.mass, cfg.hbar)).collect();
        result["two_point"] = json!({ "values": values, "vacuum": vacuum });
    }
    let t = thermo_tolerance();
    sink.finish(&cfg, json!({ "quadrature_rel": t.rel, "quadrature_abs": t.abs }), &result)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffpotConfig {
    potential: Potential2,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default)]
    q1: f64,
    #[serde(default)]
    q2: f64,
    q1s: Option<Vec<f64>>,
    q2s: Option<Vec<f64>>,
}

pub fn effpot(ctx: Context, a: EffpotArgs) -> CliResult<()> {
    let base = a.coupled_oscillator.then(|| json!({ "kind": "coupled_harmonic", "omega": 1.0 }));
    let potential = merged_object(&ctx.file, "potential", base, vec![("gamma", opt(a.gamma)), ("omega", opt(a.omega))]);
    let cfg: EffpotConfig = resolve(
        ctx.file.clone(),
        vec![("potential", potential), ("hbar", opt(a.hbar)), ("q1", opt(a.q1)), ("q2", opt(a.q2))],
    )?;
    let h = cfg.potential.hessian(cfg.q1, cfg.q2);
    let v = cfg.potential.value(cfg.q1, cfg.q2);
    let sector = minimize_moment_sector(&h, cfg.hbar)?;
    let energy = v + low_energy_shift(&h, cfg.hbar)?;
    let closed_form = match cfg.potential {
        Potential2::CoupledHarmonic { omega, gamma } => {
            Some(v + 0.5 * cfg.hbar * omega * ((1.0 + gamma).sqrt() + (1.0 - gamma).sqrt()))
        }
        _ => None,
    };
    let mut sink = ctx.sink("effpot")?;
    let mut unstable = 0;
    if let (Some(q1s), Some(q2s)) = (&cfg.q1s, &cfg.q2s) {
        let rows: Vec<_> = low_energy_grid(&cfg.potential, q1s, q2s, cfg.hbar, EXEC)
            .into_iter()
            .filter_map(|r| r.map_err(|_| unstable += 1).ok())
            .collect();
        sink.csv("low_energy.csv", &rows)?;
    }
    let result = json!({
        "q1": cfg.q1,
        "q2": cfg.q2,
        "hessian": h,
        "sector": sector,
        "stationarity": stationarity_residuals(&h, cfg.hbar, sector.s1, sector.s2, sector.beta),
        "V": v,
        "E": energy,
        "closed_form": closed_form,
        "delta": closed_form.map(|c| energy - c),
        "unstable_grid_points": unstable,
    });
    sink.finish(&cfg, Value::Null, &result)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundConfig {
    potential: Potential,
    #[serde(rename = "U")]
    u: Option<f64>,
    #[serde(default = "one")]
    mass: f64,
    #[serde(default = "one")]
    hbar: f64,
    #[serde(default = "default_basis")]
    basis: usize,
    basis_tol: Option<f64>,
}

fn default_basis() -> usize {
    100
}

pub fn ground(ctx: Context, a: GroundArgs) -> CliResult<()> {
    let base = a.potential.map(|k| json!({ "kind": k }));
    let potential = merged_object(&ctx.file, "potential", base, vec![("omega", opt(a.omega))]);
    let cfg: GroundConfig = resolve(
        ctx.file.clone(),
        vec![
            ("potential", potential),
            ("U", opt(a.u)),
            ("mass", opt(a.mass)),
            ("hbar", opt(a.hbar)),
            ("basis", opt(a.basis)),
            ("basis_tol", opt(ctx.tol)),
        ],
    )?;
    let u = cfg.u.unwrap_or(cfg.hbar * cfg.hbar / 4.0);
    let est = ground_state_estimate(&cfg.potential, u, cfg.mass, EXEC)?;
    let (exact, change) = exact_ground_state_checked(&cfg.potential, cfg.basis, cfg.hbar, cfg.mass)?;
    let result = json!({ "q": est.q, "s": est.s, "E": est.energy, "exact": exact, "exact_change": change });
    ctx.sink("ground")?
        .finish(&cfg, json!({ "basis_tol": cfg.basis_tol }), &result)?;
    match cfg.basis_tol {
        Some(t) if change > t => Err(CliError::Numerical(format!(
            "exact ground state moved by {change:.3e} when doubling the basis"
        ))),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReconstructConfig {
    a: Option<Vec<f64>>,
    #[serde(default)]
    b: Vec<f64>,
    #[serde(default = "one")]
    hbar: f64,
    order: Option<usize>,
    #[serde(default = "default_q_min")]
    q_min: f64,
    #[serde(default = "default_q_max")]
    q_max: f64,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default = "default_div_tol")]
    div_tol: f64,
    impurity: Option<String>,
    #[serde(default = "default_impurity_points")]
    impurity_points: usize,
}

fn default_q_min() -> f64 {
    -4.0
}

fn default_q_max() -> f64 {
    4.0
}

fn default_points() -> usize {
    161
}

fn default_div_tol() -> f64 {
    0.1
}

fn default_impurity_points() -> usize {
    200
}

#[derive(Serialize)]
struct DensityRow {
    q: f64,
    density: f64,
    dalpha_dq: Option<f64>,
    alpha: Option<f64>,
}

pub fn reconstruct(ctx: Context, args: ReconstructArgs) -> CliResult<()> {
    let cfg: ReconstructConfig = resolve(
        ctx.file.clone(),
        vec![
            ("order", opt(args.order)),
            ("q_min", opt(args.q_min)),
            ("q_max", opt(args.q_max)),
            ("points", opt(args.points)),
            ("div_tol", opt(ctx.tol)),
            ("impurity", opt(args.impurity)),
        ],
    )?;
    if cfg.a.is_none() && cfg.impurity.is_none() {
        return Err(CliError::Usage("missing field `a`".into()));
    }
    let mut sink = ctx.sink("reconstruct")?;
    let mut result = json!({});
    if let Some(a) = &cfg.a {
        if a.is_empty() || cfg.points < 2 || cfg.q_max <= cfg.q_min {
            return Err(CliError::Usage("need a_0, two grid points and q_max > q_min".into()));
        }
        let n = cfg.order.unwrap_or((a.len() - 1).min(MAX_ORDER));
        let step = (cfg.q_max - cfg.q_min) / (cfg.points - 1) as f64;
        let grid: Vec<f64> = (0..cfg.points).map(|i| cfg.q_min + step * i as f64).collect();
        let d = density_from_moments(a, n, &grid, cfg.div_tol, EXEC)?;
        let phase = if cfg.b.is_empty() {
            None
        } else {
            Some(phase_from_moments(&cfg.b, &d, n, cfg.hbar)?)
        };
        let rows: Vec<DensityRow> = grid
            .iter()
            .enumerate()
            .map(|(i, &q)| DensityRow {
                q,
                density: d.density[i],
                dalpha_dq: phase.as_ref().map(|p| p.dalpha_dq[i]),
                alpha: phase.as_ref().map(|p| p.alpha[i]),
            })
            .collect();
        sink.csv("density.csv", &rows)?;
        result["order"] = json!(n);
        result["residual"] = json!(d.residual);
        result["hankel_positive"] = json!(d.hankel_positive);
        if sink.out.is_none() {
            result["rows"] = json!(rows);
        }
    }
    if let Some(name) = &cfg.impurity {
        let r = Realization::by_name(name)?;
        result["impurity"] = json!({
            "realization": r.name(),
            "candidates": impurity_candidates(&r, cfg.impurity_points, ctx.seed)?,
        });
    }
    sink.finish(&cfg, json!({ "div_tol": cfg.div_tol }), &result)
}
