//! Hamilton's equations on moment phase space: an adaptive Dormand–Prince
//! 5(4) integrator with event location, and tunneling runs in the quartic
//! barrier potential.

use serde::{Deserialize, Serialize};

use crate::chart::{hamiltonian_vector_field, ChartFunction, ChartPoint};
use crate::effective::{all_orders_chart, all_orders_hamiltonian, taylor_effective_hamiltonian, EffectiveModel, Potential};
use crate::error::{Error, Result};
use crate::par::{map_slice, Exec};
use crate::realizations::RealizationKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-11,
            atol: 1e-13,
            initial_step: 1e-3,
            min_step: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorOptions {
            rtol: tol,
            atol: tol * 1e-2,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BarrierCrossing,
    Escape,
    SingularityStop,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

/// Accepted integration steps with energies and events.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// Largest `|E(t) − E(0)| / |E(0)|` (absolute when `E(0) = 0`).
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        self.energies
            .iter()
            .map(|e| (e - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Largest change of any Casimir coordinate over the run.
    pub fn casimir_drift(&self, n_pairs: usize) -> f64 {
        let x0 = &self.states[0];
        self.states
            .iter()
            .flat_map(|x| (2 * n_pairs..x.len()).map(move |i| (x[i] - x0[i]).abs()))
            .fold(0.0, f64::max)
    }

    /// CSV with a header `t,<names…>,E`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push_str(",E\n");
        for ((t, x), e) in self.times.iter().zip(&self.states).zip(&self.energies) {
            out.push_str(&format!("{t:.12e}"));
            for v in x {
                out.push_str(&format!(",{v:.12e}"));
            }
            out.push_str(&format!(",{e:.12e}\n"));
        }
        out
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: the fifth-order solution and the error vector.
fn dp_step<F>(f: &F, x: &[f64], k1: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut k: Vec<Vec<f64>> = vec![k1.to_vec()];
    for stage in 1..7 {
        let mut y = x.to_vec();
        for (j, kj) in k.iter().enumerate() {
            let a = A[stage][j];
            if a != 0.0 {
                for i in 0..n {
                    y[i] += h * a * kj[i];
                }
            }
        }
        k.push(f(&y)?);
    }
    let mut y5 = x.to_vec();
    let mut err = vec![0.0; n];
    for (j, kj) in k.iter().enumerate() {
        for i in 0..n {
            y5[i] += h * B5[j] * kj[i];
            err[i] += h * (B5[j] - B4[j]) * kj[i];
        }
    }
    let k_last = k.pop().expect("seven stages");
    Ok((y5, err, k_last))
}

fn error_norm(err: &[f64], x: &[f64], y: &[f64], opts: &IntegratorOptions) -> f64 {
    let s: f64 = err
        .iter()
        .zip(x.iter().zip(y))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / err.len() as f64).sqrt()
}

/// An upward zero crossing of `g` along the trajectory stops the run.
pub struct StopCondition<'a> {
    pub g: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub kind: EventKind,
}

/// Integrates `ẋ = X_H(x)` from `x0` until `t_max` or until `stop` fires.
/// Steps whose stages hit a non-finite value are retried with a quarter of
/// the step; running below the minimum step that way ends with
/// `SingularityStop`.
pub fn integrate_until(
    h: &ChartFunction,
    x0: &[f64],
    names: Vec<String>,
    t_max: f64,
    opts: &IntegratorOptions,
    stop: Option<StopCondition<'_>>,
) -> Result<Trajectory> {
    let field = |x: &[f64]| hamiltonian_vector_field(h, x);
    let mut traj = Trajectory {
        names,
        times: vec![0.0],
        states: vec![x0.to_vec()],
        energies: vec![h.eval(x0)?],
        events: Vec::new(),
    };
    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut k1 = field(&x)?;
    let mut step = opts.initial_step.min(t_max);
    let mut steps = 0;
    while t < t_max {
        if steps >= opts.max_steps {
            return Err(Error::StepFailure { t });
        }
        steps += 1;
        let hstep = step.min(t_max - t);
        match dp_step(&field, &x, &k1, hstep) {
            Err(Error::NonFinite(_)) | Err(Error::SingularChart(_)) => {
                step = hstep * 0.25;
                if step < opts.min_step {
                    traj.events.push(Event {
                        t,
                        kind: EventKind::SingularityStop,
                    });
                    return Err(Error::SingularityStop { t });
                }
                continue;
            }
            Err(e) => return Err(e),
            Ok((y, err, k_last)) => {
                let en = error_norm(&err, &x, &y, opts);
                if !en.is_finite() || en > 1.0 {
                    let fac = if en.is_finite() { (0.9 * en.powf(-0.2)).max(0.1) } else { 0.25 };
                    step = hstep * fac;
                    if step < opts.min_step {
                        return Err(Error::StepFailure { t });
                    }
                    continue;
                }
                if let Some(sc) = &stop {
                    let (g0, g1) = ((sc.g)(&x), (sc.g)(&y));
                    if g0 < 0.0 && g1 >= 0.0 {
                        let (tc, xc) = locate(&field, &x, &k1, hstep, sc.g)?;
                        let tc = t + tc;
                        traj.times.push(tc);
                        traj.energies.push(h.eval(&xc)?);
                        traj.states.push(xc);
                        traj.events.push(Event { t: tc, kind: sc.kind });
                        return Ok(traj);
                    }
                }
                t += hstep;
                x = y;
                k1 = k_last;
                traj.times.push(t);
                traj.energies.push(h.eval(&x)?);
                traj.states.push(x.clone());
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                step = hstep * fac;
            }
        }
    }
    Ok(traj)
}

/// Bisection on the step fraction: each trial is one fresh step of the
/// shortened length from the start of the accepted step.
fn locate<F>(field: &F, x: &[f64], k1: &[f64], h: f64, g: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (mut lo, mut hi) = (0.0, h);
    let mut x_hi = dp_step(field, x, k1, h)?.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let y = dp_step(field, x, k1, mid)?.0;
        if g(&y) >= 0.0 {
            hi = mid;
            x_hi = y;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * (1.0 + h) {
            break;
        }
    }
    Ok((hi, x_hi))
}

/// Integrates an effective Hamiltonian from a chart point up to `t_max`.
pub fn integrate(h: &ChartFunction, x0: &ChartPoint, t_max: f64, opts: &IntegratorOptions) -> Result<Trajectory> {
    let names = x0.chart().names().iter().map(|s| s.to_string()).collect();
    integrate_until(h, x0.values(), names, t_max, opts, None)
}

/// Quartic barrier `(27/4) V_top γ q²(q − 1)(q − 1/γ)` with Casimir `U`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub v_top: f64,
    pub gamma: f64,
    pub u: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

impl BarrierSpec {
    pub fn new(v_top: f64, gamma: f64, u: f64) -> Self {
        BarrierSpec { v_top, gamma, u, mass: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_top > 0.0 && self.gamma > 0.0 && self.u > 0.0 && self.mass > 0.0) {
            return Err(Error::InvalidInput("barrier needs V_top, gamma, U and m positive".into()));
        }
        Ok(())
    }

    pub fn potential(&self) -> Potential {
        Potential::QuarticBarrier {
            v_top: self.v_top,
            gamma: self.gamma,
        }
    }

    /// Barrier top: the smaller nonzero root of `V'`,
    /// `4 / (3(γ+1) + √(9(γ+1)² − 32γ))`.
    pub fn q_top(&self) -> f64 {
        let g1 = self.gamma + 1.0;
        4.0 / (3.0 * g1 + (9.0 * g1 * g1 - 32.0 * self.gamma).sqrt())
    }

    /// Inflection point between the well and the barrier top, where `V''`
    /// changes sign: `4 / (6(γ+1) + √(36(γ+1)² − 96γ))`.
    pub fn q_inflection(&self) -> f64 {
        let g1 = self.gamma + 1.0;
        4.0 / (6.0 * g1 + (36.0 * g1 * g1 - 96.0 * self.gamma).sqrt())
    }

    /// `s = (2U / (27 V_top))^{1/4}`.
    pub fn s0(&self) -> f64 {
        (2.0 * self.u / (27.0 * self.v_top)).powf(0.25)
    }

    /// `V₀ ≈ (3/8)√(3U/V_top)(V_top + 2)`.
    pub fn v0_estimate(&self) -> f64 {
        0.375 * (3.0 * self.u / self.v_top).sqrt() * (self.v_top + 2.0)
    }
}

/// Start at the local minimum: `q = 0, π = 0, s = s₀, p = 0`, Casimir `U`,
/// on the chart `[q, π, s, p, U]`.
pub fn tunneling_initial_conditions(spec: &BarrierSpec) -> Result<ChartPoint> {
    spec.validate()?;
    all_orders_chart().point(&[("q", 0.0), ("pi", 0.0), ("s", spec.s0()), ("p", 0.0), ("U", spec.u)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TunnelModel {
    AllOrders,
    Order2,
    Order3Ansatz,
}

impl TunnelModel {
    pub fn name(self) -> &'static str {
        match self {
            TunnelModel::AllOrders => "all_orders",
            TunnelModel::Order2 => "order2",
            TunnelModel::Order3Ansatz => "order3_ansatz",
        }
    }
}

/// Hamiltonian, initial state and chart names for a tunneling run starting
/// at position `q0`. The third-order ansatz starts from
/// `s = s₀(−1/√2, 0, 1/√2)`, which gives `Δ(q²) = s₀²` and `Δ(q³) = 0`, with
/// its Casimir set to `U/4.5` so that `Δ(π²) = U/s₀²` as at second order.
pub fn tunneling_setup(spec: &BarrierSpec, model: TunnelModel, q0: f64) -> Result<(ChartFunction, Vec<f64>, Vec<String>)> {
    spec.validate()?;
    let v = spec.potential();
    let s0 = spec.s0();
    match model {
        TunnelModel::AllOrders => {
            let h = all_orders_hamiltonian(&v, spec.mass);
            let names = all_orders_chart().names().iter().map(|s| s.to_string()).collect();
            Ok((h, vec![q0, 0.0, s0, 0.0, spec.u], names))
        }
        TunnelModel::Order2 | TunnelModel::Order3Ansatz => {
            let (kind, order) = match model {
                TunnelModel::Order2 => (RealizationKind::Order2, 2),
                _ => (RealizationKind::Order3Ansatz, 3),
            };
            let mut em = EffectiveModel::new(v, kind, order);
            em.mass = spec.mass;
            let h = taylor_effective_hamiltonian(&em)?;
            let names = em.chart()?.names().iter().map(|s| s.to_string()).collect();
            let x0 = if kind == RealizationKind::Order2 {
                vec![q0, 0.0, s0, 0.0, spec.u]
            } else {
                let a = s0 / 2f64.sqrt();
                vec![q0, 0.0, -a, 0.0, 0.0, 0.0, a, 0.0, spec.u / 4.5]
            };
            Ok((h, x0, names))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TunnelStatus {
    Escaped,
    NoEscape,
}

#[derive(Clone, Debug, Serialize)]
pub struct TunnelingResult {
    pub model: TunnelModel,
    pub status: TunnelStatus,
    /// First time `q(t)` crosses `q_top` upward.
    pub time: Option<f64>,
    pub exit_q: Option<f64>,
    pub exit_pi: Option<f64>,
    pub q_top: f64,
    pub energy0: f64,
    pub v0_estimate: f64,
    pub energy_drift: f64,
    /// `H − kinetic` at the escape point.
    pub v_eff_at_exit: Option<f64>,
    pub definition: &'static str,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

pub const TUNNELING_TIME_DEFINITION: &str = "first upward crossing of the barrier-top position q_top";

/// Runs a tunneling experiment from the local minimum.
pub fn tunneling_run(spec: &BarrierSpec, model: TunnelModel, t_max: f64, opts: &IntegratorOptions) -> Result<TunnelingResult> {
    tunneling_run_from(spec, model, 0.0, t_max, opts)
}

/// Same as [`tunneling_run`] with the start moved to `q0`.
pub fn tunneling_run_from(
    spec: &BarrierSpec,
    model: TunnelModel,
    q0: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<TunnelingResult> {
    let (h, x0, names) = tunneling_setup(spec, model, q0)?;
    let q_top = spec.q_top();
    let g = move |x: &[f64]| x[0] - q_top;
    let traj = integrate_until(
        &h,
        &x0,
        names,
        t_max,
        opts,
        Some(StopCondition {
            g: &g,
            kind: EventKind::Escape,
        }),
    )?;
    let escaped = traj.events.iter().any(|e| e.kind == EventKind::Escape);
    let n_pairs = h.n_pairs();
    let (time, exit_q, exit_pi, v_eff) = if escaped {
        let x = traj.last();
        let kin: f64 = (0..n_pairs).map(|i| x[2 * i + 1] * x[2 * i + 1]).sum::<f64>() / (2.0 * spec.mass);
        (
            traj.times.last().copied(),
            Some(x[0]),
            Some(x[1]),
            Some(h.eval(x)? - kin),
        )
    } else {
        (None, None, None, None)
    };
    Ok(TunnelingResult {
        model,
        status: if escaped { TunnelStatus::Escaped } else { TunnelStatus::NoEscape },
        time,
        exit_q,
        exit_pi,
        q_top,
        energy0: traj.energies[0],
        v0_estimate: spec.v0_estimate(),
        energy_drift: traj.energy_drift(),
        v_eff_at_exit: v_eff,
        definition: TUNNELING_TIME_DEFINITION,
        trajectory: traj,
    })
}

/// Largest `|s − q| / q` over the part of an escaping run that lies in the
/// barrier, the concave stretch `q_inflection ≤ q ≤ q_top` of the potential.
/// `s` is `√Δ(q²)`. `None` when the run did not escape or never entered the
/// barrier.
pub fn barrier_correlation(spec: &BarrierSpec, result: &TunnelingResult) -> Option<f64> {
    if result.status != TunnelStatus::Escaped {
        return None;
    }
    let lo = spec.q_inflection();
    let mut worst: Option<f64> = None;
    for x in &result.trajectory.states {
        let q = x[0];
        let s = match result.model {
            TunnelModel::Order3Ansatz => (x[2] * x[2] + x[4] * x[4] + x[6] * x[6]).sqrt(),
            _ => x[2],
        };
        if q >= lo && q <= result.q_top {
            let d = (s - q).abs() / q;
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Gamma,
    VTop,
    StartQ,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub time: Option<f64>,
    pub exit_q: Option<f64>,
    pub exit_pi: Option<f64>,
    pub status: String,
}

/// One tunneling run per grid value; failures are recorded in the row.
pub fn tunneling_sweep(
    spec: &BarrierSpec,
    model: TunnelModel,
    param: SweepParam,
    values: &[f64],
    t_max: f64,
    opts: &IntegratorOptions,
    exec: Exec,
) -> Vec<SweepRow> {
    map_slice(exec, values, |&value| {
        let mut s = *spec;
        let mut q0 = 0.0;
        match param {
            SweepParam::Gamma => s.gamma = value,
            SweepParam::VTop => s.v_top = value,
            SweepParam::StartQ => q0 = value,
        }
        match tunneling_run_from(&s, model, q0, t_max, opts) {
            Ok(r) => SweepRow {
                param: value,
                time: r.time,
                exit_q: r.exit_q,
                exit_pi: r.exit_pi,
                status: match r.status {
                    TunnelStatus::Escaped => "escaped".into(),
                    TunnelStatus::NoEscape => "no_escape".into(),
                },
            },
            Err(e) => SweepRow {
                param: value,
                time: None,
                exit_q: None,
                exit_pi: None,
                status: format!("error: {e}"),
            },
        }
    })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
    let mut out = String::from("param,time,exit_q,exit_pi,status\n");
    for r in rows {
        out.push_str(&format!(
            "{:.12e},{},{},{},{}\n",
            r.param,
            opt(r.time),
            opt(r.exit_q),
            opt(r.exit_pi),
            r.status
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> ChartFunction {
        let m = EffectiveModel::new(Potential::Harmonic { omega: 1.0 }, RealizationKind::Order2, 2);
        taylor_effective_hamiltonian(&m).unwrap()
    }

    #[test]
    fn fixed_point_is_stationary() {
        let h = harmonic();
        let x0 = [0.0, 0.0, 0.5f64.sqrt(), 0.0, 0.25];
        let tr = integrate_until(&h, &x0, vec![], 100.0, &IntegratorOptions::default(), None).unwrap();
        for (a, b) in tr.last().iter().zip(&x0) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_follows_classical_ellipse() {
        let h = harmonic();
        let x0 = [1.0, 0.5, 0.9, 0.2, 0.25];
        let t_end = 7.3;
        let tr = integrate_until(&h, &x0, vec![], t_end, &IntegratorOptions::default(), None).unwrap();
        let x = tr.last();
        assert!((x[0] - (t_end.cos() + 0.5 * t_end.sin())).abs() < 1e-8);
        assert!((x[1] - (0.5 * t_end.cos() - t_end.sin())).abs() < 1e-8);
        // s² evolves as the variance of a harmonic state: A + B cos 2t + C sin 2t
        let s2 = |t: f64| {
            let (q2, qp, p2) = (0.81, 0.9 * 0.2, 0.04 + 0.25 / 0.81);
            let (c, s) = (t.cos(), t.sin());
            q2 * c * c + 2.0 * qp * s * c + p2 * s * s
        };
        assert!((x[2] * x[2] - s2(t_end)).abs() < 1e-8);
        assert!(tr.energy_drift() < 1e-8);
        assert_eq!(tr.casimir_drift(2), 0.0);
    }

    #[test]
    fn time_reversal() {
        let spec = BarrierSpec::new(1.0, 0.1, 0.25);
        let (h, x0, _) = tunneling_setup(&spec, TunnelModel::AllOrders, 0.0).unwrap();
        let opts = IntegratorOptions::with_tol(1e-10);
        let fwd = integrate_until(&h, &x0, vec![], 3.0, &opts, None).unwrap();
        let mut back = fwd.last().to_vec();
        back[1] = -back[1];
        back[3] = -back[3];
        let rev = integrate_until(&h, &back, vec![], 3.0, &opts, None).unwrap();
        let x = rev.last();
        assert!((x[0] - x0[0]).abs() < 1e-6 && (x[2] - x0[2]).abs() < 1e-6);
        assert!((x[1] + x0[1]).abs() < 1e-6 && (x[3] + x0[3]).abs() < 1e-6);
    }

    #[test]
    fn barrier_geometry() {
        let spec = BarrierSpec::new(1.0, 0.1, 0.25);
        let v = spec.potential();
        let d = v.derivatives(spec.q_top(), 1).unwrap();
        assert!(d[1].abs() < 1e-12);
        assert!(v.derivatives(spec.q_inflection(), 2).unwrap()[2].abs() < 1e-12);
        assert!((spec.q_top() - 0.658_7).abs() < 1e-4);
        assert!((spec.s0() - 0.368_894).abs() < 1e-6);
        assert!((spec.v0_estimate() - 0.974_279).abs() < 1e-6);
        let x = tunneling_initial_conditions(&spec).unwrap();
        assert_eq!(x.get("q"), Some(0.0));
        assert!(BarrierSpec::new(1.0, -0.1, 0.25).validate().is_err());
    }

    #[test]
    fn initial_s_saturates_quadratic_model() {
        let spec = BarrierSpec::new(3.0, 0.2, 0.25);
        let s = spec.s0();
        assert!((s.powi(4) * 27.0 * spec.v_top / 2.0 - spec.u).abs() < 1e-14);
    }

    #[test]
    fn empty_sweep() {
        let spec = BarrierSpec::new(1.0, 0.1, 0.25);
        let rows = tunneling_sweep(&spec, TunnelModel::AllOrders, SweepParam::Gamma, &[], 10.0, &IntegratorOptions::default(), Exec::Sequential);
        assert!(rows.is_empty());
        assert_eq!(sweep_csv(&rows), "param,time,exit_q,exit_pi,status\n");
    }

    #[test]
    fn singular_start_is_reported() {
        let h = harmonic();
        let r = integrate_until(&h, &[0.0, 0.0, 0.0, 0.0, 0.25], vec![], 1.0, &IntegratorOptions::default(), None);
        assert!(r.is_err());
    }
}
