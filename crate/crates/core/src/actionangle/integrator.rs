//! Dormand–Prince 5(4) integration of autonomous vector fields on a chart.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::hamiltonian::HamiltonianField;
use crate::systems::IntegrableSystem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowOptions {
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: 1e-10,
            h_init: 1e-3,
            h_max: 0.25,
            max_steps: 2_000_000,
        }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> FlowOptions {
        FlowOptions {
            tol,
            ..FlowOptions::default()
        }
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
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Raw output of [`integrate`].
#[derive(Clone, Debug)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// Set when the state left the admissible set or the field failed.
    pub stopped: Option<String>,
}

fn axpy(y: &[f64], h: f64, ks: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, &c) in ks.iter().zip(coef) {
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(k) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// One Dormand–Prince step from `y` with derivative `k1 = f(y)`; returns the
/// fifth-order state, its derivative (FSAL) and the error estimate.
fn dp_step<F>(f: &F, y: &[f64], k1: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
    ks.push(k1.to_vec());
    for s in 1..6 {
        let ys = axpy(y, h, &ks, &A[s][..s]);
        ks.push(f(&ys)?);
    }
    let y5 = axpy(y, h, &ks, &A[6][..6]);
    let k7 = f(&y5)?;
    ks.push(k7.clone());
    let err: Vec<f64> = (0..y.len())
        .map(|i| h * (0..7).map(|s| (A[6].get(s).copied().unwrap_or(0.0) - B4[s]) * ks[s][i]).sum::<f64>())
        .collect();
    Ok((y5, k7, err))
}

/// Integrate `y' = f(y)` from `y0` over `[0, t_end]` (`t_end >= 0`).
///
/// With non-empty `outputs` (increasing times in `[0, t_end]`) the solver
/// lands exactly on each of them and records only those; otherwise every
/// accepted step is recorded. `inside` marks the admissible set: leaving it
/// stops the integration at the boundary (to bisection accuracy).
pub fn integrate<F, G>(f: F, y0: &[f64], t_end: f64, outputs: &[f64], opts: &FlowOptions, inside: G) -> Solution
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    G: Fn(&[f64]) -> bool,
{
    let mut sol = Solution {
        times: vec![0.0],
        states: vec![y0.to_vec()],
        final_time: 0.0,
        final_state: y0.to_vec(),
        steps: 0,
        rejected: 0,
        stopped: None,
    };
    let record_all = outputs.is_empty();
    if !record_all {
        sol.times.clear();
        sol.states.clear();
    }
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= 0.0 {
        sol.times.push(outputs[next_out]);
        sol.states.push(y0.to_vec());
        next_out += 1;
    }
    if t_end <= 0.0 {
        return sol;
    }
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut k1 = match f(&y) {
        Ok(k) => k,
        Err(e) => {
            sol.stopped = Some(e.to_string());
            return sol;
        }
    };
    let mut h = opts.h_init.min(t_end).min(opts.h_max);
    while t < t_end {
        if sol.steps + sol.rejected >= opts.max_steps {
            sol.stopped = Some("step budget exhausted".into());
            break;
        }
        let target = if next_out < outputs.len() { outputs[next_out].min(t_end) } else { t_end };
        let mut land = false;
        let h_try = h;
        if t + h >= target {
            h = target - t;
            land = true;
        }
        let (y5, k7, err) = match dp_step(&f, &y, &k1, h) {
            Ok(r) => r,
            Err(e) => {
                // Retry with a smaller step before giving up.
                if h > 1e-12 {
                    h *= 0.25;
                    sol.rejected += 1;
                    continue;
                }
                sol.stopped = Some(e.to_string());
                break;
            }
        };
        let mut enorm: f64 = 0.0;
        for i in 0..y.len() {
            let sc = opts.tol + opts.tol * y[i].abs().max(y5[i].abs());
            enorm = enorm.max((err[i] / sc).abs());
        }
        if !enorm.is_finite() || y5.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            sol.rejected += 1;
            if h < 1e-14 {
                sol.stopped = Some("solution blew up".into());
                break;
            }
            continue;
        }
        if enorm > 1.0 {
            sol.rejected += 1;
            h *= (0.9 * enorm.powf(-0.2)).max(0.2);
            continue;
        }
        if !inside(&y5) {
            // Bisect the step length to stop at the boundary.
            let (mut lo, mut hi) = (0.0, h);
            let mut best = (y.clone(), 0.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                match dp_step(&f, &y, &k1, mid) {
                    Ok((ym, _, _)) if inside(&ym) => {
                        lo = mid;
                        best = (ym, mid);
                    }
                    _ => hi = mid,
                }
            }
            t += best.1;
            y = best.0;
            sol.steps += 1;
            sol.times.push(t);
            sol.states.push(y.clone());
            sol.stopped = Some("left the chart".into());
            break;
        }
        t = if land { target } else { t + h };
        y = y5;
        k1 = k7;
        sol.steps += 1;
        if record_all {
            sol.times.push(t);
            sol.states.push(y.clone());
        } else {
            while next_out < outputs.len() && outputs[next_out] <= t {
                sol.times.push(outputs[next_out]);
                sol.states.push(y.clone());
                next_out += 1;
            }
        }
        let grow = if enorm == 0.0 { 5.0 } else { (0.9 * enorm.powf(-0.2)).clamp(0.2, 5.0) };
        h = if land { h_try.max(h * grow) } else { h * grow };
        h = h.min(opts.h_max);
    }
    sol.final_time = t;
    sol.final_state = y;
    sol
}

/// A trajectory in chart coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Points with angles reduced modulo 1.
    pub points: Vec<Vec<f64>>,
    /// Net number of turns of each angle coordinate (0 for linear ones).
    pub windings: Vec<i64>,
    pub steps: usize,
    pub rejected: usize,
    pub tol: f64,
    pub truncated: bool,
    pub reason: Option<String>,
}

/// A vector field on a chart, evaluated at angle-reduced points.
pub fn chart_field<'a>(chart: &'a Chart, x: &'a HamiltonianField, sign: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>> + 'a {
    move |y: &[f64]| {
        let p = chart.normalize_unchecked(y);
        let mut v = x.eval(&p)?;
        if sign != 1.0 {
            v.iter_mut().for_each(|c| *c *= sign);
        }
        Ok(v)
    }
}

/// Flow of a Hamiltonian field for time `t` (negative times flow backwards),
/// recording every accepted step.
pub fn integrate_flow(x: &HamiltonianField, p0: &[f64], t: f64, opts: &FlowOptions) -> Result<Trajectory> {
    integrate_flow_at(x, p0, t, 0, opts)
}

/// Like [`integrate_flow`] but recording `count + 1` equally spaced times
/// from 0 to `t` (every step when `count` is 0).
pub fn integrate_flow_at(x: &HamiltonianField, p0: &[f64], t: f64, count: usize, opts: &FlowOptions) -> Result<Trajectory> {
    let chart = &x.form.chart;
    chart.check_len(p0)?;
    if !chart.contains(p0, 0.0) {
        return Err(Error::Input(format!("start point {p0:?} lies outside chart `{}`", chart.name)));
    }
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let f = chart_field(chart, x, sign);
    let outputs: Vec<f64> = if count == 0 || t == 0.0 {
        Vec::new()
    } else {
        (0..=count).map(|k| t.abs() * k as f64 / count as f64).collect()
    };
    let sol = integrate(f, p0, t.abs(), &outputs, opts, |y| chart.contains(y, 1e-12));
    Ok(trajectory_from(chart, sol, sign, opts.tol))
}

fn trajectory_from(chart: &Chart, sol: Solution, sign: f64, tol: f64) -> Trajectory {
    let first = sol.states.first().cloned().unwrap_or_default();
    let windings = chart
        .coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.is_angle() {
                (sol.final_state[i].floor() - first[i].floor()) as i64
            } else {
                0
            }
        })
        .collect();
    Trajectory {
        times: sol.times.iter().map(|t| t * sign).collect(),
        points: sol.states.iter().map(|y| chart.normalize_unchecked(y)).collect(),
        windings,
        steps: sol.steps,
        rejected: sol.rejected,
        tol,
        truncated: sol.stopped.is_some(),
        reason: sol.stopped,
    }
}

/// Flow one field for time `t` and return the unwrapped end point; leaving
/// the chart is an error.
pub fn flow_point(x: &HamiltonianField, p: &[f64], t: f64, opts: &FlowOptions) -> Result<Vec<f64>> {
    if t == 0.0 {
        return Ok(p.to_vec());
    }
    let chart = &x.form.chart;
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let sol = integrate(chart_field(chart, x, sign), p, t.abs(), &[], opts, |y| chart.contains(y, 1e-9));
    match sol.stopped {
        None => Ok(sol.final_state),
        Some(r) if r == "left the chart" => Err(Error::NonCompactOrbit(format!("flow left chart `{}`", chart.name))),
        Some(r) => Err(Error::Numerical(r)),
    }
}

/// `φ₁^{τ₁} ∘ ⋯ ∘ φₙ^{τₙ}(p)`, unwrapped.
pub fn joint_flow(sys: &IntegrableSystem, p: &[f64], tau: &[f64], opts: &FlowOptions) -> Result<Vec<f64>> {
    if tau.len() != sys.n() {
        return Err(Error::Dimension {
            expected: sys.n(),
            got: tau.len(),
        });
    }
    let mut y = p.to_vec();
    for i in (0..sys.n()).rev() {
        y = flow_point(&sys.fields[i], &y, tau[i], opts)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_closes_after_two_pi() {
        let f = |y: &[f64]| Ok(vec![y[1], -y[0]]);
        let opts = FlowOptions::with_tol(1e-12);
        let s = integrate(f, &[1.0, 0.0], 2.0 * std::f64::consts::PI, &[], &opts, |_| true);
        assert!(s.stopped.is_none());
        assert!((s.final_state[0] - 1.0).abs() < 1e-9 && s.final_state[1].abs() < 1e-9);
    }

    #[test]
    fn lands_on_requested_outputs() {
        let f = |_: &[f64]| Ok(vec![1.0]);
        let outs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let s = integrate(f, &[0.0], 0.5, &outs, &FlowOptions::default(), |_| true);
        assert_eq!(s.times.len(), 11);
        for (t, y) in s.times.iter().zip(&s.states) {
            assert!((y[0] - t).abs() < 1e-14);
        }
    }

    #[test]
    fn stops_at_boundary() {
        let f = |_: &[f64]| Ok(vec![1.0]);
        let s = integrate(f, &[0.0], 5.0, &[], &FlowOptions::default(), |y| y[0] <= 1.0);
        assert_eq!(s.stopped.as_deref(), Some("left the chart"));
        assert!((s.final_state[0] - 1.0).abs() < 1e-9);
    }
}
