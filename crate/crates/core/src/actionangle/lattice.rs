//! Period lattices of the joint flow `Φ(τ) = φ₁^{τ₁} ∘ ⋯ ∘ φₙ^{τₙ}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::integrator::{chart_field, integrate, joint_flow, FlowOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianField;
use crate::linalg::least_squares;
use crate::systems::IntegrableSystem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeOptions {
    /// Search box `[0, t_max]ⁿ`.
    pub t_max: f64,
    pub grid_step: f64,
    /// Integrator tolerance for the coarse grid.
    pub search_tol: f64,
    /// Integrator tolerance for refinement.
    pub flow: FlowOptions,
    /// Accepted return residual `|Φ(λ)(p) − p|`.
    pub lattice_tol: f64,
    /// Grid minima refined per search.
    pub candidates: usize,
    /// Grid minima with larger residual are ignored.
    pub candidate_max: f64,
    /// Smallest `|det|` for a basis.
    pub det_tol: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions {
            t_max: 10.0,
            grid_step: 0.05,
            search_tol: 1e-7,
            flow: FlowOptions::with_tol(1e-11),
            lattice_tol: 1e-7,
            candidates: 24,
            candidate_max: 0.3,
            det_tol: 1e-6,
        }
    }
}

impl LatticeOptions {
    /// Coarser grid for three or more degrees of freedom.
    pub fn for_dofs(n: usize) -> LatticeOptions {
        let mut o = LatticeOptions::default();
        if n >= 3 {
            o.t_max = 5.0;
            o.grid_step = 0.1;
        }
        o
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodLattice {
    pub base: Vec<f64>,
    /// Reduced, right-handed basis `λ₁, …, λₙ`.
    pub basis: Vec<Vec<f64>>,
    /// Return residual of each basis vector.
    pub residuals: Vec<f64>,
    /// Residual of `Φ(λ₁ + ⋯ + λₙ)`.
    pub closure_residual: f64,
    /// Every refined lattice vector found by the search.
    pub found: Vec<Vec<f64>>,
}

impl PeriodLattice {
    pub fn det(&self) -> f64 {
        det(&self.basis)
    }
}

fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Wrapped displacement `Φ(τ)(p) − p`.
pub fn return_residual(sys: &IntegrableSystem, p: &[f64], tau: &[f64], flow: &FlowOptions) -> Result<Vec<f64>> {
    let q = joint_flow(sys, p, tau, flow)?;
    Ok(sys.chart().wrapped_diff(&q, p))
}

/// Gauss–Newton on the wrapped return residual. Returns the refined vector
/// and its residual norm.
pub fn refine_period(sys: &IntegrableSystem, p: &[f64], tau0: &[f64], flow: &FlowOptions) -> Result<(Vec<f64>, f64)> {
    gauss_newton(|tau| return_residual(sys, p, tau, flow), tau0)
}

/// Damped Gauss–Newton with a central-difference Jacobian. Residual
/// components are wrapped quantities, so their differences are re-wrapped.
pub(crate) fn gauss_newton<F>(f: F, x0: &[f64]) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    let mut rn = norm(&r);
    for _ in 0..30 {
        if rn < 1e-13 {
            break;
        }
        let cols = (0..n)
            .into_par_iter()
            .map(|k| {
                let d = 1e-6 * x[k].abs().max(1.0);
                let mut a = x.clone();
                let mut b = x.clone();
                a[k] += d;
                b[k] -= d;
                let ra = f(&a)?;
                let rb = f(&b)?;
                Ok(ra.iter().zip(&rb).map(|(u, v)| wrap_pair(u - v) / (2.0 * d)).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let m = r.len();
        let j = DMatrix::from_fn(m, n, |i, k| cols[k][i]);
        let step = least_squares(&j, &DVector::from_column_slice(&r), 1e-12);
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(t, s)| t - scale * s).collect();
            if let Ok(rc) = f(&cand) {
                let cn = norm(&rc);
                if cn < rn {
                    x = cand;
                    r = rc;
                    rn = cn;
                    improved = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !improved || step.norm() * scale < 1e-15 {
            break;
        }
    }
    Ok((x, rn))
}

// Differences of wrapped residuals can jump by a full turn.
fn wrap_pair(x: f64) -> f64 {
    if x.abs() > 0.5 {
        x - x.round()
    } else {
        x
    }
}

/// Residual `|Φ(τ)(p) − p|` over the grid `{0, h, …, t_max}ⁿ`, flattened with
/// the first time index varying fastest.
fn grid_residuals(sys: &IntegrableSystem, p: &[f64], times: &[f64], opts: &LatticeOptions) -> Vec<f64> {
    let chart = sys.chart();
    let m = times.len();
    let t_end = *times.last().unwrap();
    let flow = FlowOptions {
        tol: opts.search_tol,
        h_max: opts.grid_step.max(0.05),
        ..opts.flow
    };
    let outputs = |x: &HamiltonianField, y: &[f64]| -> Vec<Option<Vec<f64>>> {
        let sol = integrate(chart_field(chart, x, 1.0), y, t_end, times, &flow, |q| chart.contains(q, 1e-9));
        let mut out: Vec<Option<Vec<f64>>> = sol.states.into_iter().map(Some).collect();
        out.resize(m, None);
        out
    };
    // States after flowing the last fields, most significant index first.
    let mut layer: Vec<Option<Vec<f64>>> = vec![Some(p.to_vec())];
    for k in (1..sys.n()).rev() {
        layer = layer
            .par_iter()
            .flat_map_iter(|y| match y {
                Some(y) => outputs(&sys.fields[k], y),
                None => vec![None; m],
            })
            .collect();
    }
    // `layer[j]` holds the state for the higher indices; expand field 0.
    let rows: Vec<Vec<f64>> = layer
        .par_iter()
        .map(|y| match y {
            Some(y) => outputs(&sys.fields[0], y)
                .into_iter()
                .map(|q| q.map_or(f64::INFINITY, |q| chart.distance(&q, p)))
                .collect(),
            None => vec![f64::INFINITY; m],
        })
        .collect();
    // Row j has field 1 least significant, so the flat index is `i₀ + m·j`.
    let mut out = Vec::with_capacity(m * rows.len());
    for row in rows {
        out.extend(row);
    }
    out
}

fn unflatten(mut k: usize, m: usize, n: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(n);
    for _ in 0..n {
        idx.push(k % m);
        k /= m;
    }
    idx
}

fn local_minima(values: &[f64], m: usize, n: usize) -> Vec<(usize, f64)> {
    let mut mins = Vec::new();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(n as u32))
        .map(|k| unflatten(k, 3, n).into_iter().map(|d| d as i64 - 1).collect())
        .filter(|o: &Vec<i64>| o.iter().any(|&d| d != 0))
        .collect();
    for (k, &v) in values.iter().enumerate() {
        if k == 0 || !v.is_finite() {
            continue;
        }
        let idx = unflatten(k, m, n);
        let is_min = offsets.iter().all(|o| {
            let mut flat = 0;
            let mut stride = 1;
            for (i, d) in idx.iter().zip(o) {
                let j = *i as i64 + d;
                if j < 0 || j >= m as i64 {
                    return true;
                }
                flat += j as usize * stride;
                stride *= m;
            }
            values[flat] >= v
        });
        if is_min {
            mins.push((k, v));
        }
    }
    mins.sort_by(|a, b| a.1.total_cmp(&b.1));
    mins
}

/// Lagrange–Gauss reduction in two dimensions, greedy size reduction above.
pub fn reduce_basis(basis: &mut [Vec<f64>]) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    for _ in 0..100 {
        basis.sort_by(|a, b| norm(a).total_cmp(&norm(b)));
        let mut changed = false;
        for i in 1..basis.len() {
            for j in 0..i {
                let k = (dot(&basis[i], &basis[j]) / dot(&basis[j], &basis[j])).round();
                if k != 0.0 {
                    let bj = basis[j].clone();
                    let cand: Vec<f64> = basis[i].iter().zip(&bj).map(|(x, y)| x - k * y).collect();
                    if norm(&cand) < norm(&basis[i]) - 1e-12 {
                        basis[i] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn choose_basis(found: &[Vec<f64>], n: usize, det_tol: f64) -> Option<Vec<Vec<f64>>> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    if found.len() < n {
        return None;
    }
    loop {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| found[i].clone()).collect();
        let d = det(&rows).abs();
        if d > det_tol && best.as_ref().is_none_or(|(b, _)| d < *b - 1e-9) {
            best = Some((d, idx.clone()));
        }
        // Next combination.
        let mut k = n;
        loop {
            if k == 0 {
                return best.map(|(_, ix)| ix.iter().map(|&i| found[i].clone()).collect());
            }
            k -= 1;
            if idx[k] < found.len() - n + k {
                idx[k] += 1;
                for l in k + 1..n {
                    idx[l] = idx[l - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Reduced basis of the period lattice of the joint flow through `p`.
pub fn period_lattice(sys: &IntegrableSystem, p: &[f64], opts: &LatticeOptions) -> Result<PeriodLattice> {
    let chart = sys.chart();
    chart.check_len(p)?;
    if !chart.contains(p, 0.0) {
        return Err(Error::Input(format!("base point {p:?} lies outside chart `{}`", chart.name)));
    }
    let n = sys.n();
    let m = (opts.t_max / opts.grid_step).round() as usize + 1;
    let times: Vec<f64> = (0..m).map(|i| i as f64 * opts.grid_step).collect();
    let grid = grid_residuals(sys, p, &times, opts);
    if grid.iter().skip(1).all(|v| !v.is_finite()) {
        return Err(Error::NonCompactOrbit(format!("every flow from {p:?} leaves the chart")));
    }
    let mins: Vec<Vec<f64>> = local_minima(&grid, m, n)
        .into_iter()
        .filter(|(_, v)| *v < opts.candidate_max)
        .take(opts.candidates)
        .map(|(k, _)| unflatten(k, m, n).iter().map(|&i| times[i]).collect())
        .collect();
    let refined: Vec<(Vec<f64>, f64)> = mins
        .par_iter()
        .filter_map(|t0| refine_period(sys, p, t0, &opts.flow).ok())
        .collect();
    let mut found: Vec<Vec<f64>> = Vec::new();
    for (v, r) in refined {
        if r <= opts.lattice_tol && norm(&v) > 1e-6 && !found.iter().any(|u| norm(&sub(u, &v)) < 1e-6) {
            found.push(v);
        }
    }
    let Some(mut basis) = choose_basis(&found, n, opts.det_tol) else {
        return Err(Error::NonCompactOrbit(format!(
            "found {} independent periods at {p:?}, need {n} (search box [0, {}])",
            found.len(),
            opts.t_max
        )));
    };
    reduce_basis(&mut basis);
    if det(&basis) < 0.0 {
        basis[n - 1].iter_mut().for_each(|x| *x = -*x);
    }
    let residuals = basis
        .iter()
        .map(|b| Ok(norm(&return_residual(sys, p, b, &opts.flow)?)))
        .collect::<Result<Vec<_>>>()?;
    let sum: Vec<f64> = (0..n).map(|k| basis.iter().map(|b| b[k]).sum()).collect();
    let closure_residual = norm(&return_residual(sys, p, &sum, &opts.flow)?);
    Ok(PeriodLattice {
        base: p.to_vec(),
        basis,
        residuals,
        closure_residual,
        found,
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// First return time of a single field through `p`.
pub fn first_return_time(x: &HamiltonianField, p: &[f64], opts: &LatticeOptions) -> Result<f64> {
    let chart = &x.form.chart;
    let m = (opts.t_max / opts.grid_step).round() as usize + 1;
    let times: Vec<f64> = (0..m).map(|i| i as f64 * opts.grid_step).collect();
    let flow = FlowOptions {
        tol: opts.search_tol,
        ..opts.flow
    };
    let sol = integrate(chart_field(chart, x, 1.0), p, opts.t_max, &times, &flow, |q| chart.contains(q, 1e-9));
    let d: Vec<f64> = sol.states.iter().map(|q| chart.distance(q, p)).collect();
    let residual = |t: f64| -> Result<f64> {
        let q = super::integrator::flow_point(x, p, t, &opts.flow)?;
        Ok(chart.distance(&q, p))
    };
    for k in 1..d.len().saturating_sub(1) {
        if d[k] <= d[k - 1] && d[k] <= d[k + 1] && d[k] < opts.candidate_max {
            // Golden-section search on the bracket, then a secant polish on
            // the signed return along the flow direction.
            let (mut a, mut b) = (times[k - 1], times[k + 1]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let c = b - g * (b - a);
                let e = a + g * (b - a);
                if residual(c)? < residual(e)? {
                    b = e;
                } else {
                    a = c;
                }
                if b - a < 1e-12 {
                    break;
                }
            }
            let t = 0.5 * (a + b);
            if residual(t)? <= opts.lattice_tol.sqrt() {
                return Ok(t);
            }
        }
    }
    Err(Error::NonCompactOrbit(format!(
        "no return within time {} from {p:?}",
        opts.t_max
    )))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{Chart, Coord, ScalarField, SingularForm, TwoFormField};
    use crate::hamiltonian::Observable;

    /// `T*T²` with `ω = Σ dθᵢ∧dpᵢ` and observables `pᵢ`, so `X_{pᵢ} = −∂θᵢ`.
    fn cotangent_torus() -> IntegrableSystem {
        let c = Chart::new(
            "t*t2",
            vec![
                Coord::angle("th1"),
                Coord::angle("th2"),
                Coord::linear("p1", -1.0, 1.0),
                Coord::linear("p2", -1.0, 1.0),
            ],
            None,
        )
        .unwrap();
        let w = TwoFormField::new(4)
            .with(0, 2, ScalarField::constant(1.0))
            .with(1, 3, ScalarField::constant(1.0));
        let form = Arc::new(SingularForm::symplectic(c, w).unwrap());
        IntegrableSystem::new(
            "t*t2",
            form,
            vec![
                ("p1".into(), Observable::Smooth(ScalarField::coordinate(2))),
                ("p2".into(), Observable::Smooth(ScalarField::coordinate(3))),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unit_lattice_of_the_cotangent_torus() {
        let sys = cotangent_torus();
        let opts = LatticeOptions {
            t_max: 3.0,
            ..LatticeOptions::default()
        };
        let l = period_lattice(&sys, &[0.1, 0.2, 0.3, -0.4], &opts).unwrap();
        assert!((l.det().abs() - 1.0).abs() < 1e-8);
        for b in &l.basis {
            let mut a: Vec<f64> = b.iter().map(|x| x.abs()).collect();
            a.sort_by(f64::total_cmp);
            assert!(a[0].abs() < 1e-8 && (a[1] - 1.0).abs() < 1e-8, "{b:?}");
        }
        assert!(l.closure_residual < 1e-8);
    }

    #[test]
    fn reduction_recovers_short_basis() {
        let mut b = vec![vec![1.0, 0.0], vec![5.0, 1.0]];
        reduce_basis(&mut b);
        assert_eq!(b, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn first_return_of_a_rotation() {
        let sys = cotangent_torus();
        let t = first_return_time(&sys.fields[0], &[0.3, 0.0, 0.0, 0.0], &LatticeOptions::default()).unwrap();
        assert!((t - 1.0).abs() < 1e-7);
    }
}
