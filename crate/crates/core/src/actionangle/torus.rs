//! Uniformized period lattices, actions, angles and the normal-form check
//! `ω = Σ dσᵢ ∧ dθᵢ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::integrator::{integrate, joint_flow, FlowOptions};
use super::lattice::{gauss_newton, norm, period_lattice, refine_period, LatticeOptions};
use crate::error::{Error, Result};
use crate::geometry::{wrap01, FormKind, SingularForm};
use crate::linalg::solve;
use crate::sampling::halton;
use crate::systems::IntegrableSystem;

/// Eight-point Gauss–Legendre rule on `[0, 1]`: `(node, weight)`.
const GAUSS8: [(f64, f64); 8] = [
    (0.019855071751231856, 0.05061426814518813),
    (0.10166676129318664, 0.11119051722668724),
    (0.2372337950418355, 0.15685332293894363),
    (0.4082826787521751, 0.18134189168918100),
    (0.5917173212478249, 0.18134189168918100),
    (0.7627662049581645, 0.15685332293894363),
    (0.8983332387068134, 0.11119051722668724),
    (0.9801449282487681, 0.05061426814518813),
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ActionAngleOptions {
    pub lattice: LatticeOptions,
    /// Largest relative change of a basis vector between neighbouring base
    /// points before continuation is declared to have jumped.
    pub jump_tol: f64,
    /// Relative `|det ∂μ/∂(section coordinates)|` below which the base map
    /// counts as singular.
    pub singular_rel: f64,
    /// Tolerance for the loop integrals.
    pub loop_flow: FlowOptions,
}

impl Default for ActionAngleOptions {
    fn default() -> Self {
        ActionAngleOptions {
            lattice: LatticeOptions::default(),
            jump_tol: 0.2,
            singular_rel: 1e-8,
            loop_flow: FlowOptions::with_tol(1e-12),
        }
    }
}

/// A local transversal: `fixed` coordinates are pinned, `free` ones solve
/// `μ(q) = μ(p)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Section {
    pub fixed: Vec<(usize, f64)>,
    pub free: Vec<usize>,
}

/// `∂μ/∂x_free` at `p` (rows: observables).
pub fn base_jacobian(sys: &IntegrableSystem, p: &[f64], free: &[usize]) -> Result<DMatrix<f64>> {
    let n = sys.n();
    let mut m = DMatrix::zeros(n, free.len());
    for (i, o) in sys.observables.iter().enumerate() {
        let d = o.differential(sys.chart(), p)?;
        for (k, &j) in free.iter().enumerate() {
            m[(i, k)] = d[j];
        }
    }
    Ok(m)
}

fn base_map_regular(m: &DMatrix<f64>, rel: f64) -> bool {
    let scale: f64 = m.row_iter().map(|r| r.norm()).product();
    scale > 0.0 && m.determinant().abs() > rel * scale
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformSample {
    pub point: Vec<f64>,
    pub values: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
    /// Largest return residual of the basis vectors.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Uniformization {
    pub samples: Vec<UniformSample>,
    pub max_residual: f64,
}

/// Continue a lattice basis from `points[0]` over all `points`, always
/// stepping from the nearest solved point.
pub fn uniformize(sys: &IntegrableSystem, points: &[Vec<f64>], free: &[usize], opts: &ActionAngleOptions) -> Result<Uniformization> {
    if points.is_empty() {
        return Err(Error::Input("uniformization needs at least one base point".into()));
    }
    if free.len() != sys.n() {
        return Err(Error::Config(format!("section needs {} free coordinates, got {}", sys.n(), free.len())));
    }
    for p in points {
        let j = base_jacobian(sys, p, free)?;
        if !base_map_regular(&j, opts.singular_rel) {
            return Err(Error::Continuation(format!(
                "base map is singular at {p:?}: the region meets a singular fiber"
            )));
        }
    }
    let chart = sys.chart();
    let seed = period_lattice(sys, &points[0], &opts.lattice)?;
    let mut samples = vec![UniformSample {
        point: points[0].clone(),
        values: sys.values(&points[0]),
        residual: seed.residuals.iter().cloned().fold(0.0, f64::max),
        basis: seed.basis,
    }];
    let mut todo: Vec<usize> = (1..points.len()).collect();
    while !todo.is_empty() {
        let (ti, si, _) = todo
            .iter()
            .enumerate()
            .flat_map(|(ti, &k)| samples.iter().enumerate().map(move |(si, s)| (ti, si, k, s)))
            .map(|(ti, si, k, s)| (ti, si, chart.distance(&points[k], &s.point)))
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("non-empty");
        let k = todo.swap_remove(ti);
        let p = &points[k];
        let prev = &samples[si];
        let refined = prev
            .basis
            .par_iter()
            .map(|b| refine_period(sys, p, b, &opts.lattice.flow))
            .collect::<Result<Vec<_>>>()?;
        let mut basis = Vec::new();
        let mut residual: f64 = 0.0;
        for ((v, r), old) in refined.into_iter().zip(&prev.basis) {
            let jump = norm(&v.iter().zip(old).map(|(a, b)| a - b).collect::<Vec<_>>());
            if r > opts.lattice.lattice_tol || jump > opts.jump_tol * (1.0 + norm(old)) {
                return Err(Error::Continuation(format!(
                    "lattice basis could not be continued to {p:?} (residual {r:.2e}, jump {jump:.2e})"
                )));
            }
            residual = residual.max(r);
            basis.push(v);
        }
        samples.push(UniformSample {
            point: p.clone(),
            values: sys.values(p),
            basis,
            residual,
        });
    }
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(Uniformization { samples, max_residual })
}

/// Homotopy primitive `λ` of the smooth part of the form (of `β` for
/// b-forms) on a box around `center`: linear coordinates contract to the
/// center, angles are kept.
#[derive(Clone, Debug)]
pub struct Primitive {
    pub form: Arc<SingularForm>,
    pub center: Vec<f64>,
    linear: Vec<usize>,
}

impl Primitive {
    pub fn new(form: Arc<SingularForm>, center: &[f64]) -> Result<Primitive> {
        let chart = &form.chart;
        chart.check_len(center)?;
        if !chart.contains(center, 0.0) {
            return Err(Error::Geometry(format!("primitive center {center:?} lies outside the chart")));
        }
        let linear: Vec<usize> = (0..chart.dim()).filter(|&i| !chart.coords[i].is_angle()).collect();
        let angles: Vec<usize> = (0..chart.dim()).filter(|&i| chart.coords[i].is_angle()).collect();
        let prim = Primitive {
            form,
            center: center.to_vec(),
            linear,
        };
        if angles.len() >= 2 {
            for h in halton(16, angles.len(), 3) {
                let mut q = prim.center.clone();
                for (a, v) in angles.iter().zip(&h) {
                    q[*a] = *v;
                }
                let w = prim.smooth_matrix(&q);
                for (x, &a) in angles.iter().enumerate() {
                    for &b in &angles[x + 1..] {
                        if w[(a, b)].abs() > 1e-10 {
                            return Err(Error::Geometry(format!(
                                "form does not vanish on the torus through {center:?}; it is not exact on the region"
                            )));
                        }
                    }
                }
            }
        }
        Ok(prim)
    }

    fn smooth_matrix(&self, p: &[f64]) -> DMatrix<f64> {
        match &self.form.kind {
            FormKind::Symplectic(w) | FormKind::Folded(w) => w.matrix(p),
            FormKind::BSymplectic { beta, .. } => beta.matrix(p),
        }
    }

    /// Coefficients of `λ` at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let dim = x.len();
        let mut out = vec![0.0; dim];
        let mut q = x.to_vec();
        for &(s, wt) in &GAUSS8 {
            for &i in &self.linear {
                q[i] = self.center[i] + s * (x[i] - self.center[i]);
            }
            let w = self.smooth_matrix(&q);
            for (j, o) in out.iter_mut().enumerate() {
                let mj = if self.form.chart.coords[j].is_angle() { 1.0 } else { s };
                let sum: f64 = self.linear.iter().map(|&i| (x[i] - self.center[i]) * w[(i, j)]).sum();
                *o += wt * mj * sum;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Actions {
    pub sigma: Vec<f64>,
    /// `∮ α` over each basis cycle (zero unless the form is b-symplectic).
    pub singular: Vec<f64>,
}

/// `σᵢ = ∮_{γᵢ} λ` along the cycles `s ↦ Φ(s λᵢ)(p)`, `s ∈ [0, 1]`.
pub fn action_variables(sys: &IntegrableSystem, prim: &Primitive, p: &[f64], basis: &[Vec<f64>], flow: &FlowOptions) -> Result<Actions> {
    let chart = sys.chart();
    let dim = chart.dim();
    let b_parts = match &sys.form.kind {
        FormKind::BSymplectic { alpha, .. } => Some((alpha, sys.form.z().expect("b-form has z"))),
        _ => None,
    };
    let mut sigma = Vec::new();
    let mut singular = Vec::new();
    for lam in basis {
        let field = |y: &[f64]| -> Result<Vec<f64>> {
            let x = chart.normalize_unchecked(&y[..dim]);
            let mut v = vec![0.0; dim];
            for (k, xf) in sys.fields.iter().enumerate() {
                if lam[k] != 0.0 {
                    let xk = xf.eval(&x)?;
                    v.iter_mut().zip(&xk).for_each(|(a, b)| *a += lam[k] * b);
                }
            }
            let l = prim.eval(&x);
            let mut smooth: f64 = l.iter().zip(&v).map(|(a, b)| a * b).sum();
            let mut alpha_y = 0.0;
            if let Some((alpha, z)) = b_parts {
                alpha_y = alpha.covector(&x).iter().zip(&v).map(|(a, b)| a * b).sum();
                smooth += x[z].abs().ln() * alpha_y;
            }
            v.push(smooth);
            v.push(alpha_y);
            Ok(v)
        };
        let mut y0 = p.to_vec();
        y0.extend([0.0, 0.0]);
        let sol = integrate(field, &y0, 1.0, &[], flow, |y| chart.contains(&y[..dim], 1e-9));
        if let Some(r) = sol.stopped {
            return Err(Error::NonCompactOrbit(format!("cycle through {p:?} did not close: {r}")));
        }
        sigma.push(sol.final_state[dim]);
        singular.push(sol.final_state[dim + 1]);
    }
    Ok(Actions { sigma, singular })
}

/// Action-angle chart on a uniformized region.
#[derive(Clone, Debug)]
pub struct TorusChart {
    pub system: IntegrableSystem,
    pub section: Section,
    pub primitive: Primitive,
    pub uniformization: Uniformization,
    pub opts: ActionAngleOptions,
    /// Multiplies each action (identity by default).
    pub action_scale: Vec<f64>,
}

impl TorusChart {
    /// Uniformize over `region` (first point is the seed) and set up the
    /// primitive around `center`.
    pub fn new(
        system: IntegrableSystem,
        section: Section,
        center: &[f64],
        region: &[Vec<f64>],
        opts: ActionAngleOptions,
    ) -> Result<TorusChart> {
        let primitive = Primitive::new(system.form.clone(), center)?;
        let uniformization = uniformize(&system, region, &section.free, &opts)?;
        let n = system.n();
        Ok(TorusChart {
            system,
            section,
            primitive,
            uniformization,
            opts,
            action_scale: vec![1.0; n],
        })
    }

    pub fn with_action_scale(mut self, i: usize, k: f64) -> TorusChart {
        self.action_scale[i] = k;
        self
    }

    /// Point of the section on the torus through `p`.
    pub fn section_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        let sys = &self.system;
        let target = sys.values(p);
        let mut q = p.to_vec();
        for &(i, v) in &self.section.fixed {
            q[i] = v;
        }
        let scale = 1.0 + norm(&target);
        for _ in 0..60 {
            let r: Vec<f64> = sys.values(&q).iter().zip(&target).map(|(a, b)| a - b).collect();
            if norm(&r) < 1e-13 * scale {
                return Ok(q);
            }
            let j = base_jacobian(sys, &q, &self.section.free)?;
            if !base_map_regular(&j, self.opts.singular_rel) {
                return Err(Error::Geometry(format!("section is not transversal to the torus at {q:?}")));
            }
            let dx = solve(&j, &DVector::from_vec(r))?;
            for (k, &i) in self.section.free.iter().enumerate() {
                q[i] -= dx[k];
            }
            if !sys.chart().contains(&q, 0.0) {
                return Err(Error::Geometry(format!("section leaves the chart near {q:?}")));
            }
        }
        Err(Error::Numerical(format!("section point for {p:?} did not converge")))
    }

    /// Lattice basis on the torus through `x` (a section point), continued
    /// from the nearest uniformized sample.
    pub fn lattice_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let vals = self.system.values(x);
        let nearest = self
            .uniformization
            .samples
            .iter()
            .min_by(|a, b| dist(&a.values, &vals).total_cmp(&dist(&b.values, &vals)))
            .expect("uniformization is non-empty");
        nearest
            .basis
            .iter()
            .map(|b| {
                let (v, r) = refine_period(&self.system, x, b, &self.opts.lattice.flow)?;
                if r > self.opts.lattice.lattice_tol {
                    return Err(Error::Continuation(format!("lattice not found at {x:?} (residual {r:.2e})")));
                }
                Ok(v)
            })
            .collect()
    }

    pub fn actions(&self, p: &[f64]) -> Result<Actions> {
        let x = self.section_point(p)?;
        let basis = self.lattice_at(&x)?;
        let mut a = action_variables(&self.system, &self.primitive, &x, &basis, &self.opts.loop_flow)?;
        for (s, k) in a.sigma.iter_mut().zip(&self.action_scale) {
            *s *= k;
        }
        Ok(a)
    }

    /// Angles in `[0, 1)`: flow times along `Yᵢ` from the section point.
    pub fn angles(&self, p: &[f64]) -> Result<Vec<f64>> {
        let x = self.section_point(p)?;
        let basis = self.lattice_at(&x)?;
        let n = self.system.n();
        let flow = &self.opts.lattice.flow;
        let tau = |s: &[f64]| -> Vec<f64> { (0..n).map(|k| (0..n).map(|i| s[i] * basis[i][k]).sum()).collect() };
        let residual = |s: &[f64]| -> Result<Vec<f64>> {
            let q = joint_flow(&self.system, &x, &tau(s), flow)?;
            Ok(self.system.chart().wrapped_diff(&q, p))
        };
        let starts: Vec<Vec<f64>> = (0..4usize.pow(n as u32))
            .map(|k| (0..n).map(|i| ((k / 4usize.pow(i as u32)) % 4) as f64 * 0.25).collect())
            .collect();
        let best = starts
            .par_iter()
            .filter_map(|s| residual(s).ok().map(|r| (s.clone(), norm(&r))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Numerical(format!("no flow from the section reaches {p:?}")))?;
        let (s, r) = gauss_newton(residual, &best.0)?;
        if r > 1e-8 {
            return Err(Error::Numerical(format!("angle solve at {p:?} stalled at residual {r:.2e}")));
        }
        Ok(s.into_iter().map(wrap01).collect())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalFormReport {
    pub samples: usize,
    /// Largest entry of `W − Σ (dσᵢ⊗dθᵢ − dθᵢ⊗dσᵢ)`.
    pub max_residual: f64,
    pub at: Option<Vec<f64>>,
    pub step: f64,
}

/// Compare the form with `Σ dσᵢ ∧ dθᵢ` using central differences of the
/// computed actions and angles.
pub fn normal_form_residual(chart: &TorusChart, samples: &[Vec<f64>], step: f64) -> Result<NormalFormReport> {
    let sys = &chart.system;
    let dim = sys.chart().dim();
    let n = sys.n();
    let per_point = samples
        .par_iter()
        .map(|p| -> Result<f64> {
            let mut ds = vec![vec![0.0; dim]; n];
            let mut dt = vec![vec![0.0; dim]; n];
            for j in 0..dim {
                let mut a = p.clone();
                let mut b = p.clone();
                a[j] += step;
                b[j] -= step;
                let (sa, sb) = (chart.actions(&a)?.sigma, chart.actions(&b)?.sigma);
                let (ta, tb) = (chart.angles(&a)?, chart.angles(&b)?);
                for i in 0..n {
                    ds[i][j] = (sa[i] - sb[i]) / (2.0 * step);
                    dt[i][j] = crate::geometry::wrap_half(ta[i] - tb[i]) / (2.0 * step);
                }
            }
            let w = sys.form.matrix(p);
            let mut worst: f64 = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    let model: f64 = (0..n).map(|i| ds[i][a] * dt[i][b] - dt[i][a] * ds[i][b]).sum();
                    worst = worst.max((w[(a, b)] - model).abs());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut max_residual, mut at) = (0.0, None);
    for (p, r) in samples.iter().zip(per_point) {
        if at.is_none() || r > max_residual {
            max_residual = r;
            at = Some(p.clone());
        }
    }
    Ok(NormalFormReport {
        samples: samples.len(),
        max_residual,
        at,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, Coord, ScalarField, TwoFormField};
    use crate::hamiltonian::Observable;

    /// `ω = dθ₁∧dp₁ + dθ₂∧dp₂` with observables `(p₁²/2 + p₂, p₂)`: a
    /// sheared lattice whose actions are `(−p₁, −p₂)` up to orientation.
    fn sheared() -> IntegrableSystem {
        let c = Chart::new(
            "sheared",
            vec![
                Coord::angle("th1"),
                Coord::angle("th2"),
                Coord::linear("p1", 0.5, 1.5),
                Coord::linear("p2", -1.0, 1.0),
            ],
            None,
        )
        .unwrap();
        let names = c.names();
        let w = TwoFormField::new(4)
            .with(0, 2, ScalarField::constant(1.0))
            .with(1, 3, ScalarField::constant(1.0));
        let form = Arc::new(SingularForm::symplectic(c, w).unwrap());
        IntegrableSystem::new(
            "sheared",
            form,
            vec![
                ("f1".into(), Observable::Smooth(ScalarField::parse("p1^2/2 + p2", &names).unwrap())),
                ("f2".into(), Observable::Smooth(ScalarField::parse("p2", &names).unwrap())),
            ],
        )
        .unwrap()
    }

    fn chart() -> TorusChart {
        let sys = sheared();
        let region: Vec<Vec<f64>> = (0..5).map(|k| vec![0.0, 0.0, 0.8 + 0.1 * k as f64, 0.1]).collect();
        let opts = ActionAngleOptions {
            lattice: LatticeOptions {
                t_max: 3.0,
                ..LatticeOptions::default()
            },
            ..ActionAngleOptions::default()
        };
        let section = Section {
            fixed: vec![(0, 0.0), (1, 0.0)],
            free: vec![2, 3],
        };
        TorusChart::new(sys, section, &[0.0, 0.0, 1.0, 0.0], &region, opts).unwrap()
    }

    #[test]
    fn primitive_of_a_constant_form() {
        let sys = sheared();
        let prim = Primitive::new(sys.form.clone(), &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let l = prim.eval(&[0.3, 0.4, 1.2, 0.5]);
        // ω = dθ∧dp ⇒ λ = −(p − c) dθ.
        assert!((l[0] + 0.2).abs() < 1e-14 && (l[1] + 0.5).abs() < 1e-14);
        assert_eq!(&l[2..], &[0.0, 0.0]);
    }

    #[test]
    fn normal_form_holds_and_detects_corruption() {
        let tc = chart();
        let pts = vec![vec![0.3, 0.6, 1.0, 0.2], vec![0.7, 0.1, 0.9, -0.1]];
        let r = normal_form_residual(&tc, &pts, 1e-4).unwrap();
        assert!(r.max_residual < 1e-6, "{r:?}");
        let bad = tc.with_action_scale(0, 1.1);
        let r = normal_form_residual(&bad, &pts, 1e-4).unwrap();
        assert!(r.max_residual > 0.05, "{r:?}");
    }

    #[test]
    fn singular_base_map_stops_continuation() {
        let sys = sheared().with_observable(0, Observable::Smooth(ScalarField::coordinate(3))).unwrap();
        let err = uniformize(&sys, &[vec![0.0, 0.0, 1.0, 0.0]], &[2, 3], &ActionAngleOptions::default());
        assert!(matches!(err, Err(Error::Continuation(_))));
    }
}
