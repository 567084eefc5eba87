//! Finite-order point maps and averaging of functions over them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{Chart, ScalarField};
use crate::sampling::SamplePlan;

/// A point map of a chart given by one expression per coordinate (angle
/// outputs are reduced modulo 1 on application).
#[derive(Clone, Debug)]
pub struct PointMap {
    pub chart: Chart,
    pub map: Vec<Expr>,
}

impl PointMap {
    pub fn new(chart: Chart, map: Vec<Expr>) -> Result<PointMap> {
        if map.len() != chart.dim() {
            return Err(Error::Dimension {
                expected: chart.dim(),
                got: map.len(),
            });
        }
        if let Some(v) = map.iter().filter_map(Expr::max_var).max() {
            if v >= chart.dim() {
                return Err(Error::Config(format!("point map refers to coordinate {v} of a {}-dimensional chart", chart.dim())));
            }
        }
        Ok(PointMap { chart, map })
    }

    pub fn identity(chart: Chart) -> PointMap {
        let map = (0..chart.dim()).map(Expr::Var).collect();
        PointMap { chart, map }
    }

    /// Rotation `θ ↦ θ + a` of the angle coordinate `angle`.
    pub fn rotation(chart: Chart, angle: usize, a: f64) -> PointMap {
        let map = (0..chart.dim())
            .map(|i| if i == angle { Expr::Var(i) + Expr::Num(a) } else { Expr::Var(i) })
            .collect();
        PointMap { chart, map }
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let q: Vec<f64> = self.map.iter().map(|e| e.value(p)).collect();
        self.chart.normalize_unchecked(&q)
    }

    pub fn apply_n(&self, p: &[f64], k: usize) -> Vec<f64> {
        (0..k).fold(p.to_vec(), |q, _| self.apply(&q))
    }

    /// `φ ∘ ⋯ ∘ φ` (`k` times) as expressions, unreduced.
    pub fn power(&self, k: usize) -> Vec<Expr> {
        (0..k).fold((0..self.chart.dim()).map(Expr::Var).collect(), |acc: Vec<Expr>, _| {
            self.map.iter().map(|e| e.substitute(&acc)).collect()
        })
    }

    /// Largest chart distance `|φᵏ(p) − p|` over the samples.
    pub fn power_residual(&self, k: usize, samples: &[Vec<f64>]) -> f64 {
        samples
            .iter()
            .map(|p| self.chart.distance(&self.apply_n(p, k), p))
            .fold(0.0, f64::max)
    }

    pub fn is_identity_on(&self, samples: &[Vec<f64>], tol: f64) -> bool {
        self.power_residual(1, samples) <= tol
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragingReport {
    pub order: usize,
    pub invariance_residual: f64,
    /// `max ‖dF‖` over the samples.
    pub non_constancy: f64,
    pub rendered: Option<String>,
    /// Set when the first average was constant and a perturbed input was used.
    pub retried: Option<String>,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Averaged {
    pub function: ScalarField,
    pub report: AveragingReport,
}

/// Non-constancy below this counts as a constant average.
pub const CONSTANT_TOL: f64 = 1e-6;

fn sum_over_orbit(f: &ScalarField, action: &PointMap, order: usize) -> Result<ScalarField> {
    let mut total = f.clone();
    for i in 1..order {
        total = total.add(&f.compose(&action.power(i)));
    }
    if f.expr().is_none() {
        return Err(Error::Unsupported("averaging needs an expression-backed function".into()));
    }
    Ok(total)
}

fn measure(f: &ScalarField, action: &PointMap, samples: &[Vec<f64>]) -> (f64, f64) {
    let mut inv: f64 = 0.0;
    let mut grad: f64 = 0.0;
    for p in samples {
        inv = inv.max((f.value(&action.apply(p)) - f.value(p)).abs());
        grad = grad.max(f.gradient(p).iter().map(|g| g * g).sum::<f64>().sqrt());
    }
    (inv, grad)
}

/// `F = Σ_{i=0}^{k−1} f ∘ φⁱ`, invariant under a map of verified order `k`.
/// A constant average is retried once with `f + 0.1·x` for the first linear
/// coordinate `x`.
pub fn average_invariant_function(f: &ScalarField, action: &PointMap, order: usize, plan: &SamplePlan) -> Result<Averaged> {
    let chart = &action.chart;
    let samples = plan.interior_points(chart);
    if order == 0 || action.power_residual(order, &samples) > 1e-9 {
        return Err(Error::Precondition(format!("point map does not have order {order} on the samples")));
    }
    let names = chart.names();
    let mut total = sum_over_orbit(f, action, order)?;
    let (mut inv, mut grad) = measure(&total, action, &samples);
    let mut retried = None;
    if grad < CONSTANT_TOL {
        let Some(x) = (0..chart.dim()).find(|&i| !chart.coords[i].is_angle()) else {
            return Err(Error::Precondition("constant average and no linear coordinate to perturb".into()));
        };
        let g = f.add(&ScalarField::coordinate(x).scale(0.1));
        total = sum_over_orbit(&g, action, order)?;
        (inv, grad) = measure(&total, action, &samples);
        retried = Some(format!(
            "average was constant; retried with f + 0.1*{}",
            chart.coords[x].name
        ));
    }
    Ok(Averaged {
        report: AveragingReport {
            order,
            invariance_residual: inv,
            non_constancy: grad,
            rendered: total.expr().map(|e| e.render(&names)),
            retried,
            pass: inv <= 1e-12 && grad >= CONSTANT_TOL,
        },
        function: total,
    })
}
