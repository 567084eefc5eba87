//! A b-integrable system on a 4-dimensional neighbourhood of a mapping torus
//! `Z = S² ×_φ S¹` with finite-order rotation monodromy, glued to Darboux
//! polydisk systems in the exterior slab.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::averaging::{average_invariant_function, AveragingReport};
use super::desing::desingularize;
use super::mapping_torus::{exceptional_orbits, ExceptionalPoint, MappingTorus};
use crate::error::{Error, Result};
use crate::expr::{Expr, Func};
use crate::geometry::{wrap_half, Chart, Coord, OneFormField, ScalarField, SingularForm, TwoFormField};
use crate::hamiltonian::Observable;
use crate::sampling::SamplePlan;
use crate::systems::{check_commutation, check_independence, CommutationReport, IndependenceReport, IntegrableSystem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Build4dParams {
    /// Coefficient of `log|t|` in the first function.
    pub c: f64,
    /// Radius of the neighbourhood `U = {|t| < ε}`.
    pub eps: f64,
    /// Bump plateau `|t| ≤ δ` and support `|t| < δ′`.
    pub delta: f64,
    pub delta_prime: f64,
    /// Leaf function averaged over the monodromy (coordinates `h`, `phi`).
    pub leaf_function: String,
    /// Polydisk grid in the exterior slab: cells along `s`, `h` and `phi`.
    pub cells: [usize; 3],
    /// Cutoff plateau as a fraction of the unit level `Q = 1`.
    pub plateau: f64,
}

impl Default for Build4dParams {
    fn default() -> Self {
        Build4dParams {
            c: 1.0,
            eps: 0.97,
            delta: 0.5,
            delta_prime: 0.96,
            leaf_function: "h + cos(2*pi*phi)".into(),
            cells: [1, 2, 2],
            plateau: 0.8,
        }
    }
}

/// One exterior polydisk in Darboux coordinates `(u = log|t|, s) × (h, φ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polydisk {
    pub center: [f64; 4],
    pub radii: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct Built4d {
    pub system: IntegrableSystem,
    pub params: Build4dParams,
    pub rotation: f64,
    pub averaging: AveragingReport,
    pub polydisks: Vec<Polydisk>,
    /// Traces of exceptional orbits as points of `Z`.
    pub exceptional: Vec<ExceptionalPoint>,
    /// Sums of the polydisk functions added to each observable.
    exterior: [Expr; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Build4dReport {
    pub commutation: CommutationReport,
    pub independence: IndependenceReport,
    pub pass: bool,
}

/// Rotation amount `a` if the monodromy is `(h, φ) ↦ (h, φ + a)`.
fn rotation_amount(mt: &MappingTorus) -> Result<f64> {
    let leaf = &mt.leaf;
    let is_sphere = leaf.dim() == 2 && leaf.sphere_pairs == [(0, 1)];
    if !is_sphere {
        return Err(Error::Unsupported("the 4-dimensional builder needs a sphere leaf chart (h, phi)".into()));
    }
    let pts = SamplePlan::new(64, 0, 23).interior_points(leaf);
    let a = wrap_half(mt.monodromy.apply(&pts[0])[1] - pts[0][1]);
    for p in &pts {
        let q = mt.monodromy.apply(p);
        if (q[0] - p[0]).abs() > 1e-12 || wrap_half(q[1] - p[1] - a).abs() > 1e-12 {
            return Err(Error::Unsupported("the 4-dimensional builder handles rotation monodromies only".into()));
        }
    }
    Ok(a)
}

fn call(f: Func, args: Vec<Expr>) -> Expr {
    Expr::Call(f, args)
}

fn sq(e: Expr) -> Expr {
    Expr::Pow(Box::new(e), Box::new(Expr::Num(2.0)))
}

/// `sin(π(x − x₀)) / (π r)`: a periodic coordinate centred at `x₀`.
fn periodic_offset(x: Expr, x0: f64, r: f64) -> Expr {
    let pi = std::f64::consts::PI;
    call(Func::Sin, vec![Expr::Num(pi) * (x - Expr::Num(x0))]) * Expr::Num(1.0 / (pi * r))
}

/// Chart `(h, psi, s, t)`; the leaf point over `s` is `φ = ψ + a·s`.
pub fn build_chart() -> Result<Chart> {
    Chart::new(
        "mapping_torus_collar",
        vec![
            Coord::linear("h", -1.0, 1.0),
            Coord::angle("psi"),
            Coord::angle("s"),
            Coord::linear("t", -1.0, 1.0),
        ],
        Some(3),
    )?
    .with_sphere_pair(0, 1)
}

pub fn build_b_integrable_4d(mt: &MappingTorus, params: &Build4dParams) -> Result<Built4d> {
    let k = mt
        .order
        .ok_or_else(|| Error::Unsupported("monodromy of infinite order: no circle action near Z".into()))?;
    let Build4dParams {
        c,
        eps,
        delta,
        delta_prime,
        plateau,
        ..
    } = *params;
    if !(0.0 < delta && delta < delta_prime) {
        return Err(Error::Config(format!("bump needs 0 < δ < δ′, got δ = {delta}, δ′ = {delta_prime}")));
    }
    if delta_prime >= eps {
        return Err(Error::Config(format!("bump support δ′ = {delta_prime} must lie inside U (ε = {eps})")));
    }
    if !(eps < 1.0) {
        return Err(Error::Config(format!("ε = {eps} must be below the chart edge |t| = 1")));
    }
    if !(0.0 < plateau && plateau < 1.0) || params.cells.contains(&0) {
        return Err(Error::Config("polydisk plateau must lie in (0, 1) and every cell count be positive".into()));
    }
    if c == 0.0 {
        return Err(Error::DegenerateLift("coefficient of log|t| must be non-zero".into()));
    }
    let a = rotation_amount(mt)?;
    let leaf_names = mt.leaf.names();
    let f = ScalarField::parse(&params.leaf_function, &leaf_names)?;
    let averaged = average_invariant_function(&f, &mt.monodromy, k, &SamplePlan::new(400, 0, 29))?;
    let big_f = averaged.function.expr().expect("averages are expressions").clone();

    let chart = build_chart()?;
    let (h, psi, s, t) = (Expr::Var(0), Expr::Var(1), Expr::Var(2), Expr::Var(3));
    let phi = psi + Expr::Num(a) * s.clone();
    let leaf_map = [h.clone(), phi.clone()];
    let f_tilde = big_f.substitute(&leaf_map);

    let w_leaf = mt
        .leaf_form
        .entries
        .iter()
        .map(|(i, j, w)| {
            let e = w.expr().ok_or_else(|| Error::Unsupported("leaf form must be expression-backed".into()))?;
            let sign = if (*i, *j) == (0, 1) { 1.0 } else { -1.0 };
            Ok(Expr::Num(sign) * e.substitute(&leaf_map))
        })
        .collect::<Result<Vec<_>>>()?;
    let w = w_leaf.into_iter().fold(Expr::Num(0.0), |acc, e| acc + e);
    let alpha = OneFormField::new(4).with(2, ScalarField::constant(mt.period));
    let beta = TwoFormField::new(4)
        .with(0, 1, ScalarField::from_expr(w.clone()))
        .with(0, 2, ScalarField::from_expr(Expr::Num(a) * w));
    let form = Arc::new(SingularForm::b_symplectic(chart, alpha, beta)?);

    // Plateau function of t and its b-function part.
    let bump = call(Func::Bump, vec![t.clone(), Expr::Num(delta), Expr::Num(delta_prime)]);
    let u = call(Func::Flog, vec![t.clone(), Expr::Num(delta)]);
    let g1 = Expr::Num(c) * (bump.clone() - Expr::Num(1.0)) * u.clone();
    let f2 = bump * f_tilde;

    // Exterior polydisks in the slab ε ≤ |t| ≤ 1, i.e. u ∈ [ln ε, 0].
    let [ns, nh, nphi] = params.cells;
    let (u_lo, u_hi) = (eps.ln(), 0.0);
    let shrink = 0.95;
    let mut polydisks = Vec::new();
    let mut ball1 = Expr::Num(0.0);
    let mut ball2 = Expr::Num(0.0);
    let cut = |q: Expr| call(Func::Bump, vec![q, Expr::Num(plateau), Expr::Num(1.0)]);
    for is in 0..ns {
        for ih in 0..nh {
            for ip in 0..nphi {
                let center = [
                    0.5 * (u_lo + u_hi),
                    (is as f64 + 0.5) / ns as f64,
                    -1.0 + (2.0 * ih as f64 + 1.0) / nh as f64,
                    (ip as f64 + 0.5) / nphi as f64,
                ];
                let radii = [
                    shrink * 0.5 * (u_hi - u_lo),
                    shrink * 0.5 / ns as f64,
                    shrink / nh as f64,
                    shrink * 0.5 / nphi as f64,
                ];
                let q1 = sq((u.clone() - Expr::Num(center[0])) * Expr::Num(1.0 / radii[0]))
                    + sq(periodic_offset(s.clone(), center[1], radii[1]));
                let q2 = sq((h.clone() - Expr::Num(center[2])) * Expr::Num(1.0 / radii[2]))
                    + sq(periodic_offset(phi.clone(), center[3], radii[3]));
                let cutoff = cut(q1.clone()) * cut(q2.clone());
                ball1 = ball1 + cutoff.clone() * q1;
                ball2 = ball2 + cutoff * q2;
                polydisks.push(Polydisk { center, radii });
            }
        }
    }
    let obs = vec![
        (
            "phi(t)*c*log|t|".to_string(),
            Observable::bfun(c, ScalarField::from_expr(g1 + ball1.clone())),
        ),
        ("phi(t)*F".to_string(), Observable::smooth(ScalarField::from_expr(f2 + ball2.clone()))),
    ];
    let system = IntegrableSystem::new("b_integrable_4d", form, obs)?;
    let exceptional = exceptional_orbits(mt, 4)?
        .into_iter()
        .map(|e| ExceptionalPoint {
            point: vec![e.point[0], e.point[1], 0.0, 0.0],
            ..e
        })
        .collect();
    Ok(Built4d {
        system,
        params: params.clone(),
        rotation: a,
        averaging: averaged.report,
        polydisks,
        exceptional,
        exterior: [ball1, ball2],
    })
}

impl Built4d {
    pub fn check(&self, plan: &SamplePlan, tol: f64) -> Build4dReport {
        check_system(&self.system, plan, tol)
    }

    /// Folded variant: desingularize the form and take `φ(t)·t²` as first
    /// function, keeping the second function and the exterior disks.
    pub fn folded_variant(&self, collar: f64) -> Result<IntegrableSystem> {
        if collar >= self.params.eps {
            return Err(Error::Config(format!("collar {collar} must be smaller than ε = {}", self.params.eps)));
        }
        let form = Arc::new(desingularize(&self.system.form, collar)?);
        let t = Expr::Var(3);
        let bump = call(
            Func::Bump,
            vec![t.clone(), Expr::Num(self.params.delta), Expr::Num(self.params.delta_prime)],
        );
        let f1 = bump * sq(t) + self.exterior[0].clone();
        let obs = vec![
            ("phi(t)*t^2".to_string(), Observable::smooth(ScalarField::from_expr(f1))),
            (self.system.names[1].clone(), self.system.observables[1].clone()),
        ];
        IntegrableSystem::new("folded_integrable_4d", form, obs)
    }
}

pub fn check_system(sys: &IntegrableSystem, plan: &SamplePlan, tol: f64) -> Build4dReport {
    let pts: Vec<Vec<f64>> = plan
        .interior_points(sys.chart())
        .into_iter()
        .chain(plan.z_points(sys.chart()))
        .collect();
    let commutation = check_commutation(sys, &pts, tol);
    let independence = check_independence(sys, plan);
    Build4dReport {
        pass: commutation.pass && independence.pass,
        commutation,
        independence,
    }
}
