//! Folded products `t·ω_Σ + ω_M` of a surface with a symplectic system.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{Chart, FormKind, ScalarField, SingularForm, TwoFormField};
use crate::hamiltonian::Observable;
use crate::sampling::halton;
use crate::systems::IntegrableSystem;

/// A surface chart with area form `a(x) dx₀∧dx₁` and a function `t` whose
/// zero set is the fold. The chart's defining coordinate must parametrize
/// the normal direction to `{t = 0}`.
#[derive(Clone, Debug)]
pub struct FoldedSurface {
    pub chart: Chart,
    pub area: ScalarField,
    pub t: ScalarField,
}

/// `t` must vanish on `{z = 0}` with `∂_z t ≠ 0` there.
fn check_transversal(s: &FoldedSurface) -> Result<()> {
    let z = s
        .chart
        .z_coord
        .ok_or_else(|| Error::Config(format!("surface chart `{}` needs a defining coordinate", s.chart.name)))?;
    let other = 1 - z;
    let c = &s.chart.coords[other];
    for h in halton(64, 1, 11) {
        let mut p = vec![0.0; 2];
        p[other] = if c.is_angle() { h[0] } else { c.lo + (c.hi - c.lo) * h[0] };
        let v = s.t.value(&p);
        let d = s.t.gradient(&p)[z];
        if v.abs() > 1e-9 || d.abs() < 1e-6 {
            return Err(Error::Transversality(format!(
                "t is not transverse to 0 at {p:?} (t = {v:.3e}, ∂t = {d:.3e})"
            )));
        }
    }
    Ok(())
}

fn shift(e: &Expr, by: usize) -> Expr {
    let map: Vec<Expr> = (0..=e.max_var().unwrap_or(0)).map(|i| Expr::Var(i + by)).collect();
    e.substitute(&map)
}

fn shifted(f: &ScalarField, by: usize) -> Result<ScalarField> {
    match f.expr() {
        Some(e) => Ok(ScalarField::from_expr(shift(e, by))),
        None => Err(Error::Unsupported("product factors need expression-backed fields".into())),
    }
}

/// Product system `(t², f₁, …, fₙ)`, or `(t² Σ λᵢ fᵢ, f₁, …, fₙ)` when
/// `lambda` is given. With `m = None` the result is the surface alone.
pub fn product_with_folded_surface(
    surface: &FoldedSurface,
    m: Option<&IntegrableSystem>,
    lambda: Option<&[f64]>,
) -> Result<IntegrableSystem> {
    check_transversal(surface)?;
    let mut coords = surface.chart.coords.clone();
    let mut w = TwoFormField::new(2 + m.map_or(0, |m| m.chart().dim()));
    w = w.with(0, 1, surface.t.mul(&surface.area));
    let mut obs_m = Vec::new();
    let mut sphere_pairs = surface.chart.sphere_pairs.clone();
    if let Some(m) = m {
        let FormKind::Symplectic(wm) = &m.form.kind else {
            return Err(Error::Config("the second factor must be symplectic".into()));
        };
        let taken: Vec<String> = coords.iter().map(|c| c.name.clone()).collect();
        for c in &m.chart().coords {
            let mut c = c.clone();
            if taken.contains(&c.name) {
                c.name = format!("{}_m", c.name);
            }
            coords.push(c);
        }
        for (i, j, f) in &wm.entries {
            w = w.with(i + 2, j + 2, shifted(f, 2)?);
        }
        for (name, o) in m.names.iter().zip(&m.observables) {
            let Observable::Smooth(f) = o else {
                return Err(Error::Config("symplectic factors carry smooth observables".into()));
            };
            obs_m.push((name.clone(), shifted(f, 2)?));
        }
        sphere_pairs.extend(m.chart().sphere_pairs.iter().map(|&(a, b)| (a + 2, b + 2)));
    }
    let mut chart = Chart::new(
        &format!("{}_x_{}", surface.chart.name, m.map_or("pt", |m| m.chart().name.as_str())),
        coords,
        surface.chart.z_coord,
    )?;
    for (a, b) in sphere_pairs {
        chart = chart.with_sphere_pair(a, b)?;
    }
    let t2 = surface.t.mul(&surface.t);
    let first = match lambda {
        None => t2,
        Some(l) => {
            if l.len() != obs_m.len() {
                return Err(Error::Config(format!("λ needs {} entries, got {}", obs_m.len(), l.len())));
            }
            if l.iter().all(|v| *v == 0.0) {
                return Err(Error::Config("λ must be a non-trivial tuple".into()));
            }
            let mut sum = ScalarField::constant(0.0);
            for (k, (_, f)) in l.iter().zip(&obs_m) {
                if *k != 0.0 {
                    sum = sum.add(&f.scale(*k));
                }
            }
            t2.mul(&sum)
        }
    };
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let mut obs = vec![("t^2".to_string(), Observable::Smooth(first))];
    obs.extend(obs_m.into_iter().map(|(n, f)| (n, Observable::Smooth(f))));
    IntegrableSystem::new("product", form, obs)
}
