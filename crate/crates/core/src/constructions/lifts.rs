//! Twisted b- and folded cotangent lifts of the standard torus action on `T*Tⁿ`.

use std::sync::Arc;

use crate::actionangle::{first_return_time, LatticeOptions};
use crate::error::{Error, Result};
use crate::geometry::{Chart, Coord, OneFormField, ScalarField, SingularForm, TwoFormField};
use crate::hamiltonian::{hamiltonian_vf, Observable};
use crate::systems::IntegrableSystem;

pub const MAX_LIFT_DOFS: usize = 4;

fn check_dofs(n: usize) -> Result<()> {
    if n == 0 || n > MAX_LIFT_DOFS {
        return Err(Error::Config(format!("lifts support 1 ≤ n ≤ {MAX_LIFT_DOFS}, got {n}")));
    }
    Ok(())
}

/// Chart `(θ₁…θₙ, x₁…xₙ)` with angles of period 1, fibre coordinates in
/// `[−1, 1]` and `x₁` the defining coordinate.
pub fn lift_chart(name: &str, fibre: &str, n: usize) -> Result<Chart> {
    let mut coords: Vec<Coord> = (1..=n).map(|i| Coord::angle(&format!("th{i}"))).collect();
    coords.extend((1..=n).map(|i| Coord::linear(&format!("{fibre}{i}"), -1.0, 1.0)));
    Chart::new(name, coords, Some(n))
}

/// `(dt/t) ∧ α + β` with `α = −c dθ₁`, `β = Σ_{i≥2} dθᵢ ∧ daᵢ`, i.e.
/// `c/a₁ dθ₁∧da₁ + Σ dθᵢ∧daᵢ`. Observables `(log|a₁|, a₂, …, aₙ)`, so the
/// first field is `−(1/c) ∂θ₁` with period `c`.
pub fn twisted_b_cotangent_lift(n: usize, c: f64) -> Result<IntegrableSystem> {
    check_dofs(n)?;
    if c == 0.0 || !c.is_finite() {
        return Err(Error::DegenerateLift(format!("modular period must be finite and non-zero, got {c}")));
    }
    let chart = lift_chart("twisted_b_lift", "a", n)?;
    let dim = 2 * n;
    let alpha = OneFormField::new(dim).with(0, ScalarField::constant(-c));
    let mut beta = TwoFormField::new(dim);
    for i in 1..n {
        beta = beta.with(i, n + i, ScalarField::constant(1.0));
    }
    let form = Arc::new(SingularForm::b_symplectic(chart, alpha, beta)?);
    let mut obs = vec![("log|a1|".to_string(), Observable::bfun(1.0, ScalarField::constant(0.0)))];
    for i in 1..n {
        obs.push((format!("a{}", i + 1), Observable::smooth(ScalarField::coordinate(n + i))));
    }
    IntegrableSystem::new("twisted_b_lift", form, obs)
}

/// `p₁ dθ₁∧dp₁ + Σ_{i≥2} dθᵢ∧dpᵢ` with observables `(p₁², p₂, …, pₙ)`.
pub fn folded_cotangent_lift(n: usize) -> Result<IntegrableSystem> {
    folded_lift_with(n, 1.0, "p1^2")
}

/// The folded lift with first observable `p₁²/2`, whose flows have unit
/// periods.
pub fn folded_cotangent_lift_unit(n: usize) -> Result<IntegrableSystem> {
    folded_lift_with(n, 0.5, "p1^2/2")
}

fn folded_lift_with(n: usize, k: f64, label: &str) -> Result<IntegrableSystem> {
    check_dofs(n)?;
    let chart = lift_chart("folded_lift", "p", n)?;
    let dim = 2 * n;
    let mut w = TwoFormField::new(dim).with(0, n, ScalarField::coordinate(n));
    for i in 1..n {
        w = w.with(i, n + i, ScalarField::constant(1.0));
    }
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let p1 = ScalarField::coordinate(n);
    let mut obs = vec![(label.to_string(), Observable::smooth(p1.mul(&p1).scale(k)))];
    for i in 1..n {
        obs.push((format!("p{}", i + 1), Observable::smooth(ScalarField::coordinate(n + i))));
    }
    IntegrableSystem::new("folded_lift", form, obs)
}

/// Period of the modular field `X_{log|t|}` through `p`.
pub fn modular_period(form: &Arc<SingularForm>, p: &[f64], opts: &LatticeOptions) -> Result<f64> {
    if !form.is_b() {
        return Err(Error::Config("modular period is defined for b-symplectic forms".into()));
    }
    let x = hamiltonian_vf(&Observable::bfun(1.0, ScalarField::constant(0.0)), form)?;
    first_return_time(&x, p, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_form;
    use crate::sampling::SamplePlan;

    #[test]
    fn twisted_lift_field_and_modular_period() {
        for c in [1.0, 2.0] {
            let sys = twisted_b_cotangent_lift(2, c).unwrap();
            let x = sys.vectors(&[0.1, 0.2, 0.3, 0.4]).unwrap();
            assert!((x[0][0] + 1.0 / c).abs() < 1e-12);
            let t = modular_period(&sys.form, &[0.1, 0.2, 0.0, 0.4], &LatticeOptions::default()).unwrap();
            assert!((t - c).abs() < 1e-6, "{t}");
        }
        assert!(matches!(twisted_b_cotangent_lift(2, 0.0), Err(Error::DegenerateLift(_))));
    }

    #[test]
    fn folded_lift_validates_and_has_unit_field() {
        let sys = folded_cotangent_lift_unit(2).unwrap();
        assert!(validate_form(&sys.form, &SamplePlan::new(200, 50, 3)).unwrap().pass);
        let x = sys.vectors(&[0.1, 0.2, 0.0, 0.4]).unwrap();
        assert!((x[0][0] + 1.0).abs() < 1e-9 && x[0][1..].iter().all(|v| v.abs() < 1e-9));
    }
}
