//! Replacing a b-form by a folded form that agrees with it off an `ε`-collar.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Expr, Func};
use crate::geometry::{FormKind, ScalarField, SingularForm, TwoFormField};
use crate::hamiltonian::Observable;
use crate::systems::IntegrableSystem;

/// `f_ε(t)`: even, `ln|t|` for `|t| ≥ ε`, with `f_ε′(t) = t·h(t)`, `h > 0`.
pub fn smoothed_log(z: usize, eps: f64) -> ScalarField {
    ScalarField::from_expr(Expr::Call(Func::Flog, vec![Expr::Var(z), Expr::Num(eps)]))
}

/// `f_ε′(t)`, equal to `1/t` for `|t| ≥ ε`.
pub fn smoothed_log_derivative(z: usize, eps: f64) -> ScalarField {
    ScalarField::from_expr(Expr::Call(Func::Flogd, vec![Expr::Var(z), Expr::Num(eps)]))
}

/// `ω_ε = d(f_ε(t)) ∧ α + β`.
pub fn desingularize(form: &SingularForm, eps: f64) -> Result<SingularForm> {
    let FormKind::BSymplectic { alpha, beta } = &form.kind else {
        return Err(Error::Config(format!("desingularization needs a b-symplectic form, got {}", form.kind_name())));
    };
    let z = form.z().expect("b-form has z");
    let c = &form.chart.coords[z];
    if !(eps > 0.0) || eps >= c.hi.min(-c.lo) {
        return Err(Error::Geometry(format!(
            "collar width {eps} must lie in (0, {}) for `{}` ∈ [{}, {}]",
            c.hi.min(-c.lo),
            c.name,
            c.lo,
            c.hi
        )));
    }
    let g = smoothed_log_derivative(z, eps);
    let mut w = TwoFormField::new(form.dim());
    for (j, a) in &alpha.entries {
        if *j != z {
            w = w.with(z, *j, g.mul(a));
        }
    }
    w.entries.extend(beta.entries.iter().cloned());
    let mut chart = form.chart.clone();
    chart.name = format!("{}_eps", chart.name);
    SingularForm::folded(chart, w)
}

/// Desingularize the form and replace every `c·log|t| + g` by `c·f_ε(t) + g`.
pub fn desingularize_system(sys: &IntegrableSystem, eps: f64) -> Result<IntegrableSystem> {
    let form = Arc::new(desingularize(&sys.form, eps)?);
    let z = form.z().expect("folded form has z");
    let obs = sys
        .names
        .iter()
        .zip(&sys.observables)
        .map(|(name, o)| {
            let o = match o {
                Observable::Smooth(f) => Observable::Smooth(f.clone()),
                Observable::BFun { c, g } => Observable::Smooth(smoothed_log(z, eps).scale(*c).add(g)),
            };
            (name.replace("log", "flog"), o)
        })
        .collect();
    IntegrableSystem::new(&format!("{}_eps", sys.name), form, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::lifts::twisted_b_cotangent_lift;

    #[test]
    fn agrees_with_b_form_off_the_collar() {
        let sys = twisted_b_cotangent_lift(2, 1.0).unwrap();
        let f = desingularize(&sys.form, 0.5).unwrap();
        for t in [0.6, -0.6, 0.5, -0.93] {
            let p = [0.2, 0.7, t, 0.3];
            let d = (f.matrix(&p) - sys.form.matrix(&p)).abs().max();
            assert!(d <= 1e-12, "t={t}: {d}");
        }
        assert!(matches!(desingularize(&sys.form, 1.5), Err(Error::Geometry(_))));
    }
}
