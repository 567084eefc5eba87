//! Observables, the Hamiltonian equation `ι_X ω = −df` on and off the
//! critical hypersurface, and Poisson brackets.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{differential, extension_step, Chart, FormKind, ScalarField, SingularForm, FD_STEP, KERNEL_REL};
use crate::linalg::{solve, Spectrum};

/// A smooth function, or a b-function `c·log|t| + g`.
#[derive(Clone, Debug)]
pub enum Observable {
    Smooth(ScalarField),
    BFun { c: f64, g: ScalarField },
}

impl Observable {
    pub fn smooth(f: ScalarField) -> Observable {
        Observable::Smooth(f)
    }

    pub fn bfun(c: f64, g: ScalarField) -> Observable {
        Observable::BFun { c, g }
    }

    pub fn value(&self, chart: &Chart, p: &[f64]) -> f64 {
        match self {
            Observable::Smooth(f) => f.value(p),
            Observable::BFun { c, g } => {
                let t = chart.z_coord.map(|z| p[z]).unwrap_or(1.0);
                let log = if *c == 0.0 { 0.0 } else { c * t.abs().ln() };
                log + g.value(p)
            }
        }
    }

    /// Smooth part: `f` itself or `g`.
    pub fn smooth_part(&self) -> &ScalarField {
        match self {
            Observable::Smooth(f) => f,
            Observable::BFun { g, .. } => g,
        }
    }

    pub fn singular_coefficient(&self) -> f64 {
        match self {
            Observable::Smooth(_) => 0.0,
            Observable::BFun { c, .. } => *c,
        }
    }

    /// Coordinate-frame differential; infinite on `Z` for genuine b-functions.
    pub fn differential(&self, chart: &Chart, p: &[f64]) -> Result<Vec<f64>> {
        let mut d = differential(self.smooth_part(), p, FD_STEP)?;
        if let (Observable::BFun { c, .. }, Some(z)) = (self, chart.z_coord) {
            d[z] += c / p[z];
        }
        Ok(d)
    }
}

/// Parameters of the continuous extension of a Hamiltonian field to `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtensionStrategy {
    /// Richardson offset `h`; samples at `t ± h`, `t ± 2h`.
    pub step: f64,
    /// Points with `|t| < band` are evaluated by extension.
    pub band: f64,
    pub kernel_rel: f64,
    /// Relative tolerance on the cokernel component of `df` on `Z`.
    pub consistency: f64,
}

/// Solution of `ι_X ω = −df`, evaluated pointwise.
#[derive(Clone, Debug)]
pub struct HamiltonianField {
    pub source: Observable,
    pub form: Arc<SingularForm>,
    pub strategy: ExtensionStrategy,
}

pub fn hamiltonian_vf(f: &Observable, form: &Arc<SingularForm>) -> Result<HamiltonianField> {
    if matches!(f, Observable::BFun { .. }) && !form.is_b() {
        return Err(Error::Config("b-functions need a b-symplectic form".into()));
    }
    let step = extension_step(&form.chart);
    Ok(HamiltonianField {
        source: f.clone(),
        form: form.clone(),
        strategy: ExtensionStrategy {
            step,
            band: 0.5 * step,
            kernel_rel: KERNEL_REL,
            consistency: 1e-8,
        },
    })
}

impl HamiltonianField {
    /// `X_f(p)` in the coordinate frame.
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.eval_frame(p)?;
        if let (true, Some(z)) = (self.form.is_b(), self.form.z()) {
            y[z] *= p[z];
        }
        Ok(y)
    }

    /// `X_f(p)` in the frame where the form is regular: the b-frame
    /// `(t∂_t, ∂_j)` for b-forms, the coordinate frame otherwise.
    pub fn eval_frame(&self, p: &[f64]) -> Result<Vec<f64>> {
        match &self.form.kind {
            FormKind::Symplectic(w) => {
                let g = self.source.differential(&self.form.chart, p)?;
                Ok(solve(&w.matrix(p), &DVector::from_vec(g))?.as_slice().to_vec())
            }
            FormKind::BSymplectic { .. } => {
                let b = self.form.b_matrix(p).expect("b-form");
                let cov = crate::geometry::frame_coefficients(&self.source, &self.form, p)?;
                Ok(solve(&b, &DVector::from_vec(cov))?.as_slice().to_vec())
            }
            FormKind::Folded(_) => self.eval_folded(p),
        }
    }

    fn direct(&self, p: &[f64]) -> Result<DVector<f64>> {
        let g = differential(self.source.smooth_part(), p, FD_STEP)?;
        solve(&self.form.matrix(p), &DVector::from_vec(g))
    }

    fn eval_folded(&self, p: &[f64]) -> Result<Vec<f64>> {
        let z = self.form.z().expect("folded form has z");
        let t0 = p[z];
        let s = &self.strategy;
        if t0.abs() >= s.band {
            return Ok(self.direct(p)?.as_slice().to_vec());
        }
        let chart = &self.form.chart;
        let on_z = chart.with_t(p, 0.0);
        let w = self.form.matrix(&on_z);
        let spec = Spectrum::new(&w);
        let g = DVector::from_vec(differential(self.source.smooth_part(), &on_z, FD_STEP)?);
        let inconsistency = spec
            .cokernel(s.kernel_rel)
            .iter()
            .map(|u| u.dot(&g).powi(2))
            .sum::<f64>()
            .sqrt();
        if inconsistency > s.consistency * (1.0 + g.norm()) {
            return Err(Error::Admissibility(format!(
                "ι_X ω = −df has no solution on Z (df has a component {inconsistency:.3e} on ker ω)"
            )));
        }
        let h = s.step;
        let at = |t: f64| self.direct(&chart.with_t(p, t0 + t));
        let a1 = (at(h)? + at(-h)?) * 0.5;
        let a2 = (at(2.0 * h)? + at(-2.0 * h)?) * 0.5;
        let rich = (a1 * 4.0 - a2) / 3.0;
        if t0 != 0.0 {
            return Ok(rich.as_slice().to_vec());
        }
        let mut x = spec.pseudo_solve(&g, s.kernel_rel);
        for k in spec.kernel(s.kernel_rel) {
            let c = k.dot(&rich);
            x += k * c;
        }
        Ok(x.as_slice().to_vec())
    }
}

/// `Σ_{i<j} m_ij (a_i b_j − a_j b_i)`: exactly antisymmetric in `(a, b)`.
pub fn antisymmetric_pairing(m: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += m[(i, j)] * (a[i] * b[j] - a[j] * b[i]);
        }
    }
    s
}

/// `{f, g}(p) = ω(X_f, X_g)` from precomputed fields.
pub fn bracket_at(xf: &HamiltonianField, xg: &HamiltonianField, p: &[f64]) -> Result<f64> {
    let form = &xf.form;
    let a = xf.eval_frame(p)?;
    let b = xg.eval_frame(p)?;
    let m = form.b_matrix(p).unwrap_or_else(|| form.matrix(p));
    Ok(antisymmetric_pairing(&m, &a, &b))
}

/// `{f, g}` as a scalar field (NaN where a Hamiltonian field cannot be
/// evaluated).
pub fn poisson_bracket(f: &Observable, g: &Observable, form: &Arc<SingularForm>) -> Result<ScalarField> {
    let xf = hamiltonian_vf(f, form)?;
    let xg = hamiltonian_vf(g, form)?;
    Ok(ScalarField::from_fn(move |p| bracket_at(&xf, &xg, p).unwrap_or(f64::NAN)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub samples: usize,
    /// Largest `sup_{v ∈ V, |v| = 1} |df(v)|` over the samples.
    pub worst_margin: f64,
    pub worst_at: Option<Vec<f64>>,
    pub tol: f64,
    pub pass: bool,
}

/// Test `df|_V = 0` on `Z`, with `V = ker ω` the 2-dimensional kernel.
pub fn is_folded_function(
    f: &Observable,
    form: &SingularForm,
    z_samples: &[Vec<f64>],
    tol: f64,
) -> Result<AdmissibilityReport> {
    let Observable::Smooth(g) = f else {
        return Err(Error::Config("admissibility is tested for smooth observables".into()));
    };
    if !form.is_folded() {
        return Err(Error::Config("admissibility is tested against a folded form".into()));
    }
    let rows: Vec<Result<f64>> = z_samples
        .par_iter()
        .map(|p| {
            let on_z = form.chart.with_t(p, 0.0);
            let ker = Spectrum::new(&form.matrix(&on_z)).kernel(KERNEL_REL);
            if ker.len() != 2 {
                return Err(Error::FormDegeneracy(format!(
                    "kernel of ω has dimension {} at {on_z:?}, expected 2",
                    ker.len()
                )));
            }
            let d = DVector::from_vec(differential(g, &on_z, FD_STEP)?);
            Ok(ker.iter().map(|v| v.dot(&d).powi(2)).sum::<f64>().sqrt())
        })
        .collect();
    let mut worst = 0.0;
    let mut worst_at = None;
    for (p, r) in z_samples.iter().zip(rows) {
        let m = r?;
        if worst_at.is_none() || m > worst {
            worst = m;
            worst_at = Some(p.clone());
        }
    }
    Ok(AdmissibilityReport {
        samples: z_samples.len(),
        worst_margin: worst,
        worst_at,
        tol,
        pass: worst <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Coord, OneFormField, TwoFormField};

    fn martinet() -> Arc<SingularForm> {
        let c = Chart::new(
            "martinet",
            vec![
                Coord::linear("t", -1.0, 1.0),
                Coord::linear("q", -2.0, 2.0),
                Coord::linear("x2", -1.0, 1.0),
                Coord::linear("y2", -1.0, 1.0),
            ],
            Some(0),
        )
        .unwrap();
        let w = TwoFormField::new(4)
            .with(0, 1, ScalarField::coordinate(0))
            .with(2, 3, ScalarField::constant(1.0));
        Arc::new(SingularForm::folded(c, w).unwrap())
    }

    fn obs(form: &SingularForm, src: &str) -> Observable {
        Observable::Smooth(ScalarField::parse(src, &form.chart.names()).unwrap())
    }

    #[test]
    fn half_square_flows_along_q_everywhere() {
        let f = martinet();
        let x = hamiltonian_vf(&obs(&f, "t^2/2"), &f).unwrap();
        for &t in &[0.0, 1e-6, -3e-5, 0.3] {
            let v = x.eval(&[t, 0.2, 0.1, -0.3]).unwrap();
            assert!((v[1] - 1.0).abs() < 1e-10, "t={t}: {v:?}");
            assert!(v[0].abs() < 1e-10 && v[2].abs() < 1e-12 && v[3].abs() < 1e-12);
        }
    }

    #[test]
    fn inadmissible_function_is_rejected_on_z() {
        let f = martinet();
        let x = hamiltonian_vf(&obs(&f, "t"), &f).unwrap();
        assert!(matches!(x.eval(&[0.0, 0.0, 0.0, 0.0]), Err(Error::Admissibility(_))));
        assert!(x.eval(&[0.5, 0.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn kernel_test_dichotomy() {
        let f = martinet();
        let zs: Vec<Vec<f64>> = (0..20).map(|i| vec![0.0, -1.0 + 0.1 * i as f64, 0.3, -0.2]).collect();
        assert!(!is_folded_function(&obs(&f, "t"), &f, &zs, 1e-8).unwrap().pass);
        assert!(is_folded_function(&obs(&f, "t^2/2"), &f, &zs, 1e-8).unwrap().pass);
        assert!(is_folded_function(&obs(&f, "x2"), &f, &zs, 1e-8).unwrap().pass);
    }

    #[test]
    fn off_z_residual_is_small() {
        let f = martinet();
        let o = obs(&f, "t^2*sin(q) + x2*y2 + t^3");
        let x = hamiltonian_vf(&o, &f).unwrap();
        let p = [0.4, 0.3, -0.2, 0.6];
        let v = DVector::from_vec(x.eval(&p).unwrap());
        let g = DVector::from_vec(o.differential(&f.chart, &p).unwrap());
        assert!((f.matrix(&p) * v - &g).norm() <= 1e-10 * g.norm());
    }

    #[test]
    fn bracket_examples() {
        let f = martinet();
        let half = obs(&f, "t^2/2");
        let x2 = obs(&f, "x2");
        let q = obs(&f, "q");
        let b = poisson_bracket(&half, &x2, &f).unwrap();
        assert_eq!(b.value(&[0.0, 0.1, 0.2, 0.3]), 0.0);
        let b = poisson_bracket(&half, &q, &f).unwrap();
        assert!((b.value(&[0.3, 0.1, 0.2, 0.3]).abs() - 1.0).abs() < 1e-10);
        let b = poisson_bracket(&half, &half, &f).unwrap();
        assert_eq!(b.value(&[0.3, 0.1, 0.2, 0.3]), 0.0);
    }

    #[test]
    fn twisted_lift_singular_field() {
        let c = Chart::new(
            "lift",
            vec![
                Coord::angle("th1"),
                Coord::angle("th2"),
                Coord::linear("a1", -1.0, 1.0),
                Coord::linear("a2", -1.0, 1.0),
            ],
            Some(2),
        )
        .unwrap();
        let alpha = OneFormField::new(4).with(0, ScalarField::constant(-2.0));
        let beta = TwoFormField::new(4).with(1, 3, ScalarField::constant(1.0));
        let form = Arc::new(SingularForm::b_symplectic(c, alpha, beta).unwrap());
        let log = Observable::bfun(1.0, ScalarField::constant(0.0));
        let x = hamiltonian_vf(&log, &form).unwrap();
        for &a in &[0.0, 0.5, -0.2] {
            let v = x.eval(&[0.1, 0.2, a, 0.3]).unwrap();
            assert!((v[0] + 0.5).abs() < 1e-14 && v[1] == 0.0 && v[2] == 0.0 && v[3] == 0.0, "{v:?}");
        }
    }
}
