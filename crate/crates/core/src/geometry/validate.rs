use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::chart::Chart;
use super::fields::ScalarField;
use super::form::{FormKind, SingularForm};
use crate::error::{Error, Result};
use crate::hamiltonian::Observable;
use crate::linalg::{odd_kernel, Spectrum};
use crate::sampling::SamplePlan;

/// Relative singular-value threshold for kernels and ranks.
pub const KERNEL_REL: f64 = 1e-8;

/// Offset used to extend quantities to `Z` from both sides, as a fraction of
/// the defining coordinate's range.
pub const EXTENSION_REL: f64 = 1e-4;

pub fn extension_step(chart: &Chart) -> f64 {
    chart.t_range().unwrap_or(1.0) * EXTENSION_REL
}

pub fn normalize_point(chart: &Chart, p: &[f64]) -> Result<Vec<f64>> {
    chart.normalize(p)
}

/// `df(p)`: the exact gradient when the field has one, else central
/// differences with relative step `h`.
pub fn differential(f: &ScalarField, p: &[f64], h: f64) -> Result<Vec<f64>> {
    let g = if f.has_exact_grad() { f.gradient(p) } else { f.fd_gradient(p, h) };
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Field(format!("non-finite differential at {p:?}")));
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationTolerances {
    pub closed: f64,
    pub transversality: f64,
    pub top_power: f64,
    pub nondegeneracy: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        ValidationTolerances {
            closed: 1e-6,
            transversality: 1e-6,
            top_power: 1e-8,
            nondegeneracy: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: String,
    pub interior_samples: usize,
    pub z_samples: usize,
    pub max_dw: f64,
    pub max_dw_at: Option<Vec<f64>>,
    /// Largest `|ωⁿ/vol|` on `Z` (folded).
    pub max_top_power_on_z: Option<f64>,
    /// Smallest `|∂_t(ωⁿ/vol)|` on `Z` (folded).
    pub transversality_margin: Option<f64>,
    /// Range of the rank of the pullback of ω to `Z` (folded).
    pub rank_on_z: Option<(usize, usize)>,
    /// Smallest `|ωⁿ/vol|` in the b-frame over all samples (b-symplectic), or
    /// in the coordinate frame (symplectic).
    pub nondegeneracy_margin: Option<f64>,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Check closedness and the singularity conditions of `form` on a sample set.
pub fn validate_form(form: &SingularForm, plan: &SamplePlan) -> Result<ValidationReport> {
    validate_form_with(form, plan, &ValidationTolerances::default())
}

pub fn validate_form_with(
    form: &SingularForm,
    plan: &SamplePlan,
    tol: &ValidationTolerances,
) -> Result<ValidationReport> {
    let chart = &form.chart;
    let interior = plan.interior_points(chart);
    let zpts = plan.z_points(chart);
    if !matches!(form.kind, FormKind::Symplectic(_)) && chart.z_coord.is_none() {
        return Err(Error::Config("singular form without defining coordinate".into()));
    }
    let all: Vec<&Vec<f64>> = interior.iter().chain(zpts.iter()).collect();

    let dws: Vec<f64> = all
        .par_iter()
        .map(|p| match &form.kind {
            FormKind::Symplectic(w) | FormKind::Folded(w) => w.max_exterior_derivative(p),
            FormKind::BSymplectic { alpha, beta } => {
                alpha.max_exterior_derivative(p).max(beta.max_exterior_derivative(p))
            }
        })
        .collect();
    let mut max_dw = 0.0;
    let mut max_dw_at = None;
    for (p, &d) in all.iter().zip(&dws) {
        if !d.is_finite() || d > max_dw {
            max_dw = if d.is_finite() { d } else { f64::INFINITY };
            max_dw_at = Some((*p).clone());
        }
    }

    let mut report = ValidationReport {
        kind: form.kind_name().to_string(),
        interior_samples: interior.len(),
        z_samples: zpts.len(),
        max_dw,
        max_dw_at,
        max_top_power_on_z: None,
        transversality_margin: None,
        rank_on_z: None,
        nondegeneracy_margin: None,
        pass: true,
        failures: Vec::new(),
    };
    if report.max_dw > tol.closed {
        report.failures.push(format!(
            "not closed: max |dω| = {:.3e} at {:?}",
            report.max_dw,
            report.max_dw_at.as_deref().unwrap_or(&[])
        ));
    }

    match &form.kind {
        FormKind::Folded(_) => {
            let z = chart.z_coord.expect("checked");
            let rows: Vec<(f64, f64, usize)> = zpts
                .par_iter()
                .map(|p| {
                    let top = form.top_power(p).abs();
                    let dt = form.top_power_gradient(p)[z].abs();
                    let m = form.matrix(p);
                    let keep: Vec<usize> = (0..chart.dim()).filter(|&i| i != z).collect();
                    let r = DMatrix::from_fn(keep.len(), keep.len(), |a, b| m[(keep[a], keep[b])]);
                    (top, dt, Spectrum::new(&r).rank(KERNEL_REL))
                })
                .collect();
            let max_top = rows.iter().map(|r| r.0).fold(0.0, f64::max);
            let margin = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            let rmin = rows.iter().map(|r| r.2).min().unwrap_or(0);
            let rmax = rows.iter().map(|r| r.2).max().unwrap_or(0);
            report.max_top_power_on_z = Some(max_top);
            report.transversality_margin = Some(margin);
            report.rank_on_z = Some((rmin, rmax));
            if max_top > tol.top_power {
                report.failures.push(format!("ωⁿ does not vanish on Z: max {max_top:.3e}"));
            }
            if !(margin >= tol.transversality) {
                report
                    .failures
                    .push(format!("ωⁿ not transverse to zero along Z: min |∂_t ωⁿ| = {margin:.3e}"));
            }
            let want = chart.dim() - 2;
            if rmin != want || rmax != want {
                report
                    .failures
                    .push(format!("rank of pullback to Z in [{rmin}, {rmax}], expected {want}"));
            }
        }
        FormKind::BSymplectic { .. } => {
            let margin = all
                .par_iter()
                .map(|p| form.top_power(p).abs())
                .reduce(|| f64::INFINITY, f64::min);
            report.nondegeneracy_margin = Some(margin);
            if !(margin >= tol.nondegeneracy) {
                report
                    .failures
                    .push(format!("b-form degenerate: min |α∧βⁿ⁻¹| = {margin:.3e}"));
            }
        }
        FormKind::Symplectic(_) => {
            let margin = interior
                .par_iter()
                .map(|p| form.top_power(p).abs())
                .reduce(|| f64::INFINITY, f64::min);
            report.nondegeneracy_margin = Some(margin);
            if !(margin >= tol.nondegeneracy) {
                report.failures.push(format!("form degenerate: min |ωⁿ| = {margin:.3e}"));
            }
        }
    }
    report.pass = report.failures.is_empty();
    Ok(report)
}

/// Coefficients of `df` in the coframe adapted to the singularity: `t dt` in
/// the defining slot for folded forms, `dt/t` for b-forms, plain partials
/// elsewhere.
pub fn frame_coefficients(f: &Observable, form: &SingularForm, p: &[f64]) -> Result<Vec<f64>> {
    form.chart.check_len(p)?;
    match (&form.kind, f) {
        (FormKind::Symplectic(_), Observable::Smooth(g)) => differential(g, p, super::fields::FD_STEP),
        (FormKind::Symplectic(_), Observable::BFun { .. }) | (FormKind::Folded(_), Observable::BFun { .. }) => {
            Err(Error::Config("b-functions are only defined for b-symplectic forms".into()))
        }
        (FormKind::BSymplectic { .. }, _) => {
            let z = form.z().expect("b-form has z");
            let t = p[z];
            let (c, g) = match f {
                Observable::Smooth(g) => (0.0, g),
                Observable::BFun { c, g } => (*c, g),
            };
            let mut d = differential(g, p, super::fields::FD_STEP)?;
            d[z] = c + t * d[z];
            Ok(d)
        }
        (FormKind::Folded(_), Observable::Smooth(g)) => {
            let z = form.z().expect("folded form has z");
            let t0 = p[z];
            let h = extension_step(&form.chart);
            let mut d = differential(g, p, super::fields::FD_STEP)?;
            if t0.abs() >= 0.5 * h {
                d[z] /= t0;
                return Ok(d);
            }
            let on_z = form.chart.with_t(p, 0.0);
            let dz = differential(g, &on_z, super::fields::FD_STEP)?;
            let norm = dz.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dz[z].abs() > 1e-8 * (1.0 + norm) {
                return Err(Error::Admissibility(format!(
                    "∂_t f = {:.3e} on Z; the folded frame needs ∂_t f = 0 there",
                    dz[z]
                )));
            }
            let plus = differential(g, &form.chart.with_t(p, t0 + h), super::fields::FD_STEP)?[z] / (t0 + h);
            let minus = differential(g, &form.chart.with_t(p, t0 - h), super::fields::FD_STEP)?[z] / (t0 - h);
            d[z] = 0.5 * (plus + minus);
            Ok(d)
        }
    }
}

/// Numerical kernel of `ω(p)` in the coordinate frame (2-dimensional on `Z`
/// for folded forms).
pub fn kernel_of_form(form: &SingularForm, p: &[f64]) -> Vec<DVector<f64>> {
    Spectrum::new(&form.matrix(p)).kernel(KERNEL_REL)
}

/// Unit generator of the null line `L = ker ω ∩ TZ` at a point of `Z`
/// (the defining coordinate of `p` is ignored and set to 0).
pub fn null_line(form: &SingularForm, p: &[f64]) -> Result<Vec<f64>> {
    if !form.is_folded() {
        return Err(Error::Config("null line is defined for folded forms".into()));
    }
    let z = form.z().expect("folded form has z");
    let on_z = form.chart.with_t(p, 0.0);
    let m = form.matrix(&on_z);
    let keep: Vec<usize> = (0..form.dim()).filter(|&i| i != z).collect();
    let r = DMatrix::from_fn(keep.len(), keep.len(), |a, b| m[(keep[a], keep[b])]);
    let v = odd_kernel(&r);
    let scale = r.norm().max(1.0).powi(form.chart.n() as i32 - 1);
    let len = v.norm();
    if !(len > 1e-10 * scale) {
        return Err(Error::FormDegeneracy(format!(
            "pullback to Z has corank > 1 at {on_z:?}"
        )));
    }
    let mut out = vec![0.0; form.dim()];
    for (k, &i) in keep.iter().enumerate() {
        out[i] = v[k] / len;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Coord, TwoFormField};

    fn chart() -> Chart {
        Chart::new(
            "martinet",
            vec![
                Coord::linear("t", -1.0, 1.0),
                Coord::linear("q", -2.0, 2.0),
                Coord::linear("x2", -1.0, 1.0),
                Coord::linear("y2", -1.0, 1.0),
            ],
            Some(0),
        )
        .unwrap()
    }

    fn form(first: &str) -> SingularForm {
        let c = chart();
        let w = TwoFormField::new(4)
            .with(0, 1, ScalarField::parse(first, &c.names()).unwrap())
            .with(2, 3, ScalarField::constant(1.0));
        SingularForm::folded(c, w).unwrap()
    }

    fn plan() -> SamplePlan {
        SamplePlan::new(200, 100, 3)
    }

    #[test]
    fn martinet_form_validates() {
        let r = validate_form(&form("t"), &plan()).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.rank_on_z, Some((2, 2)));
    }

    #[test]
    fn double_zero_fails_transversality() {
        let r = validate_form(&form("t^2"), &plan()).unwrap();
        assert!(!r.pass);
        assert!(r.failures.iter().any(|f| f.contains("transverse")));
    }

    #[test]
    fn corrupted_form_reports_location() {
        let r = validate_form(&form("t + 0.01*x2"), &plan()).unwrap();
        assert!(!r.pass);
        assert!((r.max_dw - 0.01).abs() < 1e-9);
        assert!(r.max_dw_at.is_some());
    }

    #[test]
    fn differential_examples() {
        let c = chart();
        let f = ScalarField::parse("t^2/2", &c.names()).unwrap();
        assert_eq!(differential(&f, &[3.0, 0.0, 0.0, 0.0], 1e-5).unwrap()[0], 3.0);
        let g = ScalarField::from_fn(|x| x[0] * x[0] / 2.0);
        let d = differential(&g, &[0.5, 0.0, 0.0, 0.0], 1e-5).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn folded_frame_coefficients() {
        let f = form("t");
        let c = &f.chart;
        let half = Observable::Smooth(ScalarField::parse("t^2/2", &c.names()).unwrap());
        let on = frame_coefficients(&half, &f, &[0.0, 0.3, 0.1, 0.2]).unwrap();
        assert!((on[0] - 1.0).abs() < 1e-12);
        assert_eq!(&on[1..], &[0.0, 0.0, 0.0]);
        let x2 = Observable::Smooth(ScalarField::coordinate(2));
        assert_eq!(frame_coefficients(&x2, &f, &[0.0, 0.3, 0.1, 0.2]).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        let t = Observable::Smooth(ScalarField::coordinate(0));
        assert!(matches!(
            frame_coefficients(&t, &f, &[0.0, 0.0, 0.0, 0.0]),
            Err(Error::Admissibility(_))
        ));
    }

    #[test]
    fn folded_frame_is_continuous_across_z() {
        let f = form("t");
        let c = &f.chart;
        let obs = Observable::Smooth(ScalarField::parse("t^2*cos(q) + t^3 + x2", &c.names()).unwrap());
        let on = frame_coefficients(&obs, &f, &[0.0, 0.4, 0.1, 0.2]).unwrap();
        for &h in &[1e-2, 1e-3] {
            for s in [-1.0, 1.0] {
                let off = frame_coefficients(&obs, &f, &[s * h, 0.4, 0.1, 0.2]).unwrap();
                assert!((off[0] - on[0]).abs() < 4.0 * h);
            }
        }
    }

    #[test]
    fn kernel_and_null_line_of_martinet_form() {
        let f = form("t");
        let k = kernel_of_form(&f, &[0.0, 0.1, 0.2, 0.3]);
        assert_eq!(k.len(), 2);
        let l = null_line(&f, &[0.0, 0.1, 0.2, 0.3]).unwrap();
        assert!((l[1].abs() - 1.0).abs() < 1e-12);
        assert_eq!(l[0], 0.0);
    }
}
