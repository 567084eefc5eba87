use nalgebra::DMatrix;

use super::chart::Chart;
use super::fields::{OneFormField, TwoFormField};
use crate::error::{Error, Result};
use crate::linalg::pfaffian;
use crate::real::Dual;

#[derive(Clone, Debug)]
pub enum FormKind {
    Symplectic(TwoFormField),
    Folded(TwoFormField),
    /// `(dt/t) ∧ α + β`.
    BSymplectic { alpha: OneFormField, beta: TwoFormField },
}

/// A closed 2-form on a chart, tagged by its singularity type.
#[derive(Clone, Debug)]
pub struct SingularForm {
    pub chart: Chart,
    pub kind: FormKind,
}

impl SingularForm {
    pub fn new(chart: Chart, kind: FormKind) -> Result<SingularForm> {
        let dim = chart.dim();
        let dims_ok = match &kind {
            FormKind::Symplectic(w) | FormKind::Folded(w) => w.dim == dim,
            FormKind::BSymplectic { alpha, beta } => alpha.dim == dim && beta.dim == dim,
        };
        if !dims_ok {
            return Err(Error::Config(format!("form dimension does not match chart `{}`", chart.name)));
        }
        if !matches!(kind, FormKind::Symplectic(_)) && chart.z_coord.is_none() {
            return Err(Error::Config(format!(
                "{} form on chart `{}` needs a defining coordinate (z_coord)",
                kind_name(&kind),
                chart.name
            )));
        }
        Ok(SingularForm { chart, kind })
    }

    pub fn symplectic(chart: Chart, w: TwoFormField) -> Result<SingularForm> {
        SingularForm::new(chart, FormKind::Symplectic(w))
    }

    pub fn folded(chart: Chart, w: TwoFormField) -> Result<SingularForm> {
        SingularForm::new(chart, FormKind::Folded(w))
    }

    pub fn b_symplectic(chart: Chart, alpha: OneFormField, beta: TwoFormField) -> Result<SingularForm> {
        SingularForm::new(chart, FormKind::BSymplectic { alpha, beta })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn z(&self) -> Option<usize> {
        self.chart.z_coord
    }

    pub fn kind_name(&self) -> &'static str {
        kind_name(&self.kind)
    }

    pub fn is_folded(&self) -> bool {
        matches!(self.kind, FormKind::Folded(_))
    }

    pub fn is_b(&self) -> bool {
        matches!(self.kind, FormKind::BSymplectic { .. })
    }

    /// Matrix `W_ij = ω(∂_i, ∂_j)` in the coordinate frame. For b-forms this
    /// is the smooth evaluation off `Z` and blows up as `t → 0`.
    pub fn matrix(&self, p: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            FormKind::Symplectic(w) | FormKind::Folded(w) => w.matrix(p),
            FormKind::BSymplectic { alpha, beta } => {
                let z = self.z().expect("validated at construction");
                let t = p[z];
                let a = alpha.covector(p);
                let mut m = beta.matrix(p);
                for j in 0..self.dim() {
                    if j != z {
                        m[(z, j)] += a[j] / t;
                        m[(j, z)] -= a[j] / t;
                    }
                }
                m
            }
        }
    }

    /// Matrix of a b-form in the b-frame `(t∂_t, ∂_j)`; nonsingular on `Z`
    /// for b-symplectic forms. `None` for other kinds.
    pub fn b_matrix(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let FormKind::BSymplectic { alpha, beta } = &self.kind else {
            return None;
        };
        let z = self.z()?;
        let t = p[z];
        let a = alpha.covector(p);
        let mut m = beta.matrix(p);
        for j in 0..self.dim() {
            if j != z {
                let v = a[j] + t * m[(z, j)];
                m[(z, j)] = v;
                m[(j, z)] = -v;
            }
        }
        Some(m)
    }

    /// `ωⁿ / vol = n! Pf(W)`, in the b-frame for b-forms.
    pub fn top_power(&self, p: &[f64]) -> f64 {
        let m = self.b_matrix(p).unwrap_or_else(|| self.matrix(p));
        let dim = self.dim();
        let flat: Vec<f64> = (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect();
        factorial(self.chart.n()) * pfaffian(&flat, dim)
    }

    /// Gradient of `ωⁿ / vol` for folded and symplectic forms (exact when the
    /// coefficient fields carry exact gradients).
    pub fn top_power_gradient(&self, p: &[f64]) -> Vec<f64> {
        let w = match &self.kind {
            FormKind::Symplectic(w) | FormKind::Folded(w) => w,
            FormKind::BSymplectic { .. } => {
                return vec![0.0; self.dim()];
            }
        };
        let entries: Vec<Dual> = w.dual_entries(p);
        let pf = pfaffian(&entries, self.dim());
        let k = factorial(self.chart.n());
        pf.d[..self.dim()].iter().map(|v| v * k).collect()
    }
}

fn kind_name(k: &FormKind) -> &'static str {
    match k {
        FormKind::Symplectic(_) => "symplectic",
        FormKind::Folded(_) => "folded",
        FormKind::BSymplectic { .. } => "b-symplectic",
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Coord, ScalarField};

    fn martinet_chart() -> Chart {
        Chart::new(
            "m",
            vec![
                Coord::linear("t", -1.0, 1.0),
                Coord::angle("q"),
                Coord::linear("x", -1.0, 1.0),
                Coord::linear("y", -1.0, 1.0),
            ],
            Some(0),
        )
        .unwrap()
    }

    #[test]
    fn folded_needs_defining_coordinate() {
        let mut c = martinet_chart();
        c.z_coord = None;
        let w = TwoFormField::new(4).with(0, 1, ScalarField::coordinate(0));
        assert!(matches!(SingularForm::folded(c, w), Err(Error::Config(_))));
    }

    #[test]
    fn b_frame_matrix_is_regular_on_z() {
        let alpha = OneFormField::new(4).with(1, ScalarField::constant(1.0));
        let beta = TwoFormField::new(4).with(2, 3, ScalarField::constant(1.0));
        let f = SingularForm::b_symplectic(martinet_chart(), alpha, beta).unwrap();
        let p = [0.0, 0.3, 0.1, 0.2];
        assert!((f.top_power(&p) - 2.0).abs() < 1e-15);
        let off = f.matrix(&[0.5, 0.3, 0.1, 0.2]);
        assert_eq!(off[(0, 1)], 2.0);
    }

    #[test]
    fn top_power_gradient_of_martinet_form() {
        let w = TwoFormField::new(4)
            .with(0, 1, ScalarField::coordinate(0))
            .with(2, 3, ScalarField::constant(1.0));
        let f = SingularForm::folded(martinet_chart(), w).unwrap();
        let g = f.top_power_gradient(&[0.0, 0.1, 0.2, 0.3]);
        assert_eq!(g[0], 2.0);
        assert_eq!(f.top_power(&[0.0, 0.1, 0.2, 0.3]), 0.0);
    }
}
