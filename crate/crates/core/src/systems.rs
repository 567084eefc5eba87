//! Integrable systems and their pointwise checks.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{frame_coefficients, Chart, SingularForm, KERNEL_REL};
use crate::hamiltonian::{bracket_at, hamiltonian_vf, HamiltonianField, Observable};
use crate::linalg::Spectrum;
use crate::sampling::SamplePlan;

/// Rows shorter than this are treated as zero before rank decisions.
const ZERO_ROW: f64 = 1e-12;

/// Fraction of samples that must be of full rank for a "dense set".
pub const DENSITY_THRESHOLD: f64 = 0.95;

#[derive(Clone, Debug)]
pub struct IntegrableSystem {
    pub name: String,
    pub form: Arc<SingularForm>,
    pub names: Vec<String>,
    pub observables: Vec<Observable>,
    pub fields: Vec<HamiltonianField>,
}

impl IntegrableSystem {
    pub fn new(name: &str, form: Arc<SingularForm>, observables: Vec<(String, Observable)>) -> Result<IntegrableSystem> {
        let n = form.chart.n();
        if observables.len() != n {
            return Err(Error::Config(format!(
                "system `{name}` needs {n} observables on a {}-dimensional chart, got {}",
                form.dim(),
                observables.len()
            )));
        }
        let b_count = observables.iter().filter(|(_, o)| matches!(o, Observable::BFun { .. })).count();
        if b_count > 1 {
            return Err(Error::Config(format!(
                "system `{name}` has {b_count} b-functions; at most one is allowed"
            )));
        }
        let fields = observables
            .iter()
            .map(|(_, o)| hamiltonian_vf(o, &form))
            .collect::<Result<Vec<_>>>()?;
        let (names, observables) = observables.into_iter().unzip();
        Ok(IntegrableSystem {
            name: name.to_string(),
            form,
            names,
            observables,
            fields,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.form.chart
    }

    pub fn n(&self) -> usize {
        self.observables.len()
    }

    /// Observable values `(f_1(p), …, f_n(p))`.
    pub fn values(&self, p: &[f64]) -> Vec<f64> {
        self.observables.iter().map(|o| o.value(self.chart(), p)).collect()
    }

    /// Hamiltonian fields at `p` in the coordinate frame.
    pub fn vectors(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.fields.iter().map(|x| x.eval(p)).collect()
    }

    /// Replace observable `i`, rebuilding its field.
    pub fn with_observable(&self, i: usize, obs: Observable) -> Result<IntegrableSystem> {
        let mut s = self.clone();
        s.fields[i] = hamiltonian_vf(&obs, &self.form)?;
        s.observables[i] = obs;
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairBracket {
    pub i: usize,
    pub j: usize,
    pub max_abs: f64,
    pub at: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutationReport {
    pub samples: usize,
    /// Samples where a Hamiltonian field could not be evaluated.
    pub skipped: usize,
    pub pairs: Vec<PairBracket>,
    pub max_abs: f64,
    pub tol: f64,
    pub pass: bool,
}

/// `max |{f_i, f_j}|` over the samples for every pair `i < j`.
pub fn check_commutation(sys: &IntegrableSystem, samples: &[Vec<f64>], tol: f64) -> CommutationReport {
    let n = sys.n();
    let rows: Vec<Option<Vec<f64>>> = samples
        .par_iter()
        .map(|p| {
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    out.push(bracket_at(&sys.fields[i], &sys.fields[j], p).ok()?);
                }
            }
            Some(out)
        })
        .collect();
    let mut pairs = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let mut best = PairBracket {
                i,
                j,
                max_abs: 0.0,
                at: None,
            };
            for (p, r) in samples.iter().zip(&rows) {
                if let Some(r) = r {
                    let v = r[k].abs();
                    if !v.is_finite() || v > best.max_abs {
                        best.max_abs = if v.is_finite() { v } else { f64::INFINITY };
                        best.at = Some(p.clone());
                    }
                }
            }
            pairs.push(best);
            k += 1;
        }
    }
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let max_abs = pairs.iter().map(|p| p.max_abs).fold(0.0, f64::max);
    CommutationReport {
        samples: samples.len(),
        skipped,
        pairs,
        max_abs,
        tol,
        pass: max_abs <= tol && skipped < samples.len(),
    }
}

fn full_rank(rows: &[Vec<f64>]) -> bool {
    let n = rows.len();
    if n == 0 {
        return true;
    }
    let dim = rows[0].len();
    let mut m = DMatrix::zeros(n, dim);
    for (i, r) in rows.iter().enumerate() {
        let len = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(len > ZERO_ROW) {
            return false;
        }
        for (j, v) in r.iter().enumerate() {
            m[(i, j)] = v / len;
        }
    }
    Spectrum::new(&m).rank(KERNEL_REL) == n
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub interior_samples: usize,
    pub z_samples: usize,
    pub interior_fraction: f64,
    pub z_fraction: f64,
    pub threshold: f64,
    pub pass: bool,
    pub note: String,
}

/// Rank of the coefficient array of `(df_1, …, df_n)` in the adapted coframe.
pub fn independent_at(sys: &IntegrableSystem, p: &[f64]) -> Result<bool> {
    let rows = sys
        .observables
        .iter()
        .map(|o| frame_coefficients(o, &sys.form, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(full_rank(&rows))
}

pub fn check_independence(sys: &IntegrableSystem, plan: &SamplePlan) -> IndependenceReport {
    let chart = sys.chart();
    check_independence_on(sys, &plan.interior_points(chart), &plan.z_points(chart))
}

pub fn check_independence_on(sys: &IntegrableSystem, interior: &[Vec<f64>], on_z: &[Vec<f64>]) -> IndependenceReport {
    let frac = |pts: &[Vec<f64>]| -> f64 {
        if pts.is_empty() {
            return 1.0;
        }
        let good = pts
            .par_iter()
            .filter(|p| independent_at(sys, p).unwrap_or(false))
            .count();
        good as f64 / pts.len() as f64
    };
    let fi = frac(interior);
    let fz = frac(on_z);
    IndependenceReport {
        interior_samples: interior.len(),
        z_samples: on_z.len(),
        interior_fraction: fi,
        z_fraction: fz,
        threshold: DENSITY_THRESHOLD,
        pass: fi >= DENSITY_THRESHOLD && fz >= DENSITY_THRESHOLD,
        note: "density proxy: fraction of low-discrepancy samples with full rank".into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Regular,
    Singular,
}

/// Regular iff the `n` Hamiltonian fields (b-frame for b-forms) are linearly
/// independent at `p`, measured in the chart's embedded metric.
pub fn classify_point(sys: &IntegrableSystem, p: &[f64]) -> Result<PointClass> {
    let w = sys.chart().direction_weights(p);
    let rows = sys
        .fields
        .iter()
        .map(|x| Ok(x.eval_frame(p)?.iter().zip(&w).map(|(v, s)| v * s).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(if full_rank(&rows) {
        PointClass::Regular
    } else {
        PointClass::Singular
    })
}
