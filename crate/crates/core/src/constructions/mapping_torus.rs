//! Mapping tori of leaf symplectomorphisms: obstruction verdicts and
//! exceptional orbits.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::averaging::PointMap;
use crate::error::{Error, Result};
use crate::geometry::{Chart, Coord, ScalarField, TwoFormField};
use crate::linalg::least_squares;
use crate::sampling::SamplePlan;

/// `Z = (L × [0, k]) / (x, 0) ∼ (φ(x), k)`.
#[derive(Clone, Debug)]
pub struct MappingTorus {
    pub leaf: Chart,
    pub leaf_form: TwoFormField,
    pub monodromy: PointMap,
    pub period: f64,
    /// Action of `φ` on a chosen basis of degree-2 homology.
    pub homology_action: Option<Vec<Vec<i64>>>,
    pub order: Option<usize>,
}

/// Sample count for the pullback and order checks.
const CHECK_SAMPLES: usize = 200;

impl MappingTorus {
    pub fn new(
        leaf_form: TwoFormField,
        monodromy: PointMap,
        period: f64,
        homology_action: Option<Vec<Vec<i64>>>,
        order: Option<usize>,
    ) -> Result<MappingTorus> {
        let leaf = monodromy.chart.clone();
        if leaf_form.dim != leaf.dim() {
            return Err(Error::Dimension {
                expected: leaf.dim(),
                got: leaf_form.dim,
            });
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Config(format!("mapping-torus period must be positive, got {period}")));
        }
        if let Some(h) = &homology_action {
            if h.is_empty() || h.iter().any(|r| r.len() != h.len()) {
                return Err(Error::Config("homology action must be a non-empty square matrix".into()));
            }
        }
        let mt = MappingTorus {
            leaf,
            leaf_form,
            monodromy,
            period,
            homology_action,
            order,
        };
        let samples = mt.samples();
        let drift = mt.pullback_residual(&samples);
        if drift > 1e-8 {
            return Err(Error::Precondition(format!("monodromy does not preserve the leaf form (residual {drift:.2e})")));
        }
        if let Some(k) = order {
            if k == 0 || mt.monodromy.power_residual(k, &samples) > 1e-9 {
                return Err(Error::Precondition(format!("monodromy does not have order {k} on the samples")));
            }
        }
        Ok(mt)
    }

    /// The rotation `φ ↦ φ + a` of the round sphere `dh∧dφ`, with period 1.
    pub fn sphere_rotation(a: f64, order: Option<usize>) -> Result<MappingTorus> {
        let c = Chart::new("s2", vec![Coord::linear("h", -1.0, 1.0), Coord::angle("phi")], None)?.with_sphere_pair(0, 1)?;
        let w = TwoFormField::new(2).with(0, 1, ScalarField::constant(1.0));
        MappingTorus::new(w, PointMap::rotation(c, 1, a), 1.0, None, order)
    }

    fn samples(&self) -> Vec<Vec<f64>> {
        SamplePlan::new(CHECK_SAMPLES, 0, 17).interior_points(&self.leaf)
    }

    /// `max |Jᵀ W(φ(x)) J − W(x)|` with `J` the exact Jacobian of `φ`.
    pub fn pullback_residual(&self, samples: &[Vec<f64>]) -> f64 {
        let d = self.leaf.dim();
        let mut worst: f64 = 0.0;
        for p in samples {
            let j = DMatrix::from_fn(d, d, |a, b| self.monodromy.map[a].gradient(p)[b]);
            let w_img = self.leaf_form.matrix(&self.monodromy.apply(p));
            let pulled = j.transpose() * w_img * &j;
            worst = worst.max((pulled - self.leaf_form.matrix(p)).abs().max());
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Trivial,
    Nontrivial,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Trivial => "trivial",
            Verdict::Nontrivial => "nontrivial — global action-angle obstructed",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub verdict: Verdict,
    pub summary: String,
    pub reason: String,
}

fn is_identity(m: &[Vec<i64>]) -> bool {
    m.iter()
        .enumerate()
        .all(|(i, r)| r.iter().enumerate().all(|(j, v)| *v == i64::from(i == j)))
}

/// Trivial if the monodromy is the identity on samples; nontrivial if the
/// supplied homology action is not the identity; unknown otherwise.
pub fn obstruction_report(mt: &MappingTorus) -> ObstructionReport {
    let (verdict, reason) = if mt.monodromy.is_identity_on(&mt.samples(), 1e-10) {
        (Verdict::Trivial, "monodromy is the identity on every sample: Z ≅ L × S¹".to_string())
    } else {
        match &mt.homology_action {
            Some(h) if !is_identity(h) => (
                Verdict::Nontrivial,
                format!("monodromy acts on H₂ by {h:?} ≠ I, so Z is not a trivial mapping torus"),
            ),
            Some(_) => (
                Verdict::Unknown,
                "monodromy acts trivially on the supplied homology basis but is not the identity map".to_string(),
            ),
            None => (
                Verdict::Unknown,
                "monodromy is not the identity and no homology action was supplied".to_string(),
            ),
        }
    };
    ObstructionReport {
        summary: verdict.to_string(),
        verdict,
        reason,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExceptionalPoint {
    pub point: Vec<f64>,
    /// Smallest `j` with `φʲ(x) = x`.
    pub power: usize,
    pub residual: f64,
}

/// Chart point in an embedding where sphere pairs become round spheres and
/// angles circles of circumference 1.
fn embed(chart: &Chart, p: &[f64]) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let mut out = Vec::new();
    let in_pair = |i: usize| chart.sphere_pairs.iter().any(|&(h, f)| h == i || f == i);
    for (i, c) in chart.coords.iter().enumerate() {
        if in_pair(i) {
            continue;
        }
        if c.is_angle() {
            out.push((tau * p[i]).cos() / tau);
            out.push((tau * p[i]).sin() / tau);
        } else {
            out.push(p[i]);
        }
    }
    for &(h, f) in &chart.sphere_pairs {
        let r = (1.0 - p[h] * p[h]).max(0.0).sqrt();
        out.extend([r * (tau * p[f]).cos(), r * (tau * p[f]).sin(), p[h]]);
    }
    out
}

fn clamp(chart: &Chart, p: &mut [f64]) {
    for (x, c) in p.iter_mut().zip(&chart.coords) {
        if !c.is_angle() {
            *x = x.clamp(c.lo, c.hi);
        }
    }
}

/// Newton solve of `φʲ(x) = x` in the embedding, with linear coordinates
/// clamped to the chart.
fn fixed_point(map: &PointMap, j: usize, seed: &[f64]) -> Option<(Vec<f64>, f64)> {
    let chart = &map.chart;
    let res = |x: &[f64]| -> DVector<f64> {
        let a = embed(chart, &map.apply_n(x, j));
        let b = embed(chart, x);
        DVector::from_iterator(a.len(), a.iter().zip(&b).map(|(u, v)| u - v))
    };
    let mut x = seed.to_vec();
    let mut r = res(&x);
    for _ in 0..60 {
        if r.norm() < 1e-13 {
            break;
        }
        let d = x.len();
        let mut jac = DMatrix::zeros(r.len(), d);
        for k in 0..d {
            let c = &chart.coords[k];
            let h = 1e-7;
            let (mut a, mut b) = (x.clone(), x.clone());
            // One-sided differences at the chart boundary.
            let (up, down) = if c.is_angle() {
                (h, h)
            } else {
                ((c.hi - x[k]).min(h), (x[k] - c.lo).min(h))
            };
            if up + down == 0.0 {
                continue;
            }
            a[k] += up;
            b[k] -= down;
            let col = (res(&a) - res(&b)) / (up + down);
            jac.set_column(k, &col);
        }
        let step = least_squares(&jac, &r, 1e-10);
        if step.norm() < 1e-15 {
            break;
        }
        let mut cand = x.clone();
        for k in 0..d {
            cand[k] -= step[k];
        }
        clamp(chart, &mut cand);
        let cand = chart.normalize_unchecked(&cand);
        let rc = res(&cand);
        if rc.norm() >= r.norm() {
            break;
        }
        x = cand;
        r = rc;
    }
    let rn = r.norm();
    (rn < 1e-9).then_some((x, rn))
}

/// Fixed points of `φʲ`, `1 ≤ j < k`, found from a seed grid of the leaf
/// and de-duplicated; these are the traces of exceptional orbits.
pub fn exceptional_orbits(mt: &MappingTorus, seeds_per_axis: usize) -> Result<Vec<ExceptionalPoint>> {
    let k = mt
        .order
        .ok_or_else(|| Error::Unsupported("exceptional orbits need a monodromy of finite order".into()))?;
    let chart = &mt.leaf;
    let d = chart.dim();
    let m = seeds_per_axis.max(1);
    let seeds: Vec<Vec<f64>> = (0..m.pow(d as u32))
        .map(|idx| {
            (0..d)
                .map(|i| {
                    let c = &chart.coords[i];
                    let u = ((idx / m.pow(i as u32)) % m) as f64 + 0.5;
                    if c.is_angle() {
                        u / m as f64
                    } else {
                        c.lo + (c.hi - c.lo) * u / m as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut found: Vec<ExceptionalPoint> = Vec::new();
    for j in 1..k {
        for s in &seeds {
            let Some((x, residual)) = fixed_point(&mt.monodromy, j, s) else {
                continue;
            };
            let ex = embed(chart, &x);
            let dup = found.iter().any(|e| {
                let ey = embed(chart, &e.point);
                ex.iter().zip(&ey).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < 1e-6
            });
            if !dup {
                found.push(ExceptionalPoint { point: x, power: j, residual });
            }
        }
    }
    found.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Coord, ScalarField};

    pub(crate) fn sphere_rotation(a: f64, order: Option<usize>) -> MappingTorus {
        let c = Chart::new("s2", vec![Coord::linear("h", -1.0, 1.0), Coord::angle("phi")], None)
            .unwrap()
            .with_sphere_pair(0, 1)
            .unwrap();
        let w = TwoFormField::new(2).with(0, 1, ScalarField::constant(1.0));
        MappingTorus::new(w, PointMap::rotation(c, 1, a), 1.0, None, order).unwrap()
    }

    #[test]
    fn rotations_fix_the_poles() {
        for (a, k) in [(0.5, 2), (1.0 / 3.0, 3)] {
            let pts = exceptional_orbits(&sphere_rotation(a, Some(k)), 4).unwrap();
            assert_eq!(pts.len(), 2, "{pts:?}");
            assert!((pts[0].point[0] + 1.0).abs() < 1e-6 && (pts[1].point[0] - 1.0).abs() < 1e-6);
        }
        assert!(exceptional_orbits(&sphere_rotation(0.0, Some(1)), 4).unwrap().is_empty());
    }

    #[test]
    fn verdicts() {
        assert_eq!(obstruction_report(&sphere_rotation(0.0, Some(1))).verdict, Verdict::Trivial);
        assert_eq!(obstruction_report(&sphere_rotation(0.25, Some(4))).verdict, Verdict::Unknown);
    }
}
