//! Deterministic low-discrepancy sampling of chart boxes and of the critical
//! hypersurface.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Chart;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// `count` points of the Halton sequence in `[0,1)^dim`, rotated by a
/// seed-dependent shift (Cranley-Patterson) so different seeds give
/// different but equally uniform point sets.
pub fn halton(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let v = radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d];
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}

/// How many points to draw and where.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub interior: usize,
    pub on_z: usize,
    pub seed: u64,
    /// Fraction of each linear coordinate's width kept clear at both ends.
    pub margin: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            interior: 2000,
            on_z: 500,
            seed: 7,
            margin: 0.02,
        }
    }
}

impl SamplePlan {
    pub fn new(interior: usize, on_z: usize, seed: u64) -> SamplePlan {
        SamplePlan {
            interior,
            on_z,
            seed,
            ..SamplePlan::default()
        }
    }

    fn place(&self, chart: &Chart, unit: &[f64], skip: Option<usize>) -> Vec<f64> {
        let mut k = 0;
        (0..chart.dim())
            .map(|i| {
                if Some(i) == skip {
                    return 0.0;
                }
                let c = &chart.coords[i];
                let u = unit[k];
                k += 1;
                if c.is_angle() {
                    c.lo + (c.hi - c.lo) * u
                } else {
                    let w = c.hi - c.lo;
                    c.lo + w * (self.margin + (1.0 - 2.0 * self.margin) * u)
                }
            })
            .collect()
    }

    /// Points in the (shrunken) chart box.
    pub fn interior_points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        halton(self.interior, chart.dim(), self.seed)
            .iter()
            .map(|u| self.place(chart, u, None))
            .collect()
    }

    /// Points on `Z = {t = 0}`; empty when the chart has no critical coordinate.
    pub fn z_points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let Some(z) = chart.z_coord else {
            return Vec::new();
        };
        halton(self.on_z, chart.dim() - 1, self.seed ^ 0x5a5a_5a5a)
            .iter()
            .map(|u| self.place(chart, u, Some(z)))
            .collect()
    }
}
