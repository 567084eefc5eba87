use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::MAX_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordKind {
    Linear,
    Angle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub name: String,
    pub kind: CoordKind,
    pub lo: f64,
    pub hi: f64,
}

impl Coord {
    pub fn linear(name: &str, lo: f64, hi: f64) -> Coord {
        Coord {
            name: name.to_string(),
            kind: CoordKind::Linear,
            lo,
            hi,
        }
    }

    /// Angle coordinate with period 1.
    pub fn angle(name: &str) -> Coord {
        Coord {
            name: name.to_string(),
            kind: CoordKind::Angle,
            lo: 0.0,
            hi: 1.0,
        }
    }

    pub fn is_angle(&self) -> bool {
        self.kind == CoordKind::Angle
    }
}

/// A coordinate box; angle coordinates have period 1.
///
/// A sphere pair `(h, phi)` marks a height/azimuth pair of cylindrical
/// coordinates on a round sphere; distances and ranks then use the embedded
/// metric so that `h = ±1` behaves as the poles.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub name: String,
    pub coords: Vec<Coord>,
    pub z_coord: Option<usize>,
    pub sphere_pairs: Vec<(usize, usize)>,
}

impl Chart {
    pub fn new(name: &str, coords: Vec<Coord>, z_coord: Option<usize>) -> Result<Chart> {
        let dim = coords.len();
        if !dim.is_multiple_of(2) || !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::Config(format!(
                "chart `{name}` must have an even number of coordinates between 2 and {MAX_DIM}, got {dim}"
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].iter().any(|d| d.name == c.name) {
                return Err(Error::Config(format!("duplicate coordinate name `{}`", c.name)));
            }
            match c.kind {
                CoordKind::Angle if (c.lo, c.hi) != (0.0, 1.0) => {
                    return Err(Error::Config(format!("angle coordinate `{}` must have bounds [0, 1]", c.name)));
                }
                CoordKind::Linear if !(c.lo < c.hi && c.lo.is_finite() && c.hi.is_finite()) => {
                    return Err(Error::Config(format!("coordinate `{}` has an empty or infinite interval", c.name)));
                }
                _ => {}
            }
        }
        if let Some(z) = z_coord {
            let c = coords
                .get(z)
                .ok_or_else(|| Error::Config(format!("z coordinate index {z} out of range")))?;
            if c.is_angle() {
                return Err(Error::Config(format!("defining coordinate `{}` must be linear", c.name)));
            }
            if !(c.lo < 0.0 && 0.0 < c.hi) {
                return Err(Error::Config(format!(
                    "defining coordinate `{}` must contain 0 in the interior of its interval",
                    c.name
                )));
            }
        }
        Ok(Chart {
            name: name.to_string(),
            coords,
            z_coord,
            sphere_pairs: Vec::new(),
        })
    }

    pub fn with_sphere_pair(mut self, h: usize, phi: usize) -> Result<Chart> {
        let ok = h < self.dim()
            && phi < self.dim()
            && !self.coords[h].is_angle()
            && self.coords[phi].is_angle()
            && self.coords[h].lo >= -1.0
            && self.coords[h].hi <= 1.0;
        if !ok {
            return Err(Error::Config(format!(
                "sphere pair ({h}, {phi}) needs a linear height within [-1, 1] and an angle"
            )));
        }
        self.sphere_pairs.push((h, phi));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Half the dimension.
    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c.name == name)
    }

    pub fn check_len(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: p.len(),
            });
        }
        Ok(())
    }

    /// Reduce angle coordinates modulo 1; linear coordinates are unchanged.
    pub fn normalize(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p)?;
        Ok(self.normalize_unchecked(p))
    }

    pub(crate) fn normalize_unchecked(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.coords)
            .map(|(&x, c)| if c.is_angle() { wrap01(x) } else { x })
            .collect()
    }

    /// True when every linear coordinate lies in its interval widened by `slack`.
    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        p.len() == self.dim()
            && p.iter().zip(&self.coords).all(|(&x, c)| {
                x.is_finite() && (c.is_angle() || (x >= c.lo - slack && x <= c.hi + slack))
            })
    }

    /// `a - b` with angle differences wrapped into `[-1/2, 1/2)`.
    pub fn wrapped_diff(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.coords)
            .map(|((&x, &y), c)| if c.is_angle() { wrap_half(x - y) } else { x - y })
            .collect()
    }

    fn in_pair(&self, i: usize) -> bool {
        self.sphere_pairs.iter().any(|&(h, p)| h == i || p == i)
    }

    /// Distance using the flat torus metric on angles and the embedded round
    /// metric on sphere pairs.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.wrapped_diff(a, b);
        let mut s: f64 = d
            .iter()
            .enumerate()
            .filter(|&(i, _)| !self.in_pair(i))
            .map(|(_, v)| v * v)
            .sum();
        for &(h, phi) in &self.sphere_pairs {
            let ea = sphere_point(a[h], a[phi]);
            let eb = sphere_point(b[h], b[phi]);
            s += (0..3).map(|k| (ea[k] - eb[k]).powi(2)).sum::<f64>();
        }
        s.sqrt()
    }

    /// Length scale of each coordinate direction at `p` (1 except for the
    /// azimuth of a sphere pair, whose circles shrink towards the poles).
    pub fn direction_weights(&self, p: &[f64]) -> Vec<f64> {
        let mut w = vec![1.0; self.dim()];
        for &(h, phi) in &self.sphere_pairs {
            w[phi] = 2.0 * std::f64::consts::PI * (1.0 - p[h] * p[h]).max(0.0).sqrt();
        }
        w
    }

    /// Width of the defining coordinate's interval.
    pub fn t_range(&self) -> Option<f64> {
        self.z_coord.map(|z| self.coords[z].hi - self.coords[z].lo)
    }

    /// Copy of `p` with the defining coordinate set to `t`.
    pub fn with_t(&self, p: &[f64], t: f64) -> Vec<f64> {
        let mut q = p.to_vec();
        if let Some(z) = self.z_coord {
            q[z] = t;
        }
        q
    }
}

fn sphere_point(h: f64, phi: f64) -> [f64; 3] {
    let r = (1.0 - h * h).max(0.0).sqrt();
    let a = 2.0 * std::f64::consts::PI * phi;
    [r * a.cos(), r * a.sin(), h]
}

pub fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub fn wrap_half(x: f64) -> f64 {
    let r = wrap01(x + 0.5) - 0.5;
    if r < -0.5 {
        r + 1.0
    } else {
        r
    }
}
