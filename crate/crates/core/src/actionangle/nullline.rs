//! Closed orbits of the null line field on the fold.

use rayon::prelude::*;
use serde::Serialize;

use super::integrator::{integrate, FlowOptions};
use crate::error::{Error, Result};
use crate::geometry::{null_line, SingularForm};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NullLineOptions {
    /// Return distance that counts as closing up.
    pub close_tol: f64,
    /// Distance the orbit must first reach before a return counts.
    pub depart: f64,
    /// Arc-length budget per seed.
    pub max_length: f64,
    /// Spacing of the distance checks along the orbit.
    pub sample_step: f64,
    pub flow: FlowOptions,
}

impl Default for NullLineOptions {
    fn default() -> Self {
        NullLineOptions {
            close_tol: 5e-3,
            depart: 0.05,
            max_length: 60.0,
            sample_step: 0.002,
            flow: FlowOptions {
                h_max: 0.02,
                ..FlowOptions::with_tol(1e-9)
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedOrbit {
    pub seed: Vec<f64>,
    /// Arc length at the closest return.
    pub length: f64,
    pub closure_distance: f64,
    /// Seeds that landed on this orbit.
    pub seeds: usize,
    #[serde(skip)]
    pub trace: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullLineReport {
    pub seeds: usize,
    pub closed_seeds: usize,
    pub open_seeds: usize,
    pub orbits: Vec<ClosedOrbit>,
    pub all_closed: bool,
    /// Some seed ran out of arc length, so the orbit list may be partial.
    pub budget_exhausted: bool,
}

enum SeedResult {
    Closed { length: f64, distance: f64, trace: Vec<Vec<f64>> },
    Open,
}

fn follow(form: &SingularForm, seed: &[f64], opts: &NullLineOptions) -> Result<SeedResult> {
    let chart = &form.chart;
    let seed = chart.with_t(seed, 0.0);
    let steps = (opts.max_length / opts.sample_step).ceil() as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * opts.sample_step).collect();
    let field = |y: &[f64]| null_line(form, &chart.normalize_unchecked(y));
    let sol = integrate(field, &seed, opts.max_length, &times, &opts.flow, |y| chart.contains(y, 1e-9));
    if let Some(r) = &sol.stopped {
        if r != "left the chart" {
            return Err(Error::Numerical(format!("null-line orbit from {seed:?}: {r}")));
        }
    }
    let mut departed = false;
    let mut best: Option<(f64, f64)> = None;
    for (t, y) in sol.times.iter().zip(&sol.states) {
        let d = chart.distance(y, &seed);
        if !departed {
            departed = d > opts.depart;
            continue;
        }
        match best {
            None if d < opts.close_tol => best = Some((*t, d)),
            Some((_, bd)) if d < bd => best = Some((*t, d)),
            Some(_) => break,
            None => {}
        }
    }
    Ok(match best {
        Some((length, distance)) => {
            let trace = sol
                .times
                .iter()
                .zip(&sol.states)
                .filter(|(t, _)| **t <= length)
                .map(|(_, y)| chart.normalize_unchecked(y))
                .collect();
            SeedResult::Closed { length, distance, trace }
        }
        None => SeedResult::Open,
    })
}

/// Follow the null line from each seed on `Z` and collect distinct closed
/// orbits. Two closed seeds give the same orbit when one lies within
/// `close_tol` of the other's trace.
pub fn null_line_closed_orbits(form: &SingularForm, seeds: &[Vec<f64>], opts: &NullLineOptions) -> Result<NullLineReport> {
    if !form.is_folded() {
        return Err(Error::Config("null-line orbits need a folded form".into()));
    }
    for s in seeds {
        form.chart.check_len(s)?;
    }
    let results = seeds.par_iter().map(|s| follow(form, s, opts)).collect::<Result<Vec<_>>>()?;
    let chart = &form.chart;
    let mut orbits: Vec<ClosedOrbit> = Vec::new();
    let mut open = 0;
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            SeedResult::Open => open += 1,
            SeedResult::Closed { length, distance, trace } => {
                let seed = chart.with_t(seed, 0.0);
                let same = orbits.iter_mut().find(|o| {
                    o.trace.iter().any(|q| chart.distance(q, &seed) < opts.close_tol)
                        || trace.iter().any(|q| chart.distance(q, &o.seed) < opts.close_tol)
                });
                match same {
                    Some(o) => o.seeds += 1,
                    None => orbits.push(ClosedOrbit {
                        seed,
                        length,
                        closure_distance: distance,
                        seeds: 1,
                        trace,
                    }),
                }
            }
        }
    }
    Ok(NullLineReport {
        seeds: seeds.len(),
        closed_seeds: seeds.len() - open,
        open_seeds: open,
        all_closed: open == 0 && !seeds.is_empty(),
        budget_exhausted: open > 0,
        orbits,
    })
}
