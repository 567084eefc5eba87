//! Worked examples of folded and b-integrable systems, each with closed-form
//! Hamiltonian fields used as oracles and a recorded expected outcome.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::constructions::{obstruction_report, product_with_folded_surface, FoldedSurface, MappingTorus, ObstructionReport, PointMap};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{validate_form, Chart, Coord, OneFormField, ScalarField, SingularForm, TwoFormField, ValidationReport};
use crate::hamiltonian::{is_folded_function, AdmissibilityReport, Observable};
use crate::actionangle::{null_line_closed_orbits, NullLineOptions, NullLineReport};
use crate::sampling::SamplePlan;
use crate::systems::{check_commutation, check_independence, classify_point, CommutationReport, IndependenceReport, IntegrableSystem, PointClass};

/// Closed-form Hamiltonian field in chart coordinates.
pub type FieldOracle = fn(&[f64]) -> Vec<f64>;

pub const GALLERY_IDS: [&str; 9] = [
    "double_collision",
    "origami_s4",
    "fibrating_boundary",
    "product_surface",
    "spherical_pendulum",
    "non_b_modelable",
    "radko_sphere",
    "no_cotangent_model",
    "swap_monodromy",
];

pub const COMMUTATION_TOL: f64 = 1e-8;
pub const ADMISSIBILITY_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-7;
const ORACLE_SAMPLES: (usize, usize) = (80, 20);
const CLASSIFY_SAMPLES: (usize, usize) = (200, 50);

/// The rotation number used for the irrational rotation of the sphere.
pub fn golden_rotation() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub id: &'static str,
    pub title: &'static str,
    pub system: IntegrableSystem,
    /// `(observable index, closed-form X_f)`.
    pub oracles: Vec<(usize, FieldOracle)>,
    /// Seeds on `Z` for the closed-orbit search of the null line.
    pub null_seeds: Vec<Vec<f64>>,
    pub mapping_torus: Option<MappingTorus>,
    /// Recorded verdict lines that `run_all_checks` must reproduce.
    pub expected: &'static str,
}

pub fn instantiate(id: &str) -> Result<GalleryEntry> {
    match id {
        "double_collision" => double_collision(),
        "origami_s4" => origami_s4(),
        "fibrating_boundary" => fibrating_boundary(),
        "product_surface" => product_surface(),
        "spherical_pendulum" => spherical_pendulum(),
        "non_b_modelable" => non_b_modelable(),
        "radko_sphere" => radko_sphere(),
        "no_cotangent_model" => no_cotangent_model(),
        "swap_monodromy" => swap_monodromy(),
        _ => Err(Error::UnknownId(format!("no gallery entry `{id}` (known: {})", GALLERY_IDS.join(", ")))),
    }
}

fn parse(src: &str, chart: &Chart) -> Result<ScalarField> {
    ScalarField::parse(src, &chart.names())
}

fn smooth(name: &str, src: &str, chart: &Chart) -> Result<(String, Observable)> {
    Ok((name.to_string(), Observable::smooth(parse(src, chart)?)))
}

fn two_form(chart: &Chart, entries: &[(usize, usize, &str)]) -> Result<TwoFormField> {
    entries
        .iter()
        .try_fold(TwoFormField::new(chart.dim()), |w, (i, j, src)| Ok(w.with(*i, *j, parse(src, chart)?)))
}

fn entry(
    id: &'static str,
    title: &'static str,
    system: IntegrableSystem,
    oracles: Vec<(usize, FieldOracle)>,
    expected: &'static str,
) -> GalleryEntry {
    GalleryEntry {
        id,
        title,
        system,
        oracles,
        null_seeds: Vec::new(),
        mapping_torus: None,
        expected,
    }
}

/// Regularized collision model: `r dr∧dv + 2π dθ∧dw` with
/// `H = −(r²/2)(w² + v² − 2) + w²/2`.
fn double_collision() -> Result<GalleryEntry> {
    let chart = Chart::new(
        "collision",
        vec![
            Coord::linear("r", -1.0, 1.0),
            Coord::linear("v", -2.0, 2.0),
            Coord::angle("th"),
            Coord::linear("w", -2.0, 2.0),
        ],
        Some(0),
    )?;
    let w = two_form(&chart, &[(0, 1, "r"), (2, 3, "2*pi")])?;
    let obs = vec![smooth("H", "-(r^2/2)*(w^2 + v^2 - 2) + w^2/2", &chart)?, smooth("w", "w", &chart)?];
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let sys = IntegrableSystem::new("double_collision", form, obs)?;
    fn x_h(p: &[f64]) -> Vec<f64> {
        let (r, v, w) = (p[0], p[1], p[3]);
        vec![r * v, -(w * w + v * v - 2.0), -(w - r * r * w) / (2.0 * PI), 0.0]
    }
    fn x_w(_: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, -1.0 / (2.0 * PI), 0.0]
    }
    Ok(entry(
        "double_collision",
        "folded model of the regularized double collision",
        sys,
        vec![(0, x_h), (1, x_w)],
        include_str!("../fixtures/gallery/double_collision.txt"),
    ))
}

/// Pullback of `(|x|², x₁y₂ − x₂y₁)` to the folded 4-sphere, in the chart
/// `x₁ + iy₁ = √A e^{2πiθ₁}`, `x₂ + iy₂ = √B e^{2πiθ₂}` with
/// `A = (1−z²)cos²β`, `B = (1−z²)sin²β`.
fn origami_s4() -> Result<GalleryEntry> {
    let chart = Chart::new(
        "folded_s4",
        vec![
            Coord::linear("z", -0.9, 0.9),
            Coord::linear("beta", 0.05, PI / 2.0 - 0.05),
            Coord::angle("th1"),
            Coord::angle("th2"),
        ],
        Some(0),
    )?;
    let w = two_form(
        &chart,
        &[
            (0, 2, "-2*pi*z*cos(beta)^2"),
            (1, 2, "-2*pi*(1 - z^2)*cos(beta)*sin(beta)"),
            (0, 3, "-2*pi*z*sin(beta)^2"),
            (1, 3, "2*pi*(1 - z^2)*cos(beta)*sin(beta)"),
        ],
    )?;
    let obs = vec![
        smooth("f1", "1 - z^2", &chart)?,
        smooth("f2", "(1 - z^2)*cos(beta)*sin(beta)*sin(2*pi*(th2 - th1))", &chart)?,
    ];
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let sys = IntegrableSystem::new("origami_s4", form, obs)?;
    fn x_f1(_: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, 1.0 / PI, 1.0 / PI]
    }
    let mut e = entry(
        "origami_s4",
        "folded 4-sphere with the pulled-back rotation system",
        sys,
        vec![(0, x_f1)],
        include_str!("../fixtures/gallery/origami_s4.txt"),
    );
    // Orbits are the Hopf circles labelled by (β, θ₂ − θ₁): 9 distinct ones.
    for beta in [0.3, 0.8, 1.2] {
        for th1 in [0.0, 0.25] {
            for th2 in [0.0, 0.25] {
                e.null_seeds.push(vec![0.0, beta, th1, th2]);
            }
        }
    }
    Ok(e)
}

/// Local model `x₁ dx₁∧dy₁ + dx₂∧dy₂` of a folded manifold whose fold
/// fibres over a circle, with `(x₁², (x₂² + y₂²)/2)`.
fn fibrating_boundary() -> Result<GalleryEntry> {
    let chart = Chart::new(
        "fibrating",
        vec![
            Coord::linear("x1", -1.0, 1.0),
            Coord::angle("y1"),
            Coord::linear("x2", -1.0, 1.0),
            Coord::linear("y2", -1.0, 1.0),
        ],
        Some(0),
    )?;
    let w = two_form(&chart, &[(0, 1, "x1"), (2, 3, "1")])?;
    let obs = vec![smooth("x1^2", "x1^2", &chart)?, smooth("osc", "(x2^2 + y2^2)/2", &chart)?];
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let sys = IntegrableSystem::new("fibrating_boundary", form, obs)?;
    fn x_1(_: &[f64]) -> Vec<f64> {
        vec![0.0, 2.0, 0.0, 0.0]
    }
    fn x_2(p: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, -p[3], p[2]]
    }
    Ok(entry(
        "fibrating_boundary",
        "local model of a fibrating fold",
        sys,
        vec![(0, x_1), (1, x_2)],
        include_str!("../fixtures/gallery/fibrating_boundary.txt"),
    ))
}

/// Folded sphere `h dh∧dθ` times `T*S¹`, system `(h², p)`.
fn product_surface() -> Result<GalleryEntry> {
    let s2 = Chart::new("s2", vec![Coord::linear("h", -1.0, 1.0), Coord::angle("th")], Some(0))?.with_sphere_pair(0, 1)?;
    let surface = FoldedSurface {
        chart: s2,
        area: ScalarField::constant(1.0),
        t: ScalarField::coordinate(0),
    };
    let cyl = Chart::new("cyl", vec![Coord::angle("q"), Coord::linear("p", -1.0, 1.0)], None)?;
    let w = TwoFormField::new(2).with(0, 1, ScalarField::constant(1.0));
    let m = IntegrableSystem::new(
        "cylinder",
        Arc::new(SingularForm::symplectic(cyl, w)?),
        vec![("p".to_string(), Observable::smooth(ScalarField::coordinate(1)))],
    )?;
    let sys = product_with_folded_surface(&surface, Some(&m), None)?;
    fn x_1(_: &[f64]) -> Vec<f64> {
        vec![0.0, 2.0, 0.0, 0.0]
    }
    fn x_2(_: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, -1.0, 0.0]
    }
    Ok(entry(
        "product_surface",
        "folded sphere times a cylinder",
        sys,
        vec![(0, x_1), (1, x_2)],
        include_str!("../fixtures/gallery/product_surface.txt"),
    ))
}

/// Spherical pendulum on the folded form `2π P_φ dP_φ∧dψ + dP_θ∧dθ`
/// (`φ = 2πψ`), `H = P_θ²/2 + P_φ²/(2 sin²θ) + cos θ`.
fn spherical_pendulum() -> Result<GalleryEntry> {
    let chart = Chart::new(
        "pendulum",
        vec![
            Coord::angle("psi"),
            Coord::linear("theta", 0.3, PI - 0.3),
            Coord::linear("Ptheta", -2.0, 2.0),
            Coord::linear("Pphi", -2.0, 2.0),
        ],
        Some(3),
    )?;
    let w = two_form(&chart, &[(3, 0, "2*pi*Pphi"), (2, 1, "1")])?;
    let obs = vec![
        smooth("H", "Ptheta^2/2 + Pphi^2/(2*sin(theta)^2) + cos(theta)", &chart)?,
        smooth("Pphi^2", "Pphi^2", &chart)?,
    ];
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let sys = IntegrableSystem::new("spherical_pendulum", form, obs)?;
    Ok(entry(
        "spherical_pendulum",
        "folded spherical pendulum",
        sys,
        vec![(0, pendulum_field), (1, pendulum_rotation)],
        include_str!("../fixtures/gallery/spherical_pendulum.txt"),
    ))
}

/// Closed-form `X_H` of the folded spherical pendulum.
pub fn pendulum_field(p: &[f64]) -> Vec<f64> {
    let (th, pth, pphi) = (p[1], p[2], p[3]);
    let s = th.sin();
    vec![1.0 / (2.0 * PI * s * s), pth, s + th.cos() * pphi * pphi / (s * s * s), 0.0]
}

fn pendulum_rotation(_: &[f64]) -> Vec<f64> {
    vec![1.0 / PI, 0.0, 0.0, 0.0]
}

/// `2π h dh∧dθ` on the sphere with `f = cos(2πθ) h²`, whose field vanishes
/// on the fold where `cos(2πθ) = 0`.
fn non_b_modelable() -> Result<GalleryEntry> {
    let chart = Chart::new("s2", vec![Coord::linear("h", -1.0, 1.0), Coord::angle("th")], Some(0))?.with_sphere_pair(0, 1)?;
    let w = two_form(&chart, &[(0, 1, "2*pi*h")])?;
    let obs = vec![smooth("f", "cos(2*pi*th)*h^2", &chart)?];
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let sys = IntegrableSystem::new("non_b_modelable", form, obs)?;
    Ok(entry(
        "non_b_modelable",
        "folded sphere with a field vanishing on the fold",
        sys,
        vec![(0, non_b_field)],
        include_str!("../fixtures/gallery/non_b_modelable.txt"),
    ))
}

/// Closed-form field of the non-b-modelable example.
pub fn non_b_field(p: &[f64]) -> Vec<f64> {
    let (h, th) = (p[0], p[1]);
    vec![h * (2.0 * PI * th).sin(), (2.0 * PI * th).cos() / PI]
}

/// Radko sphere: `(dh/h) ∧ 2π dθ`, modular function `log|h|`.
fn radko_sphere() -> Result<GalleryEntry> {
    let chart = Chart::new("s2", vec![Coord::linear("h", -1.0, 1.0), Coord::angle("th")], Some(0))?.with_sphere_pair(0, 1)?;
    let alpha = OneFormField::new(2).with(1, ScalarField::constant(2.0 * PI));
    let form = Arc::new(SingularForm::b_symplectic(chart, alpha, TwoFormField::new(2))?);
    let obs = vec![("log|h|".to_string(), Observable::bfun(1.0, ScalarField::constant(0.0)))];
    let sys = IntegrableSystem::new("radko_sphere", form, obs)?;
    fn x(_: &[f64]) -> Vec<f64> {
        vec![0.0, 1.0 / (2.0 * PI)]
    }
    Ok(entry(
        "radko_sphere",
        "b-symplectic sphere with the equator as critical set",
        sys,
        vec![(0, x)],
        include_str!("../fixtures/gallery/radko_sphere.txt"),
    ))
}

/// Collar of a fold that is the mapping torus of the sphere by an irrational
/// rotation: `sin(2πθ) dθ∧ds + dh∧dφ − ρ dh∧ds`, system `(cos 2πθ, h)`. The
/// null line `∂_s + ρ ∂_φ` closes only over the poles.
fn no_cotangent_model() -> Result<GalleryEntry> {
    let chart = Chart::new(
        "irrational_torus",
        vec![
            Coord::linear("h", -1.0, 1.0),
            Coord::angle("phi"),
            Coord::angle("s"),
            Coord::linear("th", -0.25, 0.25),
        ],
        Some(3),
    )?
    .with_sphere_pair(0, 1)?;
    let rho = golden_rotation();
    let w = TwoFormField::new(4)
        .with(3, 2, parse("sin(2*pi*th)", &chart)?)
        .with(0, 1, ScalarField::constant(1.0))
        .with(0, 2, ScalarField::constant(-rho));
    let obs = vec![smooth("cos(2pi th)", "cos(2*pi*th)", &chart)?, smooth("h", "h", &chart)?];
    let form = Arc::new(SingularForm::folded(chart, w)?);
    let sys = IntegrableSystem::new("no_cotangent_model", form, obs)?;
    fn x_c(_: &[f64]) -> Vec<f64> {
        let rho = golden_rotation();
        vec![0.0, -2.0 * PI * rho, -2.0 * PI, 0.0]
    }
    fn x_h(_: &[f64]) -> Vec<f64> {
        vec![0.0, 1.0, 0.0, 0.0]
    }
    let mut e = entry(
        "no_cotangent_model",
        "fold fibred by an irrational rotation of the sphere",
        sys,
        vec![(0, x_c), (1, x_h)],
        include_str!("../fixtures/gallery/no_cotangent_model.txt"),
    );
    let pole = 1.0 - 1e-6;
    for h in [-pole, -0.6, -0.2, 0.2, 0.6, pole] {
        for phi in [0.0, 0.25, 0.5, 0.75] {
            e.null_seeds.push(vec![h, phi, 0.0, 0.0]);
        }
    }
    Ok(e)
}

/// `(dt/t)∧ds + dh₁∧dθ₁ + dh₂∧dθ₂` with `(log|t|, h₁ + h₂, h₁h₂)`, which is
/// invariant under swapping the sphere factors; the critical set is the
/// mapping torus of that swap.
fn swap_monodromy() -> Result<GalleryEntry> {
    let chart = Chart::new(
        "swap_collar",
        vec![
            Coord::linear("h1", -1.0, 1.0),
            Coord::angle("th1"),
            Coord::linear("h2", -1.0, 1.0),
            Coord::angle("th2"),
            Coord::angle("s"),
            Coord::linear("t", -1.0, 1.0),
        ],
        Some(5),
    )?
    .with_sphere_pair(0, 1)?
    .with_sphere_pair(2, 3)?;
    let alpha = OneFormField::new(6).with(4, ScalarField::constant(1.0));
    let beta = two_form(&chart, &[(0, 1, "1"), (2, 3, "1")])?;
    let obs = vec![
        ("log|t|".to_string(), Observable::bfun(1.0, ScalarField::constant(0.0))),
        smooth("h1+h2", "h1 + h2", &chart)?,
        smooth("h1*h2", "h1*h2", &chart)?,
    ];
    let form = Arc::new(SingularForm::b_symplectic(chart, alpha, beta)?);
    let sys = IntegrableSystem::new("swap_monodromy", form, obs)?;

    let leaf = Chart::new(
        "s2xs2",
        vec![
            Coord::linear("h1", -1.0, 1.0),
            Coord::angle("th1"),
            Coord::linear("h2", -1.0, 1.0),
            Coord::angle("th2"),
        ],
        None,
    )?
    .with_sphere_pair(0, 1)?
    .with_sphere_pair(2, 3)?;
    let leaf_form = two_form(&leaf, &[(0, 1, "1"), (2, 3, "1")])?;
    let swap = PointMap::new(leaf, vec![Expr::Var(2), Expr::Var(3), Expr::Var(0), Expr::Var(1)])?;
    let mt = MappingTorus::new(leaf_form, swap, 1.0, Some(vec![vec![0, 1], vec![1, 0]]), Some(2))?;

    fn x_log(_: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]
    }
    fn x_sum(_: &[f64]) -> Vec<f64> {
        vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]
    }
    fn x_prod(p: &[f64]) -> Vec<f64> {
        vec![0.0, p[2], 0.0, p[0], 0.0, 0.0]
    }
    let mut e = entry(
        "swap_monodromy",
        "b-system over the mapping torus of the factor swap on S²×S²",
        sys,
        vec![(0, x_log), (1, x_sum), (2, x_prod)],
        include_str!("../fixtures/gallery/swap_monodromy.txt"),
    );
    e.mapping_torus = Some(mt);
    Ok(e)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub samples: usize,
    /// Largest `|X_solver − X_oracle| / (1 + |X_oracle|)` over components.
    pub max_error: f64,
    pub at: Option<Vec<f64>>,
    pub tol: f64,
    pub pass: bool,
}

/// Compare the solver's fields with the entry's oracles on a fixed sample.
pub fn check_oracles(entry: &GalleryEntry, seed: u64) -> Result<OracleReport> {
    let chart = entry.system.chart();
    let plan = SamplePlan::new(ORACLE_SAMPLES.0, ORACLE_SAMPLES.1, seed);
    let mut pts = plan.interior_points(chart);
    pts.extend(plan.z_points(chart));
    let mut worst = 0.0;
    let mut at = None;
    for p in &pts {
        for (i, oracle) in &entry.oracles {
            let x = entry.system.fields[*i].eval(p)?;
            for (a, b) in x.iter().zip(oracle(p)) {
                let e = (a - b).abs() / (1.0 + b.abs());
                if !(e <= worst) {
                    worst = e;
                    at = Some(p.clone());
                }
            }
        }
    }
    Ok(OracleReport {
        samples: pts.len(),
        max_error: worst,
        at,
        tol: ORACLE_TOL,
        pass: worst <= ORACLE_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassSummary {
    pub samples: usize,
    pub regular: usize,
    pub singular: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GalleryReport {
    pub id: String,
    pub validation: ValidationReport,
    /// One report per observable; empty unless the form is folded.
    pub admissibility: Vec<AdmissibilityReport>,
    pub commutation: CommutationReport,
    pub independence: IndependenceReport,
    pub classification: ClassSummary,
    pub oracle: Option<OracleReport>,
    pub null_line: Option<NullLineReport>,
    pub obstruction: Option<ObstructionReport>,
    pub outcome: String,
    pub matches_expected: bool,
}

impl GalleryReport {
    /// The report if its outcome equals `expected`, otherwise a regression
    /// error naming the first differing line.
    pub fn into_result(self, expected: &str) -> Result<GalleryReport> {
        if self.outcome == expected {
            return Ok(self);
        }
        let diff = self
            .outcome
            .lines()
            .zip(expected.lines())
            .find(|(a, b)| a != b)
            .map(|(a, b)| format!("got `{a}`, expected `{b}`"))
            .unwrap_or_else(|| "outcome and expected differ in length".into());
        Err(Error::Regression(format!("{}: {diff}", self.id)))
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Validation, admissibility, commutation, independence, point classes,
/// oracle agreement and the entry-specific checks, summarized as verdict
/// lines and compared with the entry's recorded outcome.
pub fn run_all_checks(entry: &GalleryEntry, plan: &SamplePlan) -> Result<GalleryReport> {
    let sys = &entry.system;
    let chart = sys.chart();
    let validation = validate_form(&sys.form, plan)?;
    let z_pts = plan.z_points(chart);
    let admissibility = if sys.form.is_folded() {
        sys.observables
            .iter()
            .map(|o| is_folded_function(o, &sys.form, &z_pts, ADMISSIBILITY_TOL))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let mut pts = plan.interior_points(chart);
    pts.extend(z_pts.iter().cloned());
    let commutation = check_commutation(sys, &pts, COMMUTATION_TOL);
    let independence = check_independence(sys, plan);

    let cplan = SamplePlan::new(CLASSIFY_SAMPLES.0, CLASSIFY_SAMPLES.1, plan.seed);
    let mut cpts = cplan.interior_points(chart);
    cpts.extend(cplan.z_points(chart));
    let mut classification = ClassSummary {
        samples: cpts.len(),
        regular: 0,
        singular: 0,
        failed: 0,
    };
    for p in &cpts {
        match classify_point(sys, p) {
            Ok(PointClass::Regular) => classification.regular += 1,
            Ok(PointClass::Singular) => classification.singular += 1,
            Err(_) => classification.failed += 1,
        }
    }

    let oracle = if entry.oracles.is_empty() {
        None
    } else {
        Some(check_oracles(entry, plan.seed)?)
    };
    let null_line = if entry.null_seeds.is_empty() {
        None
    } else {
        Some(null_line_closed_orbits(&sys.form, &entry.null_seeds, &NullLineOptions::default())?)
    };
    let obstruction = entry.mapping_torus.as_ref().map(obstruction_report);

    let mut out = String::new();
    let _ = writeln!(out, "entry: {}", entry.id);
    let _ = writeln!(out, "kind: {}", sys.form.kind_name());
    let _ = writeln!(out, "validate: {}", verdict(validation.pass));
    let _ = writeln!(
        out,
        "admissibility: {}",
        if admissibility.is_empty() {
            "n/a"
        } else {
            verdict(admissibility.iter().all(|a| a.pass))
        }
    );
    let _ = writeln!(out, "commutation: {}", verdict(commutation.pass && commutation.skipped == 0));
    let _ = writeln!(out, "independence: {}", verdict(independence.pass));
    let mostly_regular = classification.failed == 0 && classification.regular as f64 >= 0.95 * classification.samples as f64;
    let _ = writeln!(out, "classify: {}", if mostly_regular { "regular almost everywhere" } else { "singular on a large set" });
    let _ = writeln!(out, "oracle: {}", oracle.as_ref().map_or("n/a", |o| verdict(o.pass)));
    match &null_line {
        Some(r) => {
            let _ = writeln!(out, "null_line: closed_orbits={} all_closed={}", r.orbits.len(), r.all_closed);
        }
        None => {
            let _ = writeln!(out, "null_line: n/a");
        }
    }
    let _ = writeln!(out, "obstruction: {}", obstruction.as_ref().map_or("n/a".to_string(), |o| o.summary.clone()));

    Ok(GalleryReport {
        id: entry.id.to_string(),
        matches_expected: out == entry.expected,
        validation,
        admissibility,
        commutation,
        independence,
        classification,
        oracle,
        null_line,
        obstruction,
        outcome: out,
    })
}
