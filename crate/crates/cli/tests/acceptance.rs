//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Expected values come from closed forms written out here,
//! independently of the library's own oracles.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use singsym::actionangle::{
    normal_form_residual, null_line_closed_orbits, period_lattice, ActionAngleOptions, LatticeOptions, NullLineOptions, Section,
    TorusChart,
};
use singsym::constructions::{
    average_invariant_function, build_b_integrable_4d, desingularize, desingularize_system, exceptional_orbits,
    folded_cotangent_lift_unit, modular_period, obstruction_report, twisted_b_cotangent_lift, Build4dParams, Built4d, MappingTorus,
    PointMap, Verdict,
};
use singsym::gallery::{instantiate, GALLERY_IDS};
use singsym::geometry::{validate_form, Chart, Coord, ScalarField, SingularForm, TwoFormField};
use singsym::hamiltonian::{hamiltonian_vf, is_folded_function, Observable};
use singsym::sampling::SamplePlan;
use singsym::systems::{check_commutation, check_independence, classify_point, IntegrableSystem, PointClass};
use singsym::Error;

type Criterion = Result<String, String>;
type Runner<'a> = Box<dyn Fn() -> Criterion + 'a>;

fn ok_if(pass: bool, detail: String) -> Criterion {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (1.0 + y.abs()))
        .fold(0.0, f64::max)
}

fn points(chart: &Chart, interior: usize, on_z: usize, seed: u64) -> Vec<Vec<f64>> {
    let plan = SamplePlan::new(interior, on_z, seed);
    let mut pts = plan.interior_points(chart);
    pts.extend(plan.z_points(chart));
    pts
}

fn pendulum_solver_matches_closed_form() -> Criterion {
    let e = instantiate("spherical_pendulum").map_err(err)?;
    let pts = points(e.system.chart(), 80, 20, 101);
    let mut worst: f64 = 0.0;
    for p in &pts {
        let (th, pth, pphi) = (p[1], p[2], p[3]);
        let s = th.sin();
        let x_h = [1.0 / (2.0 * PI * s * s), pth, s + th.cos() * pphi * pphi / s.powi(3), 0.0];
        let x_rot = [1.0 / PI, 0.0, 0.0, 0.0];
        let x = e.system.vectors(p).map_err(err)?;
        worst = worst.max(rel(&x[0], &x_h)).max(rel(&x[1], &x_rot));
    }
    ok_if(worst <= 1e-8, format!("{} points ({} on Z), max relative error {worst:.2e} (tol 1e-8)", pts.len(), 20))
}

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

/// Returns (kernel test accepts, solver accepts).
fn admissibility_tests(form: &Arc<SingularForm>, src: &str, z_pts: &[Vec<f64>]) -> Result<(bool, bool), String> {
    let g = ScalarField::parse(src, &form.chart.names()).map_err(err)?;
    let f = Observable::smooth(g);
    let kernel = is_folded_function(&f, form, z_pts, 1e-6).map_err(err)?.pass;
    let x = hamiltonian_vf(&f, form).map_err(err)?;
    let mut solve = true;
    for p in z_pts {
        match x.eval(p) {
            Ok(_) => {}
            Err(Error::Admissibility(_)) => solve = false,
            Err(e) => return Err(err(e)),
        }
    }
    Ok((kernel, solve))
}

fn admissibility_dichotomy() -> Criterion {
    let form = martinet();
    let z_pts = SamplePlan::new(0, 8, 202).z_points(&form.chart);
    for (src, want) in [("t", false), ("t^2/2", true), ("x2", true)] {
        let (k, s) = admissibility_tests(&form, src, &z_pts)?;
        if k != want || s != want {
            return Err(format!("f = {src}: kernel test {k}, solver {s}, expected {want}"));
        }
    }
    // f = Σ c·t^a q^b x2^c y2^d is admissible iff no monomial with a = 1, or
    // with a = 0 and b > 0, survives: that is exactly f = t²f₁ + f₂(x2, y2).
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let (mut admissible, mut disagreements) = (0, 0);
    let trials = 1000;
    for _ in 0..trials {
        let keep_bad = rng.gen_bool(0.5);
        let mut terms = Vec::new();
        let mut bad = false;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..2 {
                    for d in 0..2 {
                        let is_bad = a == 1 || (a == 0 && b > 0);
                        if (is_bad && !keep_bad) || !rng.gen_bool(0.3) {
                            continue;
                        }
                        let k: i32 = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
                        bad |= is_bad;
                        terms.push(format!("({k})*t^{a}*q^{b}*x2^{c}*y2^{d}"));
                    }
                }
            }
        }
        let src = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
        let (k, s) = admissibility_tests(&form, &src, &z_pts)?;
        admissible += usize::from(!bad);
        if k != !bad || s != !bad {
            disagreements += 1;
        }
    }
    ok_if(
        disagreements == 0,
        format!("t rejected, t²/2 and x2 accepted; {trials} random polynomials ({admissible} admissible), {disagreements} disagreements"),
    )
}

fn commutation_everywhere() -> Criterion {
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for id in GALLERY_IDS {
        let e = instantiate(id).map_err(err)?;
        let pts = points(e.system.chart(), 8000, 2000, 303);
        let r = check_commutation(&e.system, &pts, 1e-8);
        if !r.pass || r.skipped > 0 {
            lines.push(format!("{id}: max {:.2e}, skipped {}", r.max_abs, r.skipped));
        }
        worst = worst.max(r.max_abs);
    }
    ok_if(
        lines.is_empty(),
        format!("{} entries × 10⁴ points, max |{{f_i, f_j}}| {worst:.2e} (tol 1e-8){}", GALLERY_IDS.len(), lines.iter().map(|l| format!("; {l}")).collect::<String>()),
    )
}

fn cotangent_torus() -> IntegrableSystem {
    let c = Chart::new(
        "t*t2",
        vec![
            Coord::angle("th1"),
            Coord::angle("th2"),
            Coord::linear("p1", -1.0, 1.0),
            Coord::linear("p2", -1.0, 1.0),
        ],
        None,
    )
    .unwrap();
    let w = TwoFormField::new(4)
        .with(0, 2, ScalarField::constant(1.0))
        .with(1, 3, ScalarField::constant(1.0));
    let form = Arc::new(SingularForm::symplectic(c, w).unwrap());
    let obs = vec![
        ("p1".to_string(), Observable::smooth(ScalarField::coordinate(2))),
        ("p2".to_string(), Observable::smooth(ScalarField::coordinate(3))),
    ];
    IntegrableSystem::new("t*t2", form, obs).unwrap()
}

/// Distance of a 2×2 basis from generating `Z²`: integer entries and
/// `|det| = 1`.
fn unit_lattice_error(basis: &[Vec<f64>]) -> f64 {
    let frac = basis.iter().flatten().map(|v| (v - v.round()).abs()).fold(0.0, f64::max);
    let det = basis[0][0] * basis[1][1] - basis[0][1] * basis[1][0];
    frac.max((det.abs() - 1.0).abs())
}

fn period_lattices() -> Criterion {
    let opts = LatticeOptions::default();
    let p = [0.3, 0.6, 0.5, 0.1];
    let std = period_lattice(&cotangent_torus(), &p, &opts).map_err(err)?;
    let e_std = unit_lattice_error(&std.basis);
    let folded = period_lattice(&folded_cotangent_lift_unit(2).map_err(err)?, &p, &opts).map_err(err)?;
    let e_folded = unit_lattice_error(&folded.basis);
    let mut e_c: f64 = 0.0;
    for c in [0.5, 1.0, 2.0] {
        let sys = twisted_b_cotangent_lift(2, c).map_err(err)?;
        for q in [[0.1, 0.2, 0.3, 0.4], [0.4, 0.7, 0.0, -0.2]] {
            let k = modular_period(&sys.form, &q, &opts).map_err(err)?;
            e_c = e_c.max((k - c).abs());
        }
    }
    ok_if(
        e_std <= 1e-10 && e_folded <= 1e-6 && e_c <= 1e-6,
        format!("T*T² {e_std:.1e} (tol 1e-10), folded lift {e_folded:.1e} (tol 1e-6), modular period |k − c| {e_c:.1e} for c ∈ {{0.5, 1, 2}} (tol 1e-6)"),
    )
}

fn torus_chart(sys: IntegrableSystem) -> Result<TorusChart, String> {
    let region: Vec<Vec<f64>> = (0..5).map(|k| vec![0.0, 0.0, 0.4 + 0.1 * k as f64, 0.1]).collect();
    let section = Section {
        fixed: vec![(0, 0.0), (1, 0.0)],
        free: vec![2, 3],
    };
    let opts = ActionAngleOptions {
        lattice: LatticeOptions {
            t_max: 3.0,
            ..LatticeOptions::default()
        },
        ..ActionAngleOptions::default()
    };
    TorusChart::new(sys, section, &[0.0, 0.0, 0.5, 0.0], &region, opts).map_err(err)
}

fn normal_form() -> Criterion {
    let probes = vec![vec![0.3, 0.6, 0.5, 0.1], vec![0.7, 0.2, 0.7, -0.2], vec![0.1, 0.9, 0.45, 0.3]];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, sys) in [("folded lift", folded_cotangent_lift_unit(2).map_err(err)?), ("T*T²", cotangent_torus())] {
        let tc = torus_chart(sys)?;
        let good = normal_form_residual(&tc, &probes, 1e-4).map_err(err)?.max_residual;
        let bad = normal_form_residual(&tc.with_action_scale(0, 1.1), &probes, 1e-4).map_err(err)?.max_residual;
        pass &= good <= 1e-5 && bad > 0.05;
        parts.push(format!("{name}: residual {good:.1e}, corrupted σ₁ {bad:.3}"));
    }
    ok_if(pass, format!("{} (tol 1e-5 / > 0.05)", parts.join("; ")))
}

fn desingularization() -> Criterion {
    let sys = twisted_b_cotangent_lift(2, 1.0).map_err(err)?;
    let eps = 0.5;
    let folded = desingularize(&sys.form, eps).map_err(err)?;
    let mut off_collar: f64 = 0.0;
    let mut n = 0;
    for p in SamplePlan::new(2000, 0, 404).interior_points(sys.chart()) {
        if p[2].abs() > eps {
            let d = folded.matrix(&p) - sys.form.matrix(&p);
            off_collar = off_collar.max(d.amax());
            n += 1;
        }
    }
    let plan = SamplePlan::new(2000, 500, 7);
    let valid = validate_form(&folded, &plan).map_err(err)?.pass;
    let dsys = desingularize_system(&sys, eps).map_err(err)?;
    let pts = points(dsys.chart(), 2000, 500, 7);
    let comm = check_commutation(&dsys, &pts, 1e-8);
    let ind = check_independence(&dsys, &plan);
    ok_if(
        off_collar <= 1e-12 && valid && comm.pass && ind.pass,
        format!(
            "off-collar difference {off_collar:.1e} on {n} points (tol 1e-12), validator {valid}, commutation {:.1e}, independence {:.3}/{:.3}",
            comm.max_abs, ind.interior_fraction, ind.z_fraction
        ),
    )
}

fn sphere() -> Chart {
    Chart::new("s2", vec![Coord::linear("h", -1.0, 1.0), Coord::angle("phi")], None)
        .unwrap()
        .with_sphere_pair(0, 1)
        .unwrap()
}

fn averaging() -> Criterion {
    let chart = sphere();
    let f = ScalarField::parse("h + cos(2*pi*phi)", &chart.names()).map_err(err)?;
    let plan = SamplePlan::new(500, 0, 505);
    let avg = average_invariant_function(&f, &PointMap::rotation(chart.clone(), 1, 0.5), 2, &plan).map_err(err)?;
    let oracle = plan
        .interior_points(&chart)
        .iter()
        .map(|p| (avg.function.value(p) - 2.0 * p[0]).abs())
        .fold(0.0, f64::max);
    let r = &avg.report;
    ok_if(
        r.invariance_residual <= 1e-12 && r.non_constancy > 0.1 && oracle <= 1e-12,
        format!(
            "invariance {:.1e} (tol 1e-12), ‖dF‖∞ {:.3} (> 0.1), |F − 2h| {oracle:.1e}",
            r.invariance_residual, r.non_constancy
        ),
    )
}

fn half_turn() -> Result<MappingTorus, String> {
    let w = TwoFormField::new(2).with(0, 1, ScalarField::constant(1.0));
    MappingTorus::new(w, PointMap::rotation(sphere(), 1, 0.5), 1.0, None, Some(2)).map_err(err)
}

fn existence(built: &Built4d) -> Criterion {
    let r = built.check(&SamplePlan::new(2000, 500, 7), 1e-8);
    ok_if(
        r.commutation.pass && r.commutation.skipped == 0 && r.independence.interior_fraction >= 0.95 && r.independence.z_fraction >= 0.95,
        format!(
            "commutation {:.1e} on {} points (tol 1e-8), independence {:.3} on M, {:.3} on Z (≥ 0.95)",
            r.commutation.max_abs, r.commutation.samples, r.independence.interior_fraction, r.independence.z_fraction
        ),
    )
}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    (0..a.len())
        .map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn obstruction() -> Criterion {
    let e = instantiate("swap_monodromy").map_err(err)?;
    let mt = e.mapping_torus.ok_or("swap_monodromy has no mapping torus")?;
    let swap = obstruction_report(&mt).verdict;
    let id = obstruction_report(&MappingTorus::sphere_rotation(0.0, Some(1)).map_err(err)?).verdict;
    let m = mt.homology_action.clone().ok_or("no homology action")?;
    // Unimodular P with inverses written out.
    let conj = [
        (vec![vec![1, 1], vec![0, 1]], vec![vec![1, -1], vec![0, 1]]),
        (vec![vec![2, 1], vec![1, 1]], vec![vec![1, -1], vec![-1, 2]]),
        (vec![vec![0, 1], vec![-1, 0]], vec![vec![0, -1], vec![1, 0]]),
        (vec![vec![3, 2], vec![4, 3]], vec![vec![3, -2], vec![-4, 3]]),
    ];
    let mut invariant = true;
    for (p, q) in &conj {
        let pmq = mat_mul(&mat_mul(p, &m), q);
        let c = MappingTorus {
            homology_action: Some(pmq),
            ..mt.clone()
        };
        invariant &= obstruction_report(&c).verdict == swap;
        let ident = MappingTorus {
            homology_action: Some(mat_mul(&mat_mul(p, &[vec![1, 0], vec![0, 1]]), q)),
            ..MappingTorus::sphere_rotation(0.0, Some(1)).map_err(err)?
        };
        invariant &= obstruction_report(&ident).verdict == id;
    }
    ok_if(
        swap == Verdict::Nontrivial && id == Verdict::Trivial && invariant,
        format!("swap → {swap}, identity → {id}, invariant under {} conjugations: {invariant}", conj.len()),
    )
}

fn null_lines() -> Criterion {
    let opts = NullLineOptions::default();
    let irr = instantiate("no_cotangent_model").map_err(err)?;
    let r_irr = null_line_closed_orbits(&irr.system.form, &irr.null_seeds, &opts).map_err(err)?;
    let polar = r_irr.orbits.iter().all(|o| (o.seed[0].abs() - 1.0).abs() < 1e-3);
    let ori = instantiate("origami_s4").map_err(err)?;
    let r_ori = null_line_closed_orbits(&ori.system.form, &ori.null_seeds, &opts).map_err(err)?;
    let lift = folded_cotangent_lift_unit(2).map_err(err)?;
    let seeds: Vec<Vec<f64>> = [0.0, 0.3, 0.7]
        .iter()
        .flat_map(|&th2| [-0.5, 0.2, 0.8].map(|p2| vec![0.0, th2, 0.0, p2]))
        .collect();
    let r_lift = null_line_closed_orbits(&lift.form, &seeds, &opts).map_err(err)?;
    ok_if(
        r_irr.orbits.len() == 2 && polar && r_ori.all_closed && r_lift.all_closed,
        format!(
            "irrational rotation: {} closed orbits (polar {polar}); origami all closed {} ({} orbits); folded lift all closed {}",
            r_irr.orbits.len(),
            r_ori.all_closed,
            r_ori.orbits.len(),
            r_lift.all_closed
        ),
    )
}

fn exceptional(built: &Built4d, mt: &MappingTorus) -> Criterion {
    let leaf = exceptional_orbits(mt, 8).map_err(err)?;
    let near_poles = |pts: &[Vec<f64>]| pts.iter().all(|p| (p[0].abs() - 1.0).abs() <= 1e-6);
    let leaf_pts: Vec<Vec<f64>> = leaf.iter().map(|e| e.point.clone()).collect();
    let built_pts: Vec<Vec<f64>> = built.exceptional.iter().map(|e| e.point.clone()).collect();
    let opposite = |pts: &[Vec<f64>]| pts.len() == 2 && pts[0][0] * pts[1][0] < 0.0;
    let mut singular = true;
    for p in &built_pts {
        singular &= p[3] == 0.0 && classify_point(&built.system, p).map_err(err)? == PointClass::Singular;
    }
    ok_if(
        opposite(&leaf_pts) && near_poles(&leaf_pts) && opposite(&built_pts) && near_poles(&built_pts) && singular,
        format!(
            "{} exceptional points at h = {:?}, all singular on Z: {singular}",
            leaf_pts.len(),
            leaf_pts.iter().map(|p| p[0]).collect::<Vec<_>>()
        ),
    )
}

fn determinism() -> Criterion {
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let bin = env!("CARGO_BIN_EXE_singsym");
    let runs: &[(&str, &str, &str)] = &[
        ("validate", "radko_sphere.toml", "json"),
        ("validate", "corrupted_form.toml", "csv"),
        ("check", "martinet_inadmissible.toml", "json"),
        ("check", "radko_sphere.toml", "csv"),
        ("actionangle", "folded_lift_actionangle.toml", "json"),
        ("actionangle", "twisted_lift_actionangle.toml", "csv"),
        ("flow", "pendulum.toml", "csv"),
        ("flow", "pendulum.toml", "json"),
        ("construct", "desingularize_twisted_lift.toml", "json"),
        ("construct", "obstruction_swap.toml", "json"),
        ("construct", "delzant_square.toml", "csv"),
    ];
    let mut differing = Vec::new();
    for (cmd, cfg, fmt) in runs {
        let run = || {
            Command::new(bin)
                .args([cmd, "--config", cfg, "--seed", "11", "--format", fmt])
                .current_dir(&configs)
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (run()?, run()?);
        if a.stdout != b.stdout || a.status.code() != b.status.code() || a.stdout.is_empty() {
            differing.push(format!("{cmd} {cfg}"));
        }
    }
    ok_if(
        differing.is_empty(),
        format!("{} command runs repeated, byte-identical: {}", runs.len(), if differing.is_empty() { "all".into() } else { differing.join(", ") }),
    )
}

fn main() {
    let start = Instant::now();
    let mt = half_turn();
    let built = mt
        .as_ref()
        .map_err(|e| e.clone())
        .and_then(|m| build_b_integrable_4d(m, &Build4dParams::default()).map_err(err));
    let needs_build = |f: fn(&Built4d) -> Criterion| match &built {
        Ok(b) => f(b),
        Err(e) => Err(e.clone()),
    };
    let criteria: Vec<(&str, Runner)> = vec![
        ("solver matches closed-form pendulum field", Box::new(pendulum_solver_matches_closed_form)),
        ("admissibility dichotomy on the Martinet chart", Box::new(admissibility_dichotomy)),
        ("commutation of every gallery system", Box::new(commutation_everywhere)),
        ("period lattices and modular period", Box::new(period_lattices)),
        ("action-angle normal form", Box::new(normal_form)),
        ("desingularization of the twisted lift", Box::new(desingularization)),
        ("averaging over the half-turn", Box::new(averaging)),
        ("4-dimensional existence construction", Box::new(|| needs_build(existence))),
        ("obstruction verdicts", Box::new(obstruction)),
        ("closed null-line orbits", Box::new(null_lines)),
        (
            "exceptional orbits of the half-turn",
            Box::new(|| match (&built, &mt) {
                (Ok(b), Ok(m)) => exceptional(b, m),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            }),
        ),
        ("byte-reproducible CLI output", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{:.1}s]", k + 1, t.elapsed().as_secs_f64());
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
