//! TOML inputs: explicit systems, gallery references and construction
//! recipes, plus export of expression-backed systems back to the same format.
//!
//! ```toml
//! [chart]
//! name = "martinet"
//! z = "t"
//! coords = [
//!     { name = "t", lo = -1.0, hi = 1.0 },
//!     { name = "q", kind = "angle" },
//! ]
//!
//! [form]
//! kind = "folded"
//! entries = { "t,q" = "t" }
//!
//! [[observables]]
//! name = "f"
//! expr = "t^2/2"
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructions::{
    average_invariant_function, build_b_integrable_4d, delzant_check, desingularize_system, folded_cotangent_lift,
    folded_cotangent_lift_unit, obstruction_report, parse_template, product_with_folded_surface, twisted_b_cotangent_lift,
    Build4dParams, FoldedSurface, MappingTorus, PointMap,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::gallery::{instantiate, GalleryEntry};
use crate::geometry::{Chart, Coord, CoordKind, FormKind, OneFormField, ScalarField, SingularForm, TwoFormField};
use crate::hamiltonian::Observable;
use crate::systems::IntegrableSystem;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actionangle: Option<ActionAngleSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub name: String,
    pub coords: Vec<CoordSpec>,
    /// Name of the defining coordinate of `Z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    /// `[height, azimuth]` pairs forming sphere charts.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sphere_pairs: Vec<[String; 2]>,
}

fn linear() -> CoordKind {
    CoordKind::Linear
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordSpec {
    pub name: String,
    #[serde(default = "linear")]
    pub kind: CoordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKindSpec {
    Symplectic,
    Folded,
    BSymplectic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub kind: FormKindSpec,
    /// `"a,b" = expr` for `expr da∧db`; the smooth part `β` of a b-form.
    #[serde(default)]
    pub entries: BTreeMap<String, String>,
    /// `α` of a b-form, keyed by coordinate name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alpha: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub name: String,
    pub expr: String,
    /// Coefficient of `log|t|` for b-functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub start: Vec<f64>,
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<usize>,
    /// Observable whose field is followed (default: the first).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionAngleSpec {
    /// Points at which lattices, actions and angles are reported.
    #[serde(default)]
    pub probes: Vec<Vec<f64>>,
    /// Base point of the primitive; enables actions and angles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    /// Coordinates held fixed on the section, with their values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub section: BTreeMap<String, f64>,
    /// Coordinates the section is parametrized by.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub free: Vec<String>,
    /// Uniformization path; the first point is the seed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub region: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub chart: ChartSpec,
    pub area: String,
    pub t: String,
}

fn one() -> f64 {
    1.0
}

/// A mapping torus: a gallery entry's, a rotation of the round sphere, or an
/// explicit leaf with a monodromy map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gallery: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<String>>,
    #[serde(default = "one")]
    pub period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homology: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstructionSpec {
    Gallery {
        id: String,
    },
    System {
        chart: ChartSpec,
        form: FormSpec,
        observables: Vec<ObservableSpec>,
    },
    TwistedLift {
        n: usize,
        c: f64,
    },
    FoldedLift {
        n: usize,
        #[serde(default)]
        unit: bool,
    },
    Desingularize {
        eps: f64,
        source: Box<ConstructionSpec>,
    },
    Product {
        surface: SurfaceSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factor: Option<Box<ConstructionSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<Vec<f64>>,
    },
    Average {
        chart: ChartSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        form: Option<FormSpec>,
        function: String,
        map: Vec<String>,
        order: usize,
    },
    Build4d {
        torus: TorusSpec,
        #[serde(default)]
        params: Build4dParams,
        /// Emit the folded variant with this collar width instead.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        folded_collar: Option<f64>,
    },
    Obstruction {
        torus: TorusSpec,
    },
    Delzant {
        template: String,
    },
}

/// Result of a construction recipe.
#[derive(Clone, Debug)]
pub struct Constructed {
    pub system: Option<IntegrableSystem>,
    /// Construction-specific report.
    pub details: serde_json::Value,
    pub pass: bool,
}

/// What a configuration resolves to.
#[derive(Clone, Debug)]
pub enum Input {
    Gallery(Box<GalleryEntry>),
    System(IntegrableSystem),
    /// A form without observables.
    Form(Arc<SingularForm>),
    Constructed(Constructed),
}

impl Input {
    pub fn system(&self) -> Option<&IntegrableSystem> {
        match self {
            Input::Gallery(e) => Some(&e.system),
            Input::System(s) => Some(s),
            Input::Form(_) => None,
            Input::Constructed(c) => c.system.as_ref(),
        }
    }

    pub fn form(&self) -> Option<Arc<SingularForm>> {
        match self {
            Input::Form(f) => Some(f.clone()),
            _ => self.system().map(|s| s.form.clone()),
        }
    }
}

impl ConfigFile {
    pub fn parse(src: &str) -> Result<ConfigFile> {
        toml::from_str(src).map_err(|e| Error::Config(format!("invalid config: {}", e.message())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Resolve the declared input; exactly one of `gallery`, `[chart]` with
    /// `[form]`, or `[construction]` must be present.
    pub fn input(&self) -> Result<Input> {
        let declared = [self.gallery.is_some(), self.chart.is_some() || self.form.is_some(), self.construction.is_some()];
        if declared.iter().filter(|d| **d).count() != 1 {
            return Err(Error::Config(
                "config must declare exactly one of `gallery`, `[chart]`+`[form]` or `[construction]`".into(),
            ));
        }
        if let Some(id) = &self.gallery {
            return Ok(Input::Gallery(Box::new(instantiate(id)?)));
        }
        if let Some(c) = &self.construction {
            return Ok(Input::Constructed(construct(c)?));
        }
        let chart = self.chart.as_ref().ok_or_else(|| Error::Config("`[form]` needs a `[chart]`".into()))?;
        let form = self.form.as_ref().ok_or_else(|| Error::Config("`[chart]` needs a `[form]`".into()))?;
        if self.observables.is_empty() {
            return Ok(Input::Form(Arc::new(build_form(build_chart(chart)?, form)?)));
        }
        Ok(Input::System(build_system(chart, form, &self.observables)?))
    }

    pub fn run(&self) -> RunSpec {
        self.run.clone().unwrap_or_default()
    }
}

fn lookup(chart: &Chart, name: &str) -> Result<usize> {
    chart
        .index(name.trim())
        .ok_or_else(|| Error::Config(format!("unknown coordinate `{}` in chart `{}`", name.trim(), chart.name)))
}

pub fn build_chart(spec: &ChartSpec) -> Result<Chart> {
    let coords = spec
        .coords
        .iter()
        .map(|c| match c.kind {
            CoordKind::Angle => {
                if c.lo.is_some() || c.hi.is_some() {
                    return Err(Error::Config(format!("angle `{}` has fixed period 1 and takes no bounds", c.name)));
                }
                Ok(Coord::angle(&c.name))
            }
            CoordKind::Linear => match (c.lo, c.hi) {
                (Some(lo), Some(hi)) => Ok(Coord::linear(&c.name, lo, hi)),
                _ => Err(Error::Config(format!("linear coordinate `{}` needs `lo` and `hi`", c.name))),
            },
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<&str> = spec.coords.iter().map(|c| c.name.as_str()).collect();
    let z = match &spec.z {
        Some(n) => Some(
            names
                .iter()
                .position(|m| m == n)
                .ok_or_else(|| Error::Config(format!("`z = \"{n}\"` is not a coordinate of `{}`", spec.name)))?,
        ),
        None => None,
    };
    let mut chart = Chart::new(&spec.name, coords, z)?;
    for [h, phi] in &spec.sphere_pairs {
        let (h, phi) = (lookup(&chart, h)?, lookup(&chart, phi)?);
        chart = chart.with_sphere_pair(h, phi)?;
    }
    Ok(chart)
}

fn parse_pair(chart: &Chart, key: &str) -> Result<(usize, usize)> {
    let (a, b) = key
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("form entry key `{key}` must read `a,b`")))?;
    let (i, j) = (lookup(chart, a)?, lookup(chart, b)?);
    if i == j {
        return Err(Error::Config(format!("form entry `{key}` pairs a coordinate with itself")));
    }
    Ok((i, j))
}

fn field(chart: &Chart, src: &str) -> Result<ScalarField> {
    ScalarField::parse(src, &chart.names())
}

fn two_form(chart: &Chart, entries: &BTreeMap<String, String>) -> Result<TwoFormField> {
    entries.iter().try_fold(TwoFormField::new(chart.dim()), |w, (k, v)| {
        let (i, j) = parse_pair(chart, k)?;
        Ok(w.with(i, j, field(chart, v)?))
    })
}

pub fn build_form(chart: Chart, spec: &FormSpec) -> Result<SingularForm> {
    if spec.kind != FormKindSpec::BSymplectic && !spec.alpha.is_empty() {
        return Err(Error::Config("`alpha` is only meaningful for b-symplectic forms".into()));
    }
    let w = two_form(&chart, &spec.entries)?;
    match spec.kind {
        FormKindSpec::Symplectic => SingularForm::symplectic(chart, w),
        FormKindSpec::Folded => SingularForm::folded(chart, w),
        FormKindSpec::BSymplectic => {
            let alpha = spec.alpha.iter().try_fold(OneFormField::new(chart.dim()), |a, (k, v)| {
                Ok::<_, Error>(a.with(lookup(&chart, k)?, field(&chart, v)?))
            })?;
            SingularForm::b_symplectic(chart, alpha, w)
        }
    }
}

pub fn build_system(chart: &ChartSpec, form: &FormSpec, observables: &[ObservableSpec]) -> Result<IntegrableSystem> {
    let chart = build_chart(chart)?;
    let name = chart.name.clone();
    let form = Arc::new(build_form(chart, form)?);
    let obs = observables
        .iter()
        .map(|o| {
            let g = field(&form.chart, &o.expr)?;
            Ok((
                o.name.clone(),
                match o.c {
                    Some(c) => Observable::bfun(c, g),
                    None => Observable::smooth(g),
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    IntegrableSystem::new(&name, form, obs)
}

fn render(f: &ScalarField, names: &[String], what: &str) -> Result<String> {
    f.expr()
        .map(|e| e.render(names))
        .ok_or_else(|| Error::Unsupported(format!("{what} is not expression-backed and cannot be exported")))
}

fn export_chart(chart: &Chart) -> ChartSpec {
    let names = chart.names();
    ChartSpec {
        name: chart.name.clone(),
        coords: chart
            .coords
            .iter()
            .map(|c| CoordSpec {
                name: c.name.clone(),
                kind: c.kind,
                lo: (!c.is_angle()).then_some(c.lo),
                hi: (!c.is_angle()).then_some(c.hi),
            })
            .collect(),
        z: chart.z_coord.map(|z| names[z].clone()),
        sphere_pairs: chart
            .sphere_pairs
            .iter()
            .map(|&(h, p)| [names[h].clone(), names[p].clone()])
            .collect(),
    }
}

fn export_two_form(w: &TwoFormField, names: &[String]) -> Result<BTreeMap<String, String>> {
    let mut merged: BTreeMap<(usize, usize), Expr> = BTreeMap::new();
    for (i, j, f) in &w.entries {
        let e = f
            .expr()
            .cloned()
            .ok_or_else(|| Error::Unsupported("form entry is not expression-backed and cannot be exported".into()))?;
        let slot = merged.entry((*i, *j)).or_insert(Expr::Num(0.0));
        *slot = if matches!(slot, Expr::Num(v) if *v == 0.0) { e } else { slot.clone() + e };
    }
    Ok(merged
        .into_iter()
        .map(|((i, j), e)| (format!("{},{}", names[i], names[j]), e.render(names)))
        .collect())
}

fn export_form(form: &SingularForm) -> Result<FormSpec> {
    let names = form.chart.names();
    Ok(match &form.kind {
        FormKind::Symplectic(w) => FormSpec {
            kind: FormKindSpec::Symplectic,
            entries: export_two_form(w, &names)?,
            alpha: BTreeMap::new(),
        },
        FormKind::Folded(w) => FormSpec {
            kind: FormKindSpec::Folded,
            entries: export_two_form(w, &names)?,
            alpha: BTreeMap::new(),
        },
        FormKind::BSymplectic { alpha, beta } => {
            let mut a = BTreeMap::new();
            for (i, f) in &alpha.entries {
                if a.insert(names[*i].clone(), render(f, &names, "α")?).is_some() {
                    return Err(Error::Unsupported(format!("α has two entries for `{}`", names[*i])));
                }
            }
            FormSpec {
                kind: FormKindSpec::BSymplectic,
                entries: export_two_form(beta, &names)?,
                alpha: a,
            }
        }
    })
}

/// Write an expression-backed system in the config format.
pub fn export_system(sys: &IntegrableSystem) -> Result<ConfigFile> {
    let names = sys.chart().names();
    let observables = sys
        .names
        .iter()
        .zip(&sys.observables)
        .map(|(n, o)| {
            let (expr, c) = match o {
                Observable::Smooth(f) => (render(f, &names, n)?, None),
                Observable::BFun { c, g } => (render(g, &names, n)?, Some(*c)),
            };
            Ok(ObservableSpec { name: n.clone(), expr, c })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfigFile {
        chart: Some(export_chart(sys.chart())),
        form: Some(export_form(&sys.form)?),
        observables,
        ..ConfigFile::default()
    })
}

fn resolve_torus(spec: &TorusSpec) -> Result<MappingTorus> {
    let explicit = spec.chart.is_some() || spec.form.is_some() || spec.map.is_some();
    match (&spec.gallery, spec.rotation, explicit) {
        (Some(id), None, false) => instantiate(id)?
            .mapping_torus
            .ok_or_else(|| Error::Config(format!("gallery entry `{id}` has no mapping torus"))),
        (None, Some(a), false) => MappingTorus::sphere_rotation(a, spec.order),
        (None, None, true) => {
            let (Some(chart), Some(form), Some(map)) = (&spec.chart, &spec.form, &spec.map) else {
                return Err(Error::Config("explicit mapping tori need `chart`, `form` and `map`".into()));
            };
            let chart = build_chart(chart)?;
            let w = two_form(&chart, form)?;
            let names = chart.names();
            let map = map.iter().map(|s| Ok(Expr::parse(s, &names)?)).collect::<Result<Vec<_>>>()?;
            MappingTorus::new(w, PointMap::new(chart, map)?, spec.period, spec.homology.clone(), spec.order)
        }
        _ => Err(Error::Config(
            "mapping torus needs exactly one of `gallery`, `rotation` or `chart`+`form`+`map`".into(),
        )),
    }
}

fn system_of(spec: &ConstructionSpec) -> Result<IntegrableSystem> {
    construct(spec)?
        .system
        .ok_or_else(|| Error::Config("this construction does not produce a system".into()))
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn system_only(system: IntegrableSystem) -> Constructed {
    Constructed {
        details: serde_json::json!({ "system": system.name, "n": system.n() }),
        system: Some(system),
        pass: true,
    }
}

/// Run a construction recipe.
pub fn construct(spec: &ConstructionSpec) -> Result<Constructed> {
    match spec {
        ConstructionSpec::Gallery { id } => Ok(system_only(instantiate(id)?.system)),
        ConstructionSpec::System {
            chart,
            form,
            observables,
        } => Ok(system_only(build_system(chart, form, observables)?)),
        ConstructionSpec::TwistedLift { n, c } => Ok(system_only(twisted_b_cotangent_lift(*n, *c)?)),
        ConstructionSpec::FoldedLift { n, unit } => Ok(system_only(if *unit {
            folded_cotangent_lift_unit(*n)?
        } else {
            folded_cotangent_lift(*n)?
        })),
        ConstructionSpec::Desingularize { eps, source } => Ok(system_only(desingularize_system(&system_of(source)?, *eps)?)),
        ConstructionSpec::Product { surface, factor, lambda } => {
            let chart = build_chart(&surface.chart)?;
            let s = FoldedSurface {
                area: field(&chart, &surface.area)?,
                t: field(&chart, &surface.t)?,
                chart,
            };
            let m = factor.as_deref().map(system_of).transpose()?;
            Ok(system_only(product_with_folded_surface(&s, m.as_ref(), lambda.as_deref())?))
        }
        ConstructionSpec::Average {
            chart,
            form,
            function,
            map,
            order,
        } => {
            let c = build_chart(chart)?;
            let names = c.names();
            let f = field(&c, function)?;
            let map = map.iter().map(|s| Ok(Expr::parse(s, &names)?)).collect::<Result<Vec<_>>>()?;
            let action = PointMap::new(c.clone(), map)?;
            let avg = average_invariant_function(&f, &action, *order, &crate::sampling::SamplePlan::new(400, 0, 5))?;
            let rendered = render(&avg.function, &names, "average")?;
            let system = match form {
                Some(fs) => Some(IntegrableSystem::new(
                    &c.name.clone(),
                    Arc::new(build_form(c, fs)?),
                    vec![("F".into(), Observable::smooth(avg.function.clone()))],
                )?),
                None => None,
            };
            Ok(Constructed {
                details: serde_json::json!({ "function": rendered, "averaging": json(&avg.report) }),
                pass: avg.report.pass,
                system,
            })
        }
        ConstructionSpec::Build4d {
            torus,
            params,
            folded_collar,
        } => {
            let b = build_b_integrable_4d(&resolve_torus(torus)?, params)?;
            let details = serde_json::json!({
                "rotation": b.rotation,
                "averaging": json(&b.averaging),
                "polydisks": json(&b.polydisks),
                "exceptional": json(&b.exceptional),
                "params": json(&b.params),
            });
            let system = match folded_collar {
                Some(e) => b.folded_variant(*e)?,
                None => b.system,
            };
            Ok(Constructed {
                system: Some(system),
                details,
                pass: true,
            })
        }
        ConstructionSpec::Obstruction { torus } => {
            let r = obstruction_report(&resolve_torus(torus)?);
            Ok(Constructed {
                system: None,
                details: json(&r),
                pass: true,
            })
        }
        ConstructionSpec::Delzant { template } => {
            let r = delzant_check(&parse_template(template)?)?;
            Ok(Constructed {
                system: None,
                pass: r.pass,
                details: json(&r),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::validate_form;
    use crate::sampling::SamplePlan;

    const MARTINET: &str = r#"
[chart]
name = "martinet"
z = "t"
coords = [
    { name = "t", lo = -1, hi = 1 },
    { name = "q", lo = -2, hi = 2 },
    { name = "x2", lo = -1, hi = 1 },
    { name = "y2", lo = -1, hi = 1 },
]

[form]
kind = "folded"
entries = { "t,q" = "t", "x2,y2" = "1" }

[[observables]]
name = "f1"
expr = "t^2/2"

[[observables]]
name = "f2"
expr = "x2"
"#;

    fn same_system(a: &IntegrableSystem, b: &IntegrableSystem) {
        for p in SamplePlan::new(40, 10, 1).interior_points(a.chart()) {
            assert_eq!(a.form.matrix(&p), b.form.matrix(&p));
            assert_eq!(a.values(&p), b.values(&p));
        }
        assert_eq!(a.chart(), b.chart());
    }

    #[test]
    fn explicit_system_loads_and_validates() {
        let cfg = ConfigFile::parse(MARTINET).unwrap();
        let sys = cfg.input().unwrap().system().cloned().unwrap();
        assert_eq!(sys.n(), 2);
        assert!(validate_form(&sys.form, &SamplePlan::new(100, 30, 1)).unwrap().pass);
    }

    #[test]
    fn export_round_trips() {
        let sys = ConfigFile::parse(MARTINET).unwrap().input().unwrap().system().cloned().unwrap();
        let text = export_system(&sys).unwrap().to_toml().unwrap();
        let back = ConfigFile::parse(&text).unwrap().input().unwrap().system().cloned().unwrap();
        same_system(&sys, &back);
        for id in crate::gallery::GALLERY_IDS {
            let e = instantiate(id).unwrap();
            let text = export_system(&e.system).unwrap().to_toml().unwrap();
            let back = ConfigFile::parse(&text).unwrap().input().unwrap().system().cloned().unwrap();
            same_system(&e.system, &back);
        }
    }

    #[test]
    fn constructions_export() {
        let spec: ConfigFile = ConfigFile::parse(
            r#"
[construction]
kind = "desingularize"
eps = 0.5
source = { kind = "twisted_lift", n = 2, c = 1.0 }
"#,
        )
        .unwrap();
        let sys = spec.input().unwrap().system().cloned().unwrap();
        let text = export_system(&sys).unwrap().to_toml().unwrap();
        let back = ConfigFile::parse(&text).unwrap().input().unwrap().system().cloned().unwrap();
        same_system(&sys, &back);
    }

    #[test]
    fn config_errors() {
        let folded_no_z = MARTINET.replace("z = \"t\"\n", "");
        let e = ConfigFile::parse(&folded_no_z).unwrap().input().unwrap_err();
        assert!(e.is_config(), "{e}");
        assert!(ConfigFile::parse("bogus = 1").unwrap_err().is_config());
        let both = format!("gallery = \"radko_sphere\"\n{MARTINET}");
        assert!(ConfigFile::parse(&both).unwrap().input().unwrap_err().is_config());
        let e = ConfigFile::parse("gallery = \"nope\"").unwrap().input().unwrap_err();
        assert!(e.is_config());
    }
}
