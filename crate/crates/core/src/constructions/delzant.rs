//! Origami templates: polygons with rational vertices, fold identifications,
//! and the two-dimensional Delzant check.
//!
//! Text format (one item per line, `#` starts a comment):
//!
//! ```text
//! polygon square
//!   0 0
//!   1 0
//!   1 1
//!   0 1
//! end
//! fold square 1 other 3
//! ```
//!
//! Coordinates are integers, decimals or fractions `p/q`. Edge `k` of a
//! polygon runs from vertex `k` to vertex `k + 1` (indices from 0).

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest numerator or denominator accepted by the parser.
const MAX_PART: i128 = 1_000_000_000_000;

/// Exact rational with positive denominator, in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn too_large() -> Error {
    Error::Input("template coordinates are too large for exact arithmetic".into())
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Result<Rational> {
        if den == 0 {
            return Err(Error::Input("zero denominator".into()));
        }
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ok(Rational {
            num: s * num / g,
            den: s * den / g,
        })
    }

    pub fn int(v: i128) -> Rational {
        Rational { num: v, den: 1 }
    }

    pub fn parse(s: &str) -> Result<Rational> {
        let bad = || Error::Input(format!("`{s}` is not a rational number"));
        let parse_int = |t: &str| -> Result<i128> {
            let v: i128 = t.parse().map_err(|_| bad())?;
            if v.abs() > MAX_PART {
                return Err(too_large());
            }
            Ok(v)
        };
        if let Some((n, d)) = s.split_once('/') {
            return Rational::new(parse_int(n)?, parse_int(d)?);
        }
        if let Some((ip, fp)) = s.split_once('.') {
            if fp.is_empty() || fp.len() > 12 || !fp.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let neg = ip.starts_with('-');
            let ip = if ip.is_empty() || ip == "-" || ip == "+" { 0 } else { parse_int(ip)? };
            let den = 10i128.pow(fp.len() as u32);
            let frac: i128 = fp.parse().map_err(|_| bad())?;
            let num = ip.abs() * den + frac;
            return Rational::new(if neg { -num } else { num }, den);
        }
        Ok(Rational::int(parse_int(s)?))
    }

    pub fn checked_sub(self, o: Rational) -> Result<Rational> {
        let a = self.num.checked_mul(o.den).ok_or_else(too_large)?;
        let b = o.num.checked_mul(self.den).ok_or_else(too_large)?;
        let d = self.den.checked_mul(o.den).ok_or_else(too_large)?;
        Rational::new(a.checked_sub(b).ok_or_else(too_large)?, d)
    }

    pub fn checked_add(self, o: Rational) -> Result<Rational> {
        self.checked_sub(Rational { num: -o.num, den: o.den })
    }

    pub fn checked_mul(self, o: Rational) -> Result<Rational> {
        let n = self.num.checked_mul(o.num).ok_or_else(too_large)?;
        let d = self.den.checked_mul(o.den).ok_or_else(too_large)?;
        Rational::new(n, d)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    pub name: String,
    pub vertices: Vec<[Rational; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FoldPair {
    pub a: usize,
    pub edge_a: usize,
    pub b: usize,
    pub edge_b: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrigamiTemplate {
    pub polygons: Vec<Polygon>,
    pub folds: Vec<FoldPair>,
}

pub fn parse_template(src: &str) -> Result<OrigamiTemplate> {
    let mut polygons: Vec<Polygon> = Vec::new();
    let mut raw_folds: Vec<(usize, String, String, String, String)> = Vec::new();
    let mut open: Option<Polygon> = None;
    for (k, line) in src.lines().enumerate() {
        let lineno = k + 1;
        let err = |m: String| Error::Input(format!("line {lineno}: {m}"));
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let words: Vec<&str> = body.split_whitespace().collect();
        match (words[0], open.as_mut()) {
            ("polygon", None) => {
                if words.len() != 2 {
                    return Err(err("expected `polygon NAME`".into()));
                }
                if polygons.iter().any(|p| p.name == words[1]) {
                    return Err(err(format!("duplicate polygon `{}`", words[1])));
                }
                open = Some(Polygon {
                    name: words[1].to_string(),
                    vertices: Vec::new(),
                });
            }
            ("polygon", Some(_)) => return Err(err("`polygon` inside an open polygon".into())),
            ("end", Some(_)) => {
                let p = open.take().expect("checked");
                if p.vertices.len() < 3 {
                    return Err(err(format!("polygon `{}` needs at least 3 vertices", p.name)));
                }
                polygons.push(p);
            }
            ("end", None) => return Err(err("`end` without `polygon`".into())),
            ("fold", None) => {
                if words.len() != 5 {
                    return Err(err("expected `fold A EDGE B EDGE`".into()));
                }
                raw_folds.push((
                    lineno,
                    words[1].to_string(),
                    words[2].to_string(),
                    words[3].to_string(),
                    words[4].to_string(),
                ));
            }
            (_, Some(p)) => {
                if words.len() != 2 {
                    return Err(err("expected a vertex `x y`".into()));
                }
                let x = Rational::parse(words[0]).map_err(|e| err(e.to_string()))?;
                let y = Rational::parse(words[1]).map_err(|e| err(e.to_string()))?;
                p.vertices.push([x, y]);
            }
            (w, None) => return Err(err(format!("unexpected `{w}`"))),
        }
    }
    if let Some(p) = open {
        return Err(Error::Input(format!("polygon `{}` is not closed by `end`", p.name)));
    }
    let mut folds = Vec::new();
    for (lineno, a, ea, b, eb) in raw_folds {
        let err = |m: String| Error::Input(format!("line {lineno}: {m}"));
        let find = |name: &str| {
            polygons
                .iter()
                .position(|p| p.name == name)
                .ok_or_else(|| err(format!("unknown polygon `{name}`")))
        };
        let edge = |poly: usize, s: &str| -> Result<usize> {
            let e: usize = s.parse().map_err(|_| err(format!("bad edge index `{s}`")))?;
            if e >= polygons[poly].vertices.len() {
                return Err(err(format!("polygon `{}` has no edge {e}", polygons[poly].name)));
            }
            Ok(e)
        };
        let (ia, ib) = (find(&a)?, find(&b)?);
        folds.push(FoldPair {
            a: ia,
            edge_a: edge(ia, &ea)?,
            b: ib,
            edge_b: edge(ib, &eb)?,
        });
    }
    Ok(OrigamiTemplate { polygons, folds })
}

/// Primitive integer vector along a non-zero rational vector.
fn primitive(v: [Rational; 2]) -> Result<[i128; 2]> {
    let x = v[0].num.checked_mul(v[1].den).ok_or_else(too_large)?;
    let y = v[1].num.checked_mul(v[0].den).ok_or_else(too_large)?;
    let g = gcd(x, y);
    if g == 0 {
        return Err(Error::Input("repeated vertex (zero-length edge)".into()));
    }
    Ok([x / g, y / g])
}

fn edge(p: &Polygon, k: usize) -> Result<[Rational; 2]> {
    let n = p.vertices.len();
    let (a, b) = (p.vertices[k], p.vertices[(k + 1) % n]);
    Ok([b[0].checked_sub(a[0])?, b[1].checked_sub(a[1])?])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexFailure {
    pub polygon: String,
    pub index: usize,
    pub vertex: [String; 2],
    pub det: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FoldCheck {
    pub a: String,
    pub edge_a: usize,
    pub b: String,
    pub edge_b: usize,
    pub compatible: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DelzantReport {
    pub polygons: usize,
    pub vertices_checked: usize,
    pub failures: Vec<VertexFailure>,
    pub folds: Vec<FoldCheck>,
    pub pass: bool,
}

/// At each vertex not on a fold edge the primitive edge vectors must have
/// determinant ±1; folded edges must have equal length.
pub fn delzant_check(t: &OrigamiTemplate) -> Result<DelzantReport> {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (pi, p) in t.polygons.iter().enumerate() {
        let n = p.vertices.len();
        let on_fold = |v: usize| {
            t.folds.iter().any(|f| {
                (f.a == pi && (f.edge_a == v || (f.edge_a + 1) % n == v))
                    || (f.b == pi && (f.edge_b == v || (f.edge_b + 1) % n == v))
            })
        };
        for v in 0..n {
            if on_fold(v) {
                continue;
            }
            checked += 1;
            let out = primitive(edge(p, v)?)?;
            let back = edge(p, (v + n - 1) % n)?;
            let inn = primitive([
                Rational { num: -back[0].num, den: back[0].den },
                Rational { num: -back[1].num, den: back[1].den },
            ])?;
            let det = out[0]
                .checked_mul(inn[1])
                .zip(out[1].checked_mul(inn[0]))
                .and_then(|(a, b)| a.checked_sub(b))
                .ok_or_else(too_large)?;
            if det.abs() != 1 {
                failures.push(VertexFailure {
                    polygon: p.name.clone(),
                    index: v,
                    vertex: [p.vertices[v][0].to_string(), p.vertices[v][1].to_string()],
                    det: det.to_string(),
                });
            }
        }
    }
    let len2 = |p: &Polygon, k: usize| -> Result<Rational> {
        let e = edge(p, k)?;
        e[0].checked_mul(e[0])?.checked_add(e[1].checked_mul(e[1])?)
    };
    let folds = t
        .folds
        .iter()
        .map(|f| {
            let (pa, pb) = (&t.polygons[f.a], &t.polygons[f.b]);
            Ok(FoldCheck {
                a: pa.name.clone(),
                edge_a: f.edge_a,
                b: pb.name.clone(),
                edge_b: f.edge_b,
                compatible: len2(pa, f.edge_a)? == len2(pb, f.edge_b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = failures.is_empty() && folds.iter().all(|f| f.compatible);
    Ok(DelzantReport {
        polygons: t.polygons.len(),
        vertices_checked: checked,
        failures,
        folds,
        pass,
    })
}

impl OrigamiTemplate {
    /// Image under `x ↦ m·x + shift`.
    pub fn transform(&self, m: [[i64; 2]; 2], shift: [Rational; 2]) -> Result<OrigamiTemplate> {
        let mut out = self.clone();
        for p in &mut out.polygons {
            for v in &mut p.vertices {
                let r = |row: [i64; 2]| -> Result<Rational> {
                    v[0].checked_mul(Rational::int(row[0] as i128))?
                        .checked_add(v[1].checked_mul(Rational::int(row[1] as i128))?)
                };
                *v = [r(m[0])?.checked_add(shift[0])?, r(m[1])?.checked_add(shift[1])?];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(vertices: &str) -> OrigamiTemplate {
        let body: String = vertices.split(';').map(|v| format!("  {v}\n")).collect();
        parse_template(&format!("polygon p\n{body}end\n")).unwrap()
    }

    #[test]
    fn squares_and_triangles() {
        assert!(delzant_check(&single("0 0;1 0;1 1;0 1")).unwrap().pass);
        assert!(delzant_check(&single("0 0;2 0;0 2")).unwrap().pass);
        let r = delzant_check(&single("0 0;1 0;0 2")).unwrap();
        assert!(!r.pass);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].vertex, ["1".to_string(), "0".to_string()]);
        assert_eq!(r.failures[0].det.trim_start_matches('-'), "2");
    }

    #[test]
    fn rationals_and_folds() {
        let t = parse_template(
            "# two squares folded along a side\npolygon a\n0 0\n1/2 0\n0.5 1/2\n0 0.5\nend\n\
             polygon b\n0 0\n1/2 0\n1/2 1/2\n0 1/2\nend\nfold a 1 b 3\n",
        )
        .unwrap();
        let r = delzant_check(&t).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.vertices_checked, 4);
        assert!(parse_template("polygon a\n0 0\nx 1\nend").is_err());
        assert!(parse_template("polygon a\n0 0\n1 0\n0 1\n").is_err());
        assert!(parse_template("fold a 0 b 1").is_err());
    }
}
