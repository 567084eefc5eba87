use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::expr::{BinOp, Expr};
use crate::real::{Dual, Real, MAX_DIM};

/// A scalar function written once against [`Real`]; wrapping it in a
/// [`ScalarField`] yields values and exact gradients.
pub trait SmoothFn: Send + Sync {
    fn eval<T: Real>(&self, x: &[T]) -> T;
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Default relative step for central differences.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone)]
pub struct ScalarField {
    value: ValueFn,
    grad: Option<GradFn>,
    expr: Option<Expr>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.expr {
            Some(e) => write!(f, "ScalarField({e})"),
            None => write!(f, "ScalarField(<closure>, exact_grad={})", self.grad.is_some()),
        }
    }
}

impl ScalarField {
    pub fn from_expr(e: Expr) -> ScalarField {
        let ev = e.clone();
        let eg = e.clone();
        ScalarField {
            value: Arc::new(move |x| ev.value(x)),
            grad: Some(Arc::new(move |x| eg.gradient(x))),
            expr: Some(e),
        }
    }

    pub fn parse(src: &str, names: &[impl AsRef<str>]) -> Result<ScalarField> {
        Ok(ScalarField::from_expr(Expr::parse(src, names)?))
    }

    pub fn constant(v: f64) -> ScalarField {
        ScalarField::from_expr(Expr::Num(v))
    }

    pub fn coordinate(i: usize) -> ScalarField {
        ScalarField::from_expr(Expr::Var(i))
    }

    /// Closure without a gradient; derivatives fall back to central differences.
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> ScalarField {
        ScalarField {
            value: Arc::new(f),
            grad: None,
            expr: None,
        }
    }

    pub fn with_grad(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> ScalarField {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn from_smooth<S: SmoothFn + 'static>(s: S) -> ScalarField {
        let s = Arc::new(s);
        let sv = s.clone();
        ScalarField {
            value: Arc::new(move |x| sv.eval::<f64>(x)),
            grad: Some(Arc::new(move |x| {
                let d = s.eval(&Dual::seed(x));
                d.d[..x.len()].to_vec()
            })),
            expr: None,
        }
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        (self.value)(p)
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    pub fn has_exact_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// Exact gradient when available, else central differences.
    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(p),
            None => self.fd_gradient(p, FD_STEP),
        }
    }

    /// Central differences with step `h * max(1, |p_i|)`.
    pub fn fd_gradient(&self, p: &[f64], h: f64) -> Vec<f64> {
        let mut q = p.to_vec();
        (0..p.len())
            .map(|i| {
                let step = h * p[i].abs().max(1.0);
                q[i] = p[i] + step;
                let fp = self.value(&q);
                q[i] = p[i] - step;
                let fm = self.value(&q);
                q[i] = p[i];
                (fp - fm) / (2.0 * step)
            })
            .collect()
    }

    /// Value and gradient packed as a dual number.
    pub fn dual(&self, p: &[f64]) -> Dual {
        let mut d = [0.0; MAX_DIM];
        for (slot, g) in d.iter_mut().zip(self.gradient(p)) {
            *slot = g;
        }
        Dual { v: self.value(p), d }
    }

    fn combine(&self, other: &ScalarField, op: BinOp) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        let value: ValueFn = {
            let (a, b) = (a.clone(), b.clone());
            Arc::new(move |x| {
                let (u, v) = (a.value(x), b.value(x));
                match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => u / v,
                }
            })
        };
        let grad: Option<GradFn> = if a.grad.is_some() && b.grad.is_some() {
            Some(Arc::new(move |x| {
                let (u, v) = (a.dual(x), b.dual(x));
                let r = match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => u / v,
                };
                r.d[..x.len()].to_vec()
            }))
        } else {
            None
        };
        let expr = match (&self.expr, &other.expr) {
            (Some(x), Some(y)) => Some(Expr::Bin(op, Box::new(x.clone()), Box::new(y.clone()))),
            _ => None,
        };
        ScalarField { value, grad, expr }
    }

    pub fn add(&self, o: &ScalarField) -> ScalarField {
        self.combine(o, BinOp::Add)
    }

    pub fn sub(&self, o: &ScalarField) -> ScalarField {
        self.combine(o, BinOp::Sub)
    }

    pub fn mul(&self, o: &ScalarField) -> ScalarField {
        self.combine(o, BinOp::Mul)
    }

    pub fn scale(&self, k: f64) -> ScalarField {
        ScalarField::constant(k).mul(self)
    }

    /// `f ∘ map` for a map given by one expression per coordinate.
    pub fn compose(&self, map: &[Expr]) -> ScalarField {
        match &self.expr {
            Some(e) => ScalarField::from_expr(e.substitute(map)),
            None => {
                let f = self.clone();
                let m = map.to_vec();
                ScalarField::from_fn(move |x| {
                    let y: Vec<f64> = m.iter().map(|e| e.value(x)).collect();
                    f.value(&y)
                })
            }
        }
    }
}

/// A 1-form `Σ a_i dx_i` stored sparsely.
#[derive(Clone, Debug)]
pub struct OneFormField {
    pub dim: usize,
    pub entries: Vec<(usize, ScalarField)>,
}

impl OneFormField {
    pub fn new(dim: usize) -> OneFormField {
        OneFormField { dim, entries: Vec::new() }
    }

    pub fn with(mut self, i: usize, f: ScalarField) -> OneFormField {
        self.entries.push((i, f));
        self
    }

    pub fn covector(&self, p: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for (i, f) in &self.entries {
            v[*i] += f.value(p);
        }
        v
    }

    /// Largest component of the exterior derivative at `p`.
    pub fn max_exterior_derivative(&self, p: &[f64]) -> f64 {
        let mut jac = vec![vec![0.0; self.dim]; self.dim];
        for (i, f) in &self.entries {
            let g = f.gradient(p);
            for k in 0..self.dim {
                jac[*i][k] += g[k];
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                worst = worst.max((jac[j][i] - jac[i][j]).abs());
            }
        }
        worst
    }
}

/// A 2-form `Σ_{i<j} w_ij dx_i ∧ dx_j`; only the strict upper triangle is
/// stored, so every evaluated matrix is exactly antisymmetric.
#[derive(Clone, Debug)]
pub struct TwoFormField {
    pub dim: usize,
    pub entries: Vec<(usize, usize, ScalarField)>,
}

impl TwoFormField {
    pub fn new(dim: usize) -> TwoFormField {
        TwoFormField { dim, entries: Vec::new() }
    }

    /// Add `f dx_i ∧ dx_j`; `i > j` is stored with the sign flipped and
    /// `i == j` is ignored.
    pub fn with(mut self, i: usize, j: usize, f: ScalarField) -> TwoFormField {
        if i < j {
            self.entries.push((i, j, f));
        } else if i > j {
            self.entries.push((j, i, f.scale(-1.0)));
        }
        self
    }

    pub fn matrix(&self, p: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, f) in &self.entries {
            let v = f.value(p);
            m[(*i, *j)] += v;
            m[(*j, *i)] -= v;
        }
        m
    }

    /// Row-major entries as dual numbers (value plus gradient).
    pub fn dual_entries(&self, p: &[f64]) -> Vec<Dual> {
        let mut m = vec![Dual::cst(0.0); self.dim * self.dim];
        for (i, j, f) in &self.entries {
            let d = f.dual(p);
            m[i * self.dim + j] = m[i * self.dim + j] + d;
            m[j * self.dim + i] = m[j * self.dim + i] - d;
        }
        m
    }

    /// Largest component of `dω` at `p`:
    /// `(dω)_ijk = ∂_i w_jk − ∂_j w_ik + ∂_k w_ij`.
    pub fn max_exterior_derivative(&self, p: &[f64]) -> f64 {
        let n = self.dim;
        let d = self.dual_entries(p);
        let w = |i: usize, j: usize, k: usize| d[i * n + j].d[k];
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let v = w(j, k, i) - w(i, k, j) + w(i, j, k);
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NAMES: [&str; 4] = ["t", "q", "x", "y"];

    #[test]
    fn expression_field_gradient_matches_differences() {
        let f = ScalarField::parse("cos(2*pi*q)*t^2 + x*y", &NAMES).unwrap();
        let p = [0.3, 0.1, -0.4, 0.7];
        let exact = f.gradient(&p);
        let fd = f.fd_gradient(&p, 1e-5);
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn combinators_keep_expressions_and_gradients() {
        let t = ScalarField::coordinate(0);
        let q = ScalarField::coordinate(1);
        let f = t.mul(&t).add(&q.scale(3.0));
        assert!(f.expr().is_some());
        assert_eq!(f.gradient(&[2.0, 0.0, 0.0, 0.0]), vec![4.0, 3.0, 0.0, 0.0]);
    }

    struct Quad;
    impl SmoothFn for Quad {
        fn eval<T: Real>(&self, x: &[T]) -> T {
            x[0] * x[1] * x[1]
        }
    }

    #[test]
    fn smooth_fn_gets_exact_gradient() {
        let f = ScalarField::from_smooth(Quad);
        assert_eq!(f.gradient(&[2.0, 3.0]), vec![9.0, 12.0]);
    }

    #[test]
    fn two_form_is_antisymmetric_and_closedness_detects_defects() {
        let w = TwoFormField::new(4)
            .with(0, 1, ScalarField::coordinate(0))
            .with(3, 2, ScalarField::constant(1.0));
        let m = w.matrix(&[0.5, 0.0, 0.0, 0.0]);
        assert_eq!(m, -m.transpose());
        assert_eq!(m[(2, 3)], -1.0);
        assert_eq!(w.max_exterior_derivative(&[0.5, 0.2, 0.1, 0.3]), 0.0);
        let bad = TwoFormField::new(4).with(0, 1, ScalarField::coordinate(2));
        assert!((bad.max_exterior_derivative(&[0.0; 4]) - 1.0).abs() < 1e-15);
    }
}
