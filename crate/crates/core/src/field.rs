//! Tensor-valued fields evaluated through jets.
//!
//! A [`JetField`] hands out all components of a tensor field at a point as
//! jets of a requested order. Base fields wrap [`Expression`]s; derived fields
//! wrap a pure evaluator that asks its inputs for `order + depth` and
//! differentiates down.

use std::fmt;
use std::sync::Arc;

use ndarray::{ArrayD, IxDyn};

use crate::error::Error;
use crate::expr::Expression;
use crate::jet::Jet;

/// Row-major array of jets sharing one layout.
#[derive(Clone, Debug, PartialEq)]
pub struct JetArray {
    shape: Vec<usize>,
    data: Vec<Jet>,
}

impl JetArray {
    pub fn new(shape: Vec<usize>, data: Vec<Jet>) -> JetArray {
        assert_eq!(shape.iter().product::<usize>(), data.len(), "shape/data mismatch");
        JetArray { shape, data }
    }

    pub fn zeros(shape: &[usize], nvars: usize, order: usize) -> JetArray {
        let len = shape.iter().product();
        JetArray {
            shape: shape.to_vec(),
            data: vec![Jet::zero(nvars, order); len],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> Jet) -> JetArray {
        let len: usize = shape.iter().product();
        let mut idx = vec![0; shape.len()];
        let mut data = Vec::with_capacity(len);
        for flat in 0..len {
            let mut r = flat;
            for d in (0..shape.len()).rev() {
                idx[d] = r % shape[d];
                r /= shape[d];
            }
            data.push(f(&idx));
        }
        JetArray {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Jet] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Jet> {
        self.data
    }

    pub fn order(&self) -> usize {
        self.data.first().map_or(0, Jet::order)
    }

    pub fn nvars(&self) -> usize {
        self.data.first().map_or(0, Jet::nvars)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            debug_assert!(i < n);
            acc * n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.data[self.flat(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut Jet {
        let f = self.flat(idx);
        &mut self.data[f]
    }

    pub fn set(&mut self, idx: &[usize], value: Jet) {
        let f = self.flat(idx);
        self.data[f] = value;
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> JetArray {
        JetArray {
            shape: self.shape.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn truncate(&self, order: usize) -> JetArray {
        self.map(|j| j.truncate(order))
    }

    pub fn derivative(&self, var: usize) -> JetArray {
        self.map(|j| j.derivative(var))
    }

    pub fn embed(&self, nvars: usize, map: &[usize]) -> JetArray {
        self.map(|j| j.embed(nvars, map))
    }

    pub fn restrict(&self, keep: &[usize]) -> JetArray {
        self.map(|j| j.restrict(keep))
    }

    /// Base-point values as an ndarray.
    pub fn values(&self) -> ArrayD<f64> {
        ArrayD::from_shape_vec(IxDyn(&self.shape), self.data.iter().map(Jet::value).collect())
            .expect("shape matches data")
    }
}

/// A tensor field on a chart, evaluated as component jets.
pub trait JetField: Send + Sync {
    /// Number of chart coordinates.
    fn nvars(&self) -> usize;
    fn shape(&self) -> &[usize];
    /// Differentiation levels consumed on top of the base expressions.
    fn depth(&self) -> usize {
        0
    }
    fn eval(&self, point: &[f64], order: usize) -> Result<JetArray, Error>;

    fn values(&self, point: &[f64]) -> Result<ArrayD<f64>, Error> {
        Ok(self.eval(point, 0)?.values())
    }
}

pub type FieldRef = Arc<dyn JetField>;

/// Field whose components are expressions, with optional aliasing: each
/// slot refers to an expression index and a sign, or is identically zero.
#[derive(Clone)]
pub struct ExprField {
    nvars: usize,
    shape: Vec<usize>,
    exprs: Vec<Expression>,
    slots: Vec<Option<(usize, f64)>>,
}

impl ExprField {
    /// One expression per component, row-major.
    pub fn dense(shape: &[usize], exprs: Vec<Expression>) -> Result<ExprField, Error> {
        let len: usize = shape.iter().product();
        if exprs.len() != len {
            return Err(Error::invalid(format!(
                "expected {len} component expressions, got {}",
                exprs.len()
            )));
        }
        let slots = (0..len).map(|i| Some((i, 1.0))).collect();
        ExprField::with_slots(shape, exprs, slots)
    }

    pub fn with_slots(
        shape: &[usize],
        exprs: Vec<Expression>,
        slots: Vec<Option<(usize, f64)>>,
    ) -> Result<ExprField, Error> {
        let nvars = exprs
            .first()
            .map(Expression::dim)
            .ok_or_else(|| Error::invalid("field needs at least one expression"))?;
        if exprs.iter().any(|e| e.dim() != nvars) {
            return Err(Error::invalid("component expressions disagree on dimension"));
        }
        assert_eq!(slots.len(), shape.iter().product::<usize>());
        Ok(ExprField {
            nvars,
            shape: shape.to_vec(),
            exprs,
            slots,
        })
    }

    pub fn expressions(&self) -> &[Expression] {
        &self.exprs
    }

    pub fn slots(&self) -> &[Option<(usize, f64)>] {
        &self.slots
    }
}

impl fmt::Debug for ExprField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExprField")
            .field("shape", &self.shape)
            .field("exprs", &self.exprs.iter().map(ToString::to_string).collect::<Vec<_>>())
            .finish()
    }
}

impl JetField for ExprField {
    fn nvars(&self) -> usize {
        self.nvars
    }

    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, point: &[f64], order: usize) -> Result<JetArray, Error> {
        let jets = self
            .exprs
            .iter()
            .map(|e| e.eval_jet(point, order))
            .collect::<Result<Vec<_>, _>>()?;
        let zero = Jet::zero(point.len(), order);
        let data = self
            .slots
            .iter()
            .map(|s| match s {
                Some((i, sign)) if *sign == 1.0 => jets[*i].clone(),
                Some((i, sign)) => jets[*i].scale(*sign),
                None => zero.clone(),
            })
            .collect();
        Ok(JetArray::new(self.shape.clone(), data))
    }
}

type Evaluator = dyn Fn(&[f64], usize) -> Result<JetArray, Error> + Send + Sync;

/// Field computed from other fields by a pure evaluator.
#[derive(Clone)]
pub struct DerivedField {
    name: &'static str,
    nvars: usize,
    shape: Vec<usize>,
    depth: usize,
    eval: Arc<Evaluator>,
}

impl DerivedField {
    pub fn new(
        name: &'static str,
        nvars: usize,
        shape: Vec<usize>,
        depth: usize,
        eval: impl Fn(&[f64], usize) -> Result<JetArray, Error> + Send + Sync + 'static,
    ) -> DerivedField {
        DerivedField {
            name,
            nvars,
            shape,
            depth,
            eval: Arc::new(eval),
        }
    }

    /// Field with the given constant components.
    pub fn constant(nvars: usize, shape: Vec<usize>, values: Vec<f64>) -> DerivedField {
        assert_eq!(shape.iter().product::<usize>(), values.len());
        let s = shape.clone();
        DerivedField::new("constant", nvars, shape, 0, move |p, k| {
            Ok(JetArray::new(
                s.clone(),
                values.iter().map(|&v| Jet::constant(p.len(), k, v)).collect(),
            ))
        })
    }

    pub fn zero(nvars: usize, shape: Vec<usize>) -> DerivedField {
        let len = shape.iter().product();
        DerivedField::constant(nvars, shape, vec![0.0; len])
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn into_ref(self) -> FieldRef {
        Arc::new(self)
    }
}

impl fmt::Debug for DerivedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DerivedField")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("depth", &self.depth)
            .finish()
    }
}

impl JetField for DerivedField {
    fn nvars(&self) -> usize {
        self.nvars
    }

    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn depth(&self) -> usize {
        self.depth
    }

    fn eval(&self, point: &[f64], order: usize) -> Result<JetArray, Error> {
        if point.len() != self.nvars {
            return Err(Error::invalid(format!(
                "{}: point has {} coordinates, expected {}",
                self.name,
                point.len(),
                self.nvars
            )));
        }
        let out = (self.eval)(point, order)?;
        debug_assert_eq!(out.shape(), &self.shape[..], "{} shape", self.name);
        Ok(out)
    }
}

/// Jet inverse of a square jet matrix; `None` when its base-point value is singular.
pub fn invert(matrix: &JetArray) -> Option<JetArray> {
    let shape = matrix.shape();
    assert!(shape.len() == 2 && shape[0] == shape[1], "invert needs a square matrix");
    let n = shape[0];
    let nvars = matrix.nvars();
    let order = matrix.order();
    let base = nalgebra::DMatrix::from_fn(n, n, |i, j| matrix.get(&[i, j]).value());
    let inv0 = base.try_inverse()?;
    if inv0.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // M = M0 (I + N), N = M0^{-1} (M - M0) nilpotent; M^{-1} = Σ (-N)^k M0^{-1}
    let c = |v: f64| Jet::constant(nvars, order, v);
    let inv0_j = JetArray::from_fn(&[n, n], |ix| c(inv0[(ix[0], ix[1])]));
    let mut delta = matrix.clone();
    for d in delta.data.iter_mut() {
        *d = d.add_scalar(-d.value());
    }
    let neg_n = matmul(&inv0_j, &delta).map(|j| -j);
    let mut term = inv0_j.clone();
    let mut sum = inv0_j;
    for _ in 0..order {
        term = matmul(&neg_n, &term);
        for (s, t) in sum.data.iter_mut().zip(&term.data) {
            *s += t;
        }
    }
    Some(sum)
}

/// Jet matrix product.
pub fn matmul(a: &JetArray, b: &JetArray) -> JetArray {
    let (n, m) = (a.shape()[0], a.shape()[1]);
    let p = b.shape()[1];
    assert_eq!(m, b.shape()[0]);
    let zero = a.data[0].zeros_like();
    JetArray::from_fn(&[n, p], |ix| {
        let mut acc = zero.clone();
        for k in 0..m {
            acc.mul_add_assign(a.get(&[ix[0], k]), b.get(&[k, ix[1]]));
        }
        acc
    })
}

/// Order-`order` jets of the coordinate functions at `point`.
pub fn coordinates(point: &[f64], order: usize) -> Vec<Jet> {
    (0..point.len())
        .map(|i| Jet::variable(point.len(), order, i, point[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_is_row_major() {
        let a = JetArray::from_fn(&[2, 3], |ix| Jet::constant(1, 0, (ix[0] * 10 + ix[1]) as f64));
        assert_eq!(a.get(&[1, 2]).value(), 12.0);
        assert_eq!(a.data()[5].value(), 12.0);
        assert_eq!(a.values()[[1, 0]], 10.0);
    }

    #[test]
    fn invert_polynomial_matrix() {
        // [[1 + x, y], [0, 2]] at (0.3, -0.4): inverse exact as rational functions
        let p = [0.3, -0.4];
        let xs = coordinates(&p, 3);
        let m = JetArray::new(
            vec![2, 2],
            vec![xs[0].add_scalar(1.0), xs[1].clone(), xs[0].zeros_like(), xs[0].lift(2.0)],
        );
        let inv = invert(&m).unwrap();
        let id = matmul(&m, &inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = id.get(&[i, j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e.value() - want).abs() < 1e-15);
                assert!(e.coeffs()[1..].iter().all(|v| v.abs() < 1e-14), "{e:?}");
            }
        }
    }

    #[test]
    fn invert_singular_is_none() {
        let m = JetArray::from_fn(&[2, 2], |_| Jet::constant(1, 1, 1.0));
        assert!(invert(&m).is_none());
    }

    #[test]
    fn expr_field_aliases_slots() {
        let e = vec![Expression::parse("x1*x2", 2).unwrap()];
        let f = ExprField::with_slots(&[2, 2], e, vec![None, Some((0, 1.0)), Some((0, -1.0)), None]).unwrap();
        let v = f.values(&[2.0, 3.0]).unwrap();
        assert_eq!(v[[0, 1]], 6.0);
        assert_eq!(v[[1, 0]], -6.0);
        assert_eq!(v[[0, 0]], 0.0);
    }
}
