//! Dense truncated multivariate Taylor expansions.
//!
//! A [`Jet`] of order `K` in `n` variables stores `∂^α f(p) / α!` for every
//! multi-index `|α| ≤ K`. Coefficients are laid out degree by degree, so the
//! layout of order `K` is a prefix of the layout of any higher order and
//! truncation is a plain `Vec::truncate`.
//!
//! All arithmetic is exact for the stored truncation order: the product keeps
//! every pair of multi-indices whose degrees sum to at most `K`, and unary
//! functions are composed through their Taylor series in the non-constant
//! part, which is nilpotent of index `K + 1`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, OnceLock, RwLock};

/// Upper bound on variables a jet may carry (`u8` exponents, small charts).
pub const MAX_VARS: usize = 16;

/// Multi-index bookkeeping shared by every jet with the same `(nvars, order)`.
pub struct Layout {
    nvars: usize,
    order: usize,
    indices: Vec<Box<[u8]>>,
    degree: Vec<usize>,
    lookup: HashMap<Box<[u8]>, usize>,
    /// `(a, b, a + b)` for all pairs with `|a| + |b| ≤ order`.
    products: Vec<(u32, u32, u32)>,
    /// `raise[v][i]` is the index of `indices[i] + e_v`, or `u32::MAX`.
    raise: Vec<Vec<u32>>,
}

type LayoutCache = RwLock<HashMap<(usize, usize), Arc<Layout>>>;

fn cache() -> &'static LayoutCache {
    static CACHE: OnceLock<LayoutCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn push_degree(nvars: usize, degree: usize, out: &mut Vec<Box<[u8]>>) {
    fn rec(var: usize, remaining: usize, cur: &mut Vec<u8>, out: &mut Vec<Box<[u8]>>) {
        if var + 1 == cur.len() {
            cur[var] = remaining as u8;
            out.push(cur.clone().into_boxed_slice());
            cur[var] = 0;
            return;
        }
        for k in (0..=remaining).rev() {
            cur[var] = k as u8;
            rec(var + 1, remaining - k, cur, out);
        }
        cur[var] = 0;
    }
    if nvars == 0 {
        if degree == 0 {
            out.push(Vec::new().into_boxed_slice());
        }
        return;
    }
    let mut cur = vec![0u8; nvars];
    rec(0, degree, &mut cur, out);
}

impl Layout {
    /// Shared layout for `nvars` variables truncated at `order`.
    pub fn get(nvars: usize, order: usize) -> Arc<Layout> {
        assert!(nvars <= MAX_VARS, "jet supports at most {MAX_VARS} variables");
        if let Some(l) = cache().read().unwrap().get(&(nvars, order)) {
            return l.clone();
        }
        let layout = Arc::new(Layout::build(nvars, order));
        cache()
            .write()
            .unwrap()
            .entry((nvars, order))
            .or_insert(layout)
            .clone()
    }

    fn build(nvars: usize, order: usize) -> Layout {
        let mut indices = Vec::new();
        let mut degree = Vec::new();
        for d in 0..=order {
            let before = indices.len();
            push_degree(nvars, d, &mut indices);
            degree.extend(std::iter::repeat_n(d, indices.len() - before));
        }
        let lookup: HashMap<Box<[u8]>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut products = Vec::new();
        let mut sum = vec![0u8; nvars];
        for (a, ia) in indices.iter().enumerate() {
            for (b, ib) in indices.iter().enumerate() {
                if degree[a] + degree[b] > order {
                    continue;
                }
                for v in 0..nvars {
                    sum[v] = ia[v] + ib[v];
                }
                let c = lookup[&sum[..]];
                products.push((a as u32, b as u32, c as u32));
            }
        }
        let raise = (0..nvars)
            .map(|v| {
                indices
                    .iter()
                    .map(|a| {
                        let mut up = a.to_vec();
                        up[v] += 1;
                        lookup.get(&up[..]).map_or(u32::MAX, |&i| i as u32)
                    })
                    .collect()
            })
            .collect();
        Layout {
            nvars,
            order,
            indices,
            degree,
            lookup,
            products,
            raise,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn multi_index(&self, i: usize) -> &[u8] {
        &self.indices[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    /// Position of a multi-index, if its degree is within the order.
    pub fn index_of(&self, alpha: &[u8]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.indices.len())
            .finish()
    }
}

/// Truncated Taylor expansion of a scalar function at a base point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn zero(nvars: usize, order: usize) -> Jet {
        let layout = Layout::get(nvars, order);
        let coeffs = vec![0.0; layout.len()];
        Jet { layout, coeffs }
    }

    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        let mut j = Jet::zero(nvars, order);
        j.coeffs[0] = value;
        j
    }

    /// The coordinate function `x_var` expanded at a point where it equals `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < nvars, "variable {var} out of range for {nvars} variables");
        let mut j = Jet::constant(nvars, order, value);
        if order >= 1 {
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Jet {
        let layout = Layout::get(nvars, order);
        assert_eq!(coeffs.len(), layout.len(), "coefficient count mismatch");
        Jet { layout, coeffs }
    }

    /// Constant jet sharing this jet's layout.
    pub fn lift(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            layout: self.layout.clone(),
            coeffs,
        }
    }

    pub fn zeros_like(&self) -> Jet {
        self.lift(0.0)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient `∂^α f / α!`; zero beyond the stored order.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        self.layout.index_of(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    /// `∂^α f` at the base point. `None` when `|α|` exceeds the order.
    pub fn partial(&self, alpha: &[u8]) -> Option<f64> {
        let i = self.layout.index_of(alpha)?;
        let factorial: f64 = alpha
            .iter()
            .map(|&a| (1..=a as u64).product::<u64>() as f64)
            .product();
        Some(self.coeffs[i] * factorial)
    }

    /// Gradient at the base point (requires order ≥ 1).
    pub fn gradient(&self) -> Vec<f64> {
        assert!(self.order() >= 1, "gradient needs an order-1 jet");
        self.coeffs[1..=self.nvars()].to_vec()
    }

    fn same_layout(&self, other: &Jet) {
        debug_assert!(
            Arc::ptr_eq(&self.layout, &other.layout),
            "jet layout mismatch: {:?} vs {:?}",
            self.layout,
            other.layout
        );
    }

    /// `self += a * b`, truncated.
    pub fn mul_add_assign(&mut self, a: &Jet, b: &Jet) {
        self.same_layout(a);
        self.same_layout(b);
        let (x, y, out) = (&a.coeffs, &b.coeffs, &mut self.coeffs);
        for &(i, j, k) in &self.layout.products {
            out[k as usize] += x[i as usize] * y[j as usize];
        }
    }

    /// `self -= a * b`, truncated.
    pub fn mul_sub_assign(&mut self, a: &Jet, b: &Jet) {
        self.same_layout(a);
        self.same_layout(b);
        let (x, y, out) = (&a.coeffs, &b.coeffs, &mut self.coeffs);
        for &(i, j, k) in &self.layout.products {
            out[k as usize] -= x[i as usize] * y[j as usize];
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Jet, c: f64) {
        self.same_layout(other);
        for (o, v) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *o += c * v;
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Nonconstant part `f - f(p)`.
    fn nilpotent(&self) -> Jet {
        let mut u = self.clone();
        u.coeffs[0] = 0.0;
        u
    }

    /// `Σ_k c_k u^k` with `u = self - self.value()`, summed by successive powers.
    ///
    /// `taylor[k]` must hold `g^(k)(value) / k!` for `k = 0..=order`.
    fn compose(&self, taylor: &[f64]) -> Jet {
        let u = self.nilpotent();
        let mut out = self.lift(taylor[0]);
        let mut power = self.lift(1.0);
        for &c in taylor.iter().skip(1).take(self.order()) {
            power = &power * &u;
            out.add_scaled(&power, c);
        }
        out
    }

    /// Multiplicative inverse; `None` when the constant term vanishes.
    pub fn recip(&self) -> Option<Jet> {
        let b0 = self.value();
        if b0 == 0.0 || !b0.is_finite() {
            return None;
        }
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut c = 1.0 / b0;
        for _ in 0..=self.order() {
            taylor.push(c);
            c *= -1.0 / b0;
        }
        Some(self.compose(&taylor))
    }

    pub fn checked_div(&self, other: &Jet) -> Option<Jet> {
        Some(self * &other.recip()?)
    }

    pub fn powi(&self, exp: u32) -> Jet {
        let mut result = self.lift(1.0);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    pub fn exp(&self) -> Jet {
        let e0 = self.value().exp();
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            taylor.push(e0 / fact);
        }
        self.compose(&taylor)
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    fn trig(&self, shift: usize) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                fact *= k as f64;
            }
            taylor.push(cycle[(k + shift) % 4] / fact);
        }
        self.compose(&taylor)
    }

    /// Natural logarithm; `None` unless the constant term is positive.
    pub fn ln(&self) -> Option<Jet> {
        let b0 = self.value();
        if b0 <= 0.0 || !b0.is_finite() {
            return None;
        }
        let mut taylor = vec![b0.ln()];
        let mut p = 1.0;
        for k in 1..=self.order() {
            p /= b0;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            taylor.push(sign * p / k as f64);
        }
        Some(self.compose(&taylor))
    }

    /// `∂f/∂x_var` as a jet of one order less.
    ///
    /// # Panics
    /// If the jet has order 0.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        assert!(var < self.nvars());
        let layout = Layout::get(self.nvars(), self.order() - 1);
        let raise = &self.layout.raise[var];
        let coeffs = (0..layout.len())
            .map(|i| {
                let up = raise[i] as usize;
                f64::from(layout.indices[i][var] + 1) * self.coeffs[up]
            })
            .collect();
        Jet { layout, coeffs }
    }

    /// Drop all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order(), "cannot raise a jet's order by truncation");
        if order == self.order() {
            return self.clone();
        }
        let layout = Layout::get(self.nvars(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    /// Re-express in `nvars` variables, old variable `i` becoming `map[i]`.
    ///
    /// This is the jet of the pullback along a coordinate projection.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Jet {
        assert_eq!(map.len(), self.nvars());
        let layout = Layout::get(nvars, self.order());
        let mut coeffs = vec![0.0; layout.len()];
        let mut alpha = vec![0u8; nvars];
        for (i, a) in self.layout.indices.iter().enumerate() {
            alpha.iter_mut().for_each(|v| *v = 0);
            for (v, &m) in map.iter().enumerate() {
                alpha[m] = a[v];
            }
            coeffs[layout.lookup[&alpha[..]]] = self.coeffs[i];
        }
        Jet { layout, coeffs }
    }

    /// Restrict to the variables `keep`, holding the others at the base point.
    pub fn restrict(&self, keep: &[usize]) -> Jet {
        let layout = Layout::get(keep.len(), self.order());
        let mut alpha = vec![0u8; self.nvars()];
        let coeffs = layout
            .indices
            .iter()
            .map(|b| {
                alpha.iter_mut().for_each(|v| *v = 0);
                for (j, &k) in keep.iter().enumerate() {
                    alpha[k] = b[j];
                }
                self.coeffs[self.layout.lookup[&alpha[..]]]
            })
            .collect();
        Jet { layout, coeffs }
    }

    /// Evaluate the truncated polynomial at `base + offset`.
    pub fn eval_offset(&self, offset: &[f64]) -> f64 {
        assert_eq!(offset.len(), self.nvars());
        self.layout
            .indices
            .iter()
            .zip(&self.coeffs)
            .map(|(a, c)| {
                c * a
                    .iter()
                    .zip(offset)
                    .map(|(&k, &h)| h.powi(i32::from(k)))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, K={}, {:?})", self.nvars(), self.order(), self.coeffs)
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.nvars() == other.nvars()
            && self.order() == other.order()
            && self.coeffs == other.coeffs
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.same_layout(rhs);
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.same_layout(rhs);
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let mut out = self.zeros_like();
        out.mul_add_assign(self, rhs);
        out
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.same_layout(rhs);
        for (o, v) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *o += v;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.same_layout(rhs);
        for (o, v) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *o -= v;
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
