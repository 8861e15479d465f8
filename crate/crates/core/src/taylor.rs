//! Truncated multivariate Taylor arithmetic in four variables.
//!
//! A [`Taylor`] value holds the Taylor coefficients `∂^α f(p) / α!` of a
//! smooth function around a base point `p`, for all multi-indices with
//! `|α| <= order`. Arithmetic on these values is exact up to truncation, so
//! composing closed-form expressions yields exact partial derivatives of the
//! result (to floating-point rounding), with no finite differencing.
//!
//! Monomials are stored in graded order: all degree-0 terms, then degree 1,
//! and so on. Truncating to a lower order is therefore a prefix operation.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Number of independent variables (chart coordinates).
pub const NVARS: usize = 4;

/// Highest supported truncation order.
pub const MAX_ORDER: usize = 6;

struct Tables {
    exps: Vec<[u8; NVARS]>,
    /// `count[d]` = number of monomials of degree `<= d`.
    count: [usize; MAX_ORDER + 1],
    lookup: Vec<u16>,
    /// Product triples `(i, j, k)` meaning `m_i * m_j = m_k`, sorted by `k`.
    products: Vec<(u16, u16, u16)>,
    /// `product_prefix[d]` = number of triples whose target has degree `<= d`.
    product_prefix: [usize; MAX_ORDER + 1],
    /// For each variable, `(src, dst, factor)` with `∂_v m_src = factor * m_dst`.
    derivs: [Vec<(u16, u16, f64)>; NVARS],
}

fn encode(e: &[u8; NVARS]) -> usize {
    e.iter().fold(0usize, |acc, &x| acc * (MAX_ORDER + 1) + x as usize)
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

fn build_tables() -> Tables {
    let mut exps = Vec::new();
    let mut count = [0usize; MAX_ORDER + 1];
    for d in 0..=MAX_ORDER {
        // lexicographic within a degree, first variable varies slowest
        let mut level = Vec::new();
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                for c in (0..=d - a - b).rev() {
                    let e = d - a - b - c;
                    level.push([a as u8, b as u8, c as u8, e as u8]);
                }
            }
        }
        exps.extend(level);
        count[d] = exps.len();
    }
    let mut lookup = vec![u16::MAX; (MAX_ORDER + 1).pow(NVARS as u32)];
    for (i, e) in exps.iter().enumerate() {
        lookup[encode(e)] = i as u16;
    }
    let degree = |e: &[u8; NVARS]| e.iter().map(|&x| x as usize).sum::<usize>();

    let mut products = Vec::new();
    for (i, a) in exps.iter().enumerate() {
        for (j, b) in exps.iter().enumerate() {
            if degree(a) + degree(b) > MAX_ORDER {
                continue;
            }
            let mut s = [0u8; NVARS];
            for v in 0..NVARS {
                s[v] = a[v] + b[v];
            }
            products.push((i as u16, j as u16, lookup[encode(&s)]));
        }
    }
    products.sort_by_key(|&(i, j, k)| (k, i, j));
    let mut product_prefix = [0usize; MAX_ORDER + 1];
    for d in 0..=MAX_ORDER {
        product_prefix[d] = products
            .iter()
            .take_while(|&&(_, _, k)| (k as usize) < count[d])
            .count();
    }

    let derivs = std::array::from_fn(|v| {
        let mut list = Vec::new();
        for (src, e) in exps.iter().enumerate() {
            if e[v] == 0 {
                continue;
            }
            let mut lower = *e;
            lower[v] -= 1;
            list.push((src as u16, lookup[encode(&lower)], e[v] as f64));
        }
        list
    });

    Tables {
        exps,
        count,
        lookup,
        products,
        product_prefix,
        derivs,
    }
}

/// Number of monomials of degree at most `order`.
pub fn monomial_count(order: usize) -> usize {
    tables().count[order]
}

/// Exponent tuple of the monomial with graded index `idx`.
pub fn exponents(idx: usize) -> [u8; NVARS] {
    tables().exps[idx]
}

/// Graded index of a multi-index, if within `MAX_ORDER`.
pub fn monomial_index(alpha: [u8; NVARS]) -> Option<usize> {
    if alpha.iter().map(|&x| x as usize).sum::<usize>() > MAX_ORDER {
        return None;
    }
    let i = tables().lookup[encode(&alpha)];
    (i != u16::MAX).then_some(i as usize)
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

/// Truncated Taylor polynomial in the four chart displacements.
#[derive(Clone, Debug, PartialEq)]
pub struct Taylor {
    order: usize,
    c: Vec<f64>,
}

impl Taylor {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "Taylor order {order} exceeds {MAX_ORDER}");
        let mut c = vec![0.0; monomial_count(order)];
        c[0] = value;
        Self { order, c }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate function `x_var` expanded around `x_var = value`.
    pub fn variable(var: usize, value: f64, order: usize) -> Self {
        let mut t = Self::constant(value, order);
        if order >= 1 {
            t.c[1 + var] = 1.0;
        }
        t
    }

    pub fn from_coeffs(order: usize, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), monomial_count(order));
        Self { order, c }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Coefficient of the monomial `x^alpha` (not multiplied by `alpha!`).
    pub fn coeff(&self, alpha: [u8; NVARS]) -> f64 {
        match monomial_index(alpha) {
            Some(i) if i < self.c.len() => self.c[i],
            _ => 0.0,
        }
    }

    /// Partial derivative `∂^alpha f` at the base point.
    pub fn derivative(&self, alpha: [u8; NVARS]) -> f64 {
        self.coeff(alpha) * alpha.iter().map(|&a| factorial(a)).product::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Self {
            order,
            c: self.c[..monomial_count(order)].to_vec(),
        }
    }

    /// `∂f/∂x_var` as a Taylor value one order lower. Order-0 input is an error
    /// in the caller; it is rejected here with a panic.
    pub fn partial(&self, var: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 Taylor value");
        let order = self.order - 1;
        let n = monomial_count(order);
        let mut c = vec![0.0; n];
        for &(src, dst, f) in &tables().derivs[var] {
            let (src, dst) = (src as usize, dst as usize);
            if dst < n {
                c[dst] = f * self.c[src];
            }
        }
        Self { order, c }
    }

    /// Evaluate the polynomial at a displacement from the base point.
    pub fn eval(&self, dx: [f64; NVARS]) -> f64 {
        let t = tables();
        self.c
            .iter()
            .enumerate()
            .map(|(i, &ci)| {
                let e = t.exps[i];
                ci * (0..NVARS).map(|v| dx[v].powi(e[v] as i32)).product::<f64>()
            })
            .sum()
    }

    /// Substitute `x_v - p_v = disp[v]` where every `disp[v]` has zero constant
    /// term. Used for pullbacks: the result is the expansion of `f ∘ φ`.
    pub fn compose(&self, disp: &[Taylor; NVARS]) -> Taylor {
        let order = disp.iter().map(Taylor::order).min().unwrap().min(self.order);
        let t = tables();
        let mut powers: Vec<Vec<Taylor>> = Vec::with_capacity(NVARS);
        for d in disp {
            debug_assert!(d.value() == 0.0, "compose expects zero-constant displacements");
            let d = d.truncate(order);
            let mut p = vec![Taylor::constant(1.0, order)];
            for k in 1..=order {
                let next = &p[k - 1] * &d;
                p.push(next);
            }
            powers.push(p);
        }
        let mut out = Taylor::zero(order);
        for (i, &ci) in self.c.iter().enumerate().take(monomial_count(order)) {
            if ci == 0.0 {
                continue;
            }
            let e = t.exps[i];
            let mut term = powers[0][e[0] as usize].clone();
            for v in 1..NVARS {
                if e[v] > 0 {
                    term = &term * &powers[v][e[v] as usize];
                }
            }
            out.axpy(ci, &term);
        }
        out
    }

    /// `self += a * x`, truncated to the common order.
    pub fn axpy(&mut self, a: f64, x: &Taylor) {
        if x.order < self.order {
            self.c.truncate(x.c.len());
            self.order = x.order;
        }
        for (s, xi) in self.c.iter_mut().zip(&x.c) {
            *s += a * xi;
        }
    }

    pub fn scale(&self, a: f64) -> Taylor {
        Taylor {
            order: self.order,
            c: self.c.iter().map(|x| a * x).collect(),
        }
    }

    /// Apply a univariate function given its Taylor coefficients around the
    /// constant term (`u[k] = f^(k)(a0) / k!`).
    fn apply_series(&self, u: &[f64]) -> Taylor {
        let mut d = self.clone();
        d.c[0] = 0.0;
        let mut acc = Taylor::constant(u[self.order], self.order);
        for k in (0..self.order).rev() {
            acc = &acc * &d;
            acc.c[0] += u[k];
        }
        acc
    }

    pub fn recip(&self) -> Taylor {
        let a0 = self.value();
        let u: Vec<f64> = (0..=self.order)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a0.powi(k as i32 + 1))
            .collect();
        self.apply_series(&u)
    }

    /// Real power `self^p`; the constant term must be positive unless `p` is
    /// a non-negative integer.
    pub fn powf(&self, p: f64) -> Taylor {
        let a0 = self.value();
        let mut u = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            u.push(binom * a0.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.apply_series(&u)
    }

    pub fn sqrt(&self) -> Taylor {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Taylor {
        let e = self.value().exp();
        let u: Vec<f64> = (0..=self.order).map(|k| e / factorial(k as u8)).collect();
        self.apply_series(&u)
    }

    pub fn ln(&self) -> Taylor {
        let a0 = self.value();
        let u: Vec<f64> = (0..=self.order)
            .map(|k| match k {
                0 => a0.ln(),
                _ => {
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s / (k as f64 * a0.powi(k as i32))
                }
            })
            .collect();
        self.apply_series(&u)
    }

    pub fn sin(&self) -> Taylor {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let u: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / factorial(k as u8)).collect();
        self.apply_series(&u)
    }

    pub fn cos(&self) -> Taylor {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let u: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / factorial(k as u8)).collect();
        self.apply_series(&u)
    }

    pub fn square(&self) -> Taylor {
        self * self
    }
}

impl<'a> Mul<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        let order = self.order.min(rhs.order);
        if order == 0 {
            return Taylor {
                order,
                c: vec![self.c[0] * rhs.c[0]],
            };
        }
        let t = tables();
        let mut c = vec![0.0; t.count[order]];
        for &(i, j, k) in &t.products[..t.product_prefix[order]] {
            c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        Taylor { order, c }
    }
}

impl<'a> Add<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        let order = self.order.min(rhs.order);
        let n = monomial_count(order);
        Taylor {
            order,
            c: (0..n).map(|i| self.c[i] + rhs.c[i]).collect(),
        }
    }
}

impl<'a> Sub<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        let order = self.order.min(rhs.order);
        let n = monomial_count(order);
        Taylor {
            order,
            c: (0..n).map(|i| self.c[i] - rhs.c[i]).collect(),
        }
    }
}

impl<'a> Div<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn div(self, rhs: &Taylor) -> Taylor {
        self * &rhs.recip()
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(mut self) -> Taylor {
        self.c.iter_mut().for_each(|x| *x = -*x);
        self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Taylor> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: &Taylor) -> Taylor {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Taylor> for &'a Taylor {
            type Output = Taylor;
            fn $m(self, rhs: Taylor) -> Taylor {
                self.$m(&rhs)
            }
        }
        impl $tr<f64> for &Taylor {
            type Output = Taylor;
            fn $m(self, rhs: f64) -> Taylor {
                self.$m(&Taylor::constant(rhs, self.order))
            }
        }
        impl $tr<f64> for Taylor {
            type Output = Taylor;
            fn $m(self, rhs: f64) -> Taylor {
                (&self).$m(&Taylor::constant(rhs, self.order))
            }
        }
    };
}

forward_owned!(Mul, mul);
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Div, div);

impl Mul<&Taylor> for f64 {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        rhs.scale(self)
    }
}

impl Mul<Taylor> for f64 {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        rhs.scale(self)
    }
}

impl AddAssign<&Taylor> for Taylor {
    fn add_assign(&mut self, rhs: &Taylor) {
        self.axpy(1.0, rhs);
    }
}

impl AddAssign<Taylor> for Taylor {
    fn add_assign(&mut self, rhs: Taylor) {
        self.axpy(1.0, &rhs);
    }
}

impl SubAssign<&Taylor> for Taylor {
    fn sub_assign(&mut self, rhs: &Taylor) {
        self.axpy(-1.0, rhs);
    }
}

impl SubAssign<Taylor> for Taylor {
    fn sub_assign(&mut self, rhs: Taylor) {
        self.axpy(-1.0, &rhs);
    }
}

impl MulAssign<f64> for Taylor {
    fn mul_assign(&mut self, rhs: f64) {
        self.c.iter_mut().for_each(|x| *x *= rhs);
    }
}

/// Coordinate functions `x_v` expanded around `p`.
pub fn coordinates(p: [f64; NVARS], order: usize) -> [Taylor; NVARS] {
    std::array::from_fn(|v| Taylor::variable(v, p[v], order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn table_sizes() {
        assert_eq!(monomial_count(0), 1);
        assert_eq!(monomial_count(1), 5);
        assert_eq!(monomial_count(4), 70);
        assert_eq!(monomial_count(6), 210);
        // pairs with total degree <= 6 in 4 vars = monomials of degree <= 6 in 8 vars
        assert_eq!(tables().products.len(), 3003);
    }

    #[test]
    fn univariate_series() {
        let x = Taylor::variable(0, 0.0, 4);
        let e = x.exp();
        assert_relative_eq!(e.coeff([3, 0, 0, 0]), 1.0 / 6.0, epsilon = 1e-15);
        let s = x.sin();
        assert_relative_eq!(s.coeff([3, 0, 0, 0]), -1.0 / 6.0, epsilon = 1e-15);
        let one_minus = Taylor::constant(1.0, 4) - &x;
        let g = one_minus.recip();
        for k in 0..=4u8 {
            assert_relative_eq!(g.coeff([k, 0, 0, 0]), 1.0, epsilon = 1e-14);
        }
        let l = (Taylor::constant(1.0, 4) + &x).ln();
        assert_relative_eq!(l.coeff([4, 0, 0, 0]), -0.25, epsilon = 1e-15);
    }

    #[test]
    fn mixed_partials_of_product() {
        // f = x^2 y sin(z) at (1, 2, 0.3, 0)
        let [x, y, z, _] = coordinates([1.0, 2.0, 0.3, 0.0], 4);
        let f = &(&x * &x) * &(&y * &z.sin());
        assert_relative_eq!(f.value(), 2.0 * 0.3f64.sin(), epsilon = 1e-14);
        // ∂x∂y∂z f = 2x cos z
        assert_relative_eq!(f.derivative([1, 1, 1, 0]), 2.0 * 0.3f64.cos(), epsilon = 1e-13);
        // ∂x^2 ∂z^2 f = -2 y sin z
        assert_relative_eq!(f.derivative([2, 0, 2, 0]), -4.0 * 0.3f64.sin(), epsilon = 1e-13);
    }

    #[test]
    fn partial_matches_derivative_table() {
        let [x, y, _, w] = coordinates([0.7, -0.2, 0.0, 1.3], 5);
        let f = (&(&x * &y) + &w.cos()).powf(1.5);
        let fx = f.partial(0);
        assert_eq!(fx.order(), 4);
        assert_relative_eq!(
            fx.derivative([1, 2, 0, 1]),
            f.derivative([2, 2, 0, 1]),
            max_relative = 1e-12
        );
    }

    #[test]
    fn compose_identity_is_exact() {
        let [x, y, z, w] = coordinates([0.4, 0.1, -0.3, 2.0], 5);
        let f = &(&x * &y.exp()) + &(&z * &w).sin();
        let disp = std::array::from_fn(|v| Taylor::variable(v, 0.0, 5));
        assert_eq!(f.compose(&disp), f);
    }

    #[test]
    fn compose_chain_rule() {
        // f(u) = u^3 around u = 0 composed with u = sin(x) - sin(x0)
        let x0 = 0.4;
        let u = Taylor::variable(0, 0.0, 4);
        let f = &(&u * &u) * &u;
        let x = Taylor::variable(0, x0, 4);
        let d = x.sin() - x0.sin();
        let disp = [d, Taylor::zero(4), Taylor::zero(4), Taylor::zero(4)];
        let g = f.compose(&disp);
        let direct = {
            let t = x.sin() - x0.sin();
            &(&t * &t) * &t
        };
        for (a, b) in g.coeffs().iter().zip(direct.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14);
        }
    }
}
