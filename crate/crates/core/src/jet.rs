//! Truncated multivariate Taylor numbers in the four chart coordinates.
//!
//! A `Jet<N>` stores the Taylor coefficients of a function of four variables
//! around a base point, truncated at total degree `K`, where `N` is the number
//! of monomials of degree `<= K` in four variables:
//!
//! | K | N  |
//! |---|----|
//! | 0 | 1  |
//! | 1 | 5  |
//! | 2 | 15 |
//! | 3 | 35 |
//! | 4 | 70 |
//!
//! Monomials are stored in graded order, so the coefficients of a lower order
//! form a prefix and truncation is a copy.

use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};
use std::sync::OnceLock;

use num_traits::{Num, One, Zero};

use crate::scalar::Real;

/// Number of coordinates a jet is expanded in.
pub const VARS: usize = 4;

/// Order-1 jet (value and gradient).
pub type Jet1 = Jet<5>;
/// Order-2 jet (value, gradient, Hessian).
pub type Jet2 = Jet<15>;
/// Order-3 jet.
pub type Jet3 = Jet<35>;
/// Order-4 jet.
pub type Jet4 = Jet<70>;

pub(crate) struct Tables {
    pub order: usize,
    pub exps: Vec<[u8; VARS]>,
    #[allow(dead_code)]
    pub degree: Vec<usize>,
    /// Product of factorials of the exponents (derivative = coeff * this).
    pub fact: Vec<f64>,
}

impl Tables {
    fn build(order: usize) -> Tables {
        let mut exps = Vec::new();
        for d in 0..=order {
            // graded, lexicographic inside a degree
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    for c in (0..=d - a - b).rev() {
                        let e = d - a - b - c;
                        exps.push([a as u8, b as u8, c as u8, e as u8]);
                    }
                }
            }
        }
        let degree: Vec<usize> = exps.iter().map(|e| e.iter().map(|&v| v as usize).sum()).collect();
        let fact = exps
            .iter()
            .map(|e| e.iter().map(|&v| (1..=v as u32).product::<u32>() as f64).product())
            .collect();
        Tables { order, exps, degree, fact }
    }

    fn index_of(&self, e: [u8; VARS]) -> Option<usize> {
        self.exps.iter().position(|x| *x == e)
    }
}

pub(crate) fn tables(n: usize) -> &'static Tables {
    macro_rules! cached {
        ($order:expr) => {{
            static T: OnceLock<Tables> = OnceLock::new();
            T.get_or_init(|| Tables::build($order))
        }};
    }
    match n {
        1 => cached!(0),
        5 => cached!(1),
        15 => cached!(2),
        35 => cached!(3),
        70 => cached!(4),
        _ => panic!("unsupported jet size {n}; use 1, 5, 15, 35 or 70 coefficients"),
    }
}

const fn monomials<const N: usize>(order: usize) -> [[u8; VARS]; N] {
    let mut out = [[0u8; VARS]; N];
    let mut n = 0;
    let mut d = 0;
    while d <= order {
        let mut a = d as isize;
        while a >= 0 {
            let mut b = (d as isize) - a;
            while b >= 0 {
                let mut c = (d as isize) - a - b;
                while c >= 0 {
                    let e = (d as isize) - a - b - c;
                    out[n] = [a as u8, b as u8, c as u8, e as u8];
                    n += 1;
                    c -= 1;
                }
                b -= 1;
            }
            a -= 1;
        }
        d += 1;
    }
    out
}

const fn divides(i: &[u8; VARS], k: &[u8; VARS]) -> bool {
    i[0] <= k[0] && i[1] <= k[1] && i[2] <= k[2] && i[3] <= k[3]
}

const fn same(a: &[u8; VARS], b: &[u8; VARS]) -> bool {
    a[0] == b[0] && a[1] == b[1] && a[2] == b[2] && a[3] == b[3]
}

/// Calls `f(k, i, j)` for every pair of monomials with `e_i e_j = e_k`,
/// grouped by `k`.
macro_rules! for_each_pair {
    ($e:expr, $n:expr, |$k:ident, $i:ident, $j:ident| $body:block) => {{
        let e = $e;
        let mut $k = 0;
        while $k < $n {
            let mut $i = 0;
            while $i < $n {
                if divides(&e[$i], &e[$k]) {
                    let rest = [e[$k][0] - e[$i][0], e[$k][1] - e[$i][1], e[$k][2] - e[$i][2], e[$k][3] - e[$i][3]];
                    let mut $j = 0;
                    while $j < $n {
                        if same(&e[$j], &rest) {
                            $body
                        }
                        $j += 1;
                    }
                }
                $i += 1;
            }
            $k += 1;
        }
    }};
}

const fn pair_count<const N: usize>(e: &[[u8; VARS]; N]) -> usize {
    let mut p = 0;
    for_each_pair!(e, N, |_k, _i, _j| { p += 1; });
    p
}

/// Product pairs grouped by output and the group offsets (`starts[N]` is
/// the total).
const fn pair_table<const N: usize, const P: usize>(e: &[[u8; VARS]; N]) -> ([(u8, u8); P], [u16; 71]) {
    let mut pairs = [(0u8, 0u8); P];
    let mut starts = [0u16; 71];
    let mut p = 0;
    for_each_pair!(e, N, |k, i, j| {
        pairs[p] = (i as u8, j as u8);
        p += 1;
        starts[k + 1] = p as u16;
    });
    (pairs, starts)
}

macro_rules! fixed_table {
    ($m:ident, $n:expr, $order:expr) => {
        mod $m {
            use super::*;
            const E: [[u8; VARS]; $n] = monomials::<$n>($order);
            const P: usize = pair_count(&E);
            const T: ([(u8, u8); P], [u16; 71]) = pair_table::<$n, P>(&E);
            pub const PAIRS: [(u8, u8); P] = T.0;
            pub const STARTS: [u16; 71] = T.1;

            #[inline]
            pub fn mul(a: &[f64], b: &[f64], out: &mut [f64]) {
                let a: &[f64; $n] = a.try_into().unwrap();
                let b: &[f64; $n] = b.try_into().unwrap();
                let out: &mut [f64; $n] = out.try_into().unwrap();
                for k in 0..$n {
                    let mut acc = 0.0;
                    let mut p = STARTS[k] as usize;
                    let end = STARTS[k + 1] as usize;
                    while p < end {
                        let (i, j) = PAIRS[p];
                        acc += a[i as usize] * b[j as usize];
                        p += 1;
                    }
                    out[k] = acc;
                }
            }
        }
    };
}

fixed_table!(fixed1, 5, 1);
fixed_table!(fixed2, 15, 2);
fixed_table!(fixed3, 35, 3);
fixed_table!(fixed4, 70, 4);

/// Truncated Taylor expansion in the four chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    c: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet { c }
    }

    /// The coordinate function `base + (x^var - x0^var)`.
    pub fn variable(base: f64, var: usize) -> Self {
        let mut j = Self::constant(base);
        if N > 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Seeds a point: each coordinate becomes an independent variable.
    pub fn seed_point(p: &[f64; VARS]) -> [Self; VARS] {
        std::array::from_fn(|i| Self::variable(p[i], i))
    }

    pub fn order() -> usize {
        tables(N).order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64; N] {
        &self.c
    }

    pub fn from_coeffs(c: [f64; N]) -> Self {
        Jet { c }
    }

    /// Taylor coefficient of the monomial with exponents `e`.
    pub fn coeff(&self, e: [u8; VARS]) -> f64 {
        tables(N).index_of(e).map(|i| self.c[i]).unwrap_or(0.0)
    }

    /// Partial derivative of multi-index `e` at the base point.
    pub fn derivative(&self, e: [u8; VARS]) -> f64 {
        let t = tables(N);
        t.index_of(e).map(|i| self.c[i] * t.fact[i]).unwrap_or(0.0)
    }

    pub fn gradient(&self) -> [f64; VARS] {
        let mut g = [0.0; VARS];
        for (a, ga) in g.iter_mut().enumerate() {
            let mut e = [0u8; VARS];
            e[a] = 1;
            *ga = self.derivative(e);
        }
        g
    }

    pub fn hessian(&self) -> [[f64; VARS]; VARS] {
        let mut h = [[0.0; VARS]; VARS];
        for a in 0..VARS {
            for b in 0..VARS {
                let mut e = [0u8; VARS];
                e[a] += 1;
                e[b] += 1;
                h[a][b] = self.derivative(e);
            }
        }
        h
    }

    /// Keeps the monomials of the smaller jet type.
    pub fn truncate<const M: usize>(&self) -> Jet<M> {
        assert!(M <= N);
        let mut c = [0.0; M];
        c.copy_from_slice(&self.c[..M]);
        Jet { c }
    }

    /// Embeds into a larger jet type with zero higher coefficients.
    pub fn extend<const M: usize>(&self) -> Jet<M> {
        assert!(M >= N);
        let mut c = [0.0; M];
        c[..N].copy_from_slice(&self.c);
        Jet { c }
    }

    /// `∂/∂x^var`. The top-degree coefficients of the result are zero, so it
    /// is exact only as a jet of one order less.
    pub fn partial(&self, var: usize) -> Self {
        let t = tables(N);
        let mut out = [0.0; N];
        for (i, e) in t.exps.iter().enumerate() {
            if e[var] == 0 {
                continue;
            }
            let mut lower = *e;
            lower[var] -= 1;
            let k = t.index_of(lower).expect("lower monomial");
            out[k] += self.c[i] * e[var] as f64;
        }
        Jet { c: out }
    }

    /// Substitutes `x^i - x0^i = subs[i]` where every `subs[i]` has zero
    /// constant term.
    pub fn compose(&self, subs: &[Self; VARS]) -> Self {
        let t = tables(N);
        let k = t.order;
        // powers[v][p] = subs[v]^p
        let mut powers = vec![[Self::one(); VARS]; k + 1];
        for p in 1..=k {
            for v in 0..VARS {
                powers[p][v] = powers[p - 1][v] * subs[v];
            }
        }
        let mut out = Self::zero();
        for (i, e) in t.exps.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            let mut term = Self::constant(self.c[i]);
            for v in 0..VARS {
                if e[v] > 0 {
                    term = term * powers[e[v] as usize][v];
                }
            }
            out += term;
        }
        out
    }

    /// Applies a univariate function given its Taylor coefficients
    /// `f(a + h) = Σ series[k] h^k` around the primal value `a`.
    fn apply_series(&self, series: &[f64]) -> Self {
        let mut h = *self;
        h.c[0] = 0.0;
        let k = tables(N).order.min(series.len() - 1);
        let mut r = Self::constant(series[k]);
        for i in (0..k).rev() {
            r = r * h;
            r.c[0] += series[i];
        }
        r
    }

    fn series_len() -> usize {
        tables(N).order + 1
    }
}

impl<const N: usize> Default for Jet<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> Zero for Jet<N> {
    fn zero() -> Self {
        Jet { c: [0.0; N] }
    }
    fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }
}

impl<const N: usize> One for Jet<N> {
    fn one() -> Self {
        Self::constant(1.0)
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            self.c[i] += rhs.c[i];
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            self.c[i] -= rhs.c[i];
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        for v in self.c.iter_mut() {
            *v = -*v;
        }
        self
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if N == 1 {
            return Self::constant(self.c[0] * rhs.c[0]);
        }
        let mut out = [0.0; N];
        match N {
            5 => fixed1::mul(&self.c, &rhs.c, &mut out),
            15 => fixed2::mul(&self.c, &rhs.c, &mut out),
            35 => fixed3::mul(&self.c, &rhs.c, &mut out),
            _ => fixed4::mul(&self.c, &rhs.c, &mut out),
        }
        Jet { c: out }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        self * Real::recip(rhs)
    }
}

impl<const N: usize> Rem for Jet<N> {
    type Output = Self;
    /// Remainder with respect to the truncated primal quotient.
    fn rem(self, rhs: Self) -> Self {
        let q = (self.c[0] / rhs.c[0]).trunc();
        self - rhs * Self::constant(q)
    }
}

macro_rules! assign_op {
    ($tr:ident, $f:ident, $op:tt) => {
        impl<const N: usize> $tr for Jet<N> {
            #[inline]
            fn $f(&mut self, rhs: Self) {
                *self = *self $op rhs;
            }
        }
    };
}
assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);
assign_op!(DivAssign, div_assign, /);
assign_op!(RemAssign, rem_assign, %);

impl<const N: usize> Num for Jet<N> {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(Self::constant)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

const fn order_of(n: usize) -> usize {
    match n {
        1 => 0,
        5 => 1,
        15 => 2,
        35 => 3,
        70 => 4,
        _ => panic!("unsupported jet size"),
    }
}

impl<const N: usize> Real for Jet<N> {
    const ORDER: usize = order_of(N);

    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn re(&self) -> f64 {
        self.c[0]
    }
    fn exp(self) -> Self {
        let e = self.c[0].exp();
        let s: Vec<f64> = (0..Self::series_len()).map(|k| e / factorial(k)).collect();
        self.apply_series(&s)
    }
    fn ln(self) -> Self {
        let a = self.c[0];
        let s: Vec<f64> = (0..Self::series_len())
            .map(|k| {
                if k == 0 {
                    a.ln()
                } else {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (k as f64 * a.powi(k as i32))
                }
            })
            .collect();
        self.apply_series(&s)
    }
    fn sin(self) -> Self {
        let (s0, c0) = self.c[0].sin_cos();
        let cycle = [s0, c0, -s0, -c0];
        let s: Vec<f64> = (0..Self::series_len()).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.apply_series(&s)
    }
    fn cos(self) -> Self {
        let (s0, c0) = self.c[0].sin_cos();
        let cycle = [c0, -s0, -c0, s0];
        let s: Vec<f64> = (0..Self::series_len()).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.apply_series(&s)
    }
    fn sinh(self) -> Self {
        let (sh, ch) = (self.c[0].sinh(), self.c[0].cosh());
        let s: Vec<f64> = (0..Self::series_len())
            .map(|k| if k % 2 == 0 { sh } else { ch } / factorial(k))
            .collect();
        self.apply_series(&s)
    }
    fn cosh(self) -> Self {
        let (sh, ch) = (self.c[0].sinh(), self.c[0].cosh());
        let s: Vec<f64> = (0..Self::series_len())
            .map(|k| if k % 2 == 0 { ch } else { sh } / factorial(k))
            .collect();
        self.apply_series(&s)
    }
    fn sqrt(self) -> Self {
        let a = self.c[0];
        // binom(1/2, k) a^(1/2 - k)
        let mut s = Vec::with_capacity(Self::series_len());
        let mut binom = 1.0;
        for k in 0..Self::series_len() {
            if k > 0 {
                binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
            }
            s.push(binom * a.powf(0.5 - k as f64));
        }
        self.apply_series(&s)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let mut base = if n < 0 { Real::recip(self) } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
    fn recip(self) -> Self {
        let a = self.c[0];
        let s: Vec<f64> = (0..Self::series_len())
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / a.powi(k as i32 + 1))
            .collect();
        self.apply_series(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        assert_eq!(tables(5).exps.len(), 5);
        assert_eq!(tables(15).exps.len(), 15);
        assert_eq!(tables(35).exps.len(), 35);
        assert_eq!(tables(70).exps.len(), 70);
        assert_eq!(fixed4::PAIRS.len(), 495);
        assert_eq!(monomials::<70>(4).to_vec(), tables(70).exps);
        assert_eq!(monomials::<15>(2).to_vec(), tables(15).exps);
    }

    #[test]
    fn derivatives_of_product_and_exp() {
        let x = Jet4::seed_point(&[0.3, -0.2, 0.5, 0.1]);
        let f = x[0] * x[1].exp() + (x[2] * x[3]).sin();
        // ∂0∂1 f = e^{x1}
        assert!((f.derivative([1, 1, 0, 0]) - (-0.2f64).exp()).abs() < 1e-14);
        // ∂1^4 f = x0 e^{x1}
        assert!((f.derivative([0, 4, 0, 0]) - 0.3 * (-0.2f64).exp()).abs() < 1e-13);
        // ∂2∂3 sin(x2 x3) = cos(x2x3) - x2 x3 sin(x2 x3)
        let p: f64 = 0.5 * 0.1;
        assert!((f.derivative([0, 0, 1, 1]) - (p.cos() - p * p.sin())).abs() < 1e-14);
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let h = 1e-4;
        let fs: Vec<(fn(Jet2) -> Jet2, fn(f64) -> f64)> = vec![
            (|x| x.ln(), f64::ln),
            (|x| x.sqrt(), f64::sqrt),
            (|x| x.cosh(), f64::cosh),
            (|x| x.sinh(), f64::sinh),
            (|x| x.cos(), f64::cos),
            (|x| x.powi(-3), |x| x.powi(-3)),
            (|x| Real::recip(x), |x| 1.0 / x),
        ];
        for (fj, ff) in fs {
            let a = 0.7;
            let j = fj(Jet2::variable(a, 0));
            let d2 = (ff(a + h) - 2.0 * ff(a) + ff(a - h)) / (h * h);
            assert!((j.derivative([2, 0, 0, 0]) - d2).abs() < 1e-5);
        }
    }

    #[test]
    fn composition_matches_direct_evaluation() {
        let x = Jet3::seed_point(&[0.0; 4]);
        let f = x[0] * x[0] + x[1] * x[2] * x[3] + x[3];
        let subs = [x[1] * 2.0f64.into_jet(), x[0] + x[1], x[2] * x[2], x[3] - x[0]];
        let direct = subs[0] * subs[0] + subs[1] * subs[2] * subs[3] + subs[3];
        let composed = f.compose(&subs);
        for (a, b) in direct.coeffs().iter().zip(composed.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    trait IntoJet {
        fn into_jet(self) -> Jet3;
    }
    impl IntoJet for f64 {
        fn into_jet(self) -> Jet3 {
            Jet3::constant(self)
        }
    }
}
