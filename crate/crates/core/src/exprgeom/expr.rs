//! Expression trees over the chart coordinates `x0..x3`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub(crate) fn apply<T: Real>(self, v: T) -> Result<T> {
        let r = v.re();
        match self {
            Func::Log if r <= 0.0 => return Err(Error::Domain(format!("log of non-positive value {r}"))),
            Func::Sqrt if r < 0.0 => return Err(Error::Domain(format!("sqrt of negative value {r}"))),
            _ => {}
        }
        Ok(match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Sqrt => v.sqrt(),
        })
    }
}

/// Abstract syntax tree. Children are shared, so cloning is cheap and
/// symbolic derivatives reuse the subtrees of their input.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(u8),
    /// Named catalog parameter with its bound value.
    Param(Arc<str>, f64),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Func(Func, Arc<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        assert!(i < 4, "only x0..x3 exist");
        Expr::Var(i as u8)
    }

    pub fn param(name: &str, value: f64) -> Expr {
        Expr::Param(Arc::from(name), value)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    fn is_num(&self, v: f64) -> bool {
        self.as_num() == Some(v)
    }

    // Smart constructors fold constants and drop neutral elements so that
    // repeated differentiation stays small.

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => (*inner).clone(),
            a => Expr::Neg(Arc::new(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
            _ if a.is_num(0.0) => b,
            _ if b.is_num(0.0) => a,
            (_, Expr::Neg(inner)) => Expr::sub(a.clone(), (**inner).clone()),
            _ => Expr::Add(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
            _ if b.is_num(0.0) => a,
            _ if a.is_num(0.0) => Expr::neg(b),
            (_, Expr::Neg(inner)) => Expr::add(a.clone(), (**inner).clone()),
            _ => Expr::Sub(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
            _ if a.is_num(0.0) || b.is_num(0.0) => Expr::Num(0.0),
            _ if a.is_num(1.0) => b,
            _ if b.is_num(1.0) => a,
            _ if a.is_num(-1.0) => Expr::neg(b),
            _ if b.is_num(-1.0) => Expr::neg(a),
            (Expr::Neg(x), _) => Expr::neg(Expr::mul((**x).clone(), b.clone())),
            (_, Expr::Neg(y)) => Expr::neg(Expr::mul(a.clone(), (**y).clone())),
            // keep numeric factors on the left
            (_, Expr::Num(_)) => Expr::Mul(Arc::new(b), Arc::new(a)),
            _ => Expr::Mul(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Num(x), Expr::Num(y)) if *y != 0.0 => Expr::Num(x / y),
            _ if a.is_num(0.0) && !b.is_num(0.0) => Expr::Num(0.0),
            _ if b.is_num(1.0) => a,
            _ => Expr::Div(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        match (&a, n) {
            (_, 0) => Expr::Num(1.0),
            (_, 1) => a,
            (Expr::Num(x), _) if *x != 0.0 || n > 0 => Expr::Num(x.powi(n)),
            (Expr::Pow(inner, m), _) => Expr::pow((**inner).clone(), m * n),
            _ => Expr::Pow(Arc::new(a), n),
        }
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        match (f, &a) {
            (Func::Exp, Expr::Num(0.0)) => Expr::Num(1.0),
            (Func::Log, Expr::Num(x)) if *x == 1.0 => Expr::Num(0.0),
            _ => Expr::Func(f, Arc::new(a)),
        }
    }

    /// Evaluates the tree at a chart point.
    pub fn eval<T: Real>(&self, x: &[T; 4]) -> Result<T> {
        let v = match self {
            Expr::Num(v) => T::from_f64(*v),
            Expr::Var(i) => x[*i as usize],
            Expr::Param(_, v) => T::from_f64(*v),
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let d = b.eval(x)?;
                if d.re() == 0.0 {
                    return Err(Error::Domain("division by zero".into()));
                }
                a.eval(x)? / d
            }
            Expr::Pow(a, n) => {
                let base = a.eval(x)?;
                if *n < 0 && base.re() == 0.0 {
                    return Err(Error::Domain("negative power of zero".into()));
                }
                base.powi(*n)
            }
            Expr::Func(f, a) => f.apply(a.eval(x)?)?,
        };
        if !v.re().is_finite() {
            return Err(Error::Domain("non-finite value".into()));
        }
        Ok(v)
    }

    pub fn eval_f64(&self, x: &[f64; 4]) -> Result<f64> {
        self.eval(x)
    }

    /// Symbolic partial derivative with respect to `x^var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) | Expr::Param(..) => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i as usize == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.diff(var)),
            Expr::Add(a, b) => Expr::add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => Expr::sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(var), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                if db.is_num(0.0) {
                    Expr::div(da, (**b).clone())
                } else {
                    Expr::div(
                        Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                        Expr::pow((**b).clone(), 2),
                    )
                }
            }
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::Num(*n as f64), Expr::pow((**a).clone(), n - 1)),
                a.diff(var),
            ),
            Expr::Func(f, a) => {
                let da = a.diff(var);
                if da.is_num(0.0) {
                    return Expr::Num(0.0);
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Log => return Expr::div(da, inner),
                    Func::Sin => Expr::func(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, inner)),
                    Func::Sinh => Expr::func(Func::Cosh, inner),
                    Func::Cosh => Expr::func(Func::Sinh, inner),
                    Func::Sqrt => return Expr::div(da, Expr::mul(Expr::Num(2.0), self.clone())),
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Mixed partial derivative for a multi-index of variables.
    pub fn diff_multi(&self, vars: &[usize]) -> Expr {
        vars.iter().fold(self.clone(), |e, &v| e.diff(v))
    }

    /// Replaces every variable `x^i` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr; 4]) -> Expr {
        match self {
            Expr::Num(_) | Expr::Param(..) => self.clone(),
            Expr::Var(i) => subs[*i as usize].clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(subs)),
            Expr::Add(a, b) => Expr::add(a.substitute(subs), b.substitute(subs)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(subs), b.substitute(subs)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(subs), b.substitute(subs)),
            Expr::Div(a, b) => Expr::div(a.substitute(subs), b.substitute(subs)),
            Expr::Pow(a, n) => Expr::pow(a.substitute(subs), *n),
            Expr::Func(f, a) => Expr::func(*f, a.substitute(subs)),
        }
    }

    /// Node count, used to keep an eye on derivative blow-up.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Param(..) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Prints in the catalog grammar; `parse(print(e))` evaluates like `e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "-{:?}", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Param(name, _) => write!(f, "{name}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 4)
            }
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 3)
            }
            Expr::Pow(a, n) => {
                write_child(f, a, 5)?;
                write!(f, "^{n}")
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_rule_on_exp() {
        let e = Expr::func(Func::Exp, Expr::mul(Expr::num(2.0), Expr::var(0)));
        let d = e.diff(0);
        assert_eq!(d.eval_f64(&[0.0; 4]).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors_are_reported() {
        let log = Expr::func(Func::Log, Expr::var(1));
        assert!(matches!(log.eval_f64(&[0.0, -1.0, 0.0, 0.0]), Err(Error::Domain(_))));
        let inv = Expr::div(Expr::num(1.0), Expr::var(2));
        assert!(matches!(inv.eval_f64(&[0.0; 4]), Err(Error::Domain(_))));
    }

    #[test]
    fn constants_fold() {
        let e = Expr::add(Expr::mul(Expr::num(0.0), Expr::var(0)), Expr::num(3.0));
        assert_eq!(e, Expr::Num(3.0));
    }
}
