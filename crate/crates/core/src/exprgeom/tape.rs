//! Straight-line evaluation of several expressions with shared
//! subexpressions, used for metric derivative bundles.

use std::collections::HashMap;

use super::expr::{Expr, Func};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Const(f64),
    Var(u8),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, i32),
    Func(Func, u32),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var(u8),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, i32),
    Func(Func, u32),
}

impl Op {
    fn key(&self) -> Key {
        match *self {
            Op::Const(v) => Key::Const(v.to_bits()),
            Op::Var(i) => Key::Var(i),
            Op::Neg(a) => Key::Neg(a),
            // commutative ops are keyed with sorted operands
            Op::Add(a, b) => Key::Add(a.min(b), a.max(b)),
            Op::Sub(a, b) => Key::Sub(a, b),
            Op::Mul(a, b) => Key::Mul(a.min(b), a.max(b)),
            Op::Div(a, b) => Key::Div(a, b),
            Op::Pow(a, n) => Key::Pow(a, n),
            Op::Func(f, a) => Key::Func(f, a),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
}

struct Builder {
    ops: Vec<Op>,
    dedup: HashMap<Key, u32>,
    by_node: HashMap<*const Expr, u32>,
}

impl Builder {
    fn push(&mut self, op: Op) -> u32 {
        let key = op.key();
        if let Some(&r) = self.dedup.get(&key) {
            return r;
        }
        let r = self.ops.len() as u32;
        self.ops.push(op);
        self.dedup.insert(key, r);
        r
    }

    fn emit(&mut self, e: &Expr) -> u32 {
        let ptr = e as *const Expr;
        if let Some(&r) = self.by_node.get(&ptr) {
            return r;
        }
        let op = match e {
            Expr::Num(v) => Op::Const(*v),
            Expr::Param(_, v) => Op::Const(*v),
            Expr::Var(i) => Op::Var(*i),
            Expr::Neg(a) => Op::Neg(self.emit(a)),
            Expr::Add(a, b) => Op::Add(self.emit(a), self.emit(b)),
            Expr::Sub(a, b) => Op::Sub(self.emit(a), self.emit(b)),
            Expr::Mul(a, b) => Op::Mul(self.emit(a), self.emit(b)),
            Expr::Div(a, b) => Op::Div(self.emit(a), self.emit(b)),
            Expr::Pow(a, n) => Op::Pow(self.emit(a), *n),
            Expr::Func(f, a) => Op::Func(*f, self.emit(a)),
        };
        let r = self.push(op);
        self.by_node.insert(ptr, r);
        r
    }
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut b = Builder { ops: Vec::new(), dedup: HashMap::new(), by_node: HashMap::new() };
        let outputs = exprs.iter().map(|e| b.emit(e)).collect();
        Tape { ops: b.ops, outputs }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates every output at `x`, writing them into `out`.
    pub fn eval<T: Real>(&self, x: &[T; 4], out: &mut [T]) -> Result<()> {
        let mut regs: Vec<T> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => T::from_f64(c),
                Op::Var(i) => x[i as usize],
                Op::Neg(a) => -regs[a as usize],
                Op::Add(a, b) => regs[a as usize] + regs[b as usize],
                Op::Sub(a, b) => regs[a as usize] - regs[b as usize],
                Op::Mul(a, b) => regs[a as usize] * regs[b as usize],
                Op::Div(a, b) => {
                    let d = regs[b as usize];
                    if d.re() == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    regs[a as usize] / d
                }
                Op::Pow(a, n) => {
                    let base = regs[a as usize];
                    if n < 0 && base.re() == 0.0 {
                        return Err(Error::Domain("negative power of zero".into()));
                    }
                    base.powi(n)
                }
                Op::Func(f, a) => f.apply(regs[a as usize])?,
            };
            regs.push(v);
        }
        for (o, &r) in out.iter_mut().zip(&self.outputs) {
            let v = regs[r as usize];
            if !v.re().is_finite() {
                return Err(Error::Domain("non-finite value".into()));
            }
            *o = v;
        }
        Ok(())
    }
}
