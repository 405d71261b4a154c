use thiserror::Error;

use super::{Expr, Func};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("expression uses x{needed} but only {dim} coordinates are available")]
    Dimension { needed: usize, dim: usize },
    #[error("point has {found} coordinates, expected {expected}")]
    PointLength { expected: usize, found: usize },
    #[error("{what} in '{expr}'")]
    Domain { what: String, expr: String },
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Num(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    /// Index into `sites` for error reporting.
    Div(usize),
    Pow(i32, usize),
    Sin,
    Cos,
    Exp,
    Sqrt(usize),
}

/// Postfix tape of an expression, evaluated with value and gradient stacks.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    dim: usize,
    ops: Vec<Op>,
    sites: Vec<String>,
    depth: usize,
    source: Expr,
}

impl CompiledExpr {
    pub fn new(e: &Expr, dim: usize) -> Result<Self, EvalError> {
        if e.arity() > dim {
            return Err(EvalError::Dimension { needed: e.arity(), dim });
        }
        let mut c = CompiledExpr { dim, ops: Vec::new(), sites: Vec::new(), depth: 0, source: e.clone() };
        let mut depth = 0;
        c.emit(e, &mut depth);
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    fn push(&mut self, op: Op, depth: &mut usize, delta: isize) {
        self.ops.push(op);
        *depth = (*depth as isize + delta) as usize;
        self.depth = self.depth.max(*depth);
    }

    fn site(&mut self, e: &Expr) -> usize {
        self.sites.push(e.to_string());
        self.sites.len() - 1
    }

    fn emit(&mut self, e: &Expr, depth: &mut usize) {
        match e {
            Expr::Num(v) => self.push(Op::Num(*v), depth, 1),
            Expr::Var(i) => self.push(Op::Var(*i), depth, 1),
            Expr::Neg(a) => {
                self.emit(a, depth);
                self.push(Op::Neg, depth, 0);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                self.emit(a, depth);
                self.emit(b, depth);
                let op = match e {
                    Expr::Add(..) => Op::Add,
                    Expr::Sub(..) => Op::Sub,
                    Expr::Mul(..) => Op::Mul,
                    _ => Op::Div(self.site(e)),
                };
                self.push(op, depth, -1);
            }
            Expr::Pow(a, n) => {
                self.emit(a, depth);
                let s = self.site(e);
                self.push(Op::Pow(*n, s), depth, 0);
            }
            Expr::Call(f, a) => {
                self.emit(a, depth);
                let op = match f {
                    Func::Sin => Op::Sin,
                    Func::Cos => Op::Cos,
                    Func::Exp => Op::Exp,
                    Func::Sqrt => Op::Sqrt(self.site(e)),
                };
                self.push(op, depth, 0);
            }
        }
    }

    fn domain(&self, site: usize, what: &str) -> EvalError {
        EvalError::Domain { what: what.to_string(), expr: self.sites[site].clone() }
    }

    fn check_point(&self, x: &[f64]) -> Result<(), EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::PointLength { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.check_point(x)?;
        let mut st: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Num(v) => st.push(v),
                Op::Var(i) => st.push(x[i]),
                Op::Neg => {
                    let a = st.last_mut().unwrap();
                    *a = -*a;
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div(_) => {
                    let b = st.pop().unwrap();
                    let a = st.last_mut().unwrap();
                    match *op {
                        Op::Add => *a += b,
                        Op::Sub => *a -= b,
                        Op::Mul => *a *= b,
                        Op::Div(s) => {
                            if b == 0.0 {
                                return Err(self.domain(s, "division by zero"));
                            }
                            *a /= b;
                        }
                        _ => unreachable!(),
                    }
                }
                Op::Pow(n, s) => {
                    let a = st.last_mut().unwrap();
                    if n < 0 && *a == 0.0 {
                        return Err(self.domain(s, "division by zero"));
                    }
                    *a = a.powi(n);
                }
                Op::Sin => {
                    let a = st.last_mut().unwrap();
                    *a = a.sin();
                }
                Op::Cos => {
                    let a = st.last_mut().unwrap();
                    *a = a.cos();
                }
                Op::Exp => {
                    let a = st.last_mut().unwrap();
                    *a = a.exp();
                }
                Op::Sqrt(s) => {
                    let a = st.last_mut().unwrap();
                    if *a < 0.0 {
                        return Err(self.domain(s, "square root of a negative number"));
                    }
                    *a = a.sqrt();
                }
            }
        }
        Ok(st[0])
    }

    /// Value and gradient by dual-number propagation (one tangent per coordinate).
    pub fn eval_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), EvalError> {
        self.check_point(x)?;
        let n = self.dim;
        let mut val: Vec<f64> = Vec::with_capacity(self.depth);
        let mut grad: Vec<f64> = Vec::with_capacity(self.depth * n);
        for op in &self.ops {
            match *op {
                Op::Num(v) => {
                    val.push(v);
                    grad.extend(std::iter::repeat_n(0.0, n));
                }
                Op::Var(i) => {
                    val.push(x[i]);
                    let base = grad.len();
                    grad.extend(std::iter::repeat_n(0.0, n));
                    grad[base + i] = 1.0;
                }
                Op::Neg => {
                    let top = val.len() - 1;
                    val[top] = -val[top];
                    for g in &mut grad[top * n..] {
                        *g = -*g;
                    }
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div(_) => {
                    let b = val.pop().unwrap();
                    let top = val.len() - 1;
                    let a = val[top];
                    let (ga, gb) = grad[top * n..].split_at_mut(n);
                    match *op {
                        Op::Add => {
                            val[top] = a + b;
                            ga.iter_mut().zip(gb.iter()).for_each(|(p, q)| *p += q);
                        }
                        Op::Sub => {
                            val[top] = a - b;
                            ga.iter_mut().zip(gb.iter()).for_each(|(p, q)| *p -= q);
                        }
                        Op::Mul => {
                            val[top] = a * b;
                            ga.iter_mut().zip(gb.iter()).for_each(|(p, q)| *p = *p * b + a * q);
                        }
                        Op::Div(s) => {
                            if b == 0.0 {
                                return Err(self.domain(s, "division by zero"));
                            }
                            let r = a / b;
                            val[top] = r;
                            ga.iter_mut().zip(gb.iter()).for_each(|(p, q)| *p = (*p - r * q) / b);
                        }
                        _ => unreachable!(),
                    }
                    grad.truncate((top + 1) * n);
                }
                Op::Pow(k, s) => {
                    let top = val.len() - 1;
                    let a = val[top];
                    if k < 0 && a == 0.0 {
                        return Err(self.domain(s, "division by zero"));
                    }
                    let scale = if k == 0 { 0.0 } else { f64::from(k) * a.powi(k - 1) };
                    val[top] = a.powi(k);
                    grad[top * n..].iter_mut().for_each(|g| *g *= scale);
                }
                Op::Sin | Op::Cos | Op::Exp | Op::Sqrt(_) => {
                    let top = val.len() - 1;
                    let a = val[top];
                    let (v, d) = match *op {
                        Op::Sin => (a.sin(), a.cos()),
                        Op::Cos => (a.cos(), -a.sin()),
                        Op::Exp => {
                            let e = a.exp();
                            (e, e)
                        }
                        Op::Sqrt(s) => {
                            if a < 0.0 {
                                return Err(self.domain(s, "square root of a negative number"));
                            }
                            if a == 0.0 {
                                return Err(self.domain(s, "derivative of square root undefined at zero"));
                            }
                            let r = a.sqrt();
                            (r, 0.5 / r)
                        }
                        _ => unreachable!(),
                    };
                    val[top] = v;
                    grad[top * n..].iter_mut().for_each(|g| *g *= d);
                }
            }
        }
        Ok((val[0], grad[..n].to_vec()))
    }
}
