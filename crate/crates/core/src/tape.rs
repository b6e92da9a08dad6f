//! Reverse-mode automatic differentiation over scalar arithmetic.
//!
//! A [`Tape`] is an append-only record of scalar operations. Every node
//! stores its value and the local partial derivatives with respect to its
//! (at most two) inputs, so [`Tape::backward`] is a single reverse sweep.
//!
//! Values must stay finite. An operation that would create a NaN or an
//! infinity, or that leaves its mathematical domain, is refused at record
//! time. [`Tape::record`] reports this directly. The operator overloads on
//! [`Var`] cannot return a `Result`, so they latch the first failure on the
//! tape instead; every later operation yields a poisoned `Var` and
//! [`Tape::check`] / [`Tape::backward`] surface the original error.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

const POISON: u32 = u32::MAX;

/// Primitive operations that can be recorded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    /// Differentiation root created by [`Tape::input`].
    Input,
    /// Constant leaf.
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Ln,
    /// `ln(e^a + e^b)`, evaluated with the max-shift.
    LogAddExp,
    /// `a + k` for a constant `k`.
    Shift(f64),
    /// `k * a` for a constant `k`.
    Scale(f64),
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Input | Op::Const => 0,
            Op::Neg | Op::Exp | Op::Ln | Op::Shift(_) | Op::Scale(_) => 1,
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::LogAddExp => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Const => "const",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Exp => "exp",
            Op::Ln => "ln",
            Op::LogAddExp => "logaddexp",
            Op::Shift(_) => "shift",
            Op::Scale(_) => "scale",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq)]
pub enum TapeError {
    #[error("arithmetic domain error in `{op}`: {reason}")]
    Domain { op: &'static str, reason: &'static str },
    #[error("`{op}` produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("`{op}` expects {expected} input(s), got {got}")]
    Arity { op: &'static str, expected: usize, got: usize },
    #[error("variable does not belong to this tape")]
    ForeignVar,
    #[error("no differentiation inputs are marked on this tape")]
    NoInputs,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    op: Op,
    args: [u32; 2],
    partials: [f64; 2],
    value: f64,
}

/// Append-only operation record.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    inputs: RefCell<Vec<u32>>,
    error: Cell<Option<TapeError>>,
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var").field("index", &self.index).field("value", &self.value).finish()
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn index(&self) -> Option<usize> {
        (self.index != POISON).then_some(self.index as usize)
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn is_poisoned(&self) -> bool {
        self.index == POISON
    }

    pub fn exp(self) -> Self {
        self.tape.apply(Op::Exp, &[self])
    }

    pub fn ln(self) -> Self {
        self.tape.apply(Op::Ln, &[self])
    }

    pub fn logaddexp(self, other: Self) -> Self {
        self.tape.apply(Op::LogAddExp, &[self, other])
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Creates a marked differentiation input.
    pub fn input(&self, value: f64) -> Result<Var<'_>, TapeError> {
        self.check()?;
        if !value.is_finite() {
            return Err(TapeError::NonFinite { op: "input" });
        }
        let var = self.push(Op::Input, [POISON; 2], [0.0; 2], value);
        self.inputs.borrow_mut().push(var.index);
        Ok(var)
    }

    /// Creates a constant leaf. Non-finite constants latch an error.
    pub fn constant(&self, value: f64) -> Var<'_> {
        if !value.is_finite() {
            return self.fail(TapeError::NonFinite { op: "const" });
        }
        if self.error.get().is_some() {
            return self.poison();
        }
        self.push(Op::Const, [POISON; 2], [0.0; 2], value)
    }

    /// Cached value of the node at `index`.
    pub fn value_at(&self, index: usize) -> Option<f64> {
        self.nodes.borrow().get(index).map(|n| n.value)
    }

    /// Number of marked inputs.
    pub fn input_count(&self) -> usize {
        self.inputs.borrow().len()
    }

    /// First error latched by an operator overload, if any.
    pub fn error(&self) -> Option<TapeError> {
        self.error.get()
    }

    pub fn check(&self) -> Result<(), TapeError> {
        match self.error.get() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Records `op` applied to `inputs`.
    pub fn record<'t>(&'t self, op: Op, inputs: &[Var<'t>]) -> Result<Var<'t>, TapeError> {
        self.check()?;
        if matches!(op, Op::Input | Op::Const) || inputs.len() != op.arity() {
            return Err(TapeError::Arity { op: op.name(), expected: op.arity(), got: inputs.len() });
        }
        for v in inputs {
            if !core::ptr::eq(v.tape, self) {
                return Err(TapeError::ForeignVar);
            }
            if v.is_poisoned() {
                // Only reachable if a poisoned var outlived a successful check,
                // which cannot happen because errors are never cleared.
                return Err(TapeError::NonFinite { op: op.name() });
            }
        }
        let (value, partials) = evaluate(op, inputs)?;
        let mut args = [POISON; 2];
        for (slot, v) in args.iter_mut().zip(inputs) {
            *slot = v.index;
        }
        Ok(self.push(op, args, partials, value))
    }

    /// Gradient of `output` with respect to every marked input, in the
    /// order the inputs were created.
    ///
    /// The tape is left untouched, so this can be called repeatedly.
    pub fn backward(&self, output: Var<'_>) -> Result<Vec<f64>, TapeError> {
        let adjoints = self.adjoints(output)?;
        let inputs = self.inputs.borrow();
        if inputs.is_empty() {
            return Err(TapeError::NoInputs);
        }
        Ok(inputs.iter().map(|&i| adjoints[i as usize]).collect())
    }

    /// Gradient of `output` with respect to arbitrary recorded vars.
    pub fn gradient(&self, output: Var<'_>, wrt: &[Var<'_>]) -> Result<Vec<f64>, TapeError> {
        let adjoints = self.adjoints(output)?;
        wrt.iter()
            .map(|v| {
                if !core::ptr::eq(v.tape, self) || v.is_poisoned() {
                    Err(TapeError::ForeignVar)
                } else {
                    Ok(adjoints.get(v.index as usize).copied().unwrap_or(0.0))
                }
            })
            .collect()
    }

    fn adjoints(&self, output: Var<'_>) -> Result<Vec<f64>, TapeError> {
        if !core::ptr::eq(output.tape, self) {
            return Err(TapeError::ForeignVar);
        }
        self.check()?;
        let nodes = self.nodes.borrow();
        let end = output.index as usize + 1;
        let mut adjoint = vec![0.0; end];
        adjoint[end - 1] = 1.0;
        for i in (0..end).rev() {
            let a = adjoint[i];
            if a == 0.0 {
                continue;
            }
            let node = &nodes[i];
            for k in 0..node.op.arity() {
                adjoint[node.args[k] as usize] += a * node.partials[k];
            }
        }
        Ok(adjoint)
    }

    fn push(&self, op: Op, args: [u32; 2], partials: [f64; 2], value: f64) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let index = nodes.len() as u32;
        nodes.push(Node { op, args, partials, value });
        Var { tape: self, index, value }
    }

    fn poison(&self) -> Var<'_> {
        Var { tape: self, index: POISON, value: f64::NAN }
    }

    fn fail(&self, err: TapeError) -> Var<'_> {
        if self.error.get().is_none() {
            self.error.set(Some(err));
        }
        self.poison()
    }

    /// Infallible entry point used by the operator overloads.
    pub(crate) fn apply<'t>(&'t self, op: Op, inputs: &[Var<'t>]) -> Var<'t> {
        if inputs.iter().any(|v| v.is_poisoned()) || self.error.get().is_some() {
            return self.poison();
        }
        match self.record(op, inputs) {
            Ok(v) => v,
            Err(e) => self.fail(e),
        }
    }
}

fn evaluate(op: Op, inputs: &[Var<'_>]) -> Result<(f64, [f64; 2]), TapeError> {
    let a = inputs.first().map_or(0.0, |v| v.value);
    let b = inputs.get(1).map_or(0.0, |v| v.value);
    let (value, partials) = match op {
        Op::Input | Op::Const => unreachable!("leaves are not evaluated"),
        Op::Add => (a + b, [1.0, 1.0]),
        Op::Sub => (a - b, [1.0, -1.0]),
        Op::Mul => (a * b, [b, a]),
        Op::Div => {
            if b == 0.0 {
                return Err(TapeError::Domain { op: "div", reason: "zero denominator" });
            }
            let q = a / b;
            (q, [1.0 / b, -q / b])
        }
        Op::Neg => (-a, [-1.0, 0.0]),
        Op::Exp => {
            let e = libm::exp(a);
            (e, [e, 0.0])
        }
        Op::Ln => {
            if a <= 0.0 {
                return Err(TapeError::Domain { op: "ln", reason: "non-positive argument" });
            }
            (libm::log(a), [1.0 / a, 0.0])
        }
        Op::LogAddExp => {
            let (value, wa, wb) = logaddexp_with_weights(a, b);
            (value, [wa, wb])
        }
        Op::Shift(k) => (a + k, [1.0, 0.0]),
        Op::Scale(k) => (k * a, [k, 0.0]),
    };
    if !value.is_finite() || !partials[0].is_finite() || !partials[1].is_finite() {
        return Err(TapeError::NonFinite { op: op.name() });
    }
    Ok((value, partials))
}

/// `ln(e^a + e^b)` and its partials `(softmax weights of a and b)`.
pub(crate) fn logaddexp_with_weights(a: f64, b: f64) -> (f64, f64, f64) {
    let (hi, lo, a_is_hi) = if a >= b { (a, b, true) } else { (b, a, false) };
    let r = libm::exp(lo - hi);
    let value = hi + libm::log1p(r);
    let w_hi = 1.0 / (1.0 + r);
    let w_lo = r / (1.0 + r);
    if a_is_hi {
        (value, w_hi, w_lo)
    } else {
        (value, w_lo, w_hi)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:expr) => {
        impl<'t> $trait for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                self.tape.apply($op, &[self, rhs])
            }
        }
    };
}

binary_op!(Add, add, Op::Add);
binary_op!(Sub, sub, Op::Sub);
binary_op!(Mul, mul, Op::Mul);
binary_op!(Div, div, Op::Div);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.apply(Op::Neg, &[self])
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, k: f64) -> Var<'t> {
        self.tape.apply(Op::Shift(k), &[self])
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, k: f64) -> Var<'t> {
        self.tape.apply(Op::Shift(-k), &[self])
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, k: f64) -> Var<'t> {
        self.tape.apply(Op::Scale(k), &[self])
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, k: f64) -> Var<'t> {
        if k == 0.0 {
            return self.tape.fail(TapeError::Domain { op: "div", reason: "zero denominator" });
        }
        self.tape.apply(Op::Scale(1.0 / k), &[self])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn record_primitives() {
        let tape = Tape::new();
        let x = tape.input(3.0).unwrap();
        let y = tape.input(4.0).unwrap();
        assert_eq!(tape.record(Op::Mul, &[x, y]).unwrap().value(), 12.0);

        let z = tape.constant(0.0);
        let l = tape.record(Op::LogAddExp, &[z, z]).unwrap();
        assert!(close(l.value(), core::f64::consts::LN_2, 1e-15));

        let m = tape.constant(-2.5);
        let e = tape.record(Op::Exp, &[m]).unwrap();
        assert!(close(e.value(), 0.0820849986238988, 1e-14));
    }

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let a = tape.input(3.0).unwrap();
        let b = tape.input(4.0).unwrap();
        let out = a * b;
        assert_eq!(tape.backward(out).unwrap(), vec![4.0, 3.0]);
        // Backward leaves the tape unchanged, so a second call agrees.
        assert_eq!(tape.backward(out).unwrap(), vec![4.0, 3.0]);
    }

    #[test]
    fn exp_of_negation() {
        let tape = Tape::new();
        let a = tape.input(2.5).unwrap();
        let out = (-a).exp();
        let g = tape.backward(out).unwrap();
        assert!(close(g[0], -libm::exp(-2.5), 1e-15));
    }

    #[test]
    fn domain_errors_name_the_op() {
        let tape = Tape::new();
        let z = tape.constant(0.0);
        let one = tape.constant(1.0);
        assert_eq!(
            tape.record(Op::Ln, &[z]).unwrap_err(),
            TapeError::Domain { op: "ln", reason: "non-positive argument" }
        );
        assert!(matches!(tape.record(Op::Div, &[one, z]), Err(TapeError::Domain { op: "div", .. })));
        let big = tape.constant(1000.0);
        assert_eq!(tape.record(Op::Exp, &[big]).unwrap_err(), TapeError::NonFinite { op: "exp" });
        // Explicit record() never latches.
        assert!(tape.check().is_ok());
    }

    #[test]
    fn overloads_latch_first_error() {
        let tape = Tape::new();
        let x = tape.input(-1.0).unwrap();
        let bad = x.ln();
        assert!(bad.is_poisoned());
        let later = bad * x + x.exp();
        assert!(later.is_poisoned());
        assert!(matches!(tape.check(), Err(TapeError::Domain { op: "ln", .. })));
        assert!(tape.backward(x).is_err());
    }

    #[test]
    fn foreign_output_is_rejected() {
        let t1 = Tape::new();
        let t2 = Tape::new();
        let _ = t1.input(1.0).unwrap();
        let y = t2.input(2.0).unwrap();
        assert_eq!(t1.backward(y).unwrap_err(), TapeError::ForeignVar);
    }

    #[test]
    fn no_inputs_is_usage_error() {
        let tape = Tape::new();
        let c = tape.constant(2.0);
        let out = c.exp();
        assert_eq!(tape.backward(out).unwrap_err(), TapeError::NoInputs);
    }

    #[test]
    fn logaddexp_partials_are_softmax_weights() {
        let tape = Tape::new();
        let a = tape.input(1.0).unwrap();
        let b = tape.input(-2.0).unwrap();
        let out = a.logaddexp(b);
        let g = tape.backward(out).unwrap();
        let za = libm::exp(1.0);
        let zb = libm::exp(-2.0);
        assert!(close(g[0], za / (za + zb), 1e-15));
        assert!(close(g[1], zb / (za + zb), 1e-15));
        assert!(close(out.value(), libm::log(za + zb), 1e-15));
    }

    #[test]
    fn logaddexp_against_log_zero_sentinel_is_finite() {
        let tape = Tape::new();
        let a = tape.input(0.5).unwrap();
        let z = tape.constant(crate::scalar::LOG_ZERO);
        let out = a.logaddexp(z);
        assert_eq!(out.value(), 0.5);
        assert_eq!(tape.backward(out).unwrap(), vec![1.0]);
    }

    #[test]
    fn constant_ops_record_unary_nodes() {
        let tape = Tape::new();
        let x = tape.input(2.0).unwrap();
        let y = (x * 3.0 + 1.0) / 2.0 - 0.5;
        assert_eq!(y.value(), 3.0);
        assert_eq!(tape.backward(y).unwrap(), vec![1.5]);
        assert_eq!(tape.len(), 5);
    }
}
