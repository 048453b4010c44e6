//! The arithmetic expression language evaluated by workers.
//!
//! Expressions are functions of a single variable `x`, built from constants,
//! `+ - * / ^`, unary minus, and a fixed set of unary functions. Evaluation
//! is plain IEEE-754 double precision: domain problems (such as a negative
//! base raised to a non-integer power) produce NaN or infinity instead of an
//! error, and NaNs are counted rather than rejected so that a grid evaluation
//! always completes.

mod lexer;
mod parser;

use crate::cputime::{cpu_seconds_since, thread_cpu_time};
use thiserror::Error;

/// Errors from parsing expression text. Positions are 0-based byte offsets
/// into the original input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unknown function '{name}' at position {position}")]
    UnknownFunction { name: String, position: usize },
    #[error("unknown variable '{name}' at position {position}; the only variable is 'x'")]
    UnknownVariable { name: String, position: usize },
}

impl ExprError {
    /// Offset of the offending input, for caret diagnostics.
    pub fn position(&self) -> usize {
        match self {
            ExprError::Parse { position, .. }
            | ExprError::UnknownFunction { position, .. }
            | ExprError::UnknownVariable { position, .. } => *position,
        }
    }
}

/// Binary arithmetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Pow => a.powf(b),
        }
    }
}

/// The supported unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Exp,
    Log,
    Log10,
    Sqrt,
    Abs,
}

impl Function {
    pub const ALL: [Function; 11] = [
        Function::Sin,
        Function::Cos,
        Function::Tan,
        Function::Asin,
        Function::Acos,
        Function::Atan,
        Function::Exp,
        Function::Log,
        Function::Log10,
        Function::Sqrt,
        Function::Abs,
    ];

    pub fn from_name(name: &str) -> Option<Function> {
        Some(match name {
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "tan" => Function::Tan,
            "asin" => Function::Asin,
            "acos" => Function::Acos,
            "atan" => Function::Atan,
            "exp" => Function::Exp,
            "log" => Function::Log,
            "log10" => Function::Log10,
            "sqrt" => Function::Sqrt,
            "abs" => Function::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Asin => "asin",
            Function::Acos => "acos",
            Function::Atan => "atan",
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Log10 => "log10",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Function::Sin => v.sin(),
            Function::Cos => v.cos(),
            Function::Tan => v.tan(),
            Function::Asin => v.asin(),
            Function::Acos => v.acos(),
            Function::Atan => v.atan(),
            Function::Exp => v.exp(),
            Function::Log => v.ln(),
            Function::Log10 => v.log10(),
            Function::Sqrt => v.sqrt(),
            Function::Abs => v.abs(),
        }
    }
}

/// Parsed expression tree.
///
/// Negative values are represented as [`Expr::Negate`] around a non-negative
/// constant, which is the only shape the parser produces; keeping hand-built
/// trees in that form makes [`Expr::to_text`] a structural round trip.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    /// The single free variable `x`.
    Variable,
    Negate(Box<Expr>),
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Call {
        function: Function,
        arg: Box<Expr>,
    },
}

/// Outcome of evaluating an expression over a block of sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    /// One value per input point, in order. NaNs stay in place.
    pub values: Vec<f64>,
    /// How many of `values` are NaN.
    pub nan_count: u64,
    /// Thread CPU seconds spent in the evaluation loop only.
    pub cpu_seconds: f64,
}

/// Parses expression text into an [`Expr`].
///
/// A leading `y =` (or `y=`) assignment prefix is stripped first; error
/// positions still refer to the original string.
pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let offset = assignment_prefix_len(source);
    let body = &source[offset..];
    let tokens = lexer::tokenize(body, offset)?;
    if tokens.is_empty() {
        return Err(ExprError::Parse {
            position: source.len(),
            message: "empty expression".into(),
        });
    }
    parser::Parser::new(tokens, source.len()).parse()
}

/// Length of a leading `y =` prefix, or 0 when there is none.
fn assignment_prefix_len(source: &str) -> usize {
    let bytes = source.as_bytes();
    let mut i = 0;
    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
        i += 1;
    }
    if i >= bytes.len() || bytes[i] != b'y' {
        return 0;
    }
    // 'y' must be a standalone identifier, not the start of a longer one.
    if i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
        return 0;
    }
    let mut j = i + 1;
    while j < bytes.len() && bytes[j].is_ascii_whitespace() {
        j += 1;
    }
    if j < bytes.len() && bytes[j] == b'=' {
        j + 1
    } else {
        0
    }
}

impl Expr {
    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn call(function: Function, arg: Expr) -> Expr {
        Expr::Call {
            function,
            arg: Box::new(arg),
        }
    }

    /// Fully parenthesized canonical text; `parse(a.to_text())` rebuilds a
    /// structurally identical tree.
    pub fn to_text(&self) -> String {
        match self {
            Expr::Constant(v) => format!("{v}"),
            Expr::Variable => "x".to_string(),
            Expr::Negate(inner) => format!("(-{})", inner.to_text()),
            Expr::Binary { op, left, right } => {
                format!("({}{}{})", left.to_text(), op.symbol(), right.to_text())
            }
            Expr::Call { function, arg } => format!("{}({})", function.name(), arg.to_text()),
        }
    }

    /// Evaluates at a single point. Pure IEEE-754 arithmetic: never panics,
    /// domain issues surface as NaN or infinity in the value.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        match self {
            Expr::Constant(v) => *v,
            Expr::Variable => x,
            Expr::Negate(inner) => -inner.eval_scalar(x),
            Expr::Binary { op, left, right } => {
                op.apply(left.eval_scalar(x), right.eval_scalar(x))
            }
            Expr::Call { function, arg } => function.apply(arg.eval_scalar(x)),
        }
    }

    /// Evaluates at every point in order, counting NaN results and timing
    /// the loop on the thread CPU clock.
    pub fn eval_grid(&self, points: &[f64]) -> GridEvaluation {
        let start = thread_cpu_time();
        let mut values = Vec::with_capacity(points.len());
        let mut nan_count = 0u64;
        for &x in points {
            let v = self.eval_scalar(x);
            if v.is_nan() {
                nan_count += 1;
            }
            values.push(v);
        }
        let cpu_seconds = cpu_seconds_since(start, thread_cpu_time());
        GridEvaluation {
            values,
            nan_count,
            cpu_seconds,
        }
    }
}
