use std::fmt;

use super::Literal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

/// Guard, goal and assignment expressions over agent states, trigger
/// payload fields and the selected candidate.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(Literal),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown name `{0}`")]
    Unknown(String),
    #[error("operator `{0}` applied to incompatible values")]
    Type(&'static str),
    #[error("division by zero")]
    DivisionByZero,
}

impl Expr {
    pub fn num(n: f64) -> Self {
        Expr::Lit(Literal::Number(n))
    }

    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_owned())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Self {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Lit(_) | Expr::Var(_) => 8,
            Expr::Unary(UnOp::Neg, _) => 7,
            Expr::Unary(UnOp::Not, _) => 3,
            Expr::Binary(op, _, _) => op.precedence(),
        }
    }

    /// Every variable name in the expression, in reading order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => out.push(v),
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> Option<Literal>) -> Result<Literal, EvalError> {
        match self {
            Expr::Lit(l) => Ok(l.clone()),
            Expr::Var(v) => env(v).ok_or_else(|| EvalError::Unknown(v.clone())),
            Expr::Unary(UnOp::Neg, e) => match e.eval(env)? {
                Literal::Number(n) => Ok(Literal::Number(-n)),
                _ => Err(EvalError::Type("-")),
            },
            Expr::Unary(UnOp::Not, e) => match e.eval(env)? {
                Literal::Bool(b) => Ok(Literal::Bool(!b)),
                _ => Err(EvalError::Type("not")),
            },
            Expr::Binary(op @ (BinOp::And | BinOp::Or), l, r) => {
                let Literal::Bool(lv) = l.eval(env)? else {
                    return Err(EvalError::Type(op.symbol()));
                };
                if (*op == BinOp::And && !lv) || (*op == BinOp::Or && lv) {
                    return Ok(Literal::Bool(lv));
                }
                match r.eval(env)? {
                    Literal::Bool(rv) => Ok(Literal::Bool(rv)),
                    _ => Err(EvalError::Type(op.symbol())),
                }
            }
            Expr::Binary(op, l, r) => binary(*op, l.eval(env)?, r.eval(env)?),
        }
    }

    /// Evaluates to a boolean; anything else is an error.
    pub fn eval_bool(&self, env: &dyn Fn(&str) -> Option<Literal>) -> Result<bool, EvalError> {
        match self.eval(env)? {
            Literal::Bool(b) => Ok(b),
            _ => Err(EvalError::Type("condition")),
        }
    }
}

fn binary(op: BinOp, l: Literal, r: Literal) -> Result<Literal, EvalError> {
    use Literal::*;
    Ok(match (op, l, r) {
        (BinOp::Eq, a, b) => Bool(a == b),
        (BinOp::Ne, a, b) => Bool(a != b),
        (BinOp::Lt, Number(a), Number(b)) => Bool(a < b),
        (BinOp::Le, Number(a), Number(b)) => Bool(a <= b),
        (BinOp::Gt, Number(a), Number(b)) => Bool(a > b),
        (BinOp::Ge, Number(a), Number(b)) => Bool(a >= b),
        (BinOp::Add, Number(a), Number(b)) => Number(a + b),
        (BinOp::Sub, Number(a), Number(b)) => Number(a - b),
        (BinOp::Mul, Number(a), Number(b)) => Number(a * b),
        (BinOp::Div, Number(_), Number(b)) if b == 0.0 => return Err(EvalError::DivisionByZero),
        (BinOp::Div, Number(a), Number(b)) => Number(a / b),
        (op, _, _) => return Err(EvalError::Type(op.symbol())),
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Unary(UnOp::Neg, e) => {
                // `-` before a number literal would fold into a negative literal.
                let paren = e.precedence() < 7
                    || matches!(**e, Expr::Lit(Literal::Number(_)) | Expr::Unary(UnOp::Neg, _));
                f.write_str("-")?;
                wrap(f, e, paren)
            }
            Expr::Unary(UnOp::Not, e) => {
                f.write_str("not ")?;
                wrap(f, e, e.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let (lp, rp) = if op.is_comparison() {
                    (l.precedence() <= p, r.precedence() <= p)
                } else {
                    (l.precedence() < p, r.precedence() <= p)
                };
                wrap(f, l, lp)?;
                write!(f, " {} ", op.symbol())?;
                wrap(f, r, rp)
            }
        }
    }
}
