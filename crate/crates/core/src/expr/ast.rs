use std::fmt;

/// What an expression is used for; determines which names it may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// `f(t, u, v)` with `v` standing for `u'`.
    Nonlinearity,
    /// `γ(t)` or its derivative.
    Coefficient,
    /// `h[u]`, built from `U(a)`, `DU(a)` and `INT(body)`.
    Functional,
    /// `k(t, s)` or `∂ₜk(t, s)`.
    Kernel,
    /// A declared bound as a function of the radius `rho`.
    Bound,
    /// Closed numeric expression such as `1/11`.
    Constant,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Nonlinearity => "nonlinearity",
            Role::Coefficient => "coefficient",
            Role::Functional => "functional",
            Role::Kernel => "kernel",
            Role::Bound => "bound",
            Role::Constant => "constant",
        }
    }

    pub(crate) fn allows(self, var: Var, inside_integral: bool) -> bool {
        use Var::*;
        match self {
            Role::Nonlinearity => matches!(var, T | U | V),
            Role::Coefficient => var == T,
            Role::Functional => var == S && inside_integral,
            Role::Kernel => matches!(var, T | S),
            Role::Bound => var == Rho,
            Role::Constant => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    U,
    V,
    S,
    Rho,
}

impl Var {
    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "t" => Var::T,
            "u" => Var::U,
            "v" => Var::V,
            "s" => Var::S,
            "rho" => Var::Rho,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
            Var::S => "s",
            Var::Rho => "rho",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    /// `min` and `max` take two or more arguments, the rest exactly one.
    pub(crate) fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max => n >= 2,
            _ => n == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    E,
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    /// `U(a)`: point value of the argument function.
    PointValue(Box<Expr>),
    /// `DU(a)`: point value of its derivative.
    PointDeriv(Box<Expr>),
    /// `INT(body)`: `∫₀¹ body ds`.
    Integral(Box<Expr>),
}

const NEG_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => NEG_PREC,
            _ => ATOM_PREC,
        }
    }

    /// True if the tree contains an `INT` node.
    pub fn has_integral(&self) -> bool {
        match self {
            Expr::Integral(_) => true,
            Expr::Neg(a) | Expr::PointValue(a) | Expr::PointDeriv(a) => a.has_integral(),
            Expr::Binary(_, a, b) => a.has_integral() || b.has_integral(),
            Expr::Call(_, args) => args.iter().any(Expr::has_integral),
            _ => false,
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Display for f64 is the shortest representation that parses back
            // to the same value.
            Expr::Num(x) => write!(f, "{x}"),
            Expr::E => f.write_str("e"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_wrapped(f, a, a.precedence() < NEG_PREC)
            }
            Expr::Binary(BinOp::Pow, a, b) => {
                write_wrapped(f, a, a.precedence() < ATOM_PREC)?;
                f.write_str("^")?;
                write_wrapped(f, b, b.precedence() < NEG_PREC)
            }
            Expr::Binary(op, a, b) => {
                write_wrapped(f, a, a.precedence() < op.precedence())?;
                write!(f, " {} ", op.symbol())?;
                write_wrapped(f, b, b.precedence() <= op.precedence())
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::PointValue(a) => write!(f, "U({a})"),
            Expr::PointDeriv(a) => write!(f, "DU({a})"),
            Expr::Integral(a) => write!(f, "INT({a})"),
        }
    }
}
