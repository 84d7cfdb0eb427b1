//! Expression language for nonlinearities, coefficients, kernels, declared
//! bounds and functionals.
//!
//! Names available per [`Role`]:
//!
//! | role          | names                                    |
//! |---------------|------------------------------------------|
//! | nonlinearity  | `t`, `u`, `v` (`v` is `u'`)              |
//! | coefficient   | `t`                                      |
//! | kernel        | `t`, `s`                                 |
//! | bound         | `rho`                                    |
//! | constant      | none                                     |
//! | functional    | `U(a)`, `DU(a)`, `INT(body)`; `s` only inside `INT` |
//!
//! Every role may use `e`, `pi` and the functions `exp sin cos sqrt abs min max`.

mod ast;
mod parser;

use std::fmt;

pub use ast::{BinOp, Expr, Func, Role, Var};

use crate::error::{Error, Result};
use crate::grid::{integrate, GridFunction};

/// A parsed expression together with the role it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    role: Role,
    ast: Expr,
}

#[derive(Clone, Copy)]
struct Env<'a> {
    t: f64,
    u: f64,
    v: f64,
    s: f64,
    rho: f64,
    func: Option<&'a GridFunction>,
}

impl Env<'_> {
    const EMPTY: Env<'static> = Env {
        t: f64::NAN,
        u: f64::NAN,
        v: f64::NAN,
        s: f64::NAN,
        rho: f64::NAN,
        func: None,
    };

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (name, x) in [
            ("t", self.t),
            ("u", self.u),
            ("v", self.v),
            ("s", self.s),
            ("rho", self.rho),
        ] {
            if !x.is_nan() {
                parts.push(format!("{name}={x}"));
            }
        }
        if parts.is_empty() {
            "constant".to_string()
        } else {
            parts.join(", ")
        }
    }

    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::Eval {
            msg: msg.into(),
            point: self.describe(),
        }
    }
}

fn eval(e: &Expr, env: &Env<'_>) -> Result<f64> {
    let x = match e {
        Expr::Num(x) => *x,
        Expr::E => std::f64::consts::E,
        Expr::Pi => std::f64::consts::PI,
        Expr::Var(v) => match v {
            Var::T => env.t,
            Var::U => env.u,
            Var::V => env.v,
            Var::S => env.s,
            Var::Rho => env.rho,
        },
        Expr::Neg(a) => -eval(a, env)?,
        Expr::Binary(op, a, b) => {
            let (a, b) = (eval(a, env)?, eval(b, env)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(env.fail("division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => {
                    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
                        a.powi(b as i32)
                    } else {
                        a.powf(b)
                    }
                }
            }
        }
        Expr::Call(func, args) => {
            let a = eval(&args[0], env)?;
            match func {
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Abs => a.abs(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(env.fail(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                Func::Min | Func::Max => {
                    let mut acc = a;
                    for arg in &args[1..] {
                        let b = eval(arg, env)?;
                        acc = if *func == Func::Min {
                            acc.min(b)
                        } else {
                            acc.max(b)
                        };
                    }
                    acc
                }
            }
        }
        Expr::PointValue(a) | Expr::PointDeriv(a) => {
            let at = eval(a, env)?;
            let u = env
                .func
                .ok_or_else(|| env.fail("point evaluation without a function"))?;
            let r = if matches!(e, Expr::PointValue(_)) {
                u.eval_at(at)
            } else {
                u.eval_deriv_at(at)
            };
            r.map_err(|err| env.fail(err.to_string()))?
        }
        Expr::Integral(body) => {
            let u = env
                .func
                .ok_or_else(|| env.fail("integral without a function"))?;
            let grid = *u.grid();
            let samples = grid
                .nodes()
                .map(|s| eval(body, &Env { s, ..*env }))
                .collect::<Result<Vec<_>>>()?;
            integrate(&samples, &grid)?
        }
    };
    if x.is_nan() {
        return Err(env.fail(format!("undefined value in `{e}`")));
    }
    Ok(x)
}

impl Expression {
    pub fn parse(text: &str, role: Role) -> Result<Self> {
        Ok(Self {
            role,
            ast: parser::parse(text, role)?,
        })
    }

    /// Wraps an already built tree; used by tests and programmatic callers.
    /// The tree is printed and re-parsed so the role constraints still apply.
    pub fn from_ast(ast: Expr, role: Role) -> Result<Self> {
        Self::parse(&ast.to_string(), role)
    }

    pub fn constant(x: f64) -> Self {
        Self {
            role: Role::Constant,
            ast: Expr::Num(x),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    fn expect_role(&self, roles: &[Role]) -> Result<()> {
        // constant expressions are valid in every role
        if self.role == Role::Constant || roles.contains(&self.role) {
            Ok(())
        } else {
            Err(Error::Eval {
                msg: format!("{} expression used in the wrong role", self.role.name()),
                point: self.ast.to_string(),
            })
        }
    }

    pub fn eval_nonlinearity(&self, t: f64, u: f64, v: f64) -> Result<f64> {
        self.expect_role(&[Role::Nonlinearity])?;
        eval(
            &self.ast,
            &Env {
                t,
                u,
                v,
                ..Env::EMPTY
            },
        )
    }

    pub fn eval_coefficient(&self, t: f64) -> Result<f64> {
        self.expect_role(&[Role::Coefficient])?;
        eval(&self.ast, &Env { t, ..Env::EMPTY })
    }

    pub fn eval_kernel(&self, t: f64, s: f64) -> Result<f64> {
        self.expect_role(&[Role::Kernel])?;
        eval(&self.ast, &Env { t, s, ..Env::EMPTY })
    }

    pub fn eval_bound(&self, rho: f64) -> Result<f64> {
        self.expect_role(&[Role::Bound])?;
        eval(&self.ast, &Env { rho, ..Env::EMPTY })
    }

    pub fn eval_constant(&self) -> Result<f64> {
        self.expect_role(&[])?;
        eval(&self.ast, &Env::EMPTY)
    }

    /// `h[u]`: point atoms interpolate `u`, `INT` uses trapezoidal quadrature
    /// on `u`'s grid.
    pub fn eval_functional(&self, u: &GridFunction) -> Result<f64> {
        self.expect_role(&[Role::Functional])?;
        eval(
            &self.ast,
            &Env {
                func: Some(u),
                ..Env::EMPTY
            },
        )
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(text: &str, role: Role) -> Expr {
        Expression::parse(text, role).unwrap().ast
    }

    fn num(x: f64) -> Box<Expr> {
        Box::new(Expr::Num(x))
    }

    fn var(v: Var) -> Box<Expr> {
        Box::new(Expr::Var(v))
    }

    #[test]
    fn precedence_and_associativity() {
        use BinOp::*;
        assert_eq!(
            p("1 + 2 * 3", Role::Constant),
            Expr::Binary(
                Add,
                num(1.0),
                Box::new(Expr::Binary(Mul, num(2.0), num(3.0)))
            )
        );
        assert_eq!(
            p("-2^2", Role::Constant),
            Expr::Neg(Box::new(Expr::Binary(Pow, num(2.0), num(2.0))))
        );
        assert_eq!(
            p("2^3^2", Role::Constant),
            Expr::Binary(
                Pow,
                num(2.0),
                Box::new(Expr::Binary(Pow, num(3.0), num(2.0)))
            )
        );
        assert_eq!(
            p("8 - 2 - 1", Role::Constant),
            Expr::Binary(
                Sub,
                Box::new(Expr::Binary(Sub, num(8.0), num(2.0))),
                num(1.0)
            )
        );
        let c = |s| {
            Expression::parse(s, Role::Constant)
                .unwrap()
                .eval_constant()
                .unwrap()
        };
        assert_eq!(c("-2^2"), -4.0);
        assert_eq!(c("2^3^2"), 512.0);
        assert_eq!(c("2^-1"), 0.5);
        assert_eq!(c("8 / 4 / 2"), 1.0);
        assert_eq!(c("1/11"), 1.0 / 11.0);
        assert_eq!(c("2e-3"), 0.002);
        assert_eq!(c("2*e"), 2.0 * std::f64::consts::E);
        assert_eq!(c("max(1, 5, 3) - min(2, -1)"), 6.0);
    }

    #[test]
    fn example_expressions_parse_to_expected_trees() {
        use BinOp::*;
        // exp(t*(u+v))
        assert_eq!(
            p("exp(t*(u+v))", Role::Nonlinearity),
            Expr::Call(
                Func::Exp,
                vec![Expr::Binary(
                    Mul,
                    var(Var::T),
                    Box::new(Expr::Binary(Add, var(Var::U), var(Var::V)))
                )]
            )
        );
        // U(0.25) + DU(0.75)^2
        assert_eq!(
            p("U(0.25) + DU(0.75)^2", Role::Functional),
            Expr::Binary(
                Add,
                Box::new(Expr::PointValue(num(0.25))),
                Box::new(Expr::Binary(
                    Pow,
                    Box::new(Expr::PointDeriv(num(0.75))),
                    num(2.0)
                ))
            )
        );
        // u*(2 - t*sin(u*v))
        assert_eq!(
            p("u*(2 - t*sin(u*v))", Role::Nonlinearity),
            Expr::Binary(
                Mul,
                var(Var::U),
                Box::new(Expr::Binary(
                    Sub,
                    num(2.0),
                    Box::new(Expr::Binary(
                        Mul,
                        var(Var::T),
                        Box::new(Expr::Call(
                            Func::Sin,
                            vec![Expr::Binary(Mul, var(Var::U), var(Var::V))]
                        ))
                    ))
                ))
            )
        );
    }

    #[test]
    fn role_violations() {
        let err = Expression::parse("u + t", Role::Coefficient).unwrap_err();
        assert!(matches!(err, Error::IllegalVariable { pos: 0, .. }));
        assert!(matches!(
            Expression::parse("U(t)", Role::Functional),
            Err(Error::IllegalVariable { .. })
        ));
        assert!(matches!(
            Expression::parse("U(s)", Role::Functional),
            Err(Error::IllegalVariable { .. })
        ));
        assert!(matches!(
            Expression::parse("U(0.5)", Role::Nonlinearity),
            Err(Error::IllegalVariable { .. })
        ));
        assert!(matches!(
            Expression::parse("INT(INT(U(s)))", Role::Functional),
            Err(Error::NestedIntegral { pos: 4 })
        ));
        assert!(Expression::parse("INT(U(s)) + INT(DU(s))", Role::Functional).is_ok());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let pos = |s| match Expression::parse(s, Role::Nonlinearity) {
            Err(Error::Syntax { pos, .. }) => pos,
            other => panic!("expected syntax error, got {other:?}"),
        };
        assert_eq!(pos("1 +"), 3);
        assert_eq!(pos("exp(u"), 5);
        assert_eq!(pos("u $ v"), 2);
        assert_eq!(pos("foo(u)"), 0);
        assert_eq!(pos("sin(u, v)"), 0);
        assert_eq!(pos("(u))"), 3);
        assert_eq!(pos(""), 0);
    }

    #[test]
    fn nonlinearity_examples() {
        let f = Expression::parse("exp(t*(u+v))", Role::Nonlinearity).unwrap();
        assert_abs_diff_eq!(
            f.eval_nonlinearity(1.0, 1.0, 1.0).unwrap(),
            7.389056,
            epsilon = 1e-6
        );
        assert_eq!(f.eval_nonlinearity(1.0, 1.0, 1.0).unwrap(), 2f64.exp());
        assert_eq!(f.eval_nonlinearity(0.0, 123.0, 45.0).unwrap(), 1.0);
        let g = Expression::parse("u*(2 - t*sin(u*v))", Role::Nonlinearity).unwrap();
        assert_eq!(g.eval_nonlinearity(0.5, 1.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn evaluation_errors_name_the_point() {
        let f = Expression::parse("sqrt(u - 1)", Role::Nonlinearity).unwrap();
        match f.eval_nonlinearity(0.5, 0.0, 2.0) {
            Err(Error::Eval { point, .. }) => assert_eq!(point, "t=0.5, u=0, v=2"),
            other => panic!("{other:?}"),
        }
        let f = Expression::parse("1/t", Role::Coefficient).unwrap();
        assert!(f.eval_coefficient(0.0).is_err());
        let f = Expression::parse("t^0.5", Role::Coefficient).unwrap();
        assert!(f.eval_coefficient(-1.0).is_err());
    }

    #[test]
    fn functional_examples() {
        let g = Grid::new(256).unwrap();
        let lin = GridFunction::from_fn(g, |t| t, |_| 1.0);
        let h1 = Expression::parse("U(0.25) + DU(0.75)^2", Role::Functional).unwrap();
        assert_eq!(h1.eval_functional(&lin).unwrap(), 1.25);
        let h2 = Expression::parse("INT(U(s)^3 + DU(s))", Role::Functional).unwrap();
        assert_eq!(h2.eval_functional(&GridFunction::zero(g)).unwrap(), 0.0);
        assert_abs_diff_eq!(h2.eval_functional(&lin).unwrap(), 1.25, epsilon = 1e-3);
        let bad = Expression::parse("U(2)", Role::Functional).unwrap();
        assert!(matches!(bad.eval_functional(&lin), Err(Error::Eval { .. })));
    }

    #[test]
    fn print_parse_round_trip_corpus() {
        let corpus = [
            ("exp(t*(u+v))", Role::Nonlinearity),
            ("u*(2 - t*sin(u*v))", Role::Nonlinearity),
            ("U(0.25) + DU(0.75)^2", Role::Functional),
            ("INT(U(s)^3 + DU(s))", Role::Functional),
            ("U(1/4)*cos(DU(3/4))^2", Role::Functional),
            ("-(-u)^2 - -v", Role::Nonlinearity),
            ("2^-t^2", Role::Coefficient),
            ("a", Role::Constant),
            ("1 - (2 - 3) / (4 * 5) * 1e-12", Role::Constant),
            ("min(t, s) * max(t, s, 0.5)", Role::Kernel),
            ("exp(2*rho) + pi", Role::Bound),
        ];
        for (text, role) in corpus {
            let Ok(first) = Expression::parse(text, role) else {
                continue;
            };
            let printed = first.to_string();
            let second = Expression::parse(&printed, role).unwrap();
            assert_eq!(first, second, "{text} -> {printed}");
            assert_eq!(printed, second.to_string());
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|k| Expr::Num(k as f64 / 8.0)),
            Just(Expr::E),
            Just(Expr::Var(Var::T)),
            Just(Expr::Var(Var::U)),
            Just(Expr::Var(Var::V)),
        ];
        leaf.prop_recursive(5, 48, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Binary(
                        op,
                        Box::new(a),
                        Box::new(b)
                    )),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Max, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn printing_preserves_structure(e in arb_expr()) {
            let text = e.to_string();
            let back = Expression::parse(&text, Role::Nonlinearity).unwrap();
            prop_assert_eq!(back.ast(), &e);
        }

        #[test]
        fn linear_functionals_are_homogeneous(
            a in 0.0f64..1.0, w in 0.0f64..3.0, c in 0.0f64..5.0, alpha in 0.0f64..10.0
        ) {
            let g = Grid::new(64).unwrap();
            let h = Expression::parse(
                &format!("{w}*U({a}) + INT(DU(s)) + {c}*INT(s*U(s))"),
                Role::Functional,
            ).unwrap();
            let u = GridFunction::from_fn(g, |t| t * t + 0.5, |t| 2.0 * t);
            let lhs = h.eval_functional(&u.scaled(alpha)).unwrap();
            let rhs = alpha * h.eval_functional(&u).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
