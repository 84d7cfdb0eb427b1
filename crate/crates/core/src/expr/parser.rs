//! Lexer and recursive-descent parser.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```

use super::ast::{BinOp, Expr, Func, Role, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only when digits follow, so `2e` stays `2` then `e`
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let x: f64 = s
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{s}`")))?;
            out.push(Token {
                tok: Tok::Num(x),
                pos: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(text[start..i].to_string()),
                pos: start,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                pos: i,
            });
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or(c);
            return Err(syntax(i, format!("unexpected character `{ch}`")));
        }
    }
    out.push(Token {
        tok: Tok::End,
        pos: text.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    role: Role,
    inside_integral: bool,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::End {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Sym(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let t = self.peek();
            Err(syntax(t.pos, format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(args)
    }

    fn single_arg(&mut self, name: &str, pos: usize) -> Result<Expr> {
        let mut args = self.args()?;
        if args.len() != 1 {
            return Err(syntax(pos, format!("`{name}` takes exactly one argument")));
        }
        Ok(args.pop().expect("one argument"))
    }

    fn primary(&mut self) -> Result<Expr> {
        let Token { tok, pos } = self.bump();
        match tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => self.named(name, pos),
            Tok::End => Err(syntax(pos, "unexpected end of expression")),
            Tok::Sym(c) => Err(syntax(pos, format!("unexpected `{c}`"))),
        }
    }

    fn functional_atom(&self, name: &str, pos: usize) -> Result<()> {
        if self.role != Role::Functional {
            return Err(Error::IllegalVariable {
                name: name.to_string(),
                role: self.role.name(),
                pos,
            });
        }
        Ok(())
    }

    fn named(&mut self, name: String, pos: usize) -> Result<Expr> {
        match name.as_str() {
            "e" => return Ok(Expr::E),
            "pi" => return Ok(Expr::Pi),
            "U" | "DU" => {
                self.functional_atom(&name, pos)?;
                let a = Box::new(self.single_arg(&name, pos)?);
                return Ok(if name == "U" {
                    Expr::PointValue(a)
                } else {
                    Expr::PointDeriv(a)
                });
            }
            "INT" => {
                self.functional_atom(&name, pos)?;
                if self.inside_integral {
                    return Err(Error::NestedIntegral { pos });
                }
                self.inside_integral = true;
                let body = self.single_arg(&name, pos);
                self.inside_integral = false;
                return Ok(Expr::Integral(Box::new(body?)));
            }
            _ => {}
        }
        if let Some(func) = Func::from_name(&name) {
            let args = self.args()?;
            if !func.arity_ok(args.len()) {
                return Err(syntax(
                    pos,
                    format!("wrong number of arguments ({}) for `{name}`", args.len()),
                ));
            }
            return Ok(Expr::Call(func, args));
        }
        if let Some(var) = Var::from_name(&name) {
            if !self.role.allows(var, self.inside_integral) {
                return Err(Error::IllegalVariable {
                    name,
                    role: self.role.name(),
                    pos,
                });
            }
            return Ok(Expr::Var(var));
        }
        Err(syntax(pos, format!("unknown name `{name}`")))
    }
}

pub(super) fn parse(text: &str, role: Role) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser {
        tokens: lex(text)?,
        at: 0,
        role,
        inside_integral: false,
    };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(syntax(t.pos, "unexpected trailing input"));
    }
    Ok(e)
}
