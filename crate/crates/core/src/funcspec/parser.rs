//! Recursive-descent parser for expressions in `x`.
//!
//! ```text
//! expr  := term (("+" | "-") term)*
//! term  := unary (("*" | "/") unary)*
//! unary := "-" unary | power
//! power := atom ("^" unary)?
//! atom  := number | "x" | "pi" | "e" | func "(" expr ")" | "(" expr ")"
//! ```
//!
//! Exponents must not depend on `x`; they are folded to a constant.

use super::expr::{BinOp, Constant, Expr, Func};
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Token, usize)>, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lexer.next_token()?;
            let end = tok == Token::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next_token(&mut self) -> Result<(Token, usize), ParseError> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += self.peek().unwrap().len_utf8();
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Token::End, start));
        };
        let tok = match c {
            '0'..='9' | '.' => self.number()?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                Token::Ident(self.src[start..self.pos].to_string())
            }
            '+' | '-' | '*' | '/' | '^' => {
                self.pos += 1;
                Token::Op(c)
            }
            '(' => {
                self.pos += 1;
                Token::LParen
            }
            ')' => {
                self.pos += 1;
                Token::RParen
            }
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self) -> Result<Token, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
                look += 1;
            }
            if look < bytes.len() && bytes[look].is_ascii_digit() {
                self.pos = look;
                digits(&mut self.pos);
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Token::Num(v)),
            _ => Err(ParseError::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            }),
        }
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.idx].1
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.idx].0.clone();
        if tok != Token::End {
            self.idx += 1;
        }
        tok
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let message = match self.peek() {
            Token::End => format!("{}, found end of input", message.into()),
            _ => message.into(),
        };
        ParseError::Syntax {
            offset: self.offset(),
            message,
        }
    }

    fn expect(&mut self, tok: Token, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Token::Op('^') {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = self.unary()?;
        if exponent.contains_var() {
            return Err(ParseError::Syntax {
                offset: at,
                message: "exponent must be a numeric constant".into(),
            });
        }
        let c = exponent.eval(0.0);
        if !c.is_finite() {
            return Err(ParseError::Syntax {
                offset: at,
                message: "exponent is not finite".into(),
            });
        }
        Ok(Expr::Pow(Box::new(base), c))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().clone() {
            Token::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Token::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(e)
            }
            Token::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Const(Constant::Pi)),
                    "e" => Ok(Expr::Const(Constant::E)),
                    _ => match Func::from_name(&name) {
                        Some(func) => {
                            self.expect(Token::LParen, &format!("`(` after `{name}`"))?;
                            let arg = self.expr()?;
                            self.expect(Token::RParen, "`)`")?;
                            Ok(Expr::Call(func, Box::new(arg)))
                        }
                        None => Err(ParseError::UnknownIdentifier { offset: at, name }),
                    },
                }
            }
            _ => Err(self.error("expected an operand")),
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = Lexer::tokenize(text)?;
    let mut parser = Parser { tokens, idx: 0 };
    let e = parser.expr()?;
    if *parser.peek() != Token::End {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        let e = parse("x + 0.3*x*(1-x)").unwrap();
        assert!((e.eval(0.5) - 0.575).abs() < 1e-15);
        assert_eq!(parse("x").unwrap(), Expr::Var);
        assert_eq!(
            parse("x +"),
            Err(ParseError::Syntax {
                offset: 3,
                message: "expected an operand, found end of input".into()
            })
        );
    }

    #[test]
    fn precedence_and_associativity() {
        // unary minus binds looser than ^
        assert_eq!(parse("-x^2").unwrap().eval(3.0), -9.0);
        assert_eq!(parse("2^3^2").unwrap().eval(0.0), 512.0);
        assert_eq!(parse("x^-1").unwrap().eval(4.0), 0.25);
        assert_eq!(parse("1 - 2 - 3").unwrap().eval(0.0), -4.0);
        assert_eq!(parse("8 / 4 / 2").unwrap().eval(0.0), 1.0);
        assert_eq!(parse("1 + 2 * 3").unwrap().eval(0.0), 7.0);
        assert_eq!(parse("(1 + 2) * 3").unwrap().eval(0.0), 9.0);
        assert_eq!(parse("2 * -x").unwrap().eval(1.5), -3.0);
        assert_eq!(parse("1e-3 * x").unwrap().eval(2.0), 0.002);
        assert!((parse("sin(pi/2) + e").unwrap().eval(0.0) - (1.0 + std::f64::consts::E)).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse("x + foo(x)"),
            Err(ParseError::UnknownIdentifier {
                offset: 4,
                name: "foo".into()
            })
        );
        assert!(matches!(parse("x^x"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("(x"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("x )"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("sin x"), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("x $ 1"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("1e999"), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse(""), Err(ParseError::Syntax { offset: 0, .. })));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Var),
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 8.0)),
            Just(Expr::Const(Constant::Pi)),
            Just(Expr::Const(Constant::E)),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    inner.clone(),
                    prop_oneof![Just(Func::Sin), Just(Func::Exp), Just(Func::Tanh)]
                )
                    .prop_map(|(e, f)| Expr::Call(f, Box::new(e))),
                (
                    inner.clone(),
                    inner.clone(),
                    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)]
                )
                    .prop_map(|(l, r, op)| Expr::Binary(op, Box::new(l), Box::new(r))),
                (inner, -3i32..4).prop_map(|(e, c)| Expr::Pow(Box::new(e), c as f64)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}
