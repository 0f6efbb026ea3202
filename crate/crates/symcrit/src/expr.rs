//! A small arithmetic grammar for coefficient expressions in spec files:
//! `+ - * / ^`, parentheses, the variable `x`, numeric literals and the
//! functions `exp log sin cos sinh cosh tanh abs sqrt`.
//!
//! Parse errors carry a byte position. `^` is right-associative and binds
//! tighter than unary minus (`-x^2` is `-(x^2)`); `log` is the natural
//! logarithm.

use std::fmt;

/// Parse failure with its byte offset into the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.message, self.position)
    }
}

impl std::error::Error for ExprError {}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError {
        position,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sinh" => Some(Func::Sinh),
            "cosh" => Some(Func::Cosh),
            "tanh" => Some(Func::Tanh),
            "abs" => Some(Func::Abs),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }

    fn apply(&self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
            Func::Sqrt => v.sqrt(),
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Var => x,
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Call(f, e) => f.apply(e.eval(x)),
        }
    }

    /// Constant value if the expression does not mention `x`.
    pub fn as_constant(&self) -> Option<f64> {
        match self.poly_coeffs() {
            Some(c) if c.len() <= 1 => Some(c.first().copied().unwrap_or(0.0)),
            _ => {
                // non-polynomial but possibly still constant (e.g. exp(1))
                if self.mentions_var() {
                    None
                } else {
                    Some(self.eval(0.0))
                }
            }
        }
    }

    fn mentions_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.mentions_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.mentions_var() || b.mentions_var(),
        }
    }

    /// Polynomial coefficients [c₀, c₁, …] when the expression is a
    /// polynomial in x of degree ≤ 8. The declaration feeds the closed-form
    /// Gaussian transform path.
    pub fn poly_coeffs(&self) -> Option<Vec<f64>> {
        const MAX_DEG: usize = 8;
        fn trim(mut v: Vec<f64>) -> Vec<f64> {
            while v.len() > 1 && v.last() == Some(&0.0) {
                v.pop();
            }
            v
        }
        let coeffs = match self {
            Expr::Num(c) => vec![*c],
            Expr::Var => vec![0.0, 1.0],
            Expr::Neg(e) => e.poly_coeffs()?.into_iter().map(|c| -c).collect(),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let pa = a.poly_coeffs()?;
                let pb = b.poly_coeffs()?;
                let sign = if matches!(self, Expr::Add(..)) { 1.0 } else { -1.0 };
                let mut out = vec![0.0; pa.len().max(pb.len())];
                for (k, c) in pa.iter().enumerate() {
                    out[k] += c;
                }
                for (k, c) in pb.iter().enumerate() {
                    out[k] += sign * c;
                }
                out
            }
            Expr::Mul(a, b) => {
                let pa = a.poly_coeffs()?;
                let pb = b.poly_coeffs()?;
                if pa.len() + pb.len() > MAX_DEG + 2 {
                    return None;
                }
                let mut out = vec![0.0; pa.len() + pb.len() - 1];
                for (i, ca) in pa.iter().enumerate() {
                    for (j, cb) in pb.iter().enumerate() {
                        out[i + j] += ca * cb;
                    }
                }
                out
            }
            Expr::Div(a, b) => {
                let denom = b.poly_coeffs()?;
                let denom = trim(denom);
                if denom.len() != 1 || denom[0] == 0.0 {
                    return None;
                }
                a.poly_coeffs()?.into_iter().map(|c| c / denom[0]).collect()
            }
            Expr::Pow(a, b) => {
                let exp = trim(b.poly_coeffs()?);
                if exp.len() != 1 {
                    return None;
                }
                let e = exp[0];
                if e < 0.0 || e.fract() != 0.0 || e > MAX_DEG as f64 {
                    return None;
                }
                let base = a.poly_coeffs()?;
                let mut out = vec![1.0];
                for _ in 0..e as usize {
                    if out.len() + base.len() > MAX_DEG + 2 {
                        return None;
                    }
                    let mut next = vec![0.0; out.len() + base.len() - 1];
                    for (i, ca) in out.iter().enumerate() {
                        for (j, cb) in base.iter().enumerate() {
                            next[i + j] += ca * cb;
                        }
                    }
                    out = next;
                }
                out
            }
            Expr::Call(..) => return None,
        };
        let coeffs = trim(coeffs);
        if coeffs.len() > MAX_DEG + 1 {
            None
        } else {
            Some(coeffs)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' => {
                tokens.push((i, Token::Plus));
                i += 1;
            }
            b'-' => {
                tokens.push((i, Token::Minus));
                i += 1;
            }
            b'*' => {
                tokens.push((i, Token::Star));
                i += 1;
            }
            b'/' => {
                tokens.push((i, Token::Slash));
                i += 1;
            }
            b'^' => {
                tokens.push((i, Token::Caret));
                i += 1;
            }
            b'(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mark = i;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i].is_ascii_digit() {
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        // not an exponent after all (e.g. "2e" before "xp...")
                        i = mark;
                    }
                }
                let text = &src[start..i];
                match text.parse::<f64>() {
                    Ok(v) => tokens.push((start, Token::Num(v))),
                    Err(_) => return err(start, format!("invalid number `{text}`")),
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((start, Token::Ident(src[start..i].to_string())));
            }
            _ => {
                return err(i, format!("unexpected character `{}`", src[i..].chars().next().unwrap()))
            }
        }
    }
    Ok(tokens)
}

const MAX_DEPTH: usize = 200;

struct Parser<'a> {
    tokens: &'a [(usize, Token)],
    pos: usize,
    src_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.src_len)
    }

    fn advance(&mut self) -> Option<&(usize, Token)> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn expr(&mut self, depth: usize) -> Result<Expr, ExprError> {
        if depth > MAX_DEPTH {
            return err(self.here(), "expression too deeply nested");
        }
        let mut node = self.term(depth + 1)?;
        while matches!(self.peek(), Some(Token::Plus) | Some(Token::Minus)) {
            let plus = matches!(self.peek(), Some(Token::Plus));
            self.advance();
            let rhs = self.term(depth + 1)?;
            node = if plus {
                Expr::Add(Box::new(node), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(node), Box::new(rhs))
            };
        }
        Ok(node)
    }

    fn term(&mut self, depth: usize) -> Result<Expr, ExprError> {
        if depth > MAX_DEPTH {
            return err(self.here(), "expression too deeply nested");
        }
        let mut node = self.unary(depth + 1)?;
        while matches!(self.peek(), Some(Token::Star) | Some(Token::Slash)) {
            let mul = matches!(self.peek(), Some(Token::Star));
            self.advance();
            let rhs = self.unary(depth + 1)?;
            node = if mul {
                Expr::Mul(Box::new(node), Box::new(rhs))
            } else {
                Expr::Div(Box::new(node), Box::new(rhs))
            };
        }
        Ok(node)
    }

    fn unary(&mut self, depth: usize) -> Result<Expr, ExprError> {
        if depth > MAX_DEPTH {
            return err(self.here(), "expression too deeply nested");
        }
        match self.peek() {
            Some(Token::Minus) => {
                self.advance();
                Ok(Expr::Neg(Box::new(self.unary(depth + 1)?)))
            }
            Some(Token::Plus) => {
                self.advance();
                self.unary(depth + 1)
            }
            _ => self.power(depth + 1),
        }
    }

    fn power(&mut self, depth: usize) -> Result<Expr, ExprError> {
        if depth > MAX_DEPTH {
            return err(self.here(), "expression too deeply nested");
        }
        let base = self.atom(depth + 1)?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.advance();
            // right-associative; the exponent may carry its own sign
            let exponent = self.unary(depth + 1)?;
            Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self, depth: usize) -> Result<Expr, ExprError> {
        if depth > MAX_DEPTH {
            return err(self.here(), "expression too deeply nested");
        }
        let position = self.here();
        match self.advance() {
            Some((_, Token::Num(v))) => Ok(Expr::Num(*v)),
            Some((pos, Token::Ident(name))) => {
                let pos = *pos;
                if name == "x" {
                    return Ok(Expr::Var);
                }
                let name = name.clone();
                match Func::from_name(&name) {
                    Some(f) => {
                        let open = self.here();
                        match self.advance() {
                            Some((_, Token::LParen)) => {}
                            _ => return err(open, format!("expected `(` after `{name}`")),
                        }
                        let arg = self.expr(depth + 1)?;
                        let close = self.here();
                        match self.advance() {
                            Some((_, Token::RParen)) => Ok(Expr::Call(f, Box::new(arg))),
                            _ => err(close, "expected `)`"),
                        }
                    }
                    None => err(pos, format!("unknown identifier `{name}`")),
                }
            }
            Some((_, Token::LParen)) => {
                let inner = self.expr(depth + 1)?;
                let close = self.here();
                match self.advance() {
                    Some((_, Token::RParen)) => Ok(inner),
                    _ => err(close, "expected `)`"),
                }
            }
            Some((pos, tok)) => err(*pos, format!("unexpected token {tok:?}")),
            None => err(position, "unexpected end of expression"),
        }
    }
}

/// Parses a coefficient expression.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return err(0, "empty expression");
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        src_len: src.len(),
    };
    let expr = parser.expr(0)?;
    if parser.pos != tokens.len() {
        return err(parser.here(), "trailing input after expression");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eval(src: &str, x: f64) -> f64 {
        parse(src).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2+3*4", 0.0), 14.0);
        assert_eq!(eval("2*3^2", 0.0), 18.0);
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("(-2)^2", 0.0), 4.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0); // right-associative
        assert_eq!(eval("10-4-3", 0.0), 3.0); // left-associative
        assert_eq!(eval("x^-1", 4.0), 0.25);
    }

    #[test]
    fn functions_and_variable() {
        assert_abs_diff_eq!(eval("exp(x)", 1.0), std::f64::consts::E, epsilon = 1e-15);
        assert_abs_diff_eq!(eval("1/cosh(x)", 0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval("-tanh(x)", 0.5), -(0.5f64.tanh()), epsilon = 1e-15);
        assert_abs_diff_eq!(
            eval("sqrt(abs(-9))", 0.0),
            3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(eval("log(exp(2))", 0.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eval("1.5e-2*x", 2.0), 0.03, epsilon = 1e-17);
    }

    #[test]
    fn error_positions() {
        let e = parse("1 + $").unwrap_err();
        assert_eq!(e.position, 4);
        let e = parse("sin(x").unwrap_err();
        assert_eq!(e.position, 5);
        let e = parse("foo(x)").unwrap_err();
        assert_eq!(e.position, 0);
        assert!(e.message.contains("foo"));
        let e = parse("1 2").unwrap_err();
        assert_eq!(e.position, 2);
        assert!(parse("").is_err());
        assert!(parse("1+").is_err());
    }

    #[test]
    fn deep_nesting_is_rejected_not_a_crash() {
        let src = "(".repeat(100_000) + "x" + &")".repeat(100_000);
        let e = parse(&src).unwrap_err();
        assert!(e.message.contains("nested"));
    }

    #[test]
    fn polynomial_extraction() {
        assert_eq!(parse("1").unwrap().poly_coeffs(), Some(vec![1.0]));
        assert_eq!(parse("-x").unwrap().poly_coeffs(), Some(vec![0.0, -1.0]));
        assert_eq!(
            parse("(1+x)^2").unwrap().poly_coeffs(),
            Some(vec![1.0, 2.0, 1.0])
        );
        assert_eq!(
            parse("x*x/2 - 3").unwrap().poly_coeffs(),
            Some(vec![-3.0, 0.0, 0.5])
        );
        assert_eq!(parse("sin(x)").unwrap().poly_coeffs(), None);
        assert_eq!(parse("x^0.5").unwrap().poly_coeffs(), None);
        assert_eq!(parse("1/x").unwrap().poly_coeffs(), None);
        // constants detected even through non-polynomial functions
        assert_eq!(parse("exp(1)").unwrap().as_constant(), Some(1f64.exp()));
        assert_eq!(parse("x+1").unwrap().as_constant(), None);
    }

    #[test]
    fn division_by_zero_follows_ieee() {
        assert!(eval("1/x", 0.0).is_infinite());
        assert!(eval("0/x", 0.0).is_nan());
    }
}
