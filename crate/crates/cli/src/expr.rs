//! The product expression language.
//!
//! ```text
//! expr    := comp
//! comp    := prod ("@" prod)*        left-associative, f @ g is f(g(z))
//! prod    := pow ("*" pow)*
//! pow     := atom ("^" uint)?
//! atom    := "z" | "mobius(" complex ")" | "(" expr ")"
//! complex := float | float ("+"|"-") float "i" | float "i"
//! ```

use std::fmt;

use blaschke_core::FiniteBlaschkeProduct;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum ProductExpression {
    ZPower(usize),
    Moebius(Complex64),
    Product(Vec<ProductExpression>),
    Compose(Box<ProductExpression>, Box<ProductExpression>),
    Power(Box<ProductExpression>, usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("mobius parameter {value} at {position} is not inside the unit disk")]
    ParameterOutOfDisk { position: usize, value: Complex64 },
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SYNTAX_ERROR",
            ParseError::ParameterOutOfDisk { .. } => "PARAMETER_OUT_OF_DISK",
        }
    }
}

impl ProductExpression {
    pub fn order(&self) -> usize {
        match self {
            ProductExpression::ZPower(k) => *k,
            ProductExpression::Moebius(_) => 1,
            ProductExpression::Product(children) => children.iter().map(Self::order).sum(),
            ProductExpression::Compose(f, g) => f.order() * g.order(),
            ProductExpression::Power(child, k) => child.order() * k,
        }
    }

    pub fn to_product(&self) -> blaschke_core::Result<FiniteBlaschkeProduct> {
        Ok(match self {
            ProductExpression::ZPower(k) => FiniteBlaschkeProduct::z_power(*k),
            ProductExpression::Moebius(a) => FiniteBlaschkeProduct::moebius(*a)?,
            ProductExpression::Product(children) => {
                let mut parts = children.iter().map(Self::to_product);
                let first = parts.next().expect("a product has children")?;
                parts.try_fold(first, |acc, p| {
                    Ok::<_, blaschke_core::Error>(acc.product(&p?))
                })?
            }
            ProductExpression::Compose(f, g) => f.to_product()?.compose(&g.to_product()?)?,
            ProductExpression::Power(child, k) => child.to_product()?.power(*k),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            ProductExpression::Compose(..) => 0,
            ProductExpression::Product(_) => 1,
            // `z^k` is read as one node, so a further exponent needs parentheses
            ProductExpression::Power(..) | ProductExpression::ZPower(_) => 2,
            ProductExpression::Moebius(_) => 3,
        }
    }
}

fn write_complex(f: &mut fmt::Formatter<'_>, a: Complex64) -> fmt::Result {
    if a.im == 0.0 {
        write!(f, "{}", a.re)
    } else if a.re == 0.0 {
        write!(f, "{}i", a.im)
    } else if a.im < 0.0 {
        write!(f, "{}-{}i", a.re, -a.im)
    } else {
        write!(f, "{}+{}i", a.re, a.im)
    }
}

fn write_child(
    f: &mut fmt::Formatter<'_>,
    child: &ProductExpression,
    min_precedence: u8,
) -> fmt::Result {
    if child.precedence() < min_precedence {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for ProductExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductExpression::ZPower(1) => write!(f, "z"),
            ProductExpression::ZPower(k) => write!(f, "z^{k}"),
            ProductExpression::Moebius(a) => {
                write!(f, "mobius(")?;
                write_complex(f, *a)?;
                write!(f, ")")
            }
            ProductExpression::Product(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write_child(f, c, 2)?;
                }
                Ok(())
            }
            ProductExpression::Compose(outer, inner) => {
                write_child(f, outer, 0)?;
                write!(f, " @ ")?;
                write_child(f, inner, 1)
            }
            ProductExpression::Power(child, k) => {
                write_child(f, child, 3)?;
                write!(f, "^{k}")
            }
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

type ParseResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn error<T>(&self, message: impl Into<String>) -> ParseResult<T> {
        Err(ParseError::Syntax {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> ParseResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected '{c}'"))
        }
    }

    fn comp(&mut self) -> ParseResult<ProductExpression> {
        let mut lhs = self.prod()?;
        while self.eat('@') {
            let rhs = self.prod()?;
            lhs = ProductExpression::Compose(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prod(&mut self) -> ParseResult<ProductExpression> {
        let mut children = vec![self.pow()?];
        while self.eat('*') {
            children.push(self.pow()?);
        }
        Ok(if children.len() == 1 {
            children.pop().unwrap()
        } else {
            ProductExpression::Product(children)
        })
    }

    fn pow(&mut self) -> ParseResult<ProductExpression> {
        let (atom, bare_z) = self.atom()?;
        if !self.eat('^') {
            return Ok(atom);
        }
        let k = self.uint()?;
        Ok(if bare_z {
            ProductExpression::ZPower(k)
        } else {
            ProductExpression::Power(Box::new(atom), k)
        })
    }

    fn uint(&mut self) -> ParseResult<usize> {
        self.skip_ws();
        let start = self.pos;
        let digits = self.text[start..]
            .bytes()
            .take_while(u8::is_ascii_digit)
            .count();
        if digits == 0 {
            return self.error("expected an exponent");
        }
        let k: usize = match self.text[start..start + digits].parse() {
            Ok(k) => k,
            Err(_) => return self.error("exponent is too large"),
        };
        if k == 0 {
            return self.error("exponent must be positive");
        }
        self.pos += digits;
        Ok(k)
    }

    /// The atom, and whether it was a bare `z` (so that `z^k` becomes a
    /// single power node).
    fn atom(&mut self) -> ParseResult<(ProductExpression, bool)> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.comp()?;
                self.expect(')')?;
                Ok((inner, false))
            }
            Some('z') => {
                self.pos += 1;
                Ok((ProductExpression::ZPower(1), true))
            }
            Some('m') if self.text[self.pos..].starts_with("mobius") => {
                self.pos += "mobius".len();
                self.expect('(')?;
                let start = self.pos;
                let a = self.complex()?;
                self.expect(')')?;
                if !(a.norm() < 1.0) {
                    return Err(ParseError::ParameterOutOfDisk {
                        position: start,
                        value: a,
                    });
                }
                Ok((ProductExpression::Moebius(a), false))
            }
            Some(c) => self.error(format!("unexpected '{c}'")),
            None => self.error("unexpected end of input"),
        }
    }

    fn float(&mut self) -> ParseResult<f64> {
        self.skip_ws();
        let rest = self.text[self.pos..].as_bytes();
        let mut end = 0;
        if matches!(rest.first(), Some(b'+' | b'-')) {
            end += 1;
        }
        let mantissa_start = end;
        while end < rest.len() && (rest[end].is_ascii_digit() || rest[end] == b'.') {
            end += 1;
        }
        if end == mantissa_start {
            return self.error("expected a number");
        }
        if end < rest.len() && matches!(rest[end], b'e' | b'E') {
            let mut e = end + 1;
            if e < rest.len() && matches!(rest[e], b'+' | b'-') {
                e += 1;
            }
            let digits = rest[e..].iter().take_while(|b| b.is_ascii_digit()).count();
            if digits > 0 {
                end = e + digits;
            }
        }
        let token = &self.text[self.pos..self.pos + end];
        match token.parse::<f64>() {
            Ok(x) => {
                self.pos += end;
                Ok(x)
            }
            Err(_) => self.error(format!("malformed number {token:?}")),
        }
    }

    fn complex(&mut self) -> ParseResult<Complex64> {
        let first = self.float()?;
        if self.eat('i') {
            return Ok(Complex64::new(0.0, first));
        }
        match self.peek() {
            Some(sign @ ('+' | '-')) => {
                self.pos += 1;
                if matches!(self.peek(), Some('+' | '-')) {
                    return self.error("doubled sign in imaginary part");
                }
                let mag = self.float()?;
                self.expect('i')?;
                let im = if sign == '-' { -mag } else { mag };
                Ok(Complex64::new(first, im))
            }
            _ => Ok(Complex64::new(first, 0.0)),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<ProductExpression, ParseError> {
    let mut p = Parser { text, pos: 0 };
    let e = p.comp()?;
    if p.peek().is_some() {
        return p.error("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ProductExpression::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn z_power_is_one_node() {
        assert_eq!(parse_expr("z^8").unwrap(), ZPower(8));
        assert_eq!(parse_expr(" z ").unwrap(), ZPower(1));
    }

    #[test]
    fn composition_of_a_power() {
        let e = parse_expr("mobius(0.5)^2 @ z^4").unwrap();
        assert_eq!(
            e,
            Compose(
                Box::new(Power(Box::new(Moebius(c(0.5, 0.0))), 2)),
                Box::new(ZPower(4))
            )
        );
        assert_eq!(e.order(), 8);
    }

    #[test]
    fn product_orders_add() {
        let e = parse_expr("mobius(0.3+0.1i) * z^2").unwrap();
        assert_eq!(e.order(), 3);
        assert_eq!(e.to_product().unwrap().zeros().len(), 3);
    }

    #[test]
    fn complex_literals() {
        let m = |s: &str| match parse_expr(&format!("mobius({s})")).unwrap() {
            Moebius(a) => a,
            other => panic!("{other:?}"),
        };
        assert_eq!(m("0.5"), c(0.5, 0.0));
        assert_eq!(m("-0.25"), c(-0.25, 0.0));
        assert_eq!(m("0.1-0.5i"), c(0.1, -0.5));
        assert_eq!(m(" 0.3 + 0.1i "), c(0.3, 0.1));
        assert_eq!(m("-0.4i"), c(0.0, -0.4));
        assert_eq!(m("5e-1"), c(0.5, 0.0));
        assert_eq!(m("1e-1+2.5e-1i"), c(0.1, 0.25));
    }

    #[test]
    fn composition_is_left_associative() {
        let e = parse_expr("z^2 @ z^3 @ z").unwrap();
        assert!(matches!(&e, Compose(f, _) if matches!(**f, Compose(..))));
        assert_eq!(e.order(), 6);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(
            parse_expr("z^"),
            Err(ParseError::Syntax {
                position: 2,
                message: "expected an exponent".into()
            })
        );
        assert!(matches!(
            parse_expr("z * "),
            Err(ParseError::Syntax { position: 4, .. })
        ));
        assert!(matches!(
            parse_expr("mobius(0.5"),
            Err(ParseError::Syntax { position: 10, .. })
        ));
        assert!(matches!(parse_expr("z^0"), Err(ParseError::Syntax { .. })));
        assert!(matches!(
            parse_expr("w"),
            Err(ParseError::Syntax { position: 0, .. })
        ));
        assert!(matches!(
            parse_expr("z z"),
            Err(ParseError::Syntax { position: 2, .. })
        ));
        assert!(matches!(
            parse_expr("mobius(0.1+-0.2i)"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn parameters_outside_the_disk() {
        assert_eq!(
            parse_expr("z * mobius(0.6+0.8i)"),
            Err(ParseError::ParameterOutOfDisk {
                position: 11,
                value: c(0.6, 0.8)
            })
        );
        assert!(matches!(
            parse_expr("mobius(1.5)"),
            Err(ParseError::ParameterOutOfDisk { .. })
        ));
    }

    #[test]
    fn printing_keeps_the_tree() {
        for text in [
            "z",
            "z^8",
            "mobius(0.5)^2 @ z^4",
            "(z^2)^3",
            "(z)^2",
            "z^2 @ (z^3 @ z)",
            "(mobius(0.1)*z)*z",
            "mobius(-0.3-0.25i)*(z @ mobius(0.5i))",
            "(mobius(0.2)^2)^3",
        ] {
            let e = parse_expr(text).unwrap();
            assert_eq!(e.to_string(), text);
        }
    }
}
