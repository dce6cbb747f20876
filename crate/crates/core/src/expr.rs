//! Small arithmetic expressions: decimal literals, `pi`, `sqrt(<int>)`,
//! `+ - * /`, parentheses and the free variable `theta`.
//!
//! Expressions evaluate either to `f64` or, for continued-fraction work, to
//! an exact rational carrying 30 significant digits.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Significant digits kept by [`Expr::eval_rational`].
pub const RATIONAL_DIGITS: u32 = 30;

/// Working precision for `pi` and square roots before the final rounding.
const WORK_DIGITS: u32 = 60;

const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899";

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(String),
    Pi,
    Theta,
    Sqrt(u64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!("trailing input in {text:?}")));
        }
        Ok(e)
    }

    pub fn uses_theta(&self) -> bool {
        match self {
            Expr::Theta => true,
            Expr::Number(_) | Expr::Pi | Expr::Sqrt(_) => false,
            Expr::Neg(a) => a.uses_theta(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.uses_theta() || b.uses_theta(),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Expr::Number(s) => s.parse().unwrap_or(f64::NAN),
            Expr::Pi => std::f64::consts::PI,
            Expr::Theta => theta,
            Expr::Sqrt(n) => (*n as f64).sqrt(),
            Expr::Neg(a) => -a.eval(theta),
            Expr::Add(a, b) => a.eval(theta) + b.eval(theta),
            Expr::Sub(a, b) => a.eval(theta) - b.eval(theta),
            Expr::Mul(a, b) => a.eval(theta) * b.eval(theta),
            Expr::Div(a, b) => a.eval(theta) / b.eval(theta),
        }
    }

    /// Value of a constant expression.
    pub fn value(&self) -> Result<f64> {
        if self.uses_theta() {
            return Err(Error::Expr("expression depends on theta".into()));
        }
        let v = self.eval(0.0);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Expr("expression is not finite".into()))
        }
    }

    /// Exact value for purely rational expressions; otherwise a rational
    /// approximation rounded to [`RATIONAL_DIGITS`] significant digits.
    pub fn eval_rational(&self) -> Result<BigRational> {
        if self.uses_theta() {
            return Err(Error::Expr("expression depends on theta".into()));
        }
        let v = self.exact()?;
        Ok(if self.is_rational() {
            v
        } else {
            round_significant(&v, RATIONAL_DIGITS)
        })
    }

    fn is_rational(&self) -> bool {
        match self {
            Expr::Number(_) => true,
            Expr::Pi | Expr::Theta => false,
            Expr::Sqrt(n) => {
                let r = (*n as f64).sqrt().round() as u64;
                r * r == *n
            }
            Expr::Neg(a) => a.is_rational(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.is_rational() && b.is_rational(),
        }
    }

    fn exact(&self) -> Result<BigRational> {
        Ok(match self {
            Expr::Number(s) => parse_decimal(s)?,
            Expr::Pi => parse_decimal(PI_DIGITS)?,
            Expr::Sqrt(n) => sqrt_rational(*n),
            Expr::Theta => unreachable!("checked by eval_rational"),
            Expr::Neg(a) => -a.exact()?,
            Expr::Add(a, b) => a.exact()? + b.exact()?,
            Expr::Sub(a, b) => a.exact()? - b.exact()?,
            Expr::Mul(a, b) => a.exact()? * b.exact()?,
            Expr::Div(a, b) => {
                let d = b.exact()?;
                if d.is_zero() {
                    return Err(Error::Expr("division by zero".into()));
                }
                a.exact()? / d
            }
        })
    }
}

fn pow10(k: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), k as usize)
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::Expr(format!("bad number {s:?}"));
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let shift = exp - frac_part.len() as i32;
    Ok(if shift >= 0 {
        BigRational::from_integer(n * pow10(shift as u32))
    } else {
        BigRational::new(n, pow10((-shift) as u32))
    })
}

fn sqrt_rational(n: u64) -> BigRational {
    let scaled = BigInt::from(n) * pow10(2 * WORK_DIGITS);
    BigRational::new(scaled.sqrt(), pow10(WORK_DIGITS))
}

/// Round `v` to `digits` significant decimal digits.
pub fn round_significant(v: &BigRational, digits: u32) -> BigRational {
    if v.is_zero() {
        return v.clone();
    }
    let approx = v.to_f64().unwrap_or(0.0).abs();
    let mag = if approx > 0.0 && approx.is_finite() {
        approx.log10().floor() as i64
    } else {
        0
    };
    let shift = digits as i64 - 1 - mag;
    let scale = if shift >= 0 {
        BigRational::from_integer(pow10(shift as u32))
    } else {
        BigRational::new(BigInt::one(), pow10((-shift) as u32))
    };
    let scaled = v * &scale;
    let rounded = if scaled.is_negative() {
        -((-scaled) + BigRational::new(BigInt::one(), BigInt::from(2))).floor()
    } else {
        (scaled + BigRational::new(BigInt::one(), BigInt::from(2))).floor()
    };
    rounded / scale
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(String),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token::Num(chars[start..i].iter().collect()));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| Error::Expr("unexpected end of input".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(s) => {
                parse_decimal(&s)?;
                Ok(Expr::Number(s))
            }
            Token::Op('(') => {
                let e = self.sum()?;
                if !self.eat_op(')') {
                    return Err(Error::Expr("missing ')'".into()));
                }
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "pi" => Ok(Expr::Pi),
                "theta" => Ok(Expr::Theta),
                "sqrt" => {
                    if !self.eat_op('(') {
                        return Err(Error::Expr("sqrt needs '('".into()));
                    }
                    let arg = match self.peek().cloned() {
                        Some(Token::Num(s)) if s.chars().all(|c| c.is_ascii_digit()) => {
                            s.parse::<u64>().map_err(|_| Error::Expr(format!("bad sqrt argument {s}")))?
                        }
                        _ => return Err(Error::Expr("sqrt takes a non-negative integer".into())),
                    };
                    self.pos += 1;
                    if !self.eat_op(')') {
                        return Err(Error::Expr("missing ')'".into()));
                    }
                    Ok(Expr::Sqrt(arg))
                }
                other => Err(Error::Expr(format!("unknown name {other:?}"))),
            },
            Token::Op(c) => Err(Error::Expr(format!("unexpected {c:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_evaluation() {
        let e = Expr::parse("(1+sqrt(5))/2").unwrap();
        assert!((e.value().unwrap() - 1.618_033_988_749_895).abs() < 1e-15);
        assert!((Expr::parse("2*pi - -1").unwrap().value().unwrap() - (std::f64::consts::TAU + 1.0)).abs() < 1e-15);
        assert!((Expr::parse("1.5e-1").unwrap().value().unwrap() - 0.15).abs() < 1e-17);
        let phi = Expr::parse("theta - 0.5").unwrap();
        assert!(phi.uses_theta());
        assert_eq!(phi.eval(2.0), 1.5);
        assert!(phi.value().is_err());
    }

    #[test]
    fn rational_evaluation_is_exact_where_possible() {
        let r = Expr::parse("3/7").unwrap().eval_rational().unwrap();
        assert_eq!(r, BigRational::new(3.into(), 7.into()));
        assert_eq!(Expr::parse("sqrt(9)/2").unwrap().eval_rational().unwrap(), BigRational::new(3.into(), 2.into()));
        let r = Expr::parse("0.125").unwrap().eval_rational().unwrap();
        assert_eq!(r, BigRational::new(1.into(), 8.into()));
    }

    #[test]
    fn sqrt_has_thirty_digits() {
        let r = Expr::parse("sqrt(2)").unwrap().eval_rational().unwrap();
        let sq = &r * &r - BigRational::from_integer(2.into());
        let err = sq.abs().to_f64().unwrap();
        assert!(err < 1e-28, "{err}");
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "1+", "sqrt(2.5)", "foo", "(1", "1 2", "2 $ 3"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
        assert!(Expr::parse("1/0").unwrap().eval_rational().is_err());
    }
}
