//! A small complex-valued expression language for writing potentials such as
//! `i*sin(x)^3` directly.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'i' | 'pi' | 'e' | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so `-x^2` is
//! `-(x^2)`. Implicit multiplication is not supported.

use std::f64::consts::{E, PI};
use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

pub const MAX_SOURCE_LEN: usize = 4096;
pub const MAX_DEPTH: usize = 64;

/// Divisors smaller than this in modulus are rejected during evaluation.
const MIN_DIVISOR: f64 = 1e-300;

/// Integer exponents up to this magnitude are evaluated by repeated multiplication.
const MAX_EXACT_POWER: i32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Sinh,
    Cosh,
    Abs,
    Re,
    Im,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Sinh,
        Func::Cosh,
        Func::Abs,
        Func::Re,
        Func::Im,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Abs => "abs",
            Func::Re => "re",
            Func::Im => "im",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Tan => z.tan(),
            Func::Exp => z.exp(),
            Func::Sinh => z.sinh(),
            Func::Cosh => z.cosh(),
            Func::Abs => C64::new(z.norm(), 0.0),
            Func::Re => C64::new(z.re, 0.0),
            Func::Im => C64::new(z.im, 0.0),
        }
    }
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Number(C64),
    VariableX,
    Neg(Box<ExprAst>),
    Binary(BinOp, Box<ExprAst>, Box<ExprAst>),
    Call(Func, Box<ExprAst>),
}

impl ExprAst {
    pub fn depth(&self) -> usize {
        match self {
            ExprAst::Number(_) | ExprAst::VariableX => 1,
            ExprAst::Neg(a) | ExprAst::Call(_, a) => 1 + a.depth(),
            ExprAst::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// True when the tree references `x` anywhere.
    pub fn depends_on_x(&self) -> bool {
        match self {
            ExprAst::Number(_) => false,
            ExprAst::VariableX => true,
            ExprAst::Neg(a) | ExprAst::Call(_, a) => a.depends_on_x(),
            ExprAst::Binary(_, a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }
}

/// Canonical, fully parenthesised text. Re-parsing it yields the same tree for
/// every tree the parser can produce.
impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Number(c) => {
                if c.re == 0.0 && c.im == 1.0 {
                    write!(f, "i")
                } else if c.im == 0.0 && c.re >= 0.0 && !c.re.is_sign_negative() {
                    write!(f, "{:?}", c.re)
                } else {
                    write!(f, "({:?}+{:?}*i)", c.re, c.im)
                }
            }
            ExprAst::VariableX => write!(f, "x"),
            ExprAst::Neg(a) => write!(f, "(-{a})"),
            ExprAst::Binary(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            ExprAst::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("empty expression")]
    Empty,
    #[error("expression is {len} characters long (limit {MAX_SOURCE_LEN})")]
    TooLong { len: usize },
    #[error("parse error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("expression nesting exceeds depth {MAX_DEPTH} at byte {offset}")]
    TooDeep { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by a value of modulus {modulus:e}")]
    DivisionByZero { modulus: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'.' {
                    pos += 1;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
                // exponent part only when digits follow, so `2e` stays an error
                if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                    let mut q = pos + 1;
                    if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                        q += 1;
                    }
                    if q < bytes.len() && bytes[q].is_ascii_digit() {
                        while q < bytes.len() && bytes[q].is_ascii_digit() {
                            q += 1;
                        }
                        pos = q;
                    }
                }
                let text = &src[start..pos];
                let value = text.parse::<f64>().map_err(|_| ExprError::Parse {
                    offset: start,
                    expected: vec!["number".into()],
                    found: format!("'{text}'"),
                })?;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                    pos += 1;
                }
                out.push((Tok::Ident(src[start..pos].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Parse {
                    offset: start,
                    expected: vec!["expression".into()],
                    found: format!("'{ch}'"),
                });
            }
        };
        out.push((tok, start));
        pos += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ExprError {
        ExprError::Parse {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.nesting += 1;
        if self.nesting > MAX_DEPTH {
            return Err(ExprError::TooDeep { offset: self.offset() });
        }
        Ok(())
    }

    fn sum(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<ExprAst, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = ExprAst::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<ExprAst, ExprError> {
        self.enter()?;
        let node = if matches!(self.peek(), Tok::Minus) {
            self.bump();
            ExprAst::Neg(Box::new(self.unary()?))
        } else {
            self.power()?
        };
        self.nesting -= 1;
        Ok(node)
    }

    fn power(&mut self) -> Result<ExprAst, ExprError> {
        let base = self.primary()?;
        if matches!(self.peek(), Tok::Caret) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(ExprAst::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<ExprAst, ExprError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(ExprAst::Number(C64::new(v, 0.0)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.offset();
                self.bump();
                match name.as_str() {
                    "x" => Ok(ExprAst::VariableX),
                    "i" => Ok(ExprAst::Number(C64::new(0.0, 1.0))),
                    "pi" => Ok(ExprAst::Number(C64::new(PI, 0.0))),
                    "e" => Ok(ExprAst::Number(C64::new(E, 0.0))),
                    other => match Func::from_name(other) {
                        Some(func) => {
                            if !matches!(self.peek(), Tok::LParen) {
                                return Err(self.unexpected(&["'('"]));
                            }
                            self.bump();
                            let arg = self.sum()?;
                            self.expect_rparen()?;
                            Ok(ExprAst::Call(func, Box::new(arg)))
                        }
                        None => Err(ExprError::UnknownIdentifier {
                            name: other.to_string(),
                            offset,
                        }),
                    },
                }
            }
            _ => Err(self.unexpected(&["number", "identifier", "'('", "'-'"])),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if matches!(self.peek(), Tok::RParen) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&["')'", "operator"]))
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<ExprAst, ExprError> {
    let len = source.chars().count();
    if len > MAX_SOURCE_LEN {
        return Err(ExprError::TooLong { len });
    }
    if source.trim().is_empty() {
        return Err(ExprError::Empty);
    }
    let mut parser = Parser {
        toks: lex(source)?,
        pos: 0,
        nesting: 0,
    };
    let ast = parser.sum()?;
    if !matches!(parser.peek(), Tok::End) {
        return Err(parser.unexpected(&["operator", "end of input"]));
    }
    if ast.depth() > MAX_DEPTH {
        return Err(ExprError::TooDeep { offset: 0 });
    }
    Ok(ast)
}

fn checked_div(num: C64, den: C64) -> Result<C64, EvalError> {
    let modulus = den.norm();
    if modulus < MIN_DIVISOR {
        return Err(EvalError::DivisionByZero { modulus });
    }
    Ok(num / den)
}

fn pow(base: C64, exponent: C64) -> Result<C64, EvalError> {
    if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= MAX_EXACT_POWER as f64 {
        let n = exponent.re as i32;
        let mut acc = C64::new(1.0, 0.0);
        for _ in 0..n.unsigned_abs() {
            acc *= base;
        }
        return if n < 0 { checked_div(C64::new(1.0, 0.0), acc) } else { Ok(acc) };
    }
    if base == C64::new(0.0, 0.0) {
        return if exponent.re > 0.0 {
            Ok(C64::new(0.0, 0.0))
        } else {
            Err(EvalError::DivisionByZero { modulus: 0.0 })
        };
    }
    // principal branch: exp(w * Log z), with -0.0 imaginary parts read as +0.0
    let base = C64::new(base.re, base.im + 0.0);
    Ok((exponent * base.ln()).exp())
}

/// Evaluates `ast` at the real abscissa `x`.
pub fn eval_expr(ast: &ExprAst, x: f64) -> Result<C64, EvalError> {
    Ok(match ast {
        ExprAst::Number(c) => *c,
        ExprAst::VariableX => C64::new(x, 0.0),
        ExprAst::Neg(a) => -eval_expr(a, x)?,
        ExprAst::Call(func, a) => func.apply(eval_expr(a, x)?),
        ExprAst::Binary(op, a, b) => {
            let lhs = eval_expr(a, x)?;
            let rhs = eval_expr(b, x)?;
            match op {
                BinOp::Add => lhs + rhs,
                BinOp::Sub => lhs - rhs,
                BinOp::Mul => lhs * rhs,
                BinOp::Div => checked_div(lhs, rhs)?,
                BinOp::Pow => pow(lhs, rhs)?,
            }
        }
    })
}

/// Replaces every whole identifier `name` in `source` by the parenthesised
/// literal `value`. Used to sweep a named amplitude through an expression.
pub fn substitute_param(source: &str, name: &str, value: f64) -> String {
    let bytes = source.as_bytes();
    let mut out = String::with_capacity(source.len() + 16);
    let mut pos = 0;
    while pos < bytes.len() {
        let start = pos;
        let c = bytes[pos];
        if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            let ident = &source[start..pos];
            if ident == name {
                out.push_str(&format!("({value:?})"));
            } else {
                out.push_str(ident);
            }
        } else if c.is_ascii_digit() || c == b'.' {
            // numeric literals keep their exponent letter, e.g. 1e5
            while pos < bytes.len() && (bytes[pos].is_ascii_digit() || bytes[pos] == b'.') {
                pos += 1;
            }
            if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                let mut q = pos + 1;
                if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                    q += 1;
                }
                if q < bytes.len() && bytes[q].is_ascii_digit() {
                    while q < bytes.len() && bytes[q].is_ascii_digit() {
                        q += 1;
                    }
                    pos = q;
                }
            }
            out.push_str(&source[start..pos]);
        } else {
            let ch = source[start..].chars().next().unwrap_or(' ');
            out.push(ch);
            pos += ch.len_utf8();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn num(re: f64) -> Box<ExprAst> {
        Box::new(ExprAst::Number(C64::new(re, 0.0)))
    }

    #[test]
    fn parses_cubed_sine() {
        let ast = parse("i*sin(x)^3").unwrap();
        let expected = ExprAst::Binary(
            BinOp::Mul,
            Box::new(ExprAst::Number(C64::new(0.0, 1.0))),
            Box::new(ExprAst::Binary(
                BinOp::Pow,
                Box::new(ExprAst::Call(Func::Sin, Box::new(ExprAst::VariableX))),
                num(3.0),
            )),
        );
        assert_eq!(ast, expected);
    }

    #[test]
    fn precedence_of_sum_and_product() {
        let ast = parse("2+3*x").unwrap();
        let expected = ExprAst::Binary(
            BinOp::Add,
            num(2.0),
            Box::new(ExprAst::Binary(BinOp::Mul, num(3.0), Box::new(ExprAst::VariableX))),
        );
        assert_eq!(ast, expected);
    }

    #[test]
    fn pow_is_right_associative_and_beats_negation() {
        assert_eq!(parse("2^3^2").unwrap(), parse("2^(3^2)").unwrap());
        assert_eq!(parse("-x^2").unwrap(), parse("-(x^2)").unwrap());
        assert_eq!(parse("1-2-3").unwrap(), parse("(1-2)-3").unwrap());
        let v = eval_expr(&parse("2^-1").unwrap(), 0.0).unwrap();
        assert_eq!(v, C64::new(0.5, 0.0));
    }

    #[test]
    fn function_needs_parentheses() {
        match parse("sin x") {
            Err(ExprError::Parse { offset, expected, .. }) => {
                assert_eq!(offset, 4);
                assert_eq!(expected, vec!["'('".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_names_and_implicit_products() {
        assert!(matches!(
            parse("y+1"),
            Err(ExprError::UnknownIdentifier { ref name, offset: 0 }) if name == "y"
        ));
        assert!(matches!(parse("2x"), Err(ExprError::UnknownIdentifier { .. }) | Err(ExprError::Parse { .. })));
        assert!(matches!(parse("2 x"), Err(ExprError::Parse { offset: 2, .. })));
        assert!(matches!(parse(""), Err(ExprError::Empty)));
        assert!(matches!(parse("   "), Err(ExprError::Empty)));
        assert!(matches!(parse("(1+2"), Err(ExprError::Parse { offset: 4, .. })));
        assert!(matches!(parse("1 $ 2"), Err(ExprError::Parse { offset: 2, .. })));
    }

    #[test]
    fn enforces_size_and_depth_limits() {
        let long = "1+".repeat(2100) + "1";
        assert!(matches!(parse(&long), Err(ExprError::TooLong { .. })));
        let nested = "(".repeat(70) + "x" + &")".repeat(70);
        assert!(matches!(parse(&nested), Err(ExprError::TooDeep { .. })));
        let chain = vec!["x"; 80].join("+");
        assert!(matches!(parse(&chain), Err(ExprError::TooDeep { .. })));
        assert!(parse(&vec!["x"; 40].join("+")).is_ok());
    }

    #[test]
    fn evaluates_reference_values() {
        let v = eval_expr(&parse("i*sin(x)^3").unwrap(), std::f64::consts::FRAC_PI_2).unwrap();
        assert_eq!(v, C64::new(0.0, 1.0));
        assert!(matches!(
            eval_expr(&parse("x/x").unwrap(), 0.0),
            Err(EvalError::DivisionByZero { .. })
        ));
        let euler = eval_expr(&parse("exp(i*pi)").unwrap(), 123.0).unwrap();
        assert!((euler - C64::new(-1.0, 0.0)).norm() <= 1e-15);
        let scientific = eval_expr(&parse("1.5e2 + .5").unwrap(), 0.0).unwrap();
        assert_eq!(scientific, C64::new(150.5, 0.0));
    }

    #[test]
    fn principal_branch_for_fractional_powers() {
        let v = eval_expr(&parse("(-1)^0.5").unwrap(), 0.0).unwrap();
        assert!((v - C64::new(0.0, 1.0)).norm() < 1e-15);
        let z = eval_expr(&parse("0^0.5").unwrap(), 0.0).unwrap();
        assert_eq!(z, C64::new(0.0, 0.0));
        assert!(eval_expr(&parse("0^-1").unwrap(), 0.0).is_err());
        let re_im = eval_expr(&parse("re(2+3*i) + im(2+3*i) + abs(3+4*i)").unwrap(), 0.0).unwrap();
        assert_eq!(re_im, C64::new(10.0, 0.0));
    }

    #[test]
    fn substitutes_whole_identifiers_only() {
        assert_eq!(substitute_param("A*i*sin(x)^3", "A", 2.5), "(2.5)*i*sin(x)^3");
        assert_eq!(substitute_param("abs(A)+Ax+1e5", "A", -1.0), "abs((-1.0))+Ax+1e5");
        assert!(parse(&substitute_param("A*i*sin(x)^3", "A", 0.75)).is_ok());
    }

    fn leaf() -> impl Strategy<Value = ExprAst> {
        prop_oneof![
            Just(ExprAst::VariableX),
            Just(ExprAst::Number(C64::new(0.0, 1.0))),
            Just(ExprAst::Number(C64::new(PI, 0.0))),
            (0.0f64..1e6).prop_map(|v| ExprAst::Number(C64::new(v, 0.0))),
            (0u32..20).prop_map(|v| ExprAst::Number(C64::new(v as f64, 0.0))),
        ]
    }

    fn tree() -> impl Strategy<Value = ExprAst> {
        leaf().prop_recursive(5, 64, 2, |inner| {
            let ops = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow)
            ];
            let funcs = proptest::sample::select(Func::ALL.to_vec());
            prop_oneof![
                inner.clone().prop_map(|a| ExprAst::Neg(Box::new(a))),
                (funcs, inner.clone()).prop_map(|(f, a)| ExprAst::Call(f, Box::new(a))),
                (ops, inner.clone(), inner).prop_map(|(op, a, b)| ExprAst::Binary(op, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn canonical_text_round_trips(ast in tree()) {
            let text = ast.to_string();
            let reparsed = parse(&text).unwrap();
            prop_assert_eq!(reparsed, ast);
        }

        #[test]
        fn evaluation_never_panics(ast in tree(), x in -10.0f64..10.0) {
            let _ = eval_expr(&ast, x);
        }
    }
}
