//! Parser for the model description language.
//!
//! The format is line-agnostic and statement-oriented; every statement ends
//! with `;` and `#` starts a comment that runs to end of line. See
//! `docs/grammar.ebnf` for the grammar. Errors carry 1-based line and
//! column positions.

use super::poly::Polynomial;
use super::{AmbientFactor, FactorKind, GaugeChart, Model};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, col {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(BigInt),
    Semi,
    Pipe,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Caret,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Nat(n) => format!("number {n}"),
            Tok::Semi => "';'".into(),
            Tok::Pipe => "'|'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Caret => "'^'".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<(Vec<Spanned>, (u32, u32)), ParseError> {
    let mut toks = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while let Some(&d) = chars.peek() {
                if d == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
            continue;
        }
        let (tline, tcol) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    s.push(d);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            toks.push(Spanned { tok: Tok::Ident(s), line: tline, col: tcol });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() {
                    s.push(d);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let n: BigInt = s.parse().expect("digit run parses");
            toks.push(Spanned { tok: Tok::Nat(n), line: tline, col: tcol });
            continue;
        }
        let tok = match c {
            ';' => Tok::Semi,
            '|' => Tok::Pipe,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            other => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unexpected character '{other}'"),
                })
            }
        };
        chars.next();
        col += 1;
        toks.push(Spanned { tok, line: tline, col: tcol });
    }
    Ok((toks, (line, col)))
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (u32, u32),
}

const MAX_EXPONENT: u64 = 4096;
const MAX_AMBIENT_DIM: u64 = 64;

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Spanned> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: String) -> ParseError {
        match self.toks.get(self.pos) {
            Some(t) => ParseError { line: t.line, col: t.col, message },
            None => ParseError { line: self.eof.0, col: self.eof.1, message },
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.tok == *want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ParseError {
                line: t.line,
                col: t.col,
                message: format!("expected {what}, found {}", t.tok.describe()),
            }),
            None => Err(self.err_here(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, u32, u32), ParseError> {
        match self.peek() {
            Some(Spanned { tok: Tok::Ident(s), line, col }) => {
                let out = (s.clone(), *line, *col);
                self.pos += 1;
                Ok(out)
            }
            Some(t) => Err(ParseError {
                line: t.line,
                col: t.col,
                message: format!("expected {what}, found {}", t.tok.describe()),
            }),
            None => Err(self.err_here(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_nat(&mut self, what: &str, max: u64) -> Result<u64, ParseError> {
        match self.peek() {
            Some(Spanned { tok: Tok::Nat(n), line, col }) => {
                let (line, col) = (*line, *col);
                let v = n.to_u64().filter(|&v| v <= max).ok_or(ParseError {
                    line,
                    col,
                    message: format!("{what} must be at most {max}"),
                })?;
                self.pos += 1;
                Ok(v)
            }
            Some(t) => Err(ParseError {
                line: t.line,
                col: t.col,
                message: format!("expected {what}, found {}", t.tok.describe()),
            }),
            None => Err(self.err_here(format!("expected {what}, found end of input"))),
        }
    }

    fn parse_ambient(&mut self) -> Result<Vec<AmbientFactor>, ParseError> {
        let mut factors = Vec::new();
        loop {
            let (kind_s, line, col) = self.expect_ident("ambient factor 'A' or 'P'")?;
            let kind = match kind_s.as_str() {
                "A" => FactorKind::Affine,
                "P" => FactorKind::Projective,
                other => {
                    return Err(ParseError {
                        line,
                        col,
                        message: format!("ambient factor must be 'A' or 'P', found '{other}'"),
                    })
                }
            };
            self.expect(&Tok::Caret, "'^'")?;
            let dim = self.expect_nat("ambient factor dimension", MAX_AMBIENT_DIM)?;
            if dim == 0 {
                return Err(self.err_here("ambient factor dimension must be >= 1".into()));
            }
            factors.push(AmbientFactor { kind, dim: dim as u32 });
            match self.peek() {
                Some(Spanned { tok: Tok::Ident(s), .. }) if s == "x" => {
                    self.pos += 1;
                }
                Some(Spanned { tok: Tok::Semi, .. }) => {
                    self.pos += 1;
                    return Ok(factors);
                }
                _ => {
                    return Err(self.err_here("expected 'x' or ';' after ambient factor".into()))
                }
            }
        }
    }

    fn parse_poly(
        &mut self,
        vars: &HashMap<String, usize>,
        nvars: usize,
    ) -> Result<Polynomial, ParseError> {
        let mut negate = false;
        if matches!(self.peek(), Some(Spanned { tok: Tok::Minus, .. })) {
            self.pos += 1;
            negate = true;
        }
        let mut acc = self.parse_term(vars, nvars)?;
        if negate {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Some(Spanned { tok: Tok::Plus, .. }) => {
                    self.pos += 1;
                    acc = acc.add(&self.parse_term(vars, nvars)?);
                }
                Some(Spanned { tok: Tok::Minus, .. }) => {
                    self.pos += 1;
                    acc = acc.sub(&self.parse_term(vars, nvars)?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(
        &mut self,
        vars: &HashMap<String, usize>,
        nvars: usize,
    ) -> Result<Polynomial, ParseError> {
        let mut acc = self.parse_factor(vars, nvars)?;
        while matches!(self.peek(), Some(Spanned { tok: Tok::Star, .. })) {
            self.pos += 1;
            acc = acc.mul(&self.parse_factor(vars, nvars)?);
        }
        Ok(acc)
    }

    fn parse_factor(
        &mut self,
        vars: &HashMap<String, usize>,
        nvars: usize,
    ) -> Result<Polynomial, ParseError> {
        let base = self.parse_base(vars, nvars)?;
        if matches!(self.peek(), Some(Spanned { tok: Tok::Caret, .. })) {
            self.pos += 1;
            let e = self.expect_nat("exponent", MAX_EXPONENT)?;
            return Ok(base.pow(e as u16));
        }
        Ok(base)
    }

    fn parse_base(
        &mut self,
        vars: &HashMap<String, usize>,
        nvars: usize,
    ) -> Result<Polynomial, ParseError> {
        match self.peek() {
            Some(Spanned { tok: Tok::Nat(n), .. }) => {
                let c = n.clone();
                self.pos += 1;
                Ok(Polynomial::constant(nvars, c))
            }
            Some(Spanned { tok: Tok::Ident(v), line, col }) => {
                let (v, line, col) = (v.clone(), *line, *col);
                self.pos += 1;
                match vars.get(&v) {
                    Some(&i) => Ok(Polynomial::variable(nvars, i)),
                    None => Err(ParseError {
                        line,
                        col,
                        message: format!("unknown variable '{v}'"),
                    }),
                }
            }
            Some(Spanned { tok: Tok::LParen, .. }) => {
                self.pos += 1;
                let inner = self.parse_poly(vars, nvars)?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(self.err_here("expected a number, variable, or '('".into())),
        }
    }
}

pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let (toks, eof) = lex(text)?;
    let mut p = Parser { toks, pos: 0, eof };

    let mut name = String::new();
    let mut name_seen = false;
    let mut ambient: Option<Vec<AmbientFactor>> = None;
    let mut var_groups: Option<Vec<Vec<String>>> = None;
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut nvars = 0usize;
    let mut equations: Vec<Polynomial> = Vec::new();
    let mut expected_dim: Option<u32> = None;
    let mut gauges: Vec<GaugeChart> = Vec::new();

    while p.peek().is_some() {
        let (kw, kw_line, kw_col) = p.expect_ident("statement keyword")?;
        match kw.as_str() {
            "name" => {
                if name_seen {
                    return Err(ParseError {
                        line: kw_line,
                        col: kw_col,
                        message: "duplicate name statement".into(),
                    });
                }
                name = p.expect_ident("model name")?.0;
                p.expect(&Tok::Semi, "';'")?;
                name_seen = true;
            }
            "ambient" => {
                if ambient.is_some() {
                    return Err(ParseError {
                        line: kw_line,
                        col: kw_col,
                        message: "duplicate ambient statement".into(),
                    });
                }
                ambient = Some(p.parse_ambient()?);
            }
            "vars" => {
                if var_groups.is_some() {
                    return Err(ParseError {
                        line: kw_line,
                        col: kw_col,
                        message: "duplicate vars statement".into(),
                    });
                }
                let mut groups: Vec<Vec<String>> = vec![Vec::new()];
                loop {
                    match p.next() {
                        Some(Spanned { tok: Tok::Ident(v), line, col }) => {
                            let (v, line, col) = (v.clone(), *line, *col);
                            if var_index.contains_key(&v) {
                                return Err(ParseError {
                                    line,
                                    col,
                                    message: format!("duplicate variable '{v}'"),
                                });
                            }
                            var_index.insert(v.clone(), nvars);
                            nvars += 1;
                            groups.last_mut().unwrap().push(v);
                        }
                        Some(Spanned { tok: Tok::Pipe, .. }) => groups.push(Vec::new()),
                        Some(Spanned { tok: Tok::Semi, .. }) => break,
                        Some(t) => {
                            return Err(ParseError {
                                line: t.line,
                                col: t.col,
                                message: format!(
                                    "expected variable name, '|', or ';', found {}",
                                    t.tok.describe()
                                ),
                            })
                        }
                        None => {
                            return Err(p.err_here(
                                "expected variable name, '|', or ';', found end of input".into(),
                            ))
                        }
                    }
                }
                if groups.iter().any(|g| g.is_empty()) {
                    return Err(ParseError {
                        line: kw_line,
                        col: kw_col,
                        message: "empty variable group".into(),
                    });
                }
                var_groups = Some(groups);
            }
            "dim" => {
                if expected_dim.is_some() {
                    return Err(ParseError {
                        line: kw_line,
                        col: kw_col,
                        message: "duplicate dim statement".into(),
                    });
                }
                expected_dim = Some(p.expect_nat("dimension", MAX_AMBIENT_DIM)? as u32);
                p.expect(&Tok::Semi, "';'")?;
            }
            "eq" => {
                if var_groups.is_none() {
                    return Err(ParseError {
                        line: kw_line,
                        col: kw_col,
                        message: "eq statement before vars statement".into(),
                    });
                }
                equations.push(p.parse_poly(&var_index, nvars)?);
                p.expect(&Tok::Semi, "';'")?;
            }
            "gauge" => {
                if var_groups.is_none() {
                    return Err(ParseError {
                        line: kw_line,
                        col: kw_col,
                        message: "gauge statement before vars statement".into(),
                    });
                }
                let id = p.expect_ident("gauge chart id")?.0;
                p.expect(&Tok::LParen, "'('")?;
                let mut coords = Vec::new();
                loop {
                    coords.push(p.expect_ident("chart coordinate")?.0);
                    match p.next() {
                        Some(Spanned { tok: Tok::Comma, .. }) => continue,
                        Some(Spanned { tok: Tok::RParen, .. }) => break,
                        Some(t) => {
                            return Err(ParseError {
                                line: t.line,
                                col: t.col,
                                message: format!(
                                    "expected ',' or ')', found {}",
                                    t.tok.describe()
                                ),
                            })
                        }
                        None => {
                            return Err(
                                p.err_here("expected ',' or ')', found end of input".into())
                            )
                        }
                    }
                }
                let numerator = p.parse_poly(&var_index, nvars)?;
                p.expect(&Tok::Semi, "';'")?;
                gauges.push(GaugeChart { id, coords, numerator });
            }
            other => {
                return Err(ParseError {
                    line: kw_line,
                    col: kw_col,
                    message: format!("unknown statement '{other}'"),
                })
            }
        }
    }

    let ambient = ambient.ok_or(ParseError {
        line: eof.0,
        col: eof.1,
        message: "missing ambient statement".into(),
    })?;
    let var_groups = var_groups.ok_or(ParseError {
        line: eof.0,
        col: eof.1,
        message: "missing vars statement".into(),
    })?;

    Ok(Model { name, ambient, var_groups, equations, expected_dim, gauges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_blowup_model() {
        let text = "\
# origin blow-up of the plane
name blowup;
ambient A^2 x P^1;
vars x y | s t;
dim 2;
eq x*t - y*s;
";
        let m = parse_model(text).unwrap();
        assert_eq!(m.name, "blowup");
        assert_eq!(m.ambient.len(), 2);
        assert_eq!(m.ambient[0], AmbientFactor { kind: FactorKind::Affine, dim: 2 });
        assert_eq!(m.ambient[1], AmbientFactor { kind: FactorKind::Projective, dim: 1 });
        assert_eq!(m.var_groups, vec![vec!["x", "y"], vec!["s", "t"]]);
        assert_eq!(m.expected_dim, Some(2));
        assert_eq!(m.equations.len(), 1);
        let f = &m.equations[0];
        assert_eq!(f.num_terms(), 2);
    }

    #[test]
    fn parses_gauge_statement() {
        let text = "\
ambient A^2;
vars x y;
dim 1;
eq x*y - 1;
gauge c0 (x) 1;
";
        let m = parse_model(text).unwrap();
        assert_eq!(m.gauges.len(), 1);
        assert_eq!(m.gauges[0].id, "c0");
        assert_eq!(m.gauges[0].coords, vec!["x"]);
        assert!(!m.gauges[0].numerator.is_zero());
    }

    #[test]
    fn error_positions_are_accurate() {
        let err = parse_model("ambient A^2;\nvars x y;\neq x + w;\n").unwrap_err();
        assert_eq!((err.line, err.col), (3, 8));
        assert!(err.message.contains("unknown variable 'w'"));

        let err = parse_model("ambient A^2;\nvars x y;\neq x + y\n").unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.message.contains("end of input"));

        let err = parse_model("ambient A^2;\nvars x x;\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 8));
        assert!(err.message.contains("duplicate variable"));
    }

    #[test]
    fn unknown_statement_rejected() {
        let err = parse_model("ambient A^1;\nvars x;\nfoo 3;\n").unwrap_err();
        assert_eq!((err.line, err.col), (3, 1));
        assert!(err.message.contains("unknown statement 'foo'"));
    }

    #[test]
    fn missing_sections_reported_at_eof() {
        let err = parse_model("name m;\n").unwrap_err();
        assert!(err.message.contains("missing ambient"));
        let err = parse_model("ambient A^1;\n").unwrap_err();
        assert!(err.message.contains("missing vars"));
    }

    #[test]
    fn poly_precedence_and_parens() {
        let m = parse_model("ambient A^2;\nvars x y;\neq (x + y)^2 - x^2 - 2*x*y - y^2;\n")
            .unwrap();
        assert!(m.equations[0].is_zero());
        let m = parse_model("ambient A^1;\nvars x;\neq -x^2 + 3*x - 2;\n").unwrap();
        assert_eq!(m.equations[0].num_terms(), 3);
    }

    #[test]
    fn comments_and_whitespace_ignored() {
        let m = parse_model("  # header\n\nambient A^1; # inline\n  vars x;\neq x; \n").unwrap();
        assert_eq!(m.equations.len(), 1);
    }

    #[test]
    fn a_variable_may_be_named_x_despite_ambient_separator() {
        let m = parse_model("ambient A^1 x P^1;\nvars x | s t;\neq x*s - t;\n").unwrap();
        assert_eq!(m.var_groups[0], vec!["x"]);
    }
}
