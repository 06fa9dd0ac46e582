//! Recursive-descent parser for the fuzzy-SQL dialect.
//!
//! ```text
//! query      := SELECT cols FROM ident [WHERE expr]
//! cols       := '*' | ident (',' ident)*
//! expr       := expr OR term | term
//! term       := term AND factor | factor
//! factor     := NOT factor | '(' expr ')' | predicate
//! predicate  := ident IS [NOT] ident
//!             | ident cmp literal
//!             | [ident] (MORE | LESS) THAN literal
//! ```
//!
//! `MORE THAN` / `LESS THAN` are spellings of `>` / `<`. When the column is
//! omitted, the comparison applies to the column of the preceding
//! predicate, so `bill_payment is HIGH or more than 3000` reads as
//! `bill_payment IS HIGH OR bill_payment > 3000`.

use thiserror::Error;

use super::ast::{CmpOp, Expr, Literal, Projection, Query};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct QueryParseError {
    pub line: usize,
    pub column: usize,
    /// Character offset into the query text.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    Str(String),
    Op(CmpOp),
    Comma,
    LParen,
    RParen,
    Star,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

const KEYWORDS: [&str; 7] = ["SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "IS"];

fn is_keyword(w: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(w))
}

fn lex(text: &str) -> Result<Vec<Spanned>, QueryParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, message: String| make_error(text, offset, message);
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let single = match c {
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '*' => Some(Tok::Star),
            '=' => Some(Tok::Op(CmpOp::Eq)),
            _ => None,
        };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if let Some(tok) = single {
            out.push(Spanned { tok, offset: start });
            i += 1;
            continue;
        }
        let tok = match c {
            '<' => {
                i += 1;
                match chars.get(i) {
                    Some('=') => {
                        i += 1;
                        Tok::Op(CmpOp::Le)
                    }
                    Some('>') => {
                        i += 1;
                        Tok::Op(CmpOp::Ne)
                    }
                    _ => Tok::Op(CmpOp::Lt),
                }
            }
            '>' => {
                i += 1;
                if chars.get(i) == Some(&'=') {
                    i += 1;
                    Tok::Op(CmpOp::Ge)
                } else {
                    Tok::Op(CmpOp::Gt)
                }
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                i += 2;
                Tok::Op(CmpOp::Ne)
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(start, "unterminated string literal".into())),
                        Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit()
                || ((c == '-' || c == '.')
                    && chars
                        .get(i + 1)
                        .is_some_and(|n| n.is_ascii_digit() || *n == '.')) =>
            {
                if c == '-' {
                    i += 1;
                }
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
                let lit: String = chars[start..i].iter().collect();
                match lit.parse::<f64>() {
                    Ok(v) if v.is_finite() => Tok::Number(v),
                    _ => return Err(err(start, format!("malformed number {lit:?}"))),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                if chars.get(i) == Some(&'#') {
                    i += 1;
                }
                Tok::Word(chars[start..i].iter().collect())
            }
            other => return Err(err(start, format!("unexpected character {other:?}"))),
        };
        if matches!(tok, Tok::Word(_) | Tok::Number(_))
            && chars
                .get(i)
                .is_some_and(|n| n.is_ascii_alphanumeric() || *n == '_' || *n == '#' || *n == '.')
        {
            return Err(err(start, "malformed token".into()));
        }
        out.push(Spanned { tok, offset: start });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        offset: chars.len(),
    });
    Ok(out)
}

fn make_error(text: &str, offset: usize, message: String) -> QueryParseError {
    let mut line = 1;
    let mut column = 1;
    for c in text.chars().take(offset) {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    QueryParseError {
        line,
        column,
        offset,
        message,
    }
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<Spanned>,
    pos: usize,
    last_column: Option<String>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> QueryParseError {
        make_error(self.text, self.toks[self.pos].offset, message.into())
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Word(w) => format!("{w:?}"),
            Tok::Number(n) => n.to_string(),
            Tok::Str(s) => format!("'{s}'"),
            Tok::Op(op) => format!("'{}'", op.symbol()),
            Tok::Comma => "','".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Star => "'*'".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_word(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_at(n), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryParseError> {
        if self.is_word(0, kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}, found {}", self.describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, QueryParseError> {
        match self.peek() {
            Tok::Word(w) if !is_keyword(w) => {
                let w = w.clone();
                self.advance();
                Ok(w)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.describe()))),
        }
    }

    fn query(&mut self) -> Result<Query, QueryParseError> {
        self.keyword("SELECT")?;
        let projection = if *self.peek() == Tok::Star {
            self.advance();
            Projection::All
        } else {
            let mut cols = vec![self.ident("column name")?];
            while *self.peek() == Tok::Comma {
                self.advance();
                cols.push(self.ident("column name")?);
            }
            Projection::Columns(cols)
        };
        self.keyword("FROM")?;
        let table = self.ident("table name")?;
        let filter = if self.is_word(0, "WHERE") {
            self.advance();
            Some(self.expr()?)
        } else {
            None
        };
        if *self.peek() != Tok::Eof {
            return Err(self.error(format!("unexpected {}", self.describe())));
        }
        Ok(Query {
            projection,
            table,
            filter,
        })
    }

    fn expr(&mut self) -> Result<Expr, QueryParseError> {
        let mut lhs = self.term()?;
        while self.is_word(0, "OR") {
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, QueryParseError> {
        let mut lhs = self.factor()?;
        while self.is_word(0, "AND") {
            self.advance();
            let rhs = self.factor()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, QueryParseError> {
        if self.is_word(0, "NOT") {
            self.advance();
            return Ok(Expr::Not(Box::new(self.factor()?)));
        }
        if *self.peek() == Tok::LParen {
            self.advance();
            let e = self.expr()?;
            if *self.peek() != Tok::RParen {
                return Err(self.error(format!("expected ')', found {}", self.describe())));
            }
            self.advance();
            return Ok(e);
        }
        self.predicate()
    }

    /// `MORE THAN` / `LESS THAN` at the cursor.
    fn word_op(&self) -> Option<CmpOp> {
        if !self.is_word(1, "THAN") {
            return None;
        }
        if self.is_word(0, "MORE") {
            Some(CmpOp::Gt)
        } else if self.is_word(0, "LESS") {
            Some(CmpOp::Lt)
        } else {
            None
        }
    }

    fn predicate(&mut self) -> Result<Expr, QueryParseError> {
        let column = if let Some(op) = self.word_op() {
            let Some(column) = self.last_column.clone() else {
                return Err(self.error("comparison without a column"));
            };
            self.advance();
            self.advance();
            let literal = self.literal()?;
            return Ok(Expr::Compare {
                column,
                op,
                literal,
            });
        } else {
            self.ident("column name")?
        };
        self.last_column = Some(column.clone());
        if self.is_word(0, "IS") {
            self.advance();
            let negated = if self.is_word(0, "NOT") {
                self.advance();
                true
            } else {
                false
            };
            let term = self.ident("term label")?;
            let e = Expr::Is { column, term };
            return Ok(if negated { Expr::Not(Box::new(e)) } else { e });
        }
        let op = if let Some(op) = self.word_op() {
            self.advance();
            op
        } else if let Tok::Op(op) = *self.peek() {
            op
        } else {
            return Err(self.error(format!(
                "expected IS or a comparison operator, found {}",
                self.describe()
            )));
        };
        self.advance();
        let literal = self.literal()?;
        Ok(Expr::Compare {
            column,
            op,
            literal,
        })
    }

    fn literal(&mut self) -> Result<Literal, QueryParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Literal::Number(n))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Literal::Text(s))
            }
            _ => Err(self.error(format!("expected a literal, found {}", self.describe()))),
        }
    }
}

/// Parses one fuzzy-SQL query.
pub fn parse_query(text: &str) -> Result<Query, QueryParseError> {
    let toks = lex(text)?;
    Parser {
        text,
        toks,
        pos: 0,
        last_column: None,
    }
    .query()
}
