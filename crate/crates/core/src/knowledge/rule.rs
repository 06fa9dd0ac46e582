//! Rule language:
//!
//! ```text
//! [id ':'] IF <ident> IS <ident> ((AND|OR) <ident> IS <ident>)* THEN <ident> IS <ident>
//! ```
//!
//! `ARE` may stand in for `IS`. Keywords are case-insensitive. Identifiers that contain spaces or clash
//! with a keyword are written in double quotes; `""` escapes a quote.
//! `#` starts a comment that runs to the end of the line.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{source_name}:{line}:{column}: {message}")]
pub struct RuleParseError {
    pub source_name: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Connective {
    And,
    Or,
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connective::And => "AND",
            Connective::Or => "OR",
        })
    }
}

/// `<variable> IS <term>`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub variable: String,
    pub term: String,
}

impl Atom {
    pub fn new(variable: impl Into<String>, term: impl Into<String>) -> Self {
        Self {
            variable: variable.into(),
            term: term.into(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} IS {}",
            quote_ident(&self.variable),
            quote_ident(&self.term)
        )
    }
}

/// Ground rules read only input variables; meta-rules also read outputs
/// of other rules. The kind is assigned when a knowledge base is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RuleKind {
    #[default]
    Ground,
    Meta,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    /// Empty when the source text carried no `id:` prefix.
    pub id: String,
    pub first: Atom,
    pub rest: Vec<(Connective, Atom)>,
    pub consequent: Atom,
    pub kind: RuleKind,
}

impl Rule {
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.first).chain(self.rest.iter().map(|(_, a)| a))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.id.is_empty() {
            write!(f, "{}: ", quote_ident(&self.id))?;
        }
        write!(f, "IF {}", self.first)?;
        for (conn, atom) in &self.rest {
            write!(f, " {conn} {atom}")?;
        }
        write!(f, " THEN {}", self.consequent)
    }
}

const KEYWORDS: [&str; 6] = ["IF", "IS", "ARE", "AND", "OR", "THEN"];

fn is_bare_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

/// Renders an identifier so that it lexes back to itself.
pub fn quote_ident(s: &str) -> String {
    if is_bare_ident(s) {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('"', "\"\""))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Colon,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    column: usize,
}

fn lex_line(line: &str, line_no: usize, source: &str) -> Result<Vec<Spanned>, RuleParseError> {
    let err = |column: usize, message: String| RuleParseError {
        source_name: source.to_string(),
        line: line_no,
        column,
        message,
    };
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == ':' {
            out.push(Spanned {
                tok: Tok::Colon,
                column,
            });
            i += 1;
        } else if c == '"' {
            let mut text = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(column, "unterminated quoted identifier".into())),
                    Some('"') if chars.get(i + 1) == Some(&'"') => {
                        text.push('"');
                        i += 2;
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some(&ch) => {
                        text.push(ch);
                        i += 1;
                    }
                }
            }
            if text.is_empty() {
                return Err(err(column, "empty quoted identifier".into()));
            }
            out.push(Spanned {
                tok: Tok::Quoted(text),
                column,
            });
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else {
            return Err(err(column, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct RuleParser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
    end_column: usize,
    source: &'a str,
}

impl RuleParser<'_> {
    fn error(&self, message: impl Into<String>) -> RuleParseError {
        let column = self
            .toks
            .get(self.pos)
            .map(|t| t.column)
            .unwrap_or(self.end_column);
        RuleParseError {
            source_name: self.source.to_string(),
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.toks.get(self.pos), Some(Spanned { tok: Tok::Ident(s), .. }) if s.eq_ignore_ascii_case(kw))
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), RuleParseError> {
        if self.peek_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}, found {}", self.describe())))
        }
    }

    fn describe(&self) -> String {
        match self.toks.get(self.pos) {
            None => "end of line".to_string(),
            Some(Spanned { tok: Tok::Colon, .. }) => "':'".to_string(),
            Some(Spanned {
                tok: Tok::Ident(s) | Tok::Quoted(s),
                ..
            }) => format!("{s:?}"),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, RuleParseError> {
        match self.toks.get(self.pos) {
            Some(Spanned {
                tok: Tok::Quoted(s),
                ..
            }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(Spanned {
                tok: Tok::Ident(s),
                ..
            }) if is_bare_ident(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.describe()))),
        }
    }

    fn atom(&mut self) -> Result<Atom, RuleParseError> {
        let variable = self.ident("variable name")?;
        if self.peek_keyword("ARE") {
            self.pos += 1;
        } else {
            self.expect_keyword("IS")?;
        }
        let term = self.ident("term label")?;
        Ok(Atom { variable, term })
    }

    fn rule(&mut self) -> Result<Rule, RuleParseError> {
        let mut id = String::new();
        if matches!(self.toks.get(self.pos + 1), Some(Spanned { tok: Tok::Colon, .. })) {
            id = self.ident("rule id")?;
            self.pos += 1;
        }
        self.expect_keyword("IF")?;
        let first = self.atom()?;
        let mut rest = Vec::new();
        loop {
            let conn = if self.peek_keyword("AND") {
                Connective::And
            } else if self.peek_keyword("OR") {
                Connective::Or
            } else {
                break;
            };
            self.pos += 1;
            rest.push((conn, self.atom()?));
        }
        self.expect_keyword("THEN")?;
        let consequent = self.atom()?;
        if self.pos < self.toks.len() {
            return Err(self.error(format!("unexpected {} after rule", self.describe())));
        }
        Ok(Rule {
            id,
            first,
            rest,
            consequent,
            kind: RuleKind::Ground,
        })
    }
}

fn parse_line(text: &str, line: usize, source: &str) -> Result<Option<Rule>, RuleParseError> {
    let toks = lex_line(text, line, source)?;
    if toks.is_empty() {
        return Ok(None);
    }
    let mut p = RuleParser {
        toks,
        pos: 0,
        line,
        end_column: text.chars().count() + 1,
        source,
    };
    p.rule().map(Some)
}

/// Parses a single rule.
pub fn parse_rule(text: &str) -> Result<Rule, RuleParseError> {
    match parse_line(text, 1, "<rule>")? {
        Some(rule) => Ok(rule),
        None => Err(RuleParseError {
            source_name: "<rule>".into(),
            line: 1,
            column: 1,
            message: "expected IF, found end of line".into(),
        }),
    }
}

/// Parses a rule file: one rule per line, blank lines and `#` comments
/// skipped. Rules without an explicit id get `<source>:<line>`.
pub fn parse_rule_file(text: &str, source: &str) -> Result<Vec<Rule>, RuleParseError> {
    let mut rules = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if let Some(mut rule) = parse_line(line, idx + 1, source)? {
            if rule.id.is_empty() {
                rule.id = format!("{source}:{}", idx + 1);
            }
            rules.push(rule);
        }
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_product_metric_rule() {
        let r = parse_rule(
            "IF Volatility_index IS HIGH AND Requirements_quality IS LOW THEN Schedule_Risk IS VERY_HIGH",
        )
        .unwrap();
        assert_eq!(r.first, Atom::new("Volatility_index", "HIGH"));
        assert_eq!(
            r.rest,
            vec![(Connective::And, Atom::new("Requirements_quality", "LOW"))]
        );
        assert_eq!(r.consequent, Atom::new("Schedule_Risk", "VERY_HIGH"));
        assert!(r.id.is_empty());
    }

    #[test]
    fn parses_process_metric_rule() {
        let r = parse_rule(
            "IF Manpower IS HIGH AND Design_approaches IS HIGH THEN Product_Service IS HIGH",
        )
        .unwrap();
        assert_eq!(r.atoms().count(), 2);
        assert_eq!(r.consequent.variable, "Product_Service");
    }

    #[test]
    fn quoted_identifiers_and_case_insensitive_keywords() {
        let r = parse_rule(
            r#"r3: if "Effort deviation" is HIGH and "Customer involvement" Is HIGH then "Risk of schedule" IS "VERY HIGH""#,
        )
        .unwrap();
        assert_eq!(r.id, "r3");
        assert_eq!(r.first.variable, "Effort deviation");
        assert_eq!(r.consequent.term, "VERY HIGH");
        let printed = r.to_string();
        assert_eq!(parse_rule(&printed).unwrap(), r);
    }

    #[test]
    fn are_reads_as_is() {
        let r = parse_rule(r#"IF Manpower is HIGH AND "Design approaches" are HIGH THEN "Product Service" is HIGH"#)
            .unwrap();
        assert_eq!(r.rest[0].1, Atom::new("Design approaches", "HIGH"));
        assert_eq!(quote_ident("are"), "\"are\"");
    }

    #[test]
    fn keyword_identifiers_need_quotes() {
        let r = parse_rule(r#"IF "is" IS "Then" THEN out IS x"#).unwrap();
        assert_eq!(r.first, Atom::new("is", "Then"));
        assert_eq!(r.to_string(), r#"IF "is" IS "Then" THEN out IS x"#);
        assert!(parse_rule("IF is IS x THEN y IS z").is_err());
    }

    #[test]
    fn truncated_rule_reports_position() {
        let e = parse_rule("IF x IS").unwrap_err();
        assert_eq!(e.line, 1);
        assert_eq!(e.column, 8);
        assert!(e.message.contains("term label"), "{e}");
    }

    #[test]
    fn other_syntax_errors() {
        assert!(parse_rule("").is_err());
        assert!(parse_rule("IF x IS a THEN").is_err());
        assert!(parse_rule("IF x IS a b IS c THEN y IS z").is_err());
        assert!(parse_rule("IF x IS a THEN y IS z extra").is_err());
        assert!(parse_rule("IF \"x IS a THEN y IS z").is_err());
        assert!(parse_rule("IF x = a THEN y IS z").is_err());
    }

    #[test]
    fn rule_file_skips_comments_and_numbers_lines() {
        let text = "# header\n\nIF a IS HIGH THEN r IS LOW  # trailing\nnamed: IF b IS LOW OR c IS HIGH THEN r IS HIGH\n";
        let rules = parse_rule_file(text, "demo.rules").unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].id, "demo.rules:3");
        assert_eq!(rules[1].id, "named");
        assert_eq!(rules[1].rest[0].0, Connective::Or);

        let e = parse_rule_file("IF a IS HIGH THEN r IS LOW\nIF a HIGH THEN r IS LOW", "f").unwrap_err();
        assert_eq!((e.line, e.column), (2, 6));
    }
}
