//! Text syntax for queries.
//!
//! ```text
//! query  := NAME "(" varlist? ")" ":-" atom ("," atom)* "."
//! atom   := NAME "(" varlist ")"
//! NAME   := [A-Za-z][A-Za-z0-9_]*
//! ```
//!
//! Whitespace is insignificant and `%` starts a comment that runs to the end
//! of the line.

use crate::query::{Query, QueryError, Schema};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Turnstile,
    Dot,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('%').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (lnum, col) = (lineno + 1, i + 1);
            let push = |tok, out: &mut Vec<Spanned>| {
                out.push(Spanned {
                    tok,
                    line: lnum,
                    column: col,
                })
            };
            match c {
                c if c.is_whitespace() => i += 1,
                '(' => {
                    push(Tok::LParen, &mut out);
                    i += 1;
                }
                ')' => {
                    push(Tok::RParen, &mut out);
                    i += 1;
                }
                ',' => {
                    push(Tok::Comma, &mut out);
                    i += 1;
                }
                '.' => {
                    push(Tok::Dot, &mut out);
                    i += 1;
                }
                ':' if chars.get(i + 1) == Some(&'-') => {
                    push(Tok::Turnstile, &mut out);
                    i += 2;
                }
                c if c.is_ascii_alphabetic() => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    push(Tok::Name(chars[start..i].iter().collect()), &mut out);
                }
                c if c.is_ascii_digit() || c == '-' || c == '"' || c == '\'' => {
                    let start = i;
                    i += 1;
                    while i < chars.len()
                        && !chars[i].is_whitespace()
                        && !matches!(chars[i], '(' | ')' | ',')
                    {
                        i += 1;
                    }
                    push(Tok::Number(chars[start..i].iter().collect()), &mut out);
                }
                other => return Err(syntax(lnum, col, format!("unexpected character `{other}`"))),
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn error_here(&self, message: &str) -> QueryError {
        match self.peek().or_else(|| self.toks.last()) {
            Some(s) => syntax(s.line, s.column, message),
            None => syntax(1, 1, message),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), QueryError> {
        match self.peek() {
            Some(s) if s.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here(&format!("expected {what}"))),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, QueryError> {
        match self.peek().map(|s| s.tok.clone()) {
            Some(Tok::Name(n)) => {
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error_here(&format!("expected {what}"))),
        }
    }

    /// `"(" varlist? ")"`; constants are reported as such.
    fn var_list(&mut self, allow_empty: bool) -> Result<Vec<String>, QueryError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut vars = Vec::new();
        if matches!(self.peek(), Some(s) if s.tok == Tok::RParen) {
            if !allow_empty {
                return Err(self.error_here("expected a variable"));
            }
            self.pos += 1;
            return Ok(vars);
        }
        loop {
            match self.peek().map(|s| s.tok.clone()) {
                Some(Tok::Name(n)) => vars.push(n),
                Some(Tok::Number(c)) => return Err(QueryError::ConstantInAtom(c)),
                _ => return Err(self.error_here("expected a variable")),
            }
            self.pos += 1;
            match self.peek().map(|s| s.tok.clone()) {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(vars);
                }
                _ => return Err(self.error_here("expected `,` or `)`")),
            }
        }
    }
}

/// Parses one query. Without a schema the arities are inferred from the
/// atoms; with one, every atom is checked against it.
pub fn parse_query(text: &str, schema: Option<&Schema>) -> Result<Query, QueryError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let name = p.name("query name")?;
    let head = p.var_list(true)?;
    p.expect(Tok::Turnstile, "`:-`")?;
    let mut atoms = Vec::new();
    loop {
        let relation = p.name("relation name")?;
        let args = p.var_list(false)?;
        atoms.push((relation, args));
        match p.peek().map(|s| s.tok.clone()) {
            Some(Tok::Comma) => p.pos += 1,
            Some(Tok::Dot) => {
                p.pos += 1;
                break;
            }
            _ => return Err(p.error_here("expected `,` or `.`")),
        }
    }
    if p.pos < p.toks.len() {
        return Err(p.error_here("trailing input after `.`"));
    }
    let query = Query::build(&name, &head, atoms)?;
    if let Some(schema) = schema {
        query.check_schema(schema)?;
    }
    Ok(query)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_projection_query() {
        let q = parse_query("Q(x) :- E(x,y), T(y).", None).unwrap();
        assert_eq!(q.arity(), 1);
        assert_eq!(q.atoms().len(), 2);
        assert_eq!(q.to_string(), "Q(x) :- E(x, y), T(y).");
        let y = q.var_by_name("y").unwrap();
        assert!(!q.is_free(y));
    }

    #[test]
    fn parses_boolean_query_with_comments() {
        let text = "% path of length two\nQ() :- S(x),   % unary\n  E(x,y), T(y).\n";
        let q = parse_query(text, None).unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.atoms().len(), 3);
    }

    #[test]
    fn rejects_duplicate_head_variable() {
        assert_eq!(
            parse_query("Q(x,x) :- E(x,y).", None),
            Err(QueryError::DuplicateHeadVariable("x".into()))
        );
    }

    #[test]
    fn rejects_constants_and_bad_heads() {
        assert_eq!(
            parse_query("Q(x) :- E(x, 3).", None),
            Err(QueryError::ConstantInAtom("3".into()))
        );
        assert_eq!(
            parse_query("Q(z) :- E(x, y).", None),
            Err(QueryError::HeadVariableNotInBody("z".into()))
        );
        assert!(matches!(
            parse_query("Q(x) :- E(x, y), E(x).", None),
            Err(QueryError::ArityConflict { .. })
        ));
    }

    #[test]
    fn rejects_malformed_syntax() {
        for bad in [
            "Q(x) :- E(x,y)",
            "Q(x) E(x,y).",
            "Q(x) :- E().",
            "Q(x) :- E(x,y). extra",
            "Q(x) :- E(x;y).",
            "",
        ] {
            assert!(
                matches!(parse_query(bad, None), Err(QueryError::Syntax { .. })),
                "{bad:?} should be a syntax error"
            );
        }
    }

    #[test]
    fn checks_against_given_schema() {
        let mut schema = Schema::new();
        schema.declare("E", 2).unwrap();
        assert!(parse_query("Q(x) :- E(x,y).", Some(&schema)).is_ok());
        assert_eq!(
            parse_query("Q(x) :- T(x).", Some(&schema)),
            Err(QueryError::UnknownRelation("T".into()))
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_query("Q(x) :-\n  E(x y).", None) {
            Err(QueryError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 7)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
