//! Recursive-descent parser for the textual formula syntax.
//!
//! ```text
//! formula  := conj ('|' conj)*
//! conj     := until ('&' until)*
//! until    := unary ('U' '[' num ',' num ']' unary)?
//! unary    := '!' unary | ('G' | 'F') '[' num ',' num ']' unary
//!           | '(' formula ')' | 'true' | ident ('>=' | '<=') num
//! ```
//!
//! `#` starts a comment running to the end of the line.

use super::{Direction, Formula, Interval};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Number(f64),
    Temporal(char),
    True,
    Geq,
    Leq,
    And,
    Or,
    Not,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Number(n) => format!("number {n}"),
            Token::Temporal(c) => format!("operator `{c}`"),
            Token::True => "`true`".into(),
            Token::Geq => "`>=`".into(),
            Token::Leq => "`<=`".into(),
            Token::And => "`&`".into(),
            Token::Or => "`|`".into(),
            Token::Not => "`!`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::LBracket => "`[`".into(),
            Token::RBracket => "`]`".into(),
            Token::Comma => "`,`".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut column) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        let mut push = |token, len: usize, i: &mut usize, column: &mut usize| {
            tokens.push(Spanned {
                token,
                line: start_line,
                column: start_col,
            });
            *i += len;
            *column += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                column = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                column += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => push(Token::LParen, 1, &mut i, &mut column),
            ')' => push(Token::RParen, 1, &mut i, &mut column),
            '[' => push(Token::LBracket, 1, &mut i, &mut column),
            ']' => push(Token::RBracket, 1, &mut i, &mut column),
            ',' => push(Token::Comma, 1, &mut i, &mut column),
            '&' => push(Token::And, 1, &mut i, &mut column),
            '|' => push(Token::Or, 1, &mut i, &mut column),
            '!' => push(Token::Not, 1, &mut i, &mut column),
            '>' | '<' => {
                if chars.get(i + 1) != Some(&'=') {
                    return Err(syntax(line, column, format!("expected `{c}=`")));
                }
                let token = if c == '>' { Token::Geq } else { Token::Leq };
                push(token, 2, &mut i, &mut column);
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                let start = i;
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j];
                    let exponent_sign =
                        (d == '-' || d == '+') && matches!(chars[j - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exponent_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let literal: String = chars[start..j].iter().collect();
                let value: f64 = literal
                    .parse()
                    .map_err(|_| syntax(line, column, format!("malformed number `{literal}`")))?;
                if !value.is_finite() {
                    return Err(syntax(line, column, "number must be finite"));
                }
                push(Token::Number(value), j - start, &mut i, &mut column);
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[start..j].iter().collect();
                let mut k = j;
                while k < chars.len() && chars[k].is_whitespace() {
                    k += 1;
                }
                let opens_interval = chars.get(k) == Some(&'[');
                let token = match word.as_str() {
                    "G" | "F" | "U" if opens_interval => Token::Temporal(c),
                    "true" => Token::True,
                    _ => Token::Ident(word),
                };
                push(token, j - start, &mut i, &mut column);
            }
            other => return Err(syntax(line, column, format!("unexpected character `{other}`"))),
        }
    }
    tokens.push(Spanned {
        token: Token::Eof,
        line,
        column,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> Result<Spanned> {
        let t = self.next();
        if t.token == want {
            Ok(t)
        } else {
            Err(syntax(
                t.line,
                t.column,
                format!("expected {}, found {}", want.describe(), t.token.describe()),
            ))
        }
    }

    fn number(&mut self) -> Result<f64> {
        let t = self.next();
        match t.token {
            Token::Number(v) => Ok(v),
            other => Err(syntax(
                t.line,
                t.column,
                format!("expected number, found {}", other.describe()),
            )),
        }
    }

    fn interval(&mut self) -> Result<Interval> {
        self.expect(Token::LBracket)?;
        let lower = self.number()?;
        self.expect(Token::Comma)?;
        let upper = self.number()?;
        self.expect(Token::RBracket)?;
        Interval::new(lower, upper)
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut children = vec![self.conjunction()?];
        while self.peek().token == Token::Or {
            self.next();
            children.push(self.conjunction()?);
        }
        Ok(Formula::or(children))
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut children = vec![self.until()?];
        while self.peek().token == Token::And {
            self.next();
            children.push(self.until()?);
        }
        Ok(Formula::and(children))
    }

    fn until(&mut self) -> Result<Formula> {
        let left = self.unary()?;
        if self.peek().token == Token::Temporal('U') {
            self.next();
            let interval = self.interval()?;
            let right = self.unary()?;
            return Ok(Formula::Until(interval, Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula> {
        let t = self.next();
        match t.token {
            Token::Not => Ok(Formula::not(self.unary()?)),
            Token::Temporal('G') => {
                let interval = self.interval()?;
                Ok(Formula::Globally(interval, Box::new(self.unary()?)))
            }
            Token::Temporal('F') => {
                let interval = self.interval()?;
                Ok(Formula::Eventually(interval, Box::new(self.unary()?)))
            }
            Token::LParen => {
                let inner = self.formula()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Token::True => Ok(Formula::True),
            Token::Ident(var) => {
                let op = self.next();
                let direction = match op.token {
                    Token::Geq => Direction::Geq,
                    Token::Leq => Direction::Leq,
                    other => {
                        return Err(syntax(
                            op.line,
                            op.column,
                            format!("expected `>=` or `<=`, found {}", other.describe()),
                        ))
                    }
                };
                let threshold = self.number()?;
                Ok(Formula::Predicate {
                    var,
                    direction,
                    threshold,
                })
            }
            other => Err(syntax(
                t.line,
                t.column,
                format!("expected a formula, found {}", other.describe()),
            )),
        }
    }
}

/// Parses a formula from its textual form.
pub fn parse(text: &str) -> Result<Formula> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let formula = parser.formula()?;
    let rest = parser.next();
    if rest.token != Token::Eof {
        return Err(syntax(
            rest.line,
            rest.column,
            format!("unexpected {} after formula", rest.token.describe()),
        ));
    }
    Ok(formula)
}
