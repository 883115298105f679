use super::{Equation, Op, Term, VarId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown token {token:?} at byte {offset}")]
    UnknownToken { offset: usize, token: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Op(Op),
    Eq,
    Var(VarId),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its starting offset, or `None` at end of input.
    fn next(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(start) else {
            return Ok(None);
        };
        self.pos += 1;
        let tok = match c {
            b'(' => Tok::Open,
            b')' => Tok::Close,
            b'*' => Tok::Op(Op::Meet),
            b'+' => Tok::Op(Op::Join),
            b'=' => Tok::Eq,
            b'x' => {
                let digits_start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if digits_start == self.pos {
                    Tok::Var(VarId(0))
                } else {
                    let digits = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
                    let index = digits.parse::<u32>().map_err(|_| ParseError::Syntax {
                        offset: start,
                        message: format!("variable index x{digits} out of range"),
                    })?;
                    Tok::Var(VarId(index))
                }
            }
            b'y' => Tok::Var(VarId(1)),
            b'z' => Tok::Var(VarId(2)),
            b'u' => Tok::Var(VarId(3)),
            b'v' => Tok::Var(VarId(4)),
            b'w' => Tok::Var(VarId(5)),
            b's' => Tok::Var(VarId(6)),
            b't' => Tok::Var(VarId(7)),
            _ => {
                let rest = std::str::from_utf8(&self.src[start..]).unwrap_or("?");
                return Err(ParseError::UnknownToken {
                    offset: start,
                    token: rest.chars().next().unwrap_or('?'),
                });
            }
        };
        Ok(Some((start, tok)))
    }

    fn peek(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        let save = self.pos;
        let t = self.next();
        self.pos = save;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        match self.next()? {
            Some((_, t)) if t == want => Ok(()),
            Some((offset, _)) => Err(syntax(offset, format!("expected {what}"))),
            None => Err(syntax(self.src.len(), format!("expected {what}, found end of input"))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.next()? {
            Some((_, Tok::Var(v))) => Ok(Term::Var(v)),
            Some((_, Tok::Open)) => {
                let left = self.term()?;
                let op = match self.next()? {
                    Some((_, Tok::Op(op))) => op,
                    Some((offset, _)) => return Err(syntax(offset, "expected '*' or '+'")),
                    None => return Err(syntax(self.src.len(), "expected operator, found end of input")),
                };
                let right = self.term()?;
                self.expect(Tok::Close, "')'")?;
                Ok(Term::app(op, left, right))
            }
            Some((offset, _)) => Err(syntax(offset, "expected a variable or '('")),
            None => Err(syntax(self.src.len(), "expected a term, found end of input")),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek()? {
            None => Ok(()),
            Some((offset, _)) => Err(syntax(offset, "trailing input")),
        }
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        message: message.into(),
    }
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut lx = Lexer::new(text);
    let t = lx.term()?;
    lx.finish()?;
    Ok(t)
}

pub fn parse_equation(text: &str) -> Result<Equation, ParseError> {
    let mut lx = Lexer::new(text);
    let lhs = lx.term()?;
    lx.expect(Tok::Eq, "'='")?;
    let rhs = lx.term()?;
    lx.finish()?;
    Ok(Equation::new(lhs, rhs))
}

/// Parses one equation per line, skipping blank lines and `#` comments.
/// Errors carry the 1-based line number.
pub fn parse_equations(text: &str) -> Result<Vec<Equation>, (usize, ParseError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(i, l)| parse_equation(l).map_err(|e| (i + 1, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::print_term;

    #[test]
    fn single_variable() {
        assert_eq!(parse_term("x").unwrap(), Term::var(0));
        assert_eq!(parse_term("  t ").unwrap(), Term::var(7));
        assert_eq!(parse_term("x12").unwrap(), Term::var(12));
    }

    #[test]
    fn nested() {
        let t = parse_term("(y+x)*x");
        // unparenthesized top level is not part of the grammar
        assert!(t.is_err());
        let t = parse_term("((y + x) * x)").unwrap();
        assert_eq!(t, Term::meet(Term::join(Term::var(1), Term::var(0)), Term::var(0)));
        assert_eq!(print_term(&t), "((y+x)*x)");
    }

    #[test]
    fn incomplete_input() {
        match parse_term("x+") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_term("(x+") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_token() {
        assert_eq!(
            parse_term("(x+a)"),
            Err(ParseError::UnknownToken { offset: 3, token: 'a' })
        );
        assert!(matches!(
            parse_term("(x v y)"),
            Err(ParseError::Syntax { offset: 3, .. })
        ));
    }

    #[test]
    fn equations_with_comments() {
        let eqs = parse_equations("# comment\n\n(x+y) = x\n  (x*x)=x \n").unwrap();
        assert_eq!(eqs.len(), 2);
        assert_eq!(eqs[1].to_string(), "(x*x) = x");
        let err = parse_equations("x = x\n(x+y)\n").unwrap_err();
        assert_eq!(err.0, 2);
    }
}
