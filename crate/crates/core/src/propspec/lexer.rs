//! Tokenizer for the property language.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    EqQ, // `=?`
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Not,
    And,
    Or,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Str(s) => format!("label \"{s}\""),
            Tok::EqQ => "`=?`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Not => "`!`".into(),
            Tok::And => "`&`".into(),
            Tok::Or => "`|`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

/// Tokenizes one property text. `line` is the 1-based line number the text
/// starts on, so diagnostics stay accurate when parsing a file line by
/// line. `//` comments run to end of line.
pub fn lex(text: &str, start_line: usize) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut line = start_line;
    let mut column = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tok_line, tok_column) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '/' {
            bump(&mut chars);
            if chars.peek() == Some(&'/') {
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
            return Err(Error::Parse {
                line: tok_line,
                column: tok_column,
                message: "unexpected character `/`".into(),
                expected: "`//` comment or a token".into(),
            });
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_alphanumeric() || n == '_' {
                    ident.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            Tok::Ident(ident)
        } else if c.is_ascii_digit() {
            let mut number = String::new();
            while let Some(&n) = chars.peek() {
                if n.is_ascii_digit() || n == '.' {
                    number.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            let value: f64 = number.parse().map_err(|_| Error::Parse {
                line: tok_line,
                column: tok_column,
                message: format!("malformed number `{number}`"),
                expected: "integer or decimal literal".into(),
            })?;
            Tok::Number(value)
        } else if c == '"' {
            bump(&mut chars);
            let mut label = String::new();
            loop {
                match chars.peek() {
                    Some(&'"') => {
                        bump(&mut chars);
                        break;
                    }
                    Some(_) => label.push(bump(&mut chars)),
                    None => {
                        return Err(Error::Parse {
                            line: tok_line,
                            column: tok_column,
                            message: "unterminated label literal".into(),
                            expected: "closing `\"`".into(),
                        })
                    }
                }
            }
            Tok::Str(label)
        } else {
            bump(&mut chars);
            match c {
                '=' => {
                    if chars.peek() == Some(&'?') {
                        bump(&mut chars);
                        Tok::EqQ
                    } else {
                        Tok::Eq
                    }
                }
                '<' => {
                    if chars.peek() == Some(&'=') {
                        bump(&mut chars);
                        Tok::Le
                    } else {
                        Tok::Lt
                    }
                }
                '>' => {
                    if chars.peek() == Some(&'=') {
                        bump(&mut chars);
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                '!' => Tok::Not,
                '&' => Tok::And,
                '|' => Tok::Or,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                other => {
                    return Err(Error::Parse {
                        line: tok_line,
                        column: tok_column,
                        message: format!("unexpected character `{other}`"),
                        expected: "a property token".into(),
                    })
                }
            }
        };
        tokens.push(Token {
            tok,
            line: tok_line,
            column: tok_column,
        });
    }
    Ok(tokens)
}
