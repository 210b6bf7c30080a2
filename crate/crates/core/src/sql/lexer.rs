use alloc::string::String;
use alloc::vec::Vec;

use super::{CompareOp, SqlError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    /// Identifier or keyword, lowercased.
    Ident(String),
    /// String literal contents with quotes stripped; original case kept.
    Str(String),
    Number(f64),
    Comma,
    Dot,
    LParen,
    RParen,
    Star,
    Semicolon,
    Minus,
    Op(CompareOp),
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub token: Token,
    pub offset: usize,
}

pub(crate) fn tokenize(sql: &str) -> Result<Vec<Spanned>, SqlError> {
    let bytes = sql.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let token = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b',' => {
                i += 1;
                Token::Comma
            }
            b'.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                i += 1;
                Token::Dot
            }
            b'(' => {
                i += 1;
                Token::LParen
            }
            b')' => {
                i += 1;
                Token::RParen
            }
            b'*' => {
                i += 1;
                Token::Star
            }
            b';' => {
                i += 1;
                Token::Semicolon
            }
            b'-' => {
                i += 1;
                Token::Minus
            }
            b'=' => {
                i += 1;
                Token::Op(CompareOp::Eq)
            }
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    i += 2;
                    Token::Op(CompareOp::Le)
                }
                Some(b'>') => {
                    i += 2;
                    Token::Op(CompareOp::Ne)
                }
                _ => {
                    i += 1;
                    Token::Op(CompareOp::Lt)
                }
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    i += 2;
                    Token::Op(CompareOp::Ge)
                } else {
                    i += 1;
                    Token::Op(CompareOp::Gt)
                }
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                Token::Op(CompareOp::Ne)
            }
            b'\'' | b'"' => {
                let (text, next) = quoted(sql, i, c)?;
                i = next;
                Token::Str(text)
            }
            b'`' => {
                let (text, next) = quoted(sql, i, c)?;
                i = next;
                Token::Ident(text.to_lowercase())
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let text = &sql[start..i];
                let value = text.parse::<f64>().map_err(|_| SqlError::Parse {
                    offset: start,
                    message: alloc::format!("bad number {text:?}"),
                })?;
                Token::Number(value)
            }
            c if c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] >= 0x80)
                {
                    i += 1;
                }
                let word = sql[start..i].to_lowercase();
                if word == "like" {
                    Token::Op(CompareOp::Like)
                } else {
                    Token::Ident(word)
                }
            }
            other => {
                return Err(SqlError::Parse {
                    offset: start,
                    message: alloc::format!("unexpected character {:?}", other as char),
                })
            }
        };
        out.push(Spanned { token, offset: start });
    }
    Ok(out)
}

/// Reads a quoted run starting at `start`; a doubled quote escapes itself.
fn quoted(sql: &str, start: usize, quote: u8) -> Result<(String, usize), SqlError> {
    let bytes = sql.as_bytes();
    let mut text = String::new();
    let mut i = start + 1;
    let mut run = i;
    loop {
        match bytes.get(i) {
            None => {
                return Err(SqlError::Parse {
                    offset: start,
                    message: String::from("unterminated quoted text"),
                })
            }
            Some(&b) if b == quote => {
                text.push_str(&sql[run..i]);
                if bytes.get(i + 1) == Some(&quote) {
                    text.push(quote as char);
                    i += 2;
                    run = i;
                } else {
                    return Ok((text, i + 1));
                }
            }
            Some(_) => i += 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(sql: &str) -> Vec<Token> {
        tokenize(sql).unwrap().into_iter().map(|s| s.token).collect()
    }

    #[test]
    fn operators_and_literals() {
        let toks = kinds("a.b <= 15 AND c <> 'it''s' -- trailing comment\n");
        assert_eq!(
            toks,
            [
                Token::Ident("a".into()),
                Token::Dot,
                Token::Ident("b".into()),
                Token::Op(CompareOp::Le),
                Token::Number(15.0),
                Token::Ident("and".into()),
                Token::Ident("c".into()),
                Token::Op(CompareOp::Ne),
                Token::Str("it's".into()),
            ]
        );
    }

    #[test]
    fn double_quotes_are_strings() {
        assert_eq!(kinds("\"TKDE\""), [Token::Str("TKDE".into())]);
    }

    #[test]
    fn unterminated_string_is_error() {
        assert!(tokenize("'abc").is_err());
    }
}
