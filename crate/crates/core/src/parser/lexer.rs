use std::fmt;

use crate::error::{ParseError, ParseErrorKind, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Keyword {
    Select,
    From,
    Where,
    Group,
    Order,
    By,
    Asc,
    Desc,
    Limit,
    And,
    Or,
    Not,
    In,
    Is,
    Null,
    True,
    False,
    As,
    Behaviour,
    Matches,
    Any,
    ThisProcess,
    Flatten,
    Distinct,
}

impl Keyword {
    pub fn lookup(word: &str) -> Option<Keyword> {
        let kw = match word.to_ascii_uppercase().as_str() {
            "SELECT" => Keyword::Select,
            "FROM" => Keyword::From,
            "WHERE" => Keyword::Where,
            "GROUP" => Keyword::Group,
            "ORDER" => Keyword::Order,
            "BY" => Keyword::By,
            "ASC" => Keyword::Asc,
            "DESC" => Keyword::Desc,
            "LIMIT" => Keyword::Limit,
            "AND" => Keyword::And,
            "OR" => Keyword::Or,
            "NOT" => Keyword::Not,
            "IN" => Keyword::In,
            "IS" => Keyword::Is,
            "NULL" => Keyword::Null,
            "TRUE" => Keyword::True,
            "FALSE" => Keyword::False,
            "AS" => Keyword::As,
            "BEHAVIOUR" | "BEHAVIOR" => Keyword::Behaviour,
            "MATCHES" => Keyword::Matches,
            "ANY" => Keyword::Any,
            "THIS_PROCESS" => Keyword::ThisProcess,
            "FLATTEN" => Keyword::Flatten,
            "DISTINCT" => Keyword::Distinct,
            _ => return None,
        };
        Some(kw)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Select => "SELECT",
            Keyword::From => "FROM",
            Keyword::Where => "WHERE",
            Keyword::Group => "GROUP",
            Keyword::Order => "ORDER",
            Keyword::By => "BY",
            Keyword::Asc => "ASC",
            Keyword::Desc => "DESC",
            Keyword::Limit => "LIMIT",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
            Keyword::In => "IN",
            Keyword::Is => "IS",
            Keyword::Null => "NULL",
            Keyword::True => "TRUE",
            Keyword::False => "FALSE",
            Keyword::As => "AS",
            Keyword::Behaviour => "BEHAVIOUR",
            Keyword::Matches => "MATCHES",
            Keyword::Any => "ANY",
            Keyword::ThisProcess => "THIS_PROCESS",
            Keyword::Flatten => "FLATTEN",
            Keyword::Distinct => "DISTINCT",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    QuotedIdent(String),
    String(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Caret,
    Dollar,
    Pipe,
    /// `->`
    Arrow,
    /// `~>`
    TildeArrow,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => f.write_str(k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier {s}"),
            TokenKind::QuotedIdent(s) => write!(f, "identifier \"{s}\""),
            TokenKind::String(s) => write!(f, "string '{s}'"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::LParen => f.write_str("'('"),
            TokenKind::RParen => f.write_str("')'"),
            TokenKind::Comma => f.write_str("','"),
            TokenKind::Semicolon => f.write_str("';'"),
            TokenKind::Star => f.write_str("'*'"),
            TokenKind::Plus => f.write_str("'+'"),
            TokenKind::Minus => f.write_str("'-'"),
            TokenKind::Slash => f.write_str("'/'"),
            TokenKind::Eq => f.write_str("'='"),
            TokenKind::NotEq => f.write_str("'<>'"),
            TokenKind::Lt => f.write_str("'<'"),
            TokenKind::LtEq => f.write_str("'<='"),
            TokenKind::Gt => f.write_str("'>'"),
            TokenKind::GtEq => f.write_str("'>='"),
            TokenKind::Caret => f.write_str("'^'"),
            TokenKind::Dollar => f.write_str("'$'"),
            TokenKind::Pipe => f.write_str("'|'"),
            TokenKind::Arrow => f.write_str("'->'"),
            TokenKind::TildeArrow => f.write_str("'~>'"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Splits query text into tokens. The result always ends with `Eof`.
///
/// Keywords are case-insensitive; `"..."` quotes an identifier and `'...'`
/// a string, each doubling its quote character to escape it. `--` starts
/// a comment that runs to the end of the line.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let two = |next: u8| bytes.get(i + 1) == Some(&next);
        let (kind, len) = match c {
            b'(' => (TokenKind::LParen, 1),
            b')' => (TokenKind::RParen, 1),
            b',' => (TokenKind::Comma, 1),
            b';' => (TokenKind::Semicolon, 1),
            b'*' => (TokenKind::Star, 1),
            b'+' => (TokenKind::Plus, 1),
            b'/' => (TokenKind::Slash, 1),
            b'^' => (TokenKind::Caret, 1),
            b'$' => (TokenKind::Dollar, 1),
            b'|' => (TokenKind::Pipe, 1),
            b'=' => (TokenKind::Eq, 1),
            b'-' if two(b'>') => (TokenKind::Arrow, 2),
            b'-' => (TokenKind::Minus, 1),
            b'~' if two(b'>') => (TokenKind::TildeArrow, 2),
            b'<' if two(b'=') => (TokenKind::LtEq, 2),
            b'<' if two(b'>') => (TokenKind::NotEq, 2),
            b'<' => (TokenKind::Lt, 1),
            b'>' if two(b'=') => (TokenKind::GtEq, 2),
            b'>' => (TokenKind::Gt, 1),
            b'!' if two(b'=') => (TokenKind::NotEq, 2),
            b'\'' | b'"' => {
                let (body, end) = quoted(text, i, c)?;
                let kind = if c == b'\'' { TokenKind::String(body) } else { TokenKind::QuotedIdent(body) };
                (kind, end - i)
            }
            b'0'..=b'9' | b'.' if c != b'.' || bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                let end = number_end(bytes, i);
                let n = text[i..end].parse::<f64>().ok().filter(|n| n.is_finite()).ok_or_else(|| {
                    ParseError::new(ParseErrorKind::SyntaxError, Span::new(i, end), "invalid number literal")
                })?;
                (TokenKind::Number(n), end - i)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = i + 1;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                let word = &text[i..end];
                let kind = match Keyword::lookup(word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Ident(word.to_string()),
                };
                (kind, end - i)
            }
            _ => {
                let ch = text[i..].chars().next().expect("in bounds");
                let span = Span::new(i, i + ch.len_utf8());
                return Err(ParseError::new(
                    ParseErrorKind::IllegalCharacter,
                    span,
                    format!("illegal character '{ch}' at byte {i}"),
                ));
            }
        };
        i += len;
        tokens.push(Token { kind, span: Span::new(start, i) });
    }
    tokens.push(Token { kind: TokenKind::Eof, span: Span::new(text.len(), text.len()) });
    Ok(tokens)
}

fn quoted(text: &str, start: usize, quote: u8) -> Result<(String, usize), ParseError> {
    let bytes = text.as_bytes();
    let mut out = String::new();
    let mut i = start + 1;
    let mut seg = i;
    while i < bytes.len() {
        if bytes[i] == quote {
            out.push_str(&text[seg..i]);
            if bytes.get(i + 1) == Some(&quote) {
                out.push(quote as char);
                i += 2;
                seg = i;
                continue;
            }
            return Ok((out, i + 1));
        }
        i += 1;
    }
    let what = if quote == b'\'' { "string literal" } else { "quoted identifier" };
    Err(ParseError::new(
        ParseErrorKind::UnterminatedString,
        Span::new(start, text.len()),
        format!("unterminated {what} starting at byte {start}"),
    ))
}

fn number_end(bytes: &[u8], start: usize) -> usize {
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn keywords_and_identifiers() {
        assert_eq!(
            kinds("SELECT case_id FROM THIS_PROCESS"),
            vec![
                TokenKind::Keyword(Keyword::Select),
                TokenKind::Ident("case_id".into()),
                TokenKind::Keyword(Keyword::From),
                TokenKind::Keyword(Keyword::ThisProcess),
                TokenKind::Eof
            ]
        );
        assert_eq!(kinds("select")[0], TokenKind::Keyword(Keyword::Select));
        assert_eq!(kinds("behavior")[0], TokenKind::Keyword(Keyword::Behaviour));
    }

    #[test]
    fn quoted_identifier_and_string() {
        assert_eq!(
            kinds(r#""status" = 'blocked'"#),
            vec![
                TokenKind::QuotedIdent("status".into()),
                TokenKind::Eq,
                TokenKind::String("blocked".into()),
                TokenKind::Eof
            ]
        );
        assert_eq!(kinds("'don''t'")[0], TokenKind::String("don't".into()));
        assert_eq!(kinds(r#""a""b""#)[0], TokenKind::QuotedIdent("a\"b".into()));
    }

    #[test]
    fn pattern_operators() {
        assert_eq!(
            kinds("a -> b ~> c - d"),
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Arrow,
                TokenKind::Ident("b".into()),
                TokenKind::TildeArrow,
                TokenKind::Ident("c".into()),
                TokenKind::Minus,
                TokenKind::Ident("d".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn numbers_and_comments() {
        assert_eq!(kinds("1675086864052")[0], TokenKind::Number(1675086864052.0));
        assert_eq!(kinds("1.5e3 .5")[..2], [TokenKind::Number(1500.0), TokenKind::Number(0.5)]);
        assert_eq!(kinds("1 -- comment\n2").len(), 3);
        assert_eq!(tokenize("1e400").unwrap_err().kind, ParseErrorKind::SyntaxError);
    }

    #[test]
    fn errors_carry_positions() {
        let err = tokenize("SELECT 'abc").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnterminatedString);
        assert_eq!(err.span.start, 7);
        let err = tokenize("a # b").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::IllegalCharacter);
        assert_eq!(err.span.start, 2);
        assert_eq!(tokenize("é").unwrap_err().span.end, 2);
    }
}
