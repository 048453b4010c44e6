use super::ExprError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Number,
    Variable,
    Identifier,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

/// One lexed token: its kind, the source slice it covers, and the 0-based
/// byte offset of its first character in the original input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub position: usize,
}

/// Tokenizes `source`. Offsets in errors and tokens are shifted by `offset`
/// so they keep pointing into the caller's original string when a prefix was
/// stripped before lexing.
pub(crate) fn tokenize(source: &str, offset: usize) -> Result<Vec<Token<'_>>, ExprError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0usize;

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }

        let start = i;
        let kind = match c {
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = kind {
            tokens.push(Token {
                kind,
                text: &source[start..start + 1],
                position: offset + start,
            });
            i += 1;
            continue;
        }

        if c.is_ascii_digit() || c == b'.' {
            i = scan_number(bytes, start);
            let text = &source[start..i];
            let value: f64 = text.parse().map_err(|_| ExprError::Parse {
                position: offset + start,
                message: format!("invalid number '{text}'"),
            })?;
            if !value.is_finite() {
                return Err(ExprError::Parse {
                    position: offset + start,
                    message: format!("number '{text}' is out of range"),
                });
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text,
                position: offset + start,
            });
            continue;
        }

        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &source[start..i];
            let kind = if text == "x" {
                TokenKind::Variable
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token {
                kind,
                text,
                position: offset + start,
            });
            continue;
        }

        return Err(ExprError::Parse {
            position: offset + start,
            message: format!("unexpected character '{}'", source[start..].chars().next().unwrap()),
        });
    }

    Ok(tokens)
}

/// Consumes digits, an optional fraction, and an optional exponent starting
/// at `start`; returns the index one past the number.
fn scan_number(bytes: &[u8], start: usize) -> usize {
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
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_strictly_increase() {
        let tokens = tokenize("5432.060708*cos((sin(x^9.876))^-1.2345)", 0).unwrap();
        for pair in tokens.windows(2) {
            assert!(pair[0].position < pair[1].position);
        }
        assert_eq!(tokens[0].kind, TokenKind::Number);
        assert_eq!(tokens[0].text, "5432.060708");
    }

    #[test]
    fn variable_is_distinguished_from_identifiers() {
        let tokens = tokenize("x + xs + sin", 0).unwrap();
        assert_eq!(tokens[0].kind, TokenKind::Variable);
        assert_eq!(tokens[2].kind, TokenKind::Identifier);
        assert_eq!(tokens[2].text, "xs");
        assert_eq!(tokens[4].kind, TokenKind::Identifier);
    }

    #[test]
    fn numbers_must_be_finite() {
        let err = tokenize("1e999", 0).unwrap_err();
        match err {
            ExprError::Parse { position, .. } => assert_eq!(position, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn scientific_notation_and_leading_dot() {
        let tokens = tokenize("1.5e-3 .25 2E4", 0).unwrap();
        let texts: Vec<&str> = tokens.iter().map(|t| t.text).collect();
        assert_eq!(texts, vec!["1.5e-3", ".25", "2E4"]);
    }

    #[test]
    fn rejects_unexpected_characters() {
        let err = tokenize("x + $", 0).unwrap_err();
        match err {
            ExprError::Parse { position, .. } => assert_eq!(position, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn offset_shifts_positions() {
        let tokens = tokenize("x+1", 4).unwrap();
        assert_eq!(tokens[0].position, 4);
        assert_eq!(tokens[2].position, 6);
    }
}
