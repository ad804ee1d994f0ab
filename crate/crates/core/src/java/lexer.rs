//! A small, forgiving Java tokenizer.
//!
//! It only knows enough about Java to tell code apart from string/char
//! literals and comments, which is what delimiter balancing, signature
//! scanning and comment checks need. Malformed input never fails: an
//! unterminated literal or comment simply runs to the end of its line (for
//! literals) or to the end of input, and is flagged as unterminated.

/// Lexical category of a [`Token`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    /// Identifier or keyword.
    Ident,
    Number,
    /// `"..."` literal.
    Str,
    /// `"""..."""` text block.
    TextBlock,
    /// `'x'` literal.
    Char,
    LineComment,
    BlockComment,
    /// Any other single non-whitespace character.
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    /// False for literals/comments that hit end of line/input before closing.
    pub terminated: bool,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::LineComment | TokenKind::BlockComment)
    }

    pub fn is_literal(&self) -> bool {
        matches!(self.kind, TokenKind::Str | TokenKind::TextBlock | TokenKind::Char)
    }

    pub fn is_punct(&self, src: &str, c: char) -> bool {
        self.kind == TokenKind::Punct && src[self.start..].starts_with(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

/// Tokenizes `src`, skipping whitespace.
pub fn tokenize(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        let (kind, end, terminated) = if src[i..].starts_with("//") {
            let end = src[i..].find('\n').map_or(src.len(), |p| i + p);
            (TokenKind::LineComment, end, true)
        } else if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(p) => (TokenKind::BlockComment, i + 2 + p + 2, true),
                None => (TokenKind::BlockComment, src.len(), false),
            }
        } else if src[i..].starts_with("\"\"\"") {
            let mut j = i + 3;
            let mut closed = false;
            while j < src.len() {
                if bytes[j] == b'\\' {
                    j += 2;
                    continue;
                }
                if bytes[j..].starts_with(b"\"\"\"") {
                    j += 3;
                    closed = true;
                    break;
                }
                j += 1;
            }
            (TokenKind::TextBlock, j.min(src.len()), closed)
        } else if c == '"' || c == '\'' {
            let quote = bytes[i];
            let mut j = i + 1;
            let mut closed = false;
            while j < src.len() {
                match bytes[j] {
                    b'\\' => j += 2,
                    b'\n' => break,
                    b if b == quote => {
                        j += 1;
                        closed = true;
                        break;
                    }
                    _ => j += 1,
                }
            }
            let kind = if quote == b'"' {
                TokenKind::Str
            } else {
                TokenKind::Char
            };
            (kind, j.min(src.len()), closed)
        } else if is_ident_start(c) {
            let end = src[i..]
                .char_indices()
                .find(|&(_, ch)| !is_ident_part(ch))
                .map_or(src.len(), |(p, _)| i + p);
            (TokenKind::Ident, end, true)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < src.len() {
                let b = bytes[j];
                let hex = src[i..j].starts_with("0x") || src[i..j].starts_with("0X");
                let signed_exponent = (b == b'+' || b == b'-')
                    && j > i
                    && if hex {
                        matches!(bytes[j - 1], b'p' | b'P')
                    } else {
                        matches!(bytes[j - 1], b'e' | b'E')
                    };
                if b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || signed_exponent {
                    j += 1;
                } else {
                    break;
                }
            }
            (TokenKind::Number, j, true)
        } else {
            (TokenKind::Punct, i + c.len_utf8(), true)
        };
        tokens.push(Token {
            kind,
            start,
            end,
            terminated,
        });
        i = end;
    }
    tokens
}

/// Tokens with comments removed.
pub fn code_tokens(src: &str) -> Vec<Token> {
    tokenize(src).into_iter().filter(|t| !t.is_comment()).collect()
}

/// Returns `(open, close)` for the three bracket pairs tracked by balancing.
pub fn bracket_pair(c: char) -> Option<(char, char)> {
    match c {
        '(' | ')' => Some(('(', ')')),
        '[' | ']' => Some(('[', ']')),
        '{' | '}' => Some(('{', '}')),
        _ => None,
    }
}
