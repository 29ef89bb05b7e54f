//! Shared tokenizer for both file formats.

use super::DslError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    /// A run of letters, digits, underscores and primes; words double as
    /// symbols, labels, counts and keywords.
    Word(String),
    Caret,
    Arrow,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Equals,
    Newline,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("{w:?}"),
            TokenKind::Caret => "'^'".to_string(),
            TokenKind::Arrow => "'->'".to_string(),
            TokenKind::LBracket => "'['".to_string(),
            TokenKind::RBracket => "']'".to_string(),
            TokenKind::LBrace => "'{'".to_string(),
            TokenKind::RBrace => "'}'".to_string(),
            TokenKind::LParen => "'('".to_string(),
            TokenKind::RParen => "')'".to_string(),
            TokenKind::Comma => "','".to_string(),
            TokenKind::Semi => "';'".to_string(),
            TokenKind::Equals => "'='".to_string(),
            TokenKind::Newline => "end of line".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    while let Some(&c) = chars.peek() {
        let (tok_line, tok_col) = (line, col);
        match c {
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '\n' => {
                chars.next();
                tokens.push(Token { kind: TokenKind::Newline, line: tok_line, col: tok_col });
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '-' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'>') {
                    chars.next();
                    col += 1;
                    tokens.push(Token { kind: TokenKind::Arrow, line: tok_line, col: tok_col });
                } else {
                    return Err(DslError::parse(tok_line, tok_col, "expected '->'"));
                }
            }
            c if is_word_char(c) => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_word_char(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                tokens.push(Token { kind: TokenKind::Word(word), line: tok_line, col: tok_col });
            }
            _ => {
                let kind = match c {
                    '^' => TokenKind::Caret,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ',' => TokenKind::Comma,
                    ';' => TokenKind::Semi,
                    '=' => TokenKind::Equals,
                    other => {
                        return Err(DslError::parse(
                            tok_line,
                            tok_col,
                            format!("unexpected character {other:?}"),
                        ))
                    }
                };
                chars.next();
                col += 1;
                tokens.push(Token { kind, line: tok_line, col: tok_col });
            }
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, line, col });
    Ok(tokens)
}

/// A peekable walk over the token stream with positioned error helpers.
pub struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(tokens: Vec<Token>) -> Self {
        Cursor { tokens, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub fn next(&mut self) -> Token {
        let token = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        token
    }

    pub fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    /// Consumes the token if it matches.
    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, kind: TokenKind) -> Result<Token, DslError> {
        if self.at(&kind) {
            Ok(self.next())
        } else {
            let token = self.peek();
            Err(DslError::parse(
                token.line,
                token.col,
                format!("expected {}, found {}", kind.describe(), token.kind.describe()),
            ))
        }
    }

    pub fn expect_word(&mut self, what: &str) -> Result<(String, u32, u32), DslError> {
        let token = self.peek().clone();
        match token.kind {
            TokenKind::Word(word) => {
                self.next();
                Ok((word, token.line, token.col))
            }
            other => Err(DslError::parse(
                token.line,
                token.col,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    /// Skips newline tokens; returns how many were skipped.
    pub fn skip_newlines(&mut self) -> usize {
        let mut n = 0;
        while self.eat(&TokenKind::Newline) {
            n += 1;
        }
        n
    }

    pub fn error_here(&self, message: impl Into<String>) -> DslError {
        let token = self.peek();
        DslError::parse(token.line, token.col, message)
    }
}
