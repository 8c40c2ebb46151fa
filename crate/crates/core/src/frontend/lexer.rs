//! Hand-written tokenizer.
//!
//! Tokenizing never fails: characters that cannot start a token become
//! [`TokenKind::Invalid`] tokens and are reported by the parser.

use serde::{Deserialize, Serialize};

/// Source position of a token or AST node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub file: u16,
    /// Byte offset into the file.
    pub offset: u32,
    pub len: u32,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn to(self, end: Span) -> Span {
        if end.file != self.file || end.offset < self.offset {
            return self;
        }
        Span { len: end.offset + end.len - self.offset, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Contract,
    Struct,
    Trait,
    Enum,
    Case,
    Event,
    Var,
    Let,
    Func,
    Init,
    Fallback,
    Public,
    Mutating,
    Visible,
    Implicit,
    Inout,
    Return,
    Become,
    Emit,
    For,
    In,
    If,
    Else,
    SelfValue,
    Try,
}

impl Keyword {
    pub fn from_str(text: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match text {
            "contract" => Contract,
            "struct" => Struct,
            "trait" => Trait,
            "enum" => Enum,
            "case" => Case,
            "event" => Event,
            "var" => Var,
            "let" => Let,
            "func" => Func,
            "init" => Init,
            "fallback" => Fallback,
            "public" => Public,
            "mutating" => Mutating,
            "visible" => Visible,
            "implicit" => Implicit,
            "inout" => Inout,
            "return" => Return,
            "become" => Become,
            "emit" => Emit,
            "for" => For,
            "in" => In,
            "if" => If,
            "else" => Else,
            "self" => SelfValue,
            "try" => Try,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword(Keyword),
    Identifier,
    Number,
    Address,
    String,
    Bool,
    Punct,
    Operator,
    Newline,
    /// A character that cannot start any token.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        matches!(self.kind, TokenKind::Punct | TokenKind::Operator) && self.text == text
    }

    pub fn is_keyword(&self, kw: Keyword) -> bool {
        self.kind == TokenKind::Keyword(kw)
    }
}

/// Longest operators first so the scanner can match greedily.
const OPERATORS: &[&str] = &[
    "..<", "...", "**", "&+", "&-", "&*", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "->", "::",
    "<-", "+", "-", "*", "/", "<", ">", "=", "&", ".",
];
const PUNCT: &[char] = &['(', ')', '{', '}', '[', ']', ',', ':', ';', '@'];

#[derive(Debug, Clone, Copy, Default)]
pub struct LexOptions {
    /// Allow `$` inside identifiers (standard library sources only).
    pub allow_dollar: bool,
}

pub fn tokenize(source: &str) -> Vec<Token> {
    tokenize_with(source, 0, LexOptions::default())
}

pub fn tokenize_with(source: &str, file: u16, options: LexOptions) -> Vec<Token> {
    Lexer { src: source, pos: 0, line: 1, col: 1, file, options, tokens: Vec::new() }.run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    file: u16,
    options: LexOptions,
    tokens: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> char {
        let c = self.peek().expect("bump past end");
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: u32, col: u32) {
        let text = self.src[start..self.pos].to_string();
        let span = Span { file: self.file, offset: start as u32, len: (self.pos - start) as u32, line, column: col };
        self.tokens.push(Token { kind, text, span });
    }

    fn run(mut self) -> Vec<Token> {
        while let Some(c) = self.peek() {
            let (start, line, col) = (self.pos, self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    self.push(TokenKind::Newline, start, line, col);
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '/' if self.peek_at(1) == Some('/') => {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => self.identifier(start, line, col),
                c if c.is_ascii_digit() => self.number(start, line, col),
                '"' => {
                    self.bump();
                    while self.peek().is_some_and(|c| c != '"' && c != '\n') {
                        self.bump();
                    }
                    if self.peek() == Some('"') {
                        self.bump();
                        self.push(TokenKind::String, start, line, col);
                    } else {
                        self.push(TokenKind::Invalid, start, line, col);
                    }
                }
                c if PUNCT.contains(&c) && !(c == ':' && self.peek_at(1) == Some(':')) => {
                    self.bump();
                    self.push(TokenKind::Punct, start, line, col);
                }
                _ => {
                    let rest = &self.src[self.pos..];
                    if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
                        for _ in 0..op.len() {
                            self.bump();
                        }
                        self.push(TokenKind::Operator, start, line, col);
                    } else {
                        self.bump();
                        self.push(TokenKind::Invalid, start, line, col);
                    }
                }
            }
        }
        self.tokens
    }

    fn identifier(&mut self, start: usize, line: u32, col: u32) {
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || (c == '$' && self.options.allow_dollar) {
                self.bump();
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        let kind = match text {
            "true" | "false" => TokenKind::Bool,
            _ => Keyword::from_str(text).map_or(TokenKind::Identifier, TokenKind::Keyword),
        };
        self.push(kind, start, line, col);
    }

    fn number(&mut self, start: usize, line: u32, col: u32) {
        if self.peek() == Some('0') && self.peek_at(1) == Some('x') {
            self.bump();
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                self.bump();
            }
            let digits = &self.src[start + 2..self.pos];
            let kind = if digits.len() == 40 && digits.chars().all(|c| c.is_ascii_hexdigit()) {
                TokenKind::Address
            } else {
                TokenKind::Invalid
            };
            self.push(kind, start, line, col);
            return;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        // `1.5` is a (rejected later) fractional literal; `1..<2` is a range.
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        self.push(TokenKind::Number, start, line, col);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn variable_declaration() {
        assert_eq!(
            kinds("var x: Int = 0"),
            vec![
                (TokenKind::Keyword(Keyword::Var), "var".into()),
                (TokenKind::Identifier, "x".into()),
                (TokenKind::Punct, ":".into()),
                (TokenKind::Identifier, "Int".into()),
                (TokenKind::Operator, "=".into()),
                (TokenKind::Number, "0".into()),
            ]
        );
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn dollar_is_invalid_in_user_code() {
        assert_eq!(
            kinds("my$Func"),
            vec![
                (TokenKind::Identifier, "my".into()),
                (TokenKind::Invalid, "$".into()),
                (TokenKind::Identifier, "Func".into()),
            ]
        );
        let lib = tokenize_with("flint$send", 0, LexOptions { allow_dollar: true });
        assert_eq!(lib.len(), 1);
        assert_eq!(lib[0].kind, TokenKind::Identifier);
    }

    #[test]
    fn operators_and_ranges() {
        let texts: Vec<String> = tokenize("(0..<5) a &+ b && c :: x <- (any) 1.5").into_iter().map(|t| t.text).collect();
        assert_eq!(
            texts,
            vec!["(", "0", "..<", "5", ")", "a", "&+", "b", "&&", "c", "::", "x", "<-", "(", "any", ")", "1.5"]
        );
    }

    #[test]
    fn address_literals() {
        let t = tokenize("0x00000000000000000000000000000000000000aa 0x12");
        assert_eq!(t[0].kind, TokenKind::Address);
        assert_eq!(t[1].kind, TokenKind::Invalid);
    }

    #[test]
    fn spans_track_lines() {
        let t = tokenize("contract C {\n  var x: Int // note\n}");
        let x = t.iter().find(|t| t.text == "x").unwrap();
        assert_eq!((x.span.line, x.span.column), (2, 7));
    }

    proptest! {
        /// Gaps between tokens contain only trivia, so tokens plus trivia rebuild the source.
        #[test]
        fn tokens_plus_trivia_reconstruct(src in "[a-zA-Z0-9_ \\n\\t(){}\\[\\],:;@+*/<>=&|.!$\"-]{0,80}") {
            let tokens = tokenize(&src);
            let mut rebuilt = String::new();
            let mut cursor = 0usize;
            let mut in_comment = false;
            for tok in &tokens {
                let start = tok.span.offset as usize;
                let gap = &src[cursor..start];
                for (i, ch) in gap.char_indices() {
                    if gap[i..].starts_with("//") { in_comment = true; }
                    prop_assert!(in_comment || ch.is_whitespace(), "non-trivia gap {:?}", gap);
                }
                rebuilt.push_str(gap);
                prop_assert_eq!(&src[start..start + tok.span.len as usize], tok.text.as_str());
                rebuilt.push_str(&tok.text);
                cursor = start + tok.span.len as usize;
                if tok.kind == TokenKind::Newline { in_comment = false; }
            }
            rebuilt.push_str(&src[cursor..]);
            prop_assert_eq!(rebuilt, src);
        }
    }
}
