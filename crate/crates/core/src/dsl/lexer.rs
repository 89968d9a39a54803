use crate::diagnostic::Diagnostic;
use crate::model::{Position, SourceSpan};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Unsigned numeric literal with its source text.
    Number(f64, String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Semi,
    Comma,
    Dot,
    DotDot,
    Arrow,
    DashArrow,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    At,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_, t) => format!("number `{t}`"),
            Tok::Str(_) => "string".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Arrow => "->",
            Tok::DashArrow => "-->",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::At => "@",
            _ => "",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub start: Position,
    /// Position just past the last character.
    pub end: Position,
    /// First token on its line.
    pub line_start: bool,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn pos(&self) -> Position {
        Position::new(self.line, self.col)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Splits `text` into tokens. Lexical errors are reported and skipped so
/// parsing can continue; the token stream always ends with `Eof`.
pub fn lex(text: &str, file: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let mut last_line = 0;
    let span = |a: Position, b: Position| SourceSpan::new(file, a, b);

    while let Some(c) = cur.peek() {
        let start = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek2() == Some('/') {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                s.push(c);
                cur.bump();
            }
            if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
                s.push('.');
                cur.bump();
                while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                    s.push(c);
                    cur.bump();
                }
            }
            let v = s.parse::<f64>().expect("digits form a valid float");
            Tok::Number(v, s)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            let mut closed = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match cur.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('r') => s.push('\r'),
                        Some(c @ ('"' | '\\')) => s.push(c),
                        Some(other) => {
                            diags.push(Diagnostic::error(
                                "AMN-SYN-03",
                                format!("unknown escape `\\{other}` in string"),
                                span(start, cur.pos()),
                            ));
                        }
                        None => break,
                    },
                    c => s.push(c),
                }
            }
            if !closed {
                diags.push(Diagnostic::error(
                    "AMN-SYN-03",
                    "unterminated string literal",
                    span(start, cur.pos()),
                ));
            }
            Tok::Str(s)
        } else {
            cur.bump();
            let next = cur.peek();
            let two = |cur: &mut Cursor, t: Tok| {
                cur.bump();
                t
            };
            match (c, next) {
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('[', _) => Tok::LBracket,
                (']', _) => Tok::RBracket,
                (':', _) => Tok::Colon,
                (';', _) => Tok::Semi,
                (',', _) => Tok::Comma,
                ('.', Some('.')) => two(&mut cur, Tok::DotDot),
                ('.', _) => Tok::Dot,
                ('-', Some('-')) if cur.peek2() == Some('>') => {
                    cur.bump();
                    cur.bump();
                    Tok::DashArrow
                }
                ('-', Some('>')) => two(&mut cur, Tok::Arrow),
                ('-', _) => Tok::Minus,
                ('=', Some('=')) => two(&mut cur, Tok::EqEq),
                ('=', _) => Tok::Assign,
                ('!', Some('=')) => two(&mut cur, Tok::NotEq),
                ('<', Some('=')) => two(&mut cur, Tok::Le),
                ('<', _) => Tok::Lt,
                ('>', Some('=')) => two(&mut cur, Tok::Ge),
                ('>', _) => Tok::Gt,
                ('+', _) => Tok::Plus,
                ('*', _) => Tok::Star,
                ('/', _) => Tok::Slash,
                ('%', _) => Tok::Percent,
                ('@', _) => Tok::At,
                _ => {
                    diags.push(Diagnostic::error(
                        "AMN-SYN-01",
                        format!("invalid character {c:?}"),
                        span(start, cur.pos()),
                    ));
                    continue;
                }
            }
        };
        let line_start = start.line != last_line;
        last_line = cur.pos().line;
        toks.push(Token {
            tok,
            start,
            end: cur.pos(),
            line_start,
        });
    }
    let end = cur.pos();
    toks.push(Token {
        tok: Tok::Eof,
        start: end,
        end,
        line_start: true,
    });
    (toks, diags)
}
