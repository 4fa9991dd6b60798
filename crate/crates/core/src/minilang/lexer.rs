use super::{ParseError, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub start: Pos,
    pub end: Pos,
}

const PUNCT: [&str; 22] = [
    "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", ";", ",", ".", "=", "<", ">", "+", "-",
    "*", "/", "%", "!",
];

pub(crate) fn tokenize(file: &str, src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer { src, offset: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let start = lx.pos();
        let Some(c) = lx.peek() else {
            out.push(Token { tok: Tok::Eof, start, end: start });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            Tok::Ident(lx.take_while(|c| c.is_ascii_alphanumeric() || c == '_').to_string())
        } else if c.is_ascii_digit() {
            let digits = lx.take_while(|c| c.is_ascii_digit()).to_string();
            if matches!(lx.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
                return Err(lx.error(file, "malformed number"));
            }
            Tok::Int(digits)
        } else if c == '"' {
            Tok::Str(lx.string(file)?)
        } else if let Some(p) = PUNCT.iter().find(|p| src[lx.offset..].starts_with(**p)) {
            for _ in 0..p.len() {
                lx.bump();
            }
            Tok::Punct(p)
        } else {
            return Err(lx.error(file, &format!("unexpected character `{c}`")));
        };
        out.push(Token { tok, start, end: lx.pos() });
    }
}

struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col, offset: self.offset }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.offset;
        while matches!(self.peek(), Some(c) if f(c)) {
            self.bump();
        }
        &self.src[start..self.offset]
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.src[self.offset..].starts_with("//") => {
                    self.take_while(|c| c != '\n');
                }
                _ => return,
            }
        }
    }

    fn error(&self, file: &str, message: &str) -> ParseError {
        ParseError { file: file.into(), line: self.line, column: self.col, message: message.into() }
    }

    fn string(&mut self, file: &str) -> Result<String, ParseError> {
        let open = self.pos();
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(ParseError {
                        file: file.into(),
                        line: open.line,
                        column: open.col,
                        message: "unterminated string literal".into(),
                    })
                }
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    _ => return Err(self.error(file, "unknown escape in string literal")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}
