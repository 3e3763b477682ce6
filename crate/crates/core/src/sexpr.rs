//! Reader and printer for the s-expression script format.
//!
//! Forms are generic symbolic structure with no logical meaning attached;
//! the kernel and events modules interpret them. Symbols are folded to lower
//! case, square brackets are ordinary symbol characters (`map[?f_?p]` is one
//! symbol), and a dotted pair is kept distinct from a proper list.

use std::fmt;

use thiserror::Error;

use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {location}: {message}")]
pub struct SyntaxError {
    pub location: Location,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormKind {
    Symbol(Symbol),
    Int(i64),
    Char(char),
    Str(String),
    List(Vec<Form>),
    /// `(a b . c)`: at least one element before the dot; the tail is never
    /// a list (the reader splices `(a . (b))` into `(a b)`).
    Dotted(Vec<Form>, Box<Form>),
}

/// A form together with where it was read. Equality ignores the location.
#[derive(Debug, Clone)]
pub struct Form {
    pub kind: FormKind,
    pub location: Location,
}

impl PartialEq for Form {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Form {}

impl Form {
    pub fn new(kind: FormKind) -> Self {
        Form {
            kind,
            location: Location::default(),
        }
    }

    pub fn symbol(name: impl AsRef<str>) -> Self {
        Form::new(FormKind::Symbol(Symbol::canonical(name.as_ref())))
    }

    pub fn int(n: i64) -> Self {
        Form::new(FormKind::Int(n))
    }

    pub fn list(items: Vec<Form>) -> Self {
        Form::new(FormKind::List(items))
    }

    pub fn dotted(items: Vec<Form>, tail: Form) -> Self {
        Form::new(FormKind::Dotted(items, Box::new(tail)))
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match &self.kind {
            FormKind::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// List elements; `nil` and `()` both count as the empty list.
    pub fn as_list(&self) -> Option<&[Form]> {
        match &self.kind {
            FormKind::List(items) => Some(items),
            FormKind::Symbol(s) if s.is_nil() => Some(&[]),
            _ => None,
        }
    }

    pub fn is_symbol(&self, name: &str) -> bool {
        self.as_symbol().is_some_and(|s| s.as_str() == name)
    }

    pub fn is_keyword(&self) -> bool {
        self.as_symbol().is_some_and(Symbol::is_keyword)
    }

    /// The head symbol of a list form, if any.
    pub fn head(&self) -> Option<&Symbol> {
        match &self.kind {
            FormKind::List(items) => items.first().and_then(Form::as_symbol),
            _ => None,
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_form(self))
    }
}

/// Reads every top-level form in `text`.
pub fn read_forms(text: &str) -> Result<Vec<Form>, SyntaxError> {
    let mut reader = Reader::new(text);
    let mut forms = Vec::new();
    loop {
        reader.skip_trivia();
        if reader.peek().is_none() {
            return Ok(forms);
        }
        forms.push(reader.read()?);
    }
}

/// Reads exactly one form.
pub fn read_form(text: &str) -> Result<Form, SyntaxError> {
    let mut forms = read_forms(text)?;
    match forms.len() {
        1 => Ok(forms.pop().unwrap()),
        n => Err(SyntaxError {
            location: Location { line: 1, column: 1 },
            message: format!("expected exactly one form, found {n}"),
        }),
    }
}

const CHAR_NAMES: &[(&str, char)] = &[
    ("space", ' '),
    ("newline", '\n'),
    ("tab", '\t'),
    ("page", '\u{c}'),
    ("return", '\r'),
    ("rubout", '\u{7f}'),
    ("null", '\0'),
];

fn is_constituent(c: char) -> bool {
    c.is_alphanumeric() || "?[]_-+*<>=!:/$%&^~@.".contains(c)
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | ';' | '"' | '\'')
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn location(&self) -> Location {
        Location {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, location: Location, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            location,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Form, SyntaxError> {
        self.skip_trivia();
        let location = self.location();
        let kind = match self.peek() {
            None => return Err(self.error(location, "unexpected end of input")),
            Some('(') => {
                self.bump();
                self.read_list_tail(location)?
            }
            Some(')') => return Err(self.error(location, "unbalanced ')'")),
            Some('\'') => {
                self.bump();
                let quoted = self.read()?;
                FormKind::List(vec![
                    Form {
                        kind: FormKind::Symbol(Symbol::new("quote")),
                        location,
                    },
                    quoted,
                ])
            }
            Some('"') => {
                self.bump();
                self.read_string(location)?
            }
            Some('#') => {
                self.bump();
                self.read_char(location)?
            }
            Some(_) => {
                let token = self.read_token();
                atom_from_token(&token).ok_or_else(|| self.error(location, format!("illegal atom `{token}`")))?
            }
        };
        Ok(Form { kind, location })
    }

    fn read_token(&mut self) -> String {
        let mut token = String::new();
        while let Some(c) = self.peek() {
            if is_delimiter(c) {
                break;
            }
            token.push(c);
            self.bump();
        }
        token
    }

    fn read_list_tail(&mut self, open: Location) -> Result<FormKind, SyntaxError> {
        let mut items = Vec::new();
        loop {
            self.skip_trivia();
            let location = self.location();
            match self.peek() {
                None => return Err(self.error(open, "unbalanced '(': missing ')'")),
                Some(')') => {
                    self.bump();
                    return Ok(FormKind::List(items));
                }
                Some('.') if self.dot_is_separator() => {
                    self.bump();
                    if items.is_empty() {
                        return Err(self.error(location, "bad dotted syntax: nothing before '.'"));
                    }
                    self.skip_trivia();
                    if self.peek() == Some(')') {
                        return Err(self.error(location, "bad dotted syntax: nothing after '.'"));
                    }
                    let tail = self.read()?;
                    self.skip_trivia();
                    if self.bump() != Some(')') {
                        return Err(self.error(location, "bad dotted syntax: expected ')' after tail"));
                    }
                    return Ok(match tail.kind {
                        FormKind::List(rest) => {
                            items.extend(rest);
                            FormKind::List(items)
                        }
                        FormKind::Dotted(rest, tail) => {
                            items.extend(rest);
                            FormKind::Dotted(items, tail)
                        }
                        _ => FormKind::Dotted(items, Box::new(tail)),
                    });
                }
                Some(_) => items.push(self.read()?),
            }
        }
    }

    /// A `.` is the pair separator only when it stands alone.
    fn dot_is_separator(&self) -> bool {
        let mut ahead = self.chars.clone();
        ahead.next();
        ahead.peek().is_none_or(|&c| is_delimiter(c))
    }

    fn read_string(&mut self, open: Location) -> Result<FormKind, SyntaxError> {
        let mut text = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(open, "unterminated string")),
                Some('"') => return Ok(FormKind::Str(text)),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => text.push(c),
                    _ => return Err(self.error(open, "unsupported string escape")),
                },
                Some(c) => text.push(c),
            }
        }
    }

    fn read_char(&mut self, location: Location) -> Result<FormKind, SyntaxError> {
        if self.bump() != Some('\\') {
            return Err(self.error(location, "expected `#\\` character literal"));
        }
        let first = self
            .bump()
            .ok_or_else(|| self.error(location, "unterminated character literal"))?;
        let mut name = String::from(first);
        while let Some(c) = self.peek() {
            if is_delimiter(c) {
                break;
            }
            name.push(c);
            self.bump();
        }
        if name.chars().count() == 1 {
            return Ok(FormKind::Char(first));
        }
        let lower = name.to_lowercase();
        if let Some((_, c)) = CHAR_NAMES.iter().find(|(n, _)| *n == lower) {
            return Ok(FormKind::Char(*c));
        }
        lower
            .strip_prefix("u+")
            .and_then(|hex| u32::from_str_radix(hex, 16).ok())
            .and_then(char::from_u32)
            .map(FormKind::Char)
            .ok_or_else(|| self.error(location, format!("unknown character name `{name}`")))
    }
}

fn atom_from_token(token: &str) -> Option<FormKind> {
    let digits = token.strip_prefix(['-', '+']).unwrap_or(token);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        return token.parse::<i64>().ok().map(FormKind::Int);
    }
    if token.is_empty() || token.contains('.') || !token.chars().all(is_constituent) {
        return None;
    }
    Some(FormKind::Symbol(Symbol::canonical(token)))
}

/// Canonical rendering; `read_form(&write_form(f)) == f`.
pub fn write_form(form: &Form) -> String {
    let mut out = String::new();
    write_into(form, &mut out);
    out
}

fn write_into(form: &Form, out: &mut String) {
    match &form.kind {
        FormKind::Symbol(s) => out.push_str(s.as_str()),
        FormKind::Int(n) => out.push_str(&n.to_string()),
        FormKind::Char(c) => write_char(*c, out),
        FormKind::Str(s) => {
            out.push('"');
            for c in s.chars() {
                if matches!(c, '"' | '\\') {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push('"');
        }
        FormKind::List(items) => {
            if let [quote, quoted] = items.as_slice() {
                if quote.is_symbol("quote") {
                    out.push('\'');
                    write_into(quoted, out);
                    return;
                }
            }
            out.push('(');
            write_items(items, out);
            out.push(')');
        }
        FormKind::Dotted(items, tail) => {
            out.push('(');
            write_items(items, out);
            out.push_str(" . ");
            write_into(tail, out);
            out.push(')');
        }
    }
}

fn write_items(items: &[Form], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write_into(item, out);
    }
}

fn write_char(c: char, out: &mut String) {
    out.push_str("#\\");
    if let Some((name, _)) = CHAR_NAMES.iter().find(|(_, ch)| *ch == c) {
        let mut chars = name.chars();
        out.extend(chars.next().map(|h| h.to_ascii_uppercase()));
        out.push_str(chars.as_str());
    } else if c.is_control() || c.is_whitespace() {
        out.push_str(&format!("U+{:04X}", c as u32));
    } else {
        out.push(c);
    }
}
