use std::fmt;
use std::sync::Arc;

use crate::sexpr::{write_form, Form, FormKind};
use crate::symbol::Symbol;

/// A first-order value: the constants of the term language and the results
/// of evaluation. `nil` is both false and the empty list.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Char(char),
    Str(Arc<str>),
    Sym(Symbol),
    Cons(Arc<(Value, Value)>),
}

impl Value {
    pub fn nil() -> Value {
        Value::Sym(Symbol::nil())
    }

    pub fn t() -> Value {
        Value::Sym(Symbol::t())
    }

    pub fn bool(b: bool) -> Value {
        if b {
            Value::t()
        } else {
            Value::nil()
        }
    }

    pub fn sym(name: &str) -> Value {
        Value::Sym(Symbol::canonical(name))
    }

    pub fn cons(car: Value, cdr: Value) -> Value {
        Value::Cons(Arc::new((car, cdr)))
    }

    /// A proper list of the given elements.
    pub fn list(items: impl IntoIterator<Item = Value, IntoIter: DoubleEndedIterator>) -> Value {
        items
            .into_iter()
            .rev()
            .fold(Value::nil(), |tail, head| Value::cons(head, tail))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Sym(s) if s.is_nil())
    }

    pub fn is_true(&self) -> bool {
        !self.is_nil()
    }

    pub fn is_cons(&self) -> bool {
        matches!(self, Value::Cons(_))
    }

    pub fn car(&self) -> Value {
        match self {
            Value::Cons(pair) => pair.0.clone(),
            _ => Value::nil(),
        }
    }

    pub fn cdr(&self) -> Value {
        match self {
            Value::Cons(pair) => pair.1.clone(),
            _ => Value::nil(),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    /// Converts quoted data into a value. Lists become cons chains.
    pub fn from_form(form: &Form) -> Value {
        match &form.kind {
            FormKind::Symbol(s) => Value::Sym(s.clone()),
            FormKind::Int(n) => Value::Int(*n),
            FormKind::Char(c) => Value::Char(*c),
            FormKind::Str(s) => Value::Str(Arc::from(s.as_str())),
            FormKind::List(items) => items
                .iter()
                .rev()
                .fold(Value::nil(), |tail, head| Value::cons(Value::from_form(head), tail)),
            FormKind::Dotted(items, tail) => items.iter().rev().fold(Value::from_form(tail), |tail, head| {
                Value::cons(Value::from_form(head), tail)
            }),
        }
    }

    pub fn to_form(&self) -> Form {
        match self {
            Value::Int(n) => Form::new(FormKind::Int(*n)),
            Value::Char(c) => Form::new(FormKind::Char(*c)),
            Value::Str(s) => Form::new(FormKind::Str(s.to_string())),
            Value::Sym(s) => Form::new(FormKind::Symbol(s.clone())),
            Value::Cons(_) => {
                let mut items = Vec::new();
                let mut cursor = self;
                while let Value::Cons(pair) = cursor {
                    items.push(pair.0.to_form());
                    cursor = &pair.1;
                }
                if cursor.is_nil() {
                    Form::list(items)
                } else {
                    Form::dotted(items, cursor.to_form())
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_form(&self.to_form()))
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::read_form;

    #[test]
    fn lists_print_like_lisp() {
        let v = Value::list([Value::Int(1), Value::list([Value::Int(2)]), Value::nil()]);
        assert_eq!(v.to_string(), "(1 (2) nil)");
        assert_eq!(Value::cons(Value::Int(1), Value::Int(2)).to_string(), "(1 . 2)");
        assert_eq!(Value::nil().to_string(), "nil");
    }

    #[test]
    fn form_conversion_round_trips() {
        for text in ["(1 2 . 3)", "((a . b) #\\x \"s\")", "nil", "(nil)", "-4"] {
            let form = read_form(text).unwrap();
            let v = Value::from_form(&form);
            assert_eq!(Value::from_form(&v.to_form()), v, "{text}");
        }
        assert_eq!(Value::from_form(&read_form("()").unwrap()), Value::nil());
    }

    #[test]
    fn car_cdr_are_total() {
        assert_eq!(Value::Int(3).car(), Value::nil());
        assert_eq!(Value::nil().cdr(), Value::nil());
    }
}
