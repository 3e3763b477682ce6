//! Canonical, interned symbol names.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, LazyLock, Mutex};

/// A canonical (lower-cased) symbol name.
///
/// Symbols are interned: equal names share one allocation, so equality and
/// hashing work on the pointer. Ordering is by name.
#[derive(Clone, Eq)]
pub struct Symbol(Arc<str>);

static INTERNED: LazyLock<Mutex<HashSet<Arc<str>>>> = LazyLock::new(Default::default);
static NIL: LazyLock<Symbol> = LazyLock::new(|| Symbol::new("nil"));
static T: LazyLock<Symbol> = LazyLock::new(|| Symbol::new("t"));

impl Symbol {
    /// Builds a symbol from text that is already in canonical case.
    pub fn new(text: impl AsRef<str>) -> Self {
        let text = text.as_ref();
        let mut table = INTERNED.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(existing) = table.get(text) {
            return Symbol(existing.clone());
        }
        let name: Arc<str> = Arc::from(text);
        table.insert(name.clone());
        Symbol(name)
    }

    /// Builds a symbol, folding the text to canonical case.
    pub fn canonical(text: &str) -> Self {
        Symbol::new(text.to_lowercase())
    }

    pub fn nil() -> Self {
        NIL.clone()
    }

    pub fn t() -> Self {
        T.clone()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_nil(&self) -> bool {
        self.as_str() == "nil"
    }

    pub fn is_keyword(&self) -> bool {
        self.0.starts_with(':')
    }

    /// Symbols that denote themselves as constants rather than variables.
    pub fn is_self_evaluating(&self) -> bool {
        matches!(self.as_str(), "t" | "nil") || self.is_keyword()
    }

    /// Appends a suffix, e.g. `injective[?f]` + `-necc`.
    pub fn suffixed(&self, suffix: &str) -> Symbol {
        Symbol::new(format!("{}{}", self.0, suffix))
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::ptr::hash(Arc::as_ptr(&self.0) as *const u8, state)
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::canonical(s)
    }
}
