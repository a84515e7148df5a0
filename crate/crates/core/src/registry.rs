//! Name-keyed registry of boxed strategy objects.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
#[error("unknown {kind} {name:?}; known: {}", known.join(", "))]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub known: Vec<String>,
}

/// Strategies registered under one or more names. Lookups are
/// case-insensitive.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Box<T>>,
    names: BTreeMap<String, usize>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry { kind, entries: Vec::new(), names: BTreeMap::new() }
    }

    /// Registers `item` under `name` and any `aliases`. Later registrations
    /// shadow earlier ones with the same name.
    pub fn register(&mut self, name: &str, aliases: &[&str], item: Box<T>) {
        let slot = self.entries.len();
        self.entries.push(item);
        for n in std::iter::once(&name).chain(aliases) {
            self.names.insert(n.to_ascii_lowercase(), slot);
        }
    }

    pub fn get(&self, name: &str) -> Result<&T, UnknownStrategy> {
        self.names.get(&name.to_ascii_lowercase()).map(|&i| self.entries[i].as_ref()).ok_or_else(|| UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            known: self.names.keys().cloned().collect(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
