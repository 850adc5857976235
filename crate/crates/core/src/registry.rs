//! Name-keyed registries for interchangeable strategies.
//!
//! Each strategy family (GLI kernels, scene placements, candidate rankers)
//! exposes a `registry()` constructor pre-populated with the built-in
//! implementations. Callers pick one by name from configuration.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Builds a boxed strategy from the family's configuration type.
pub type Factory<T, C> = fn(&C) -> Box<T>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{name}` (available: {available})")]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub available: String,
}

pub struct Registry<T: ?Sized, C: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Factory<T, C>>,
}

impl<T: ?Sized, C: ?Sized> Registry<T, C> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, factory: Factory<T, C>) -> &mut Self {
        self.entries.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn create(&self, name: &str, config: &C) -> Result<Box<T>, UnknownStrategy> {
        match self.entries.get(name) {
            Some(factory) => Ok(factory(config)),
            None => Err(UnknownStrategy {
                kind: self.kind,
                name: name.to_owned(),
                available: self.names().collect::<Vec<_>>().join(", "),
            }),
        }
    }
}

impl<T: ?Sized, C: ?Sized> fmt::Debug for Registry<T, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("entries", &self.names().collect::<Vec<_>>())
            .finish()
    }
}
