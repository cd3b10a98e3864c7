//! High-precision reference values produced by an independent oracle.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EMBEDDED: &str = include_str!("../fixtures/fixtures.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    /// Decimal string with at least 30 significant digits.
    pub value: String,
    pub method: String,
}

impl Fixture {
    pub fn value_f64(&self) -> Result<f64> {
        self.value.trim().parse().map_err(|_| {
            Error::Config(format!("fixture {}: bad value {:?}", self.name, self.value))
        })
    }

    pub fn input(&self, key: &str) -> Result<f64> {
        self.inputs
            .get(key)
            .copied()
            .ok_or_else(|| Error::Config(format!("fixture {}: missing input {key}", self.name)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixtures {
    pub fixtures: Vec<Fixture>,
}

impl Fixtures {
    pub fn parse(text: &str) -> Result<Self> {
        let fx: Fixtures =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("fixtures: {e}")))?;
        let mut names: Vec<&str> = fx.fixtures.iter().map(|f| f.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("fixtures: duplicate name {}", w[0])));
        }
        for f in &fx.fixtures {
            f.value_f64()?;
        }
        Ok(fx)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The fixture set shipped with the crate.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED).expect("embedded fixtures parse")
    }

    pub fn get(&self, name: &str) -> Option<&Fixture> {
        self.fixtures.iter().find(|f| f.name == name)
    }

    /// Value of a named fixture as f64.
    pub fn value(&self, name: &str) -> Result<f64> {
        self.get(name)
            .ok_or_else(|| Error::Config(format!("no fixture named {name}")))?
            .value_f64()
    }
}
