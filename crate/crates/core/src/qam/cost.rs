//! T-depth cost model for the arithmetic primitives.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-primitive T-depth as a function of the register width `b`.
///
/// The defaults (adder `2b`, multiplier `4b^2`, comparator `b`, copy `b`) are
/// declared artifact constants consistent with polylog-in-precision gate
/// complexity for basic arithmetic; no published constants exist for the
/// hardware being modeled, so resource studies can swap them via a config
/// file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostTable {
    /// Adder depth per bit; depth = `adder_per_bit * b`.
    pub adder_per_bit: f64,
    /// Multiplier depth per squared bit; depth = `multiplier_per_bit_sq * b^2`.
    pub multiplier_per_bit_sq: f64,
    /// Comparator depth per bit.
    pub comparator_per_bit: f64,
    /// Controlled-copy depth per bit.
    pub copy_per_bit: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        Self {
            adder_per_bit: 2.0,
            multiplier_per_bit_sq: 4.0,
            comparator_per_bit: 1.0,
            copy_per_bit: 1.0,
        }
    }
}

impl CostTable {
    pub fn adder_tdepth(&self, bits: u32) -> f64 {
        self.adder_per_bit * bits as f64
    }

    pub fn multiplier_tdepth(&self, bits: u32) -> f64 {
        self.multiplier_per_bit_sq * (bits as f64) * (bits as f64)
    }

    pub fn comparator_tdepth(&self, bits: u32) -> f64 {
        self.comparator_per_bit * bits as f64
    }

    pub fn copy_tdepth(&self, bits: u32) -> f64 {
        self.copy_per_bit * bits as f64
    }

    /// One multiply-accumulate depth layer.
    pub fn mac_tdepth(&self, bits: u32) -> f64 {
        self.multiplier_tdepth(bits) + self.adder_tdepth(bits)
    }

    pub fn validate(&self) -> Result<()> {
        let entries = [
            self.adder_per_bit,
            self.multiplier_per_bit_sq,
            self.comparator_per_bit,
            self.copy_per_bit,
        ];
        if entries.iter().any(|&c| !c.is_finite() || c <= 0.0) {
            return Err(Error::Config(
                "cost table entries must be strictly positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// Loads a cost table from TOML text, e.g.
    /// `adder_per_bit = 2.0`. Missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: CostTable =
            toml::from_str(text).map_err(|e| Error::Config(format!("cost table: {e}")))?;
        table.validate()?;
        Ok(table)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
