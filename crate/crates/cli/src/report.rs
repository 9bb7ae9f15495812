//! Regime-labeled stdout reporting. Every numeric value printed by a
//! command goes through [`print_line`], so no number ever appears without
//! its provenance label.

use std::fmt::Display;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Formula evaluation at true parameter magnitudes.
    FullScale,
    /// Numbers measured by running bits through the toy pipeline.
    ToyStructural,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::FullScale => "[full-scale]",
            Regime::ToyStructural => "[toy-structural]",
        }
    }
}

pub fn print_line(regime: Regime, name: &str, value: impl Display) {
    println!("{} {} = {}", regime.label(), name, value);
}
