//! Finding large blowups of triangle-free patterns and monochromatic rich
//! inflations, with brute-force oracles for verification.

pub mod bitset;
pub mod coloring;
pub mod counting;
pub mod error;
pub mod experiment;
pub mod finder;
pub mod formats;
pub mod generate;
pub mod graph;
pub mod oracle;
pub mod parts;
pub mod pattern;
pub mod ramsey;
pub mod rational;

pub use bitset::BitSet;
pub use coloring::Coloring;
pub use error::{Error, Result};
pub use graph::Graph;
pub use parts::{BlowupWitness, InflationCertificate, PartSystem};
pub use pattern::{Pattern, SmallGraph};
pub use finder::{FinderOptions, Mode};
pub use ramsey::{RamseyOptions, RichInflation};
