//! Test support shared by the library's integration tests and the acceptance
//! suite: input strategies, reference oracles that do not reuse the code under
//! test, and named property suites.

pub mod oracles;
pub mod properties;
pub mod strategies;

pub use properties::{Property, SUITE};
