//! Holds the headline acceptance checks in `tests/acceptance.rs`.
//!
//! Kept in its own package so that cargo runs it after every other suite.
