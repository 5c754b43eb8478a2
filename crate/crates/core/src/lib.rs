//! Geometric Lax pair of the elliptic difference Painleve equation on
//! P1 x P1, with numerical verification of its compatibility.

pub mod compat;
pub mod config;
pub mod curves;
pub mod dynamics;
pub mod error;
pub mod identities;
pub mod lax;
pub mod numerics;
pub mod orbit;
pub mod p6;
pub mod qp6;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
