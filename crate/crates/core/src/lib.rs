//! Query-log driven keyword mapping and join-path inference for
//! natural-language-to-SQL translation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and IO live
//! in the companion `logmap` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod eval;
pub mod join;
pub mod mapper;
pub mod qfg;
pub mod sim;
pub mod sql;
pub mod stem;
pub mod text;
pub mod translate;
