#![no_std]
extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adaptive;
pub mod filter;
pub mod gauss;
pub mod system;
pub mod matrix;
pub mod scenarios;
