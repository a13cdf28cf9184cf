//! r-primitive elements of finite field extensions `F_{q^n}/F_q`:
//! character-sum characterization, explicit sufficient condition, and
//! exhaustive verification of the translate and line properties.

pub mod arith;
pub mod chars;
pub mod ff;
pub mod rstruct;
pub mod search;

pub mod cli;
mod par;
