//! Secure compilation of mutually distrustful object-oriented components.
//!
//! Source programs compile to a compartmentalized stack machine, which in
//! turn compiles to a tagged symbolic machine whose micro-policy enforces
//! compartment isolation, well-typed calls and well-bracketed returns.

pub mod harness;
pub mod i2t;
pub mod interfaces;
pub mod interm;
pub mod loader;
pub mod names;
pub mod pipeline;
pub mod policy;
pub mod s2i;
pub mod source;
pub mod syntax;
pub mod target;
