//! Library surface of the command-line crate, exposed so integration tests
//! can drive the HTTP service in-process.

pub mod service;
