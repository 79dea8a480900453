//! Operator entry points and the HTTP chat service.

pub mod commands;
pub mod server;
