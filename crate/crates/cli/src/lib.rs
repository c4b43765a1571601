//! `metacast` command line tool and the local HTTP service behind the viewer.

pub mod commands;
pub mod pipeline;
pub mod service;
