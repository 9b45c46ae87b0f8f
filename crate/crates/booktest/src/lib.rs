//! Compiles the guide's code listings as doctests so `cargo test` keeps the
//! book in sync with the library. Each chapter becomes one doc module.
