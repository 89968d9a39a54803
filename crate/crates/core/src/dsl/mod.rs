//! Textual concrete syntax: lexer, error-recovering parser and canonical printer.

mod lexer;
mod parser;
mod printer;

use crate::diagnostic::{has_errors, Diagnostic};

pub use parser::{is_reserved, parse, parse_action, RESERVED};
pub use printer::{percent, print, quote};

/// Canonical reformatting: `print(parse(text))`. Refuses input with syntax
/// errors and returns the diagnostics instead.
pub fn fmt(text: &str, file: &str) -> Result<String, Vec<Diagnostic>> {
    let (model, diags) = parse(text, file);
    if has_errors(&diags) {
        return Err(diags);
    }
    Ok(print(&model))
}
