//! Front end: tokens, syntax tree, parser and VDM renderer.

pub mod ast;
pub mod parser;
pub mod render;
pub mod token;

pub use ast::*;
pub use parser::{module_name_from_stem, parse_expr, parse_module, parse_source, parse_type};
pub use render::{render_expr, render_function, render_module};
pub use token::{tokenize, LexError, Tok, Token};
