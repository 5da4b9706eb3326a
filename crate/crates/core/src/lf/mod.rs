//! Logical forms: AST, parser, canonical serializer and structural properties.

mod ast;
mod display;
mod file;
mod parser;
mod props;
pub mod sample;

pub use ast::*;
pub use display::{lf_equal, serialize_lf};
pub use file::{load_lf_templates, parse_lf_templates, LfFileError, LfTemplate};
pub use parser::{parse_lf, LfParseError};
pub use props::{classify_lf, LfProperties};

pub(crate) use ast::is_identifier;
pub(crate) use parser::is_relation_name;
