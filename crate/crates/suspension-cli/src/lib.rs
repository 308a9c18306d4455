//! File formats and export helpers behind the `suspension` command-line
//! tool: JSON parameter documents, build requests, CSV traces and OBJ mesh
//! frames.

pub mod document;
pub mod mesh;
pub mod request;
pub mod trace_csv;
