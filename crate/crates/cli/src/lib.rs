//! Command-line front end and model-file support for `dynclass-core`.

pub mod app;
pub mod json;
pub mod modeldsl;
pub mod report;

pub use app::run;
