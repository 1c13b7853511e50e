pub mod algebra;
pub mod cli;
pub mod document;
pub mod error;
pub mod oracle;
pub mod rep;
pub mod sweeps;
pub mod tate;
pub mod trss;
