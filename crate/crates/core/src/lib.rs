pub mod ast;
pub mod bench;
pub mod decompose;
pub mod driver;
pub mod eval;
pub mod fragment;
pub mod frontend;
pub mod lia;
pub mod lower;
pub mod membership;
pub mod qbf;
pub mod qf;
pub mod reduce;
pub mod smtlib;
pub mod types;
