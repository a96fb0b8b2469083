pub mod error;
pub mod harness;
pub mod io;
pub mod jets;
pub mod lp;
pub mod metric;
pub mod moduli;
pub mod selection;
pub mod tol;
pub mod whitney;
