//! Random instances of the constrained matching model.
//!
//! Man `i` ranks women by increasing `x[i][j]`, woman `j` ranks men by
//! increasing `y[i][j]`, and the pair `(i, j)` may only marry (or block) when
//! it is admissible.

mod dense;
mod format;
mod lazy;

pub use dense::{generate_dense, DenseInstance};
pub use format::{read_instance, write_instance};
pub use lazy::{LazyInstance, LazyStrategy};
