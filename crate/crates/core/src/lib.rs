//! Polynomial approximation theory for degree notions defined by convex bodies.

pub mod approx;
pub mod convex_body;
pub mod error;
pub mod extremal;
pub mod fekete;
mod hull;
mod lp;
pub mod optim;
pub mod rate;
pub mod reproduce;

pub use convex_body::{dim_match_scale, ConvexBody, IndexSet, MultiIndex, Shape};
pub use error::{Error, Result};
pub use extremal::{ComplexVector, ProductExtremal, ProductSet, UnivariateSet};
