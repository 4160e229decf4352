//! Orlicz spaces over finite groupoids: convolution, invariant subbundles and
//! convolutors, checked numerically.

pub mod config;
pub mod convalg;
pub mod convolutor;
pub mod fieldlab;
pub mod groupoid;
pub mod ideals;
pub mod orlicz;
pub mod suites;
pub mod young;
