pub mod cli;
pub mod coefficient;
pub mod dg;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod fespace;
pub mod linalg;
pub mod mesh;
pub mod mixed;
pub mod output;
pub mod selftest;
pub mod system;

mod assembly;

pub use error::{OseenError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/mixed.md")]
    mod mixed {}
    #[doc = include_str!("../../../book/src/dg.md")]
    mod dg {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/transient.md")]
    mod transient {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
