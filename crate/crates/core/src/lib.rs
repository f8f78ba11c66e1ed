#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod fixed_point;
pub mod linalg;
pub mod mesh;
pub mod numeric;
pub mod solver;
pub mod source;
pub mod young;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/young.md")]
    mod young {}
    #[doc = include_str!("../../../book/src/sources.md")]
    mod sources {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/fixed_point.md")]
    mod fixed_point {}
    #[doc = include_str!("../../../book/src/blowup.md")]
    mod blowup {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
