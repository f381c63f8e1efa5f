pub mod codespace;
pub mod config;
pub mod criteria;
pub mod io;
pub mod lindblad;
pub mod nv;
pub mod sdp;
pub mod simulate;
pub mod error;
pub mod operator;
pub mod random;
pub mod span;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use operator::{hs_inner, spin_matrices, tensor, CMatrix, CVector, HermitianOperator, StateVector, C64};
pub use span::{orthonormal_span, positive_negative_split, project_decompose, Field, OperatorSpan};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/criteria.md")]
    mod criteria {}
    #[doc = include_str!("../../../book/src/sdp.md")]
    mod sdp {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/nv.md")]
    mod nv {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
