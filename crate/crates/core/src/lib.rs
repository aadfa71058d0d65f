pub mod blockdim;
pub mod charfn;
pub mod cuspchar;
pub mod cyclo;
pub mod error;
pub mod gf;
pub mod jacquet;
pub mod levi;
pub mod matfq;
pub mod strata;
pub mod verify;

pub use blockdim::BlockElement;
pub use charfn::{AdditiveChar, MultChar};
pub use cuspchar::CuspidalData;
pub use cyclo::Cyclo;
pub use error::{Error, Result};
pub use gf::{Elem, FieldElement, FieldTower, LevelField};
pub use jacquet::{JacquetSpec, LeviElement};
pub use levi::{Side, SubgroupSpec, TypeLabel};
pub use matfq::{MatF, PolyF};
pub use verify::{Caps, Selection, Setup, Verifier, VerifyReport};

/// Exact cyclotomic integers with arbitrary-precision coefficients.
pub type CycloInt = Cyclo<num_bigint::BigInt>;
/// Cyclotomic integers with overflow-checked 64-bit coefficients.
pub type CycloI64 = Cyclo<i64>;
