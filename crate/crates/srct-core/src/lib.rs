//! Tools for secure exact-repair regenerating codes.
//!
//! The crate has five parts:
//!
//! * [`exactfield`] — prime-field elements and matrices with exact rank /
//!   inversion, plus arbitrary-precision rationals. Everything downstream is
//!   exact; there is no floating point anywhere in the crate.
//! * [`regioncalc`] — closed-form storage–bandwidth computations: the
//!   secrecy coefficient Γ, the corner point (α̂, β̂), the wiretap thresholds
//!   ℓ̂ and ℓ*, membership tests and outer bounds, and consistency sweeps.
//! * [`layeredcode`] — a layered exact-repair code over the duplicated
//!   3-combination block design, a coset-coding precoder that makes it
//!   secure against an ℓ-node repair eavesdropper, and concrete
//!   repair/reconstruction simulation.
//! * [`entoracle`] — a rank-based entropy oracle for linear codes and
//!   mechanical verification of reconstruction/regeneration/security,
//!   entropy symmetry, and a catalog of converse-proof inequalities.
//! * [`coeffverify`] — exact-rational certification of every coefficient
//!   family used in the converse proofs (μ, b, c, λ, T₁, T₂, v₁..v₃, z, c,
//!   μ̄, ν̄, δ̄), with closed-form cross-checks and parameter sweeps.

pub mod coeffverify;
pub mod entoracle;
pub mod exactfield;
pub mod layeredcode;
pub mod regioncalc;

pub use exactfield::{FieldElem, FieldError, FieldMatrix, Rational};
pub use layeredcode::{BlockDesign, CodeError, CodeState, LinearStorageCode};
pub use regioncalc::{RatePoint, RegionError, RegionVerdict, SystemParams};
