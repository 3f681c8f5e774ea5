//! Gene genealogies under sweepstakes reproduction.
//!
//! The crate covers three routes to the same quantities, the relative
//! branch lengths `R_i = L_i / L` of a sample genealogy:
//!
//! * the pre-limiting haploid Cannings ancestral process in a random
//!   environment, either averaged over reproduction ([`cannings`]) or
//!   conditioned on a realised population ancestry ([`quenched`]);
//! * continuous-time Λ- and Ξ-coalescents built from closed-form rate
//!   tables ([`rates`], [`coalescent`]), optionally under a deterministic
//!   time change;
//! * exact expected branch lengths for Λ-coalescents ([`exact`]).
//!
//! [`experiment`] ties these together into seeded, replicated experiments
//! with CSV output; the `sweepstakes` binary is a thin CLI over it.

pub mod cannings;
pub mod coalescent;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod offspring;
pub mod partitions;
pub mod quenched;
pub mod rates;
pub mod special;
pub mod spectrum;
pub mod streams;

pub use error::{Error, Result};
pub use spectrum::BranchLengthSpectrum;
