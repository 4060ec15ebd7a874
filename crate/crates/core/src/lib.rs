//! Coherence between eigenspaces of an observable, and measures of how
//! "macroscopic" a quantum state is.
//!
//! - [`state`]: density matrices, pure states, observables, validation.
//! - [`modes`]: δ-mode decomposition and coherence profiles.
//! - [`measures`]: QFI, skew information, `I_L`, variance and relative-entropy measures.
//! - [`macroscopicity`]: effective sizes `N_F` and `N_LJ`.
//! - [`bosonic`]: truncated Fock spaces and standard states.
//! - [`channels`], [`dynamics`]: covariant channels and dephasing generators.
//! - [`experiments`]: the `ρ_N` scaling table and copy equivalence.
//! - [`io`]: the JSON file format.

pub mod bosonic;
pub mod channels;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod macroscopicity;
pub mod measures;
pub mod modes;
pub mod state;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/effective_size.md")]
    mod effective_size {}
    #[doc = include_str!("../../../book/src/bosonic.md")]
    mod bosonic {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
