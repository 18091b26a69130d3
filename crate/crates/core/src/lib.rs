//! Exact diagonalization of bosons on a four-site plaquette, with the
//! resonant-band effective dynamics and the NOON-state protocols built on it.
//!
//! ```
//! use plaquette::basis::{Occupation, StateVector};
//! use plaquette::protocols::{HamiltonianMode, Interferometer, ProtocolConfig};
//!
//! let cfg = ProtocolConfig { m: 5, p: 2, mode: HamiltonianMode::Effective, ..Default::default() };
//! let engine = Interferometer::new(&cfg)?;
//! let psi = StateVector::basis_state(engine.basis(), Occupation::new(5, 2, 0, 0))?;
//! let series = engine.imbalance_series(&psi, &[0.0, engine.band().t_m()])?;
//! assert!((series.values()[0] - 1.0).abs() < 1e-12);
//! assert!(series.values()[1].abs() < 1e-9);
//! # Ok::<(), plaquette::Error>(())
//! ```

pub mod bands;
pub mod basis;
pub mod dynamics;
pub mod error;
pub mod info;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod protocols;

// Links the system OpenBLAS that backs the LAPACK eigensolvers.
extern crate openblas_src;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests, one module per chapter.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/fock-space.md")]
    mod fock_space {}
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    mod hamiltonian {}
    #[doc = include_str!("../../../book/src/bands.md")]
    mod bands {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/protocols.md")]
    mod protocols {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/plotting.md")]
    mod plotting {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
