//! Finite element solver for the frequency-domain Maxwell equations coupled
//! to the nonlocal hydrodynamic Drude model.
//!
//! The electric field lives in a Nedelec (H(curl)) space on the whole mesh,
//! the hydrodynamic current in a Raviart-Thomas (H(div)) space on the metal
//! submesh. Both use lowest or second order elements on affine tetrahedra.

pub mod assembly;
pub mod driver;
pub mod error;
pub mod mesh;
pub mod model;
pub mod postprocess;
pub mod fespaces;
pub mod linsolve;
pub mod quadrature;

pub use error::{Error, Result};
