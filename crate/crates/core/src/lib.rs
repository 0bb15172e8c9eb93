//! Direct and inverse scattering for the massive Thirring model
//!
//! ```text
//! i(u_t + u_x) + v + |v|²u = 0
//! i(v_t − v_x) + u + |u|²v = 0
//! ```
//!
//! Pipeline: [`direct`] integrates the Jost systems in the small-λ and
//! large-λ charts and extracts `a`, `b±`; [`spectra`] turns them into
//! reflection coefficients and evolves them in time; [`rhsolve`] solves the
//! two Riemann–Hilbert problems on the real line; [`recon`] reads `u`, `v`
//! back out of the solutions. [`mtmpde`] is an independent split-step
//! evolver used as an oracle.

pub mod direct;
pub mod error;
pub mod io;
pub mod lattice;
pub mod mat2;
pub mod mtmpde;
pub mod recon;
pub mod rhsolve;
pub mod spectra;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use lattice::{make_xgrid, weighted_norms, NormReport, Potential, Spacing, SpectralChart, SpectralGrid, XGrid};
pub use mat2::{Mat2, Vec2};
