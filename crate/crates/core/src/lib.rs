//! # qcohere
//!
//! Basis-independent quantum coherence measured with the square root of the
//! quantum Jensen-Shannon divergence (√QJSD), and the distribution of that
//! coherence across the subsystems of a multipartite state.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`qstate`] | density matrices, tensor algebra, spectra, entropy, named states, random ensembles |
//! | [`divergence`] | classical divergences, quantum relative entropy, QJSD and the √QJSD distance |
//! | [`coherence`] | total coherence against `I/d`, basis-dependent coherence, closed forms |
//! | [`decompose`] | collective/localized and intrinsic/local splits, inequality checks |
//! | [`optim`] | multi-start derivative-free minimizer shared by the optimizing measures |
//! | [`harness`] | sweeps, Monte Carlo verification campaigns, CSV/JSON reports |
//!
//! All logarithms are base 2; entropies and divergences are in bits.
//!
//! ```rust
//! use qcohere::qstate::{make_state, StateRecipe};
//! use qcohere::coherence::{pure_coherence_closed_form, total_coherence};
//!
//! let ghz = make_state(&StateRecipe::ghz(3, std::f64::consts::FRAC_PI_4)).unwrap();
//! let c = total_coherence(&ghz).unwrap();
//! assert!((c - pure_coherence_closed_form(8).unwrap()).abs() < 1e-9);
//! ```
//!
//! With the default `parallel` feature, Monte Carlo loops, sweep grids and
//! optimizer starts are spread over a rayon pool. Results do not depend on
//! the number of workers: every task derives its RNG from `(seed, index)` and
//! reductions are ordered by index.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod decompose;
pub mod divergence;
pub mod error;
pub mod harness;
pub mod optim;
pub mod par;
pub mod qstate;

pub use error::{Error, Result};
pub use nalgebra::Complex;

/// Double-precision complex scalar.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
