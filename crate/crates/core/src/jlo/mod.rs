//! Simplex-integral heat brackets and the cochains built from them: the
//! b-JLO Chern character in reduced D-form, its t-transgression component,
//! the higher eta cochain of the boundary operator, superconnection Chern
//! characters on the (u, s) rectangle, and the alpha pairing curve.

pub mod alpha;
pub mod bracket;
pub mod cochain;
pub mod eta;
pub mod superconn;

pub use alpha::{alpha_curve, AlphaCurve, AlphaPoint};
pub use bracket::{bracket, bracket_monte_carlo, bracket_vanloan, BracketInput};
pub use cochain::{JloEvaluator, TraceSide};
pub use eta::{eta_cochain_value, eta_pairing, EtaPairingReport};
pub use superconn::{stokes_residual, superconnection_chern, StokesReport, SuperconnectionModel};
