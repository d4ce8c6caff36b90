//! alpha-modulation frequency decompositions, `M^{s,alpha}_{p,q}`
//! quasi-norms and discrete pseudodifferential operators on periodic grids.

pub mod cover;
pub mod error;
pub mod families;
pub mod fit;
pub mod grid;
pub mod harness;
pub mod jet;
pub mod profile;
pub mod psido;
pub mod spaces;
pub mod symbols;

pub use cover::{AlphaCover, BandKind, Bands, CoverParams, CoverReport, CoverSpec};
pub use error::{Error, Result};
pub use fit::SlopeFit;
pub use harness::{emit_report, Config, ExperimentReport, ReportFormat, SymbolSpec};
pub use grid::{fft, ifft, multiplier_apply, Grid, GridSignal, Spectrum};
pub use profile::{BumpProfile, Transition};
pub use psido::{quantize_apply, quantize_direct, PieceBuilder, SymbolPiece};
pub use families::PlateauFamily;
pub use spaces::{alpha_norm, alpha_norm_equiv, bessel_lift, QuasiNormParams};
pub use symbols::{seminorm, Counterexample, CounterexampleParams, ModulatedFamily, Symbol, SymbolClass, XProfile};

pub use num_complex::Complex64;
