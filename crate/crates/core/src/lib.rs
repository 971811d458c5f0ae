//! Lossless source coding by source polarization.
//!
//! The crate is organized bottom-up:
//!
//! * [`gf`]: additive arithmetic over the source alphabet.
//! * [`transform`]: the polar transform `G_N = F^{⊗n} B_N` and its inverse.
//! * [`source`]: joint sources `(X, Y)` and their information measures.
//! * [`spectrum`]: polarization spectra and high-entropy sets.
//! * [`scdec`]: successive likelihood-ratio decoding.
//! * [`codec`]: compression with side information and Slepian-Wolf coding.
//! * [`duality`]: channel coding through the source/channel duality.

pub mod codec;
pub mod duality;
pub mod error;
pub mod gf;
pub mod scdec;
pub mod source;
pub mod spectrum;
pub mod transform;

pub use error::{PolarError, Result};
pub use gf::FieldSpec;
pub use source::JointSource;
pub use spectrum::{HighEntropySet, PolarSpectrum, SpectrumMethod};
pub use transform::SymbolBlock;
