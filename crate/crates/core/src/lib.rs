//! Compression-integrated collective communication toolkit.
//!
//! The crate is organized around four subsystems:
//!
//! * [`codec`] — an absolute-error-bounded block compressor for `f32`
//!   arrays, in monolithic and pipelined (chunked, progress-hooked) forms.
//! * [`transport`] — point-to-point nonblocking messaging between N ranks
//!   with a progress-poll contract, either under a deterministic
//!   virtual-time model or on real threads.
//! * [`collectives`] — baseline, compress-per-hop, and compress-once /
//!   overlapped implementations of allgather, bcast, scatter,
//!   reduce-scatter, and allreduce over the transport.
//! * [`analysis`] — closed-form error-propagation results with Monte Carlo
//!   verification, plus PSNR/NRMSE quality metrics and error-histogram fits.

pub mod analysis;
pub mod codec;
pub mod collectives;
pub mod error;
pub mod field;
pub mod synth;
pub mod transport;

pub use error::{Error, Result};
pub use field::FloatField;
