//! Compensating fast detrapping in 3D vertical NAND flash with intentional
//! inter-cell interference.
//!
//! After a word line is programmed, cells that lost charge are located by
//! an extra read at an identify level. The cells directly above them in the
//! next word line are then treated as stuck-at-0 defects: a partitioned BCH
//! code masks those defects through additive encoding, so the upper cells
//! get programmed and their interference lifts the detrapped cells back up.

pub mod bch;
pub mod channel;
pub mod cli;
pub mod galois;
pub mod gf2;
pub mod pbch;
pub mod pipeline;

pub type CellGridF64 = channel::CellGrid<f64>;
pub type CellGridF32 = channel::CellGrid<f32>;
pub type ChannelParamsF64 = channel::ChannelParams<f64>;
pub type ChannelParamsF32 = channel::ChannelParams<f32>;
pub type SimConfigF64 = pipeline::SimConfig<f64>;
pub type SimConfigF32 = pipeline::SimConfig<f32>;
pub type BlockWriteF64 = pipeline::BlockWrite<f64>;
pub type BlockWriteF32 = pipeline::BlockWrite<f32>;
