//! Coded modulation for multidimensional Voronoi constellations.
//!
//! The crate builds up from exact lattice quantizers to full Monte-Carlo
//! coded-modulation simulation:
//!
//! - [`lattices`]: generator matrices, closest-point quantizers, lattice
//!   partitions, coset tables and partition chains;
//! - [`vc`]: Voronoi constellations over the partition Zⁿ/Λₛ with integer
//!   encoding and decoding;
//! - [`labeling`]: Gray, set-partitioning and hybrid bit mappings;
//! - [`llr`]: max-log LLR engines (exact, Euclidean-ball, per-level coset,
//!   scaled-ball);
//! - [`fec`]: binary LDPC codes (normalized min-sum) and the interleaver;
//! - [`cm`]: BICM and MLCM transmit/receive pipelines, per-level mutual
//!   information and capacity-rule rate selection;
//! - [`sim`]: AWGN channel, BER sweeps, experiment configs and records.

pub mod cvp;
pub mod matrix;

pub mod lattices;

pub mod vc;

pub mod labeling;

pub mod llr;

pub mod fec;

pub mod cm;

pub mod sim;
