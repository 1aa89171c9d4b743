//! Band structures of III-V bulk semiconductors on a simulated quantum
//! computer.
//!
//! The pipeline: a four-band k·p Hamiltonian is built per wave vector
//! ([`kp`]), expanded over two-qubit Pauli strings with qubit-wise-commuting
//! measurement groups ([`pauli`]), and handed to a subspace-search
//! variational eigensolver ([`ssvqe`]) that drives a layered entangling
//! ansatz on a built-in simulator ([`circuit`]) in exact, shot-sampled, or
//! depolarizing-noise mode. A self-contained Jacobi eigensolver ([`eigen`])
//! supplies the classical ground truth at every step, and [`spectra`] turns
//! optimized circuits into interband transition amplitudes and absorption
//! spectra. [`report`] holds the serialization schemas of the command-line
//! front end.

pub mod circuit;
pub mod eigen;
pub mod kp;
pub mod matrix;
pub mod optimize;
pub mod pauli;
pub mod report;
pub mod spectra;
pub mod ssvqe;

pub use circuit::{AnsatzParams, DensityMatrix, EvalMode, NoiseConfig, StateVector};
pub use eigen::{EigenDecomposition, eigh};
pub use kp::{KPoint, KpOptions, MaterialParams, SignConvention, build_hamiltonian, make_kpath};
pub use matrix::{C64, CMatrix, HermitianMatrix};
pub use optimize::{OptimizerConfig, OptimizerKind};
pub use pauli::{Pauli, PauliHamiltonian, PauliString, QwcGroup, decompose, qwc_partition};
pub use spectra::{AbsorptionSpectrum, Observable};
pub use ssvqe::{BandStructureResult, BandSweepConfig, SsvqeProblem, SsvqeResult, band_sweep, minimize};
