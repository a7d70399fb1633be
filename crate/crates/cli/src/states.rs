//! State descriptions accepted in configs and their construction.

use std::fs::File;
use std::io::Read;
use std::path::PathBuf;

use magiclab::gates::rotation;
use magiclab::models::{
    clifford_t_state, lanczos_ground_state, CliffordTSpec, HamiltonianSpec, Model,
};
use magiclab::mps::dmrg::{dmrg_ground_state, DmrgConfig};
use magiclab::mps::MatrixProductState;
use magiclab::rng::{derive_seed, stream_rng};
use magiclab::{DenseState, PauliString};
use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Stream reserved for drawing random states from the master seed.
const STATE_STREAM: u64 = 0x57a7e;

/// `V = exp(−iθσ/2)` applied on every site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub axis: String,
    pub theta: f64,
}

impl RotationSpec {
    pub fn matrix(&self) -> CliResult<Matrix2<C64>> {
        let axis: PauliString = self.axis.to_uppercase().parse().map_err(|_| {
            CliError::Config(format!(
                "rotation axis {:?} is not one of X, Y, Z",
                self.axis
            ))
        })?;
        if axis.n_qubits() != 1 || axis.is_identity() {
            return Err(CliError::Config(format!(
                "rotation axis {:?} is not one of X, Y, Z",
                self.axis
            )));
        }
        Ok(rotation(axis.op(0), self.theta))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundMethod {
    /// Lanczos on the dense Hamiltonian (up to 20 sites).
    Lanczos,
    #[default]
    Dmrg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Ghz {
        n: usize,
    },
    /// `(TH|0⟩)^{⊗n}`.
    TState {
        n: usize,
    },
    /// Haar-random, drawn from the run seed.
    Haar {
        n: usize,
    },
    /// Random real amplitudes, drawn from the run seed.
    RandomReal {
        n: usize,
    },
    CliffordT {
        n: usize,
        n_t: usize,
    },
    RandomMps {
        n: usize,
        chi: usize,
    },
    Ground {
        #[serde(flatten)]
        model: Model,
        n: usize,
        #[serde(default)]
        rotation: Option<RotationSpec>,
        #[serde(default)]
        method: GroundMethod,
        #[serde(default)]
        dmrg: DmrgConfig,
    },
    /// Dense (`MGL1`) or MPS (`MGM1`) dump.
    File {
        path: PathBuf,
    },
}

/// A state in whichever representation it was produced in.
#[derive(Clone, Debug)]
pub enum BuiltState {
    Dense(DenseState),
    Mps(MatrixProductState),
}

/// Largest dense state converted to an MPS without truncation.
const MAX_DENSE_TO_MPS: usize = 20;

impl BuiltState {
    pub fn n_qubits(&self) -> usize {
        match self {
            BuiltState::Dense(s) => s.n_qubits(),
            BuiltState::Mps(m) => m.n_qubits(),
        }
    }

    pub fn dense(&self) -> CliResult<DenseState> {
        match self {
            BuiltState::Dense(s) => Ok(s.clone()),
            BuiltState::Mps(m) => Ok(m.to_dense()?),
        }
    }

    pub fn mps(&self) -> CliResult<MatrixProductState> {
        match self {
            BuiltState::Mps(m) => Ok(m.clone()),
            BuiltState::Dense(s) => {
                if s.n_qubits() > MAX_DENSE_TO_MPS {
                    return Err(CliError::Config(format!(
                        "dense state of {} qubits is too large to convert to an MPS",
                        s.n_qubits()
                    )));
                }
                Ok(MatrixProductState::from_dense(s, usize::MAX, 0.0)?.0)
            }
        }
    }
}

pub fn hamiltonian_spec(
    model: Model,
    n: usize,
    rotation: Option<&RotationSpec>,
) -> CliResult<HamiltonianSpec> {
    let spec = HamiltonianSpec::new(model, n);
    Ok(match rotation {
        Some(r) => spec.with_rotation(r.matrix()?),
        None => spec,
    })
}

impl StateSpec {
    pub fn build(&self, seed: u64) -> CliResult<BuiltState> {
        let mut rng = stream_rng(derive_seed(seed, STATE_STREAM), 0);
        Ok(match self {
            StateSpec::Ghz { n } => BuiltState::Dense(DenseState::ghz(*n)?),
            StateSpec::TState { n } => BuiltState::Mps(MatrixProductState::t_state(*n)?),
            StateSpec::Haar { n } => BuiltState::Dense(DenseState::haar_random(*n, &mut rng)?),
            StateSpec::RandomReal { n } => {
                BuiltState::Dense(DenseState::random_real(*n, &mut rng)?)
            }
            StateSpec::CliffordT { n, n_t } => {
                BuiltState::Dense(clifford_t_state(&CliffordTSpec {
                    n_qubits: *n,
                    n_t: *n_t,
                    seed,
                })?)
            }
            StateSpec::RandomMps { n, chi } => {
                BuiltState::Mps(MatrixProductState::random(*n, *chi, &mut rng)?)
            }
            StateSpec::Ground {
                model,
                n,
                rotation,
                method,
                dmrg,
            } => {
                let spec = hamiltonian_spec(*model, *n, rotation.as_ref())?;
                match method {
                    GroundMethod::Lanczos => BuiltState::Dense(lanczos_ground_state(&spec)?.state),
                    GroundMethod::Dmrg => BuiltState::Mps(dmrg_ground_state(&spec, dmrg)?.state),
                }
            }
            StateSpec::File { path } => {
                let mut magic = [0u8; 4];
                File::open(path)?.read_exact(&mut magic)?;
                match &magic {
                    b"MGL1" => BuiltState::Dense(DenseState::load(path)?),
                    b"MGM1" => BuiltState::Mps(MatrixProductState::load(path)?),
                    _ => {
                        return Err(CliError::Config(format!(
                            "{} is neither a dense nor an MPS dump",
                            path.display()
                        )))
                    }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ground_spec_with_flattened_model() {
        let s: StateSpec = serde_json::from_str(
            r#"{"kind":"ground","model":"tfim","h":1.0,"n":6,"method":"lanczos"}"#,
        )
        .unwrap();
        match &s {
            StateSpec::Ground {
                model: Model::Tfim { h },
                n: 6,
                method: GroundMethod::Lanczos,
                ..
            } => assert_eq!(*h, 1.0),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.build(0).unwrap().n_qubits(), 6);
    }

    #[test]
    fn rejects_bad_axis() {
        assert!(RotationSpec {
            axis: "Q".into(),
            theta: 0.1
        }
        .matrix()
        .is_err());
        assert!(RotationSpec {
            axis: "I".into(),
            theta: 0.1
        }
        .matrix()
        .is_err());
        assert!(RotationSpec {
            axis: "y".into(),
            theta: 0.1
        }
        .matrix()
        .is_ok());
    }
}
