//! Mixture linear optimization oracles and the matrix-game solver behind the
//! multiclass one.

pub mod binary;
pub mod game;
pub mod multiclass;

pub use binary::{binary_cmloo, binary_mloo_from_h, binary_payoff, BinaryOracleInput};
pub use game::{build_game_matrix, solve_matrix_game, GameMatrix, GameSolution};
pub use multiclass::{mloo_payoff, multiclass_mloo, Adjoint, MlooOutput};
