#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace disclab::sindy {

/// Candidate-term library recipe: a constant, all monomials in the state up
/// to poly_degree (graded lexicographic order), optionally sin/cos of each
/// state component.
struct LibrarySpec {
  int poly_degree = 3;
  bool include_trig = false;
  bool include_constant = true;
};

struct Library {
  Eigen::MatrixXd theta;                // m x p candidate-term evaluations
  std::vector<std::string> term_names;  // unique, length p
};

/// Result of sequential thresholded least squares: after convergence every
/// retained entry satisfies |xi| >= threshold_lambda (columns that hit the
/// iteration cap may retain smaller entries).
struct SparseCoefficients {
  Eigen::MatrixXd xi;  // p x n_targets
  std::vector<std::string> term_names;
  double threshold_lambda = 0.0;
  bool rank_deficient = false;  // a restricted regression was rank-deficient
  int iterations = 0;           // max STLS passes over any target column
};

/// Evaluates the candidate library on each row of `states` (m x n).
/// Column order: [1, x1..xn, degree-2 monomials, ..., sin(x1..xn), cos(x1..xn)].
/// Throws EmptyLibrary when the spec yields no columns.
Library build_library(const Eigen::MatrixXd& states, const LibrarySpec& spec,
                      const std::vector<std::string>& state_names = {});

/// Single-state library row (shares the ordering of build_library).
Eigen::RowVectorXd library_row(const Eigen::RowVectorXd& state,
                               const LibrarySpec& spec);

/// Number of library columns for an n-dimensional state.
Eigen::Index library_size(Eigen::Index n, const LibrarySpec& spec);

/// Sequential thresholded least squares, per target column: ordinary least
/// squares, zero every coefficient with |xi| < lambda, re-solve on the
/// surviving terms, repeat until the support is stable or max_iter passes.
/// Rank-deficient restricted regressions are solved minimum-norm and flagged.
SparseCoefficients stls_fit(const Eigen::MatrixXd& theta,
                            const Eigen::MatrixXd& targets, double lambda,
                            int max_iter = 10);

/// Data-scaled default threshold: a fixed fraction of the largest ordinary
/// least-squares coefficient (floored away from zero).
double default_threshold(const Eigen::MatrixXd& theta,
                         const Eigen::MatrixXd& targets);

/// Plain least squares with the library's rank-deficiency handling
/// (column-pivoted QR, minimum-norm fallback).
Eigen::MatrixXd solve_ols(const Eigen::MatrixXd& theta,
                          const Eigen::MatrixXd& targets,
                          bool* rank_deficient = nullptr);

/// Theta(state) * Xi. Usable as an ODE right-hand-side term.
/// Throws DimensionMismatch when the state size does not match the library.
Eigen::VectorXd sindy_predict(const SparseCoefficients& coeffs,
                              const LibrarySpec& spec,
                              const Eigen::VectorXd& state);

/// Row-wise prediction for a batch of states (m x n_in) -> (m x n_targets).
Eigen::MatrixXd sindy_predict_batch(const SparseCoefficients& coeffs,
                                    const LibrarySpec& spec,
                                    const Eigen::MatrixXd& states);

}  // namespace disclab::sindy
