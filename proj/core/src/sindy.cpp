#include "disclab/sindy.hpp"

#include <algorithm>
#include <cmath>

#include "disclab/errors.hpp"

namespace disclab::sindy {
namespace {

// Exponent vectors of total degree d over n variables, graded lexicographic
// within the degree (x1-dominant first: x1^2, x1 x2, x2^2, ...).
void enumerate_monomials(Eigen::Index n, int degree,
                         std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  const auto var = static_cast<Eigen::Index>(current.size());
  if (var == n - 1) {
    current.push_back(degree);
    out.push_back(current);
    current.pop_back();
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current.push_back(e);
    enumerate_monomials(n, degree - e, current, out);
    current.pop_back();
  }
}

std::vector<std::vector<int>> monomial_exponents(Eigen::Index n, int max_degree,
                                                 bool include_constant) {
  std::vector<std::vector<int>> exps;
  for (int d = include_constant ? 0 : 1; d <= max_degree; ++d) {
    std::vector<int> current;
    enumerate_monomials(n, d, current, exps);
  }
  return exps;
}

std::string monomial_name(const std::vector<int>& exp,
                          const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    if (exp[i] == 0) continue;
    if (!out.empty()) out += "*";
    out += names[i];
    if (exp[i] > 1) out += "^" + std::to_string(exp[i]);
  }
  return out.empty() ? "1" : out;
}

std::vector<std::string> resolve_names(Eigen::Index n,
                                       const std::vector<std::string>& given) {
  if (static_cast<Eigen::Index>(given.size()) == n) return given;
  std::vector<std::string> names(n);
  for (Eigen::Index i = 0; i < n; ++i) names[i] = "x" + std::to_string(i + 1);
  return names;
}

// Least squares with a rank check: column-pivoted QR when full rank,
// minimum-norm SVD solution otherwise (the flag records the fallback).
Eigen::MatrixXd solve_least_squares(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b,
                                    bool* rank_deficient) {
  const auto qr = a.colPivHouseholderQr();
  if (qr.rank() < a.cols()) {
    if (rank_deficient) *rank_deficient = true;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(b);
  }
  return qr.solve(b);
}

}  // namespace

Eigen::Index library_size(Eigen::Index n, const LibrarySpec& spec) {
  Eigen::Index p = 0;
  // C(n + d, d) monomials up to degree d including the constant.
  double count = 1.0;
  for (int d = 1; d <= spec.poly_degree; ++d) {
    count = count * double(n + d) / double(d);
  }
  p = static_cast<Eigen::Index>(std::llround(count));
  if (!spec.include_constant) p -= 1;
  if (spec.include_trig) p += 2 * n;
  return p;
}

Library build_library(const Eigen::MatrixXd& states, const LibrarySpec& spec,
                      const std::vector<std::string>& state_names) {
  const Eigen::Index m = states.rows();
  const Eigen::Index n = states.cols();
  if (m < 1 || n < 1) throw EmptyLibrary("library needs at least one sample and state");

  const auto names = resolve_names(n, state_names);
  const auto exps = monomial_exponents(n, spec.poly_degree, spec.include_constant);
  const Eigen::Index p_poly = static_cast<Eigen::Index>(exps.size());
  const Eigen::Index p = p_poly + (spec.include_trig ? 2 * n : 0);
  if (p == 0) throw EmptyLibrary("library spec yields zero columns");

  Library lib;
  lib.theta.resize(m, p);
  lib.term_names.reserve(p);

  for (Eigen::Index j = 0; j < p_poly; ++j) {
    Eigen::ArrayXd col = Eigen::ArrayXd::Ones(m);
    for (Eigen::Index v = 0; v < n; ++v) {
      for (int e = 0; e < exps[j][v]; ++e) col *= states.col(v).array();
    }
    lib.theta.col(j) = col;
    lib.term_names.push_back(monomial_name(exps[j], names));
  }
  if (spec.include_trig) {
    for (Eigen::Index v = 0; v < n; ++v) {
      lib.theta.col(p_poly + v) = states.col(v).array().sin();
      lib.term_names.push_back("sin(" + names[v] + ")");
    }
    for (Eigen::Index v = 0; v < n; ++v) {
      lib.theta.col(p_poly + n + v) = states.col(v).array().cos();
      lib.term_names.push_back("cos(" + names[v] + ")");
    }
  }
  return lib;
}

Eigen::RowVectorXd library_row(const Eigen::RowVectorXd& state,
                               const LibrarySpec& spec) {
  // Name-free fast path; shares monomial ordering with build_library.
  const Eigen::Index n = state.size();
  const auto exps = monomial_exponents(n, spec.poly_degree, spec.include_constant);
  const Eigen::Index p_poly = static_cast<Eigen::Index>(exps.size());
  Eigen::RowVectorXd row(p_poly + (spec.include_trig ? 2 * n : 0));
  for (Eigen::Index j = 0; j < p_poly; ++j) {
    double v = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      for (int e = 0; e < exps[j][k]; ++e) v *= state[k];
    }
    row[j] = v;
  }
  if (spec.include_trig) {
    for (Eigen::Index k = 0; k < n; ++k) {
      row[p_poly + k] = std::sin(state[k]);
      row[p_poly + n + k] = std::cos(state[k]);
    }
  }
  return row;
}

Eigen::MatrixXd solve_ols(const Eigen::MatrixXd& theta,
                          const Eigen::MatrixXd& targets,
                          bool* rank_deficient) {
  return solve_least_squares(theta, targets, rank_deficient);
}

double default_threshold(const Eigen::MatrixXd& theta,
                         const Eigen::MatrixXd& targets) {
  bool flag = false;
  const Eigen::MatrixXd ols = solve_least_squares(theta, targets, &flag);
  const double peak = ols.cwiseAbs().maxCoeff();
  return std::max(0.1 * peak, 1e-12);
}

SparseCoefficients stls_fit(const Eigen::MatrixXd& theta,
                            const Eigen::MatrixXd& targets, double lambda,
                            int max_iter) {
  if (theta.rows() != targets.rows()) {
    throw DimensionMismatch("stls_fit: theta/targets row mismatch");
  }
  if (!(lambda > 0)) throw std::invalid_argument("stls_fit: lambda must be > 0");
  const Eigen::Index p = theta.cols();
  const Eigen::Index n_targets = targets.cols();

  SparseCoefficients result;
  result.xi = Eigen::MatrixXd::Zero(p, n_targets);
  result.threshold_lambda = lambda;

  for (Eigen::Index j = 0; j < n_targets; ++j) {
    Eigen::VectorXd xi = solve_least_squares(theta, targets.col(j),
                                             &result.rank_deficient);
    std::vector<Eigen::Index> support;
    for (int pass = 0; pass < max_iter; ++pass) {
      result.iterations = std::max(result.iterations, pass + 1);
      std::vector<Eigen::Index> next;
      next.reserve(p);
      for (Eigen::Index i = 0; i < p; ++i) {
        if (std::abs(xi[i]) >= lambda) next.push_back(i);
      }
      const bool stable = (pass > 0 && next == support);
      support = std::move(next);
      if (support.empty()) {
        xi.setZero();
        break;
      }
      if (stable) break;

      Eigen::MatrixXd restricted(theta.rows(),
                                 static_cast<Eigen::Index>(support.size()));
      for (std::size_t k = 0; k < support.size(); ++k) {
        restricted.col(static_cast<Eigen::Index>(k)) = theta.col(support[k]);
      }
      const Eigen::VectorXd beta = solve_least_squares(
          restricted, targets.col(j), &result.rank_deficient);
      xi.setZero();
      for (std::size_t k = 0; k < support.size(); ++k) {
        xi[support[k]] = beta[static_cast<Eigen::Index>(k)];
      }
    }
    result.xi.col(j) = xi;
  }
  return result;
}

Eigen::VectorXd sindy_predict(const SparseCoefficients& coeffs,
                              const LibrarySpec& spec,
                              const Eigen::VectorXd& state) {
  if (library_size(state.size(), spec) != coeffs.xi.rows()) {
    throw DimensionMismatch("sindy_predict: state size does not match library");
  }
  const Eigen::RowVectorXd row = library_row(state.transpose(), spec);
  return (row * coeffs.xi).transpose();
}

Eigen::MatrixXd sindy_predict_batch(const SparseCoefficients& coeffs,
                                    const LibrarySpec& spec,
                                    const Eigen::MatrixXd& states) {
  if (library_size(states.cols(), spec) != coeffs.xi.rows()) {
    throw DimensionMismatch("sindy_predict_batch: state size does not match library");
  }
  const Library lib = build_library(states, spec);
  return lib.theta * coeffs.xi;
}

}  // namespace disclab::sindy
