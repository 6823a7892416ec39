#pragma once

// Extended dynamic mode decomposition: K = G^+ A from snapshot pairs
// projected on a dictionary, its spectral decomposition, Koopman modes and
// forward/backward flow prediction.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "makbasin/dictionary.hpp"
#include "makbasin/error.hpp"
#include "makbasin/snapshots.hpp"

namespace makbasin {

using Complex = std::complex<double>;

enum class WeightBranch { kSelector, kLeastSquares };

inline std::string to_string(WeightBranch b) { return b == WeightBranch::kSelector ? "selector" : "least-squares"; }

struct WeightMatrix {
  Eigen::MatrixXd weights;  // N_k x n
  WeightBranch branch = WeightBranch::kSelector;
  /// Mean over training states of ||(Psi(x) B)^T - x||^2.
  double residual = 0.0;
};

enum class OperatorSolver {
  kGramPseudoinverse,  // K = G^+ A
  kDataLeastSquares,   // K = Psi(X)^+ Psi(Y), the same operator without squaring cond(Psi)
};

inline std::string to_string(OperatorSolver s) {
  return s == OperatorSolver::kGramPseudoinverse ? "gram-pseudoinverse" : "data-least-squares";
}

inline OperatorSolver parse_operator_solver(const std::string& s) {
  if (s == "gram-pseudoinverse") return OperatorSolver::kGramPseudoinverse;
  if (s == "data-least-squares") return OperatorSolver::kDataLeastSquares;
  throw Error(ErrorCode::kConfig, "unknown operator solver '" + s + "'");
}

struct FitDiagnostics {
  Eigen::Index pairs = 0;
  Eigen::Index gram_rank = 0;
  bool rank_deficient = false;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double rank_cutoff = 0.0;
  /// ||Psi(X) K - Psi(Y)||_F / sqrt(P)
  double operator_residual = 0.0;
  /// max_i ||K xi_i - mu_i xi_i|| / ||K||
  double spectral_residual = 0.0;
  /// max |(W* Xi - I)_ij|
  double duality_error = 0.0;
  WeightBranch weight_branch = WeightBranch::kSelector;
  double reconstruction_residual = 0.0;
  OperatorSolver solver = OperatorSolver::kGramPseudoinverse;
};

struct KoopmanModel {
  explicit KoopmanModel(Dictionary dict) : dictionary(std::move(dict)) {}

  Dictionary dictionary;
  double dt = 0.0;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd cross;
  Eigen::MatrixXd koopman;
  Eigen::VectorXcd eigenvalues;         // descending |mu|, then -Re, then Im
  Eigen::MatrixXcd right_eigenvectors;  // Xi, columns normalized on training data
  Eigen::MatrixXcd left_adjoint;        // W* = Xi^{-1}
  Eigen::VectorXcd normalization_scale;
  Eigen::VectorXd variation;            // max_p |phi(x_p) - mean phi| after normalization
  Eigen::MatrixXd weights;              // B_k, N_k x n
  Eigen::MatrixXcd modes;               // V_k, n x N_k
  FitDiagnostics diagnostics;

  Eigen::Index size() const { return koopman.rows(); }
  Eigen::Index state_dim() const { return weights.cols(); }

  /// Psi(x) Xi as a row of all eigenfunction values.
  Eigen::RowVectorXcd eigenfunction_values(const State& x) const {
    return dictionary.evaluate(x).cast<Complex>() * right_eigenvectors;
  }
};

/// Scalar eigenfunction phi(x) = Psi(x) . coefficients.
struct Eigenfunction {
  Eigen::Index index = 0;
  Complex eigenvalue{0.0, 0.0};
  Eigen::VectorXcd coefficients;
  Complex scale{1.0, 0.0};  // factor divided out by normalization
  double variation = 0.0;

  Complex operator()(const Dictionary& dict, const State& x) const {
    const Eigen::RowVectorXd psi = dict.evaluate(x);
    Complex sum{0.0, 0.0};
    for (Eigen::Index k = 0; k < psi.size(); ++k) sum += psi(k) * coefficients(k);
    return sum;
  }
};

namespace detail {

inline Complex ipow(Complex base, int exponent) {
  Complex result{1.0, 0.0};
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

/// Lexicographic order on (x column, y column) so that accumulation does not
/// depend on the order in which pairs were supplied.
inline std::vector<Eigen::Index> canonical_pair_order(const SnapshotSet& s) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto n = s.state_dim();
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (s.x(i, a) != s.x(i, b)) return s.x(i, a) < s.x(i, b);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (s.y(i, a) != s.y(i, b)) return s.y(i, a) < s.y(i, b);
    }
    return false;
  });
  return order;
}

/// (1/P) sum_p lhs_p^T rhs_p with Neumaier compensation in the given order.
inline Eigen::MatrixXd compensated_outer_mean(const Eigen::MatrixXd& lhs, const Eigen::MatrixXd& rhs,
                                              const std::vector<Eigen::Index>& order) {
  const auto cols = lhs.cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(cols, cols);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(cols, cols);
  for (auto p : order) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double r = rhs(p, j);
      for (Eigen::Index i = 0; i < cols; ++i) {
        const double term = lhs(p, i) * r;
        const double t = sum(i, j) + term;
        if (std::abs(sum(i, j)) >= std::abs(term)) {
          comp(i, j) += (sum(i, j) - t) + term;
        } else {
          comp(i, j) += (term - t) + sum(i, j);
        }
        sum(i, j) = t;
      }
    }
  }
  return (sum + comp) / static_cast<double>(order.size());
}

}  // namespace detail

/// Exact 0/1 selector when every coordinate is a dictionary member, otherwise
/// the least-squares fit of Psi(X) B to X^T.
inline WeightMatrix compute_weight_matrix(const Dictionary& dict, const SnapshotSet& snapshots) {
  const auto n = snapshots.state_dim();
  const auto nk = dict.size();
  WeightMatrix out;
  const Eigen::MatrixXd psi = dict.evaluate_rows(snapshots.x);
  if (dict.contains_coordinates()) {
    out.branch = WeightBranch::kSelector;
    out.weights = Eigen::MatrixXd::Zero(nk, n);
    for (int a = 0; a < n; ++a) out.weights(*dict.coordinate_index(a), a) = 1.0;
  } else {
    out.branch = WeightBranch::kLeastSquares;
    out.weights = psi.completeOrthogonalDecomposition().solve(Eigen::MatrixXd(snapshots.x.transpose()));
  }
  out.residual = (psi * out.weights - snapshots.x.transpose()).squaredNorm() / static_cast<double>(snapshots.size());
  return out;
}

inline WeightMatrix compute_weight_matrix(const KoopmanModel& model, const SnapshotSet& snapshots) {
  return compute_weight_matrix(model.dictionary, snapshots);
}

/// Rescales an eigenfunction so that max |phi| over `states` is 1 with zero
/// phase at the maximizing state (first maximizer in column order).
inline Eigenfunction normalize_eigenfunction(Eigenfunction ef, const Dictionary& dict, const Eigen::MatrixXd& states) {
  const Eigen::MatrixXcd psi = dict.evaluate_rows(states).cast<Complex>();
  Eigen::VectorXcd phi = psi * ef.coefficients;
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index p = 0; p < phi.size(); ++p) {
    if (std::abs(phi(p)) > best_abs) {
      best_abs = std::abs(phi(p));
      best = p;
    }
  }
  if (best_abs > 0.0) {
    const Complex s = phi(best);
    ef.coefficients /= s;
    ef.scale *= s;
    phi /= s;
  }
  const Complex mean = phi.mean();
  ef.variation = 0.0;
  for (Eigen::Index p = 0; p < phi.size(); ++p) ef.variation = std::max(ef.variation, std::abs(phi(p) - mean));
  return ef;
}

inline Eigenfunction model_eigenfunction(const KoopmanModel& model, Eigen::Index index) {
  if (index < 0 || index >= model.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "eigenfunction index " + std::to_string(index) + " outside [0, " +
                                                 std::to_string(model.size()) + ")");
  }
  Eigenfunction ef;
  ef.index = index;
  ef.eigenvalue = model.eigenvalues(index);
  ef.coefficients = model.right_eigenvectors.col(index);
  ef.scale = model.normalization_scale(index);
  ef.variation = model.variation(index);
  return ef;
}

/// Normalized phi_index(x).
inline Complex eval_eigenfunction(const KoopmanModel& model, Eigen::Index index, const State& x) {
  return model_eigenfunction(model, index)(model.dictionary, x);
}

/// Fills eigenvalues, Xi, W*, modes and diagnostics from model.koopman.
inline void decompose(KoopmanModel& model, const Eigen::MatrixXd& normalization_states) {
  const auto nk = model.koopman.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> solver(model.koopman, true);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateSpectrum, "eigendecomposition of K did not converge");
  }
  const Eigen::VectorXcd mu = solver.eigenvalues();
  const Eigen::MatrixXcd vec = solver.eigenvectors();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(nk));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(mu(a));
    const double mb = std::abs(mu(b));
    if (ma != mb) return ma > mb;
    if (mu(a).real() != mu(b).real()) return mu(a).real() > mu(b).real();
    if (mu(a).imag() != mu(b).imag()) return mu(a).imag() < mu(b).imag();
    return a < b;
  });

  model.eigenvalues.resize(nk);
  model.right_eigenvectors.resize(nk, nk);
  model.normalization_scale.resize(nk);
  model.variation.resize(nk);
  for (Eigen::Index k = 0; k < nk; ++k) {
    Eigenfunction ef;
    ef.eigenvalue = mu(order[static_cast<std::size_t>(k)]);
    ef.coefficients = vec.col(order[static_cast<std::size_t>(k)]);
    ef = normalize_eigenfunction(std::move(ef), model.dictionary, normalization_states);
    model.eigenvalues(k) = ef.eigenvalue;
    model.right_eigenvectors.col(k) = ef.coefficients;
    model.normalization_scale(k) = ef.scale;
    model.variation(k) = ef.variation;
  }

  model.left_adjoint = model.right_eigenvectors.fullPivLu().inverse();
  model.modes = (model.left_adjoint * model.weights.cast<Complex>()).transpose();

  const Eigen::MatrixXcd kc = model.koopman.cast<Complex>();
  const double knorm = std::max(model.koopman.norm(), std::numeric_limits<double>::min());
  double spectral = 0.0;
  for (Eigen::Index k = 0; k < nk; ++k) {
    const Eigen::VectorXcd xi = model.right_eigenvectors.col(k);
    const double r = (kc * xi - model.eigenvalues(k) * xi).norm() / (knorm * xi.norm());
    spectral = std::max(spectral, r);
  }
  model.diagnostics.spectral_residual = spectral;
  model.diagnostics.duality_error =
      (model.left_adjoint * model.right_eigenvectors - Eigen::MatrixXcd::Identity(nk, nk)).cwiseAbs().maxCoeff();
}

struct FitOptions {
  OperatorSolver solver = OperatorSolver::kGramPseudoinverse;
};

namespace detail {

/// V diag(1/sigma) U^T b over singular values above N_k * eps * sigma_max.
inline Eigen::MatrixXd truncated_svd_solve(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs, FitDiagnostics& diag) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sigma = svd.singularValues();
  const auto nk = m.cols();
  diag.sigma_max = sigma(0);
  diag.sigma_min = sigma(sigma.size() - 1);
  diag.rank_cutoff = static_cast<double>(nk) * std::numeric_limits<double>::epsilon() * sigma(0);
  diag.gram_rank = 0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma(k) > diag.rank_cutoff) {
      inv(k) = 1.0 / sigma(k);
      ++diag.gram_rank;
    }
  }
  diag.rank_deficient = diag.gram_rank < nk;
  return svd.matrixV() * (inv.asDiagonal() * (svd.matrixU().transpose() * rhs));
}

}  // namespace detail

/// G = (1/P) sum Psi(x_p)^T Psi(x_p), A = (1/P) sum Psi(x_p)^T Psi(y_p),
/// K = G^+ A with singular values below N_k * eps * sigma_max discarded.
/// With kDataLeastSquares the same K is obtained from the canonically ordered
/// data matrices directly; G and A are still stored.
inline KoopmanModel fit(const SnapshotSet& snapshots, const Dictionary& dict, const FitOptions& opts = {}) {
  if (snapshots.size() < 1) throw Error(ErrorCode::kEmptySnapshotSet, "no snapshot pairs");
  if (snapshots.state_dim() != dict.state_dim() || snapshots.y.rows() != snapshots.x.rows() ||
      snapshots.y.cols() != snapshots.x.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "snapshot and dictionary dimensions disagree");
  }
  KoopmanModel model(dict);
  model.dt = snapshots.dt;
  const auto order = detail::canonical_pair_order(snapshots);
  Eigen::MatrixXd canonical_x(snapshots.state_dim(), snapshots.size());
  Eigen::MatrixXd canonical_y(snapshots.state_dim(), snapshots.size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    canonical_x.col(static_cast<Eigen::Index>(p)) = snapshots.x.col(order[p]);
    canonical_y.col(static_cast<Eigen::Index>(p)) = snapshots.y.col(order[p]);
  }
  const Eigen::MatrixXd psi_x = dict.evaluate_rows(canonical_x);
  const Eigen::MatrixXd psi_y = dict.evaluate_rows(canonical_y);
  std::vector<Eigen::Index> identity(order.size());
  std::iota(identity.begin(), identity.end(), Eigen::Index{0});
  model.gram = detail::compensated_outer_mean(psi_x, psi_x, identity);
  model.cross = detail::compensated_outer_mean(psi_x, psi_y, identity);

  auto& diag = model.diagnostics;
  diag.pairs = snapshots.size();
  diag.solver = opts.solver;
  if (opts.solver == OperatorSolver::kGramPseudoinverse) {
    model.koopman = detail::truncated_svd_solve(model.gram, model.cross, diag);
  } else {
    model.koopman = detail::truncated_svd_solve(psi_x, psi_y, diag);
  }
  diag.operator_residual =
      (psi_x * model.koopman - psi_y).norm() / std::sqrt(static_cast<double>(snapshots.size()));

  const WeightMatrix wm = compute_weight_matrix(dict, snapshots);
  model.weights = wm.weights;
  diag.weight_branch = wm.branch;
  diag.reconstruction_residual = wm.residual;
  decompose(model, canonical_x);
  return model;
}

struct PredictOptions {
  double imaginary_threshold = 1e-6;
  double eigenvalue_floor = 1e-6;
};

struct FlowPrediction {
  State state;
  double imaginary_residual = 0.0;
  std::vector<Eigen::Index> excluded_modes;
};

/// sum_i v_i mu_i^power phi_i(x) without the real projection; negative powers
/// skip modes with |mu| < floor.
inline Eigen::VectorXcd propagate(const KoopmanModel& model, const State& x, int power, double floor,
                                  std::vector<Eigen::Index>* excluded = nullptr) {
  const Eigen::RowVectorXcd phi = model.eigenfunction_values(x);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(model.modes.rows());
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    Complex factor;
    if (power >= 0) {
      factor = detail::ipow(model.eigenvalues(i), power);
    } else {
      if (std::abs(model.eigenvalues(i)) < floor) {
        if (excluded) excluded->push_back(i);
        continue;
      }
      factor = 1.0 / detail::ipow(model.eigenvalues(i), -power);
    }
    out += model.modes.col(i) * (factor * phi(i));
  }
  return out;
}

namespace detail {

inline FlowPrediction finish_prediction(Eigen::VectorXcd z, std::vector<Eigen::Index> excluded,
                                        const PredictOptions& opts) {
  FlowPrediction out;
  out.state = z.real();
  out.imaginary_residual = z.imag().cwiseAbs().maxCoeff();
  out.excluded_modes = std::move(excluded);
  if (out.imaginary_residual > opts.imaginary_threshold) {
    throw Error(ErrorCode::kImaginaryResidualExceeded,
                "imaginary residual " + std::to_string(out.imaginary_residual) + " exceeds " +
                    std::to_string(opts.imaginary_threshold));
  }
  return out;
}

}  // namespace detail

/// x(eta) = Re[(M^eta .* V) Phi(x0)^T], eta steps of dt.
inline FlowPrediction predict_forward(const KoopmanModel& model, const State& x0, int eta,
                                      const PredictOptions& opts = {}) {
  if (eta < 0) throw Error(ErrorCode::kInvalidParameter, "eta must be >= 0");
  return detail::finish_prediction(propagate(model, x0, eta, opts.eigenvalue_floor), {}, opts);
}

/// x(-eta) = Re[(M^-eta .* V) Phi(x)^T], excluding modes with |mu| < floor.
inline FlowPrediction predict_backward(const KoopmanModel& model, const State& x, int eta,
                                       const PredictOptions& opts = {}) {
  if (eta < 0) throw Error(ErrorCode::kInvalidParameter, "eta must be >= 0");
  if (eta == 0) return predict_forward(model, x, 0, opts);
  std::vector<Eigen::Index> excluded;
  Eigen::VectorXcd z = propagate(model, x, -eta, opts.eigenvalue_floor, &excluded);
  if (static_cast<Eigen::Index>(excluded.size()) == model.size()) {
    throw Error(ErrorCode::kDegenerateSpectrum, "every eigenvalue lies below the backward-flow floor");
  }
  return detail::finish_prediction(std::move(z), std::move(excluded), opts);
}

}  // namespace makbasin
