#pragma once

// Mass-action kinetics: stoichiometric networks, the polynomial vector field
// they induce, and the analytic oracle for the autocatalytic replicator in a
// continuous-flow stirred tank reactor.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "makbasin/error.hpp"

namespace makbasin {

using State = Eigen::VectorXd;

/// Reactions  sum_j A(i,j) s_j  --k_i-->  sum_j B(i,j) s_j.
class StoichiometricNetwork {
 public:
  StoichiometricNetwork(std::vector<std::string> species, Eigen::MatrixXi reactants,
                        Eigen::MatrixXi products, Eigen::VectorXd rates)
      : species_(std::move(species)),
        reactants_(std::move(reactants)),
        products_(std::move(products)),
        rates_(std::move(rates)) {
    const auto m = reactants_.rows();
    const auto n = reactants_.cols();
    if (n < 1 || m < 1) {
      throw Error(ErrorCode::kInvalidParameter, "network needs at least one species and one reaction");
    }
    if (products_.rows() != m || products_.cols() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "reactant and product matrices differ in shape");
    }
    if (rates_.size() != m) {
      throw Error(ErrorCode::kDimensionMismatch, "rate vector length differs from reaction count");
    }
    if (static_cast<Eigen::Index>(species_.size()) != n) {
      throw Error(ErrorCode::kDimensionMismatch, "species list length differs from matrix columns");
    }
    if ((reactants_.array() < 0).any() || (products_.array() < 0).any()) {
      throw Error(ErrorCode::kInvalidParameter, "stoichiometric coefficients must be nonnegative");
    }
    if (!(rates_.array() > 0.0).all()) {
      throw Error(ErrorCode::kInvalidParameter, "rate constants must be positive");
    }
  }

  Eigen::Index species_count() const { return reactants_.cols(); }
  Eigen::Index reaction_count() const { return reactants_.rows(); }
  const std::vector<std::string>& species() const { return species_; }
  const Eigen::MatrixXi& reactants() const { return reactants_; }
  const Eigen::MatrixXi& products() const { return products_; }
  const Eigen::VectorXd& rates() const { return rates_; }

  /// (B - A)^T as a dense real n x m matrix.
  Eigen::MatrixXd net_stoichiometry() const {
    return (products_ - reactants_).cast<double>().transpose();
  }

 private:
  std::vector<std::string> species_;
  Eigen::MatrixXi reactants_;
  Eigen::MatrixXi products_;
  Eigen::VectorXd rates_;
};

struct ReplicatorParams {
  double k1 = 10.0;
  double k2 = 0.1;
  double g = 0.02;
  std::array<double, 3> inflow{1.0, 0.0, 0.0};

  void validate() const {
    if (!(k1 > 0.0) || !(k2 > 0.0) || !(g > 0.0)) {
      throw Error(ErrorCode::kInvalidParameter, "k1, k2 and g must be positive");
    }
    if (!(k1 > k2)) {
      throw Error(ErrorCode::kInvalidParameter, "replicator rate k1 must exceed death rate k2");
    }
    double total = 0.0;
    for (double v : inflow) {
      if (v < 0.0) throw Error(ErrorCode::kInvalidParameter, "inflow concentrations must be nonnegative");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorCode::kInvalidParameter, "inflow concentrations must sum to 1");
    }
  }
};

/// Which species the replicator network carries.
enum class ReplicatorForm {
  kWithEnvironment,  // s1, s2, s3, s0 (6 reactions, conserves total mass)
  kSpecies,          // s1, s2, s3 with the environment held at unit concentration
  kReduced,          // s1, s2 only; x3 = 1 - x1 - x2 is implied
};

namespace detail {

// 0^0 = 1 so that absent reactants contribute the multiplicative identity.
inline double monomial(const State& x, const Eigen::MatrixXi& exponents, Eigen::Index row) {
  double value = 1.0;
  for (Eigen::Index k = 0; k < exponents.cols(); ++k) {
    const int e = exponents(row, k);
    if (e != 0) value *= std::pow(x(k), e);
  }
  return value;
}

inline void check_dimension(const StoichiometricNetwork& net, const State& x) {
  if (x.size() != net.species_count()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "state has " + std::to_string(x.size()) + " components, network has " +
                    std::to_string(net.species_count()) + " species");
  }
}

}  // namespace detail

/// [B - A]^T (kappa .* x^A) without domain checks; integrators call this on
/// intermediate stages that may dip below zero by roundoff.
inline State mak_rhs_unchecked(const StoichiometricNetwork& net, const State& x) {
  const auto& a = net.reactants();
  const auto& b = net.products();
  State dx = State::Zero(net.species_count());
  for (Eigen::Index i = 0; i < net.reaction_count(); ++i) {
    const double flux = net.rates()(i) * detail::monomial(x, a, i);
    if (flux == 0.0) continue;
    for (Eigen::Index j = 0; j < net.species_count(); ++j) {
      const int change = b(i, j) - a(i, j);
      if (change != 0) dx(j) += change * flux;
    }
  }
  return dx;
}

inline State mak_rhs(const StoichiometricNetwork& net, const State& x) {
  detail::check_dimension(net, x);
  if ((x.array() < 0.0).any()) {
    throw Error(ErrorCode::kNegativeConcentration, "concentrations must be nonnegative");
  }
  return mak_rhs_unchecked(net, x);
}

/// Analytic Jacobian by the power rule applied to each reaction monomial.
inline Eigen::MatrixXd mak_jacobian(const StoichiometricNetwork& net, const State& x) {
  detail::check_dimension(net, x);
  const auto n = net.species_count();
  const auto& a = net.reactants();
  const Eigen::MatrixXd stoich = net.net_stoichiometry();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < net.reaction_count(); ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const int ek = a(i, k);
      if (ek == 0) continue;
      double d = net.rates()(i) * ek * (ek == 1 ? 1.0 : std::pow(x(k), ek - 1));
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != k && a(i, j) != 0) d *= std::pow(x(j), a(i, j));
      }
      if (d != 0.0) jac.col(k) += stoich.col(i) * d;
    }
  }
  return jac;
}

/// Central finite-difference Jacobian, used as the independent check.
inline Eigen::MatrixXd finite_difference_jacobian(const StoichiometricNetwork& net, const State& x,
                                                  double step = 1e-6) {
  detail::check_dimension(net, x);
  const auto n = net.species_count();
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    State plus = x;
    State minus = x;
    plus(k) += step;
    minus(k) -= step;
    jac.col(k) = (mak_rhs_unchecked(net, plus) - mak_rhs_unchecked(net, minus)) / (2.0 * step);
  }
  return jac;
}

/// The autocatalytic replicator s1 + 2 s2 -> 3 s2, s2 -> s3 with in/out-flow g.
inline StoichiometricNetwork build_replicator_network(const ReplicatorParams& params,
                                                      ReplicatorForm form = ReplicatorForm::kSpecies) {
  params.validate();
  // Columns s1, s2, s3, s0. Inflow s0 -> s_j is split by feed composition;
  // with the default feed (1, 0, 0) this is exactly six reactions.
  std::vector<std::array<int, 4>> a_rows{{1, 2, 0, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
  std::vector<std::array<int, 4>> b_rows{{0, 3, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {0, 0, 0, 1}, {0, 0, 0, 1}};
  std::vector<double> rates{params.k1, params.k2, params.g, params.g, params.g};
  for (int j = 0; j < 3; ++j) {
    if (params.inflow[j] > 0.0) {
      a_rows.push_back({0, 0, 0, 1});
      std::array<int, 4> product{0, 0, 0, 0};
      product[j] = 1;
      b_rows.push_back(product);
      rates.push_back(params.g * params.inflow[j]);
    }
  }

  const int n = form == ReplicatorForm::kWithEnvironment ? 4 : form == ReplicatorForm::kSpecies ? 3 : 2;
  const auto m = static_cast<Eigen::Index>(rates.size());
  Eigen::MatrixXi a(m, n);
  Eigen::MatrixXi b(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      a(i, j) = a_rows[i][j];
      b(i, j) = b_rows[i][j];
    }
  }
  std::vector<std::string> names{"s1", "s2", "s3", "s0"};
  names.resize(n);
  return StoichiometricNetwork(std::move(names), std::move(a), std::move(b),
                               Eigen::Map<const Eigen::VectorXd>(rates.data(), m));
}

/// Reduced (x1, x2) -> full (x1, x2, 1 - x1 - x2).
inline State expand_reduced(const State& x) {
  if (x.size() != 2) throw Error(ErrorCode::kDimensionMismatch, "reduced state must have 2 components");
  State full(3);
  full << x(0), x(1), 1.0 - x(0) - x(1);
  return full;
}

inline State reduce_state(const State& x) {
  if (x.size() < 2) throw Error(ErrorCode::kDimensionMismatch, "state must have at least 2 components");
  return x.head(2);
}

struct GammaValue {
  double radicand = 0.0;
  std::optional<double> value;  // empty when imaginary

  bool is_real() const { return value.has_value(); }
};

/// gamma(k1, k2, g) = sqrt(-4 g^2 - 8 g k2 + k1 g - 4 k2^2).
inline GammaValue gamma(double k1, double k2, double g) {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(g > 0.0)) {
    throw Error(ErrorCode::kNonpositiveParameter, "gamma requires k1, k2, g > 0");
  }
  GammaValue out;
  out.radicand = -4.0 * g * g - 8.0 * g * k2 + k1 * g - 4.0 * k2 * k2;
  if (out.radicand >= 0.0) out.value = std::sqrt(out.radicand);
  return out;
}

/// Interval of g on which gamma is real: roots of -4 g^2 + (k1 - 8 k2) g - 4 k2^2.
inline std::optional<std::pair<double, double>> gamma_real_interval(double k1, double k2) {
  if (!(k1 > 0.0) || !(k2 > 0.0)) {
    throw Error(ErrorCode::kNonpositiveParameter, "gamma requires k1, k2 > 0");
  }
  const double b = k1 - 8.0 * k2;
  const double disc = b * b - 64.0 * k2 * k2;
  if (disc < 0.0 || b <= 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  // Product of roots is k2^2, so compute the small one without cancellation.
  const double hi = (b + root) / 8.0;
  return std::make_pair(k2 * k2 / hi, hi);
}

/// Equilibria (x1, x2, x3) of the replicator: the trivial point, then, when
/// gamma is real, the low-x2 (saddle) and high-x2 branches.
inline std::vector<State> analytic_equilibria(const ReplicatorParams& params) {
  params.validate();
  const double k1 = params.k1;
  const double k2 = params.k2;
  const double g = params.g;
  std::vector<State> out;
  State trivial(3);
  trivial << 1.0, 0.0, 0.0;
  out.push_back(trivial);

  // (k2 + g) x2^2 - g x2 + g (k2 + g) / k1 = 0 ; x1 = (k2 + g) / (k1 x2) ; x3 = k2 x2 / g.
  const double qa = k2 + g;
  const double qb = -g;
  const double qc = g * (k2 + g) / k1;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return out;
  const double sq = std::sqrt(disc);
  const double big = (-qb + sq) / (2.0 * qa);
  const double small = qc / (qa * big);
  for (double x2 : {small, big}) {
    State eq(3);
    eq << (k2 + g) / (k1 * x2), x2, k2 * x2 / g;
    out.push_back(eq);
  }
  return out;
}

struct LyapunovSample {
  double value = 0.0;       // V(x)
  double derivative = 0.0;  // grad V . f(x)
};

struct LyapunovReport {
  std::vector<LyapunovSample> samples;
  std::size_t nonpositive_derivative = 0;
  std::size_t positive_derivative = 0;
  double min_value = 0.0;
  double max_derivative = 0.0;
};

/// V(x) = -sum x*_i ln(x_i / x*_i) over x*_i > 0, and its derivative along the
/// replicator flow. Reports signs without asserting V' <= 0.
inline LyapunovReport lyapunov_diagnostic(const ReplicatorParams& params, const State& x_eq,
                                          const std::vector<State>& samples) {
  const auto net = build_replicator_network(params, ReplicatorForm::kSpecies);
  detail::check_dimension(net, x_eq);
  if (mak_rhs(net, x_eq).norm() >= 1e-8) {
    throw Error(ErrorCode::kNotAnEquilibrium, "reference point is not an equilibrium");
  }
  LyapunovReport report;
  report.min_value = std::numeric_limits<double>::infinity();
  report.max_derivative = -std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    detail::check_dimension(net, x);
    LyapunovSample s;
    State grad = State::Zero(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x_eq(i) <= 0.0) continue;
      if (x(i) <= 0.0) {
        throw Error(ErrorCode::kSampleOnBoundary, "sample has a zero component where the equilibrium is positive");
      }
      s.value -= x_eq(i) * std::log(x(i) / x_eq(i));
      grad(i) = -x_eq(i) / x(i);
    }
    s.derivative = grad.dot(mak_rhs(net, x));
    if (s.derivative <= 0.0) {
      ++report.nonpositive_derivative;
    } else {
      ++report.positive_derivative;
    }
    report.min_value = std::min(report.min_value, s.value);
    report.max_derivative = std::max(report.max_derivative, s.derivative);
    report.samples.push_back(s);
  }
  return report;
}

}  // namespace makbasin
