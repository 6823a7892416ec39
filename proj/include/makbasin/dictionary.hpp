#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "makbasin/error.hpp"
#include "makbasin/mak.hpp"

namespace makbasin {

/// Probabilists' Hermite polynomials He_0..He_degree at t.
inline void hermite_values(double t, int degree, double* out) {
  out[0] = 1.0;
  if (degree >= 1) out[1] = t;
  for (int k = 1; k < degree; ++k) out[k + 1] = t * out[k] - k * out[k - 1];
}

/// Ordered family of scalar observables psi_1..psi_N.
class Dictionary {
 public:
  enum class Kind { kTensorHermite, kMonomial, kCustom };

  struct CustomEntry {
    std::string name;
    std::function<double(const State&)> fn;
    std::optional<int> coordinate_axis;  // set when fn(x) == x(axis) identically
  };

  /// Products He_i1(x1) ... He_in(xn), 0 <= ik <= degree, lexicographic in
  /// (i1, ..., in) with i1 most significant.
  static Dictionary tensor_hermite(int state_dim, int degree) {
    Dictionary d(Kind::kTensorHermite, state_dim, degree);
    std::vector<int> idx(state_dim, 0);
    while (true) {
      d.exponents_.push_back(idx);
      int axis = state_dim - 1;
      while (axis >= 0 && ++idx[axis] > degree) idx[axis--] = 0;
      if (axis < 0) break;
    }
    return d;
  }

  /// Monomials of total degree <= degree, graded; within a degree the power of
  /// x1 decreases first. For n = 2, degree 1 this is {1, x1, x2}.
  static Dictionary monomial(int state_dim, int degree) {
    Dictionary d(Kind::kMonomial, state_dim, degree);
    for (int total = 0; total <= degree; ++total) {
      std::vector<int> e(state_dim, 0);
      append_compositions(d.exponents_, e, 0, total);
    }
    return d;
  }

  static Dictionary custom(int state_dim, std::vector<CustomEntry> entries) {
    if (entries.empty()) throw Error(ErrorCode::kInvalidParameter, "custom dictionary needs entries");
    Dictionary d(Kind::kCustom, state_dim, 0);
    d.custom_ = std::make_shared<const std::vector<CustomEntry>>(std::move(entries));
    return d;
  }

  Kind kind() const { return kind_; }
  int state_dim() const { return state_dim_; }
  int max_degree() const { return degree_; }
  Eigen::Index size() const {
    return kind_ == Kind::kCustom ? static_cast<Eigen::Index>(custom_->size())
                                  : static_cast<Eigen::Index>(exponents_.size());
  }

  /// Per-axis polynomial degrees of entry k (empty for custom entries).
  const std::vector<int>& exponents(Eigen::Index k) const { return exponents_.at(static_cast<std::size_t>(k)); }

  std::string entry_name(Eigen::Index k) const {
    if (kind_ == Kind::kCustom) return (*custom_)[static_cast<std::size_t>(k)].name;
    std::string name = kind_ == Kind::kTensorHermite ? "He" : "x^";
    name += "(";
    for (int a = 0; a < state_dim_; ++a) {
      if (a) name += ",";
      name += std::to_string(exponents_[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)]);
    }
    return name + ")";
  }

  Eigen::RowVectorXd evaluate(const State& x) const {
    Eigen::RowVectorXd row(size());
    evaluate_into(x, row.data());
    return row;
  }

  /// One row per column of `states`.
  Eigen::MatrixXd evaluate_rows(const Eigen::MatrixXd& states) const {
    Eigen::MatrixXd out(states.cols(), size());
    Eigen::RowVectorXd row(size());
    for (Eigen::Index p = 0; p < states.cols(); ++p) {
      evaluate_into(states.col(p), row.data());
      out.row(p) = row;
    }
    return out;
  }

  /// Index of the entry that equals x(axis) identically, if any.
  std::optional<Eigen::Index> coordinate_index(int axis) const {
    if (kind_ == Kind::kCustom) {
      for (std::size_t k = 0; k < custom_->size(); ++k) {
        if ((*custom_)[k].coordinate_axis == axis) return static_cast<Eigen::Index>(k);
      }
      return std::nullopt;
    }
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
      bool match = true;
      for (int a = 0; a < state_dim_ && match; ++a) match = exponents_[k][a] == (a == axis ? 1 : 0);
      if (match) return static_cast<Eigen::Index>(k);
    }
    return std::nullopt;
  }

  bool contains_coordinates() const {
    for (int a = 0; a < state_dim_; ++a) {
      if (!coordinate_index(a)) return false;
    }
    return true;
  }

 private:
  Dictionary(Kind kind, int state_dim, int degree) : kind_(kind), state_dim_(state_dim), degree_(degree) {
    if (state_dim < 1) throw Error(ErrorCode::kInvalidParameter, "dictionary state dimension must be >= 1");
    if (degree < 0) throw Error(ErrorCode::kInvalidParameter, "dictionary degree must be >= 0");
  }

  static void append_compositions(std::vector<std::vector<int>>& out, std::vector<int>& e, std::size_t axis,
                                  int remaining) {
    if (axis + 1 == e.size()) {
      e[axis] = remaining;
      out.push_back(e);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[axis] = k;
      append_compositions(out, e, axis + 1, remaining - k);
    }
    e[axis] = 0;
  }

  void evaluate_into(const Eigen::Ref<const Eigen::VectorXd>& x, double* out) const {
    if (x.size() != state_dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "state has " + std::to_string(x.size()) +
                                                     " components, dictionary expects " +
                                                     std::to_string(state_dim_));
    }
    if (kind_ == Kind::kCustom) {
      const State xs = x;
      for (std::size_t k = 0; k < custom_->size(); ++k) out[k] = (*custom_)[k].fn(xs);
      return;
    }
    const int width = degree_ + 1;
    double table[16 * 16];
    std::vector<double> heap;
    double* values = table;
    if (state_dim_ * width > 16 * 16) {
      heap.resize(static_cast<std::size_t>(state_dim_ * width));
      values = heap.data();
    }
    for (int a = 0; a < state_dim_; ++a) {
      double* v = values + a * width;
      if (kind_ == Kind::kTensorHermite) {
        hermite_values(x(a), degree_, v);
      } else {
        v[0] = 1.0;
        for (int k = 1; k <= degree_; ++k) v[k] = v[k - 1] * x(a);
      }
    }
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
      double prod = 1.0;
      for (int a = 0; a < state_dim_; ++a) prod *= values[a * width + exponents_[k][a]];
      out[k] = prod;
    }
  }

  Kind kind_;
  int state_dim_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
  std::shared_ptr<const std::vector<CustomEntry>> custom_;
};

inline std::string to_string(Dictionary::Kind k) {
  switch (k) {
    case Dictionary::Kind::kTensorHermite: return "tensor-hermite";
    case Dictionary::Kind::kMonomial: return "monomial";
    case Dictionary::Kind::kCustom: return "custom";
  }
  return "unknown";
}

inline Dictionary make_dictionary(const std::string& kind, int state_dim, int degree) {
  if (kind == "tensor-hermite") return Dictionary::tensor_hermite(state_dim, degree);
  if (kind == "monomial") return Dictionary::monomial(state_dim, degree);
  throw Error(ErrorCode::kConfig, "unknown dictionary kind '" + kind + "'");
}

}  // namespace makbasin
