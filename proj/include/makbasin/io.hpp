#pragma once

// File formats: network definitions, snapshot CSV with metadata sidecar,
// fitted models, basin reports and plot data.

#include <cstdio>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "makbasin/basin.hpp"
#include "makbasin/bifurcation.hpp"
#include "makbasin/edmd.hpp"
#include "makbasin/error.hpp"
#include "makbasin/mak.hpp"
#include "makbasin/snapshots.hpp"

namespace makbasin::io {

using Json = nlohmann::ordered_json;

/// %.17g, enough digits to round-trip a double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, what + ": " + e.what());
  }
}

inline Json read_json(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Matrices

inline Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const Eigen::MatrixXcd& m) {
  return Json{{"re", to_json(Eigen::MatrixXd(m.real()))}, {"im", to_json(Eigen::MatrixXd(m.imag()))}};
}

inline Json to_json(const Eigen::VectorXcd& v) {
  return Json{{"re", to_json(Eigen::VectorXd(v.real()))}, {"im", to_json(Eigen::VectorXd(v.imag()))}};
}

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw Error(ErrorCode::kParse, what + ": expected a number");
  return j.get<double>();
}

inline Eigen::VectorXd vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], what);
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, what + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kParse, what + ": ragged row " + std::to_string(i));
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number(row[static_cast<std::size_t>(c)], what);
  }
  return m;
}

inline Eigen::VectorXcd complex_vector_from_json(const Json& j, const std::string& what) {
  const Eigen::VectorXd re = vector_from_json(j.at("re"), what + ".re");
  const Eigen::VectorXd im = vector_from_json(j.at("im"), what + ".im");
  if (re.size() != im.size()) throw Error(ErrorCode::kParse, what + ": re/im length mismatch");
  Eigen::VectorXcd v(re.size());
  for (Eigen::Index i = 0; i < re.size(); ++i) v(i) = Complex(re(i), im(i));
  return v;
}

inline Eigen::MatrixXcd complex_matrix_from_json(const Json& j, const std::string& what) {
  const Eigen::MatrixXd re = matrix_from_json(j.at("re"), what + ".re");
  const Eigen::MatrixXd im = matrix_from_json(j.at("im"), what + ".im");
  if (re.rows() != im.rows() || re.cols() != im.cols()) throw Error(ErrorCode::kParse, what + ": re/im shape mismatch");
  Eigen::MatrixXcd m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

// ---------------------------------------------------------------------------
// Networks

inline ReplicatorForm parse_form(const std::string& s) {
  if (s == "with-environment") return ReplicatorForm::kWithEnvironment;
  if (s == "species") return ReplicatorForm::kSpecies;
  if (s == "reduced") return ReplicatorForm::kReduced;
  throw Error(ErrorCode::kConfig, "unknown replicator form '" + s + "'");
}

inline std::string to_string(ReplicatorForm f) {
  switch (f) {
    case ReplicatorForm::kWithEnvironment: return "with-environment";
    case ReplicatorForm::kSpecies: return "species";
    case ReplicatorForm::kReduced: return "reduced";
  }
  return "unknown";
}

inline Json to_json(const ReplicatorParams& p) {
  return Json{{"k1", p.k1}, {"k2", p.k2}, {"g", p.g}, {"inflow", {p.inflow[0], p.inflow[1], p.inflow[2]}}};
}

inline ReplicatorParams replicator_from_json(const Json& j) {
  ReplicatorParams p;
  for (const auto& [key, value] : j.items()) {
    if (key == "k1") {
      p.k1 = number(value, "replicator.k1");
    } else if (key == "k2") {
      p.k2 = number(value, "replicator.k2");
    } else if (key == "g") {
      p.g = number(value, "replicator.g");
    } else if (key == "inflow") {
      const auto v = vector_from_json(value, "replicator.inflow");
      if (v.size() != 3) throw Error(ErrorCode::kConfig, "replicator.inflow needs 3 entries");
      for (int i = 0; i < 3; ++i) p.inflow[static_cast<std::size_t>(i)] = v(i);
    } else if (key != "form") {
      throw Error(ErrorCode::kConfig, "unknown replicator key '" + key + "'");
    }
  }
  p.validate();
  return p;
}

namespace detail {

/// Nested m x n rows or a flat row-major array with a known column count.
inline Eigen::MatrixXi integer_matrix(const Json& j, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::kParse, what + ": expected a nonempty array");
  const bool nested = j[0].is_array();
  const auto rows = nested ? static_cast<Eigen::Index>(j.size()) : static_cast<Eigen::Index>(j.size()) / cols;
  if (!nested && rows * cols != static_cast<Eigen::Index>(j.size())) {
    throw Error(ErrorCode::kParse, what + ": flat length is not a multiple of the species count");
  }
  Eigen::MatrixXi m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = nested ? j[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(c))
                             : j[static_cast<std::size_t>(i * cols + c)];
      if (nested && static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) {
        throw Error(ErrorCode::kParse, what + ": row " + std::to_string(i) + " has the wrong length");
      }
      if (!v.is_number_integer()) throw Error(ErrorCode::kParse, what + ": entries must be integers");
      m(i, c) = v.get<int>();
    }
  }
  return m;
}

}  // namespace detail

/// {"species": [...], "reactants": A, "products": B, "rates": kappa} or
/// {"replicator": {"k1", "k2", "g", "inflow", "form"}}.
inline StoichiometricNetwork network_from_json(const Json& j) {
  if (j.contains("replicator")) {
    const Json& r = j.at("replicator");
    const auto form = r.contains("form") ? parse_form(r.at("form").get<std::string>()) : ReplicatorForm::kReduced;
    return build_replicator_network(replicator_from_json(r), form);
  }
  for (const char* key : {"species", "reactants", "products", "rates"}) {
    if (!j.contains(key)) throw Error(ErrorCode::kParse, std::string("network: missing '") + key + "'");
  }
  std::vector<std::string> species;
  for (const auto& s : j.at("species")) species.push_back(s.get<std::string>());
  const auto n = static_cast<Eigen::Index>(species.size());
  if (n < 1) throw Error(ErrorCode::kInvalidParameter, "network needs at least one species");
  auto a = detail::integer_matrix(j.at("reactants"), n, "reactants");
  auto b = detail::integer_matrix(j.at("products"), n, "products");
  auto k = vector_from_json(j.at("rates"), "rates");
  return StoichiometricNetwork(std::move(species), std::move(a), std::move(b), std::move(k));
}

inline Json to_json(const StoichiometricNetwork& net) {
  Json species = Json::array();
  for (const auto& s : net.species()) species.push_back(s);
  Json a = Json::array();
  Json b = Json::array();
  for (Eigen::Index i = 0; i < net.reaction_count(); ++i) {
    Json ra = Json::array();
    Json rb = Json::array();
    for (Eigen::Index c = 0; c < net.species_count(); ++c) {
      ra.push_back(net.reactants()(i, c));
      rb.push_back(net.products()(i, c));
    }
    a.push_back(std::move(ra));
    b.push_back(std::move(rb));
  }
  return Json{{"species", species}, {"reactants", a}, {"products", b}, {"rates", to_json(net.rates())}};
}

inline StoichiometricNetwork read_network(const std::filesystem::path& path) { return network_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Snapshots

inline std::filesystem::path meta_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".meta.json");
}

inline Json to_json(const SnapshotMeta& m, double dt, Eigen::Index state_dim, Eigen::Index pairs) {
  return Json{{"dt", dt},
              {"state_dim", state_dim},
              {"pairs", pairs},
              {"n_runs", m.n_runs},
              {"points_per_run", m.points_per_run},
              {"seed", m.seed},
              {"design", to_string(m.design)},
              {"integrator", {{"method", m.method}, {"step", m.step}}}};
}

inline std::string snapshots_csv(const SnapshotSet& s) {
  const auto n = s.state_dim();
  std::string out;
  for (Eigen::Index i = 0; i < n; ++i) out += "x" + std::to_string(i + 1) + ",";
  for (Eigen::Index i = 0; i < n; ++i) out += "y" + std::to_string(i + 1) + ",";
  out += "run_id,pair_index\n";
  for (Eigen::Index p = 0; p < s.size(); ++p) {
    for (Eigen::Index i = 0; i < n; ++i) out += format_double(s.x(i, p)) + ",";
    for (Eigen::Index i = 0; i < n; ++i) out += format_double(s.y(i, p)) + ",";
    out += std::to_string(s.run_id[static_cast<std::size_t>(p)]) + "," +
           std::to_string(s.pair_index[static_cast<std::size_t>(p)]) + "\n";
  }
  return out;
}

inline void write_snapshots(const std::filesystem::path& path, const SnapshotSet& s) {
  write_text(path, snapshots_csv(s));
  write_text(meta_path(path), dump(to_json(s.meta, s.dt, s.state_dim(), s.size())));
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_field(const std::string& f, std::size_t line_no, const std::string& source) {
  // from_chars accepts subnormals, which stod rejects as out of range.
  double v = 0.0;
  const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || end != f.data() + f.size()) {
    throw Error(ErrorCode::kParse, source + ":" + std::to_string(line_no) + ": bad number '" + f + "'");
  }
  return v;
}

}  // namespace detail

/// Reads the CSV and its sidecar; errors carry the 1-based line number.
inline SnapshotSet read_snapshots(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, source + ":1: empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split(line, ',');
  if (header.size() < 4 || (header.size() - 2) % 2 != 0 || header[header.size() - 2] != "run_id" ||
      header.back() != "pair_index") {
    throw Error(ErrorCode::kParse, source + ":1: header must be x1..xn,y1..yn,run_id,pair_index");
  }
  const auto n = static_cast<Eigen::Index>((header.size() - 2) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (header[static_cast<std::size_t>(i)] != "x" + std::to_string(i + 1) ||
        header[static_cast<std::size_t>(n + i)] != "y" + std::to_string(i + 1)) {
      throw Error(ErrorCode::kParse, source + ":1: unexpected column names");
    }
  }
  std::vector<std::vector<double>> rows;
  SnapshotSet s;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kParse, source + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(header.size()) + " fields, found " +
                                         std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (Eigen::Index i = 0; i < 2 * n; ++i) row.push_back(detail::parse_field(fields[static_cast<std::size_t>(i)], line_no, source));
    rows.push_back(std::move(row));
    s.run_id.push_back(static_cast<int>(detail::parse_field(fields[fields.size() - 2], line_no, source)));
    s.pair_index.push_back(static_cast<int>(detail::parse_field(fields.back(), line_no, source)));
  }
  if (!text.empty() && text.back() != '\n') {
    throw Error(ErrorCode::kParse, source + ":" + std::to_string(line_no) + ": truncated final line");
  }
  if (rows.empty()) throw Error(ErrorCode::kEmptySnapshotSet, source + ": no data rows");
  s.x.resize(n, static_cast<Eigen::Index>(rows.size()));
  s.y.resize(n, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (Eigen::Index i = 0; i < n; ++i) {
      s.x(i, static_cast<Eigen::Index>(p)) = rows[p][static_cast<std::size_t>(i)];
      s.y(i, static_cast<Eigen::Index>(p)) = rows[p][static_cast<std::size_t>(n + i)];
    }
  }

  const Json meta = read_json(meta_path(path));
  s.dt = number(meta.at("dt"), "meta.dt");
  if (!(s.dt > 0.0)) throw Error(ErrorCode::kParse, "meta.dt must be positive");
  s.meta.n_runs = meta.value("n_runs", 0);
  s.meta.points_per_run = meta.value("points_per_run", 0);
  s.meta.seed = meta.value("seed", std::uint64_t{0});
  s.meta.design = parse_initial_design(meta.value("design", std::string("uniform")));
  if (meta.contains("integrator")) {
    s.meta.method = meta.at("integrator").value("method", std::string("rk4"));
    s.meta.step = meta.at("integrator").value("step", 0.0);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Models

inline std::string kind_name(Dictionary::Kind k) {
  switch (k) {
    case Dictionary::Kind::kTensorHermite: return "tensor-hermite";
    case Dictionary::Kind::kMonomial: return "monomial";
    case Dictionary::Kind::kCustom: return "custom";
  }
  return "unknown";
}

inline Dictionary dictionary_from_spec(const std::string& kind, int state_dim, int degree) {
  if (kind == "tensor-hermite") return Dictionary::tensor_hermite(state_dim, degree);
  if (kind == "monomial") return Dictionary::monomial(state_dim, degree);
  throw Error(ErrorCode::kConfig, "unknown dictionary kind '" + kind + "'");
}

inline Json to_json(const FitDiagnostics& d) {
  return Json{{"pairs", d.pairs},
              {"solver", to_string(d.solver)},
              {"rank", d.gram_rank},
              {"rank_deficient", d.rank_deficient},
              {"sigma_max", d.sigma_max},
              {"sigma_min", d.sigma_min},
              {"rank_cutoff", d.rank_cutoff},
              {"operator_residual", d.operator_residual},
              {"spectral_residual", d.spectral_residual},
              {"duality_error", d.duality_error},
              {"weight_branch", to_string(d.weight_branch)},
              {"reconstruction_residual", d.reconstruction_residual}};
}

inline Json to_json(const KoopmanModel& m) {
  if (m.dictionary.kind() == Dictionary::Kind::kCustom) {
    throw Error(ErrorCode::kIo, "custom dictionaries cannot be serialized");
  }
  return Json{{"dictionary",
               {{"kind", kind_name(m.dictionary.kind())},
                {"state_dim", m.dictionary.state_dim()},
                {"degree", m.dictionary.max_degree()},
                {"size", m.dictionary.size()}}},
              {"dt", m.dt},
              {"diagnostics", to_json(m.diagnostics)},
              {"eigenvalues", to_json(m.eigenvalues)},
              {"normalization_scale", to_json(m.normalization_scale)},
              {"variation", to_json(m.variation)},
              {"koopman", to_json(m.koopman)},
              {"gram", to_json(m.gram)},
              {"cross", to_json(m.cross)},
              {"right_eigenvectors", to_json(m.right_eigenvectors)},
              {"left_adjoint", to_json(m.left_adjoint)},
              {"weights", to_json(m.weights)},
              {"modes", to_json(m.modes)}};
}

inline KoopmanModel model_from_json(const Json& j) {
  try {
    const Json& d = j.at("dictionary");
    KoopmanModel m(dictionary_from_spec(d.at("kind").get<std::string>(), d.at("state_dim").get<int>(),
                                        d.at("degree").get<int>()));
    m.dt = number(j.at("dt"), "dt");
    m.koopman = matrix_from_json(j.at("koopman"), "koopman");
    m.gram = matrix_from_json(j.at("gram"), "gram");
    m.cross = matrix_from_json(j.at("cross"), "cross");
    m.eigenvalues = complex_vector_from_json(j.at("eigenvalues"), "eigenvalues");
    m.normalization_scale = complex_vector_from_json(j.at("normalization_scale"), "normalization_scale");
    m.variation = vector_from_json(j.at("variation"), "variation");
    m.right_eigenvectors = complex_matrix_from_json(j.at("right_eigenvectors"), "right_eigenvectors");
    m.left_adjoint = complex_matrix_from_json(j.at("left_adjoint"), "left_adjoint");
    m.weights = matrix_from_json(j.at("weights"), "weights");
    m.modes = complex_matrix_from_json(j.at("modes"), "modes");
    const Json& g = j.at("diagnostics");
    auto& diag = m.diagnostics;
    diag.pairs = g.at("pairs").get<Eigen::Index>();
    diag.solver = parse_operator_solver(g.at("solver").get<std::string>());
    diag.gram_rank = g.at("rank").get<Eigen::Index>();
    diag.rank_deficient = g.at("rank_deficient").get<bool>();
    diag.sigma_max = number(g.at("sigma_max"), "sigma_max");
    diag.sigma_min = number(g.at("sigma_min"), "sigma_min");
    diag.rank_cutoff = number(g.at("rank_cutoff"), "rank_cutoff");
    diag.operator_residual = number(g.at("operator_residual"), "operator_residual");
    diag.spectral_residual = number(g.at("spectral_residual"), "spectral_residual");
    diag.duality_error = number(g.at("duality_error"), "duality_error");
    diag.weight_branch = g.at("weight_branch").get<std::string>() == "selector" ? WeightBranch::kSelector
                                                                               : WeightBranch::kLeastSquares;
    diag.reconstruction_residual = number(g.at("reconstruction_residual"), "reconstruction_residual");
    const auto nk = m.dictionary.size();
    if (m.koopman.rows() != nk || m.koopman.cols() != nk || m.eigenvalues.size() != nk ||
        m.right_eigenvectors.rows() != nk || m.modes.cols() != nk || m.weights.rows() != nk) {
      throw Error(ErrorCode::kParse, "model: array shapes disagree with the dictionary size");
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model: ") + e.what());
  }
}

inline void write_model(const std::filesystem::path& path, const KoopmanModel& m) { write_text(path, dump(to_json(m))); }
inline KoopmanModel read_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_json(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------
// Reports and plot data

inline Json state_json(const State& x) { return to_json(Eigen::VectorXd(x)); }

inline Json to_json(const EquilibriumReport& e) {
  return Json{{"location", state_json(e.location)},
              {"raw_location", state_json(e.raw_location)},
              {"objective", e.objective},
              {"polished", e.polished},
              {"polish_distance", e.polish_distance},
              {"eigenvalues", to_json(e.jacobian_eigenvalues)},
              {"class", to_string(e.cls)},
              {"role", to_string(e.role)}};
}

inline Json to_json(const BasinReport& r) {
  Json eqs = Json::array();
  for (const auto& e : r.equilibria) eqs.push_back(to_json(e));
  Json stable = Json::array();
  for (auto k : r.stable) stable.push_back(k);
  Json excluded = Json::array();
  for (auto k : r.main.excluded) excluded.push_back(k);
  const auto& c = r.classified;
  int ambiguous = 0;
  for (const auto& e : c.entries) ambiguous += e.boundary_ambiguous ? 1 : 0;
  return Json{
      {"equilibria", eqs},
      {"fixed_point_search", {{"local_minima", r.local_minima}, {"rejected_by_polish", r.rejected_by_polish}}},
      {"saddle", r.saddle},
      {"stable", stable},
      {"designated_stable", r.designated},
      {"main_eigenfunction",
       {{"index", r.main.function.index},
        {"eigenvalue", {{"re", r.main.function.eigenvalue.real()}, {"im", r.main.function.eigenvalue.imag()}}},
        {"variation", r.main.function.variation},
        {"variation_threshold", r.main.variation_threshold},
        {"excluded", excluded}}},
      {"boundary",
       {{"eigenfunction_index", r.boundary.eigenfunction_index},
        {"level", r.boundary.level},
        {"resolution", r.boundary.resolution},
        {"cell_size", r.boundary.cell_size},
        {"saddle_distance", r.boundary.saddle_distance},
        {"vertices", r.boundary.boundary.points.size()},
        {"closed", r.boundary.boundary.closed},
        {"auxiliary_polylines", r.boundary.auxiliary.size()}}},
      {"margin", r.margin},
      {"classification",
       {{"total", c.entries.size()},
        {"agreements", c.agreements},
        {"unresolved", c.unresolved},
        {"boundary_ambiguous", ambiguous},
        {"agreement_rate", c.agreement_rate},
        {"misclassification_rate", c.misclassification_rate}}},
      {"theorem_check",
       {{"sampled", r.theorem_check.sampled},
        {"skipped", r.theorem_check.skipped},
        {"sharpness", r.theorem_check.sharpness},
        {"manifold_evidence", r.theorem_check.manifold_evidence}}}};
}

inline std::string polyline_csv(const Polyline& line) {
  std::string out = "x1,x2\n";
  for (const auto& p : line.points) out += format_double(p.x()) + "," + format_double(p.y()) + "\n";
  return out;
}

inline std::string eigenfunction_grid_csv(const Dictionary& dict, const Eigenfunction& phi, const LevelSetOptions& opts) {
  std::vector<double> imag;
  const ScalarGrid grid = eigenfunction_grid(dict, phi, opts, &imag);
  std::string out = "x1,x2,re_phi,im_phi\n";
  for (int i = 0; i < grid.resolution; ++i) {
    for (int j = 0; j < grid.resolution; ++j) {
      const double re = grid.at(i, j);
      if (std::isnan(re)) continue;
      const Eigen::Vector2d p = grid.node(i, j);
      out += format_double(p.x()) + "," + format_double(p.y()) + "," + format_double(re) + "," +
             format_double(imag[static_cast<std::size_t>(i) * grid.resolution + j]) + "\n";
    }
  }
  return out;
}

/// predicted/verified are equilibrium indices into the report, -1 for none.
inline std::string classified_ics_csv(const BasinReport& r) {
  std::string out = "x1,x2,predicted,verified,agree\n";
  const auto to_eq = [&](int k) { return k < 0 ? std::string("-1") : std::to_string(r.stable[static_cast<std::size_t>(k)]); };
  for (const auto& e : r.classified.entries) {
    out += format_double(e.x(0)) + "," + format_double(e.x(1)) + "," + to_eq(e.predicted) + "," + to_eq(e.verified) +
           "," + (e.agree ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string sweep_csv(const BifurcationSweep& s) {
  std::string out = "g,branch,x1,x2,x3,re_lambda1,im_lambda1,re_lambda2,im_lambda2,class\n";
  for (const auto& r : s.rows) {
    out += format_double(r.g) + "," + std::to_string(r.branch);
    for (Eigen::Index i = 0; i < 3; ++i) out += "," + format_double(r.x(i));
    for (Eigen::Index i = 0; i < 2; ++i) {
      out += "," + format_double(r.eigenvalues(i).real()) + "," + format_double(r.eigenvalues(i).imag());
    }
    out += "," + to_string(r.cls) + "\n";
  }
  return out;
}

inline Json to_json(const BifurcationSweep& s) {
  Json hopf = Json::array();
  for (const auto& h : s.hopf) {
    hopf.push_back({{"g", h.g}, {"branch", h.branch}, {"frequency", h.frequency}, {"stable_below", h.stable_below}});
  }
  Json existence = Json::object();
  if (s.existence_lo) existence["lower"] = *s.existence_lo;
  if (s.existence_hi) existence["upper"] = *s.existence_hi;
  return Json{{"rows", s.rows.size()}, {"existence", existence}, {"hopf", hopf}};
}

}  // namespace makbasin::io
