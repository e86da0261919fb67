#include "qdense/io.hpp"

#include <fstream>
#include <sstream>

namespace qdense::io {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"");
  return *it;
}

std::size_t positive_size(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) throw ParseError(std::string(what) + " must be a positive integer");
  return j.get<std::size_t>();
}

Dims dims_from(const json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("dims must be a nonempty array");
  Dims d;
  for (const auto& x : j) d.push_back(positive_size(x, "each dim"));
  return d;
}

cplx entry(const json& e) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) return {e[0].get<double>(), e[1].get<double>()};
  throw ParseError("complex entries must be [re, im] pairs or numbers");
}

json entry(cplx z) { return json::array({z.real(), z.imag()}); }

template <class Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed JSON value: ") + e.what());
  }
}

}  // namespace

json to_json(const cmat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(entry(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

cmat matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("matrix must be a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ParseError("matrix rows must be nonempty arrays");
  cmat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ParseError("matrix rows have different lengths");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = entry(j[r][c]);
  }
  return m;
}

json to_json(const cvec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(entry(v(i)));
  return out;
}

cvec vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("vector must be a nonempty array");
  cvec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = entry(j[i]);
  return v;
}

json to_json(const DensityMatrix& rho) { return {{"dims", rho.dims()}, {"matrix", to_json(rho.matrix())}}; }
json to_json(const PureState& psi) { return {{"dims", psi.dims()}, {"vector", to_json(psi.amplitudes())}}; }

PureState pure_state_from_json(const json& j) {
  const Dims dims = dims_from(field(j, "dims"));
  const cvec v = vector_from_json(field(j, "vector"));
  if (static_cast<std::size_t>(v.size()) != product(dims)) throw ParseError("vector length does not match dims");
  return PureState(dims, v);
}

DensityMatrix state_from_json(const json& j) {
  if (j.is_object() && j.contains("vector") && !j.contains("matrix")) return pure_state_from_json(j).density();
  const Dims dims = dims_from(field(j, "dims"));
  const cmat m = matrix_from_json(field(j, "matrix"));
  if (m.rows() != m.cols()) throw ParseError("state matrix is not square");
  if (static_cast<std::size_t>(m.rows()) != product(dims)) throw ParseError("state matrix side does not match the product of dims");
  return DensityMatrix(dims, m);
}

json to_json(const QuantumChannel& t) {
  json k = json::array();
  for (const auto& m : t.kraus()) k.push_back(to_json(m));
  return {{"d_in", t.d_in()}, {"d_out", t.d_out()}, {"in_dims", t.in_dims()}, {"out_dims", t.out_dims()}, {"kraus", k}};
}

QuantumChannel channel_from_json(const json& j) {
  const std::size_t d_in = positive_size(field(j, "d_in"), "d_in");
  const std::size_t d_out = positive_size(field(j, "d_out"), "d_out");
  const json& k = field(j, "kraus");
  if (!k.is_array() || k.empty()) throw ParseError("kraus must be a nonempty array of matrices");
  std::vector<cmat> kraus;
  for (const auto& m : k) {
    kraus.push_back(matrix_from_json(m));
    if (static_cast<std::size_t>(kraus.back().rows()) != d_out || static_cast<std::size_t>(kraus.back().cols()) != d_in)
      throw ParseError("Kraus operator shape does not match d_out x d_in");
  }
  Dims in{d_in}, out{d_out};
  if (j.contains("in_dims")) in = dims_from(j["in_dims"]);
  if (j.contains("out_dims")) out = dims_from(j["out_dims"]);
  if (product(in) != d_in || product(out) != d_out) throw ParseError("in_dims/out_dims disagree with d_in/d_out");
  return QuantumChannel(std::move(kraus), in, out);
}

json to_json(const ProgrammableGate& g) {
  json out = {{"d_D", g.d_data()}, {"d_P", g.d_program()}};
  if (g.is_controlled()) {
    json u = json::array();
    for (const auto& m : g.units()) u.push_back(to_json(m));
    out["units"] = u;
  } else {
    out["unitary"] = to_json(g.unitary());
  }
  return out;
}

ProgrammableGate gate_from_json(const json& j) {
  const std::size_t dd = positive_size(field(j, "d_D"), "d_D");
  const std::size_t dp = positive_size(field(j, "d_P"), "d_P");
  if (j.contains("units")) {
    const json& u = j["units"];
    if (!u.is_array() || u.size() != dp) throw ParseError("units must list d_P matrices");
    std::vector<cmat> units;
    for (const auto& m : u) {
      units.push_back(matrix_from_json(m));
      if (static_cast<std::size_t>(units.back().rows()) != dd || units.back().rows() != units.back().cols())
        throw ParseError("unit matrices must be d_D x d_D");
    }
    return ProgrammableGate::controlled(std::move(units));
  }
  const cmat u = matrix_from_json(field(j, "unitary"));
  if (static_cast<std::size_t>(u.rows()) != dd * dp || u.rows() != u.cols())
    throw ParseError("gate unitary must be square of side d_D * d_P");
  return ProgrammableGate(dd, dp, u);
}

json to_json(const StinespringIsometry& v) {
  return {{"d_in", v.d_in}, {"d_out", v.d_out}, {"d_env", v.d_env}, {"matrix", to_json(v.v)}};
}

json to_json(const OptConfig& c) {
  return {{"restarts", c.restarts},
          {"max_iterations", c.max_iterations},
          {"gradient_tolerance", c.gradient_tolerance},
          {"armijo", c.armijo},
          {"d_env", c.d_env},
          {"seed", c.seed},
          {"probes", c.probes},
          {"ensemble_restarts", c.ensemble_restarts},
          {"threads", c.threads}};
}

OptConfig config_from_json(const json& j, OptConfig c) {
  if (!j.is_object()) throw ParseError("config block must be an object");
  return guarded([&] {
    for (const auto& [key, value] : j.items()) {
      if (key == "restarts") c.restarts = value.get<std::size_t>();
      else if (key == "max_iterations") c.max_iterations = value.get<std::size_t>();
      else if (key == "gradient_tolerance") c.gradient_tolerance = value.get<double>();
      else if (key == "armijo") c.armijo = value.get<double>();
      else if (key == "d_env") c.d_env = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "probes") c.probes = value.get<bool>();
      else if (key == "ensemble_restarts") c.ensemble_restarts = value.get<std::size_t>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
      else throw ParseError("unknown config key \"" + key + "\"");
    }
    return c;
  });
}

json to_json(const OptReport& r) {
  return {{"value", r.value},
          {"restart_values", r.restart_values},
          {"restart_labels", r.restart_labels},
          {"best_index", r.best_index},
          {"best_label", r.restart_labels.empty() ? "" : r.restart_labels[r.best_index]},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"gradient_norm", r.gradient_norm},
          {"random_spread", r.random_spread},
          {"isometry", to_json(r.best)}};
}

json to_json(const optimize::EnsembleReport& r) {
  json isos = json::array();
  for (const auto& v : r.isometries) isos.push_back(to_json(v));
  return {{"value", r.value},
          {"probabilities", r.ensemble.probabilities},
          {"history", r.history},
          {"start_label", r.start_label},
          {"converged", r.converged},
          {"isometries", isos}};
}

json to_json(const CapacityResult& r) {
  json out = {{"quantity", r.quantity},
              {"value", r.value},
              {"lower_bound", r.lower_bound},
              {"converged", r.converged},
              {"decomposition",
               {{"log_d", r.log_d_term}, {"H_B", r.h_b_term}, {"min_entropy", r.min_entropy_term}}},
              {"d", r.d},
              {"dims", r.dims},
              {"a_factors", r.a_factors},
              {"block", r.block},
              {"copies", r.copies},
              {"config", to_json(r.config)}};
  if (r.quantity != "noisy_dc") out["optimizer"] = to_json(r.report);
  if (r.ensemble) out["ensemble"] = to_json(*r.ensemble);
  return out;
}

json to_json(const UnitaryNet& n, bool with_elements) {
  json out = {{"size", n.elements.size()}, {"covering_error", n.covering_error}, {"method", n.method}, {"grid", n.grid}};
  if (with_elements) {
    json e = json::array();
    for (const auto& m : n.elements) e.push_back(to_json(m));
    out["elements"] = e;
  }
  return out;
}

json to_json(const NetCertificate& c) {
  return {{"targets", c.targets}, {"max_error", c.max_error}, {"mean_error", c.mean_error}, {"passed", c.passed},
          {"method", c.method}};
}

json to_json(const OrthogonalityVerdict& v) {
  return {{"consistent", v.consistent},
          {"proportional", v.proportional},
          {"orthogonal", v.orthogonal},
          {"overlap", v.overlap},
          {"collinearity_defect", v.collinearity_defect},
          {"program_defect", {v.program_defect_1, v.program_defect_2}},
          {"tolerance", v.tolerance}};
}

json to_json(const OrthogonalitySearch& s) {
  return {{"sampled", s.sampled},
          {"qualifying", s.qualifying},
          {"orthogonal_programs", s.orthogonal_programs},
          {"not_programs", s.not_programs},
          {"violations", s.violations},
          {"max_collinearity_defect", s.max_collinearity_defect},
          {"tolerance", s.tolerance},
          {"seed", s.seed}};
}

json to_json(const WitnessReport& w) {
  json out = {{"best_error", w.best_error},
              {"average_error", w.average_error},
              {"start_label", w.start_label},
              {"method", w.method},
              {"program_dim", w.program_dim},
              {"candidate_dim", w.candidate_dim},
              {"input_samples", w.input_samples}};
  if (w.best_program.size() <= 4096) out["best_program"] = to_json(w.best_program);
  return out;
}

json to_json(const ErrorEstimate& e) { return {{"value", e.value}, {"method", e.method}}; }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

}  // namespace qdense::io
