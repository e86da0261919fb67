#include "qdense/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace qdense::cli {

namespace fs = std::filesystem;
using io::json;

// Frozen witness threshold for entangling targets, validated by a grid oracle
// (simplex grid n = 38, 10660 mixtures of controlled {I, X} pairs, l1 slack 4/38).
constexpr double kWitnessThreshold = 0.1;

json RunManifest::to_json() const {
  return {{"command", command}, {"argv", argv},       {"inputs", inputs},       {"config", config},
          {"version", version}, {"timestamp", timestamp}, {"result_digest", result_digest}};
}

std::string digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv("QDENSE_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ParseError("QDENSE_SEED must be a non-negative integer");
    }
  }
  return 0;
}

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string file_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Context {
  RunManifest manifest;
  std::ostream& out;
  std::ostream& err;

  void input(const std::string& role, const std::string& ref) {
    json rec = {{"role", role}, {"ref", ref}};
    if (fs::is_regular_file(ref)) rec["digest"] = digest(file_text(ref));
    manifest.inputs.push_back(rec);
  }

  // Prints a JSON result with its manifest; the digest covers the result only.
  void emit(json result) {
    manifest.result_digest = digest(result.dump());
    result["manifest"] = manifest.to_json();
    out << result.dump(2) << "\n";
  }
};

std::vector<std::size_t> parse_factors(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoul(tok));
    } catch (const std::exception&) {
      throw ParseError("factor list must be comma-separated integers: " + s);
    }
  }
  if (out.empty()) throw ParseError("empty factor list");
  return out;
}

cmat single_qubit(const std::string& name) {
  cmat m = cmat::Zero(2, 2);
  const double r = 1 / std::sqrt(2.0);
  if (name == "I") m << 1, 0, 0, 1;
  else if (name == "X") m << 0, 1, 1, 0;
  else if (name == "Y") m << 0, cplx(0, -1), cplx(0, 1), 0;
  else if (name == "Z") m << 1, 0, 0, -1;
  else if (name == "H") m << r, r, r, -r;
  else if (name == "S") m << 1, 0, 0, cplx(0, 1);
  else if (name == "T") m << 1, 0, 0, std::polar(1.0, std::numbers::pi / 4);
  else throw ParseError("unknown single-qubit gate \"" + name + "\"");
  return m;
}

cmat target_spec(const std::string& s, Context& ctx) {
  std::string low;
  for (char c : s) low += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (low == "cnot" || low == "cz" || low == "swap") {
    cmat m = cmat::Zero(4, 4);
    if (low == "cnot") m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
    if (low == "cz") m(0, 0) = m(1, 1) = m(2, 2) = 1, m(3, 3) = -1;
    if (low == "swap") m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1;
    return m;
  }
  if (fs::is_regular_file(s)) {
    ctx.input("target", s);
    return io::matrix_from_json(io::read_json(s).at("matrix"));
  }
  // products such as "X⊗Z", "X(x)Z", "X,Z" or "X*Z"
  std::string t = s;
  for (const std::string sep : {"⊗", "(x)", "*"}) {
    for (auto pos = t.find(sep); pos != std::string::npos; pos = t.find(sep)) t.replace(pos, sep.size(), ",");
  }
  std::stringstream ss(t);
  std::string tok;
  cmat acc;
  while (std::getline(ss, tok, ',')) {
    const cmat m = single_qubit(tok);
    acc = acc.size() == 0 ? m : qmath::kron(acc, m);
  }
  if (acc.size() == 0) throw ParseError("empty target");
  return acc;
}

ProgrammableGate gate_spec(const std::string& s, std::uint64_t seed, Context& ctx) {
  if (s == "pauli") return pqg::control_gate({single_qubit("I"), single_qubit("X"), cmat(single_qubit("X") * single_qubit("Z")),
                                              single_qubit("Z")});
  if (s == "ix") return pqg::control_gate({single_qubit("I"), single_qubit("X")});
  if (s == "swap") return ProgrammableGate(2, 2, target_spec("swap", ctx));
  if (s.rfind("net:", 0) == 0) {
    double eps = 0;
    try {
      eps = std::stod(s.substr(4));
    } catch (const std::exception&) {
      throw ParseError("net gate spec must read net:EPSILON");
    }
    return pqg::net_gate(eps, 2, seed).gate;
  }
  ctx.input("gate", s);
  return io::gate_from_json(io::read_json(s));
}

QuantumChannel channel_spec(const std::string& s, Context& ctx) {
  const auto colon = s.find(':');
  if (colon != std::string::npos && !fs::exists(s)) {
    const std::string kind = s.substr(0, colon), arg = s.substr(colon + 1);
    try {
      if (kind == "depolarizing") return QuantumChannel::depolarizing(2, std::stod(arg));
      if (kind == "identity") return QuantumChannel::identity(std::stoul(arg));
      if (kind == "constant") {
        const std::size_t d = std::stoul(arg);
        return QuantumChannel::constant(DensityMatrix::maximally_mixed({d}), d);
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad channel spec " + s);
    }
    throw ParseError("unknown channel spec " + s);
  }
  ctx.input("channel", s);
  return io::channel_from_json(io::read_json(s));
}

PureState program_spec(const std::string& s, std::size_t dim, Context& ctx) {
  if (s.rfind("basis:", 0) == 0) {
    std::size_t k = 0;
    try {
      k = std::stoul(s.substr(6));
    } catch (const std::exception&) {
      throw ParseError("program spec must read basis:K");
    }
    if (k >= dim) throw DimensionError("basis program index out of range");
    return PureState::basis({dim}, k);
  }
  ctx.input("program", s);
  return io::pure_state_from_json(io::read_json(s));
}

DensityMatrix load_state(const std::string& path, Context& ctx, const std::string& role = "state") {
  ctx.input(role, path);
  return io::state_from_json(io::read_json(path));
}

struct ConfigFlags {
  std::optional<std::size_t> restarts, max_iterations, d_env, ensemble_restarts, threads;
  std::optional<std::uint64_t> seed;
  std::string config_file;
  bool no_probes = false;

  void attach(CLI::App* app) {
    app->add_option("--restarts", restarts, "random restarts of the inner minimization");
    app->add_option("--max-iterations", max_iterations, "descent iterations per restart");
    app->add_option("--seed", seed, "base seed (default: QDENSE_SEED or 0)");
    app->add_option("--d-env", d_env, "environment dimension of the Stinespring isometries (0 = full)");
    app->add_option("--ensemble-restarts", ensemble_restarts, "random starts for ensemble optimization");
    app->add_option("--threads", threads, "worker threads (0 = hardware)");
    app->add_option("--config", config_file, "JSON file with an optimizer config block");
    app->add_flag("--no-probes", no_probes, "skip structured starting points");
  }

  OptConfig build(Context& ctx) const {
    OptConfig c;
    c.seed = default_seed();
    if (!config_file.empty()) {
      ctx.input("config", config_file);
      const json j = io::read_json(config_file);
      c = io::config_from_json(j.contains("config") ? j["config"] : j, c);
    }
    if (restarts) c.restarts = *restarts;
    if (max_iterations) c.max_iterations = *max_iterations;
    if (seed) c.seed = *seed;
    if (d_env) c.d_env = *d_env;
    if (ensemble_restarts) c.ensemble_restarts = *ensemble_restarts;
    if (threads) c.threads = *threads;
    if (no_probes) c.probes = false;
    c.validate();
    ctx.manifest.config = io::to_json(c);
    return c;
  }
};

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::ostringstream os;
  os << "row,seed,d1,d2,first,second,joint,gap\n";
  for (const auto& r : rows)
    os << "instance," << r.seed << ',' << r.d1 << ',' << r.d2 << ',' << csv_number(r.first) << ',' << csv_number(r.second)
       << ',' << csv_number(r.joint) << ',' << csv_number(r.gap) << '\n';
  if (!rows.empty()) {
    double lo = rows[0].gap, hi = rows[0].gap, sum = 0;
    for (const auto& r : rows) lo = std::min(lo, r.gap), hi = std::max(hi, r.gap), sum += r.gap;
    os << "min,,,,,,," << csv_number(lo) << '\n';
    os << "max,,,,,,," << csv_number(hi) << '\n';
    os << "mean,,,,,,," << csv_number(sum / double(rows.size())) << '\n';
  }
  return os.str();
}

fs::path resolve(const fs::path& base, const std::string& ref) {
  const fs::path p(ref);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qdense: dense-coding capacities and programmable quantum gates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", QDENSE_VERSION);

  // entropy
  auto* entropy = app.add_subcommand("entropy", "entropies and coherent information of a bipartite state");
  std::string state_path, a_list = "0";
  entropy->add_option("state", state_path, "state JSON file")->required();
  entropy->add_option("--a-factors", a_list, "comma-separated factors held by the sender (default 0)");

  // dc
  auto* dc = app.add_subcommand("dc", "dense-coding capacity (a certified-feasible lower bound)");
  std::size_t d = 2, copies = 1, block = 1;
  std::optional<std::size_t> ensemble_size;
  std::string channel_path, ree_sigma;
  bool strict = false;
  ConfigFlags dc_flags;
  dc->add_option("state", state_path, "state JSON file")->required();
  dc->add_option("--d", d, "dimension of the noiseless channel");
  dc->add_option("--copies", copies, "encode k copies of the state together");
  dc->add_option("--block", block, "block length n of the entangled minimization");
  dc->add_option("--channel", channel_path, "noisy channel (JSON file or spec such as depolarizing:0.1)");
  dc->add_option("--ensemble-size", ensemble_size, "number of encodings for the noisy capacity");
  dc->add_option("--a-factors", a_list, "comma-separated factors held by the sender (default 0)");
  dc->add_option("--ree-sigma", ree_sigma, "state sigma for the relative-entropy upper bound");
  dc->add_flag("--strict", strict, "exit 5 unless the optimizer converged");
  dc_flags.attach(dc);

  // holevo
  auto* holevo = app.add_subcommand("holevo", "Holevo quantity of an encoding ensemble on a state");
  std::string ensemble_path;
  holevo->add_option("state", state_path, "state JSON file")->required();
  holevo->add_option("--ensemble", ensemble_path, "ensemble JSON file")->required();
  holevo->add_option("--channel", channel_path, "channel applied after encoding (default identity)");
  holevo->add_option("--a-factors", a_list, "comma-separated factors held by the sender (default 0)");

  // scan-additivity
  auto* scan = app.add_subcommand("scan-additivity", "superadditivity gaps over random pairs or a configured pair");
  std::size_t count = 10, d1 = 2, d2 = 2;
  std::string kind = "random", out_path = "-", pair_path;
  ConfigFlags scan_flags;
  scan->add_option("--count", count, "number of random instances");
  scan->add_option("--d1", d1, "channel dimension for the first state");
  scan->add_option("--d2", d2, "channel dimension for the second state");
  scan->add_option("--kind", kind, "separable | random | pure")->check(CLI::IsMember({"separable", "random", "pure"}));
  scan->add_option("--pair", pair_path, "JSON description of one explicit pair instead of random instances");
  scan->add_option("--out", out_path, "CSV output path ('-' for stdout); a manifest is written beside it");
  scan_flags.attach(scan);

  // pqg
  auto* pqg_cmd = app.add_subcommand("pqg", "programmable quantum gates");
  pqg_cmd->require_subcommand(1);
  auto* build_net = pqg_cmd->add_subcommand("build-net", "epsilon-net gate with certificate");
  double epsilon = 0.3;
  std::size_t net_d = 2;
  std::string gate_out;
  std::optional<std::uint64_t> pqg_seed;
  build_net->add_option("--epsilon", epsilon, "target approximation error")->required();
  build_net->add_option("--d", net_d, "data dimension");
  build_net->add_option("--seed", pqg_seed, "seed");
  build_net->add_option("--out", gate_out, "write the gate JSON here");

  auto* ortho = pqg_cmd->add_subcommand("check-orthogonality", "programs are orthogonal or implement the same unitary");
  std::string gate_ref = "ix", prog1 = "basis:0", prog2 = "basis:1";
  double tolerance = 1e-6;
  std::size_t search = 0;
  ortho->add_option("--gate", gate_ref, "gate file or preset (ix, pauli, swap, net:EPS)");
  ortho->add_option("--program1", prog1, "pure-state file or basis:K");
  ortho->add_option("--program2", prog2, "pure-state file or basis:K");
  ortho->add_option("--tol", tolerance, "program and collinearity tolerance");
  ortho->add_option("--search", search, "instead: randomized search with this many qualifying pairs");
  ortho->add_option("--seed", pqg_seed, "seed for --search");

  auto* witness = pqg_cmd->add_subcommand("witness", "best program of G1 (x) G2 for a two-register target");
  std::string target_ref = "cnot";
  std::vector<std::string> gates{"pauli", "pauli"};
  ConfigFlags witness_flags;
  witness->add_option("--target", target_ref, "cnot, cz, swap, a product such as X⊗Z, or a matrix file");
  witness->add_option("--gates", gates, "two gate files or presets")->expected(2);
  witness_flags.attach(witness);

  auto* emulate = pqg_cmd->add_subcommand("emulate", "program a gate to reproduce an encoding channel");
  std::size_t ancilla = 1;
  std::string emu_gate = "net:0.1";
  emulate->add_option("--channel", channel_path, "channel file or spec (depolarizing:P, identity:D)")->required();
  emulate->add_option("--gate", emu_gate, "gate file or preset");
  emulate->add_option("--ancilla", ancilla, "ancilla dimension prepared in |0>");
  emulate->add_option("--seed", pqg_seed, "seed");

  // replay
  auto* replay = app.add_subcommand("replay", "re-run a manifest and compare the result digest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "output JSON with a manifest, or a manifest sidecar")->required();

  std::vector<std::string> full{"qdense"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Context ctx{RunManifest{}, out, err};
  ctx.manifest.argv = args;
  ctx.manifest.version = QDENSE_VERSION;
  ctx.manifest.timestamp = utc_now();

  try {
    if (entropy->parsed()) {
      ctx.manifest.command = "entropy";
      const DensityMatrix rho = load_state(state_path, ctx);
      const auto a = parse_factors(a_list);
      std::vector<std::size_t> b;
      for (std::size_t i = 0; i < rho.factor_count(); ++i)
        if (std::find(a.begin(), a.end(), i) == a.end()) b.push_back(i);
      if (b.empty()) throw DimensionError("the receiver must hold at least one factor");
      const double h_a = qmath::von_neumann_entropy(qmath::partial_trace(rho, a));
      ctx.emit({{"H", qmath::von_neumann_entropy(rho)},
                {"H_A", h_a},
                {"H_B", capacity::marginal_entropy_b(rho, a)},
                {"coherent", capacity::coherent_information(rho, a)},
                {"purity", rho.purity()},
                {"dims", rho.dims()},
                {"a_factors", a}});
      return 0;
    }

    if (dc->parsed()) {
      ctx.manifest.command = "dc";
      const DensityMatrix rho = load_state(state_path, ctx);
      const auto a = parse_factors(a_list);
      const OptConfig cfg = dc_flags.build(ctx);
      if (copies > 1 && block > 1) throw ParseError("--copies and --block are exclusive");
      if (copies == 0 || block == 0) throw ParseError("--copies and --block must be positive");
      CapacityResult r;
      json extra = json::object();
      if (!channel_path.empty()) {
        const QuantumChannel phi = channel_spec(channel_path, ctx);
        const std::size_t m = ensemble_size.value_or(phi.d_in() * phi.d_in());
        r = capacity::noisy_dc_capacity(phi, rho, a, m, cfg);
        extra["channel"] = channel_path;
      } else if (copies > 1) {
        r = capacity::dc_capacity_multicopy(copies, d, rho, a, cfg);
      } else if (block > 1) {
        r = capacity::dc_capacity_block(block, d, rho, a, cfg);
      } else {
        r = capacity::dc_capacity(d, rho, a, cfg);
      }
      json result = io::to_json(r);
      result["inputs"] = ctx.manifest.inputs;
      if (!ree_sigma.empty()) {
        const DensityMatrix sigma = load_state(ree_sigma, ctx, "ree_sigma");
        const ReeBound b = capacity::ree_bound(rho, d, sigma, a);
        result["ree_bound"] = {{"bound", b.bound},
                               {"certified", b.certified},
                               {"sigma_min_pt_eigenvalue", b.sigma_min_pt_eigenvalue},
                               {"consistent", !b.certified || r.value <= b.bound + 5e-3}};
      }
      for (auto& [k, v] : extra.items()) result[k] = v;
      ctx.emit(result);
      if (strict && !r.converged) throw ConvergenceError("optimizer did not converge (--strict)");
      return 0;
    }

    if (holevo->parsed()) {
      ctx.manifest.command = "holevo";
      const DensityMatrix rho = load_state(state_path, ctx);
      const auto a = parse_factors(a_list);
      ctx.input("ensemble", ensemble_path);
      const json ej = io::read_json(ensemble_path);
      EncodingEnsemble mu;
      try {
        for (const auto& p : ej.at("probabilities")) mu.probabilities.push_back(p.get<double>());
        for (const auto& c : ej.at("channels")) mu.items.push_back(io::channel_from_json(c));
      } catch (const json::exception& e) {
        throw ParseError(std::string("malformed ensemble: ") + e.what());
      }
      std::size_t d_a = 1;
      for (auto f : a) {
        if (f >= rho.factor_count()) throw DimensionError("sender factor out of range");
        d_a *= rho.dims()[f];
      }
      const QuantumChannel phi =
          channel_path.empty() ? QuantumChannel::identity(mu.items.empty() ? d_a : mu.items[0].d_out())
                               : channel_spec(channel_path, ctx);
      ctx.emit({{"I", capacity::dc_mutual_information(mu, rho, phi, a)}, {"size", mu.size()}});
      return 0;
    }

    if (scan->parsed()) {
      ctx.manifest.command = "scan-additivity";
      const OptConfig cfg = scan_flags.build(ctx);
      std::vector<ScanRow> rows;
      if (!pair_path.empty()) {
        ctx.input("pair", pair_path);
        const json pj = io::read_json(pair_path);
        const fs::path base = fs::path(pair_path).parent_path();
        auto state_at = [&](const char* key) { return load_state(resolve(base, pj.at(key).get<std::string>()).string(), ctx, key); };
        auto factors_at = [&](const char* key) {
          return pj.contains(key) ? pj[key].get<std::vector<std::size_t>>() : std::vector<std::size_t>{0};
        };
        try {
          const std::string k = pj.value("kind", "dc");
          ScanRow row;
          row.seed = cfg.seed;
          if (k == "dc") {
            const auto rho = state_at("rho"), sigma = state_at("sigma");
            row.d1 = pj.at("d1").get<std::size_t>();
            row.d2 = pj.at("d2").get<std::size_t>();
            const auto ra = factors_at("rho_a"), sa = factors_at("sigma_a");
            const auto g = capacity::additivity_gap(rho, ra, row.d1, sigma, sa, row.d2, cfg);
            row.first = g.first.value, row.second = g.second.value, row.joint = g.joint.value, row.gap = g.gap;
          } else if (k == "noisy") {
            const auto rho = state_at("rho"), sigma = state_at("sigma");
            const auto phi1 = channel_spec(resolve(base, pj.at("phi1").get<std::string>()).string(), ctx);
            const auto phi2 = channel_spec(resolve(base, pj.at("phi2").get<std::string>()).string(), ctx);
            row.d1 = phi1.d_out();
            row.d2 = phi2.d_out();
            const auto g = capacity::noisy_additivity_gap(phi1, rho, phi2, sigma, pj.at("m1").get<std::size_t>(),
                                                          pj.at("m2").get<std::size_t>(), pj.at("m_joint").get<std::size_t>(), cfg);
            row.first = g.first.value, row.second = g.second.value, row.joint = g.joint.value, row.gap = g.gap;
          } else {
            throw ParseError("pair kind must be dc or noisy");
          }
          rows.push_back(row);
        } catch (const json::exception& e) {
          throw ParseError(std::string("malformed pair description: ") + e.what());
        }
      } else {
        const ScanKind sk = kind == "separable" ? ScanKind::separable : kind == "pure" ? ScanKind::pure : ScanKind::random;
        rows = capacity::scan_additivity(count, d1, d2, sk, cfg.seed, cfg);
      }
      const std::string csv = scan_csv(rows);
      ctx.manifest.result_digest = digest(csv);
      const std::string manifest = ctx.manifest.to_json().dump(2) + "\n";
      if (out_path == "-") {
        out << csv;
        err << manifest;
      } else {
        io::write_text(out_path, csv);
        io::write_text(out_path + ".manifest.json", manifest);
      }
      for (const auto& r : rows)
        if (r.gap < -5e-3) err << "warning: negative gap " << r.gap << " at seed " << r.seed << "\n";
      return 0;
    }

    if (pqg_cmd->parsed()) {
      const std::uint64_t seed = pqg_seed.value_or(default_seed());
      if (build_net->parsed()) {
        ctx.manifest.command = "pqg build-net";
        ctx.manifest.config = {{"epsilon", epsilon}, {"d", net_d}, {"seed", seed}};
        const NetGate ng = pqg::net_gate(epsilon, net_d, seed);
        if (!gate_out.empty()) io::write_text(gate_out, io::to_json(ng.gate).dump() + "\n");
        ctx.emit({{"epsilon", epsilon},
                  {"d", net_d},
                  {"d_P", ng.gate.d_program()},
                  {"net", io::to_json(ng.net)},
                  {"certificate", io::to_json(ng.certificate)},
                  {"gate_file", gate_out}});
        return 0;
      }
      if (ortho->parsed()) {
        ctx.manifest.command = "pqg check-orthogonality";
        ctx.manifest.config = {{"tol", tolerance}, {"seed", seed}, {"search", search}};
        if (search > 0) {
          ctx.emit(io::to_json(pqg::program_orthogonality_search(search, seed, tolerance)));
          return 0;
        }
        const ProgrammableGate g = gate_spec(gate_ref, seed, ctx);
        const PureState p1 = program_spec(prog1, g.d_program(), ctx), p2 = program_spec(prog2, g.d_program(), ctx);
        ctx.emit(io::to_json(pqg::program_orthogonality_check(g, p1, p2, tolerance)));
        return 0;
      }
      if (witness->parsed()) {
        ctx.manifest.command = "pqg witness";
        const OptConfig cfg = witness_flags.build(ctx);
        const ProgrammableGate g1 = gate_spec(gates[0], cfg.seed, ctx), g2 = gate_spec(gates[1], cfg.seed, ctx);
        const cmat target = target_spec(target_ref, ctx);
        const WitnessReport w = pqg::scalability_witness(g1, g2, target, cfg);
        json result = io::to_json(w);
        result["target"] = target_ref;
        result["gates"] = gates;
        result["threshold"] = kWitnessThreshold;
        result["threshold_note"] = "oracle-derived constant, not a value from the theory";
        result["oracle_resolution"] = "simplex grid n=38 (10660 points), l1 slack 4/38, controlled {I,X} pairs";
        result["exceeds_threshold"] = w.best_error > kWitnessThreshold;
        // per-factor programs give a baseline for product targets
        if (target.rows() == 4 && g1.d_data() == 2 && g2.d_data() == 2) {
          Eigen::JacobiSVD<cmat> svd(target);
          cmat r(4, 4);
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int c = 0; c < 2; ++c)
                for (int e = 0; e < 2; ++e) r(a * 2 + b, c * 2 + e) = target(a * 2 + c, b * 2 + e);
          Eigen::JacobiSVD<cmat> rs(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
          if (rs.singularValues()(1) <= 1e-10 * rs.singularValues()(0)) {
            cmat fa(2, 2), fb(2, 2);
            for (int x = 0; x < 2; ++x)
              for (int y = 0; y < 2; ++y) {
                fa(x, y) = rs.matrixU()(x * 2 + y, 0) * std::sqrt(2.0);
                fb(x, y) = std::conj(rs.matrixV()(x * 2 + y, 0)) * std::sqrt(2.0);
              }
            const double base = pqg::best_program(g1, fa, cfg.seed).error.value + pqg::best_program(g2, fb, cfg.seed).error.value;
            result["baseline"] = base;
            result["within_baseline"] = w.best_error <= base + 1e-9;
          }
        }
        ctx.emit(result);
        return 0;
      }
      if (emulate->parsed()) {
        ctx.manifest.command = "pqg emulate";
        ctx.manifest.config = {{"ancilla", ancilla}, {"seed", seed}, {"gate", emu_gate}};
        const QuantumChannel t = channel_spec(channel_path, ctx);
        const ProgrammableGate g = gate_spec(emu_gate, seed, ctx);
        const EmulationResult e = pqg::emulate_encoding(t, g, ancilla, seed);
        json result = {{"measured_error", e.measured_error}, {"route", e.route}, {"method", e.method},
                       {"d_P", g.d_program()}};
        if (e.program.size() <= 4096) result["program"] = io::to_json(e.program);
        ctx.emit(result);
        return 0;
      }
    }

    if (replay->parsed()) {
      const json j = io::read_json(manifest_path);
      const json m = j.contains("manifest") ? j["manifest"] : j;
      std::vector<std::string> again;
      std::string expected;
      try {
        again = m.at("argv").get<std::vector<std::string>>();
        expected = m.at("result_digest").get<std::string>();
      } catch (const json::exception& e) {
        throw ParseError(std::string("not a manifest: ") + e.what());
      }
      if (!again.empty() && again[0] == "replay") throw ParseError("refusing to replay a replay");
      const bool is_scan = !again.empty() && again[0] == "scan-additivity";
      if (is_scan)
        for (std::size_t i = 0; i + 1 < again.size(); ++i)
          if (again[i] == "--out") again[i + 1] = "-";
      std::ostringstream captured, notes;
      const int code = run(again, captured, notes);
      if (code != 0) {
        err << notes.str();
        return code;
      }
      std::string actual;
      if (is_scan) {
        actual = digest(captured.str());
      } else {
        json r = json::parse(captured.str());
        r.erase("manifest");
        actual = digest(r.dump());
      }
      const bool same = actual == expected;
      out << json{{"command", m.value("command", "")},
                  {"reproduced", same},
                  {"expected_digest", expected},
                  {"actual_digest", actual}}
                 .dump(2)
          << "\n";
      return same ? 0 : 3;
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    err << "invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const SizeGuardError& e) {
    err << "size guard: " << e.what() << "\n";
    return 4;
  } catch (const ConvergenceError& e) {
    err << "not converged: " << e.what() << "\n";
    return 5;
  } catch (const PreconditionError& e) {
    err << "precondition failed: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace qdense::cli
