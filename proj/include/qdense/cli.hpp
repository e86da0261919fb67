#pragma once

// Command surface of the qdense tool. stdout carries machine output (JSON or
// CSV); human-readable notes go to stderr.
//
// Exit codes: 0 ok, 2 parse, 3 invariant, 4 size guard, 5 non-convergence
// under --strict, 6 precondition ("not a program"), 1 anything else.

#include "qdense/io.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qdense::cli {

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Provenance record embedded in (or written beside) every output.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;  // arguments after the program name
  io::json inputs = io::json::array();
  io::json config = io::json::object();
  std::string version;
  std::string timestamp;
  std::string result_digest;      // of the output with the manifest removed

  io::json to_json() const;
};

/// FNV-1a 64-bit digest, hex encoded.
std::string digest(const std::string& text);

/// Seed used when --seed is absent: QDENSE_SEED if set, else 0.
std::uint64_t default_seed();

/// Runs one command line (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdense::cli
