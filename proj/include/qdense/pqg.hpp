#pragma once

// Programmable quantum gates: a fixed unitary G on data (x) program whose
// program state selects the map induced on the data register,
//   Gamma_psi(s) = Tr_P G (s (x) |psi><psi|) G^dagger.
// Composite index: data * d_P + program.

#include "qdense/optimize.hpp"

#include <optional>
#include <string>

namespace qdense {

/// Largest program register the net builder accepts.
inline constexpr std::size_t max_program_dim = 4096;
/// Largest dense gate side materialized on request.
inline constexpr std::size_t max_dense_gate_side = 4096;

class ProgrammableGate {
 public:
  /// Dense gate; throws InvariantError unless U is unitary within 1e-10.
  ProgrammableGate(std::size_t d_data, std::size_t d_program, cmat u);

  /// G = sum_i U_i (x) |i><i|, kept in block form.
  static ProgrammableGate controlled(std::vector<cmat> units);

  std::size_t d_data() const { return d_data_; }
  std::size_t d_program() const { return d_program_; }
  bool is_controlled() const { return units_.has_value(); }
  /// Block unitaries of a controlled gate (empty for dense gates).
  const std::vector<cmat>& units() const;
  /// Full matrix on data (x) program. Throws SizeGuardError past max_dense_gate_side.
  cmat unitary() const;

  /// Kraus operators <k| G (I (x) |psi>) of the induced map, zero ones dropped.
  std::vector<cmat> kraus(const cvec& psi) const;

 private:
  ProgrammableGate() = default;
  std::size_t d_data_ = 0, d_program_ = 0;
  cmat u_;
  std::optional<std::vector<cmat>> units_;
};

struct UnitaryNet {
  std::vector<cmat> elements;
  double covering_error = 0.0;  // measured, see method
  std::string method;
  std::size_t grid = 0;         // Euler steps per pi (d = 2) or pool size
};

struct ErrorEstimate {
  double value = 0.0;
  std::string method;
};

struct OrthogonalityVerdict {
  bool consistent = false;
  bool proportional = false;
  bool orthogonal = false;
  double overlap = 0.0;               // |<psi1|psi2>|
  double collinearity_defect = 0.0;   // 1 - Tr(J1 J2) / d^2 for the normalized Choi operators
  double program_defect_1 = 0.0;      // 1 - largest eigenvalue of J/d
  double program_defect_2 = 0.0;
  double tolerance = 0.0;
};

struct OrthogonalitySearch {
  std::size_t sampled = 0;
  std::size_t qualifying = 0;         // both programs, non-orthogonal
  std::size_t orthogonal_programs = 0;
  std::size_t not_programs = 0;
  std::size_t violations = 0;
  double max_collinearity_defect = 0.0;  // over qualifying instances
  double tolerance = 0.0;
  std::uint64_t seed = 0;
};

struct NetCertificate {
  std::size_t targets = 0;
  double max_error = 0.0;
  double mean_error = 0.0;
  bool passed = false;
  std::string method;
};

struct NetGate {
  ProgrammableGate gate;
  UnitaryNet net;
  NetCertificate certificate;
  double epsilon = 0.0;
};

struct ProgramChoice {
  PureState program = PureState::basis({1}, 0);
  ErrorEstimate error;
  std::string label;
};

struct WitnessReport {
  double best_error = 0.0;       // sup-input estimate at the best program
  double average_error = 0.0;    // averaged-input objective at the best program
  PureState best_program = PureState::basis({1}, 0);
  std::string start_label;
  std::string method;
  std::size_t program_dim = 0;
  std::size_t candidate_dim = 0; // program coordinates actually searched
  std::size_t input_samples = 0;
};

struct EmulationResult {
  PureState program = PureState::basis({1}, 0);
  double measured_error = 0.0;
  std::string route;             // "mixed-unitary" or "dilation"
  std::string method;
  QuantumChannel emulated = QuantumChannel::identity(1);
};

namespace pqg {

ProgrammableGate control_gate(const std::vector<cmat>& units);
/// G1 (x) G2 on (D1 D2) (x) (P1 P2).
ProgrammableGate tensor_gates(const ProgrammableGate& a, const ProgrammableGate& b);

QuantumChannel induced_map(const ProgrammableGate& g, const PureState& psi);

/// Phase-insensitive worst-case distance sup_z || U z U^+ - V z V^+ ||_1, exact:
/// 2 sin(w/2) for the smallest arc w holding the spectrum of U^+ V, else 2.
double unitary_distance(const cmat& u, const cmat& v);

/// sup over pure inputs of || A(z) - B(z) ||_1, estimated by `samples` Haar
/// inputs followed by projected gradient ascent from the best one.
ErrorEstimate sup_output_distance(const QuantumChannel& a, const QuantumChannel& b, std::size_t samples,
                                  std::uint64_t seed);
ErrorEstimate approximation_error(const QuantumChannel& induced, const cmat& target, std::uint64_t seed = 0);
ErrorEstimate approximation_error(const ProgrammableGate& g, const PureState& psi, const cmat& target,
                                  std::uint64_t seed = 0);

/// Throws PreconditionError when either induced map is not unitary within tol.
OrthogonalityVerdict program_orthogonality_check(const ProgrammableGate& g, const PureState& psi1,
                                                 const PureState& psi2, double tol = 1e-6);
/// Randomized search for counterexamples to "distinct programs are orthogonal".
/// Stops once `qualifying` non-orthogonal program pairs have been checked.
OrthogonalitySearch program_orthogonality_search(std::size_t qualifying, std::uint64_t seed, double tol = 1e-6);

/// Good program for `target` on gate g. Controlled qubit gates use mixtures of
/// nearby units balanced in the Bloch picture; others the fidelity-optimal state.
ProgramChoice best_program(const ProgrammableGate& g, const cmat& target, std::uint64_t seed = 0);

/// Controlled gate over a calibrated net of U(d), with a certificate over 100
/// Haar targets. Throws SizeGuardError when the net would exceed max_program_dim.
NetGate net_gate(double epsilon, std::size_t d, std::uint64_t seed = 0);

WitnessReport scalability_witness(const ProgrammableGate& g1, const ProgrammableGate& g2, const cmat& target,
                                  const OptConfig& cfg);

/// Program on g reproducing T through an ancilla in |0> and a discarded output
/// factor; mixed-unitary channels use program superpositions instead.
EmulationResult emulate_encoding(const QuantumChannel& t, const ProgrammableGate& g, std::size_t ancilla_dim = 1,
                                 std::uint64_t seed = 0);

}  // namespace pqg
}  // namespace qdense
