#pragma once

// Small-n compression of ensembles {p_x, rho_x}: the encoder sees A^n (blind)
// or the sequence x^n (visible), sends an m_dim-level system M, and the
// decoder M -> A^n is scored by
//
//   F = sum_{x^n} p(x^n) F(rho_{x^n}, xi_{x^n}) = F(rho^{A^n R^n}, xi^{A^n R^n}).
//
// Blind factors of A^n are labelled A1..An.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsc/bounds.hpp"
#include "qsc/qcore.hpp"

namespace qsc {

struct Ensemble {
  std::vector<double> probs;
  std::vector<DensityMatrix> states;  // each on {A}

  /// Throws ValidationError unless probs form a distribution over valid states of equal dimension.
  void validate() const;
  int dim() const;
  int size() const { return static_cast<int>(probs.size()); }
};

/// sum_x p_x rho_x (x) |x><x| on {A, R}.
DensityMatrix ensemble_to_source(const Ensemble& e);

/// Inverse of ensemble_to_source: measure R in its computational basis.
Ensemble source_to_ensemble(const DensityMatrix& rho_ar);

struct Scheme {
  BoundMode mode = BoundMode::blind;
  int n = 1;
  int m_dim = 1;
  std::optional<Channel> encoder;         // blind: {A1..An} -> {M}
  std::vector<DensityMatrix> compressed;  // visible: sigma_{x^n} on {M}, x^n in lexicographic order
  Channel decoder;                        // {M} -> {A1..An}
};

struct FidelityReport {
  double average = 0.0;
  /// Dense evaluation on A^n R^n; empty when that operator exceeds the size cap.
  std::optional<double> joint;
};

/// Both forms of the fidelity; throws Error if they differ by more than 1e-8.
FidelityReport evaluate_fidelity_forms(const Scheme& s, const Ensemble& e);
double evaluate_fidelity(const Scheme& s, const Ensemble& e);

struct SimOptions {
  int restarts = 16;
  std::uint64_t seed = 0x53;
  int max_rounds = 60;   // see-saw rounds
  int inner_iter = 80;   // optimizer steps per half round
  double tol = 1e-10;
  int threads = 1;
  /// Cap on the Stinespring environment dimension of encoder and decoder.
  int env_cap = 32;
  int max_block_dim = 16;  // |A|^n
  int max_sequences = 64;  // |X|^n
  /// Visible restart 0 starts from this blind scheme's encoder outputs and decoder.
  std::optional<Scheme> warm_start;
};

struct SchemeResult {
  Scheme scheme;
  double fidelity = 0.0;
  int best_restart = 0;
  std::vector<double> per_restart;
  /// Objective after each half round of the best restart.
  std::vector<double> trace;
};

SchemeResult optimize_blind_scheme(const Ensemble& e, int n, int m_dim, const SimOptions& opts = {});

/// Without opts.warm_start a blind optimization is run first and used as the warm start.
SchemeResult optimize_visible_scheme(const Ensemble& e, int n, int m_dim, const SimOptions& opts = {});

struct SweepOptions {
  bool blind = true;
  bool visible = false;
  SimOptions sim;
  EopOptions eop;
};

struct SweepRow {
  BoundMode mode = BoundMode::blind;
  int n = 1;
  double rate = 0.0;         // requested Q
  double rate_tested = 0.0;  // log2(m_dim) / n
  int m_dim = 1;
  double f_sim = 0.0;
  double f_bound = 1.0;  // evaluated at rate_tested, minimized over the alpha grid
  double bound_alpha = 0.0;
  bool certified = true;

  double slack() const { return f_bound - f_sim; }
};

/// 2^ceil(n rate) levels, at most block_dim = |A|^n.
int compressed_dim(int block_dim, int n, double rate);

std::vector<SweepRow> sweep(const Ensemble& e, const std::vector<double>& rates, const std::vector<int>& ns,
                            const SweepOptions& opts = {});

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& r);

namespace io {

// {"probs":[...],"states":[<density matrix>,...]}
nlohmann::json to_json(const Ensemble& e);
Ensemble ensemble_from_json(const nlohmann::json& j);
Ensemble load_ensemble(const std::string& path);

// {"mode":..,"n":..,"m_dim":..,"encoder":<channel>|null,"compressed":[...],"decoder":<channel>}
nlohmann::json to_json(const Scheme& s);
Scheme scheme_from_json(const nlohmann::json& j);

}  // namespace io

}  // namespace qsc
