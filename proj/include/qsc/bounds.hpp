#pragma once

// Strong-converse fidelity bounds for blind and visible compression:
//
//   F <= 2^{-n ((alpha - 1) / (2 alpha)) (H_alpha - Q)},   alpha > 1,
//
// with H_alpha = S_alpha(CQ) of the KI decomposition (blind) or the per-copy
// E_{alpha,p}(A^n:R^n) / n (visible).

#include <optional>
#include <string>
#include <vector>

#include "qsc/eop.hpp"
#include "qsc/ki.hpp"

namespace qsc {

enum class BoundMode { blind, visible };

std::string to_string(BoundMode m);

struct BoundReport {
  BoundMode mode = BoundMode::blind;
  double rate = 0.0;  // Q, bits per copy
  int n = 1;
  double alpha = 2.0;
  double entropic_quantity = 0.0;
  double exponent = 0.0;
  double fidelity_bound = 1.0;  // clipped to <= 1
  std::string provenance;
  /// False when the entropic quantity is a local-optimizer estimate.
  bool certified = true;
};

/// Report for a given entropic quantity; shared by both modes.
BoundReport make_bound_report(BoundMode mode, double rate, int n, double alpha, double entropic_quantity,
                              std::string provenance, bool certified);

/// ((alpha - 1) / (2 alpha)) (entropic_quantity - rate).
double bound_exponent(double alpha, double entropic_quantity, double rate);

BoundReport blind_bound(const DensityMatrix& rho_ar, double rate, int n, double alpha,
                        const KIOptions& ki_opts = {});
BoundReport blind_bound(const KIDecomposition& d, double rate, int n, double alpha);

/// Alpha grid used for exponent suprema.
const std::vector<double>& exponent_alpha_grid();

struct ExponentReport {
  double K = 0.0;
  /// Grid point attaining K; empty when K = 0 or when the exponent still
  /// increases at the largest grid point.
  std::optional<double> alpha_star;
  /// Exponent still increasing at the largest alpha; K is that point's value.
  bool unbounded_alpha = false;
  std::vector<BoundReport> grid;  // one report per evaluated alpha
  std::string label;

  /// "->inf", "none" or the formatted alpha_star.
  std::string alpha_star_text() const;
};

/// Supremum over the alpha grid of the blind exponent. When the grid misses a
/// positive exponent but rate < S(CQ), alpha is refined towards 1.
ExponentReport blind_exponent(const DensityMatrix& rho_ar, double rate, const KIOptions& ki_opts = {});
ExponentReport blind_exponent(const KIDecomposition& d, double rate);

struct VisibleOptions {
  EopOptions eop;
  /// Externally certified per-copy E_{alpha,p}(A^n:R^n) / n; replaces the optimizer.
  std::optional<double> certified_value;
};

BoundReport visible_bound(const DensityMatrix& rho_ar, double rate, int n, double alpha,
                          const VisibleOptions& opts = {});

/// Grid supremum of the visible exponent at block length n. Exploration data:
/// the regularized quantity is replaced by its block-n estimate.
ExponentReport visible_exponent(const DensityMatrix& rho_ar, double rate, int n, const EopOptions& opts = {});

std::string bound_csv_header();
std::string bound_csv_row(const BoundReport& r);

/// printf("%#.12g") formatting shared by every text emitter.
std::string format_number(double x);

}  // namespace qsc
