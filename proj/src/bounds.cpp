#include "qsc/bounds.hpp"

#include <cmath>
#include <cstdio>

namespace qsc {

namespace {

void check_alpha(double alpha, const char* who) {
  if (!(alpha > 1.0)) throw ValidationError(std::string(who) + ": alpha must be > 1");
}

void check_n(int n, const char* who) {
  if (n < 1) throw ValidationError(std::string(who) + ": n must be >= 1");
}

void check_rate(double rate, const char* who) {
  if (!std::isfinite(rate) || rate < 0.0) throw ValidationError(std::string(who) + ": rate must be finite and >= 0");
}

// Fills K, alpha_star and the tail flag from the reports collected so far.
void summarize(ExponentReport& rep) {
  rep.K = 0.0;
  rep.alpha_star.reset();
  rep.unbounded_alpha = false;
  // Exponents at rounding level count as zero.
  constexpr double noise = 1e-15;
  for (const BoundReport& r : rep.grid)
    if (r.exponent > noise && r.exponent > rep.K) {
      rep.K = r.exponent;
      rep.alpha_star = r.alpha;
    }
  const auto& grid = exponent_alpha_grid();
  const BoundReport* last = nullptr;
  const BoundReport* before = nullptr;
  for (const BoundReport& r : rep.grid) {
    if (r.alpha == grid.back()) last = &r;
    if (r.alpha == grid[grid.size() - 2]) before = &r;
  }
  if (rep.K > 0.0 && last && before && last->exponent > before->exponent && rep.alpha_star == last->alpha) {
    rep.unbounded_alpha = true;
    rep.alpha_star.reset();
  }
}

}  // namespace

std::string to_string(BoundMode m) { return m == BoundMode::blind ? "blind" : "visible"; }

double bound_exponent(double alpha, double entropic_quantity, double rate) {
  return (alpha - 1.0) / (2.0 * alpha) * (entropic_quantity - rate);
}

BoundReport make_bound_report(BoundMode mode, double rate, int n, double alpha, double entropic_quantity,
                              std::string provenance, bool certified) {
  BoundReport r;
  r.mode = mode;
  r.rate = rate;
  r.n = n;
  r.alpha = alpha;
  r.entropic_quantity = entropic_quantity;
  r.exponent = bound_exponent(alpha, entropic_quantity, rate);
  r.fidelity_bound = std::min(1.0, std::exp2(-n * r.exponent));
  r.provenance = std::move(provenance);
  r.certified = certified;
  return r;
}

BoundReport blind_bound(const KIDecomposition& d, double rate, int n, double alpha) {
  check_alpha(alpha, "blind_bound");
  check_n(n, "blind_bound");
  check_rate(rate, "blind_bound");
  return make_bound_report(BoundMode::blind, rate, n, alpha, ki_entropy(d, alpha), "ki_entropy", true);
}

BoundReport blind_bound(const DensityMatrix& rho_ar, double rate, int n, double alpha, const KIOptions& ki_opts) {
  check_alpha(alpha, "blind_bound");
  return blind_bound(ki_decompose(rho_ar, ki_opts), rate, n, alpha);
}

const std::vector<double>& exponent_alpha_grid() {
  static const std::vector<double> grid{1.05, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0};
  return grid;
}

std::string ExponentReport::alpha_star_text() const {
  if (unbounded_alpha) return "->inf";
  if (!alpha_star) return "none";
  return format_number(*alpha_star);
}

ExponentReport blind_exponent(const KIDecomposition& d, double rate) {
  check_rate(rate, "blind_exponent");
  ExponentReport rep;
  rep.label = "blind strong-converse exponent";
  for (double alpha : exponent_alpha_grid()) rep.grid.push_back(blind_bound(d, rate, 1, alpha));
  summarize(rep);
  if (rep.K == 0.0 && rate < ki_entropy(d, 1.0) - 1e-9) {
    for (int k = 1; k <= 40; ++k) {
      const double alpha = 1.0 + std::ldexp(exponent_alpha_grid().front() - 1.0, -k);
      rep.grid.push_back(blind_bound(d, rate, 1, alpha));
    }
    summarize(rep);
  }
  return rep;
}

ExponentReport blind_exponent(const DensityMatrix& rho_ar, double rate, const KIOptions& ki_opts) {
  return blind_exponent(ki_decompose(rho_ar, ki_opts), rate);
}

BoundReport visible_bound(const DensityMatrix& rho_ar, double rate, int n, double alpha, const VisibleOptions& opts) {
  check_alpha(alpha, "visible_bound");
  check_n(n, "visible_bound");
  check_rate(rate, "visible_bound");
  if (opts.certified_value)
    return make_bound_report(BoundMode::visible, rate, n, alpha, *opts.certified_value, "eop_certified", true);
  const RegularizationEstimate est = eop_regularized_estimate(rho_ar, alpha, n, opts.eop);
  return make_bound_report(BoundMode::visible, rate, n, alpha, est.per_n.back().second, "eop_heuristic", false);
}

ExponentReport visible_exponent(const DensityMatrix& rho_ar, double rate, int n, const EopOptions& opts) {
  check_n(n, "visible_exponent");
  check_rate(rate, "visible_exponent");
  ExponentReport rep;
  rep.label = "exploration of the visible strong-converse exponent at block length " + std::to_string(n);
  EopOptions o = opts;
  for (double alpha : exponent_alpha_grid()) {
    double value = 0.0;
    if (n == 1) {
      const EopResult r = eop(rho_ar, alpha, o);
      o.warm_start = r.optimal_channel.isometry();
      value = r.value;
    } else {
      value = eop_regularized_estimate(rho_ar, alpha, n, opts).per_n.back().second;
    }
    rep.grid.push_back(make_bound_report(BoundMode::visible, rate, n, alpha, value, "eop_heuristic", false));
  }
  summarize(rep);
  return rep;
}

std::string bound_csv_header() { return "mode,Q,n,alpha,entropic,exponent,bound,provenance"; }

std::string bound_csv_row(const BoundReport& r) {
  return to_string(r.mode) + "," + format_number(r.rate) + "," + std::to_string(r.n) + "," + format_number(r.alpha) +
         "," + format_number(r.entropic_quantity) + "," + format_number(r.exponent) + "," +
         format_number(r.fidelity_bound) + "," + r.provenance;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.12g", x);
  return buf;
}

}  // namespace qsc
