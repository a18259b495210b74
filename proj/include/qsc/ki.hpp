#pragma once

// Koashi-Imoto decomposition of a bipartite source rho^{AR}:
//
//   (U_KI (x) 1_R) rho^{AR} (U_KI (x) 1_R)^dagger = sum_j p_j |j><j|^C (x) omega_j^N (x) rho_j^{QR}
//
// Block dimensions are ragged; the rectangular C (x) N (x) Q embedding pads
// each block into the leading basis vectors of N and Q. When rho^A is rank
// deficient, U_KI is isometric on supp(rho^A) and vanishes on its kernel.

#include <cstdint>
#include <vector>

#include "qsc/qcore.hpp"

namespace qsc {

struct KIBlock {
  double p = 0.0;
  DensityMatrix omega;   // factors {N: n_j}
  DensityMatrix rho_qr;  // factors {Q: q_j, R...}

  int n_dim() const { return omega.dim(); }
  int q_dim() const { return rho_qr.layout()[0].dim; }
};

struct KIDims {
  int c = 1;
  int n = 1;
  int q = 1;

  bool operator==(const KIDims&) const = default;
};

struct KIDecomposition {
  Layout a_layout;  // {A: |A|}
  Layout r_layout;  // reference factor(s)
  Matrix u_ki;      // (|C||N||Q|) x |A|
  std::vector<KIBlock> blocks;
  KIDims dims;
  double residual = 0.0;  // max-abs reconstruction residual of the block form
  int rounds = 0;         // refinement rounds used

  /// omega^{CNQR} on the padded layout {C, N, Q, R...}.
  DensityMatrix block_state() const;
  /// sum_j p_j |j><j|^C (x) rho_j^Q on the padded layout {C, Q}.
  DensityMatrix cq_state() const;
  /// Columns of U_KI^dagger belonging to block j, ordered (n, q) row-major.
  Matrix block_isometry(std::size_t j) const;
};

struct KIOptions {
  int max_rounds = 64;
  std::uint64_t seed = 0x4b49;
  double target_residual = 1e-8;
};

/// Decompose a state with factors exactly {A, R}.
/// Throws ConvergenceError carrying the best residual when no refinement
/// round reaches `target_residual`.
KIDecomposition ki_decompose(const DensityMatrix& rho_ar, const KIOptions& opts = {});

/// U_KI^dagger omega^{CNQR} U_KI on {A, R}.
DensityMatrix ki_reconstruct(const KIDecomposition& d);

/// S_alpha of the CQ marginal; alpha == 1 is the von Neumann entropy.
double ki_entropy(const KIDecomposition& d, double alpha);

/// Blockwise decomposition of rho1 (x) rho2 on merged factors A = A1 A2, R = R1 R2.
KIDecomposition ki_tensor_product(const KIDecomposition& d1, const KIDecomposition& d2);

/// Construct a decomposition from explicit block isometries (A -> N_j Q_j) of
/// a source; used for fixtures and tensor products. Blocks are re-sorted and
/// gauge-fixed like ki_decompose output.
struct BlockEmbedding {
  Matrix isometry;  // |A| x (n * q), column index n_index * q + q_index
  int n = 1;
  int q = 1;
};
KIDecomposition ki_from_blocks(const DensityMatrix& rho_ar, std::vector<BlockEmbedding> blocks);

// ---------------------------------------------------------------------------
// tau extension: sum_j sqrt(p_j) |j>^C |j>^{C'} |tau_j>^{NE} |eta_j>^{E'N'} |rho_j>^{QQ'R}

struct TauExtension {
  /// Factors {C, N, Q, E, E', R..., C', N', Q'}; R' = C' N' Q' purifies omega.
  PureState state;
  std::vector<Vector> tau_ne;   // per block, on padded N (x) E
  std::vector<Vector> eta_en;   // per block, on E' (x) padded N'
};

TauExtension build_tau_extension(const KIDecomposition& d, std::uint64_t seed);

struct TauCheck {
  double marginal_residual = 0.0;    // |Tr_{E E' R'} tau - omega^{CNQR}|
  double block_pure_residual = 0.0;  // |Tr_{C' Q Q' R} tau - sum_j p_j j (x) tau_j (x) eta_j|
};
TauCheck check_tau_extension(const TauExtension& tau, const KIDecomposition& d);

/// S_alpha(C N Q E) of the tau extension.
double tau_entropy(const TauExtension& tau, double alpha);

// ---------------------------------------------------------------------------

struct PreservingReport {
  bool preserves = false;
  bool structured = false;
  double preserve_residual = 0.0;   // max |(Lambda (x) id) omega - omega|
  double structure_residual = 0.0;  // max deviation from sum_j |j><j| (x) U_j (x) 1_Q
};

/// Check a channel on (a subset of) {C, N, Q} against the block structure.
/// Input and output factors must coincide.
PreservingReport verify_preserving_channel(const Channel& ch, const KIDecomposition& d);

/// rho^{(x)n} arranged as {A: |A|^n, R: |R|^n}.
DensityMatrix bipartite_power(const DensityMatrix& rho_ar, int n);

}  // namespace qsc
