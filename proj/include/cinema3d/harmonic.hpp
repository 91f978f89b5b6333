#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace cinema3d {

/// Role of a grid cell in a discrete Laplace problem on the 4-neighborhood.
enum class CellRole : std::uint8_t {
  excluded,  ///< not part of the problem; acts as a zero-flux (Neumann) wall
  fixed,     ///< Dirichlet value
  free,      ///< unknown
};

enum class HarmonicScheme { jacobi, gauss_seidel };

struct HarmonicOptions {
  int max_iterations = 5000;
  double tolerance = 1e-4;
  HarmonicScheme scheme = HarmonicScheme::jacobi;
  /// Seed free cells with the exact sparse (LDLᵀ) solution before relaxing.
  /// Without it they start from the nearest fixed value.
  bool direct_seed = true;
};

struct HarmonicReport {
  int iterations = 0;
  double last_update = 0.0;
  bool converged = true;
  /// Free cells with no path to a fixed cell. Their values are untouched.
  std::vector<Eigen::Index> unreachable;
};

/// Row per cell (row-major grid order), one column per independent channel.
using HarmonicValues =
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Solves Δu = 0 on the free cells, each channel independently.
///
/// Free cells are seeded either with the value of the nearest fixed cell
/// (breadth-first, deterministic order) or with the direct sparse solution,
/// then relaxed: every free cell becomes the mean of its in-grid,
/// non-excluded neighbors. Relaxation stops when the largest per-cell change
/// drops below the tolerance or the iteration cap is reached. Results are
/// clamped to the per-channel range of the fixed values, which the exact
/// solution and every relaxation sweep already respect up to rounding.
HarmonicReport solve_harmonic(int width, int height,
                              const std::vector<CellRole>& roles,
                              HarmonicValues& values,
                              const HarmonicOptions& options);

}  // namespace cinema3d
