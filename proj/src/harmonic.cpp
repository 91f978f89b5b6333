#include "cinema3d/harmonic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace cinema3d {

namespace {

constexpr std::array<int, 4> kDx = {-1, 1, 0, 0};
constexpr std::array<int, 4> kDy = {0, 0, -1, 1};

struct FreeCell {
  Eigen::Index index;
  std::array<Eigen::Index, 4> neighbors;
  int count;
};

// Exact solution of the Dirichlet problem on the reachable free cells.
void seed_direct(const std::vector<FreeCell>& cells, const std::vector<CellRole>& roles,
                 HarmonicValues& values) {
  std::vector<Eigen::Index> unknown(roles.size(), -1);
  for (std::size_t c = 0; c < cells.size(); ++c) unknown[cells[c].index] = Eigen::Index(c);

  const Eigen::Index m = Eigen::Index(cells.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(cells.size() * 5);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, values.cols());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const FreeCell& cell = cells[c];
    const Eigen::Index row = Eigen::Index(c);
    triplets.emplace_back(row, row, double(cell.count));
    for (int k = 0; k < cell.count; ++k) {
      const Eigen::Index j = cell.neighbors[k];
      if (roles[j] == CellRole::fixed) {
        rhs.row(row) += values.row(j).matrix();
      } else {
        triplets.emplace_back(row, unknown[j], -1.0);
      }
    }
  }
  Eigen::SparseMatrix<double> laplacian(m, m);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
  if (solver.info() != Eigen::Success) return;  // keep the breadth-first seed
  const Eigen::MatrixXd solution = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !solution.allFinite()) return;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    values.row(cells[c].index) = solution.row(Eigen::Index(c)).array();
  }
}

}  // namespace

HarmonicReport solve_harmonic(int width, int height,
                              const std::vector<CellRole>& roles,
                              HarmonicValues& values,
                              const HarmonicOptions& options) {
  const Eigen::Index n = Eigen::Index(width) * height;
  if (Eigen::Index(roles.size()) != n || values.rows() != n) {
    throw std::invalid_argument("solve_harmonic: size mismatch");
  }
  HarmonicReport report;

  // Seed free cells from the nearest fixed cell.
  std::vector<std::uint8_t> reached(std::size_t(n), 0);
  std::deque<Eigen::Index> queue;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (roles[i] == CellRole::fixed) {
      reached[i] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const Eigen::Index i = queue.front();
    queue.pop_front();
    const int x = static_cast<int>(i % width);
    const int y = static_cast<int>(i / width);
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      const Eigen::Index j = Eigen::Index(ny) * width + nx;
      if (reached[j] || roles[j] != CellRole::free) continue;
      reached[j] = 1;
      values.row(j) = values.row(i);
      queue.push_back(j);
    }
  }

  std::vector<FreeCell> cells;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (roles[i] != CellRole::free) continue;
    if (!reached[i]) {
      report.unreachable.push_back(i);
      continue;
    }
    FreeCell cell{i, {}, 0};
    const int x = static_cast<int>(i % width);
    const int y = static_cast<int>(i / width);
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      const Eigen::Index j = Eigen::Index(ny) * width + nx;
      if (roles[j] == CellRole::excluded) continue;
      cell.neighbors[cell.count++] = j;
    }
    cells.push_back(cell);
  }
  if (cells.empty()) return report;

  const Eigen::Index channels = values.cols();
  Eigen::Array<double, 1, Eigen::Dynamic> low =
      Eigen::Array<double, 1, Eigen::Dynamic>::Constant(channels, std::numeric_limits<double>::infinity());
  Eigen::Array<double, 1, Eigen::Dynamic> high = -low;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (roles[i] != CellRole::fixed) continue;
    low = low.min(values.row(i));
    high = high.max(values.row(i));
  }

  if (options.direct_seed) seed_direct(cells, roles, values);

  const bool jacobi = options.scheme == HarmonicScheme::jacobi;
  HarmonicValues pending(jacobi ? Eigen::Index(cells.size()) : 0, channels);
  Eigen::Array<double, 1, Eigen::Dynamic> mean(channels);
  report.converged = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    double largest = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const FreeCell& cell = cells[c];
      if (cell.count == 0) {
        if (jacobi) pending.row(Eigen::Index(c)) = values.row(cell.index);
        continue;
      }
      mean.setZero();
      for (int k = 0; k < cell.count; ++k) mean += values.row(cell.neighbors[k]);
      mean /= double(cell.count);
      largest = std::max(largest,
                         (mean - values.row(cell.index)).abs().maxCoeff());
      if (jacobi) {
        pending.row(Eigen::Index(c)) = mean;
      } else {
        values.row(cell.index) = mean;
      }
    }
    if (jacobi) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        values.row(cells[c].index) = pending.row(Eigen::Index(c));
      }
    }
    report.iterations = iter + 1;
    report.last_update = largest;
    if (largest < options.tolerance) {
      report.converged = true;
      break;
    }
  }
  for (const FreeCell& cell : cells) {
    values.row(cell.index) = values.row(cell.index).max(low).min(high);
  }
  return report;
}

}  // namespace cinema3d
