#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace drcvar {

/// One lower-triangular entry (row >= col) of a symmetric matrix.
struct SymEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Coefficient matrix of one variable inside one block, packed as
/// lower-triangular nonzeros.
struct BlockTerm {
  std::size_t var = 0;
  std::vector<SymEntry> entries;
};

/// Linear matrix inequality  M0 + sum_k x_k M_k  >= 0  of a given size.
struct LmiBlock {
  int size = 0;
  std::vector<SymEntry> constant;
  /// At most one term per variable, sorted by variable index.
  std::vector<BlockTerm> terms;

  /// Dense symmetric value of the affine map at x.
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd constant_matrix() const;
};

/// Named index range into the variable vector.
struct VarRange {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Variable ordering [vec(A) column-major, b, gamma, tau, s]. gamma is absent
/// in the nominal (radius zero) problem.
struct VarLayout {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t atoms = 0;
  std::size_t a_offset = 0;
  std::size_t b_offset = 0;
  std::optional<std::size_t> gamma;
  std::size_t tau = 0;
  std::size_t s_offset = 0;

  std::size_t a_index(std::size_t row, std::size_t col) const { return a_offset + col * n + row; }
  std::vector<VarRange> ranges() const;
};

/// minimize c'x  subject to  every block PSD.
struct SdpProblem {
  std::size_t num_vars = 0;
  Eigen::VectorXd objective;
  std::vector<LmiBlock> blocks;
  VarLayout layout;

  /// Throws DimensionError on inconsistent sizes, entries outside the
  /// lower triangle, duplicated or out-of-range variables.
  void validate() const;
  std::vector<int> block_sizes() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iter, numerical };

std::string to_string(SolveStatus s);

/// Solver output. Slack and dual hold one dense matrix per block.
struct SdpSolution {
  SolveStatus status = SolveStatus::numerical;
  Eigen::VectorXd x;
  std::vector<Eigen::MatrixXd> slack;
  std::vector<Eigen::MatrixXd> dual;
  double objective_value = 0.0;
  double dual_objective_value = 0.0;
  /// <S, Y> / (1 + |c'x| + |dual objective|).
  double duality_gap = 0.0;
  /// ||M0 + sum x_k M_k - S||_F / (1 + ||M0||_F).
  double primal_residual = 0.0;
  /// ||c - (<M_k, Y>)_k|| / (1 + ||c||).
  double dual_residual = 0.0;
  std::size_t iterations = 0;
  std::string message;
};

struct SolutionMetrics {
  double objective_value = 0.0;
  double dual_objective_value = 0.0;
  double duality_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Recomputes objective, gap and residuals of (x, S, Y) from the problem data.
SolutionMetrics evaluate_solution(const SdpProblem& problem, const Eigen::VectorXd& x,
                                  const std::vector<Eigen::MatrixXd>& slack, const std::vector<Eigen::MatrixXd>& dual);

/// Sparse text dump. Header lines start with '#'; every other line is
///   block row col var value
/// with 1-based block/row/col, var = 0 for the constant term and k+1 for x_k,
/// lower triangle only. Objective coefficients are written as block 0, row 0,
/// col 0 lines.
void write_sparse(std::ostream& os, const SdpProblem& problem);
SdpProblem read_sparse(std::istream& is);

}  // namespace drcvar
