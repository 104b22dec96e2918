#include "drcvar/sdp_model.hpp"

#include "drcvar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace drcvar {

namespace {

VarLayout make_layout(std::size_t n, std::size_t m, std::size_t atoms, bool with_gamma) {
  VarLayout l;
  l.n = n;
  l.m = m;
  l.atoms = atoms;
  l.a_offset = 0;
  l.b_offset = n * m;
  std::size_t next = l.b_offset + n;
  if (with_gamma) l.gamma = next++;
  l.tau = next++;
  l.s_offset = next;
  return l;
}

std::size_t layout_size(const VarLayout& l) { return l.s_offset + l.atoms; }

// Accumulates a block entry by entry, then freezes it into an LmiBlock.
class BlockBuilder {
 public:
  explicit BlockBuilder(int size) : size_(size) {}

  void constant(int row, int col, double v) { add(constant_, row, col, v); }
  void coeff(std::size_t var, int row, int col, double v) { add(terms_[var], row, col, v); }

  LmiBlock build() && {
    LmiBlock b;
    b.size = size_;
    b.constant = flatten(constant_);
    for (auto& [var, entries] : terms_) {
      auto flat = flatten(entries);
      if (!flat.empty()) b.terms.push_back(BlockTerm{var, std::move(flat)});
    }
    return b;
  }

 private:
  using EntryMap = std::map<std::pair<int, int>, double>;

  void add(EntryMap& map, int row, int col, double v) {
    if (v == 0.0) return;
    if (row < col) std::swap(row, col);
    map[{row, col}] += v;
  }

  static std::vector<SymEntry> flatten(const EntryMap& map) {
    std::vector<SymEntry> out;
    out.reserve(map.size());
    for (const auto& [rc, v] : map) {
      if (v != 0.0) out.push_back(SymEntry{rc.first, rc.second, v});
    }
    return out;
  }

  int size_;
  EntryMap constant_;
  std::map<std::size_t, EntryMap> terms_;
};

LmiBlock scalar_block(std::size_t var) {
  BlockBuilder b(1);
  b.coeff(var, 0, 0, 1.0);
  return std::move(b).build();
}

void fill_symmetric(Eigen::MatrixXd& M, const std::vector<SymEntry>& entries, double scale) {
  for (const auto& e : entries) {
    M(e.row, e.col) += scale * e.value;
    if (e.row != e.col) M(e.col, e.row) += scale * e.value;
  }
}

}  // namespace

Eigen::MatrixXd LmiBlock::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size, size);
  fill_symmetric(M, constant, 1.0);
  for (const auto& t : terms) fill_symmetric(M, t.entries, x[static_cast<Eigen::Index>(t.var)]);
  return M;
}

Eigen::MatrixXd LmiBlock::constant_matrix() const {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size, size);
  fill_symmetric(M, constant, 1.0);
  return M;
}

std::vector<VarRange> VarLayout::ranges() const {
  std::vector<VarRange> out{{"A", a_offset, n * m}, {"b", b_offset, n}};
  if (gamma) out.push_back({"gamma", *gamma, 1});
  out.push_back({"tau", tau, 1});
  out.push_back({"s", s_offset, atoms});
  return out;
}

void SdpProblem::validate() const {
  if (static_cast<std::size_t>(objective.size()) != num_vars) {
    throw DimensionError("objective has " + std::to_string(objective.size()) + " entries for " +
                         std::to_string(num_vars) + " variables");
  }
  auto check_entries = [](const std::vector<SymEntry>& es, int size, std::size_t block) {
    for (const auto& e : es) {
      if (e.row < 0 || e.col < 0 || e.row >= size || e.col > e.row || !std::isfinite(e.value)) {
        throw DimensionError("block " + std::to_string(block) + " has an invalid entry (" + std::to_string(e.row) +
                             ", " + std::to_string(e.col) + ")");
      }
    }
  };
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& blk = blocks[j];
    if (blk.size <= 0) throw DimensionError("block " + std::to_string(j) + " has non-positive size");
    check_entries(blk.constant, blk.size, j);
    std::size_t prev = 0;
    bool first = true;
    for (const auto& t : blk.terms) {
      if (t.var >= num_vars) throw DimensionError("block " + std::to_string(j) + " references variable out of range");
      if (!first && t.var <= prev) throw DimensionError("block " + std::to_string(j) + " terms not strictly sorted");
      prev = t.var;
      first = false;
      check_entries(t.entries, blk.size, j);
    }
  }
}

std::vector<int> SdpProblem::block_sizes() const {
  std::vector<int> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.size);
  return out;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::numerical: return "numerical";
  }
  return "unknown";
}

SolutionMetrics evaluate_solution(const SdpProblem& problem, const Eigen::VectorXd& x,
                                  const std::vector<Eigen::MatrixXd>& slack, const std::vector<Eigen::MatrixXd>& dual) {
  if (slack.size() != problem.blocks.size() || dual.size() != problem.blocks.size()) {
    throw DimensionError("slack/dual block count does not match the problem");
  }
  SolutionMetrics out;
  out.objective_value = problem.objective.dot(x);
  Eigen::VectorXd At = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.num_vars));
  double m0_norm2 = 0.0;
  double rp2 = 0.0;
  double gap = 0.0;
  double dobj = 0.0;
  for (std::size_t j = 0; j < problem.blocks.size(); ++j) {
    const auto& blk = problem.blocks[j];
    const Eigen::MatrixXd M0 = blk.constant_matrix();
    m0_norm2 += M0.squaredNorm();
    rp2 += (blk.evaluate(x) - slack[j]).squaredNorm();
    gap += (slack[j].cwiseProduct(dual[j])).sum();
    dobj -= (M0.cwiseProduct(dual[j])).sum();
    for (const auto& t : blk.terms) {
      double acc = 0.0;
      for (const auto& e : t.entries) acc += (e.row == e.col ? 1.0 : 2.0) * e.value * dual[j](e.row, e.col);
      At[static_cast<Eigen::Index>(t.var)] += acc;
    }
  }
  out.dual_objective_value = dobj;
  out.duality_gap = gap / (1.0 + std::abs(out.objective_value) + std::abs(dobj));
  out.primal_residual = std::sqrt(rp2) / (1.0 + std::sqrt(m0_norm2));
  out.dual_residual = (problem.objective - At).norm() / (1.0 + problem.objective.norm());
  return out;
}

void write_sparse(std::ostream& os, const SdpProblem& problem) {
  const auto& l = problem.layout;
  os << "# drcvar-sdp 1\n";
  os << "# vars " << problem.num_vars << "\n";
  os << "# blocks";
  for (const auto& b : problem.blocks) os << ' ' << b.size;
  os << "\n# layout " << l.n << ' ' << l.m << ' ' << l.atoms << ' ' << (l.gamma ? 1 : 0) << "\n";
  os << std::setprecision(17);
  for (Eigen::Index k = 0; k < problem.objective.size(); ++k) {
    if (problem.objective[k] != 0.0) os << "0 0 0 " << (k + 1) << ' ' << problem.objective[k] << '\n';
  }
  for (std::size_t j = 0; j < problem.blocks.size(); ++j) {
    const auto& blk = problem.blocks[j];
    for (const auto& e : blk.constant) os << (j + 1) << ' ' << (e.row + 1) << ' ' << (e.col + 1) << " 0 " << e.value << '\n';
    for (const auto& t : blk.terms) {
      for (const auto& e : t.entries) {
        os << (j + 1) << ' ' << (e.row + 1) << ' ' << (e.col + 1) << ' ' << (t.var + 1) << ' ' << e.value << '\n';
      }
    }
  }
}

SdpProblem read_sparse(std::istream& is) {
  SdpProblem p;
  std::vector<BlockBuilder> builders;
  std::string line;
  std::size_t lineno = 0;
  bool have_vars = false;
  auto fail = [&](const std::string& what) { return DataError("sparse dump line " + std::to_string(lineno) + ": " + what); };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "vars") {
        ls >> p.num_vars;
        p.objective = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars));
        have_vars = true;
      } else if (key == "blocks") {
        int s = 0;
        while (ls >> s) builders.emplace_back(s);
      } else if (key == "layout") {
        std::size_t n = 0, m = 0, atoms = 0;
        int g = 0;
        ls >> n >> m >> atoms >> g;
        p.layout = make_layout(n, m, atoms, g != 0);
      }
      continue;
    }
    if (!have_vars) throw fail("entry before '# vars' header");
    long block = 0, row = 0, col = 0, var = 0;
    double value = 0.0;
    if (!(ls >> block >> row >> col >> var >> value)) throw fail("expected 'block row col var value'");
    if (var < 0 || static_cast<std::size_t>(var) > p.num_vars) throw fail("variable index out of range");
    if (block == 0) {
      if (var == 0) throw fail("objective line needs a variable index");
      p.objective[var - 1] = value;
      continue;
    }
    if (block < 1 || static_cast<std::size_t>(block) > builders.size()) throw fail("block index out of range");
    auto& b = builders[static_cast<std::size_t>(block - 1)];
    if (var == 0) {
      b.constant(static_cast<int>(row - 1), static_cast<int>(col - 1), value);
    } else {
      b.coeff(static_cast<std::size_t>(var - 1), static_cast<int>(row - 1), static_cast<int>(col - 1), value);
    }
  }
  for (auto& b : builders) p.blocks.push_back(std::move(b).build());
  p.validate();
  return p;
}

double default_strict_margin(const EmpiricalDistribution& dist) {
  return 1e-9 * (1.0 + dist.atoms().lpNorm<Eigen::Infinity>());
}

namespace {

SdpProblem assemble_drcvar_sdp(const EmpiricalDistribution& dist, const RiskSpec& spec, double strict_margin,
                               bool centered) {
  if (!(spec.radius > 0.0)) {
    throw std::invalid_argument("build_drcvar_sdp requires radius > 0; use the nominal problem for radius 0");
  }
  if (!(strict_margin >= 0.0)) throw std::invalid_argument("strict_margin must be >= 0");

  const std::size_t n = dist.latent_dim();
  const std::size_t m = dist.observation_dim();
  const std::size_t d = n + m;
  const std::size_t N = dist.size();
  SdpProblem p;
  p.layout = make_layout(n, m, N, true);
  p.num_vars = layout_size(p.layout);
  const auto& L = p.layout;
  const std::size_t gamma = *L.gamma;

  p.objective = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars));
  p.objective[static_cast<Eigen::Index>(L.tau)] = 1.0;
  p.objective[static_cast<Eigen::Index>(gamma)] = spec.radius * spec.radius / spec.alpha;
  for (std::size_t i = 0; i < N; ++i) {
    p.objective[static_cast<Eigen::Index>(L.s_offset + i)] = 1.0 / (spec.alpha * static_cast<double>(N));
  }

  const int di = static_cast<int>(d);
  const int ni = static_cast<int>(n);

  // Writes F = [-I_n, A] with its top-left corner at (row0, col0).
  auto put_F = [&](BlockBuilder& b, int row0, int col0) {
    for (int i = 0; i < ni; ++i) {
      b.constant(row0 + i, col0 + i, -1.0);
      for (std::size_t k = 0; k < m; ++k) {
        b.coeff(L.a_index(static_cast<std::size_t>(i), k), row0 + i, col0 + ni + static_cast<int>(k), 1.0);
      }
    }
  };

  {
    BlockBuilder b(di + ni);
    for (int j = 0; j < di; ++j) {
      b.coeff(gamma, j, j, 1.0);
      b.constant(j, j, -strict_margin);
    }
    for (int i = 0; i < ni; ++i) b.constant(di + i, di + i, 1.0 - strict_margin);
    put_F(b, di, 0);
    p.blocks.push_back(std::move(b).build());
  }

  for (std::size_t a = 0; a < N; ++a) {
    const Eigen::VectorXd z = dist.atom(a);
    BlockBuilder b(1 + di + ni);
    b.coeff(L.tau, 0, 0, 1.0);
    b.coeff(L.s_offset + a, 0, 0, 1.0);
    if (!centered) b.coeff(gamma, 0, 0, z.squaredNorm());
    for (int j = 0; j < di; ++j) {
      if (!centered) b.coeff(gamma, 1 + j, 0, z[j]);
      b.coeff(gamma, 1 + j, 1 + j, 1.0);
    }
    for (int i = 0; i < ni; ++i) {
      const int row = 1 + di + i;
      b.coeff(L.b_offset + static_cast<std::size_t>(i), row, 0, -1.0);
      b.constant(row, row, 1.0);
      if (centered) {
        // -(F z + b) in the first column
        b.constant(row, 0, z[i]);
        for (std::size_t k = 0; k < m; ++k) {
          b.coeff(L.a_index(static_cast<std::size_t>(i), k), row, 0, -z[ni + static_cast<int>(k)]);
        }
      }
    }
    put_F(b, 1 + di, 1);
    p.blocks.push_back(std::move(b).build());
  }

  p.blocks.push_back(scalar_block(gamma));
  for (std::size_t a = 0; a < N; ++a) p.blocks.push_back(scalar_block(L.s_offset + a));
  p.validate();
  return p;
}

}  // namespace

SdpProblem build_drcvar_sdp(const EmpiricalDistribution& dist, const RiskSpec& spec, double strict_margin) {
  return assemble_drcvar_sdp(dist, spec, strict_margin, false);
}

SdpProblem build_drcvar_sdp_centered(const EmpiricalDistribution& dist, const RiskSpec& spec, double strict_margin) {
  return assemble_drcvar_sdp(dist, spec, strict_margin, true);
}

SdpProblem build_nominal_cvar_sdp(const EmpiricalDistribution& dist, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  const std::size_t n = dist.latent_dim();
  const std::size_t m = dist.observation_dim();
  const std::size_t N = dist.size();
  SdpProblem p;
  p.layout = make_layout(n, m, N, false);
  p.num_vars = layout_size(p.layout);
  const auto& L = p.layout;

  p.objective = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars));
  p.objective[static_cast<Eigen::Index>(L.tau)] = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    p.objective[static_cast<Eigen::Index>(L.s_offset + i)] = 1.0 / (alpha * static_cast<double>(N));
  }

  for (std::size_t a = 0; a < N; ++a) {
    const Eigen::VectorXd x = dist.latent(a);
    const Eigen::VectorXd y = dist.observation(a);
    BlockBuilder b(1 + static_cast<int>(n));
    b.coeff(L.tau, 0, 0, 1.0);
    b.coeff(L.s_offset + a, 0, 0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int row = 1 + static_cast<int>(i);
      b.constant(row, 0, x[static_cast<Eigen::Index>(i)]);
      b.coeff(L.b_offset + i, row, 0, -1.0);
      for (std::size_t k = 0; k < m; ++k) b.coeff(L.a_index(i, k), row, 0, -y[static_cast<Eigen::Index>(k)]);
      b.constant(row, row, 1.0);
    }
    p.blocks.push_back(std::move(b).build());
  }
  for (std::size_t a = 0; a < N; ++a) p.blocks.push_back(scalar_block(L.s_offset + a));
  p.validate();
  return p;
}

ExtractedSolution extract_estimator(const SdpProblem& problem, const SdpSolution& sol) {
  if (sol.status != SolveStatus::optimal) {
    throw SolverError("cannot extract an estimator from a solve with status " + to_string(sol.status) +
                      (sol.message.empty() ? "" : ": " + sol.message));
  }
  if (static_cast<std::size_t>(sol.x.size()) != problem.num_vars) throw DimensionError("solution vector has wrong length");
  const auto& L = problem.layout;
  const auto n = static_cast<Eigen::Index>(L.n);
  const auto m = static_cast<Eigen::Index>(L.m);
  Eigen::MatrixXd A = Eigen::Map<const Eigen::MatrixXd>(sol.x.data() + L.a_offset, n, m);
  Eigen::VectorXd b = sol.x.segment(static_cast<Eigen::Index>(L.b_offset), n);
  const double gamma = L.gamma ? sol.x[static_cast<Eigen::Index>(*L.gamma)] : 0.0;
  const double tau = sol.x[static_cast<Eigen::Index>(L.tau)];
  Eigen::VectorXd s = sol.x.segment(static_cast<Eigen::Index>(L.s_offset), static_cast<Eigen::Index>(L.atoms));

  std::ostringstream why;
  if (gamma < -1e-9) why << "gamma = " << gamma << " < -1e-9; ";
  if (s.size() > 0 && s.minCoeff() < -1e-9) why << "min s = " << s.minCoeff() << " < -1e-9; ";

  double worst = std::numeric_limits<double>::infinity();
  std::size_t worst_block = 0;
  for (std::size_t j = 0; j < problem.blocks.size(); ++j) {
    const Eigen::MatrixXd M = problem.blocks[j].evaluate(sol.x);
    const double scale = std::max(1.0, M.lpNorm<Eigen::Infinity>());
    const double lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues()(0) / scale;
    if (lam < worst) {
      worst = lam;
      worst_block = j;
    }
  }
  if (worst < -1e-7) why << "block " << worst_block << " has relative eigenvalue " << worst << " < -1e-7; ";
  if (!why.str().empty()) throw SolverError("solution failed validation: " + why.str());

  return ExtractedSolution{AffineEstimator(std::move(A), std::move(b)), gamma, tau, std::move(s), worst};
}

}  // namespace drcvar
