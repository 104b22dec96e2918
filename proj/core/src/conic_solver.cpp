#include "drcvar/conic_solver.hpp"

#include "drcvar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace drcvar {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kUnboundedNorm = 1e8;
constexpr double kTinyStep = 1e-9;
constexpr std::size_t kStallLimit = 5;
// Iterates within this factor of every tolerance are returned as optimal
// (reduced accuracy) when progress stops before full accuracy is reached.
constexpr double kReducedFactor = 100.0;
constexpr double kSlowStep = 0.1;
constexpr std::size_t kSlowLimit = 5;

// Entry weight in  <M, B> = sum_e 2 w_e B(row, col):  off-diagonal entries
// stand for a symmetric pair, diagonal ones for themselves.
double weight(const SymEntry& e) { return e.row == e.col ? 0.5 * e.value : e.value; }

void add_symmetric(MatrixXd& M, const std::vector<SymEntry>& entries, double scale) {
  for (const auto& e : entries) {
    M(e.row, e.col) += scale * e.value;
    if (e.row != e.col) M(e.col, e.row) += scale * e.value;
  }
}

double inner(const std::vector<SymEntry>& entries, const MatrixXd& B) {
  double acc = 0.0;
  for (const auto& e : entries) acc += 2.0 * weight(e) * B(e.row, e.col);
  return acc;
}

MatrixXd sym(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// Largest step t in [0, inf) keeping L (I + t L^{-1} dX L^{-T}) L' >= 0.
double max_step(const MatrixXd& Linv, const MatrixXd& dX) {
  if (dX.rows() == 1) {
    const double r = Linv(0, 0) * Linv(0, 0) * dX(0, 0);
    return r < 0.0 ? -1.0 / r : std::numeric_limits<double>::infinity();
  }
  const MatrixXd T = sym(Linv * dX * Linv.transpose());
  const double lam = Eigen::SelfAdjointEigenSolver<MatrixXd>(T, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return lam < 0.0 ? -1.0 / lam : std::numeric_limits<double>::infinity();
}

// Per-block Nesterov-Todd scaling  G^{-1} S G^{-T} = G' Y G = diag(d).
struct Scaling {
  MatrixXd G;
  MatrixXd Ginv;  // G^{-1}
  MatrixXd P;     // W^{-1} = G^{-T} G^{-1}
  VectorXd d;
  MatrixXd LSinv;
  MatrixXd LYinv;
};

bool compute_scaling(const MatrixXd& S, const MatrixXd& Y, Scaling& out) {
  const auto s = S.rows();
  Eigen::LLT<MatrixXd> ls(S);
  Eigen::LLT<MatrixXd> ly(Y);
  if (ls.info() != Eigen::Success || ly.info() != Eigen::Success) return false;
  const MatrixXd LS = ls.matrixL();
  const MatrixXd LY = ly.matrixL();
  out.LSinv = ls.matrixL().solve(MatrixXd::Identity(s, s));
  out.LYinv = ly.matrixL().solve(MatrixXd::Identity(s, s));
  if (s == 1) {
    out.d = VectorXd::Constant(1, std::sqrt(S(0, 0) * Y(0, 0)));
    const double g = std::sqrt(std::sqrt(S(0, 0) / Y(0, 0)));
    out.G = MatrixXd::Constant(1, 1, g);
    out.Ginv = MatrixXd::Constant(1, 1, 1.0 / g);
  } else {
    Eigen::BDCSVD<MatrixXd> svd(LY.transpose() * LS, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.d = svd.singularValues();
    if (!(out.d.minCoeff() > 0.0) || !out.d.allFinite()) return false;
    out.G = LS * svd.matrixV() * out.d.cwiseSqrt().cwiseInverse().asDiagonal();
    out.Ginv = out.d.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * out.LSinv;
  }
  out.P = out.Ginv.transpose() * out.Ginv;
  return out.P.allFinite();
}

struct FlatEntry {
  int row = 0;
  int col = 0;
  double w = 0.0;
};

// Block terms flattened for the Schur complement loop; term u owns
// entries[start[u], start[u + 1]).
struct FlatBlock {
  std::vector<Eigen::Index> var;
  std::vector<int> start;
  std::vector<FlatEntry> entries;
};

class Solver {
 public:
  Solver(const SdpProblem& p, const SolverSettings& s, const IterationObserver& obs)
      : p_(p), set_(s), obs_(obs), K_(static_cast<Eigen::Index>(p.num_vars)), nb_(p.blocks.size()) {}

  SdpSolution run();

 private:
  void initialize();
  void compute_residuals();
  bool build_schur();
  bool solve_schur(const VectorXd& rhs, VectorXd& dx) const;
  // Direction for the scaled complementarity right-hand sides `rc`.
  bool direction(const std::vector<MatrixXd>& rc, VectorXd& dx, std::vector<MatrixXd>& dS,
                 std::vector<MatrixXd>& dY) const;
  void step_lengths(const std::vector<MatrixXd>& dS, const std::vector<MatrixXd>& dY, double& ap, double& ad) const;
  SdpSolution finish(SolveStatus status, std::string message);
  // max over the three stopping ratios; <= 1 means optimal.
  double merit() const;
  void remember_if_best();
  // Falls back to the best iterate seen when it meets the reduced tolerances.
  SdpSolution finish_or_best(SolveStatus status, std::string message);

  const SdpProblem& p_;
  const SolverSettings& set_;
  const IterationObserver& obs_;
  Eigen::Index K_;
  std::size_t nb_;

  std::vector<MatrixXd> M0_;
  double m0_norm_ = 0.0;
  double c_norm_ = 0.0;
  double total_size_ = 0.0;
  std::vector<bool> pinned_;  // variables absent from every block
  std::vector<FlatBlock> flat_;

  VectorXd x_;
  std::vector<MatrixXd> S_;
  std::vector<MatrixXd> Y_;
  std::vector<Scaling> sc_;

  // Residuals at the current iterate.
  std::vector<MatrixXd> Rp_;
  VectorXd rd_;
  VectorXd AtY_;
  double pobj_ = 0.0;
  double dobj_ = 0.0;
  double gap_ = 0.0;
  double pres_ = 0.0;
  double dres_ = 0.0;
  double rel_gap_ = 0.0;

  struct Snapshot {
    double merit = std::numeric_limits<double>::infinity();
    std::size_t iteration = 0;
    VectorXd x;
    std::vector<MatrixXd> S;
    std::vector<MatrixXd> Y;
  } best_;

  MatrixXd H_;
  Eigen::LLT<MatrixXd> Hllt_;
  VectorXd Hscale_;
  std::size_t iter_ = 0;
};

void Solver::initialize() {
  M0_.resize(nb_);
  flat_.resize(nb_);
  for (std::size_t j = 0; j < nb_; ++j) {
    auto& fb = flat_[j];
    fb.start.push_back(0);
    for (const auto& t : p_.blocks[j].terms) {
      fb.var.push_back(static_cast<Eigen::Index>(t.var));
      for (const auto& e : t.entries) fb.entries.push_back({e.row, e.col, weight(e)});
      fb.start.push_back(static_cast<int>(fb.entries.size()));
    }
  }
  VectorXd var_norm2 = VectorXd::Zero(K_);
  pinned_.assign(static_cast<std::size_t>(K_), true);
  for (std::size_t j = 0; j < nb_; ++j) {
    M0_[j] = p_.blocks[j].constant_matrix();
    m0_norm_ += M0_[j].squaredNorm();
    total_size_ += p_.blocks[j].size;
    for (const auto& t : p_.blocks[j].terms) {
      pinned_[t.var] = false;
      for (const auto& e : t.entries) var_norm2[static_cast<Eigen::Index>(t.var)] += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    }
  }
  m0_norm_ = std::sqrt(m0_norm_);
  c_norm_ = p_.objective.norm();

  const VectorXd var_norm = var_norm2.cwiseSqrt();
  double dual_ratio = 0.0;
  for (Eigen::Index k = 0; k < K_; ++k) {
    dual_ratio = std::max(dual_ratio, (1.0 + std::abs(p_.objective[k])) / (1.0 + var_norm[k]));
  }
  const double max_var_norm = K_ > 0 ? var_norm.maxCoeff() : 0.0;

  x_ = VectorXd::Zero(K_);
  S_.resize(nb_);
  Y_.resize(nb_);
  for (std::size_t j = 0; j < nb_; ++j) {
    const auto s = p_.blocks[j].size;
    const double sd = static_cast<double>(s);
    const double zeta = std::max({10.0, std::sqrt(sd), sd * dual_ratio});
    const double eta = std::max({10.0, std::sqrt(sd), max_var_norm, M0_[j].norm()});
    S_[j] = eta * MatrixXd::Identity(s, s);
    Y_[j] = zeta * MatrixXd::Identity(s, s);
  }
  sc_.resize(nb_);
}

void Solver::compute_residuals() {
  Rp_.resize(nb_);
  AtY_ = VectorXd::Zero(K_);
  double rp2 = 0.0;
  gap_ = 0.0;
  dobj_ = 0.0;
  for (std::size_t j = 0; j < nb_; ++j) {
    const auto& blk = p_.blocks[j];
    MatrixXd R = M0_[j] - S_[j];
    for (const auto& t : blk.terms) {
      add_symmetric(R, t.entries, x_[static_cast<Eigen::Index>(t.var)]);
      AtY_[static_cast<Eigen::Index>(t.var)] += inner(t.entries, Y_[j]);
    }
    rp2 += R.squaredNorm();
    Rp_[j] = std::move(R);
    gap_ += S_[j].cwiseProduct(Y_[j]).sum();
    dobj_ -= M0_[j].cwiseProduct(Y_[j]).sum();
  }
  rd_ = p_.objective - AtY_;
  pobj_ = p_.objective.dot(x_);
  pres_ = std::sqrt(rp2) / (1.0 + m0_norm_);
  dres_ = rd_.norm() / (1.0 + c_norm_);
  rel_gap_ = gap_ / (1.0 + std::abs(pobj_) + std::abs(dobj_));
}

bool Solver::build_schur() {
  H_ = MatrixXd::Zero(K_, K_);
  double* h = H_.data();
  for (std::size_t j = 0; j < nb_; ++j) {
    const FlatBlock& fb = flat_[j];
    const MatrixXd& P = sc_[j].P;
    const auto ld = P.rows();
    const std::size_t nt = fb.var.size();
    for (std::size_t u = 0; u < nt; ++u) {
      const Eigen::Index ku = fb.var[u];
      double* hcol = h + ku * K_;
      for (int e = fb.start[u]; e < fb.start[u + 1]; ++e) {
        const FlatEntry& E = fb.entries[static_cast<std::size_t>(e)];
        // P is symmetric, so P(E.col, .) and P(., E.row) are both columns.
        const double* pc = P.data() + E.col * ld;
        const double* pr = P.data() + E.row * ld;
        const double we = 2.0 * E.w;
        for (std::size_t v = u; v < nt; ++v) {
          double acc = 0.0;
          for (int f = fb.start[v]; f < fb.start[v + 1]; ++f) {
            const FlatEntry& F = fb.entries[static_cast<std::size_t>(f)];
            acc += F.w * (pc[F.row] * pr[F.col] + pc[F.col] * pr[F.row]);
          }
          hcol[fb.var[v]] += we * acc;
        }
      }
    }
  }
  H_ = H_.selfadjointView<Eigen::Lower>();
  for (Eigen::Index k = 0; k < K_; ++k) {
    if (pinned_[static_cast<std::size_t>(k)]) H_(k, k) = 1.0;
  }

  // Symmetric diagonal equilibration, then Cholesky with growing regularization.
  Hscale_ = H_.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
  MatrixXd Hs = Hscale_.asDiagonal() * H_ * Hscale_.asDiagonal();
  double reg = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    if (reg > 0.0) Hs.diagonal().array() += reg;
    Hllt_.compute(Hs);
    if (Hllt_.info() == Eigen::Success) return true;
    reg = reg == 0.0 ? 1e-14 : reg * 100.0;
  }
  return false;
}

bool Solver::solve_schur(const VectorXd& rhs, VectorXd& dx) const {
  dx = Hscale_.asDiagonal() * Hllt_.solve(Hscale_.asDiagonal() * rhs);
  for (Eigen::Index k = 0; k < K_; ++k) {
    if (pinned_[static_cast<std::size_t>(k)]) dx[k] = 0.0;
  }
  return dx.allFinite();
}

bool Solver::direction(const std::vector<MatrixXd>& rc, VectorXd& dx, std::vector<MatrixXd>& dS,
                       std::vector<MatrixXd>& dY) const {
  // dY = G^{-T} rc G^{-1} - P dS P with dS = sum dx_k M_k + Rp, and
  // <M_k, dY> = rd_k gives  H dx = <M_k, G^{-T} rc G^{-1} - P Rp P> - rd_k.
  std::vector<MatrixXd> Rc(nb_);
  VectorXd rhs = -rd_;
  for (std::size_t j = 0; j < nb_; ++j) {
    const auto& s = sc_[j];
    Rc[j] = sym(s.Ginv.transpose() * rc[j] * s.Ginv);
    const MatrixXd B = Rc[j] - sym(s.P * Rp_[j] * s.P);
    for (const auto& t : p_.blocks[j].terms) rhs[static_cast<Eigen::Index>(t.var)] += inner(t.entries, B);
  }
  if (!solve_schur(rhs, dx)) return false;
  dS.resize(nb_);
  dY.resize(nb_);
  for (std::size_t j = 0; j < nb_; ++j) {
    MatrixXd D = Rp_[j];
    for (const auto& t : p_.blocks[j].terms) add_symmetric(D, t.entries, dx[static_cast<Eigen::Index>(t.var)]);
    dY[j] = sym(Rc[j] - sc_[j].P * D * sc_[j].P);
    dS[j] = std::move(D);
  }
  return true;
}

void Solver::step_lengths(const std::vector<MatrixXd>& dS, const std::vector<MatrixXd>& dY, double& ap,
                          double& ad) const {
  ap = std::numeric_limits<double>::infinity();
  ad = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < nb_; ++j) {
    ap = std::min(ap, max_step(sc_[j].LSinv, dS[j]));
    ad = std::min(ad, max_step(sc_[j].LYinv, dY[j]));
  }
}

SdpSolution Solver::finish(SolveStatus status, std::string message) {
  SdpSolution out;
  out.status = status;
  out.x = x_;
  out.slack = S_;
  out.dual = Y_;
  out.objective_value = pobj_;
  out.dual_objective_value = dobj_;
  out.duality_gap = rel_gap_;
  out.primal_residual = pres_;
  out.dual_residual = dres_;
  out.iterations = iter_;
  out.message = std::move(message);
  return out;
}

double Solver::merit() const {
  return std::max({rel_gap_ / set_.tol_gap, pres_ / set_.tol_feas, dres_ / set_.tol_feas});
}

void Solver::remember_if_best() {
  const double m = merit();
  if (!(m < best_.merit)) return;
  best_.merit = m;
  best_.iteration = iter_;
  best_.x = x_;
  best_.S = S_;
  best_.Y = Y_;
}

SdpSolution Solver::finish_or_best(SolveStatus status, std::string message) {
  const std::size_t iterations = iter_;
  const bool reduced = best_.merit <= kReducedFactor;
  if (!reduced && status != SolveStatus::max_iter) {
    compute_residuals();
    return finish(status, std::move(message));
  }
  if (std::isfinite(best_.merit)) {
    x_ = best_.x;
    S_ = best_.S;
    Y_ = best_.Y;
  }
  compute_residuals();
  if (!reduced) return finish(status, std::move(message));
  auto out = finish(SolveStatus::optimal, "reduced accuracy (" + message + "); best iterate " +
                                              std::to_string(best_.iteration));
  out.iterations = iterations;
  return out;
}

SdpSolution Solver::run() {
  p_.validate();
  set_.validate();
  initialize();
  for (Eigen::Index k = 0; k < K_; ++k) {
    if (pinned_[static_cast<std::size_t>(k)] && p_.objective[k] != 0.0) {
      compute_residuals();
      return finish(SolveStatus::unbounded, "variable " + std::to_string(k) +
                                                " has nonzero cost but appears in no constraint");
    }
  }

  std::size_t stalled = 0;
  std::size_t slow = 0;
  for (iter_ = 0;; ++iter_) {
    compute_residuals();
    if (!std::isfinite(gap_) || !std::isfinite(pres_) || !std::isfinite(dres_)) {
      return finish_or_best(SolveStatus::numerical, "non-finite residuals");
    }
    if (rel_gap_ <= set_.tol_gap && pres_ <= set_.tol_feas && dres_ <= set_.tol_feas) {
      return finish(SolveStatus::optimal, "");
    }
    remember_if_best();

    // Approximate Farkas certificates.
    if (dobj_ > 0.0 && AtY_.norm() <= set_.tol_infeas * dobj_) {
      return finish(SolveStatus::infeasible, "dual ray: ||A*(Y)|| / -<M0,Y> below tolerance");
    }
    if (pobj_ < 0.0 && x_.norm() > kUnboundedNorm) {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < nb_; ++j) {
        MatrixXd D = MatrixXd::Zero(p_.blocks[j].size, p_.blocks[j].size);
        for (const auto& t : p_.blocks[j].terms) add_symmetric(D, t.entries, x_[static_cast<Eigen::Index>(t.var)] / -pobj_);
        worst = std::min(worst, Eigen::SelfAdjointEigenSolver<MatrixXd>(D, Eigen::EigenvaluesOnly).eigenvalues()(0));
      }
      if (worst >= -set_.tol_infeas) return finish(SolveStatus::unbounded, "primal ray: sum x_k M_k >= 0 with c'x < 0");
    }
    if (iter_ >= set_.max_iter) return finish_or_best(SolveStatus::max_iter, "iteration limit reached");

    for (std::size_t j = 0; j < nb_; ++j) {
      if (!compute_scaling(S_[j], Y_[j], sc_[j])) {
        return finish_or_best(SolveStatus::numerical, "lost positive definiteness in block " + std::to_string(j));
      }
    }
    if (!build_schur()) return finish_or_best(SolveStatus::numerical, "Schur complement factorization failed");

    const double mu = gap_ / total_size_;

    // Predictor: rc = -diag(d).
    std::vector<MatrixXd> rc(nb_);
    for (std::size_t j = 0; j < nb_; ++j) rc[j] = MatrixXd((-sc_[j].d).asDiagonal());
    VectorXd dx;
    std::vector<MatrixXd> dS, dY;
    if (!direction(rc, dx, dS, dY)) return finish_or_best(SolveStatus::numerical, "non-finite predictor direction");
    double ap = 0.0, ad = 0.0;
    step_lengths(dS, dY, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double gap_aff = 0.0;
    for (std::size_t j = 0; j < nb_; ++j) gap_aff += (S_[j] + ap * dS[j]).cwiseProduct(Y_[j] + ad * dY[j]).sum();
    // Mehrotra exponent drops towards 1 after short predictor steps.
    const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap_, expon), 0.0, 1.0);
    const double fraction = std::min(set_.step_fraction, 0.9 + 0.09 * std::min(ap, ad));

    // Corrector with the second-order Mehrotra term.
    for (std::size_t j = 0; j < nb_; ++j) {
      const auto& s = sc_[j];
      const MatrixXd dSh = s.Ginv * dS[j] * s.Ginv.transpose();
      const MatrixXd dYh = s.G.transpose() * dY[j] * s.G;
      const MatrixXd cross = dSh * dYh + dYh * dSh;
      MatrixXd r(s.d.size(), s.d.size());
      for (Eigen::Index a = 0; a < r.rows(); ++a) {
        for (Eigen::Index b = 0; b < r.cols(); ++b) {
          const double diag = a == b ? 2.0 * (sigma * mu - s.d[a] * s.d[a]) : 0.0;
          r(a, b) = (diag - cross(a, b)) / (s.d[a] + s.d[b]);
        }
      }
      rc[j] = sym(r);
    }
    if (!direction(rc, dx, dS, dY)) return finish_or_best(SolveStatus::numerical, "non-finite corrector direction");
    step_lengths(dS, dY, ap, ad);
    ap = std::min(1.0, fraction * ap);
    ad = std::min(1.0, fraction * ad);

    x_ += ap * dx;
    for (std::size_t j = 0; j < nb_; ++j) {
      S_[j] = sym(S_[j] + ap * dS[j]);
      Y_[j] = sym(Y_[j] + ad * dY[j]);
    }

    if (obs_) obs_(IterationInfo{iter_, pobj_, dobj_, mu, pres_, dres_, ap, ad, sigma});

    stalled = (ap < kTinyStep && ad < kTinyStep) ? stalled + 1 : 0;
    slow = std::min(ap, ad) < kSlowStep ? slow + 1 : 0;
    if (stalled >= kStallLimit || (slow >= kSlowLimit && best_.merit <= kReducedFactor)) {
      ++iter_;
      compute_residuals();
      if (rel_gap_ <= set_.tol_gap && pres_ <= set_.tol_feas && dres_ <= set_.tol_feas) {
        return finish(SolveStatus::optimal, "");
      }
      remember_if_best();
      return finish_or_best(SolveStatus::numerical, "step lengths stalled");
    }
  }
}

}  // namespace

void SolverSettings::validate() const {
  if (!(tol_gap > 0.0) || !(tol_feas > 0.0) || !(tol_infeas > 0.0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  if (!(step_fraction > 0.0 && step_fraction < 1.0)) throw std::invalid_argument("step_fraction must lie in (0, 1)");
}

SdpSolution solve_sdp(const SdpProblem& problem, const SolverSettings& settings, const IterationObserver& observer) {
  Solver solver(problem, settings, observer);
  return solver.run();
}

}  // namespace drcvar
