#pragma once

// Mixed P2/P1 solver for the power-law Stokes systems on periodic meshes:
// the boundary-layer cell problem (shifted stress above y2 = 0, surface load on
// the interface) and the rough-channel problem (body force e1, no slip).

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roughwall/error.hpp"
#include "roughwall/fe_space.hpp"
#include "roughwall/mesh.hpp"
#include "roughwall/quadrature.hpp"
#include "roughwall/tensor.hpp"

namespace roughwall {

enum class Scheme { picard, newton, picard_then_newton };
enum class LidCondition { dirichlet_zero, dirichlet_affine, stress_free };
enum class ProblemKind { boundary_layer, channel };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::picard: return "picard";
    case Scheme::newton: return "newton";
    case Scheme::picard_then_newton: return "picard-then-newton";
  }
  return "?";
}

inline const char* to_string(LidCondition l) {
  switch (l) {
    case LidCondition::dirichlet_zero: return "dirichlet-zero";
    case LidCondition::dirichlet_affine: return "dirichlet-affine";
    case LidCondition::stress_free: return "stress-free";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "picard") return Scheme::picard;
  if (s == "newton") return Scheme::newton;
  if (s == "picard-then-newton") return Scheme::picard_then_newton;
  fail(ErrorKind::validation, "unknown scheme '" + s + "'");
}

inline LidCondition parse_lid(const std::string& s) {
  if (s == "dirichlet-zero") return LidCondition::dirichlet_zero;
  if (s == "dirichlet-affine") return LidCondition::dirichlet_affine;
  if (s == "stress-free") return LidCondition::stress_free;
  fail(ErrorKind::validation, "unknown lid condition '" + s + "'");
}

struct SolveOptions {
  double tol = 1e-9;
  int max_iter = 200;
  Scheme scheme = Scheme::picard_then_newton;
  /// Decreasing regularization values; empty means the default ladder ending at the law's delta.
  std::vector<double> delta_schedule;
  LidCondition lid = LidCondition::stress_free;
  /// Lid velocity for LidCondition::dirichlet_affine.
  Vec2 lid_velocity{};

  void validate() const {
    require(tol > 0.0, ErrorKind::validation, "tol must be > 0");
    require(max_iter > 0, ErrorKind::validation, "max_iter must be > 0");
    for (std::size_t i = 0; i < delta_schedule.size(); ++i) {
      require(delta_schedule[i] >= 0.0, ErrorKind::validation, "delta_schedule entries must be >= 0");
      if (i > 0)
        require(delta_schedule[i] < delta_schedule[i - 1], ErrorKind::validation,
                "delta_schedule must be strictly decreasing");
    }
  }

  /// Schedule actually used for a law: the configured one, or (for p < 2) 1e-2, 1e-3, ... down to delta.
  std::vector<double> schedule_for(const PowerLaw& law) const {
    if (!delta_schedule.empty()) {
      require(delta_schedule.back() == law.delta_reg(), ErrorKind::validation,
              "delta_schedule must end at the law's delta_reg");
      return delta_schedule;
    }
    std::vector<double> s;
    if (law.p() < 2.0)
      for (double d = 1e-2; d > law.delta_reg() * 1.5; d *= 0.1) s.push_back(d);
    s.push_back(law.delta_reg());
    return s;
  }
};

struct SolveStats {
  std::vector<double> residual_history;
  std::vector<double> stage_deltas;
  std::vector<int> stage_iterations;
  int iterations = 0;
  int newton_steps = 0;
  int picard_steps = 0;
  double seconds = 0.0;
  double final_residual = 0.0;
};

struct DiscreteField {
  std::shared_ptr<const FESpace> space;
  /// Interleaved (u1, u2) per quadratic node.
  std::vector<double> velocity;
  /// One value per vertex node.
  std::vector<double> pressure;
  ProblemKind problem = ProblemKind::boundary_layer;
  PowerLaw law{2.0};
  Sym2 A{};
  SolveOptions options{};
  SolveStats stats{};

  const Mesh& mesh() const { return space->mesh(); }
  Vec2 node_velocity(std::size_t node) const { return {velocity[2 * node], velocity[2 * node + 1]}; }
};

namespace detail {

/// Symmetric gradient of the test function e_c * phi with gradient d.
inline Sym2 test_strain(int c, const Vec2& d) {
  return c == 0 ? Sym2{d.x, 0.5 * d.y, 0.0} : Sym2{0.0, 0.5 * d.x, d.y};
}

inline double test_div(int c, const Vec2& d) { return c == 0 ? d.x : d.y; }

}  // namespace detail

/// Residual and Jacobian of the discrete weak form. Unknown layout:
/// [velocity (2 per node) | pressure (1 per vertex node) | mean multiplier].
class PowerStokesSystem {
 public:
  PowerStokesSystem(std::shared_ptr<const FESpace> space, ProblemKind kind, const PowerLaw& law, const Sym2& A,
                    const SolveOptions& opts)
      : space_(std::move(space)), kind_(kind), law_(law), A_(A), opts_(opts) {
    const std::size_t nn = space_->num_nodes();
    nu_ = 2 * nn;
    np_ = space_->num_pressure_dofs();
    fixed_.assign(nu_, false);
    fixed_value_.assign(nu_, 0.0);
    for (std::size_t i = 0; i < nn; ++i) {
      const bool bottom = space_->has_flag(i, NodeFlag::bottom);
      const bool lid = space_->has_flag(i, NodeFlag::lid);
      if (bottom) fixed_[2 * i] = fixed_[2 * i + 1] = true;
      if (!lid) continue;
      if (kind_ == ProblemKind::channel || opts_.lid == LidCondition::dirichlet_zero) {
        fixed_[2 * i] = fixed_[2 * i + 1] = true;
      } else if (opts_.lid == LidCondition::dirichlet_affine) {
        fixed_[2 * i] = fixed_[2 * i + 1] = true;
        if (!bottom) {
          fixed_value_[2 * i] = opts_.lid_velocity.x;
          fixed_value_[2 * i + 1] = opts_.lid_velocity.y;
        }
      } else {
        fixed_[2 * i + 1] = true;
      }
    }
    mass_.assign(np_, 0.0);
    for (std::size_t t = 0; t < space_->mesh().num_triangles(); ++t) {
      const double a = space_->geometry(t).area;
      for (int k = 0; k < 3; ++k) mass_[static_cast<std::size_t>(space_->pressure_node(t, k))] += a / 3.0;
    }
    area_ = 0.0;
    for (double m : mass_) area_ += m;
  }

  std::size_t size() const { return nu_ + np_ + 1; }
  std::size_t num_velocity() const { return nu_; }
  std::size_t num_pressure() const { return np_; }
  const std::vector<bool>& fixed() const { return fixed_; }
  const PowerLaw& law() const { return law_; }
  void set_law(const PowerLaw& law) { law_ = law; }
  double domain_area() const { return area_; }
  const std::vector<double>& pressure_mass() const { return mass_; }

  Eigen::VectorXd initial_state() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < nu_; ++i)
      if (fixed_[i]) x[static_cast<Eigen::Index>(i)] = fixed_value_[i];
    return x;
  }

  /// Shift tensor and its stress for region r.
  Sym2 shift(Region r) const { return (kind_ == ProblemKind::boundary_layer && r == Region::above) ? A_ : Sym2{}; }

  /// Interface traction g: the weak form carries -int g.phi on y2 = 0.
  Vec2 interface_load() const {
    if (kind_ != ProblemKind::boundary_layer) return {};
    const Sym2 s = stress_or_zero(A_);
    return s * Vec2{0.0, 1.0};
  }

  Vec2 body_force() const { return kind_ == ProblemKind::channel ? Vec2{1.0, 0.0} : Vec2{}; }

  enum class Linearization { newton, picard, frozen };

  /// Residual vector; fixed velocity rows are zero.
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(x.size());
    assemble(x, &r, nullptr, Linearization::picard, 1.0);
    for (std::size_t i = 0; i < nu_; ++i)
      if (fixed_[i]) r[static_cast<Eigen::Index>(i)] = 0.0;
    return r;
  }

  /// Jacobian (or a Picard / frozen-viscosity approximation) with identity rows on fixed dofs.
  Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& x, Linearization lin, double frozen_mu = 1.0) const {
    std::vector<Eigen::Triplet<double>> trip;
    assemble(x, nullptr, &trip, lin, frozen_mu);
    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
  }

 private:
  Sym2 stress_or_zero(const Sym2& a) const {
    if (law_.delta_reg() == 0.0 && law_.p() < 2.0 && dot(a, a) == 0.0) return {};
    return stress(a, law_);
  }

  void assemble(const Eigen::VectorXd& x, Eigen::VectorXd* r, std::vector<Eigen::Triplet<double>>* trip,
                Linearization lin, double frozen_mu) const {
    const Mesh& m = space_->mesh();
    const auto qp = quad::triangle_degree5();
    const Vec2 f = body_force();
    const Sym2 s_above = stress_or_zero(A_);
    const auto lam = static_cast<Eigen::Index>(nu_ + np_);
    if (trip) trip->reserve(m.num_triangles() * (144 + 2 * 36 + 3) + nu_ + 2 * np_);

    auto vdof = [&](int node, int c) { return static_cast<Eigen::Index>(2 * node + c); };
    auto pdof = [&](int node) { return static_cast<Eigen::Index>(nu_ + static_cast<std::size_t>(node)); };
    auto is_fixed = [&](Eigen::Index i) { return i < static_cast<Eigen::Index>(nu_) && fixed_[static_cast<std::size_t>(i)]; };
    auto push = [&](Eigen::Index i, Eigen::Index j, double v) {
      if (is_fixed(i) || is_fixed(j)) return;
      trip->emplace_back(i, j, v);
    };

    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const auto g = space_->geometry(t);
      const auto& nodes = space_->element_nodes(t);
      const Region region = m.regions[t];
      const Sym2 sh = shift(region);
      const Sym2 s0 = region == Region::above && kind_ == ProblemKind::boundary_layer ? s_above : Sym2{};
      double ke[12][12] = {};
      double be[3][12] = {};
      double ru[12] = {}, rp[3] = {};
      const double pe[3] = {x[pdof(nodes[0])], x[pdof(nodes[1])], x[pdof(nodes[2])]};
      for (const auto& q : qp) {
        const auto l = to_barycentric(q);
        const double w = 2.0 * g.area * q.w;
        const auto phi = P2Basis::values(l);
        const auto dphi = P2Basis::gradients(l, g);
        Grad2 du;
        for (int k = 0; k < 6; ++k) {
          const double u1 = x[vdof(nodes[k], 0)], u2 = x[vdof(nodes[k], 1)];
          du.g11 += u1 * dphi[k].x;
          du.g12 += u1 * dphi[k].y;
          du.g21 += u2 * dphi[k].x;
          du.g22 += u2 * dphi[k].y;
        }
        const Sym2 B = du.sym() + sh;
        const double pq = l[0] * pe[0] + l[1] * pe[1] + l[2] * pe[2];
        const double divu = du.div();
        if (r) {
          const Sym2 S = stress_or_zero(B) - s0;
          for (int k = 0; k < 6; ++k)
            for (int c = 0; c < 2; ++c) {
              const Sym2 E = detail::test_strain(c, dphi[k]);
              ru[2 * k + c] += w * (dot(S, E) - pq * detail::test_div(c, dphi[k]) - (c == 0 ? f.x : f.y) * phi[k]);
            }
          for (int a = 0; a < 3; ++a) rp[a] -= w * l[a] * divu;
        }
        if (trip) {
          StressTangent T;
          if (lin == Linearization::frozen) {
            T.mu = frozen_mu;
          } else if (lin == Linearization::picard) {
            T.mu = dot(B, B) == 0.0 && law_.delta_reg() == 0.0 ? 1.0 : effective_viscosity(B, law_);
          } else {
            T = stress_tangent(B, law_);
          }
          Sym2 E[12];
          for (int k = 0; k < 6; ++k)
            for (int c = 0; c < 2; ++c) E[2 * k + c] = detail::test_strain(c, dphi[k]);
          for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j) ke[i][j] += w * T.form(E[i], E[j]);
          for (int a = 0; a < 3; ++a)
            for (int k = 0; k < 6; ++k)
              for (int c = 0; c < 2; ++c) be[a][2 * k + c] -= w * l[a] * detail::test_div(c, dphi[k]);
        }
      }
      if (r) {
        for (int k = 0; k < 6; ++k)
          for (int c = 0; c < 2; ++c) (*r)[vdof(nodes[k], c)] += ru[2 * k + c];
        for (int a = 0; a < 3; ++a) (*r)[pdof(nodes[a])] += rp[a];
      }
      if (trip) {
        for (int i = 0; i < 12; ++i)
          for (int j = 0; j < 12; ++j) push(vdof(nodes[i / 2], i % 2), vdof(nodes[j / 2], j % 2), ke[i][j]);
        for (int a = 0; a < 3; ++a)
          for (int j = 0; j < 12; ++j) {
            push(pdof(nodes[a]), vdof(nodes[j / 2], j % 2), be[a][j]);
            push(vdof(nodes[j / 2], j % 2), pdof(nodes[a]), be[a][j]);
          }
      }
    }

    // Interface traction.
    const Vec2 gload = interface_load();
    if (r && (gload.x != 0.0 || gload.y != 0.0)) {
      for (const auto& [t, e] : space_->tagged_element_edges(BoundaryTag::interface)) {
        const auto g = space_->geometry(t);
        const auto& nodes = space_->element_nodes(t);
        const Vec2 a = g.x[static_cast<std::size_t>(P2Basis::edges[e][0])];
        const Vec2 b = g.x[static_cast<std::size_t>(P2Basis::edges[e][1])];
        const double len = norm(b - a);
        for (const auto& lp : quad::line_gauss4()) {
          const auto phi = P2Basis::values(edge_barycentric(e, lp.s));
          for (int k = 0; k < 6; ++k) {
            (*r)[vdof(nodes[k], 0)] -= lp.w * len * gload.x * phi[k];
            (*r)[vdof(nodes[k], 1)] -= lp.w * len * gload.y * phi[k];
          }
        }
      }
    }

    // Zero-mean pressure through a multiplier.
    for (std::size_t q = 0; q < np_; ++q) {
      const auto i = static_cast<Eigen::Index>(nu_ + q);
      if (r) {
        (*r)[i] += x[lam] * mass_[q];
        (*r)[lam] += mass_[q] * x[i];
      }
      if (trip) {
        trip->emplace_back(i, lam, mass_[q]);
        trip->emplace_back(lam, i, mass_[q]);
      }
    }
    if (trip) {
      for (std::size_t i = 0; i < nu_; ++i)
        if (fixed_[i]) trip->emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), 1.0);
    }
  }

  std::shared_ptr<const FESpace> space_;
  ProblemKind kind_;
  PowerLaw law_;
  Sym2 A_;
  SolveOptions opts_;
  std::size_t nu_ = 0, np_ = 0;
  std::vector<bool> fixed_;
  std::vector<double> fixed_value_;
  std::vector<double> mass_;
  double area_ = 0.0;
};

/// Sparse LU with the symbolic analysis reused while the sparsity structure is unchanged.
class SaddlePointSolver {
 public:
  Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& rhs) {
    Eigen::SparseMatrix<double> Jc = J;
    Jc.prune(0.0);
    Jc.makeCompressed();
    const std::vector<int> outer(Jc.outerIndexPtr(), Jc.outerIndexPtr() + Jc.outerSize() + 1);
    const std::vector<int> inner(Jc.innerIndexPtr(), Jc.innerIndexPtr() + Jc.nonZeros());
    if (!analyzed_ || outer != outer_ || inner != inner_) {
      lu_.analyzePattern(Jc);
      analyzed_ = true;
      outer_ = outer;
      inner_ = inner;
    }
    lu_.factorize(Jc);
    if (lu_.info() != Eigen::Success)
      fail(ErrorKind::singular_system, "saddle-point factorization failed (check mesh tags and boundary conditions)");
    Eigen::VectorXd x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success || !x.allFinite())
      fail(ErrorKind::singular_system, "saddle-point solve produced non-finite values");
    return x;
  }

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  std::vector<int> outer_, inner_;
};

namespace detail {

inline DiscreteField to_field(std::shared_ptr<const FESpace> space, const Eigen::VectorXd& x, const PowerStokesSystem& sys,
                              ProblemKind kind, const PowerLaw& law, const Sym2& A, const SolveOptions& opts) {
  DiscreteField f;
  f.space = std::move(space);
  f.velocity.assign(x.data(), x.data() + sys.num_velocity());
  f.pressure.assign(x.data() + sys.num_velocity(), x.data() + sys.num_velocity() + sys.num_pressure());
  // Remove the (solver-precision) mean exactly.
  double mean = 0.0;
  for (std::size_t q = 0; q < f.pressure.size(); ++q) mean += sys.pressure_mass()[q] * f.pressure[q];
  mean /= sys.domain_area();
  for (auto& p : f.pressure) p -= mean;
  f.problem = kind;
  f.law = law;
  f.A = A;
  f.options = opts;
  return f;
}

inline Eigen::VectorXd to_state(const DiscreteField& f, const PowerStokesSystem& sys) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.size()));
  for (std::size_t i = 0; i < f.velocity.size(); ++i) x[static_cast<Eigen::Index>(i)] = f.velocity[i];
  for (std::size_t i = 0; i < f.pressure.size(); ++i)
    x[static_cast<Eigen::Index>(sys.num_velocity() + i)] = f.pressure[i];
  return x;
}

inline DiscreteField solve_power_stokes(std::shared_ptr<const FESpace> space, ProblemKind kind, const PowerLaw& law,
                                        const Sym2& A, const SolveOptions& opts, double reference_mu) {
  opts.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto schedule = opts.schedule_for(law);
  PowerStokesSystem sys(space, kind, law.with_delta(schedule.front()), A, opts);
  SaddlePointSolver lin;
  SolveStats stats;
  Eigen::VectorXd x = sys.initial_state();

  // Start from the linear problem with a constant reference viscosity.
  double r_initial = 0.0;
  {
    const Eigen::VectorXd r0 = sys.residual(x);
    r_initial = r0.norm();
    stats.residual_history.push_back(r0.norm());
    if (r0.norm() > 0.0) {
      const Eigen::VectorXd dx = lin.solve(sys.jacobian(x, PowerStokesSystem::Linearization::frozen, reference_mu), -r0);
      const Eigen::VectorXd x1 = x + dx;
      if (sys.residual(x1).norm() < r0.norm()) x = x1;
    }
  }

  for (std::size_t s = 0; s < schedule.size(); ++s) {
    sys.set_law(law.with_delta(schedule[s]));
    const bool last = s + 1 == schedule.size();
    const double stage_tol = last ? opts.tol : std::max(opts.tol, 1e-6);
    Eigen::VectorXd r = sys.residual(x);
    double rn = r.norm();
    const double r_start = rn;
    stats.residual_history.push_back(rn);
    int stage_its = 0;
    while (rn > stage_tol) {
      if (stats.iterations >= opts.max_iter) {
        std::ostringstream os;
        os << "nonlinear solver did not converge in " << opts.max_iter << " iterations; residual history:";
        for (double h : stats.residual_history) os << " " << h;
        fail(ErrorKind::non_convergence, os.str());
      }
      bool newton = opts.scheme == Scheme::newton;
      if (opts.scheme == Scheme::picard_then_newton)
        newton = stage_its >= 3 || rn < 1e-2 * r_start || rn < 1e-3 * r_initial;
      const auto mode = newton ? PowerStokesSystem::Linearization::newton : PowerStokesSystem::Linearization::picard;
      const Eigen::VectorXd dx = lin.solve(sys.jacobian(x, mode), -r);
      double alpha = 1.0;
      Eigen::VectorXd xt = x + dx;
      Eigen::VectorXd rt = sys.residual(xt);
      for (int k = 0; k < 12 && !(rt.norm() < (1.0 - 1e-4 * alpha) * rn); ++k) {
        alpha *= 0.5;
        xt = x + alpha * dx;
        rt = sys.residual(xt);
      }
      x = std::move(xt);
      r = std::move(rt);
      rn = r.norm();
      ++stats.iterations;
      ++stage_its;
      (newton ? stats.newton_steps : stats.picard_steps)++;
      stats.residual_history.push_back(rn);
    }
    stats.stage_deltas.push_back(schedule[s]);
    stats.stage_iterations.push_back(stage_its);
  }
  stats.final_residual = sys.residual(x).norm();
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto f = to_field(space, x, sys, kind, law, A, opts);
  f.stats = std::move(stats);
  return f;
}

}  // namespace detail

/// Boundary-layer corrector: periodic, zero on the rough wall, lid as in opts.
inline DiscreteField solve_bl(std::shared_ptr<const Mesh> mesh, const PowerLaw& law, const Sym2& A,
                              const SolveOptions& opts = {}) {
  require(mesh->kind == MeshKind::bl_strip, ErrorKind::precondition, "solve_bl needs a boundary-layer strip mesh");
  auto space = std::make_shared<const FESpace>(mesh);
  const double mu = dot(A, A) > 0.0 ? effective_viscosity(A, law) : 1.0;
  return detail::solve_power_stokes(space, ProblemKind::boundary_layer, law, A, opts, mu);
}

/// Rough channel with body force e1 and no slip at the wall and at x2 = 1.
inline DiscreteField solve_channel(std::shared_ptr<const Mesh> mesh, const PowerLaw& law, const SolveOptions& opts = {}) {
  require(mesh->kind == MeshKind::channel, ErrorKind::precondition, "solve_channel needs a channel mesh");
  auto space = std::make_shared<const FESpace>(mesh);
  const double mu = effective_viscosity(poiseuille_shear_tensor(law.p()), law);
  return detail::solve_power_stokes(space, ProblemKind::channel, law, Sym2{}, opts, mu);
}

/// Euclidean norm of the discrete residual over all free test functions.
inline double residual(const DiscreteField& field, const PowerLaw& law, ProblemKind problem) {
  PowerStokesSystem sys(field.space, problem, law, field.A, field.options);
  return sys.residual(detail::to_state(field, sys)).norm();
}

struct EnergyIdentityReport {
  /// int_{above} (S(A+Du) - S(A)):Du + int_{below} S(Du):Du.
  double dissipation = 0.0;
  /// -int_{y2=0} S(A)n . u.
  double surface_work = 0.0;
  double difference = 0.0;
  /// int_{above} 1_{|Du| <= M} |Du|^2.
  double small_strain_l2 = 0.0;
  /// int_{above} 1_{|Du| > M} |Du|^p.
  double large_strain_lp = 0.0;
  /// int_{below} |Du|^p.
  double below_lp = 0.0;
  double M = 0.0;
};

/// Tests the discrete weak form with the solution itself.
inline EnergyIdentityReport energy_identity_check(const DiscreteField& field, const PowerLaw& law, const Sym2& A, double M) {
  EnergyIdentityReport rep;
  rep.M = M;
  const FESpace& V = *field.space;
  const Mesh& m = V.mesh();
  const Sym2 sA = dot(A, A) > 0.0 || law.delta_reg() > 0.0 || law.p() >= 2.0 ? stress(A, law) : Sym2{};
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto g = V.geometry(t);
    for (const auto& q : quad::triangle_degree5()) {
      const auto l = to_barycentric(q);
      const double w = 2.0 * g.area * q.w;
      const auto [u, du] = V.evaluate(field.velocity, t, l);
      const Sym2 D = du.sym();
      const double nd = norm(D);
      if (m.regions[t] == Region::above) {
        const Sym2 B = A + D;
        const Sym2 SB = dot(B, B) > 0.0 || law.delta_reg() > 0.0 || law.p() >= 2.0 ? stress(B, law) : Sym2{};
        rep.dissipation += w * dot(SB - sA, D);
        if (nd <= M) rep.small_strain_l2 += w * nd * nd;
        else rep.large_strain_lp += w * std::pow(nd, law.p());
      } else {
        const Sym2 SD = nd > 0.0 || law.delta_reg() > 0.0 || law.p() >= 2.0 ? stress(D, law) : Sym2{};
        rep.dissipation += w * dot(SD, D);
        rep.below_lp += w * std::pow(nd, law.p());
      }
    }
  }
  const Vec2 load = sA * Vec2{0.0, 1.0};
  for (const auto& [t, e] : V.tagged_element_edges(BoundaryTag::interface)) {
    const auto g = V.geometry(t);
    const Vec2 a = g.x[static_cast<std::size_t>(P2Basis::edges[e][0])];
    const Vec2 b = g.x[static_cast<std::size_t>(P2Basis::edges[e][1])];
    const double len = norm(b - a);
    for (const auto& lp : quad::line_gauss4()) {
      const auto [u, du] = V.evaluate(field.velocity, t, edge_barycentric(e, lp.s));
      rep.surface_work += lp.w * len * dot(load, u);
    }
  }
  rep.difference = rep.dissipation - rep.surface_work;
  return rep;
}

}  // namespace roughwall
