#include "rmfem/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "rmfem/quadrature.hpp"
#include "rmfem/summation.hpp"

namespace rmfem {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::RM1: return "RM1";
    case EstimatorKind::RM2: return "RM2";
    case EstimatorKind::Babuska: return "BABUSKA";
    case EstimatorKind::Residual2D: return "RESIDUAL2D";
  }
  return "?";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  if (s == "RM1") return EstimatorKind::RM1;
  if (s == "RM2") return EstimatorKind::RM2;
  if (s == "BABUSKA") return EstimatorKind::Babuska;
  if (s == "RESIDUAL2D" || s == "RESIDUAL") return EstimatorKind::Residual2D;
  throw InvalidArgument("unknown estimator kind '" + name + "'");
}

std::string to_string(Normalization norm) {
  switch (norm) {
    case Normalization::None: return "none";
    case Normalization::SquaredIndicators: return "squared";
    case Normalization::Estimator: return "estimator";
  }
  return "?";
}

Normalization normalization_from_string(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "none") return Normalization::None;
  if (s == "squared") return Normalization::SquaredIndicators;
  if (s == "estimator") return Normalization::Estimator;
  throw InvalidArgument("unknown normalization '" + name + "'");
}

namespace {

double general_overlap_integral(const SimplicialMesh& mesh, const std::vector<double>& slope, double a, double b,
                                double st) {
  double s = 0.0;
  for (Index j = 0; j < mesh.n_elements(); ++j) {
    const double lo = std::max(a, mesh.vertex(j).x);
    const double hi = std::min(b, mesh.vertex(j + 1).x);
    if (hi > lo) s += (hi - lo) * (slope[j] - st) * (slope[j] - st);
  }
  return s;
}

void require_1d(const PwLinearField& u_h) {
  if (u_h.mesh()->dim() != 1) throw Unsupported("this estimator is available in 1D only");
}

}  // namespace

std::vector<double> rm1_sample_1d(const PwLinearField& u_h, std::span<const Point> delta, double p) {
  require_1d(u_h);
  const SimplicialMesh& mesh = *u_h.mesh();
  const Index n = mesh.n_elements();
  if (delta.size() != static_cast<std::size_t>(mesh.n_vertices())) throw InvalidArgument("displacement size");
  std::vector<double> slope(n);
  for (Index k = 0; k < n; ++k) slope[k] = u_h.gradient(k).x;
  const std::vector<double> w = displaced_value_increments(u_h, delta);
  std::vector<double> out(n);
  for (Index k = 0; k < n; ++k) {
    const double h = mesh.measure(k);
    const double d0 = delta[k].x, d1 = delta[k + 1].x;
    const double len = h + d1 - d0;
    if (!(len > 0.0)) throw InvariantViolation("perturbed interval " + std::to_string(k) + " is inverted");
    const double st = ((u_h.value(k + 1) - u_h.value(k)) + (w[k + 1] - w[k])) / len;
    const double middle = h + std::min(d1, 0.0) - std::max(d0, 0.0);
    const bool left_ok = d0 >= 0.0 || (k > 0 && -d0 <= mesh.measure(k - 1));
    const bool right_ok = d1 <= 0.0 || (k + 1 < n && d1 <= mesh.measure(k + 1));
    double integral;
    if (left_ok && right_ok && middle >= 0.0) {
      // K~ overlaps at most the element and its two neighbours; lengths taken from displacements.
      integral = middle * (slope[k] - st) * (slope[k] - st);
      if (d0 < 0.0) integral += -d0 * (slope[k - 1] - st) * (slope[k - 1] - st);
      if (d1 > 0.0) integral += d1 * (slope[k + 1] - st) * (slope[k + 1] - st);
    } else {
      integral = general_overlap_integral(mesh, slope, mesh.vertex(k).x + d0, mesh.vertex(k + 1).x + d1, st);
    }
    out[k] = std::pow(h, -(p - 1.0)) * integral;
  }
  return out;
}

std::vector<double> rm2_sample(const PwLinearField& u_h, std::span<const Point> delta, double p) {
  const SimplicialMesh& mesh = *u_h.mesh();
  if (delta.size() != static_cast<std::size_t>(mesh.n_vertices())) throw InvalidArgument("displacement size");
  const Index n = mesh.n_elements();
  const std::vector<double> w = displaced_value_increments(u_h, delta);
  const std::vector<double> size = element_sizes(mesh);
  auto diff = [&](Index a, Index b) { return (u_h.value(b) - u_h.value(a)) + (w[b] - w[a]); };
  std::vector<double> out(n);
  for (Index k = 0; k < n; ++k) {
    auto e = mesh.element(k);
    const Point g = u_h.gradient(k);
    Point gt;
    if (mesh.dim() == 1) {
      const double len = mesh.measure(k) + delta[e[1]].x - delta[e[0]].x;
      if (!(len > 0.0)) throw InvariantViolation("perturbed interval " + std::to_string(k) + " is inverted");
      gt = {diff(e[0], e[1]) / len, 0.0};
    } else {
      const Point x0 = mesh.vertex(e[0]);
      const Point e1 = (mesh.vertex(e[1]) - x0) + (delta[e[1]] - delta[e[0]]);
      const Point e2 = (mesh.vertex(e[2]) - x0) + (delta[e[2]] - delta[e[0]]);
      const double det = cross(e1, e2);
      if (!(det > 0.0)) throw InvariantViolation("perturbed triangle " + std::to_string(k) + " is inverted");
      const double v1 = diff(e[0], e[1]);
      const double v2 = diff(e[0], e[2]);
      gt = {(v1 * e2.y - v2 * e1.y) / det, (e1.x * v2 - e2.x * v1) / det};
    }
    const Point d = g - gt;
    out[k] = std::pow(size[k], -(2.0 * p - 2.0)) * mesh.measure(k) * dot(d, d);
  }
  return out;
}

namespace {

using Sampler = std::vector<double> (*)(const PwLinearField&, std::span<const Point>, double);

// Accumulates per-realization samples in fixed order.
class MonteCarloAccumulator {
 public:
  explicit MonteCarloAccumulator(Index n_elements) : sums_(n_elements, 0.0) {}

  void add_block(const std::vector<std::vector<double>>& block) {
    std::vector<double> column(block.size());
    for (std::size_t k = 0; k < sums_.size(); ++k) {
      for (std::size_t i = 0; i < block.size(); ++i) column[i] = block[i][k];
      sums_[k] += pairwise_sum(column);
    }
    for (const auto& s : block) totals_.push_back(pairwise_sum(s));
  }

  EstimatorReport finish(EstimatorKind kind, Normalization norm, LawMoments moments) const {
    const double n = static_cast<double>(totals_.size());
    if (totals_.empty()) throw InvalidArgument("Monte Carlo estimator needs at least one realization");
    double scale = 1.0;  // applied to squared quantities
    const double m = kind == EstimatorKind::RM1 ? moments.mean_abs : moments.mean_sq;
    if (norm == Normalization::SquaredIndicators) scale = 1.0 / m;
    if (norm == Normalization::Estimator) scale = 1.0 / (m * m);
    EstimatorReport r;
    r.kind = kind;
    r.n_realizations = totals_.size();
    r.normalized = norm != Normalization::None;
    r.local.resize(sums_.size());
    std::vector<double> sq(sums_.size());
    for (std::size_t k = 0; k < sums_.size(); ++k) {
      sq[k] = scale * sums_[k] / n;
      r.local[k] = std::sqrt(sq[k]);
    }
    r.global = std::sqrt(pairwise_sum(sq));
    const double mean = pairwise_sum(totals_) / n;
    double var = 0.0;
    if (totals_.size() > 1) {
      std::vector<double> dev(totals_.size());
      for (std::size_t i = 0; i < totals_.size(); ++i) dev[i] = (totals_[i] - mean) * (totals_[i] - mean);
      var = pairwise_sum(dev) / (n - 1.0);
    }
    r.global_sq_std_error = scale * std::sqrt(var / n);
    return r;
  }

 private:
  std::vector<double> sums_;
  std::vector<double> totals_;
};

EstimatorReport from_perturbations(EstimatorKind kind, Sampler sampler, const PwLinearField& u_h,
                                   std::span<const PerturbedMesh> perturbations, Normalization norm, RadialLaw law,
                                   double radius) {
  if (perturbations.empty()) throw InvalidArgument("estimator needs at least one realization");
  const double p = perturbations.front().p();
  std::vector<std::vector<double>> block;
  block.reserve(perturbations.size());
  for (const PerturbedMesh& pm : perturbations) {
    if (!pm.mesh()->shares_topology(*u_h.mesh())) throw InvalidArgument("realization does not match the field's mesh");
    if (pm.p() != p) throw InvalidArgument("realizations must share the exponent p");
    block.push_back(sampler(u_h, pm.displacement(), p));
  }
  MonteCarloAccumulator acc(u_h.mesh()->n_elements());
  acc.add_block(block);
  return acc.finish(kind, norm, law_moments(law, u_h.mesh()->dim(), radius));
}

}  // namespace

EstimatorReport estimator_rm1_1d(const PwLinearField& u_h, std::span<const PerturbedMesh> perturbations,
                                 Normalization norm, RadialLaw law, double radius) {
  require_1d(u_h);
  return from_perturbations(EstimatorKind::RM1, rm1_sample_1d, u_h, perturbations, norm, law, radius);
}

EstimatorReport estimator_rm2(const PwLinearField& u_h, std::span<const PerturbedMesh> perturbations,
                              Normalization norm, RadialLaw law, double radius) {
  return from_perturbations(EstimatorKind::RM2, rm2_sample, u_h, perturbations, norm, law, radius);
}

EstimatorReport monte_carlo_estimator(EstimatorKind kind, const PwLinearField& u_h, const PerturbationConfig& config,
                                      std::size_t n_realizations, const ThreadPool* pool, Normalization norm) {
  config.validate();
  Sampler sampler = nullptr;
  if (kind == EstimatorKind::RM1) {
    require_1d(u_h);
    sampler = rm1_sample_1d;
  } else if (kind == EstimatorKind::RM2) {
    sampler = rm2_sample;
  } else {
    throw InvalidArgument("monte_carlo_estimator handles RM1 and RM2 only");
  }
  if (n_realizations == 0) throw InvalidArgument("estimator needs at least one realization");
  const SimplicialMesh& mesh = *u_h.mesh();
  constexpr std::size_t kBlock = 64;
  MonteCarloAccumulator acc(mesh.n_elements());
  for (std::size_t start = 0; start < n_realizations; start += kBlock) {
    const std::size_t m = std::min(kBlock, n_realizations - start);
    std::vector<std::vector<double>> block(m);
    parallel_for(pool, m, [&](std::size_t i) {
      const std::vector<Point> alpha = draw_alphas(mesh, config, start + i);
      const std::vector<Point> delta = displacements_from_alphas(mesh, config, alpha);
      block[i] = sampler(u_h, delta, config.p);
    });
    acc.add_block(block);
  }
  return acc.finish(kind, norm, law_moments(config.law, mesh.dim(), config.radius));
}

double jump_functional_1d(const PwLinearField& u_h) {
  require_1d(u_h);
  const SimplicialMesh& mesh = *u_h.mesh();
  double s = 0.0;
  for (Index i = 1; i < mesh.n_vertices() - 1; ++i) {
    const double jump = u_h.gradient(i - 1).x - u_h.gradient(i).x;
    s += std::min(mesh.measure(i - 1), mesh.measure(i)) * jump * jump;
  }
  return std::sqrt(s);
}

BabuskaResult babuska_1d(const PwLinearField& u_h, const ScalarFunction& kappa) {
  require_1d(u_h);
  const SimplicialMesh& mesh = *u_h.mesh();
  const Index n = mesh.n_elements();
  std::vector<double> jump(mesh.n_vertices(), 0.0);
  for (Index i = 1; i < n; ++i) jump[i] = u_h.gradient(i - 1).x - u_h.gradient(i).x;
  auto kappa_at = [&](double x) {
    const double v = kappa({x, 0.0});
    if (!(v > 0.0)) throw InvalidArgument("kappa must be positive");
    return v;
  };
  BabuskaResult out;
  out.ell_left.resize(n);
  out.ell_right.resize(n);
  out.report.kind = EstimatorKind::Babuska;
  out.report.local.resize(n);
  const auto& g = quadrature::gauss_legendre(5);
  std::vector<double> sq(n);
  for (Index k = 0; k < n; ++k) {
    const double h = mesh.measure(k);
    const double xl = mesh.vertex(k).x, xr = mesh.vertex(k + 1).x;
    out.ell_left[k] = k > 0 ? h / (h + mesh.measure(k - 1)) * jump[k] * kappa_at(xl) : 0.0;
    out.ell_right[k] = k + 1 < n ? -h / (mesh.measure(k + 1) + h) * jump[k + 1] * kappa_at(xr) : 0.0;
    double s = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double t = g.nodes[q];
      const double ell = (1.0 - t) * out.ell_left[k] + t * out.ell_right[k];
      const double v = ell / kappa_at(xl + t * h);
      s += g.weights[q] * h * v * v;
    }
    sq[k] = s;
    out.report.local[k] = std::sqrt(s);
  }
  out.report.global = std::sqrt(pairwise_sum(sq));
  return out;
}

LambdaTerm lambda_term_1d(const ScalarFunction& f, const PwLinearField& u_h, const BabuskaResult& babuska,
                          double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidArgument("zeta must lie in (0, 1)");
  require_1d(u_h);
  const SimplicialMesh& mesh = *u_h.mesh();
  const auto& g = quadrature::gauss_legendre(5);
  std::vector<double> sq(mesh.n_elements());
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    const double h = mesh.measure(k);
    const double slope = (babuska.ell_right[k] - babuska.ell_left[k]) / h;
    double s = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double r = f({mesh.vertex(k).x + g.nodes[q] * h, 0.0}) + slope;
      s += g.weights[q] * h * r * r;
    }
    sq[k] = s;
  }
  return {zeta, std::sqrt(std::pow(mesh.h(), zeta) * pairwise_sum(sq))};
}

EstimatorReport residual_2d(const PwLinearField& u_h, const ScalarFunction& f) {
  const SimplicialMesh& mesh = *u_h.mesh();
  if (mesh.dim() != 2) throw Unsupported("residual_2d needs a 2D mesh");
  const auto& rule = quadrature::triangle_degree4();
  EstimatorReport r;
  r.kind = EstimatorKind::Residual2D;
  r.local.resize(mesh.n_elements());
  std::vector<double> sq(mesh.n_elements());
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    auto e = mesh.element(k);
    const Point a = mesh.vertex(e[0]), b = mesh.vertex(e[1]), c = mesh.vertex(e[2]);
    double fint = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& l = rule.barycentric[q];
      const double fv = f(l[0] * a + l[1] * b + l[2] * c);
      fint += rule.weights[q] * mesh.measure(k) * fv * fv;
    }
    const Point gk = u_h.gradient(k);
    double jumps = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Index nb = mesh.neighbor(k, i);
      if (nb < 0) continue;
      const Point d = mesh.vertex(e[(i + 2) % 3]) - mesh.vertex(e[(i + 1) % 3]);
      const double len = norm(d);
      const Point nrm = (1.0 / len) * Point{d.y, -d.x};
      const double j = dot(gk - u_h.gradient(nb), nrm);
      jumps += len * j * j;
    }
    const double hk = mesh.element_diam(k);
    sq[k] = hk * hk * fint + hk * jumps;
    r.local[k] = std::sqrt(sq[k]);
  }
  r.global = std::sqrt(pairwise_sum(sq));
  return r;
}

double effectivity(const EstimatorReport& report, double true_error) {
  if (!(true_error > 0.0)) throw InvalidArgument("effectivity needs a positive true error");
  return report.global / true_error;
}

bool LemmaRecord::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.pass; });
}

LemmaRecord check_lemma_bounds(const LemmaInputs& in) {
  const double m1 = in.moments.mean_abs, m2 = in.moments.mean_sq;
  const double lam = in.lambda, p = in.p, J2 = in.j_sq;
  const double hp1 = std::pow(in.h, p - 1.0);
  LemmaRecord rec;
  rec.rm1_lower_hypothesis = 4.0 * hp1 * m2 / m1 < 1.0 + std::pow(lam, -(p - 1.0));

  auto make = [](std::string name, double lower, double value, double upper, double slack, bool lower_checked) {
    InequalityCheck c{std::move(name), lower, value, upper, slack, lower_checked, false};
    c.pass = value <= upper + slack && (!lower_checked || value >= lower - slack);
    return c;
  };
  rec.checks.push_back(make("rm1", (m1 * (1.0 + std::pow(lam, -(p - 1.0))) / 2.0 - 2.0 * hp1 * m2) * J2, in.rm1_sq,
                            m1 * (1.0 + std::pow(lam, p - 1.0)) / 2.0 * J2, in.n_std_errors * in.rm1_sq_se,
                            rec.rm1_lower_hypothesis));
  rec.checks.push_back(make("rm2", m2 / (2.0 * (1.0 + lam) * (1.0 + lam) * std::pow(lam, 2.0 * p - 1.0)) * J2,
                            in.rm2_sq, 3.0 * m2 * J2, in.n_std_errors * in.rm2_sq_se, true));
  const double km = in.kappa_min, kM = in.kappa_max;
  const double br_upper = 2.0 * lam * lam * kM * kM / (3.0 * (1.0 + lam) * km * km) * J2;
  rec.checks.push_back(make("babuska", lam * km * km / (6.0 * std::pow(1.0 + lam, 3) * kM * kM) * J2, in.babuska_sq,
                            br_upper, 1e-12 * (br_upper + J2), true));
  return rec;
}

}  // namespace rmfem
