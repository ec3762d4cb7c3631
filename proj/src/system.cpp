#include "kgrs/system.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kgrs/error.hpp"

namespace kgrs {

Box Box::cube(int dim, double lo, double hi) {
  Box b;
  b.dim = dim;
  for (int i = 0; i < dim; ++i) {
    b.lo[i] = lo;
    b.hi[i] = hi;
  }
  return b;
}

bool Box::contains(std::span<const double> x, double margin) const {
  for (int i = 0; i < dim; ++i) {
    if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
  }
  return true;
}

double Box::scale() const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s = std::max(s, 0.5 * (hi[i] - lo[i]));
  return s;
}

std::vector<double> Box::center() const {
  std::vector<double> c(dim);
  for (int i = 0; i < dim; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

namespace {

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> d = {
      {"soliton", 1e-8},       // sup |Rc + Hess f - lambda g|
      {"identity", 1e-7},      // trace, Ricci-gradient and Laplacian identities
      {"variance", 1e-12},     // S + |grad f|^2 - 2 lambda f
      {"poisson", 1e-9},       // |omega(grad f, grad S)|
      {"kahler", 1e-9},        // grad J, d omega, J^2 + Id, Hermitian defect
      {"killing", 1e-7},
      {"hess_s", 1e-6},
      {"gate", 1e-6},          // soliton residual gate for identity checks
      {"pairing", 1e-7},
      {"zero", 1e-7},
      {"commute", 1e-6},
      {"rank0", 1e-8},
      {"wedge", 1e-8},
      {"branch", 1e-5},
      {"fd", 1e-5},
      {"division_floor", 1e-14},
      {"spd", 1e-10},
  };
  return d;
}

}  // namespace

Tolerances::Tolerances() : values_(default_tolerances()) {}

bool Tolerances::known(const std::string& key) { return default_tolerances().count(key) != 0; }

double Tolerances::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::InvalidArgument, "unknown tolerance '" + key + "'");
  return it->second;
}

void Tolerances::set(const std::string& key, double value) {
  if (!known(key)) throw Error(ErrorKind::InvalidArgument, "unknown tolerance '" + key + "'");
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidArgument, "tolerance '" + key + "' must be positive");
  }
  values_[key] = value;
}

const Expr* SolitonSystem::explicit_second() const {
  if (kind == SystemKind::Hamiltonian && F2) return &*F2;
  return nullptr;
}

namespace {

std::string point_text(std::span<const double> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

void validate_system(const SolitonSystem& sys, int probes) {
  const int n = sys.dim;
  if (n != 2 && n != 4) throw Error(ErrorKind::Validation, "chart dimension must be 2 or 4");
  for (int i = 0; i < n; ++i) {
    if (!(sys.domain.lo[i] < sys.domain.hi[i])) {
      throw Error(ErrorKind::Validation, "domain interval " + std::to_string(i + 1) + " is empty");
    }
  }
  auto check_expr = [&](const Expr& e, const std::string& what) {
    if (e.empty()) throw Error(ErrorKind::Validation, what + " is missing");
    if (e.dim() != n) throw Error(ErrorKind::Validation, what + " has the wrong chart dimension");
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      check_expr(sys.metric(i, j), "g" + std::to_string(i + 1) + std::to_string(j + 1));
      check_expr(sys.complex(i, j), "J" + std::to_string(i + 1) + std::to_string(j + 1));
    }
  }
  check_expr(sys.f, "potential f");
  if (sys.kind == SystemKind::Hamiltonian && !sys.F2) {
    throw Error(ErrorKind::Validation, "Hamiltonian system requires F2");
  }

  const double spd = sys.tolerances.get("spd");
  const auto pts = halton_samples(sys.domain, probes, 7, 0.05);
  for (const auto& p : pts) {
    Eigen::MatrixXd g(n, n), J(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        g(i, j) = eval(sys.metric(i, j), p);
        J(i, j) = eval(sys.complex(i, j), p);
      }
    }
    const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * gscale) {
      throw Error(ErrorKind::Validation, "metric is not symmetric at probe point " + point_text(p));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.eigenvalues().minCoeff() <= spd) {
      throw Error(ErrorKind::Validation,
                  "metric is not positive definite at probe point " + point_text(p));
    }
    const double j2 = (J * J + Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (j2 > 1e-10) {
      throw Error(ErrorKind::Validation, "J^2 != -Id (defect " + std::to_string(j2) +
                                             ") at probe point " + point_text(p));
    }
    const double herm = (J.transpose() * g * J - g).cwiseAbs().maxCoeff() / gscale;
    if (herm > 1e-10) {
      throw Error(ErrorKind::Validation, "metric is not J-Hermitian (defect " +
                                             std::to_string(herm) + ") at probe point " +
                                             point_text(p));
    }
    (void)eval(sys.f, p);
  }
}

std::vector<std::vector<double>> halton_samples(const Box& box, int count, std::uint64_t seed,
                                                double margin) {
  static constexpr int kPrimes[4] = {2, 3, 5, 7};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::array<double, 4> shift{};
  for (int d = 0; d < box.dim; ++d) shift[d] = uni(rng);

  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (int k = 1; k <= count; ++k) {
    std::vector<double> p(box.dim);
    for (int d = 0; d < box.dim; ++d) {
      double h = 0.0, fscale = 1.0 / kPrimes[d];
      for (int i = k; i > 0; i /= kPrimes[d]) {
        h += fscale * (i % kPrimes[d]);
        fscale /= kPrimes[d];
      }
      h += shift[d];
      h -= std::floor(h);
      const double w = box.hi[d] - box.lo[d];
      p[d] = box.lo[d] + margin * w + (1.0 - 2.0 * margin) * w * h;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace kgrs
