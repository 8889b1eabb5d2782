#include "pilotwave/phase_space.hpp"

#include <cmath>
#include <sstream>

namespace pw::phase {

namespace {

void require_same_dim(const PhasePoint& z, const char* what) {
  if (z.x.size() != z.y.size() || z.x.size() == 0)
    throw InvalidArgument(std::string(what) + ": x and y must share a nonzero dimension");
}

double require_positive_hbar(double hbar) {
  if (!(hbar > 0.0)) throw InvalidArgument("hbar must be positive");
  return hbar;
}

PhasePoint shifted(const PhasePoint& z, int slot, double by) {
  PhasePoint s = z;
  const int d = z.dim();
  if (slot < d)
    s.x[slot] += by;
  else
    s.y[slot - d] += by;
  return s;
}

Eigen::VectorXd stack(const PhasePoint& z) {
  Eigen::VectorXd v(2 * z.dim());
  v << z.x, z.y;
  return v;
}

PhasePoint unstack(const Eigen::VectorXd& v) {
  const int d = static_cast<int>(v.size()) / 2;
  return PhasePoint{v.head(d), v.tail(d)};
}

}  // namespace

double PhasePoint::norm_squared(double hbar) const {
  require_positive_hbar(hbar);
  return (x.squaredNorm() + y.squaredNorm()) / (2.0 * hbar);
}

CVector PhasePoint::to_state(double hbar) const {
  require_same_dim(*this, "to_state");
  const double scale = 1.0 / std::sqrt(2.0 * require_positive_hbar(hbar));
  CVector c(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k)
    c[k] = std::complex<double>(x[k], y[k]) * scale;
  return c;
}

PhasePoint PhasePoint::from_state(const CVector& c, double hbar) {
  const double scale = std::sqrt(2.0 * require_positive_hbar(hbar));
  PhasePoint z;
  z.x = scale * c.real();
  z.y = scale * c.imag();
  return z;
}

Eigen::VectorXd ClassicalHamiltonian::dx(const PhasePoint& z, double t) const {
  if (grad_x) return grad_x(z, t);
  if (!value) throw InvalidArgument("hamiltonian has no evaluator");
  const int d = z.dim();
  Eigen::VectorXd g(d);
  for (int k = 0; k < d; ++k)
    g[k] = (value(shifted(z, k, delta), t) - value(shifted(z, k, -delta), t)) /
           (2.0 * delta);
  return g;
}

Eigen::VectorXd ClassicalHamiltonian::dy(const PhasePoint& z, double t) const {
  if (grad_y) return grad_y(z, t);
  if (!value) throw InvalidArgument("hamiltonian has no evaluator");
  const int d = z.dim();
  Eigen::VectorXd g(d);
  for (int k = 0; k < d; ++k)
    g[k] = (value(shifted(z, k + d, delta), t) -
            value(shifted(z, k + d, -delta), t)) /
           (2.0 * delta);
  return g;
}

ClassicalHamiltonian ClassicalHamiltonian::from_quantum(CMatrix h, double hbar) {
  require_positive_hbar(hbar);
  if (h.rows() != h.cols() || h.rows() == 0)
    throw InvalidArgument("hamiltonian matrix must be square");
  if ((h - h.adjoint()).norm() > 1e-12 * std::max(1.0, h.norm()))
    throw InvalidArgument("hamiltonian matrix must be hermitian");
  const Eigen::MatrixXd a = h.real();
  const Eigen::MatrixXd b = h.imag();
  ClassicalHamiltonian cl;
  // <c|H|c> written in the real chart.
  cl.value = [a, b, hbar](const PhasePoint& z, double) {
    return (z.x.dot(a * z.x) + z.y.dot(a * z.y) + 2.0 * z.y.dot(b * z.x)) /
           (2.0 * hbar);
  };
  cl.grad_x = [a, b, hbar](const PhasePoint& z, double) {
    return Eigen::VectorXd((a * z.x - b * z.y) / hbar);
  };
  cl.grad_y = [a, b, hbar](const PhasePoint& z, double) {
    return Eigen::VectorXd((a * z.y + b * z.x) / hbar);
  };
  return cl;
}

double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                       const PhasePoint& at, double t, double delta) {
  require_same_dim(at, "poisson_bracket");
  if (!(delta > 0.0)) throw InvalidArgument("difference step must be positive");
  const int d = at.dim();
  double sum = 0.0;
  for (int k = 0; k < d; ++k) {
    const double fx = (f(shifted(at, k, delta), t) - f(shifted(at, k, -delta), t)) / (2.0 * delta);
    const double fy = (f(shifted(at, k + d, delta), t) - f(shifted(at, k + d, -delta), t)) / (2.0 * delta);
    const double gx = (g(shifted(at, k, delta), t) - g(shifted(at, k, -delta), t)) / (2.0 * delta);
    const double gy = (g(shifted(at, k + d, delta), t) - g(shifted(at, k + d, -delta), t)) / (2.0 * delta);
    sum += fx * gy - gx * fy;
  }
  return sum;
}

PhasePoint hamilton_step(const PhasePoint& z, const ClassicalHamiltonian& h,
                         double t, double dt, double solve_tol) {
  require_same_dim(z, "hamilton_step");
  const double tmid = t + 0.5 * dt;
  const double scale = 1.0 + std::sqrt(stack(z).squaredNorm());
  PhasePoint mid = z;
  bool converged = false;
  for (int it = 0; it < 500; ++it) {
    PhasePoint next;
    next.x = z.x + 0.5 * dt * h.dy(mid, tmid);
    next.y = z.y - 0.5 * dt * h.dx(mid, tmid);
    const double change = (next.x - mid.x).norm() + (next.y - mid.y).norm();
    mid = next;
    if (change <= solve_tol * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericError("implicit midpoint solve did not converge");
  PhasePoint out;
  out.x = 2.0 * mid.x - z.x;
  out.y = 2.0 * mid.y - z.y;
  return out;
}

std::vector<PhasePoint> hamilton_flow(const PhasePoint& start,
                                      const ClassicalHamiltonian& h, double t0,
                                      double t1, int steps, double solve_tol) {
  if (steps < 1) throw InvalidArgument("flow needs at least one step");
  const double dt = (t1 - t0) / steps;
  std::vector<PhasePoint> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(start);
  for (int k = 0; k < steps; ++k)
    path.push_back(hamilton_step(path.back(), h, t0 + k * dt, dt, solve_tol));
  return path;
}

Manifest CanonicalReport::to_manifest() const {
  std::ostringstream v, tol;
  v << max_violation;
  tol << tolerance;
  return {{"dimension", std::to_string(dim)},
          {"samples", std::to_string(samples)},
          {"max-violation", v.str()},
          {"tolerance", tol.str()},
          {"canonical", passed ? "yes" : "no"}};
}

CanonicalReport canonical_check(const PhaseMap& map, int dim, int samples,
                                std::uint64_t seed, double delta,
                                double tolerance) {
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  if (samples < 1) throw InvalidArgument("need at least one sample point");
  if (!(delta > 0.0)) throw InvalidArgument("difference step must be positive");
  Rng rng(seed);
  const int n = 2 * dim;
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
  omega.topRightCorner(dim, dim) = Eigen::MatrixXd::Identity(dim, dim);
  omega.bottomLeftCorner(dim, dim) = -Eigen::MatrixXd::Identity(dim, dim);

  CanonicalReport report;
  report.dim = dim;
  report.samples = samples;
  report.tolerance = tolerance;
  for (int s = 0; s < samples; ++s) {
    PhasePoint z;
    z.x.resize(dim);
    z.y.resize(dim);
    for (int k = 0; k < dim; ++k) z.x[k] = rng.normal();
    for (int k = 0; k < dim; ++k) z.y[k] = rng.normal();
    Eigen::MatrixXd jac(n, n);
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd hi = stack(map(shifted(z, j, delta)));
      const Eigen::VectorXd lo = stack(map(shifted(z, j, -delta)));
      jac.col(j) = (hi - lo) / (2.0 * delta);
    }
    const double violation =
        (jac.transpose() * omega * jac - omega).cwiseAbs().maxCoeff();
    report.max_violation = std::max(report.max_violation, violation);
  }
  report.passed = report.max_violation <= tolerance;
  return report;
}

Eigen::MatrixXd unitary_real_form(const CMatrix& u) {
  if (u.rows() != u.cols() || u.rows() == 0)
    throw InvalidArgument("unitary must be square");
  const int d = static_cast<int>(u.rows());
  Eigen::MatrixXd m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = u.real();
  m.topRightCorner(d, d) = -u.imag();
  m.bottomLeftCorner(d, d) = u.imag();
  m.bottomRightCorner(d, d) = u.real();
  return m;
}

PhaseMap linear_phase_map(Eigen::MatrixXd m) {
  if (m.rows() != m.cols() || m.rows() == 0 || m.rows() % 2 != 0)
    throw InvalidArgument("phase map matrix must be square with even size");
  return [m = std::move(m)](const PhasePoint& z) {
    if (2 * z.dim() != m.rows())
      throw InvalidArgument("phase map dimension mismatch");
    return unstack(m * stack(z));
  };
}

OscillatorFrame ho_frame_swap(const OscillatorFrame& f) {
  if (!(f.mass > 0.0) || !(f.spring > 0.0))
    throw InvalidArgument("oscillator mass and spring constant must be positive");
  OscillatorFrame g;
  g.q = f.p;
  g.p = -f.q;
  g.mass = 1.0 / f.spring;
  g.spring = 1.0 / f.mass;
  if (std::abs(g.energy() - f.energy()) >
      1e-12 * std::max(1.0, std::abs(f.energy())))
    throw NumericError("frame swap failed to preserve the energy");
  return g;
}

std::vector<OscillatorFrame> oscillator_flow(const OscillatorFrame& start,
                                             double t0, double t1, int steps) {
  if (!(start.mass > 0.0) || !(start.spring > 0.0))
    throw InvalidArgument("oscillator mass and spring constant must be positive");
  ClassicalHamiltonian h;
  const double m = start.mass, k = start.spring;
  h.value = [m, k](const PhasePoint& z, double) {
    return z.y[0] * z.y[0] / (2.0 * m) + k * z.x[0] * z.x[0] / 2.0;
  };
  h.grad_x = [k](const PhasePoint& z, double) {
    return Eigen::VectorXd::Constant(1, k * z.x[0]).eval();
  };
  h.grad_y = [m](const PhasePoint& z, double) {
    return Eigen::VectorXd::Constant(1, z.y[0] / m).eval();
  };
  PhasePoint z;
  z.x = Eigen::VectorXd::Constant(1, start.q);
  z.y = Eigen::VectorXd::Constant(1, start.p);
  std::vector<OscillatorFrame> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  for (const PhasePoint& p : hamilton_flow(z, h, t0, t1, steps))
    path.push_back(OscillatorFrame{p.x[0], p.y[0], start.mass, start.spring});
  return path;
}

}  // namespace pw::phase
