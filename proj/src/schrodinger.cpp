#include "pilotwave/schrodinger.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>

#include "pilotwave/io.hpp"

namespace pw {

namespace {

using cplx = std::complex<double>;

// Applies the kinetic sum K f = sum_ij d_i(mu_ij d_j f) on raw values.
// Diagonal terms use the conservative flux form with half-point averaged
// coefficients; off-diagonal terms use nested central differences. Dirichlet
// axes read zero ghost values, so the assembled matrix stays symmetric.
class KineticOp {
 public:
  explicit KineticOp(GridPtr grid) : grid_(std::move(grid)) {}

  void apply(const std::vector<cplx>& f, std::vector<cplx>& out) const {
    const Grid& g = *grid_;
    out.assign(f.size(), cplx{0.0, 0.0});
    for (int a = 0; a < g.ndim(); ++a) add_flux_axis(f, out, a);
    if (!g.metric().diagonal_constant()) {
      scratch1_.resize(f.size());
      scratch2_.resize(f.size());
      for (int a = 0; a < g.ndim(); ++a)
        for (int b = a + 1; b < g.ndim(); ++b) {
          add_cross_term(f, out, a, b);
          add_cross_term(f, out, b, a);
        }
    }
  }

 private:
  template <class Fn>
  void for_each_line(int axis, Fn&& fn) const {
    const Grid& g = *grid_;
    const std::size_t stride = g.stride(axis);
    const std::size_t count = static_cast<std::size_t>(g.axis(axis).count);
    const std::size_t nlines = g.size() / count;
    const std::size_t block = stride * count;
    for (std::size_t line = 0; line < nlines; ++line) {
      const std::size_t base = (line / stride) * block + (line % stride);
      fn(base, stride, count);
    }
  }

  void add_flux_axis(const std::vector<cplx>& f, std::vector<cplx>& out,
                     int a) const {
    const Grid& g = *grid_;
    const Metric& mu = g.metric();
    const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
    const bool periodic = g.axis(a).mode == Boundary::periodic;
    const bool diag_const = mu.diagonal_constant();
    const double mu_const = diag_const ? mu.diag(a) : 0.0;
    for_each_line(a, [&](std::size_t base, std::size_t s, std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = base + k * s;
        const bool has_m = periodic || k > 0;
        const bool has_p = periodic || k + 1 < n;
        const std::size_t im = has_m ? base + (k == 0 ? n - 1 : k - 1) * s : i;
        const std::size_t ip = has_p ? base + (k + 1 == n ? 0 : k + 1) * s : i;
        const cplx fm = has_m ? f[im] : cplx{0.0, 0.0};
        const cplx fp = has_p ? f[ip] : cplx{0.0, 0.0};
        double mm = mu_const, mp = mu_const;
        if (!diag_const) {
          const double mi = mu.at(a, a, i);
          mm = has_m ? 0.5 * (mi + mu.at(a, a, im)) : mi;
          mp = has_p ? 0.5 * (mi + mu.at(a, a, ip)) : mi;
        }
        out[i] += (mp * (fp - f[i]) - mm * (f[i] - fm)) * inv_h2;
      }
    });
  }

  // out += D_a (mu_ab . D_b f), central differences with zero ghosts.
  void add_cross_term(const std::vector<cplx>& f, std::vector<cplx>& out,
                      int a, int b) const {
    const Grid& g = *grid_;
    central_derivative(f, scratch1_, b);
    const Metric& mu = g.metric();
    for (std::size_t i = 0; i < f.size(); ++i)
      scratch1_[i] *= mu.at(a, b, i);
    central_derivative(scratch1_, scratch2_, a);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] += scratch2_[i];
  }

  void central_derivative(const std::vector<cplx>& f, std::vector<cplx>& out,
                          int axis) const {
    const Grid& g = *grid_;
    out.resize(f.size());
    const double inv2h = 1.0 / (2.0 * g.spacing(axis));
    const bool periodic = g.axis(axis).mode == Boundary::periodic;
    for_each_line(axis, [&](std::size_t base, std::size_t s, std::size_t n) {
      for (std::size_t k = 0; k < n; ++k) {
        const cplx fm = (k > 0) ? f[base + (k - 1) * s]
                                : (periodic ? f[base + (n - 1) * s] : cplx{});
        const cplx fp = (k + 1 < n) ? f[base + (k + 1) * s]
                                    : (periodic ? f[base] : cplx{});
        out[base + k * s] = (fp - fm) * inv2h;
      }
    });
  }

  GridPtr grid_;
  mutable std::vector<cplx> scratch1_, scratch2_;
};

std::vector<double> sample_potential(const Grid& g,
                                     const HamiltonianSpec& spec, double t) {
  std::vector<double> v(g.size(), 0.0);
  if (!spec.potential) return v;
  std::vector<double> q(static_cast<std::size_t>(g.ndim()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, q.data());
    v[i] = spec.potential(q.data(), t);
    if (!std::isfinite(v[i])) throw NumericError("potential: non-finite value");
  }
  return v;
}

}  // namespace

const char* solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::split_fourier:
      return "split-fourier";
    case SolverKind::crank_nicolson:
      return "crank-nicolson";
    default:
      return "auto";
  }
}

SolverKind choose_solver(const Grid& g, SolverKind requested) {
  if (requested != SolverKind::auto_select) {
    if (requested == SolverKind::split_fourier) {
      for (int a = 0; a < g.ndim(); ++a)
        if (g.axis(a).mode != Boundary::periodic)
          throw InvalidArgument("split-fourier requires periodic axes");
      if (!g.metric().diagonal_constant())
        throw InvalidArgument(
            "split-fourier requires a constant diagonal metric");
    }
    return requested;
  }
  bool all_periodic = true;
  for (int a = 0; a < g.ndim(); ++a)
    if (g.axis(a).mode != Boundary::periodic) all_periodic = false;
  return all_periodic && g.metric().diagonal_constant()
             ? SolverKind::split_fourier
             : SolverKind::crank_nicolson;
}

ComplexField apply_hamiltonian(const ComplexField& psi,
                               const HamiltonianSpec& spec, double t) {
  const Grid& g = psi.grid();
  KineticOp kin(psi.grid_ptr());
  std::vector<cplx> out;
  kin.apply(psi.values(), out);
  const double c = -0.5 * spec.hbar * spec.hbar;
  const auto v = sample_potential(g, spec, t);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = c * out[i] + v[i] * psi[i];
  ComplexField res(psi.grid_ptr(), std::move(out), psi.time());
  res.require_finite("apply_hamiltonian");
  return res;
}

double l2_norm(const ComplexField& psi) {
  const Grid& g = psi.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i)
    s += std::norm(psi[i]) * g.cell_volume(i);
  return std::sqrt(s);
}

void normalize(ComplexField& psi) {
  const double n = l2_norm(psi);
  if (!(n > 0.0) || !std::isfinite(n))
    throw NumericError("normalize: zero or non-finite norm");
  const double inv = 1.0 / n;
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= inv;
}

RealField born_density(const ComplexField& psi) {
  RealField rho(psi.grid_ptr(), 0.0, psi.time());
  for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
  return rho;
}

// --- Steppers ---------------------------------------------------------------

class StepperImpl {
 public:
  virtual ~StepperImpl() = default;
  virtual void step(ComplexField& psi, double t) = 0;
  virtual SolverKind kind() const = 0;
};

namespace {

class SplitFourierImpl final : public StepperImpl {
 public:
  SplitFourierImpl(GridPtr grid, HamiltonianSpec spec, double dt)
      : grid_(std::move(grid)), spec_(std::move(spec)), dt_(dt) {
    const Grid& g = *grid_;
    int dims[4];
    for (int a = 0; a < g.ndim(); ++a) dims[a] = g.axis(a).count;
    buf_ = static_cast<cplx*>(fftw_malloc(sizeof(cplx) * g.size()));
    if (!buf_) throw NumericError("split-fourier: allocation failed");
    // FFTW_ESTIMATE keeps planning deterministic, which keeps reruns
    // byte-identical.
    fwd_ = fftw_plan_dft(g.ndim(), dims, reinterpret_cast<fftw_complex*>(buf_),
                         reinterpret_cast<fftw_complex*>(buf_), FFTW_FORWARD,
                         FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft(g.ndim(), dims, reinterpret_cast<fftw_complex*>(buf_),
                         reinterpret_cast<fftw_complex*>(buf_), FFTW_BACKWARD,
                         FFTW_ESTIMATE);
    build_kinetic_phase();
  }

  ~SplitFourierImpl() override {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  SolverKind kind() const override { return SolverKind::split_fourier; }

  void step(ComplexField& psi, double t) override {
    const Grid& g = *grid_;
    const bool have_v = static_cast<bool>(spec_.potential);
    if (have_v && (vphase_.empty() || spec_.time_dependent))
      build_potential_phase(t + 0.5 * dt_);
    auto& vals = psi.values();
    if (have_v)
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] *= vphase_[i];
    std::memcpy(buf_, vals.data(), sizeof(cplx) * g.size());
    fftw_execute(fwd_);
    for (std::size_t i = 0; i < g.size(); ++i) buf_[i] *= kphase_[i];
    fftw_execute(bwd_);
    std::memcpy(vals.data(), buf_, sizeof(cplx) * g.size());
    if (have_v)
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] *= vphase_[i];
  }

 private:
  void build_kinetic_phase() {
    const Grid& g = *grid_;
    kphase_.resize(g.size());
    const double scale = 1.0 / static_cast<double>(g.size());
    int idx[4];
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.unflatten(i, idx);
      double k2 = 0.0;
      for (int a = 0; a < g.ndim(); ++a) {
        const AxisSpec& ax = g.axis(a);
        const int n = ax.count;
        const int j = idx[a] <= n / 2 ? idx[a] : idx[a] - n;
        const double k = 2.0 * M_PI * j / (ax.hi - ax.lo);
        k2 += g.metric().diag(a) * k * k;
      }
      const double phase = -0.5 * spec_.hbar * dt_ * k2;
      kphase_[i] = std::polar(scale, phase);
    }
  }

  void build_potential_phase(double t_mid) {
    const Grid& g = *grid_;
    const auto v = sample_potential(g, spec_, t_mid);
    vphase_.resize(g.size());
    const double c = -0.5 * dt_ / spec_.hbar;
    for (std::size_t i = 0; i < g.size(); ++i)
      vphase_[i] = std::polar(1.0, c * v[i]);
  }

  GridPtr grid_;
  HamiltonianSpec spec_;
  double dt_;
  cplx* buf_ = nullptr;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
  std::vector<cplx> kphase_;
  std::vector<cplx> vphase_;
};

class CrankNicolsonImpl final : public StepperImpl {
 public:
  CrankNicolsonImpl(GridPtr grid, HamiltonianSpec spec, double dt, double tol)
      : grid_(std::move(grid)),
        spec_(std::move(spec)),
        dt_(dt),
        tol_(tol),
        kin_(grid_) {
    if (!spec_.time_dependent) refresh_potential(0.0);
  }

  SolverKind kind() const override { return SolverKind::crank_nicolson; }

  void step(ComplexField& psi, double t) override {
    if (spec_.time_dependent) refresh_potential(t + 0.5 * dt_);
    const std::size_t n = psi.size();
    auto& x = psi.values();
    // b = (I - i alpha H) psi with alpha = dt / (2 hbar).
    apply_h(x, hx_);
    const cplx ia{0.0, dt_ / (2.0 * spec_.hbar)};
    b_.resize(n);
    for (std::size_t i = 0; i < n; ++i) b_[i] = x[i] - ia * hx_[i];
    solve(b_, x, ia);
    psi.require_finite("crank-nicolson step");
  }

 private:
  void refresh_potential(double t_mid) {
    v_ = sample_potential(*grid_, spec_, t_mid);
    // Diagonal of H for the Jacobi preconditioner. Cross terms never touch
    // the diagonal.
    const Grid& g = *grid_;
    const Metric& mu = g.metric();
    hdiag_.assign(g.size(), 0.0);
    const double c = 0.5 * spec_.hbar * spec_.hbar;
    for (int a = 0; a < g.ndim(); ++a) {
      const double inv_h2 = 1.0 / (g.spacing(a) * g.spacing(a));
      if (mu.diagonal_constant()) {
        const double m2 = 2.0 * mu.diag(a);
        for (std::size_t i = 0; i < g.size(); ++i)
          hdiag_[i] += c * m2 * inv_h2;
      } else {
        // Half-point coefficients average to mu at i up to neighbors; the
        // exact value only matters for preconditioning quality.
        for (std::size_t i = 0; i < g.size(); ++i)
          hdiag_[i] += c * 2.0 * mu.at(a, a, i) * inv_h2;
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) hdiag_[i] += v_[i];
  }

  void apply_h(const std::vector<cplx>& f, std::vector<cplx>& out) {
    kin_.apply(f, out);
    const double c = -0.5 * spec_.hbar * spec_.hbar;
    for (std::size_t i = 0; i < f.size(); ++i)
      out[i] = c * out[i] + v_[i] * f[i];
  }

  void apply_a(const std::vector<cplx>& f, std::vector<cplx>& out,
               const cplx& ia) {
    apply_h(f, out);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] + ia * out[i];
  }

  static double nrm(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& x : v) s += std::norm(x);
    return std::sqrt(s);
  }

  static cplx dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
  }

  // Right-preconditioned BiCGStab for (I + i alpha H) x = b with a Jacobi
  // preconditioner. x holds the initial guess on entry.
  void solve(const std::vector<cplx>& b, std::vector<cplx>& x, const cplx& ia) {
    const std::size_t n = b.size();
    prec_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      prec_[i] = 1.0 / (1.0 + ia * hdiag_[i]);
    const double bnorm = nrm(b);
    if (bnorm == 0.0) {
      x.assign(n, cplx{});
      return;
    }
    std::vector<cplx>&r = r_, &rhat = rhat_, &p = p_, &v = v2_, &s = s_,
    &tvec = t_, &phat = phat_, &shat = shat_;
    apply_a(x, r, ia);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    rhat = r;
    cplx rho_c{1.0, 0.0}, alpha_c{1.0, 0.0}, omega_c{1.0, 0.0};
    p.assign(n, cplx{});
    v.assign(n, cplx{});
    const int max_iter = 2000;
    for (int it = 0; it < max_iter; ++it) {
      if (nrm(r) <= tol_ * bnorm) return;
      const cplx rho1 = dot(rhat, r);
      if (std::abs(rho1) < 1e-300)
        throw NumericError("crank-nicolson: linear solve broke down");
      const cplx beta = (rho1 / rho_c) * (alpha_c / omega_c);
      for (std::size_t i = 0; i < n; ++i)
        p[i] = r[i] + beta * (p[i] - omega_c * v[i]);
      phat.resize(n);
      for (std::size_t i = 0; i < n; ++i) phat[i] = prec_[i] * p[i];
      apply_a(phat, v, ia);
      alpha_c = rho1 / dot(rhat, v);
      s.resize(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha_c * v[i];
      if (nrm(s) <= tol_ * bnorm) {
        for (std::size_t i = 0; i < n; ++i) x[i] += alpha_c * phat[i];
        return;
      }
      shat.resize(n);
      for (std::size_t i = 0; i < n; ++i) shat[i] = prec_[i] * s[i];
      apply_a(shat, tvec, ia);
      omega_c = dot(tvec, s) / dot(tvec, tvec);
      for (std::size_t i = 0; i < n; ++i)
        x[i] += alpha_c * phat[i] + omega_c * shat[i];
      for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega_c * tvec[i];
      rho_c = rho1;
    }
    throw NumericError("crank-nicolson: linear solve did not converge");
  }

  GridPtr grid_;
  HamiltonianSpec spec_;
  double dt_;
  double tol_;
  KineticOp kin_;
  std::vector<double> v_, hdiag_;
  std::vector<cplx> hx_, b_, prec_, r_, rhat_, p_, v2_, s_, t_, phat_, shat_;
};

}  // namespace

Stepper::Stepper(GridPtr grid, HamiltonianSpec spec, double dt, SolverKind kind,
                 double solve_tol) {
  if (!(dt > 0.0)) throw InvalidArgument("stepper: dt must be positive");
  if (!(spec.hbar > 0.0)) throw InvalidArgument("stepper: hbar must be positive");
  const SolverKind chosen = choose_solver(*grid, kind);
  if (chosen == SolverKind::split_fourier)
    impl_ = std::make_unique<SplitFourierImpl>(std::move(grid), std::move(spec), dt);
  else
    impl_ = std::make_unique<CrankNicolsonImpl>(std::move(grid), std::move(spec),
                                                dt, solve_tol);
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

void Stepper::step(ComplexField& psi, double t) { impl_->step(psi, t); }

SolverKind Stepper::kind() const { return impl_->kind(); }

SnapshotSeries evolve_stream(
    const ComplexField& psi0, const HamiltonianSpec& spec,
    const EvolveOptions& opt,
    const std::function<void(double, const ComplexField&)>& sink) {
  if (!(opt.t1 > opt.t0)) throw InvalidArgument("evolve: t1 must exceed t0");
  const double span = opt.t1 - opt.t0;
  const long long nsteps = std::llround(span / opt.dt);
  if (nsteps < 1 || std::abs(nsteps * opt.dt - span) > 1e-9 * std::max(1.0, span))
    throw InvalidArgument("evolve: time span must be an integer number of dt");
  if (opt.store_every < 1 || nsteps % opt.store_every != 0)
    throw InvalidArgument("evolve: step count must be a multiple of store_every");

  Stepper stepper(psi0.grid_ptr(), spec, opt.dt,
                  choose_solver(psi0.grid(), opt.solver), opt.solve_tol);
  ComplexField psi = psi0;
  const double norm0 = l2_norm(psi);
  if (!(norm0 > 0.0)) throw InvalidArgument("evolve: initial state has zero norm");

  SnapshotSeries meta;
  meta.hbar = spec.hbar;
  meta.dt = opt.dt;
  meta.store_every = opt.store_every;
  meta.solver_id = solver_name(stepper.kind());

  psi.set_time(opt.t0);
  meta.times.push_back(opt.t0);
  if (sink) sink(opt.t0, psi);
  for (long long k = 1; k <= nsteps; ++k) {
    stepper.step(psi, opt.t0 + (k - 1) * opt.dt);
    if (k % opt.store_every == 0) {
      const double t = opt.t0 + k * opt.dt;
      psi.set_time(t);
      const double drift = std::abs(l2_norm(psi) - norm0) / norm0;
      if (drift > opt.norm_tol)
        throw NumericError("evolve: norm drift " + format_double(drift) +
                           " exceeds tolerance");
      meta.times.push_back(t);
      if (sink) sink(t, psi);
    }
  }
  return meta;
}

SnapshotSeries evolve(const ComplexField& psi0, const HamiltonianSpec& spec,
                      const EvolveOptions& opt) {
  SnapshotSeries series;
  SnapshotSeries meta = evolve_stream(
      psi0, spec, opt,
      [&](double, const ComplexField& psi) { series.states.push_back(psi); });
  series.times = std::move(meta.times);
  series.hbar = meta.hbar;
  series.dt = meta.dt;
  series.store_every = meta.store_every;
  series.solver_id = std::move(meta.solver_id);
  return series;
}

// --- State presets ----------------------------------------------------------

ComplexField gaussian_packet(GridPtr grid, double hbar,
                             const std::vector<double>& center,
                             const std::vector<double>& sigma,
                             const std::vector<double>& momentum) {
  const Grid& g = *grid;
  const std::size_t nd = static_cast<std::size_t>(g.ndim());
  if (center.size() != nd || sigma.size() != nd || momentum.size() != nd)
    throw InvalidArgument("gaussian_packet: parameter dimension mismatch");
  for (double s : sigma)
    if (!(s > 0.0)) throw InvalidArgument("gaussian_packet: sigma must be positive");
  ComplexField psi = ComplexField::from_function(
      grid,
      [&](const double* q) {
        double amp = 0.0, ph = 0.0;
        for (std::size_t a = 0; a < nd; ++a) {
          const double d = q[a] - center[a];
          amp -= d * d / (4.0 * sigma[a] * sigma[a]);
          ph += momentum[a] * d / hbar;
        }
        return std::polar(std::exp(amp), ph);
      },
      0.0);
  normalize(psi);
  return psi;
}

ComplexField superpose(const ComplexField& a, const ComplexField& b,
                       std::complex<double> w) {
  require_same_layout(a.grid(), b.grid(), "superpose");
  ComplexField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * b[i];
  normalize(out);
  return out;
}

ComplexField plane_wave(GridPtr grid, double hbar,
                        const std::vector<double>& momentum,
                        std::vector<double>* snapped) {
  const Grid& g = *grid;
  const std::size_t nd = static_cast<std::size_t>(g.ndim());
  if (momentum.size() != nd)
    throw InvalidArgument("plane_wave: momentum dimension mismatch");
  std::vector<double> p(nd);
  for (int a = 0; a < g.ndim(); ++a) {
    const AxisSpec& ax = g.axis(a);
    if (ax.mode != Boundary::periodic)
      throw InvalidArgument("plane_wave: requires periodic axes");
    const double l = ax.hi - ax.lo;
    const double n = std::round(momentum[static_cast<std::size_t>(a)] * l /
                                (2.0 * M_PI * hbar));
    p[static_cast<std::size_t>(a)] = n * 2.0 * M_PI * hbar / l;
  }
  if (snapped) *snapped = p;
  ComplexField psi = ComplexField::from_function(
      grid,
      [&](const double* q) {
        double ph = 0.0;
        for (std::size_t a = 0; a < nd; ++a)
          ph += p[a] * (q[a] - g.axis(static_cast<int>(a)).lo) / hbar;
        return std::polar(1.0, ph);
      },
      0.0);
  normalize(psi);
  return psi;
}

ComplexField harmonic_ground(GridPtr grid, double hbar,
                             const std::vector<double>& center,
                             const std::vector<double>& spring) {
  const Grid& g = *grid;
  const std::size_t nd = static_cast<std::size_t>(g.ndim());
  if (spring.size() != nd)
    throw InvalidArgument("harmonic_ground: spring dimension mismatch");
  if (!g.metric().diagonal_constant())
    throw InvalidArgument("harmonic_ground: needs a diagonal metric");
  std::vector<double> sigma(nd);
  for (std::size_t a = 0; a < nd; ++a) {
    if (!(spring[a] > 0.0))
      throw InvalidArgument("harmonic_ground: spring must be positive");
    const double mu = g.metric().diag(static_cast<int>(a));
    const double omega = std::sqrt(spring[a] * mu);  // mu = 1/m
    sigma[a] = std::sqrt(0.5 * hbar * mu / omega);
  }
  return gaussian_packet(std::move(grid), hbar, center, sigma,
                         std::vector<double>(nd, 0.0));
}

std::function<double(const double*, double)> harmonic_potential(
    std::vector<double> spring, std::vector<double> center) {
  return [spring = std::move(spring), center = std::move(center)](
             const double* q, double) {
    double v = 0.0;
    for (std::size_t a = 0; a < spring.size(); ++a) {
      const double d = q[a] - center[a];
      v += 0.5 * spring[a] * d * d;
    }
    return v;
  };
}

}  // namespace pw
