#include "pilotwave/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace pw {

namespace {

constexpr char field_magic[8] = {'P', 'W', 'F', 'I', 'E', 'L', 'D', '\0'};
constexpr char traj_magic[8] = {'P', 'W', 'T', 'R', 'A', 'J', '\0', '\0'};
constexpr std::uint32_t format_version = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_field_header(std::ostream& os, const Grid& g, double time,
                        bool complex_kind) {
  os.write(field_magic, 8);
  put_u32(os, format_version);
  put_u32(os, complex_kind ? 1 : 0);
  put_u32(os, static_cast<std::uint32_t>(g.ndim()));
  for (int a = 0; a < g.ndim(); ++a) {
    const AxisSpec& ax = g.axis(a);
    put_f64(os, ax.lo);
    put_f64(os, ax.hi);
    put_u32(os, static_cast<std::uint32_t>(ax.count));
    put_u32(os, ax.mode == Boundary::periodic ? 0 : 1);
  }
  put_f64(os, time);
}

struct FieldHeader {
  GridPtr grid;
  double time;
  bool complex_kind;
};

FieldHeader read_field_header(std::istream& is, const std::string& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, field_magic, 8) != 0)
    throw IoError("not a field container: " + path);
  const std::uint32_t version = get_u32(is);
  if (version != format_version)
    throw IoError("unsupported field container version in " + path);
  const std::uint32_t kind = get_u32(is);
  if (kind > 1) throw IoError("bad field kind in " + path);
  const std::uint32_t ndim = get_u32(is);
  if (ndim < 1 || ndim > 4) throw IoError("bad dimension in " + path);
  std::vector<AxisSpec> axes(ndim);
  for (auto& ax : axes) {
    ax.lo = get_f64(is);
    ax.hi = get_f64(is);
    ax.count = static_cast<int>(get_u32(is));
    ax.mode = get_u32(is) == 0 ? Boundary::periodic : Boundary::dirichlet;
  }
  const double time = get_f64(is);
  if (!is) throw IoError("truncated field container: " + path);
  return {make_grid(std::move(axes)), time, kind == 1};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return is;
}

}  // namespace

void write_field(const RealField& f, const std::string& path) {
  auto os = open_out(path);
  write_field_header(os, f.grid(), f.time(), false);
  for (std::size_t i = 0; i < f.size(); ++i) put_f64(os, f[i]);
  if (!os) throw IoError("write failed: " + path);
}

void write_field(const ComplexField& f, const std::string& path) {
  auto os = open_out(path);
  write_field_header(os, f.grid(), f.time(), true);
  for (std::size_t i = 0; i < f.size(); ++i) {
    put_f64(os, f[i].real());
    put_f64(os, f[i].imag());
  }
  if (!os) throw IoError("write failed: " + path);
}

std::variant<RealField, ComplexField> read_field(const std::string& path) {
  auto is = open_in(path);
  const FieldHeader h = read_field_header(is, path);
  const std::size_t n = h.grid->size();
  if (h.complex_kind) {
    std::vector<std::complex<double>> v(n);
    for (auto& x : v) {
      const double re = get_f64(is);
      const double im = get_f64(is);
      x = {re, im};
    }
    if (!is) throw IoError("truncated field container: " + path);
    return ComplexField(h.grid, std::move(v), h.time);
  }
  std::vector<double> v(n);
  for (auto& x : v) x = get_f64(is);
  if (!is) throw IoError("truncated field container: " + path);
  return RealField(h.grid, std::move(v), h.time);
}

RealField read_real_field(const std::string& path) {
  auto f = read_field(path);
  if (!std::holds_alternative<RealField>(f))
    throw IoError("expected a real field in " + path);
  return std::get<RealField>(std::move(f));
}

ComplexField read_complex_field(const std::string& path) {
  auto f = read_field(path);
  if (!std::holds_alternative<ComplexField>(f))
    throw IoError("expected a complex field in " + path);
  return std::get<ComplexField>(std::move(f));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

template <class T, class Emit>
void write_csv_impl(const FieldT<T>& f, const std::string& path,
                    const char* value_header, Emit&& emit) {
  auto os = open_out(path);
  const Grid& g = f.grid();
  for (int a = 0; a < g.ndim(); ++a) os << "q_" << (a + 1) << ",";
  os << value_header << "\n";
  std::vector<double> q(static_cast<std::size_t>(g.ndim()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    g.node(i, q.data());
    for (double x : q) os << format_double(x) << ",";
    emit(os, f[i]);
    os << "\n";
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace

void write_field_csv(const RealField& f, const std::string& path) {
  write_csv_impl(f, path, "value",
                 [](std::ostream& os, double v) { os << format_double(v); });
}

void write_field_csv(const ComplexField& f, const std::string& path) {
  write_csv_impl(f, path, "re,im", [](std::ostream& os, std::complex<double> v) {
    os << format_double(v.real()) << "," << format_double(v.imag());
  });
}

void write_manifest(const Manifest& m, const std::string& path) {
  auto os = open_out(path);
  for (const auto& [k, v] : m) os << k << ": " << v << "\n";
  if (!os) throw IoError("write failed: " + path);
}

Manifest read_manifest(const std::string& path) {
  auto is = open_in(path);
  Manifest m;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto pos = line.find(": ");
    if (pos == std::string::npos) throw IoError("bad manifest line in " + path);
    m.emplace_back(line.substr(0, pos), line.substr(pos + 2));
  }
  return m;
}

void write_trajectories(const TrajectoryBlock& t, const std::string& path) {
  if (t.positions.size() != t.times.size() * t.nparticles *
                                static_cast<std::size_t>(t.ndim))
    throw InvalidArgument("trajectories: position count mismatch");
  auto os = open_out(path);
  os.write(traj_magic, 8);
  put_u32(os, format_version);
  put_u32(os, static_cast<std::uint32_t>(t.ndim));
  put_u64(os, t.nparticles);
  put_u64(os, t.times.size());
  put_u64(os, t.seed);
  for (double x : t.times) put_f64(os, x);
  for (double x : t.positions) put_f64(os, x);
  if (!os) throw IoError("write failed: " + path);
}

TrajectoryBlock read_trajectories(const std::string& path) {
  auto is = open_in(path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, traj_magic, 8) != 0)
    throw IoError("not a trajectory block: " + path);
  if (get_u32(is) != format_version)
    throw IoError("unsupported trajectory block version in " + path);
  TrajectoryBlock t;
  t.ndim = static_cast<int>(get_u32(is));
  t.nparticles = get_u64(is);
  const std::size_t ntimes = get_u64(is);
  t.seed = get_u64(is);
  t.times.resize(ntimes);
  for (auto& x : t.times) x = get_f64(is);
  t.positions.resize(ntimes * t.nparticles * static_cast<std::size_t>(t.ndim));
  for (auto& x : t.positions) x = get_f64(is);
  if (!is) throw IoError("truncated trajectory block: " + path);
  return t;
}

void write_trajectories_csv(const TrajectoryBlock& t, const std::string& path) {
  auto os = open_out(path);
  os << "particle,t";
  for (int a = 0; a < t.ndim; ++a) os << ",q_" << (a + 1);
  os << "\n";
  const std::size_t nd = static_cast<std::size_t>(t.ndim);
  for (std::size_t p = 0; p < t.nparticles; ++p) {
    for (std::size_t k = 0; k < t.times.size(); ++k) {
      os << p << "," << format_double(t.times[k]);
      const double* q = &t.positions[(k * t.nparticles + p) * nd];
      for (std::size_t a = 0; a < nd; ++a) os << "," << format_double(q[a]);
      os << "\n";
    }
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace pw
