#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pilotwave/field.hpp"

namespace pw {

// Field container file layout (all little-endian):
//   bytes 0-7   magic "PWFIELD\0"
//   bytes 8-11  u32 format version (1)
//   bytes 12-15 u32 kind: 0 real, 1 complex
//   u32 ndim, then per axis: f64 lo, f64 hi, u32 count, u32 mode
//   (0 periodic, 1 dirichlet), then f64 timestamp, then the values as f64
//   row-major with axis 0 slowest, complex stored as re,im pairs.
void write_field(const RealField& f, const std::string& path);
void write_field(const ComplexField& f, const std::string& path);

std::variant<RealField, ComplexField> read_field(const std::string& path);
RealField read_real_field(const std::string& path);
ComplexField read_complex_field(const std::string& path);

// Plain-text dump for small grids: one row per node, coordinates then value.
void write_field_csv(const RealField& f, const std::string& path);
void write_field_csv(const ComplexField& f, const std::string& path);

// Ordered key: value text files used for run manifests and reports.
using Manifest = std::vector<std::pair<std::string, std::string>>;
void write_manifest(const Manifest& m, const std::string& path);
Manifest read_manifest(const std::string& path);

// Trajectory block, same conventions as the field container:
//   magic "PWTRAJ\0\0", u32 version, u32 ndim, u64 particle count,
//   u64 stored-time count, u64 seed, then the times (f64 each), then for
//   each time all particle positions (npart * ndim f64, particle-major).
struct TrajectoryBlock {
  int ndim = 0;
  std::size_t nparticles = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<double> positions;  // times.size() * nparticles * ndim
};

void write_trajectories(const TrajectoryBlock& t, const std::string& path);
TrajectoryBlock read_trajectories(const std::string& path);
// CSV flavor: header particle,t,q_1..q_n; one row per particle per time.
void write_trajectories_csv(const TrajectoryBlock& t, const std::string& path);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace pw
