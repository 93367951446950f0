#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "field.hpp"
#include "json.hpp"

namespace geflow {

inline constexpr char kMagic[6] = {'G', 'E', 'F', 'L', 'D', '1'};
inline constexpr std::uint32_t kMaxRank = 6;

struct ArrayDump {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
};

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t pos) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

// FNV-1a over the little-endian payload bytes.
inline std::string checksum(const std::vector<double>& data) {
  std::uint64_t h = 1469598103934665603ull;
  std::string bytes;
  bytes.reserve(data.size() * 8);
  for (double d : data) detail::put_le(bytes, d);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline std::string encode_array(const ArrayDump& a) {
  if (a.dims.size() > kMaxRank) throw FormatError("rank " + std::to_string(a.dims.size()) + " exceeds 6");
  std::size_t count = 1;
  for (auto d : a.dims) count *= d;
  if (count != a.data.size()) throw FormatError("payload size does not match dims");
  std::string out(kMagic, 6);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
  for (auto d : a.dims) detail::put_le<std::uint32_t>(out, d);
  for (double v : a.data) detail::put_le<double>(out, v);
  return out;
}

inline ArrayDump decode_array(const std::string& in) {
  auto need = [&](std::size_t upto) {
    if (in.size() < upto)
      throw FormatError("truncated field file: missing " + std::to_string(upto - in.size()) + " bytes");
  };
  need(6);
  if (std::memcmp(in.data(), kMagic, 6) != 0) throw FormatError("bad magic: not a GEFLD1 file");
  need(10);
  std::uint32_t rank = detail::get_le<std::uint32_t>(in, 6);
  if (rank > kMaxRank) throw FormatError("rank " + std::to_string(rank) + " exceeds 6");
  need(10 + 4 * rank);
  ArrayDump a;
  std::size_t count = 1;
  for (std::uint32_t k = 0; k < rank; ++k) {
    a.dims.push_back(detail::get_le<std::uint32_t>(in, 10 + 4 * k));
    count *= a.dims.back();
  }
  std::size_t start = 10 + 4 * rank;
  need(start + 8 * count);
  if (in.size() > start + 8 * count) throw FormatError("trailing bytes after payload");
  a.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) a.data[i] = detail::get_le<double>(in, start + 8 * i);
  return a;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

inline void write_array(const std::string& path, const ArrayDump& a) { write_file(path, encode_array(a)); }
inline ArrayDump read_array(const std::string& path) { return decode_array(read_file(path)); }

inline nlohmann::json grid_json(const GridSpec& g) {
  return {{"m", g.m}, {"n", g.n}, {"N", g.N}, {"kind", to_string(g.kind)}};
}

// Writes psi as a rank-(2m+2) array and a JSON sidecar with the symbolic parts.
inline void dump_field(const MetricField& f, const std::string& path) {
  ArrayDump a;
  for (int k = 0; k < f.grid.total().dims; ++k) a.dims.push_back(static_cast<std::uint32_t>(f.grid.N));
  a.data = f.psi;
  write_array(path, a);
  nlohmann::json A = nlohmann::json::array();
  for (int i = 0; i < f.grid.m * f.grid.m; ++i) A.push_back({f.A.a[i].real(), f.A.a[i].imag()});
  nlohmann::json side = {{"kappa", f.kappa},
                         {"scenario", f.scenario},
                         {"grid", grid_json(f.grid)},
                         {"checksum", checksum(f.psi)},
                         {"scheme", f.scheme == DiffScheme::FD4 ? "fd4" : "spectral"},
                         {"base_quadratic", A},
                         {"p", f.p}};
  write_file(path + ".json", side.dump(2));
}

inline MetricField load_field(const std::string& path) {
  ArrayDump a = read_array(path);
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(read_file(path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad sidecar: ") + e.what());
  }
  MetricField f;
  try {
    f.grid.m = side["grid"]["m"];
    f.grid.n = side["grid"]["n"];
    f.grid.N = side["grid"]["N"];
    f.kappa = side["kappa"];
    f.scenario = side["scenario"];
    f.scheme = side["scheme"] == "spectral" ? DiffScheme::Spectral : DiffScheme::FD4;
    f.A = HMat::zero(f.grid.m);
    for (int i = 0; i < f.grid.m * f.grid.m; ++i) f.A.a[i] = {side["base_quadratic"][i][0], side["base_quadratic"][i][1]};
    f.p = side["p"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad sidecar: ") + e.what());
  }
  f.grid.validate();
  if (static_cast<int>(a.dims.size()) != f.grid.total().dims) throw FormatError("dimension mismatch between dump and sidecar");
  for (auto d : a.dims)
    if (static_cast<int>(d) != f.grid.N) throw FormatError("dimension mismatch between dump and sidecar");
  if (checksum(a.data) != side["checksum"].get<std::string>()) throw FormatError("checksum mismatch");
  if (!f.p.empty() && f.p.size() != f.grid.base_size()) throw FormatError("base summand has wrong size");
  f.psi = std::move(a.data);
  return f;
}

}  // namespace geflow
