#pragma once

// Snapshot files and the per-step diagnostics CSV.
//
// A snapshot is a raw payload of little-endian IEEE-754 doubles in (i, j, k)
// order with k fastest, plus a UTF-8 JSON sidecar sharing the basename:
//   snap_000010.bin
//   snap_000010.meta.json

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "activefv/errors.hpp"
#include "activefv/grid.hpp"
#include "activefv/stepper.hpp"

namespace activefv {

inline constexpr const char* kSnapshotVersion = "1";

struct SnapshotMeta {
  GridSpec grid;
  std::optional<ModelParams> params;
  double time = 0.0;
  int step = 0;

  friend bool operator==(const SnapshotMeta& a, const SnapshotMeta& b) {
    const bool same_params =
        a.params.has_value() == b.params.has_value() &&
        (!a.params || (a.params->D_T == b.params->D_T && a.params->Pe == b.params->Pe &&
                       a.params->gamma == b.params->gamma &&
                       a.params->alpha == b.params->alpha &&
                       a.params->kernel == b.params->kernel));
    return a.grid == b.grid && a.time == b.time && a.step == b.step && same_params;
  }
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& payload) {
  std::filesystem::path p = payload;
  p.replace_extension(".meta.json");
  return p;
}

namespace detail {

inline nlohmann::json meta_to_json(const SnapshotMeta& m) {
  nlohmann::json j;
  j["version"] = kSnapshotVersion;
  j["byte_order"] = "little";
  j["dtype"] = "float64";
  j["layout"] = "i,j,k (k fastest)";
  j["payload_bytes"] = m.grid.num_cells() * sizeof(double);
  const GridSpec& g = m.grid;
  j["grid"] = {{"nx", g.nx},         {"ny", g.ny}, {"ntheta", g.ntheta},
               {"dx", g.dx},         {"dy", g.dy}, {"dtheta", g.dtheta},
               {"dt", g.dt},         {"nt", g.nt}};
  if (m.params) {
    const ModelParams& p = *m.params;
    j["params"] = {{"D_T", p.D_T},
                   {"Pe", p.Pe},
                   {"gamma", p.gamma},
                   {"alpha", p.alpha},
                   {"kernel", to_string(p.kernel.tag)},
                   {"length", p.kernel.length}};
  }
  j["time"] = m.time;
  j["step"] = m.step;
  return j;
}

inline SnapshotMeta meta_from_json(const nlohmann::json& j) {
  SnapshotMeta m;
  const auto& g = j.at("grid");
  m.grid.nx = g.at("nx").get<int>();
  m.grid.ny = g.at("ny").get<int>();
  m.grid.ntheta = g.at("ntheta").get<int>();
  m.grid.dx = g.at("dx").get<double>();
  m.grid.dy = g.at("dy").get<double>();
  m.grid.dtheta = g.at("dtheta").get<double>();
  m.grid.dt = g.at("dt").get<double>();
  m.grid.nt = g.at("nt").get<int>();
  if (j.contains("params")) {
    const auto& p = j.at("params");
    ModelParams mp;
    mp.D_T = p.at("D_T").get<double>();
    mp.Pe = p.at("Pe").get<double>();
    mp.gamma = p.at("gamma").get<double>();
    mp.alpha = p.at("alpha").get<double>();
    const std::string k = p.at("kernel").get<std::string>();
    const double len = p.at("length").get<double>();
    if (k == "B0") mp.kernel = {KernelKind::Tag::B0, len};
    else if (k == "Blambda") mp.kernel = {KernelKind::Tag::Blambda, len};
    else if (k == "Btau") mp.kernel = {KernelKind::Tag::Btau, len};
    else throw IoError("snapshot metadata: unknown kernel '" + k + "'");
    m.params = mp;
  }
  m.time = j.at("time").get<double>();
  m.step = j.at("step").get<int>();
  return m;
}

}  // namespace detail

inline void write_snapshot(const DensityField& f, const SnapshotMeta& meta,
                           const std::filesystem::path& path) {
  if (!f.grid().same_mesh(meta.grid))
    throw IoError("snapshot metadata grid does not match the field");
  std::vector<unsigned char> bytes(f.size() * 8);
  for (std::size_t m = 0; m < f.size(); ++m) {
    const auto bits = std::bit_cast<std::uint64_t>(f.values()[m]);
    for (int b = 0; b < 8; ++b)
      bytes[8 * m + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write snapshot '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
  }
  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw IoError("cannot write snapshot metadata for '" + path.string() + "'");
  side << detail::meta_to_json(meta).dump(2) << '\n';
  if (!side) throw IoError("short write of snapshot metadata");
}

struct LoadedSnapshot {
  DensityField f;
  SnapshotMeta meta;
};

inline LoadedSnapshot read_snapshot(const std::filesystem::path& path) {
  nlohmann::json j;
  {
    std::ifstream side(sidecar_path(path));
    if (!side) throw IoError("missing snapshot metadata for '" + path.string() + "'");
    try {
      side >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("corrupt snapshot metadata: ") + e.what());
    }
  }
  SnapshotMeta meta;
  std::uint64_t declared = 0;
  try {
    if (!j.contains("version") || j.at("version") != kSnapshotVersion)
      throw IoError("snapshot version mismatch (expected " + std::string(kSnapshotVersion) +
                    ")");
    if (j.value("byte_order", "") != "little")
      throw IoError("unsupported snapshot byte order");
    meta = detail::meta_from_json(j);
    declared = j.at("payload_bytes").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt snapshot metadata: ") + e.what());
  }
  if (meta.grid.nx < 1 || meta.grid.ny < 1 || meta.grid.ntheta < 1)
    throw IoError("corrupt snapshot metadata: bad cell counts");
  if (declared != meta.grid.num_cells() * 8)
    throw IoError("snapshot consistency error: metadata grid implies " +
                  std::to_string(meta.grid.num_cells() * 8) + " bytes, header declares " +
                  std::to_string(declared));

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() != declared)
    throw IoError("snapshot length mismatch: expected " + std::to_string(declared) +
                  " bytes, found " + std::to_string(bytes.size()));
  std::vector<double> values(meta.grid.num_cells());
  for (std::size_t m = 0; m < values.size(); ++m) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[8 * m + b]} << (8 * b);
    values[m] = std::bit_cast<double>(bits);
  }
  return {DensityField(meta.grid, std::move(values)), meta};
}

// ---------------------------------------------------------------------------
// Diagnostics CSV

inline constexpr const char* kDiagnosticsHeader =
    "step,time,mass,min_f,L2,Linf,steady_metric_L2,steady_metric_Linf,picard_iters";

inline void write_csv_row(std::ostream& out, const StepDiagnostics& d) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << d.step << ',' << d.time << ',' << d.mass << ','
     << d.min_f << ',' << d.l2 << ',' << d.linf << ',' << d.steady_l2 << ','
     << d.steady_linf << ',' << d.picard_iters << '\n';
  out << os.str();
}

// Streams rows as they are produced so a failed run keeps its prefix.
class DiagnosticsWriter {
 public:
  explicit DiagnosticsWriter(const std::filesystem::path& path)
      : out_(path, std::ios::trunc | std::ios::binary) {
    if (!out_) throw IoError("cannot write diagnostics '" + path.string() + "'");
    out_ << kDiagnosticsHeader << '\n';
  }

  void append(const StepDiagnostics& d) {
    write_csv_row(out_, d);
    out_.flush();
  }

 private:
  std::ofstream out_;
};

}  // namespace activefv
