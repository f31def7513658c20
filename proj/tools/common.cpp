#include "common.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "crossview/errors.hpp"

namespace crossview::cli {

namespace {
std::string g_command_line = "crossview";
}

const std::string& command_line() { return g_command_line; }

void set_command_line(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) cmd += ' ';
    cmd += argv[i];
  }
  g_command_line = cmd;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + tmp);
    os << text;
    if (!os) throw DataError("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_sidecar(const std::string& artifact_path, std::uint64_t seed,
                   const nlohmann::json& extra) {
  nlohmann::json j = extra;
  j["command"] = command_line();
  j["seed"] = seed;
  write_text_atomic(artifact_path + ".json", j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("config not found: " + path);
  try {
    nlohmann::json j;
    is >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad json in " + path + ": " + e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_subspace(const std::string& path, const Subspace& s,
                   std::uint64_t seed, bool centered) {
  write_gfkm_atomic(path, s.basis);
  nlohmann::json extra{{"kind", "subspace"},
                       {"ambient_dim", s.ambient_dim()},
                       {"dim", s.dim()},
                       {"centered", centered},
                       {"mean", std::vector<double>(s.mean.data(),
                                                    s.mean.data() + s.mean.size())}};
  write_sidecar(path, seed, extra);
}

Subspace load_subspace(const std::string& path) {
  Subspace s;
  s.basis = read_gfkm(path);
  const nlohmann::json j = read_json_file(path + ".json");
  const auto mean = j.at("mean").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(mean.size()) != s.basis.rows()) {
    throw DataError("subspace sidecar mean length mismatch: " + path);
  }
  s.mean = Eigen::Map<const Vector>(mean.data(),
                                    static_cast<Eigen::Index>(mean.size()));
  validate_subspace(s);
  return s;
}

namespace {
std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}
Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace

void save_kernel(const std::string& path, const Matrix& q,
                 const Vector& mean_source, const Vector& mean_target,
                 const Vector& omegas, const Vector& lambda1,
                 const Vector& lambda2, const Vector& lambda3,
                 std::uint64_t seed) {
  write_gfkm_atomic(path, q);
  nlohmann::json extra{{"kind", "gfk-kernel"},
                       {"ambient_dim", q.rows()},
                       {"subspace_dim", omegas.size()},
                       {"mean_source", to_std(mean_source)},
                       {"mean_target", to_std(mean_target)},
                       {"omegas", to_std(omegas)},
                       {"lambda1", to_std(lambda1)},
                       {"lambda2", to_std(lambda2)},
                       {"lambda3", to_std(lambda3)}};
  write_sidecar(path, seed, extra);
}

KernelFile load_kernel(const std::string& path) {
  KernelFile k;
  k.q = read_gfkm(path);
  const nlohmann::json j = read_json_file(path + ".json");
  k.mean_source = from_std(j.at("mean_source").get<std::vector<double>>());
  k.mean_target = from_std(j.at("mean_target").get<std::vector<double>>());
  if (k.q.rows() != k.q.cols() || k.mean_source.size() != k.q.rows() ||
      k.mean_target.size() != k.q.rows()) {
    throw DataError("kernel file shapes inconsistent: " + path);
  }
  return k;
}

Vector load_vector(const std::string& path) {
  const Matrix m = read_gfkm(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw DataError("expected a vector (1 x n or n x 1): " + path);
}

}  // namespace crossview::cli
