#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "crossview/matrix.hpp"
#include "crossview/subspace.hpp"

namespace crossview::cli {

// Exit codes: 0 success, 2 usage, 3 data, 4 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// The invoking command line, reconstructed once in main() for sidecars.
const std::string& command_line();
void set_command_line(int argc, char** argv);

/// Writes `text` to path atomically (temp file + rename).
void write_text_atomic(const std::string& path, const std::string& text);

/// Writes the JSON sidecar `<artifact>.json` recording the producing command
/// and seed, merged with `extra` fields.
void write_sidecar(const std::string& artifact_path, std::uint64_t seed,
                   const nlohmann::json& extra = {});

nlohmann::json read_json_file(const std::string& path);

/// Deterministic CSV cell for doubles (shortest round-trip form).
std::string fmt(double v);

// Subspace artifact: basis as GFKM, mean and flags in the sidecar.
void save_subspace(const std::string& path, const Subspace& s,
                   std::uint64_t seed, bool centered);
Subspace load_subspace(const std::string& path);

// Kernel artifact: Q as GFKM; means and angle diagnostics in the sidecar.
struct KernelFile {
  Matrix q;
  Vector mean_source;
  Vector mean_target;
};

void save_kernel(const std::string& path, const Matrix& q,
                 const Vector& mean_source, const Vector& mean_target,
                 const Vector& omegas, const Vector& lambda1,
                 const Vector& lambda2, const Vector& lambda3,
                 std::uint64_t seed);
KernelFile load_kernel(const std::string& path);

/// Reads a GFKM holding a vector (one row or one column).
Vector load_vector(const std::string& path);

}  // namespace crossview::cli
