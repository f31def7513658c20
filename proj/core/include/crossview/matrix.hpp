#pragma once

#include <Eigen/Dense>
#include <string>

namespace crossview {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// True when every entry is finite (no NaN / infinity).
bool all_finite(const Matrix& m);

/// Throws DataError naming `what` if `m` contains NaN or infinity.
void require_finite(const Matrix& m, const std::string& what);

// GFKM container: magic "GFKM", u32 version (=1), u64 rows, u64 cols,
// then rows*cols little-endian doubles in row-major order.
void write_gfkm(const std::string& path, const Matrix& m);
Matrix read_gfkm(const std::string& path);

/// Writes to `path + ".tmp"` then renames, so readers never observe a
/// partially written file.
void write_gfkm_atomic(const std::string& path, const Matrix& m);

}  // namespace crossview
