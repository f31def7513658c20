#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crossview/gfk.hpp"
#include "crossview/image.hpp"
#include "crossview/matrix.hpp"

namespace crossview {

/// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int class_count);

  void add(int truth, int predicted, std::uint64_t count = 1);
  void accumulate(const Mask& truth, const Mask& predicted);

  /// Associative merge; parallel evaluation combines partial matrices in a
  /// fixed order.
  void merge(const ConfusionMatrix& other);

  int class_count() const { return static_cast<int>(counts_.size()); }
  std::uint64_t at(int truth, int predicted) const;
  std::uint64_t total() const;

 private:
  std::vector<std::vector<std::uint64_t>> counts_;
};

struct MiouResult {
  // IoU per class; classes absent from both truth and prediction (zero
  // union) are excluded from the mean and reported as nullopt.
  std::vector<std::optional<double>> per_class;
  double miou = 0.0;
};

/// IoU_c = TP / (TP + FP + FN) from the global confusion matrix. Throws
/// EmptyEvaluation when every class has zero union.
MiouResult miou(const ConfusionMatrix& conf);

struct HypothesisResult {
  double pearson_r = 0.0;
  double alpha_hat = 0.0;  // least-squares slope of D_x on D_y through origin
  std::size_t samples = 0;
  bool degenerate = false;  // all distances vanished; r undefined
  std::vector<std::pair<double, double>> scatter;  // (D_y, D_x) pairs
};

/// Empirical test of the linear-relation hypothesis on a paired dataset:
/// samples index pairs (i, j), computes D_x between view-crossed image
/// vectors and D_y between the corresponding mask vectors, and reports their
/// Pearson correlation and fitted slope. Rows of the four matrices are the
/// featurized vectors; row i of the source and target matrices describe the
/// same scene. Throws InsufficientPairs below 30 sampled pairs.
HypothesisResult validate_linear_hypothesis(
    const ViewMetric& metric_x, const ViewMetric& metric_y,
    const Matrix& x_source, const Matrix& x_target, const Matrix& y_source,
    const Matrix& y_target, std::size_t n_pairs, std::uint64_t seed);

struct BoundTuple {
  Vector x_s, x_bar_t, x_t;
  Vector y_s, y_bar_t, y_t;
};

struct BoundRow {
  double lhs = 0.0;  // D_x(x_s, x_bar_t) - alpha D_y(y_s, y_bar_t)
  double rhs = 0.0;  // D_x(x_s, x_t) - alpha D_y(y_s, y_t) + 2(1 + alpha)
};

struct BoundReport {
  double max_violation = 0.0;  // max over tuples of lhs - rhs
  std::size_t n_checked = 0;
  std::vector<BoundRow> rows;
};

/// Checks the unpaired-constraint upper bound with its 2(1 + alpha) constant
/// for every tuple. Boundedness of each distance in [0, 2] makes any
/// violation beyond ~1e-9 a bug.
BoundReport check_upper_bound(const ViewMetric& metric_x,
                              const ViewMetric& metric_y,
                              const std::vector<BoundTuple>& tuples,
                              double alpha);

struct TriangleReport {
  double violation_rate = 0.0;
  double worst_margin = 0.0;  // max of D(a,c) - D(a,b) - D(b,c)
  std::size_t n_triples = 0;
};

/// Diagnostic probe of the triangle inequality, which 1 - cosine does not
/// satisfy in general: samples random triples and reports how often and by
/// how much it fails. Measured, not asserted.
TriangleReport triangle_probe(const ViewMetric& metric, std::size_t n_triples,
                              std::uint64_t seed);

}  // namespace crossview
