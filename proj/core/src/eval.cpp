#include "crossview/eval.hpp"

#include <cmath>
#include <string>

#include "crossview/errors.hpp"
#include "crossview/rng.hpp"

namespace crossview {

ConfusionMatrix::ConfusionMatrix(int class_count)
    : counts_(static_cast<std::size_t>(class_count),
              std::vector<std::uint64_t>(static_cast<std::size_t>(class_count),
                                         0)) {
  if (class_count <= 0) {
    throw DimensionError("confusion matrix needs at least one class");
  }
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t count) {
  if (truth < 0 || truth >= class_count() || predicted < 0 ||
      predicted >= class_count()) {
    throw DimensionError("confusion matrix index out of range");
  }
  counts_[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)] +=
      count;
}

void ConfusionMatrix::accumulate(const Mask& truth, const Mask& predicted) {
  if (truth.width != predicted.width || truth.height != predicted.height) {
    throw ShapeMismatch("confusion: mask sizes differ");
  }
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    add(truth.data[i], predicted.data[i]);
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.class_count() != class_count()) {
    throw ShapeMismatch("confusion: class counts differ");
  }
  for (int t = 0; t < class_count(); ++t) {
    for (int p = 0; p < class_count(); ++p) {
      counts_[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] +=
          other.at(t, p);
    }
  }
}

std::uint64_t ConfusionMatrix::at(int truth, int predicted) const {
  return counts_[static_cast<std::size_t>(truth)]
                [static_cast<std::size_t>(predicted)];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts_) {
    for (const auto v : row) n += v;
  }
  return n;
}

MiouResult miou(const ConfusionMatrix& conf) {
  const int c = conf.class_count();
  MiouResult out;
  out.per_class.resize(static_cast<std::size_t>(c));
  double sum = 0.0;
  int included = 0;
  for (int k = 0; k < c; ++k) {
    const std::uint64_t tp = conf.at(k, k);
    std::uint64_t fp = 0, fn = 0;
    for (int other = 0; other < c; ++other) {
      if (other == k) continue;
      fn += conf.at(k, other);
      fp += conf.at(other, k);
    }
    const std::uint64_t uni = tp + fp + fn;
    if (uni == 0) {
      continue;  // absent class: excluded, not counted as 0 or 1
    }
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    out.per_class[static_cast<std::size_t>(k)] = iou;
    sum += iou;
    ++included;
  }
  if (included == 0) {
    throw EmptyEvaluation("miou: no class has a nonzero union");
  }
  out.miou = sum / included;
  return out;
}

HypothesisResult validate_linear_hypothesis(
    const ViewMetric& metric_x, const ViewMetric& metric_y,
    const Matrix& x_source, const Matrix& x_target, const Matrix& y_source,
    const Matrix& y_target, std::size_t n_pairs, std::uint64_t seed) {
  const Eigen::Index ns = x_source.rows();
  const Eigen::Index nt = x_target.rows();
  if (ns != y_source.rows() || nt != y_target.rows()) {
    throw ShapeMismatch("hypothesis: image/mask row counts differ");
  }
  if (n_pairs < 30) {
    throw InsufficientPairs("hypothesis: need at least 30 sampled pairs");
  }

  Rng rng(seed);
  HypothesisResult out;
  out.scatter.reserve(n_pairs);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng.below(ns));
    const Eigen::Index j = static_cast<Eigen::Index>(rng.below(nt));
    const double dx = metric_x.distance(x_source.row(i), x_target.row(j));
    const double dy = metric_y.distance(y_source.row(i), y_target.row(j));
    out.scatter.emplace_back(dy, dx);
  }
  out.samples = out.scatter.size();

  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (const auto& [dy, dx] : out.scatter) {
    sy += dx;
    sx += dy;
    sxx += dy * dy;
    syy += dx * dx;
    sxy += dy * dx;
  }
  const double n = static_cast<double>(out.samples);
  const double var_x = sxx - sx * sx / n;
  const double var_y = syy - sy * sy / n;
  const double cov = sxy - sx * sy / n;
  if (var_x < 1e-18 || var_y < 1e-18) {
    out.degenerate = true;
    out.pearson_r = 0.0;
    out.alpha_hat = 0.0;
    return out;
  }
  out.pearson_r = cov / std::sqrt(var_x * var_y);
  // The hypothesis is proportional, so the slope is fitted through origin.
  out.alpha_hat = sxy / sxx;
  return out;
}

BoundReport check_upper_bound(const ViewMetric& metric_x,
                              const ViewMetric& metric_y,
                              const std::vector<BoundTuple>& tuples,
                              double alpha) {
  BoundReport report;
  report.rows.reserve(tuples.size());
  double max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& t : tuples) {
    BoundRow row;
    row.lhs = metric_x.distance(t.x_s, t.x_bar_t) -
              alpha * metric_y.distance(t.y_s, t.y_bar_t);
    row.rhs = metric_x.distance(t.x_s, t.x_t) -
              alpha * metric_y.distance(t.y_s, t.y_t) + 2.0 * (1.0 + alpha);
    max_violation = std::max(max_violation, row.lhs - row.rhs);
    report.rows.push_back(row);
  }
  report.n_checked = tuples.size();
  report.max_violation = tuples.empty() ? 0.0 : max_violation;
  return report;
}

TriangleReport triangle_probe(const ViewMetric& metric, std::size_t n_triples,
                              std::uint64_t seed) {
  if (n_triples < 1) {
    throw DomainError("triangle_probe: need at least one triple");
  }
  Rng rng(seed);
  const Eigen::Index d = metric.ambient_dim();
  auto draw = [&] {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    return v;
  };

  TriangleReport report;
  report.n_triples = n_triples;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < n_triples; ++k) {
    const Vector a = draw();
    const Vector b = draw();
    const Vector c = draw();
    const double margin =
        metric.distance(a, c) - metric.distance(a, b) - metric.distance(b, c);
    report.worst_margin = std::max(report.worst_margin, margin);
    if (margin > 1e-12) ++violations;
  }
  report.violation_rate =
      static_cast<double>(violations) / static_cast<double>(n_triples);
  return report;
}

}  // namespace crossview
