// check subcommands: property suites runnable from the command line.

#include <Eigen/QR>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "commands.hpp"
#include "common.hpp"
#include "crossview/adapt_loss.hpp"
#include "crossview/dataset.hpp"
#include "crossview/errors.hpp"
#include "crossview/eval.hpp"
#include "crossview/featurize.hpp"
#include "crossview/gfk.hpp"
#include "crossview/rng.hpp"

namespace crossview::cli {

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

Subspace random_subspace(Rng& rng, Eigen::Index d, Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, d, n));
  return Subspace{Matrix(qr.householderQ() * Matrix::Identity(d, n)),
                  Vector::Zero(d)};
}

Vector random_vector(Rng& rng, Eigen::Index d) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

void run_kernel_oracle(int trials, int dmax, int nmax, int points,
                       std::uint64_t seed, double tol) {
  if (dmax < 4) throw DataError("kernel-oracle: --dmax must be >= 4");
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto n = static_cast<Eigen::Index>(
        1 + rng.below(std::min(nmax, dmax / 2)));
    const auto d = static_cast<Eigen::Index>(
        2 * n + rng.below(static_cast<std::uint64_t>(dmax - 2 * n + 1)));
    const Subspace ps = random_subspace(rng, d, n);
    const Subspace pt = random_subspace(rng, d, n);
    const auto k = GeodesicFlowKernel::build(ps, pt);
    const Matrix qq = quadrature_q(ps, pt, points);
    worst = std::max(worst, (k.q() - qq).cwiseAbs().maxCoeff());
  }
  std::printf("kernel-oracle: max |Q_closed - Q_quadrature(%d)| = %s over %d trials\n",
              points, fmt(worst).c_str(), trials);
  if (worst > tol) {
    throw NumericalError("kernel oracle deviation " + fmt(worst) +
                         " exceeds tolerance " + fmt(tol));
  }
}

void run_bounds(int tuples, double alpha, int dim_x, int dim_y,
                std::uint64_t seed, const std::string& out) {
  Rng rng(seed);
  const auto kx = GeodesicFlowKernel::build(
      random_subspace(rng, dim_x, dim_x / 4),
      random_subspace(rng, dim_x, dim_x / 4));
  const auto ky = GeodesicFlowKernel::build(
      random_subspace(rng, dim_y, dim_y / 4),
      random_subspace(rng, dim_y, dim_y / 4));

  std::vector<BoundTuple> ts(static_cast<std::size_t>(tuples));
  for (auto& t : ts) {
    t.x_s = random_vector(rng, dim_x);
    t.x_bar_t = random_vector(rng, dim_x);
    t.x_t = random_vector(rng, dim_x);
    t.y_s = random_vector(rng, dim_y);
    t.y_bar_t = random_vector(rng, dim_y);
    t.y_t = random_vector(rng, dim_y);
  }
  const BoundReport report = check_upper_bound(kx, ky, ts, alpha);

  if (!out.empty()) {
    std::string csv = "lhs,rhs,margin\n";
    for (const auto& row : report.rows) {
      csv += fmt(row.lhs) + "," + fmt(row.rhs) + "," +
             fmt(row.rhs - row.lhs) + "\n";
    }
    write_text_atomic(out, csv);
    write_sidecar(out, seed);
  }
  std::printf("bounds: checked %zu tuples at alpha %s, constant %s, max violation %s\n",
              report.n_checked, fmt(alpha).c_str(),
              fmt(2.0 * (1.0 + alpha)).c_str(),
              fmt(report.max_violation).c_str());
  if (report.max_violation > 1e-9) {
    throw NumericalError("upper bound violated by " +
                         fmt(report.max_violation));
  }
}

void run_triangle(int triples, int dim, std::uint64_t seed,
                  const std::string& out) {
  Rng rng(seed);
  const auto k = GeodesicFlowKernel::build(
      random_subspace(rng, dim, dim / 4), random_subspace(rng, dim, dim / 4));
  const TriangleReport report =
      triangle_probe(k, static_cast<std::size_t>(triples), seed + 1);
  if (!out.empty()) {
    std::string csv = "n_triples,violation_rate,worst_margin\n";
    csv += std::to_string(report.n_triples) + "," +
           fmt(report.violation_rate) + "," + fmt(report.worst_margin) + "\n";
    write_text_atomic(out, csv);
    write_sidecar(out, seed);
  }
  // Diagnostic only: 1 - cosine need not satisfy the triangle inequality.
  std::printf("triangle: rate %s worst margin %s over %zu triples\n",
              fmt(report.violation_rate).c_str(),
              fmt(report.worst_margin).c_str(), report.n_triples);
}

void run_hypothesis(const std::string& data_dir, int pairs, int image_side,
                    int seg_side, int dim, std::uint64_t seed,
                    const std::string& out, const std::string& metric,
                    bool center) {
  const DatasetInfo info = read_dataset_info(data_dir);
  if (!info.paired) {
    throw DataError("hypothesis: needs a paired dataset (scene gen --paired)");
  }
  const DomainData src = load_domain(data_dir, "source", true);
  const DomainData tgt = load_domain(data_dir, "target", true);
  const int classes = static_cast<int>(info.classes.size());

  const Eigen::Index n = static_cast<Eigen::Index>(src.images.size());
  Matrix xs(n, static_cast<Eigen::Index>(image_side) * image_side * 3);
  Matrix xt(n, xs.cols());
  Matrix ys(n, static_cast<Eigen::Index>(seg_side) * seg_side * classes);
  Matrix yt(n, ys.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    xs.row(i) = featurize(src.images[i], image_side).transpose();
    xt.row(i) = featurize(tgt.images[i], image_side).transpose();
    ys.row(i) = featurize(one_hot(src.masks[i], classes), seg_side).transpose();
    yt.row(i) = featurize(one_hot(tgt.masks[i], classes), seg_side).transpose();
  }

  auto clip = [&](Eigen::Index cols) {
    return static_cast<int>(std::min<Eigen::Index>(dim, std::min(n - 1, cols / 2)));
  };
  std::unique_ptr<ViewMetric> kx, ky;
  if (metric == "euclidean") {
    kx = std::make_unique<EuclideanMetric>(xs.cols());
    ky = std::make_unique<EuclideanMetric>(ys.cols());
  } else if (metric == "geodesic") {
    kx = std::make_unique<GeodesicFlowKernel>(GeodesicFlowKernel::build(
        fit_subspace(xs, clip(xs.cols()), center),
        fit_subspace(xt, clip(xs.cols()), center)));
    ky = std::make_unique<GeodesicFlowKernel>(GeodesicFlowKernel::build(
        fit_subspace(ys, clip(ys.cols()), center),
        fit_subspace(yt, clip(ys.cols()), center)));
  } else {
    throw DataError("hypothesis: unknown metric " + metric);
  }

  const HypothesisResult h = validate_linear_hypothesis(
      *kx, *ky, xs, xt, ys, yt, static_cast<std::size_t>(pairs), seed);

  if (!out.empty()) {
    std::string csv = "d_y,d_x\n";
    for (const auto& [dy, dx] : h.scatter) {
      csv += fmt(dy) + "," + fmt(dx) + "\n";
    }
    write_text_atomic(out, csv);
    write_sidecar(out, seed);
  }
  if (h.degenerate) {
    std::printf("hypothesis: degenerate (all distances vanished), %zu samples\n",
                h.samples);
  } else {
    std::printf("hypothesis: pearson_r %s alpha_hat %s over %zu sampled pairs\n",
                fmt(h.pearson_r).c_str(), fmt(h.alpha_hat).c_str(), h.samples);
  }
}

void run_gradcheck(int batches, int dim, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index blocks = 4;
  const Eigen::Index classes = 3;
  const Eigen::Index dy = blocks * classes;
  const double h = 1e-5;
  double max_rel = 0.0;

  for (int trial = 0; trial < batches; ++trial) {
    const auto kx =
        GeodesicFlowKernel::build(random_subspace(rng, dim, dim / 4),
                                  random_subspace(rng, dim, dim / 4));
    const auto ky = GeodesicFlowKernel::build(random_subspace(rng, dy, 3),
                                              random_subspace(rng, dy, 3));
    const auto kp = GeodesicFlowKernel::build(random_subspace(rng, 12, 3),
                                              random_subspace(rng, 12, 3));

    CrossViewBatch b;
    b.x_source = random_matrix(rng, 4, dim);
    b.x_target = random_matrix(rng, 3, dim);
    b.seg_blocks = blocks;
    b.seg_classes = classes;
    auto soft = [&](Eigen::Index rows) {
      Matrix y(rows, dy);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index p = 0; p < blocks; ++p) {
          double sum = 0.0;
          for (Eigen::Index c = 0; c < classes; ++c) {
            const double v = std::exp(rng.normal());
            y(r, c * blocks + p) = v;
            sum += v;
          }
          for (Eigen::Index c = 0; c < classes; ++c) y(r, c * blocks + p) /= sum;
        }
      }
      return y;
    };
    b.y_source = soft(4);
    b.y_target = soft(3);
    b.prompt_source = random_vector(rng, 12);
    b.prompt_target = random_vector(rng, 12);

    AdaptConfig cfg;
    cfg.alpha = 1.5;
    cfg.gamma = 1.0;
    cfg.lambda_i = 1.0;
    cfg.lambda_p = 0.5;

    const auto loss = [&](const CrossViewBatch& batch) {
      return cfg.lambda_i *
                 cross_view_geo_loss(kx, ky, batch, cfg.alpha, cfg.pairing) +
             cfg.lambda_p *
                 prompt_corr_loss(kp, ky, batch, cfg.gamma, cfg.pairing);
    };
    const auto grads = grad_wrt_target_preds(kx, ky, &kp, b, cfg);
    for (Eigen::Index j = 0; j < b.y_target.rows(); ++j) {
      for (Eigen::Index c = 0; c < dy; ++c) {
        CrossViewBatch plus = b;
        CrossViewBatch minus = b;
        plus.y_target(j, c) += h;
        minus.y_target(j, c) -= h;
        const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
        const double an = grads[static_cast<std::size_t>(j)](c);
        max_rel = std::max(max_rel, std::abs(an - fd) /
                                        std::max(std::abs(an) + std::abs(fd),
                                                 1e-6));
      }
    }
  }
  std::printf("gradcheck: max relative error %s over %d batches\n",
              fmt(max_rel).c_str(), batches);
  if (max_rel > 1e-4) {
    throw NumericalError("gradient check failed: " + fmt(max_rel));
  }
}

}  // namespace

void register_check(CLI::App& app) {
  auto* check = app.add_subcommand("check", "Property suites");

  {
    auto* c = check->add_subcommand(
        "kernel-oracle", "Closed-form Q vs Simpson quadrature");
    auto trials = std::make_shared<int>(100);
    auto dmax = std::make_shared<int>(64);
    auto nmax = std::make_shared<int>(16);
    auto points = std::make_shared<int>(2001);
    auto seed = std::make_shared<std::uint64_t>(12345);
    auto tol = std::make_shared<double>(1e-8);
    c->add_option("--trials", *trials, "Random subspace pairs");
    c->add_option("--dmax", *dmax, "Max ambient dimension");
    c->add_option("--nmax", *nmax, "Max subspace dimension");
    c->add_option("--points", *points, "Quadrature points (odd)");
    c->add_option("--seed", *seed, "Seed");
    c->add_option("--tol", *tol, "Tolerance");
    c->callback([=] {
      run_kernel_oracle(*trials, *dmax, *nmax, *points, *seed, *tol);
    });
  }
  {
    auto* c = check->add_subcommand("bounds",
                                    "Unpaired-constraint upper bound");
    auto tuples = std::make_shared<int>(10000);
    auto alpha = std::make_shared<double>(1.5);
    auto dim_x = std::make_shared<int>(32);
    auto dim_y = std::make_shared<int>(20);
    auto seed = std::make_shared<std::uint64_t>(7);
    auto out = std::make_shared<std::string>();
    c->add_option("--tuples", *tuples, "Random tuples");
    c->add_option("--alpha", *alpha, "Linear scale");
    c->add_option("--dim-x", *dim_x, "Image-space dimension");
    c->add_option("--dim-y", *dim_y, "Segmentation-space dimension");
    c->add_option("--seed", *seed, "Seed");
    c->add_option("--out", *out, "CSV of (lhs, rhs, margin)");
    c->callback([=] {
      run_bounds(*tuples, *alpha, *dim_x, *dim_y, *seed, *out);
    });
  }
  {
    auto* c = check->add_subcommand("triangle",
                                    "Triangle-inequality probe (diagnostic)");
    auto triples = std::make_shared<int>(100000);
    auto dim = std::make_shared<int>(32);
    auto seed = std::make_shared<std::uint64_t>(7);
    auto out = std::make_shared<std::string>();
    c->add_option("--triples", *triples, "Random triples");
    c->add_option("--dim", *dim, "Ambient dimension");
    c->add_option("--seed", *seed, "Seed");
    c->add_option("--out", *out, "Summary CSV");
    c->callback([=] { run_triangle(*triples, *dim, *seed, *out); });
  }
  {
    auto* c = check->add_subcommand(
        "hypothesis", "Linear-relation study on a paired dataset");
    auto data = std::make_shared<std::string>();
    auto pairs = std::make_shared<int>(2000);
    auto image_side = std::make_shared<int>(16);
    auto seg_side = std::make_shared<int>(8);
    auto dim = std::make_shared<int>(64);
    auto seed = std::make_shared<std::uint64_t>(7);
    auto out = std::make_shared<std::string>();
    auto metric = std::make_shared<std::string>("geodesic");
    auto no_center = std::make_shared<bool>(false);
    c->add_option("--data", *data, "Paired dataset directory")->required();
    c->add_option("--pairs", *pairs, "Sampled index pairs");
    c->add_option("--image-side", *image_side, "Image featurizer side");
    c->add_option("--seg-side", *seg_side, "Segmentation featurizer side");
    c->add_option("--dim", *dim, "Subspace dimension cap");
    c->add_option("--seed", *seed, "Seed");
    c->add_option("--out", *out, "Scatter CSV of (d_y, d_x)");
    c->add_option("--metric", *metric, "geodesic or euclidean");
    c->add_flag("--no-center", *no_center, "Fit subspaces uncentered");
    c->callback([=] {
      run_hypothesis(*data, *pairs, *image_side, *seg_side, *dim, *seed, *out,
                     *metric, !*no_center);
    });
  }
  {
    auto* c = check->add_subcommand("gradcheck",
                                    "Adaptation-loss gradients vs finite differences");
    auto batches = std::make_shared<int>(10);
    auto dim = std::make_shared<int>(16);
    auto seed = std::make_shared<std::uint64_t>(7);
    c->add_option("--batches", *batches, "Random batches");
    c->add_option("--dim", *dim, "Image-space dimension");
    c->add_option("--seed", *seed, "Seed");
    c->callback([=] { run_gradcheck(*batches, *dim, *seed); });
  }
}

}  // namespace crossview::cli
