// Subcommands producing data artifacts: scene gen, subspace fit, gfk
// build/dist, prompt embed.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "commands.hpp"
#include "common.hpp"
#include "crossview/dataset.hpp"
#include "crossview/errors.hpp"
#include "crossview/gfk.hpp"
#include "crossview/prompt.hpp"
#include "crossview/subspace.hpp"

namespace crossview::cli {

namespace {

struct SceneGenArgs {
  std::string config;
  std::string out;
  bool paired = false;
  bool unpaired = false;
  int scenes = 500;
  int source = 200;
  int target = 200;
  int test = 50;
  std::uint64_t seed = 1;
  bool seed_given = false;
  bool scenes_given = false;
  bool counts_given = false;
};

// Config supplies defaults; explicit flags win.
void run_scene_gen(const SceneGenArgs& args) {
  if (args.paired == args.unpaired) {
    throw DataError("scene gen: pass exactly one of --paired / --unpaired");
  }
  const nlohmann::json cfg = read_json_file(args.config);
  const SceneTemplate tmpl = scene_template_from_json(cfg.dump());

  DatasetCounts counts;
  if (args.paired) {
    counts.source = args.scenes_given ? args.scenes
                                      : cfg.value("n_scenes", args.scenes);
    counts.target = 0;
    counts.target_test = 0;
  } else {
    counts.source = args.source;
    counts.target = args.target;
    counts.target_test = args.test;
    if (!args.counts_given && cfg.contains("counts")) {
      counts.source = cfg["counts"].value("source", counts.source);
      counts.target = cfg["counts"].value("target", counts.target);
      counts.target_test = cfg["counts"].value("target_test", counts.target_test);
    }
  }
  const std::uint64_t seed =
      args.seed_given ? args.seed : cfg.value("seed", args.seed);

  nlohmann::json provenance{{"command", command_line()}, {"seed", seed}};
  make_cross_view_dataset(tmpl, counts, args.paired, seed, args.out,
                          provenance.dump());
  std::printf("wrote %s (%s, seed %llu)\n", args.out.c_str(),
              args.paired ? "paired" : "unpaired",
              static_cast<unsigned long long>(seed));
}

}  // namespace

void register_scene(CLI::App& app) {
  auto* scene = app.add_subcommand("scene", "Synthetic cross-view scenes");
  auto* gen = scene->add_subcommand("gen", "Generate a cross-view dataset");
  auto args = std::make_shared<SceneGenArgs>();
  gen->add_option("--config", args->config, "Scene template JSON")->required();
  gen->add_option("--out", args->out, "Output dataset directory")->required();
  gen->add_flag("--paired", args->paired,
                "Render the same scenes from both views");
  gen->add_flag("--unpaired", args->unpaired,
                "Disjoint scenes per domain, unlabeled target split");
  auto* scenes_opt = gen->add_option("--scenes", args->scenes, "Paired scene count");
  auto* src_opt = gen->add_option("--source", args->source, "Unpaired source count");
  auto* tgt_opt = gen->add_option("--target", args->target, "Unpaired target count");
  auto* test_opt = gen->add_option("--test", args->test, "Unpaired labeled target test count");
  auto* seed_opt = gen->add_option("--seed", args->seed, "Master seed");
  gen->callback([args, scenes_opt, src_opt, tgt_opt, test_opt, seed_opt] {
    args->seed_given = seed_opt->count() > 0;
    args->scenes_given = scenes_opt->count() > 0;
    args->counts_given =
        src_opt->count() > 0 || tgt_opt->count() > 0 || test_opt->count() > 0;
    run_scene_gen(*args);
  });
}

void register_subspace(CLI::App& app) {
  auto* sub = app.add_subcommand("subspace", "Grassmann subspaces");
  auto* fit = sub->add_subcommand("fit", "Fit a PCA basis to sample rows");
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto dim = std::make_shared<int>(kDefaultSubspaceDim);
  auto no_center = std::make_shared<bool>(false);
  fit->add_option("--in", *in, "Sample matrix (GFKM, rows = samples)")
      ->required();
  fit->add_option("--out", *out, "Output basis (GFKM + sidecar)")->required();
  fit->add_option("--dim", *dim, "Subspace dimension");
  fit->add_flag("--no-center", *no_center, "Skip mean centering");
  fit->callback([in, out, dim, no_center] {
    const Matrix samples = read_gfkm(*in);
    const Subspace s = fit_subspace(samples, *dim, !*no_center);
    save_subspace(*out, s, 0, !*no_center);
    std::printf("fit %lld-dim subspace of R^%lld from %lld samples -> %s\n",
                static_cast<long long>(s.dim()),
                static_cast<long long>(s.ambient_dim()),
                static_cast<long long>(samples.rows()), out->c_str());
  });
}

void register_gfk(CLI::App& app) {
  auto* gfk = app.add_subcommand("gfk", "Geodesic flow kernels");

  auto* build = gfk->add_subcommand("build", "Closed-form kernel between subspaces");
  auto src = std::make_shared<std::string>();
  auto tgt = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  build->add_option("--src", *src, "Source subspace (GFKM)")->required();
  build->add_option("--tgt", *tgt, "Target subspace (GFKM)")->required();
  build->add_option("--out", *out, "Output kernel (GFKM + sidecar)")->required();
  build->callback([src, tgt, out] {
    const Subspace ps = load_subspace(*src);
    const Subspace pt = load_subspace(*tgt);
    const auto k = GeodesicFlowKernel::build(ps, pt);
    save_kernel(*out, k.q(), k.mean_source(), k.mean_target(), k.omegas(),
                k.lambda1(), k.lambda2(), k.lambda3(), 0);
    std::printf("kernel %lld x %lld, %lld angles, max omega %s -> %s\n",
                static_cast<long long>(k.q().rows()),
                static_cast<long long>(k.q().cols()),
                static_cast<long long>(k.subspace_dim()),
                fmt(k.omegas().maxCoeff()).c_str(), out->c_str());
  });

  auto* dist = gfk->add_subcommand("dist", "Distance between two vectors");
  auto kernel = std::make_shared<std::string>();
  auto a = std::make_shared<std::string>();
  auto b = std::make_shared<std::string>();
  dist->add_option("--kernel", *kernel, "Kernel file from gfk build")
      ->required();
  dist->add_option("--a", *a, "Source-domain vector (GFKM)")->required();
  dist->add_option("--b", *b, "Target-domain vector (GFKM)")->required();
  dist->callback([kernel, a, b] {
    const KernelFile k = load_kernel(*kernel);
    const Vector va = load_vector(*a);
    const Vector vb = load_vector(*b);
    if (va.size() != k.q.rows() || vb.size() != k.q.rows()) {
      throw DimensionMismatch("gfk dist: vector length != kernel dimension");
    }
    const Vector ca = va - k.mean_source;
    const Vector cb = vb - k.mean_target;
    const Vector qb = k.q * cb;
    const double na = std::sqrt(std::max(0.0, ca.dot(k.q * ca)));
    const double nb = std::sqrt(std::max(0.0, cb.dot(qb)));
    const double d = ViewMetric::distance_from_parts(ca, qb, na, nb);
    std::printf("%s\n", fmt(d).c_str());
  });
}

void register_prompt(CLI::App& app) {
  auto* prompt = app.add_subcommand("prompt", "View-condition prompts");
  auto* embed = prompt->add_subcommand("embed", "Embed a class-list prompt");
  auto classes = std::make_shared<std::string>();
  auto domain = std::make_shared<std::string>("car");
  auto dim = std::make_shared<int>(64);
  auto out = std::make_shared<std::string>();
  embed->add_option("--classes", *classes, "Comma-separated class names")
      ->required();
  embed->add_option("--domain", *domain, "car or drone");
  embed->add_option("--dim", *dim, "Embedding dimension");
  embed->add_option("--out", *out, "Output vector (GFKM)")->required();
  embed->callback([classes, domain, dim, out] {
    PromptSpec spec;
    std::string cur;
    for (char ch : *classes) {
      if (ch == ',') {
        if (!cur.empty()) spec.classes.push_back(cur);
        cur.clear();
      } else if (!std::isspace(static_cast<unsigned char>(ch))) {
        cur.push_back(ch);
      }
    }
    if (!cur.empty()) spec.classes.push_back(cur);
    spec.domain = domain_from_name(*domain);
    const std::string text = build_prompt(spec);
    const Vector f = embed_prompt(text, *dim);
    write_gfkm_atomic(*out, f);
    write_sidecar(*out, 0, nlohmann::json{{"kind", "prompt-embedding"},
                                          {"prompt", text},
                                          {"dim", *dim}});
    std::printf("embedded \"%s\" -> %s\n", text.c_str(), out->c_str());
  });
}

}  // namespace crossview::cli
