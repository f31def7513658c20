#include <doctest.h>

#include "crossview/errors.hpp"
#include "crossview/gfk.hpp"
#include "crossview/prompt.hpp"
#include "crossview/subspace.hpp"

using namespace crossview;

TEST_CASE("build_prompt renders the exact template") {
  PromptSpec spec;
  spec.classes = {"road", "building"};
  spec.domain = Domain::kDrone;
  CHECK(build_prompt(spec) == "road, building captured from the drone view");

  spec.classes = {"car"};
  spec.domain = Domain::kCar;
  CHECK(build_prompt(spec) == "car captured from the car view");

  // determinism
  CHECK(build_prompt(spec) == build_prompt(spec));

  spec.classes = {};
  CHECK_THROWS_AS(build_prompt(spec), EmptyClassList);
}

TEST_CASE("embeddings are deterministic unit vectors") {
  const std::string text = "road, building captured from the car view";
  const Vector a = embed_prompt(text, 64);
  const Vector b = embed_prompt(text, 64);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(a.norm() - 1.0) <= 1e-12);
  CHECK_THROWS_AS(embed_prompt(text, 4), DimensionError);
}

TEST_CASE("domain word and class order move the embedding") {
  PromptSpec car{{"road", "building", "car"}, Domain::kCar, {}};
  car.template_text = PromptSpec{}.template_text;
  PromptSpec drone = car;
  drone.domain = Domain::kDrone;
  const Vector f_car = embed_prompt(build_prompt(car), 64);
  const Vector f_drone = embed_prompt(build_prompt(drone), 64);
  CHECK((f_car - f_drone).norm() > 0.0);
  // angular separation strictly positive for unit vectors
  CHECK(f_car.dot(f_drone) < 1.0 - 1e-9);

  PromptSpec permuted = car;
  permuted.classes = {"building", "road", "car"};
  const Vector f_perm = embed_prompt(build_prompt(permuted), 64);
  CHECK((f_car - f_perm).norm() > 0.0);
}

TEST_CASE("prompt enumeration covers subsets for small class lists") {
  const std::vector<std::string> classes = {"road", "building", "car"};
  const auto prompts = enumerate_prompts(classes, Domain::kCar);
  CHECK(prompts.size() == 7);  // 2^3 - 1 non-empty subsets
  // canonical order is preserved inside each subset
  bool found = false;
  for (const auto& p : prompts) {
    if (p == "road, car captured from the car view") found = true;
  }
  CHECK(found);

  std::vector<std::string> many;
  for (int i = 0; i < 12; ++i) many.push_back("class" + std::to_string(i));
  const auto large = enumerate_prompts(many, Domain::kDrone);
  CHECK(large.size() == 13);  // singletons plus the full list
}

TEST_CASE("cross-domain prompt distance is strictly positive under the gfk") {
  const std::vector<std::string> classes = {"road", "building", "car",
                                            "tree", "person",   "terrain"};
  const int dim = 64;
  const Matrix emb_car = prompt_embedding_matrix(classes, Domain::kCar, dim);
  const Matrix emb_drone =
      prompt_embedding_matrix(classes, Domain::kDrone, dim);
  CHECK(emb_car.rows() == 63);

  const int n = 16;
  const Subspace ps = fit_subspace(emb_car, n);
  const Subspace pt = fit_subspace(emb_drone, n);
  const auto kernel = GeodesicFlowKernel::build(ps, pt);

  PromptSpec full_car{classes, Domain::kCar, {}};
  full_car.template_text = PromptSpec{}.template_text;
  PromptSpec full_drone = full_car;
  full_drone.domain = Domain::kDrone;
  const Vector f_car = embed_prompt(build_prompt(full_car), dim);
  const Vector f_drone = embed_prompt(build_prompt(full_drone), dim);
  CHECK(kernel.distance(f_car, f_drone) > 0.0);
}
