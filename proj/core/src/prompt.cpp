#include "crossview/prompt.hpp"

#include <cctype>
#include <cstdint>

#include "crossview/errors.hpp"

namespace crossview {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t salt) {
  std::uint64_t z = h ^ (salt + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      if (!cur.empty()) {
        tokens.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

void replace_slot(std::string& text, const std::string& slot,
                  const std::string& value) {
  const auto pos = text.find(slot);
  if (pos != std::string::npos) {
    text.replace(pos, slot.size(), value);
  }
}

}  // namespace

const char* domain_name(Domain d) {
  return d == Domain::kCar ? "car" : "drone";
}

Domain domain_from_name(const std::string& name) {
  if (name == "car") return Domain::kCar;
  if (name == "drone") return Domain::kDrone;
  throw DataError("unknown domain: " + name);
}

std::string build_prompt(const PromptSpec& spec) {
  if (spec.classes.empty()) {
    throw EmptyClassList("prompt spec has no classes");
  }
  std::string joined;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    if (i > 0) joined += ", ";
    joined += spec.classes[i];
  }
  std::string text = spec.template_text;
  replace_slot(text, "{classes}", joined);
  replace_slot(text, "{domain}", domain_name(spec.domain));
  return text;
}

Vector embed_prompt(const std::string& text, int dim) {
  if (dim < 8) {
    throw DimensionError("embed_prompt: dim must be >= 8");
  }
  Vector v = Vector::Zero(dim);
  const auto tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::uint64_t h = fnv1a(tokens[i]);
    const auto bucket = static_cast<Eigen::Index>(h % dim);
    v(bucket) += (h >> 32) & 1 ? 1.0 : -1.0;
    // Position-weighted mix: permuting tokens changes the embedding.
    const std::uint64_t hp = mix(h, i);
    const auto bucket_p = static_cast<Eigen::Index>(hp % dim);
    const double w = 1.0 / static_cast<double>(i + 2);
    v(bucket_p) += ((hp >> 32) & 1 ? 1.0 : -1.0) * w;
  }
  const double norm = v.norm();
  if (norm < 1e-12) {
    // All contributions cancelled; fall back to a deterministic unit vector.
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / norm;
}

std::vector<std::string> enumerate_prompts(
    const std::vector<std::string>& classes, Domain domain) {
  if (classes.empty()) {
    throw EmptyClassList("enumerate_prompts: no classes");
  }
  const std::size_t k = classes.size();
  std::vector<std::vector<std::string>> subsets;
  if (k <= 8) {
    for (std::size_t bits = 1; bits < (std::size_t{1} << k); ++bits) {
      std::vector<std::string> subset;
      for (std::size_t i = 0; i < k; ++i) {
        if (bits & (std::size_t{1} << i)) subset.push_back(classes[i]);
      }
      subsets.push_back(std::move(subset));
    }
  } else {
    for (const auto& c : classes) subsets.push_back({c});
    subsets.push_back(classes);
  }
  std::vector<std::string> prompts;
  prompts.reserve(subsets.size());
  for (auto& subset : subsets) {
    PromptSpec spec;
    spec.classes = std::move(subset);
    spec.domain = domain;
    prompts.push_back(build_prompt(spec));
  }
  return prompts;
}

Matrix prompt_embedding_matrix(const std::vector<std::string>& classes,
                               Domain domain, int dim) {
  const auto prompts = enumerate_prompts(classes, domain);
  Matrix m(static_cast<Eigen::Index>(prompts.size()), dim);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = embed_prompt(prompts[i], dim).transpose();
  }
  return m;
}

}  // namespace crossview
