#pragma once

#include <string>
#include <vector>

#include "crossview/matrix.hpp"

namespace crossview {

enum class Domain { kCar, kDrone };

const char* domain_name(Domain d);
Domain domain_from_name(const std::string& name);

/// View-condition prompt: class list plus the capturing view. The template
/// carries {classes} and {domain} slots.
struct PromptSpec {
  std::vector<std::string> classes;
  Domain domain = Domain::kCar;
  std::string template_text = "{classes} captured from the {domain} view";
};

/// Renders the spec to its exact string, e.g.
/// "road, building captured from the drone view". Throws EmptyClassList.
std::string build_prompt(const PromptSpec& spec);

/// Deterministic token-hash embedding standing in for a text encoder:
/// tokens (split on whitespace/commas) hash into `dim` buckets with signed
/// unit contributions plus a position-weighted mix, then the result is
/// normalized. Equal texts map to equal vectors; changing any token
/// (including the domain word) moves the vector. dim must be >= 8.
Vector embed_prompt(const std::string& text, int dim);

/// All prompts a domain can issue over a canonical class list: every
/// non-empty subset in canonical order when K <= 8, otherwise all
/// single-class prompts plus the full list. Used to fit per-domain prompt
/// subspaces.
std::vector<std::string> enumerate_prompts(
    const std::vector<std::string>& classes, Domain domain);

/// Rows = embeddings of enumerate_prompts(classes, domain).
Matrix prompt_embedding_matrix(const std::vector<std::string>& classes,
                               Domain domain, int dim);

}  // namespace crossview
