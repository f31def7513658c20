#pragma once

#include <CLI11.hpp>

namespace crossview::cli {

void register_scene(CLI::App& app);
void register_subspace(CLI::App& app);
void register_gfk(CLI::App& app);
void register_prompt(CLI::App& app);
void register_train(CLI::App& app);
void register_eval(CLI::App& app);
void register_check(CLI::App& app);
void register_report(CLI::App& app);

}  // namespace crossview::cli
