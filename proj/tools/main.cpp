#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "commands.hpp"
#include "common.hpp"
#include "crossview/errors.hpp"

int main(int argc, char** argv) {
  using namespace crossview;
  cli::set_command_line(argc, argv);

  CLI::App app{"Cross-view geometric adaptation toolkit"};
  app.require_subcommand(1);

  cli::register_scene(app);
  cli::register_subspace(app);
  cli::register_gfk(app);
  cli::register_prompt(app);
  cli::register_train(app);
  cli::register_eval(app);
  cli::register_check(app);
  cli::register_report(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitUsage;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitNumerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::kExitData;
  }
  return cli::kExitOk;
}
