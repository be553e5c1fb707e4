// qtune command-line front end. Talks to the library only through the C API.
//
// Exit codes: 0 success, 1 usage error, 2 configuration error (bad config
// file, out-of-range action), 3 runtime error (I/O, dataset, pipeline).

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "qtune/qtune.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(qtune_status st) {
  switch (st) {
    case QTUNE_OK: return 0;
    case QTUNE_ERR_CONFIG:
    case QTUNE_ERR_RANGE:
    case QTUNE_ERR_INVALID_ARGUMENT: return kExitConfig;
    default: return kExitRuntime;
  }
}

int report(qtune_status st, const char* what) {
  std::fprintf(stderr, "qtune %s: %s: %s\n", what, qtune_status_string(st), qtune_last_error());
  return exit_code_for(st);
}

struct SessionDeleter {
  void operator()(qtune_session* s) const { qtune_session_destroy(s); }
};
using SessionPtr = std::unique_ptr<qtune_session, SessionDeleter>;

std::string describe(const qtune_session* s, size_t action) {
  char buf[256];
  size_t needed = 0;
  if (qtune_action_describe(s, action, buf, sizeof buf, &needed) != QTUNE_OK) return "?";
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qtune: Q-learning parameter tuning for a GLCM + k-means segmentation pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qtune_version()));

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string action;
  std::string image;
  std::string mask;
  bool dump_features = false;

  const auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Override the configured seed");
    cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  };

  auto* generate = app.add_subcommand("generate", "Write the synthetic dataset");
  auto* train = app.add_subcommand("train", "Learn parameters with Q-learning");
  auto* grid = app.add_subcommand("gridsearch", "Evaluate every action exhaustively");
  auto* evaluate = app.add_subcommand("evaluate", "Run the pipeline once with given parameters");
  for (auto* cmd : {generate, train, grid, evaluate}) common(cmd);
  evaluate->add_option("--action", action, "Parameter assignment, e.g. \"n=13,k=3\"")->required();
  evaluate->add_option("--image", image, "Input image (binary PGM)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--mask", mask, "Ground-truth mask (binary PGM)")->check(CLI::ExistingFile);
  evaluate->add_flag("--dump-features", dump_features, "Also write the feature planes as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  qtune_session* raw = nullptr;
  if (auto st = qtune_session_create_from_file(config_path.c_str(), &raw); st != QTUNE_OK) return report(st, "config");
  SessionPtr session(raw);

  CLI::App* cmd = app.get_subcommands().front();
  if (cmd->count("--seed")) {
    if (auto st = qtune_session_set_seed(session.get(), seed); st != QTUNE_OK) return report(st, "config");
  }
  if (!out_dir.empty()) {
    if (auto st = qtune_session_set_output_dir(session.get(), out_dir.c_str()); st != QTUNE_OK)
      return report(st, "config");
  }

  if (cmd == generate) {
    qtune_generate_summary s{};
    if (auto st = qtune_generate(session.get(), &s); st != QTUNE_OK) return report(st, "generate");
    std::printf("generated %zu samples (seed %llu)\n", s.count, static_cast<unsigned long long>(s.seed));
  } else if (cmd == train) {
    qtune_train_summary s{};
    if (auto st = qtune_train(session.get(), &s); st != QTUNE_OK) return report(st, "train");
    std::printf("trained %zu episodes, %zu states; best action %zu (%s), mean D %.6f\n", s.episodes, s.q_states,
                s.best_action, describe(session.get(), s.best_action).c_str(), s.best_mean_d);
  } else if (cmd == grid) {
    qtune_grid_summary s{};
    if (auto st = qtune_gridsearch(session.get(), &s); st != QTUNE_OK) return report(st, "gridsearch");
    std::printf("evaluated %zu actions; best action %zu (%s), mean D %.6f\n", s.rows, s.best_action,
                describe(session.get(), s.best_action).c_str(), s.best_mean_d);
  } else if (cmd == evaluate) {
    qtune_eval_summary s{};
    if (auto st = qtune_evaluate(session.get(), action.c_str(), image.c_str(), mask.empty() ? nullptr : mask.c_str(),
                                 dump_features ? 1 : 0, &s);
        st != QTUNE_OK)
      return report(st, "evaluate");
    std::printf("action %zu (%s): x = [%g, %g, %g, %g]", s.action, describe(session.get(), s.action).c_str(), s.x1,
                s.x2, s.x3, s.x4);
    if (s.has_reference) std::printf(", D = %.6f, reward %g%s", s.d, s.reward, s.terminal ? " (terminal)" : "");
    std::printf("\n");
  }
  return 0;
}
