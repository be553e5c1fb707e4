#include "qtune/qtune.h"

#include <cstring>
#include <string>

#include "qtune/commands.hpp"
#include "qtune/error.hpp"

struct qtune_session {
  qtune::Session session;
};

namespace {

thread_local std::string g_last_error;

qtune_status status_for(qtune::ErrorKind kind) {
  using qtune::ErrorKind;
  switch (kind) {
    case ErrorKind::Config: return QTUNE_ERR_CONFIG;
    case ErrorKind::Parse: return QTUNE_ERR_PARSE;
    case ErrorKind::Range: return QTUNE_ERR_RANGE;
    case ErrorKind::Io: return QTUNE_ERR_IO;
    case ErrorKind::Dataset: return QTUNE_ERR_DATASET;
    case ErrorKind::Pipeline: return QTUNE_ERR_PIPELINE;
    case ErrorKind::Numeric: return QTUNE_ERR_NUMERIC;
    case ErrorKind::Contract: return QTUNE_ERR_INVALID_ARGUMENT;
    case ErrorKind::Busy: return QTUNE_ERR_BUSY;
  }
  return QTUNE_ERR_INTERNAL;
}

template <typename F>
qtune_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return QTUNE_OK;
  } catch (const qtune::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return QTUNE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QTUNE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return QTUNE_ERR_INTERNAL;
  }
}

qtune_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return QTUNE_ERR_INVALID_ARGUMENT;
}

qtune_status copy_out(const std::string& s, char* buf, size_t len, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || len < s.size() + 1) {
    g_last_error = "buffer too small, need " + std::to_string(s.size() + 1) + " bytes";
    return QTUNE_ERR_BUFFER_TOO_SMALL;
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return QTUNE_OK;
}

}  // namespace

extern "C" {

const char* qtune_version(void) { return "0.1.0"; }

const char* qtune_status_string(qtune_status status) {
  switch (status) {
    case QTUNE_OK: return "ok";
    case QTUNE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QTUNE_ERR_CONFIG: return "configuration error";
    case QTUNE_ERR_PARSE: return "parse error";
    case QTUNE_ERR_RANGE: return "out of range";
    case QTUNE_ERR_IO: return "i/o error";
    case QTUNE_ERR_DATASET: return "dataset error";
    case QTUNE_ERR_PIPELINE: return "pipeline error";
    case QTUNE_ERR_NUMERIC: return "numeric error";
    case QTUNE_ERR_BUSY: return "output directory busy";
    case QTUNE_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case QTUNE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* qtune_last_error(void) { return g_last_error.c_str(); }

qtune_status qtune_session_create_from_file(const char* config_path, qtune_session** out) {
  if (!config_path) return null_arg("config_path");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qtune_session{qtune::Session(qtune::load_config(config_path))}; });
}

qtune_status qtune_session_create_from_json(const char* config_json, qtune_session** out) {
  if (!config_json) return null_arg("config_json");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qtune_session{qtune::Session(qtune::parse_config_text(config_json))}; });
}

void qtune_session_destroy(qtune_session* session) { delete session; }

qtune_status qtune_session_set_seed(qtune_session* session, uint64_t seed) {
  if (!session) return null_arg("session");
  return guarded([&] { session->session.set_seed(seed); });
}

qtune_status qtune_session_set_output_dir(qtune_session* session, const char* dir) {
  if (!session) return null_arg("session");
  if (!dir) return null_arg("dir");
  return guarded([&] { session->session.set_output_dir(dir); });
}

qtune_status qtune_session_config_json(const qtune_session* session, char* buf, size_t len, size_t* needed) {
  if (!session) return null_arg("session");
  std::string text;
  const auto st = guarded([&] { text = qtune::to_json(session->session.config()).dump(2); });
  return st == QTUNE_OK ? copy_out(text, buf, len, needed) : st;
}

qtune_status qtune_action_count(const qtune_session* session, size_t* out) {
  if (!session) return null_arg("session");
  if (!out) return null_arg("out");
  *out = session->session.space().count();
  return QTUNE_OK;
}

qtune_status qtune_action_describe(const qtune_session* session, size_t index, char* buf, size_t len, size_t* needed) {
  if (!session) return null_arg("session");
  std::string text;
  const auto st = guarded([&] { text = session->session.space().describe(index); });
  return st == QTUNE_OK ? copy_out(text, buf, len, needed) : st;
}

qtune_status qtune_action_parse(const qtune_session* session, const char* text, size_t* index) {
  if (!session) return null_arg("session");
  if (!text) return null_arg("text");
  if (!index) return null_arg("index");
  return guarded([&] { *index = session->session.space().parse(text); });
}

qtune_status qtune_generate(qtune_session* session, qtune_generate_summary* out) {
  if (!session) return null_arg("session");
  return guarded([&] {
    const auto r = session->session.generate();
    if (out) *out = {r.count, r.seed};
  });
}

qtune_status qtune_train(qtune_session* session, qtune_train_summary* out) {
  if (!session) return null_arg("session");
  return guarded([&] {
    const auto r = session->session.train();
    if (out) *out = {r.best_action, r.best_mean_D, r.report.curve.size(), session->session.qtable()->state_count()};
  });
}

qtune_status qtune_gridsearch(qtune_session* session, qtune_grid_summary* out) {
  if (!session) return null_arg("session");
  return guarded([&] {
    const auto r = session->session.gridsearch();
    if (out) *out = {r.best_action, r.best_mean_D, r.rows.size()};
  });
}

qtune_status qtune_evaluate(qtune_session* session, const char* action, const char* image_path, const char* mask_path,
                            int dump_features, qtune_eval_summary* out) {
  if (!session) return null_arg("session");
  if (!action) return null_arg("action");
  if (!image_path) return null_arg("image_path");
  return guarded([&] {
    const auto r = session->session.evaluate(action, image_path, mask_path ? mask_path : "",
                                             session->session.config().output_dir, dump_features != 0);
    if (!out) return;
    const auto& seg = r.segmentation;
    *out = qtune_eval_summary{};
    out->action = r.action;
    out->x1 = seg.features.x1;
    out->x2 = seg.features.x2;
    out->x3 = seg.features.x3;
    out->x4 = seg.features.x4;
    out->has_reference = r.has_reference ? 1 : 0;
    if (r.has_reference) {
      out->d1 = seg.diffs->d1;
      out->d2 = seg.diffs->d2;
      out->d3 = seg.diffs->d3;
      out->d4 = seg.diffs->d4;
      out->d = seg.D;
      out->reward = seg.outcome.reward;
      out->terminal = seg.outcome.terminal ? 1 : 0;
    }
  });
}

qtune_status qtune_cache_stats_get(const qtune_session* session, qtune_cache_stats* out) {
  if (!session) return null_arg("session");
  if (!out) return null_arg("out");
  const auto s = session->session.cache_stats();
  *out = {s.hits, s.misses};
  return QTUNE_OK;
}

}  // extern "C"
