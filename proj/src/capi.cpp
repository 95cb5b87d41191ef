#include "equity.h"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "equity/pipeline.hpp"
#include "equity/types.hpp"
#include "equity/version.hpp"

namespace {

thread_local std::string g_open_error;

eq_status status_of(const std::exception& e) {
  if (dynamic_cast<const equity::ConfigError*>(&e)) return EQ_ERROR_CONFIG;
  if (dynamic_cast<const equity::InputError*>(&e)) return EQ_ERROR_INPUT;
  return EQ_ERROR_INTERNAL;
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

struct eq_engine {
  equity::pipeline::RunConfig config;
  std::unique_ptr<equity::pipeline::Engine> impl;
  std::string last_error;

  // Runs fn under the error-code contract; on failure stores the message.
  template <typename Fn>
  eq_status guard(Fn&& fn) {
    try {
      last_error.clear();
      fn();
      return EQ_OK;
    } catch (const std::exception& e) {
      last_error = e.what();
      return status_of(e);
    } catch (...) {
      last_error = "unknown error";
      return EQ_ERROR_INTERNAL;
    }
  }
};

extern "C" {

const char* eq_version(void) { return equity::kVersion; }

eq_status eq_engine_open(const char* config_path, eq_engine** out) {
  if (out == nullptr) {
    g_open_error = "open: null output handle";
    return EQ_ERROR_CONFIG;
  }
  *out = nullptr;
  if (config_path == nullptr) {
    g_open_error = "open: null config path";
    return EQ_ERROR_CONFIG;
  }
  try {
    auto handle = std::make_unique<eq_engine>();
    handle->config = equity::pipeline::load_run_config(config_path);
    handle->impl = std::make_unique<equity::pipeline::Engine>(handle->config);
    *out = handle.release();
    g_open_error.clear();
    return EQ_OK;
  } catch (const std::exception& e) {
    g_open_error = e.what();
    return status_of(e);
  }
}

void eq_engine_close(eq_engine* engine) { delete engine; }

const char* eq_engine_last_error(const eq_engine* engine) {
  return engine == nullptr ? "" : engine->last_error.c_str();
}

const char* eq_open_error(void) { return g_open_error.c_str(); }

eq_status eq_engine_set_option(eq_engine* engine, const char* key, const char* value) {
  if (engine == nullptr) return EQ_ERROR_CONFIG;
  if (key == nullptr || value == nullptr) {
    engine->last_error = "set_option: null key or value";
    return EQ_ERROR_CONFIG;
  }
  const std::string k = key;
  const std::string v = value;
  return engine->guard([&] {
    equity::pipeline::RunConfig next = engine->config;
    if (k == "output_dir") {
      if (v.empty()) throw equity::ConfigError("set_option: output_dir must not be empty");
      next.output_dir = v;
    } else if (k == "strict_paper" || k == "longest_run_recovery" ||
               k == "joint_hour_normalization") {
      bool flag = false;
      if (!parse_bool(v, flag))
        throw equity::ConfigError("set_option: " + k + " expects true/false, got '" + v + "'");
      if (k == "strict_paper") next.params.strict_paper = flag;
      if (k == "longest_run_recovery") next.params.longest_run_recovery = flag;
      if (k == "joint_hour_normalization") next.params.joint_hour_normalization = flag;
    } else if (k == "threads" || k == "cluster_k" || k == "cluster_seed") {
      std::size_t used = 0;
      long long n = 0;
      try {
        n = std::stoll(v, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != v.size())
        throw equity::ConfigError("set_option: " + k + " expects an integer, got '" + v + "'");
      if (k == "threads") {
        if (n < 0) throw equity::ConfigError("set_option: threads must be >= 0");
        next.params.threads = static_cast<int>(n);
      } else if (k == "cluster_k") {
        if (n < 1) throw equity::ConfigError("set_option: cluster_k must be >= 1");
        next.params.cluster_k = static_cast<int>(n);
      } else {
        if (n < 0) throw equity::ConfigError("set_option: cluster_seed must be >= 0");
        next.params.cluster_seed = static_cast<std::uint64_t>(n);
      }
    } else if (k == "initial_fill" || k == "overlay_percentile") {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(v, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != v.size())
        throw equity::ConfigError("set_option: " + k + " expects a number, got '" + v + "'");
      if (k == "initial_fill") {
        if (x < 0.0 || x > 1.0)
          throw equity::ConfigError("set_option: initial_fill must be in [0, 1]");
        next.params.initial_fill = x;
      } else {
        if (x <= 0.0 || x >= 1.0)
          throw equity::ConfigError("set_option: overlay_percentile must be in (0, 1)");
        next.params.overlay_percentile = x;
      }
    } else {
      throw equity::ConfigError("set_option: unknown key '" + k + "'");
    }
    // Recreate the engine so every cached stage sees the new settings.
    auto impl = std::make_unique<equity::pipeline::Engine>(next);
    engine->config = next;
    engine->impl = std::move(impl);
  });
}

namespace {

// Expands NULL/"both" into the two period names.
std::vector<std::string> periods_of(const char* period) {
  if (period == nullptr) return {"before", "after"};
  const std::string p = period;
  if (p.empty() || p == "both") return {"before", "after"};
  if (p == "before" || p == "after") return {p};
  throw equity::ConfigError("unknown period '" + p + "' (expected before, after, or both)");
}

}  // namespace

eq_status eq_engine_run_stage(eq_engine* engine, const char* stage, const char* period,
                              int* files_written) {
  if (engine == nullptr) return EQ_ERROR_CONFIG;
  if (files_written != nullptr) *files_written = 0;
  if (stage == nullptr) {
    engine->last_error = "run_stage: null stage";
    return EQ_ERROR_CONFIG;
  }
  const std::string st = stage;
  return engine->guard([&] {
    std::vector<std::string> written;
    if (st == "overlay") {
      written = engine->impl->write_overlay();
    } else {
      for (const auto& p : periods_of(period)) {
        std::vector<std::string> part;
        if (st == "ingest")
          part = engine->impl->write_ingest(p);
        else if (st == "availability")
          part = engine->impl->write_availability(p);
        else if (st == "metrics")
          part = engine->impl->write_metrics(p);
        else if (st == "recovery")
          part = engine->impl->write_recovery(p);
        else if (st == "compare")
          part = engine->impl->write_compare(p);
        else if (st == "cluster")
          part = engine->impl->write_cluster(p);
        else
          throw equity::ConfigError("unknown stage '" + st + "'");
        written.insert(written.end(), part.begin(), part.end());
      }
    }
    if (files_written != nullptr) *files_written = static_cast<int>(written.size());
  });
}

eq_status eq_engine_run_all(eq_engine* engine, int* files_written) {
  if (engine == nullptr) return EQ_ERROR_CONFIG;
  if (files_written != nullptr) *files_written = 0;
  return engine->guard([&] {
    const auto written = engine->impl->run_all();
    if (files_written != nullptr) *files_written = static_cast<int>(written.size());
  });
}

eq_status eq_engine_diff(eq_engine* engine, const char* layer, const char* category, int hour,
                         int* files_written) {
  if (engine == nullptr) return EQ_ERROR_CONFIG;
  if (files_written != nullptr) *files_written = 0;
  if (layer == nullptr) {
    engine->last_error = "diff: null layer";
    return EQ_ERROR_CONFIG;
  }
  if (hour < -1 || hour > 23) {
    engine->last_error = "diff: hour must be -1 (24-hour mean) or 0..23";
    return EQ_ERROR_CONFIG;
  }
  const std::string cat = category == nullptr ? "" : category;
  return engine->guard([&] {
    const auto written = engine->impl->write_diff(layer, cat, hour);
    if (files_written != nullptr) *files_written = static_cast<int>(written.size());
  });
}

eq_status eq_engine_layer_value(eq_engine* engine, const char* layer, const char* period,
                                const char* category, const char* zone_id, int hour,
                                double* out_value) {
  if (engine == nullptr) return EQ_ERROR_CONFIG;
  if (layer == nullptr || period == nullptr || zone_id == nullptr || out_value == nullptr) {
    engine->last_error = "layer_value: null argument";
    return EQ_ERROR_CONFIG;
  }
  const std::string cat = category == nullptr ? "" : category;
  const std::string zone = zone_id;
  return engine->guard([&] {
    const auto built = engine->impl->build_layer(layer, period, cat);
    const auto it = built.values.find(zone);
    if (it == built.values.end()) {
      if (built.no_service.count(zone) || built.never_served.count(zone))
        throw equity::InputError("layer_value: zone '" + zone + "' carries no value in layer '" +
                                 built.name + "'");
      throw equity::InputError("layer_value: unknown zone '" + zone + "'");
    }
    if (built.hourly) {
      if (hour < 0 || hour > 23)
        throw equity::ConfigError("layer_value: hour must be 0..23 for hourly layers");
      *out_value = it->second[static_cast<std::size_t>(hour)];
    } else {
      *out_value = it->second.front();
    }
  });
}

}  // extern "C"
