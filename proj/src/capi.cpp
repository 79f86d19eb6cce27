#include "gbl/gbl.h"

#include <cstring>
#include <new>
#include <string>

#include "gbl/experiments.hpp"

struct gbl_config {
  gbl::Config value;
};

struct gbl_model {
  gbl::NetConfig config;
  gbl::NetworkParams params;
};

struct gbl_dataset {
  gbl::Dataset value;
};

struct gbl_metrics {
  gbl::RunMetrics value;
};

namespace {

thread_local std::string last_error;

gbl_status fail(gbl_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Exceptions never cross the C boundary.
template <class F>
gbl_status guarded(F&& body) {
  try {
    return body();
  } catch (const gbl::ConfigError& e) {
    return fail(GBL_CONFIG_ERROR, e.what());
  } catch (const gbl::DivergenceError& e) {
    return fail(GBL_DIVERGED, std::string(e.what()) + " (iteration " +
                                  std::to_string(e.iteration()) + ")");
  } catch (const gbl::IoError& e) {
    return fail(GBL_IO_ERROR, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(GBL_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GBL_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GBL_INTERNAL, e.what());
  } catch (...) {
    return fail(GBL_INTERNAL, "unknown exception");
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define GBL_REQUIRE(ptr) \
  if ((ptr) == nullptr) return fail(GBL_INVALID_ARGUMENT, #ptr " must not be NULL")

}  // namespace

extern "C" {

const char* gbl_version(void) { return "0.1.0"; }

const char* gbl_last_error(void) { return last_error.c_str(); }

const char* gbl_status_name(gbl_status status) {
  switch (status) {
    case GBL_OK: return "ok";
    case GBL_CONFIG_ERROR: return "config error";
    case GBL_DIVERGED: return "numerical divergence";
    case GBL_IO_ERROR: return "I/O error";
    case GBL_CHECK_FAILED: return "check failed";
    case GBL_INVALID_ARGUMENT: return "invalid argument";
    case GBL_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void gbl_string_free(char* s) { delete[] s; }

gbl_status gbl_config_new(gbl_config** out) {
  GBL_REQUIRE(out);
  return guarded([&] {
    *out = new gbl_config{};
    return GBL_OK;
  });
}

gbl_status gbl_config_from_file(const char* path, gbl_config** out) {
  GBL_REQUIRE(path);
  GBL_REQUIRE(out);
  return guarded([&] {
    *out = new gbl_config{gbl::Config::from_file(path)};
    return GBL_OK;
  });
}

gbl_status gbl_config_from_json(const char* json, gbl_config** out) {
  GBL_REQUIRE(json);
  GBL_REQUIRE(out);
  return guarded([&] {
    *out = new gbl_config{gbl::Config::from_json(json)};
    return GBL_OK;
  });
}

gbl_status gbl_config_set(gbl_config* cfg, const char* assignment) {
  GBL_REQUIRE(cfg);
  GBL_REQUIRE(assignment);
  return guarded([&] {
    cfg->value.apply_override(assignment);
    return GBL_OK;
  });
}

void gbl_config_free(gbl_config* cfg) { delete cfg; }

gbl_status gbl_dataset_load(const gbl_config* cfg, int test_split, gbl_dataset** out) {
  GBL_REQUIRE(cfg);
  GBL_REQUIRE(out);
  return guarded([&] {
    gbl::TrainData data = gbl::load_train_data(cfg->value);
    *out = new gbl_dataset{test_split ? std::move(data.test) : std::move(data.train)};
    return GBL_OK;
  });
}

size_t gbl_dataset_size(const gbl_dataset* data) { return data ? data->value.size() : 0; }
size_t gbl_dataset_dim(const gbl_dataset* data) { return data ? data->value.dim() : 0; }
void gbl_dataset_free(gbl_dataset* data) { delete data; }

gbl_status gbl_model_init(const gbl_config* cfg, size_t input_dim, gbl_model** out) {
  GBL_REQUIRE(cfg);
  GBL_REQUIRE(out);
  return guarded([&] {
    const gbl::NetConfig net = gbl::net_config_from(cfg->value, input_dim);
    *out = new gbl_model{net, gbl::init_params(net, cfg->value.get_count("seed", 1))};
    return GBL_OK;
  });
}

gbl_status gbl_model_load(const char* checkpoint_path, gbl_model** out) {
  GBL_REQUIRE(checkpoint_path);
  GBL_REQUIRE(out);
  return guarded([&] {
    gbl::Checkpoint ck = gbl::load_checkpoint(checkpoint_path);
    *out = new gbl_model{ck.config, std::move(ck.params)};
    return GBL_OK;
  });
}

gbl_status gbl_model_save(const gbl_model* model, const char* checkpoint_path) {
  GBL_REQUIRE(model);
  GBL_REQUIRE(checkpoint_path);
  return guarded([&] {
    gbl::save_checkpoint(checkpoint_path, model->config, model->params);
    return GBL_OK;
  });
}

size_t gbl_model_num_params(const gbl_model* model) { return model ? model->params.size() : 0; }
size_t gbl_model_input_dim(const gbl_model* model) {
  return model ? model->config.input_dim : 0;
}

gbl_status gbl_model_forward(const gbl_model* model, const double* x, size_t dim, double* out) {
  GBL_REQUIRE(model);
  GBL_REQUIRE(x);
  GBL_REQUIRE(out);
  if (dim != model->config.input_dim) return fail(GBL_INVALID_ARGUMENT, "input has wrong length");
  return guarded([&] {
    *out = gbl::Model(model->config).forward(model->params, {x, dim});
    return GBL_OK;
  });
}

gbl_status gbl_model_grad(const gbl_model* model, const double* x, size_t dim, double* out,
                          size_t num_params) {
  GBL_REQUIRE(model);
  GBL_REQUIRE(x);
  GBL_REQUIRE(out);
  if (dim != model->config.input_dim) return fail(GBL_INVALID_ARGUMENT, "input has wrong length");
  if (num_params != model->params.size()) {
    return fail(GBL_INVALID_ARGUMENT, "gradient buffer has wrong length");
  }
  return guarded([&] {
    const std::vector<double> g = gbl::Model(model->config).grad(model->params, {x, dim});
    std::memcpy(out, g.data(), g.size() * sizeof(double));
    return GBL_OK;
  });
}

gbl_status gbl_model_loss(const gbl_model* model, const gbl_dataset* data, double* out) {
  GBL_REQUIRE(model);
  GBL_REQUIRE(data);
  GBL_REQUIRE(out);
  return guarded([&] {
    *out = gbl::empirical_loss(gbl::Model(model->config), model->params, data->value,
                               gbl::LossKind::logistic);
    return GBL_OK;
  });
}

void gbl_model_free(gbl_model* model) { delete model; }

gbl_status gbl_metrics_read(const char* csv_path, gbl_metrics** out) {
  GBL_REQUIRE(csv_path);
  GBL_REQUIRE(out);
  return guarded([&] {
    *out = new gbl_metrics{gbl::read_metrics_csv(csv_path)};
    return GBL_OK;
  });
}

size_t gbl_metrics_rows(const gbl_metrics* metrics) {
  return metrics ? metrics->value.records.size() : 0;
}

gbl_status gbl_metrics_get(const gbl_metrics* metrics, size_t row, gbl_record* out) {
  GBL_REQUIRE(metrics);
  GBL_REQUIRE(out);
  if (row >= metrics->value.records.size()) return fail(GBL_INVALID_ARGUMENT, "row out of range");
  const gbl::RunRecord& r = metrics->value.records[row];
  *out = gbl_record{r.iter,          r.train_loss, r.test_loss, r.gen_gap,
                    r.dist_from_init, r.grad_norm,  r.cum_train_loss, r.eta,
                    r.descent_violation ? 1 : 0};
  return GBL_OK;
}

void gbl_metrics_free(gbl_metrics* metrics) { delete metrics; }

gbl_status gbl_run_train(const gbl_config* cfg, const char* out_dir) {
  GBL_REQUIRE(cfg);
  GBL_REQUIRE(out_dir);
  return guarded([&] {
    gbl::run_train(cfg->value, out_dir);
    return GBL_OK;
  });
}

gbl_status gbl_run_xor(const gbl_config* cfg, const char* out_dir) {
  GBL_REQUIRE(cfg);
  GBL_REQUIRE(out_dir);
  return guarded([&] {
    gbl::run_xor(cfg->value, out_dir);
    return GBL_OK;
  });
}

gbl_status gbl_run_sweep(const gbl_config* cfg, const char* out_dir, unsigned jobs) {
  GBL_REQUIRE(cfg);
  GBL_REQUIRE(out_dir);
  return guarded([&] {
    gbl::run_sweep(cfg->value, out_dir, jobs == 0 ? 1 : jobs);
    return GBL_OK;
  });
}

gbl_status gbl_run_bounds(const gbl_config* cfg, char** json_out) {
  GBL_REQUIRE(cfg);
  GBL_REQUIRE(json_out);
  return guarded([&] {
    *json_out = copy_string(gbl::to_json(gbl::run_bounds(cfg->value)));
    return GBL_OK;
  });
}

gbl_status gbl_run_check(int corrupt_activation, char** report_out) {
  GBL_REQUIRE(report_out);
  return guarded([&] {
    gbl::SelfCheckOptions opts;
    opts.corrupt_activation = corrupt_activation != 0;
    const std::vector<gbl::CheckResult> results = gbl::run_self_check(opts);
    *report_out = copy_string(gbl::format_check_report(results));
    std::string failed;
    for (const gbl::CheckResult& r : results) {
      if (!r.passed) failed += (failed.empty() ? "" : ", ") + r.name;
    }
    if (!failed.empty()) return fail(GBL_CHECK_FAILED, "failed checks: " + failed);
    return GBL_OK;
  });
}

}  // extern "C"
