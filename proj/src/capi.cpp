#include "lrf_capi.h"

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lrf/deviation.hpp"
#include "lrf/experiment.hpp"
#include "lrf/fields.hpp"
#include "lrf/innovations.hpp"
#include "lrf/mc.hpp"
#include "lrf/numerics.hpp"

namespace {

thread_local std::string g_last_error;

lrf_status code_to_status(lrf::ErrorCode code) {
  using lrf::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return LRF_ERR_INVALID_ARGUMENT;
    case ErrorCode::DegenerateField: return LRF_ERR_DEGENERATE_FIELD;
    case ErrorCode::WindowOverflow: return LRF_ERR_WINDOW_OVERFLOW;
    case ErrorCode::NonintegrableMoment: return LRF_ERR_NONINTEGRABLE_MOMENT;
    case ErrorCode::InvalidRegime: return LRF_ERR_INVALID_REGIME;
    case ErrorCode::TooManyAtoms: return LRF_ERR_TOO_MANY_ATOMS;
    case ErrorCode::NegativeWeight: return LRF_ERR_NEGATIVE_WEIGHT;
    case ErrorCode::EmptyKernelSupport: return LRF_ERR_EMPTY_KERNEL_SUPPORT;
    case ErrorCode::UnsupportedModel: return LRF_ERR_UNSUPPORTED_MODEL;
    case ErrorCode::ConfigError: return LRF_ERR_CONFIG;
    case ErrorCode::IoError: return LRF_ERR_IO;
  }
  return LRF_ERR_INTERNAL;
}

template <class Fn>
lrf_status guarded(Fn&& fn) {
  try {
    fn();
    return LRF_OK;
  } catch (const lrf::Error& e) {
    g_last_error = e.what();
    return code_to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LRF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LRF_ERR_INTERNAL;
  }
}

lrf_status invalid(const char* msg) {
  g_last_error = msg;
  return LRF_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct lrf_field {
  lrf::CoefficientField impl;
};
struct lrf_region {
  lrf::IndexRegion impl;
};
struct lrf_table {
  lrf::WeightTable impl;
};
struct lrf_innovation {
  lrf::InnovationModel impl;
};

extern "C" {

const char* lrf_version(void) { return "0.1.0"; }

const char* lrf_last_error(void) { return g_last_error.c_str(); }

/* --------------------------------------------------------------------- */

lrf_status lrf_field_create_json(const char* json_spec, lrf_field** out) {
  if (!json_spec || !out) return invalid("null argument");
  return guarded([&] {
    // Reuse the experiment-config field vocabulary through a tiny wrapper doc.
    const std::string doc = std::string("{\"mode\":\"coeffs\",\"field\":") +
                            json_spec +
                            ",\"regions\":[{\"n\":1}]}";
    lrf::ExperimentConfig cfg = lrf::parse_config(doc);
    *out = new lrf_field{*cfg.field};
  });
}

void lrf_field_free(lrf_field* field) { delete field; }

lrf_status lrf_region_create_square(int n, lrf_region** out) {
  if (!out) return invalid("null argument");
  return guarded([&] { *out = new lrf_region{lrf::IndexRegion::square(n)}; });
}

lrf_status lrf_region_create_json(const char* json_spec, lrf_region** out) {
  if (!json_spec || !out) return invalid("null argument");
  return guarded([&] {
    const std::string doc =
        std::string("{\"mode\":\"coeffs\",\"field\":{\"kind\":\"finite_"
                    "support\",\"atoms\":[{\"r\":0,\"s\":0,\"value\":1}]},"
                    "\"regions\":[") +
        json_spec + "]}";
    lrf::ExperimentConfig cfg = lrf::parse_config(doc);
    *out = new lrf_region{cfg.regions.at(0)};
  });
}

void lrf_region_free(lrf_region* region) { delete region; }

lrf_status lrf_innovation_create_json(const char* json_spec,
                                      lrf_innovation** out) {
  if (!json_spec || !out) return invalid("null argument");
  return guarded([&] {
    const std::string doc =
        std::string("{\"mode\":\"coeffs\",\"field\":{\"kind\":\"finite_"
                    "support\",\"atoms\":[{\"r\":0,\"s\":0,\"value\":1}]},"
                    "\"regions\":[{\"n\":1}],\"innovation\":") +
        json_spec + "}";
    lrf::ExperimentConfig cfg = lrf::parse_config(doc);
    *out = new lrf_innovation{*cfg.innovation};
  });
}

void lrf_innovation_free(lrf_innovation* innovation) { delete innovation; }

/* --------------------------------------------------------------------- */

lrf_status lrf_build_weights(const lrf_field* field, const lrf_region* region,
                             double epsilon, int64_t max_window_cells,
                             lrf_table** out) {
  if (!field || !region || !out) return invalid("null argument");
  return guarded([&] {
    lrf::BuildOptions opts;
    if (max_window_cells > 0) opts.max_window_cells = max_window_cells;
    *out = new lrf_table{
        lrf::build_weights(field->impl, region->impl, epsilon, opts)};
  });
}

void lrf_table_free(lrf_table* table) { delete table; }

lrf_status lrf_table_sigma2(const lrf_table* table, double* out) {
  if (!table || !out) return invalid("null argument");
  *out = table->impl.sigma2();
  return LRF_OK;
}

lrf_status lrf_table_truncation_epsilon(const lrf_table* table, double* out) {
  if (!table || !out) return invalid("null argument");
  *out = table->impl.truncation_epsilon();
  return LRF_OK;
}

lrf_status lrf_table_window(const lrf_table* table, int* mr, int* ms) {
  if (!table || !mr || !ms) return invalid("null argument");
  *mr = table->impl.half_r();
  *ms = table->impl.half_s();
  return LRF_OK;
}

lrf_status lrf_table_value(const lrf_table* table, int r, int s, double* out) {
  if (!table || !out) return invalid("null argument");
  *out = table->impl.at(r, s);
  return LRF_OK;
}

namespace {
lrf_status export_with(const lrf_table* table, const char* path, bool binary) {
  if (!table || !path) return invalid("null argument");
  return guarded([&] {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    lrf::require(bool(os), lrf::ErrorCode::IoError,
                 std::string("cannot open ") + path);
    if (binary) {
      table->impl.write_binary(os);
    } else {
      table->impl.write_csv(os);
    }
    lrf::require(bool(os), lrf::ErrorCode::IoError,
                 std::string("failed writing ") + path);
  });
}
}  // namespace

lrf_status lrf_table_export_csv(const lrf_table* table, const char* path) {
  return export_with(table, path, false);
}

lrf_status lrf_table_export_binary(const lrf_table* table, const char* path) {
  return export_with(table, path, true);
}

lrf_status lrf_aggregates(const lrf_table* table, const double* exponents,
                          size_t n_exponents, double* d_out, double* u_out,
                          double* rho2_out) {
  if (!table || !exponents || n_exponents == 0) return invalid("null argument");
  return guarded([&] {
    const lrf::WeightAggregates agg = lrf::aggregates(
        table->impl, std::span<const double>(exponents, n_exponents));
    for (size_t i = 0; i < n_exponents; ++i) {
      if (d_out) d_out[i] = agg.D.at(exponents[i]);
      if (u_out) u_out[i] = agg.U.at(exponents[i]);
    }
    if (rho2_out) *rho2_out = agg.rho2;
  });
}

/* --------------------------------------------------------------------- */

lrf_status lrf_innovation_survival(const lrf_innovation* innovation, double x,
                                   double* out) {
  if (!innovation || !out) return invalid("null argument");
  return guarded([&] { *out = innovation->impl.survival(x); });
}

lrf_status lrf_innovation_truncated_moment(const lrf_innovation* innovation,
                                           double order, double lower,
                                           double upper, double* out) {
  if (!innovation || !out) return invalid("null argument");
  return guarded(
      [&] { *out = innovation->impl.truncated_moment(order, lower, upper); });
}

lrf_status lrf_innovation_sample(const lrf_innovation* innovation,
                                 uint64_t seed, uint64_t stream, int64_t count,
                                 double* out) {
  if (!innovation || !out) return invalid("null argument");
  return guarded([&] {
    const std::vector<double> draws =
        lrf::sample(innovation->impl, lrf::RngStream{seed, stream}, count);
    std::memcpy(out, draws.data(), draws.size() * sizeof(double));
  });
}

/* --------------------------------------------------------------------- */

lrf_status lrf_simulate_tail(const lrf_table* table,
                             const lrf_innovation* innovation,
                             const double* thresholds_sigma,
                             size_t n_thresholds, int64_t n_samples,
                             uint64_t seed, int two_sided, int workers,
                             double* p_hat_out, double* std_err_out) {
  if (!table || !innovation || !thresholds_sigma || n_thresholds == 0) {
    return invalid("null argument");
  }
  return guarded([&] {
    const std::vector<lrf::TailEstimate> est = lrf::simulate_tail(
        table->impl, innovation->impl,
        std::span<const double>(thresholds_sigma, n_thresholds), n_samples,
        seed, two_sided != 0, workers);
    for (size_t i = 0; i < n_thresholds; ++i) {
      if (p_hat_out) p_hat_out[i] = est[i].p_hat;
      if (std_err_out) std_err_out[i] = est[i].std_err;
    }
  });
}

lrf_status lrf_enumerate_tail(const lrf_table* table,
                              const lrf_innovation* innovation,
                              double threshold_abs, double* out) {
  if (!table || !innovation || !out) return invalid("null argument");
  return guarded([&] {
    *out = lrf::enumerate_tail(table->impl, innovation->impl, threshold_abs);
  });
}

/* --------------------------------------------------------------------- */

double lrf_normal_cdf(double x) { return lrf::normal_cdf(x); }

lrf_status lrf_normal_tail_bounds(double x, double* lower, double* upper) {
  if (!lower || !upper) return invalid("null argument");
  return guarded([&] {
    const auto [lo, hi] = lrf::normal_tail_bounds(x);
    *lower = lo;
    *upper = hi;
  });
}

lrf_status lrf_moderate_prediction(const lrf_table* table, double x_sigma,
                                   double p, double* value, int* moderate_ok) {
  if (!table || !value) return invalid("null argument");
  return guarded([&] {
    const double exps[] = {p};
    const lrf::WeightAggregates agg = lrf::aggregates(table->impl, exps);
    const lrf::DeviationPrediction pred =
        lrf::moderate_prediction(x_sigma, agg, p);
    *value = pred.value;
    if (moderate_ok) *moderate_ok = pred.moderate_ok ? 1 : 0;
  });
}

lrf_status lrf_large_prediction(const lrf_table* table,
                                const lrf_innovation* innovation, double x_abs,
                                double ct_margin, double* value,
                                double* heavy_power_form, int* large_ok) {
  if (!table || !innovation || !value) return invalid("null argument");
  return guarded([&] {
    const lrf::DeviationPrediction pred =
        lrf::large_prediction(x_abs, table->impl, innovation->impl, ct_margin);
    *value = pred.value;
    if (heavy_power_form) *heavy_power_form = pred.heavy_part;
    if (large_ok) *large_ok = pred.large_ok ? 1 : 0;
  });
}

lrf_status lrf_uniform_prediction(const lrf_table* table,
                                  const lrf_innovation* innovation,
                                  double x_sigma, double p, double ct_margin,
                                  double* value, double* gaussian_part,
                                  double* heavy_part, int* moderate_ok,
                                  int* large_ok) {
  if (!table || !innovation || !value) return invalid("null argument");
  return guarded([&] {
    lrf::require(innovation->impl.tail().has_value(),
                 lrf::ErrorCode::InvalidArgument,
                 "innovation model carries no tail descriptor");
    const double t = innovation->impl.tail()->t;
    const double exps[] = {p, t};
    const lrf::WeightAggregates agg = lrf::aggregates(table->impl, exps);
    const lrf::DeviationPrediction pred = lrf::uniform_prediction(
        x_sigma, table->impl, agg, innovation->impl, p, ct_margin);
    *value = pred.value;
    if (gaussian_part) *gaussian_part = pred.gaussian_part;
    if (heavy_part) *heavy_part = pred.heavy_part;
    if (moderate_ok) *moderate_ok = pred.moderate_ok ? 1 : 0;
    if (large_ok) *large_ok = pred.large_ok ? 1 : 0;
  });
}

lrf_status lrf_validity_ranges(const lrf_table* table, double p, double t,
                               double ct_margin, double* x_moderate_max,
                               double* x_large_min) {
  if (!table || !x_moderate_max || !x_large_min) {
    return invalid("null argument");
  }
  return guarded([&] {
    const double exps[] = {p, t};
    const lrf::WeightAggregates agg = lrf::aggregates(table->impl, exps);
    const lrf::ValidityRanges vr =
        lrf::validity_ranges(agg, p, t, ct_margin);
    *x_moderate_max = vr.x_moderate_max;
    *x_large_min = vr.x_large_min;
  });
}

lrf_status lrf_fuk_nagaev_bound(const lrf_table* table,
                                const lrf_innovation* innovation, double x_abs,
                                double y, double m, double* out) {
  if (!table || !innovation || !out) return invalid("null argument");
  return guarded([&] {
    *out = lrf::fuk_nagaev_bound(table->impl, innovation->impl, x_abs, y, m);
  });
}

/* --------------------------------------------------------------------- */

namespace {
lrf::DavisGutSpec dg_spec_from(int weight_kind, double r, double c) {
  lrf::DavisGutSpec spec;
  switch (weight_kind) {
    case 0: spec.kind = lrf::DgWeightKind::One; break;
    case 1: spec.kind = lrf::DgWeightKind::LogPow; break;
    case 2: spec.kind = lrf::DgWeightKind::Log; break;
    default:
      lrf::fail(lrf::ErrorCode::InvalidArgument, "weight_kind must be 0..2");
  }
  spec.r = r;
  spec.c = c;
  return spec;
}
}  // namespace

lrf_status lrf_psi(int weight_kind, double r, double c, double t,
                   double* out) {
  if (!out) return invalid("null argument");
  return guarded(
      [&] { *out = lrf::psi(dg_spec_from(weight_kind, r, c), t); });
}

lrf_status lrf_psi_first_exceed(int weight_kind, double r, double c,
                                int64_t* out) {
  if (!out) return invalid("null argument");
  return guarded(
      [&] { *out = lrf::psi_first_exceed(dg_spec_from(weight_kind, r, c)); });
}

lrf_status lrf_davis_gut_converges(int corollary, double epsilon, double r,
                                   double b, int* out) {
  if (!out) return invalid("null argument");
  return guarded([&] {
    lrf::DavisGutSpec spec;
    spec.epsilon = epsilon;
    spec.r = r;
    spec.loglog_power_b = b;
    lrf::DgCorollary c;
    switch (corollary) {
      case 1: c = lrf::DgCorollary::C31; break;
      case 2: c = lrf::DgCorollary::C32; break;
      case 3: c = lrf::DgCorollary::C33; break;
      default:
        lrf::fail(lrf::ErrorCode::InvalidArgument, "corollary must be 1..3");
    }
    *out = lrf::davis_gut_converges(spec, c) ? 1 : 0;
  });
}

/* --------------------------------------------------------------------- */

lrf_status lrf_run_experiment(const char* config_json,
                              const char* mode_override, const char* out_dir,
                              int64_t seed_override, int workers,
                              int* verify_failed) {
  if (!config_json) return invalid("null argument");
  if (verify_failed) *verify_failed = 0;
  return guarded([&] {
    std::string text = config_json;
    if ((mode_override && *mode_override) || seed_override >= 0) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        lrf::fail(lrf::ErrorCode::ConfigError,
                  std::string("malformed JSON: ") + e.what());
      }
      if (mode_override && *mode_override) doc["mode"] = mode_override;
      if (seed_override >= 0) doc["seed"] = seed_override;
      text = doc.dump();
    }
    const lrf::ExperimentConfig cfg = lrf::parse_config(text);
    const lrf::RunResult result = lrf::run_experiment(cfg, workers);
    // the flag overrides the config's own output directory
    const std::string dir =
        (out_dir && *out_dir) ? std::string(out_dir) : cfg.out_dir;
    lrf::write_outputs(result, dir);
    if (verify_failed) *verify_failed = result.exit_code == 1 ? 1 : 0;
  });
}

} /* extern "C" */
