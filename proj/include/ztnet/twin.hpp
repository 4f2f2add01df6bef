#pragma once

// Digital twin: an editable copy of the plant model, fitted to telemetry in
// four sequential stages, then used for QoT estimation and what-if rehearsal.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ztnet/field.hpp"
#include "ztnet/qot.hpp"
#include "ztnet/topology.hpp"

namespace ztnet {

enum class CalibrationStageKind { SpanLoss, AmpGainTilt, AmpNoiseFigure, FiberGamma };

std::string_view stage_name(CalibrationStageKind k);

struct TwinBounds {
  double attenuation_min = 0.15, attenuation_max = 0.25;  // dB/km
  double nf_min = 3.0, nf_max = 8.0;
  double connector_min = 0.0, connector_max = 2.0;
  double gamma_min = 0.8, gamma_max = 1.8;
  double gain_window_db = 3.0;  // around the modelled span loss
  double tilt_min = -2.0, tilt_max = 2.0;
};

struct StageReport {
  std::string name;
  std::vector<std::string> parameters;
  double residual_before = 0.0;  // max |delta| dB over this stage's fitted quantities
  double residual_after = 0.0;
  int iterations = 0;
  bool pinned = false;    // every fitted element ended on a bound
  bool reverted = false;  // fit made the stage metric worse and was rolled back

  bool operator==(const StageReport&) const = default;
};

struct CalibrationReport {
  std::vector<StageReport> stages;
  std::size_t channel_count = 0;
  double initial_max_abs_gsnr_error_db = 0.0;
  double final_max_abs_gsnr_error_db = 0.0;
  bool stopped_early = false;
};

enum class CalibrationStatus { Uncalibrated, Calibrated };

struct TwinModel {
  NetworkTopology topology;
  CalibrationStatus status = CalibrationStatus::Uncalibrated;
  std::vector<StageReport> history;

  explicit TwinModel(NetworkTopology topo = {}) : topology(std::move(topo)) {}
  bool operator==(const TwinModel&) const = default;
};

struct CalibrationOptions {
  std::vector<CalibrationStageKind> order = {
      CalibrationStageKind::SpanLoss, CalibrationStageKind::AmpGainTilt,
      CalibrationStageKind::AmpNoiseFigure, CalibrationStageKind::FiberGamma};
  double tolerance = 1e-4;
  int max_iterations = 100;
  double stop_threshold_db = 0.05;
  int sweeps = 3;  // coordinate passes per stage
  TwinBounds bounds;
};

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

// Golden-section search for the minimum of a unimodal `f` on [lo, hi].
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo,
                                      double hi, double tolerance, int max_iterations);

// Fits the twin to the batch mean of `batch`. `services` is the roster the
// telemetry was taken on. Throws ValidationError on an empty batch.
CalibrationReport calibrate(TwinModel& twin, std::span<const Telemetry> batch,
                            std::span<const Service> services,
                            const CalibrationOptions& options = {});

QotReport estimate_qot(const TwinModel& twin, std::span<const Service> services);

struct RehearsalResult {
  QotReport predicted;
  MarginReport margins;
  std::vector<Service> services_after;
  double min_margin_db = 1.0;
  bool feasible = false;
};

// Applies `commands` to a scratch roster and predicts QoT on the twin. The
// verdict is feasible when every post-change margin is >= min_margin_db.
RehearsalResult rehearse(const TwinModel& twin, std::span<const NmsCommand> commands,
                         std::span<const Service> current, double min_margin_db = 1.0);

struct PredictionError {
  std::vector<std::pair<std::string, double>> per_channel;  // |delta gsnr| dB
  double max_abs_db = 0.0;
};

// Throws ValidationError("channel mismatch") unless both cover the same ids.
PredictionError prediction_error(const QotReport& predicted, const Telemetry& observed);

void to_json(nlohmann::json& j, const StageReport& s);
void from_json(const nlohmann::json& j, StageReport& s);
void to_json(nlohmann::json& j, const CalibrationReport& r);
void from_json(const nlohmann::json& j, CalibrationReport& r);
void to_json(nlohmann::json& j, const RehearsalResult& r);
void from_json(const nlohmann::json& j, RehearsalResult& r);

// Topology schema plus a "calibration" block.
std::string export_twin(const TwinModel& twin);
TwinModel import_twin(std::string_view text);

}  // namespace ztnet
