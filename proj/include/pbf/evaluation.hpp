#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbf/field.hpp"
#include "pbf/normalization.hpp"

namespace pbf {

// Mean absolute percentage error over all grid nodes (Kelvin everywhere, so
// denominators stay away from zero). Fields must share grid layout and time.
double mape(const TemperatureField& predicted, const TemperatureField& reference);

// Melt-pool bounding extents of the super-threshold region, with the
// threshold crossing interpolated linearly along grid lines. Length is the
// x-extent (scan axis), width y, depth z. All zero when nothing melts.
struct MeltPoolDims {
  double length = 0.0;
  double width = 0.0;
  double depth = 0.0;
  double threshold = 1600.0;
};

MeltPoolDims meltpool_dims(const TemperatureField& field, double threshold);

// Reference solution wrapper: nearest-snapshot pair, linear in time,
// trilinear in space.
class FdReference final : public TemperatureSurrogate {
 public:
  explicit FdReference(std::vector<TemperatureField> snapshots);
  double temperature(double t, double x, double y, double z) const override;
  const std::vector<TemperatureField>& snapshots() const { return snapshots_; }

 private:
  std::vector<TemperatureField> snapshots_;
};

// surrogate queried at `times` at a fixed probe
std::vector<double> temperature_history(const TemperatureSurrogate& surrogate,
                                        const Eigen::Vector3d& probe,
                                        const std::vector<double>& times);

struct SnapshotReport {
  double time = 0.0;
  double mape = 0.0;
  double max_relative_error = 0.0;
  double p50_relative_error = 0.0;
  double p90_relative_error = 0.0;
  double p99_relative_error = 0.0;
  MeltPoolDims dims_reference;
  MeltPoolDims dims_predicted;
  // |predicted - reference| / reference per axis; 0 when the reference has
  // no melt pool
  double length_error = 0.0, width_error = 0.0, depth_error = 0.0;
};

struct EvalReport {
  double mape = 0.0;  // over all snapshots pooled
  std::vector<SnapshotReport> snapshots;
  std::vector<Eigen::Vector3d> history_probes;
  std::vector<double> history_times;
  // [probe][time]
  std::vector<std::vector<double>> history_predicted;
  std::vector<std::vector<double>> history_reference;
};

struct EvalConfig {
  double melt_threshold = 1600.0;
  std::vector<Eigen::Vector3d> history_probes;
  std::vector<double> history_times;
};

// Evaluates the surrogate on the reference grid at every snapshot.
EvalReport compare(const TemperatureSurrogate& surrogate, const FdReference& reference,
                   const EvalConfig& config);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);
void save_report(const EvalReport& report, const std::filesystem::path& json_file);
EvalReport load_report(const std::filesystem::path& json_file);

// report.csv rows mirroring the paper-style summary table, plus per-figure
// CSVs (relative-error scatter, histories) for external plotting.
void save_report_csv(const EvalReport& report, const std::filesystem::path& csv_file);
void save_history_csv(const EvalReport& report, const std::filesystem::path& csv_file);

}  // namespace pbf
