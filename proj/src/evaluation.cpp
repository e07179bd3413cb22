#include "pbf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pbf {

double mape(const TemperatureField& predicted, const TemperatureField& reference) {
  if (!predicted.grid.same_layout(reference.grid))
    throw std::invalid_argument("mape: grid layout mismatch");
  if (predicted.time != reference.time)
    throw std::invalid_argument("mape: snapshot time mismatch");
  return (predicted.values - reference.values)
             .cwiseAbs()
             .cwiseQuotient(reference.values)
             .sum() /
         static_cast<double>(reference.values.size());
}

namespace {

struct AxisExtent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool any = false;

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    any = true;
  }
  double extent() const { return any ? hi - lo : 0.0; }
};

}  // namespace

MeltPoolDims meltpool_dims(const TemperatureField& field, double threshold) {
  const Grid& g = field.grid;
  MeltPoolDims dims;
  dims.threshold = threshold;
  AxisExtent ex, ey, ez;

  auto scan_line = [&](AxisExtent& extent, double coord_a, double coord_b, double value_a,
                       double value_b) {
    // crossing between two adjacent nodes on a grid line
    const double da = value_a - threshold, db = value_b - threshold;
    if ((da > 0.0) != (db > 0.0) && da != db) {
      const double f = da / (da - db);
      extent.include(coord_a + f * (coord_b - coord_a));
    }
  };

  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double v = field.at(i, j, k);
        if (v > threshold) {
          ex.include(g.x(i));
          ey.include(g.y(j));
          ez.include(g.z(k));
        }
        if (i + 1 < g.nx) scan_line(ex, g.x(i), g.x(i + 1), v, field.at(i + 1, j, k));
        if (j + 1 < g.ny) scan_line(ey, g.y(j), g.y(j + 1), v, field.at(i, j + 1, k));
        if (k + 1 < g.nz) scan_line(ez, g.z(k), g.z(k + 1), v, field.at(i, j, k + 1));
      }

  dims.length = ex.extent();
  dims.width = ey.extent();
  dims.depth = ez.extent();
  return dims;
}

FdReference::FdReference(std::vector<TemperatureField> snapshots)
    : snapshots_(std::move(snapshots)) {
  if (snapshots_.empty()) throw std::invalid_argument("FdReference needs snapshots");
  for (std::size_t s = 1; s < snapshots_.size(); ++s)
    if (snapshots_[s].time < snapshots_[s - 1].time)
      throw std::invalid_argument("FdReference snapshots must be time-ordered");
}

double FdReference::temperature(double t, double x, double y, double z) const {
  const double slack =
      1e-9 * std::max(1.0, std::abs(snapshots_.back().time));
  if (t < snapshots_.front().time - slack || t > snapshots_.back().time + slack)
    throw std::out_of_range("FdReference: query time outside stored snapshots");
  if (snapshots_.size() == 1) return snapshots_.front().sample(x, y, z);
  std::size_t hi = 1;
  while (hi + 1 < snapshots_.size() && snapshots_[hi].time < t) ++hi;
  const TemperatureField& a = snapshots_[hi - 1];
  const TemperatureField& b = snapshots_[hi];
  if (b.time == a.time) return b.sample(x, y, z);
  const double f = std::clamp((t - a.time) / (b.time - a.time), 0.0, 1.0);
  return (1.0 - f) * a.sample(x, y, z) + f * b.sample(x, y, z);
}

std::vector<double> temperature_history(const TemperatureSurrogate& surrogate,
                                        const Eigen::Vector3d& probe,
                                        const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(surrogate.temperature(t, probe.x(), probe.y(), probe.z()));
  return out;
}

EvalReport compare(const TemperatureSurrogate& surrogate, const FdReference& reference,
                   const EvalConfig& config) {
  EvalReport report;
  double pooled_abs = 0.0;
  std::size_t pooled_n = 0;

  for (const TemperatureField& ref : reference.snapshots()) {
    const Grid& g = ref.grid;
    TemperatureField pred = ref;
    Eigen::MatrixXd queries(4, g.node_count());
    std::size_t n = 0;
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i, ++n)
          queries.col(n) << ref.time, g.x(i), g.y(j), g.z(k);
    pred.values = surrogate.temperature_batch(queries);

    SnapshotReport snap;
    snap.time = ref.time;
    snap.mape = mape(pred, ref);
    Eigen::VectorXd rel =
        (pred.values - ref.values).cwiseAbs().cwiseQuotient(ref.values);
    pooled_abs += rel.sum();
    pooled_n += rel.size();
    std::vector<double> sorted(rel.data(), rel.data() + rel.size());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
      return sorted[static_cast<std::size_t>(q * (sorted.size() - 1))];
    };
    snap.max_relative_error = sorted.back();
    snap.p50_relative_error = quantile(0.50);
    snap.p90_relative_error = quantile(0.90);
    snap.p99_relative_error = quantile(0.99);
    snap.dims_reference = meltpool_dims(ref, config.melt_threshold);
    snap.dims_predicted = meltpool_dims(pred, config.melt_threshold);
    auto rel_err = [](double got, double want) {
      return want > 0.0 ? std::abs(got - want) / want : 0.0;
    };
    snap.length_error = rel_err(snap.dims_predicted.length, snap.dims_reference.length);
    snap.width_error = rel_err(snap.dims_predicted.width, snap.dims_reference.width);
    snap.depth_error = rel_err(snap.dims_predicted.depth, snap.dims_reference.depth);
    report.snapshots.push_back(snap);
  }
  report.mape = pooled_n ? pooled_abs / static_cast<double>(pooled_n) : 0.0;

  report.history_probes = config.history_probes;
  report.history_times = config.history_times;
  for (const Eigen::Vector3d& probe : config.history_probes) {
    report.history_predicted.push_back(
        temperature_history(surrogate, probe, config.history_times));
    report.history_reference.push_back(
        temperature_history(reference, probe, config.history_times));
  }
  return report;
}

namespace {

nlohmann::json dims_to_json(const MeltPoolDims& d) {
  return {{"length", d.length}, {"width", d.width}, {"depth", d.depth},
          {"threshold", d.threshold}};
}

MeltPoolDims dims_from_json(const nlohmann::json& j) {
  MeltPoolDims d;
  d.length = j.at("length").get<double>();
  d.width = j.at("width").get<double>();
  d.depth = j.at("depth").get<double>();
  d.threshold = j.at("threshold").get<double>();
  return d;
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json snaps = nlohmann::json::array();
  for (const SnapshotReport& s : report.snapshots) {
    snaps.push_back({{"time", s.time},
                     {"mape", s.mape},
                     {"max_relative_error", s.max_relative_error},
                     {"p50_relative_error", s.p50_relative_error},
                     {"p90_relative_error", s.p90_relative_error},
                     {"p99_relative_error", s.p99_relative_error},
                     {"dims_reference", dims_to_json(s.dims_reference)},
                     {"dims_predicted", dims_to_json(s.dims_predicted)},
                     {"length_error", s.length_error},
                     {"width_error", s.width_error},
                     {"depth_error", s.depth_error}});
  }
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : report.history_probes) probes.push_back({p.x(), p.y(), p.z()});
  return {{"mape", report.mape},
          {"snapshots", snaps},
          {"history_probes", probes},
          {"history_times", report.history_times},
          {"history_predicted", report.history_predicted},
          {"history_reference", report.history_reference}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.mape = j.at("mape").get<double>();
  for (const auto& s : j.at("snapshots")) {
    SnapshotReport snap;
    snap.time = s.at("time").get<double>();
    snap.mape = s.at("mape").get<double>();
    snap.max_relative_error = s.at("max_relative_error").get<double>();
    snap.p50_relative_error = s.at("p50_relative_error").get<double>();
    snap.p90_relative_error = s.at("p90_relative_error").get<double>();
    snap.p99_relative_error = s.at("p99_relative_error").get<double>();
    snap.dims_reference = dims_from_json(s.at("dims_reference"));
    snap.dims_predicted = dims_from_json(s.at("dims_predicted"));
    snap.length_error = s.at("length_error").get<double>();
    snap.width_error = s.at("width_error").get<double>();
    snap.depth_error = s.at("depth_error").get<double>();
    report.snapshots.push_back(snap);
  }
  for (const auto& p : j.at("history_probes"))
    report.history_probes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                                       p.at(2).get<double>());
  report.history_times = j.at("history_times").get<std::vector<double>>();
  report.history_predicted = j.at("history_predicted").get<std::vector<std::vector<double>>>();
  report.history_reference = j.at("history_reference").get<std::vector<std::vector<double>>>();
  return report;
}

void save_report(const EvalReport& report, const std::filesystem::path& json_file) {
  std::ofstream out(json_file);
  if (!out) throw std::runtime_error("cannot open for write: " + json_file.string());
  out << to_json(report).dump(2) << "\n";
}

EvalReport load_report(const std::filesystem::path& json_file) {
  std::ifstream in(json_file);
  if (!in) throw std::runtime_error("cannot open: " + json_file.string());
  return eval_report_from_json(nlohmann::json::parse(in));
}

void save_report_csv(const EvalReport& report, const std::filesystem::path& csv_file) {
  std::FILE* out = std::fopen(csv_file.string().c_str(), "w");
  if (!out) throw std::runtime_error("cannot open for write: " + csv_file.string());
  std::fputs(
      "time,mape,p50_rel,p90_rel,p99_rel,max_rel,"
      "ref_length,ref_width,ref_depth,pred_length,pred_width,pred_depth,"
      "length_error,width_error,depth_error\n",
      out);
  for (const SnapshotReport& s : report.snapshots)
    std::fprintf(out, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                 s.time, s.mape, s.p50_relative_error, s.p90_relative_error,
                 s.p99_relative_error, s.max_relative_error, s.dims_reference.length,
                 s.dims_reference.width, s.dims_reference.depth, s.dims_predicted.length,
                 s.dims_predicted.width, s.dims_predicted.depth, s.length_error, s.width_error,
                 s.depth_error);
  std::fprintf(out, "overall,%.9g,,,,,,,,,,,,,\n", report.mape);
  std::fclose(out);
}

void save_history_csv(const EvalReport& report, const std::filesystem::path& csv_file) {
  std::FILE* out = std::fopen(csv_file.string().c_str(), "w");
  if (!out) throw std::runtime_error("cannot open for write: " + csv_file.string());
  std::fputs("probe_index,x,y,z,time,predicted,reference\n", out);
  for (std::size_t p = 0; p < report.history_probes.size(); ++p)
    for (std::size_t i = 0; i < report.history_times.size(); ++i)
      std::fprintf(out, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", p, report.history_probes[p].x(),
                   report.history_probes[p].y(), report.history_probes[p].z(),
                   report.history_times[i], report.history_predicted[p][i],
                   report.history_reference[p][i]);
  std::fclose(out);
}

}  // namespace pbf
