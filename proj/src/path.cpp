#include "pbf/path.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace pbf {

Scenario::Scenario(std::vector<Track> tracks, double per_track_duration)
    : tracks_(std::move(tracks)), per_track_duration_(per_track_duration) {
  if (tracks_.empty()) throw std::invalid_argument("scenario needs at least one track");
  if (!(per_track_duration_ > 0.0))
    throw std::invalid_argument("scenario per-track duration must be > 0");
  std::set<int> ids;
  for (const Track& tr : tracks_) {
    tr.validate();
    if (!ids.insert(tr.id).second)
      throw std::invalid_argument("scenario track ids must be distinct");
  }
}

std::vector<int> Scenario::track_ids() const {
  std::vector<int> ids;
  ids.reserve(tracks_.size());
  for (const Track& tr : tracks_) ids.push_back(tr.id);
  return ids;
}

std::string Scenario::name() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (i) out << '-';
    out << tracks_[i].id;
  }
  return out.str();
}

Eigen::Vector2d Scenario::laser_position(double t) const {
  const double total = total_duration();
  if (t < 0.0 || t > total * (1.0 + 1e-12))
    throw std::out_of_range("laser_position: t outside scenario duration");
  std::size_t k = static_cast<std::size_t>(t / per_track_duration_);
  if (k >= tracks_.size()) k = tracks_.size() - 1;  // t == total maps to last track end
  double frac = (t - k * per_track_duration_) / per_track_duration_;
  frac = std::min(frac, 1.0);
  const Track& tr = tracks_[k];
  return tr.start + frac * (tr.end - tr.start);
}

double heat_source_peak(const LaserParams& laser) {
  const double r = laser.radius;
  return laser.effective_power * 6.0 * std::sqrt(3.0) / (r * r * r * M_PI * std::sqrt(M_PI));
}

double heat_source_at(double x, double y, double z, const Eigen::Vector2d& spot,
                      const LaserParams& laser) {
  const double dx = x - spot.x();
  const double dy = y - spot.y();
  const double r2 = laser.radius * laser.radius;
  const double c2 = laser.penetration_depth * laser.penetration_depth;
  return heat_source_peak(laser) * std::exp(-3.0 * (dx * dx + dy * dy) / r2) *
         std::exp(-3.0 * z * z / c2);
}

double heat_source(double x, double y, double z, double t, const Scenario& scenario,
                   const LaserParams& laser) {
  return heat_source_at(x, y, z, scenario.laser_position(t), laser);
}

Eigen::VectorXd encode_path(const Scenario& scenario, int samples) {
  if (samples < 2) throw std::invalid_argument("encode_path: need at least 2 samples");
  const double total = scenario.total_duration();
  Eigen::VectorXd enc(2 * samples);
  for (int k = 1; k <= samples; ++k) {
    Eigen::Vector2d p = scenario.laser_position(k * total / samples);
    enc[2 * (k - 1)] = p.x();
    enc[2 * (k - 1) + 1] = p.y();
  }
  return enc;
}

double common_track_length(const std::vector<Track>& tracks) {
  if (tracks.empty()) throw std::invalid_argument("no tracks");
  double len = tracks.front().length();
  for (const Track& tr : tracks) {
    if (std::abs(tr.length() - len) > 1e-12 * std::max(1.0, len))
      throw std::invalid_argument("all tracks in one workpiece must have equal length");
  }
  return len;
}

Scenario make_scenario(const std::vector<Track>& tracks, const std::vector<int>& order,
                       double scan_speed) {
  const double duration = common_track_length(tracks) / scan_speed;
  std::vector<Track> seq;
  seq.reserve(order.size());
  for (int id : order) {
    auto it = std::find_if(tracks.begin(), tracks.end(),
                           [id](const Track& tr) { return tr.id == id; });
    if (it == tracks.end())
      throw std::invalid_argument("scenario references unknown track id " + std::to_string(id));
    seq.push_back(*it);
  }
  return Scenario(std::move(seq), duration);
}

std::vector<Scenario> enumerate_scenarios(const std::vector<Track>& tracks, double scan_speed) {
  const std::size_t n = tracks.size();
  if (n < 1 || n > 6)
    throw std::invalid_argument("enumerate_scenarios: track count must be in [1, 6]");
  std::vector<int> ids;
  ids.reserve(n);
  for (const Track& tr : tracks) ids.push_back(tr.id);
  std::sort(ids.begin(), ids.end());
  std::vector<Scenario> out;
  do {
    out.push_back(make_scenario(tracks, ids, scan_speed));
  } while (std::next_permutation(ids.begin(), ids.end()));
  return out;
}

}  // namespace pbf
