#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace pbf {

// Gaussian point heat source, hemispherical in z (material occupies z <= 0).
// effective_power is the absorbed power eta*P as one number.
struct LaserParams {
  double effective_power = 150.0;      // W
  double radius = 450e-6;              // m
  // Defaults to the radius, which makes the half-space integral of the
  // source exactly effective_power (the absorbed power all enters the
  // material). Not a tabulated value; overridable and echoed in run logs.
  double penetration_depth = 450e-6;   // m
  double scan_speed = 0.1;             // m/s

  void validate() const {
    if (!(effective_power > 0.0)) throw std::invalid_argument("laser.effective_power must be > 0");
    if (!(radius > 0.0)) throw std::invalid_argument("laser.radius must be > 0");
    if (!(penetration_depth > 0.0))
      throw std::invalid_argument("laser.penetration_depth must be > 0");
    if (!(scan_speed > 0.0)) throw std::invalid_argument("laser.scan_speed must be > 0");
  }
};

// One straight scan segment in the top-surface plane.
struct Track {
  int id = 0;
  Eigen::Vector2d start{0.0, 0.0};
  Eigen::Vector2d end{0.0, 0.0};

  double length() const { return (end - start).norm(); }

  void validate() const {
    if (length() <= 0.0) throw std::invalid_argument("track start and end must differ");
  }
};

// An ordered permutation of tracks plus the per-track scan duration.
// The laser jumps instantaneously between consecutive tracks.
class Scenario {
 public:
  Scenario() = default;
  Scenario(std::vector<Track> tracks, double per_track_duration);

  const std::vector<Track>& tracks() const { return tracks_; }
  double per_track_duration() const { return per_track_duration_; }
  double total_duration() const { return per_track_duration_ * tracks_.size(); }
  std::vector<int> track_ids() const;
  std::string name() const;  // ids joined by '-': "2-3-1"

  // Laser spot position at time t in [0, total_duration].
  Eigen::Vector2d laser_position(double t) const;

 private:
  std::vector<Track> tracks_;
  double per_track_duration_ = 0.0;
};

// Volumetric power density (W/m^3) of the moving hemispherical Gaussian
// source at (x, y, z <= 0) and time t. Evaluates to ~0 far from the spot.
double heat_source(double x, double y, double z, double t, const Scenario& scenario,
                   const LaserParams& laser);

// Same, with the in-plane spot position precomputed.
double heat_source_at(double x, double y, double z, const Eigen::Vector2d& spot,
                      const LaserParams& laser);

// Peak power density at the spot center (closed form, z = 0).
double heat_source_peak(const LaserParams& laser);

// Tool-path input function: laser positions at m equally spaced times
// t_k = k * T / m, k = 1..m, flattened as (x1, y1, x2, y2, ..., xm, ym).
Eigen::VectorXd encode_path(const Scenario& scenario, int samples);

// All n! permutations of the tracks in lexicographic id order. Refuses
// n > 6 to guard against factorial blow-up.
std::vector<Scenario> enumerate_scenarios(const std::vector<Track>& tracks, double scan_speed);

// Single scenario from an explicit id sequence such as {2, 3, 1}.
Scenario make_scenario(const std::vector<Track>& tracks, const std::vector<int>& order,
                       double scan_speed);

// Checks that all tracks have (nearly) equal length; returns that length.
double common_track_length(const std::vector<Track>& tracks);

}  // namespace pbf
