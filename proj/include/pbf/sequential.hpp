#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pbf/pinn.hpp"

namespace pbf {

// One prefix node: the PINN for interval [t_begin, t_end] of every scenario
// that starts with `prefix`. Cooling nodes extend a full permutation past
// the scan with the laser off.
struct TreeNode {
  std::vector<int> prefix;
  bool cooling = false;
  double t_begin = 0.0, t_end = 0.0;
  std::shared_ptr<const PinnSurrogate> model;  // absent until trained/loaded

  std::string key() const;
  std::string parent_key() const;  // empty for depth-1 scan nodes
};

class TrackTree {
 public:
  TrackTree() = default;

  std::vector<Track> tracks;
  double per_track_duration = 0.0;
  double cooling_time = 0.0;  // 0 = no cooling nodes
  std::map<std::string, TreeNode> nodes;

  int scan_node_count() const;
  std::vector<std::string> keys_by_depth() const;  // training order
};

// All prefixes of all permutations of the tracks (deduplicated), plus one
// cooling node per full permutation when cooling_time > 0.
TrackTree build_tree(const std::vector<Track>& tracks, double scan_speed,
                     double cooling_time = 0.0);

// Closed form for the number of scan nodes with n tracks:
// sum_{i=0}^{n-1} prod_{j=0}^{i} (n - j).
long long sequential_node_count(int n);

// The shared problem template: geometry, material, laser, boundary set and
// ambient; per-node boxes/scenarios/ICs are derived from it.
struct SequentialProblem {
  SpaceTimeBox domain;  // t range ignored; spatial box used for every node
  MaterialParams material;
  LaserParams laser;
  BoundarySpec bc;
  double initial_temperature = 300.0;
};

// Trains every node breadth-first; parents feed children their initial
// condition. Persisted nodes are reloaded instead of retrained when
// `resume` is set. Node seeds derive from (seed, node key), so a node
// retrains bit-identically regardless of which other nodes already exist.
void train_tree(TrackTree& tree, const SequentialProblem& problem,
                const TrainingConfig& training, std::uint64_t seed,
                const std::filesystem::path& store, bool resume);

// Queryable full-scenario surrogate: interval i dispatches to the node for
// the scenario's first i+1 tracks ([t_{i-1}, t_i) half-open, last interval
// closed on the right).
class ComposedSurrogate final : public TemperatureSurrogate {
 public:
  ComposedSurrogate(std::vector<std::shared_ptr<const PinnSurrogate>> nodes,
                    std::vector<double> boundaries, std::string scenario_name);

  double temperature(double t, double x, double y, double z) const override;
  const std::vector<double>& interval_boundaries() const { return boundaries_; }
  const std::shared_ptr<const PinnSurrogate>& node(std::size_t i) const { return nodes_[i]; }
  std::size_t interval_count() const { return nodes_.size(); }
  const std::string& scenario_name() const { return name_; }
  // index of the interval that serves time t (the dispatch rule)
  std::size_t dispatch(double t) const;

 private:
  std::vector<std::shared_ptr<const PinnSurrogate>> nodes_;
  std::vector<double> boundaries_;  // size count+1
  std::string name_;
};

// Assembles the composed surrogate for one scenario from trained tree
// nodes; throws naming the first missing node.
ComposedSurrogate compose(const TrackTree& tree, const std::vector<int>& order,
                          bool include_cooling = true);

// Max |T_i(t_i, x) - T_{i+1}(t_i, x)| over random spatial probes, one entry
// per interior interval boundary.
std::vector<double> handoff_discontinuity(const ComposedSurrogate& composed,
                                          const SpaceTimeBox& domain, int probes,
                                          std::uint64_t seed);

// store manifest (node statuses) maintained by train_tree
void save_tree_manifest(const TrackTree& tree, const std::filesystem::path& store);

// Reloads all persisted node models from a store directory.
TrackTree load_tree(const std::filesystem::path& store);

}  // namespace pbf
