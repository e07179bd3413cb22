#include "pbf/sequential.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pbf/model_io.hpp"

namespace pbf {

std::string TreeNode::key() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i) out << '-';
    out << prefix[i];
  }
  if (cooling) out << "-cool";
  return out.str();
}

std::string TreeNode::parent_key() const {
  if (cooling) {
    TreeNode scan = *this;
    scan.cooling = false;
    return scan.key();
  }
  if (prefix.size() <= 1) return {};
  TreeNode parent = *this;
  parent.prefix.pop_back();
  return parent.key();
}

int TrackTree::scan_node_count() const {
  int n = 0;
  for (const auto& [key, node] : nodes)
    if (!node.cooling) ++n;
  return n;
}

std::vector<std::string> TrackTree::keys_by_depth() const {
  std::vector<std::string> keys;
  keys.reserve(nodes.size());
  for (const auto& [key, node] : nodes) keys.push_back(key);
  std::stable_sort(keys.begin(), keys.end(), [&](const std::string& a, const std::string& b) {
    const TreeNode& na = nodes.at(a);
    const TreeNode& nb = nodes.at(b);
    const std::size_t da = na.prefix.size() + (na.cooling ? 1 : 0);
    const std::size_t db = nb.prefix.size() + (nb.cooling ? 1 : 0);
    if (da != db) return da < db;
    return a < b;  // deterministic sibling order
  });
  return keys;
}

long long sequential_node_count(int n) {
  long long total = 0;
  for (int i = 0; i <= n - 1; ++i) {
    long long prod = 1;
    for (int j = 0; j <= i; ++j) prod *= (n - j);
    total += prod;
  }
  return total;
}

TrackTree build_tree(const std::vector<Track>& tracks, double scan_speed, double cooling_time) {
  const int n = static_cast<int>(tracks.size());
  if (n < 1 || n > 6) throw std::invalid_argument("build_tree: track count must be in [1, 6]");
  TrackTree tree;
  tree.tracks = tracks;
  tree.per_track_duration = common_track_length(tracks) / scan_speed;
  tree.cooling_time = cooling_time;

  std::vector<int> ids;
  for (const Track& tr : tracks) ids.push_back(tr.id);
  std::sort(ids.begin(), ids.end());

  // all prefixes of all permutations, deduplicated by construction
  std::vector<std::vector<int>> level;
  for (int id : ids) level.push_back({id});
  for (int depth = 1; depth <= n; ++depth) {
    for (const std::vector<int>& prefix : level) {
      TreeNode node;
      node.prefix = prefix;
      node.t_begin = (depth - 1) * tree.per_track_duration;
      node.t_end = depth * tree.per_track_duration;
      tree.nodes.emplace(node.key(), node);
      if (depth == n && cooling_time > 0.0) {
        TreeNode cool = node;
        cool.cooling = true;
        cool.t_begin = node.t_end;
        cool.t_end = node.t_end + cooling_time;
        tree.nodes.emplace(cool.key(), cool);
      }
    }
    if (depth == n) break;
    std::vector<std::vector<int>> next;
    for (const std::vector<int>& prefix : level)
      for (int id : ids)
        if (std::find(prefix.begin(), prefix.end(), id) == prefix.end()) {
          std::vector<int> extended = prefix;
          extended.push_back(id);
          next.push_back(std::move(extended));
        }
    level = std::move(next);
  }
  return tree;
}

namespace {

nlohmann::json tree_manifest_json(const TrackTree& tree) {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [key, node] : tree.nodes) {
    nodes[key] = {{"trained", node.model != nullptr},
                  {"cooling", node.cooling},
                  {"t_begin", node.t_begin},
                  {"t_end", node.t_end},
                  {"prefix", node.prefix}};
  }
  nlohmann::json tracks = nlohmann::json::array();
  for (const Track& tr : tree.tracks)
    tracks.push_back({{"id", tr.id},
                      {"start", {tr.start.x(), tr.start.y()}},
                      {"end", {tr.end.x(), tr.end.y()}}});
  return {{"tracks", tracks},
          {"per_track_duration", tree.per_track_duration},
          {"cooling_time", tree.cooling_time},
          {"nodes", nodes}};
}

}  // namespace

void save_tree_manifest(const TrackTree& tree, const std::filesystem::path& store) {
  std::ofstream out(store / "tree_manifest.json");
  if (!out)
    throw std::runtime_error("cannot write " + (store / "tree_manifest.json").string());
  out << tree_manifest_json(tree).dump(2) << "\n";
}

void train_tree(TrackTree& tree, const SequentialProblem& problem,
                const TrainingConfig& training, std::uint64_t seed,
                const std::filesystem::path& store, bool resume) {
  std::filesystem::create_directories(store);

  for (const std::string& key : tree.keys_by_depth()) {
    TreeNode& node = tree.nodes.at(key);
    const auto node_dir = store / key;
    const auto model_file = node_dir / "model.pbfm";

    if (resume && std::filesystem::exists(model_file)) {
      node.model = std::make_shared<PinnSurrogate>(load_pinn(model_file));
      std::fprintf(stderr, "tree node %s: loaded from store\n", key.c_str());
      save_tree_manifest(tree, store);
      continue;
    }

    const TemperatureSurrogate* predecessor = nullptr;
    if (!node.parent_key().empty()) {
      const TreeNode& parent = tree.nodes.at(node.parent_key());
      if (!parent.model)
        throw std::runtime_error("tree node " + key + ": parent " + node.parent_key() +
                                 " has no trained model");
      predecessor = parent.model.get();
    }

    PinnProblem sub;
    sub.box = problem.domain;
    sub.box.t_begin = node.t_begin;
    sub.box.t_end = node.t_end;
    sub.scenario = make_scenario(tree.tracks, node.prefix, problem.laser.scan_speed);
    sub.material = problem.material;
    sub.laser = problem.laser;
    sub.bc = problem.bc;
    sub.initial_temperature = problem.initial_temperature;
    sub.predecessor = predecessor;

    std::vector<TrainingRecord> trace;
    PinnSurrogate trained =
        train_pinn(sub, training, derive_seed(seed, "node-" + key), &trace);
    if (trained.meta.degraded)
      std::fprintf(stderr, "warning: tree node %s finished degraded; continuing\n", key.c_str());

    std::filesystem::create_directories(node_dir);
    save_pinn(trained, model_file);
    save_training_trace(trace, node_dir / "training_trace.csv");
    node.model = std::make_shared<PinnSurrogate>(std::move(trained));
    save_tree_manifest(tree, store);
    std::fprintf(stderr, "tree node %s: trained (%d iterations, %.1fs)\n", key.c_str(),
                 node.model->meta.iterations, node.model->meta.wall_seconds);
  }
}

TrackTree load_tree(const std::filesystem::path& store) {
  std::ifstream in(store / "tree_manifest.json");
  if (!in)
    throw std::runtime_error("cannot open " + (store / "tree_manifest.json").string());
  nlohmann::json manifest = nlohmann::json::parse(in);

  TrackTree tree;
  for (const auto& t : manifest.at("tracks")) {
    Track tr;
    tr.id = t.at("id").get<int>();
    tr.start = {t.at("start").at(0).get<double>(), t.at("start").at(1).get<double>()};
    tr.end = {t.at("end").at(0).get<double>(), t.at("end").at(1).get<double>()};
    tree.tracks.push_back(tr);
  }
  tree.per_track_duration = manifest.at("per_track_duration").get<double>();
  tree.cooling_time = manifest.at("cooling_time").get<double>();
  for (const auto& [key, meta] : manifest.at("nodes").items()) {
    TreeNode node;
    node.prefix = meta.at("prefix").get<std::vector<int>>();
    node.cooling = meta.at("cooling").get<bool>();
    node.t_begin = meta.at("t_begin").get<double>();
    node.t_end = meta.at("t_end").get<double>();
    const auto model_file = store / key / "model.pbfm";
    if (std::filesystem::exists(model_file))
      node.model = std::make_shared<PinnSurrogate>(load_pinn(model_file));
    tree.nodes.emplace(key, std::move(node));
  }
  return tree;
}

ComposedSurrogate::ComposedSurrogate(std::vector<std::shared_ptr<const PinnSurrogate>> nodes,
                                     std::vector<double> boundaries, std::string scenario_name)
    : nodes_(std::move(nodes)), boundaries_(std::move(boundaries)), name_(std::move(scenario_name)) {
  if (nodes_.empty() || boundaries_.size() != nodes_.size() + 1)
    throw std::invalid_argument("composed surrogate: inconsistent intervals");
}

std::size_t ComposedSurrogate::dispatch(double t) const {
  if (t < boundaries_.front() || t > boundaries_.back())
    throw std::out_of_range("composed surrogate: query time outside scenario");
  // half-open intervals, last closed on the right
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
    if (t < boundaries_[i + 1]) return i;
  return nodes_.size() - 1;
}

double ComposedSurrogate::temperature(double t, double x, double y, double z) const {
  return nodes_[dispatch(t)]->temperature(t, x, y, z);
}

ComposedSurrogate compose(const TrackTree& tree, const std::vector<int>& order,
                          bool include_cooling) {
  std::set<int> have;
  for (const Track& tr : tree.tracks) have.insert(tr.id);
  std::set<int> want(order.begin(), order.end());
  if (want != have || order.size() != tree.tracks.size())
    throw std::invalid_argument("compose: order must be a permutation of all track ids");

  std::vector<std::shared_ptr<const PinnSurrogate>> nodes;
  std::vector<double> boundaries{0.0};
  TreeNode probe;
  for (std::size_t depth = 1; depth <= order.size(); ++depth) {
    probe.prefix = std::vector<int>(order.begin(), order.begin() + depth);
    probe.cooling = false;
    auto it = tree.nodes.find(probe.key());
    if (it == tree.nodes.end() || !it->second.model)
      throw std::runtime_error("compose: node " + probe.key() + " is not trained");
    nodes.push_back(it->second.model);
    boundaries.push_back(it->second.t_end);
  }
  if (include_cooling && tree.cooling_time > 0.0) {
    probe.prefix = order;
    probe.cooling = true;
    auto it = tree.nodes.find(probe.key());
    if (it == tree.nodes.end() || !it->second.model)
      throw std::runtime_error("compose: node " + probe.key() + " is not trained");
    nodes.push_back(it->second.model);
    boundaries.push_back(it->second.t_end);
  }

  std::ostringstream name;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) name << '-';
    name << order[i];
  }
  return ComposedSurrogate(std::move(nodes), std::move(boundaries), name.str());
}

std::vector<double> handoff_discontinuity(const ComposedSurrogate& composed,
                                          const SpaceTimeBox& domain, int probes,
                                          std::uint64_t seed) {
  std::vector<double> out;
  const auto& bounds = composed.interval_boundaries();
  for (std::size_t i = 0; i + 1 < composed.interval_count(); ++i) {
    const double t = bounds[i + 1];
    double worst = 0.0;
    Rng probe_rng(derive_seed(seed, "boundary-" + std::to_string(i)));
    for (int p = 0; p < probes; ++p) {
      const double x = probe_rng.uniform(domain.lo.x(), domain.hi.x());
      const double y = probe_rng.uniform(domain.lo.y(), domain.hi.y());
      const double z = probe_rng.uniform(domain.lo.z(), domain.hi.z());
      const double a = composed.node(i)->temperature(t, x, y, z);
      const double b = composed.node(i + 1)->temperature(t, x, y, z);
      worst = std::max(worst, std::abs(a - b));
    }
    out.push_back(worst);
  }
  return out;
}

}  // namespace pbf
