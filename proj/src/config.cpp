#include "pbf/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pbf {

namespace {

// strict JSON object reader: every key must be consumed
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument(path_ + ": expected a JSON object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!consumed_.count(key))
        throw std::invalid_argument("unknown config key: " + join(key));
  }

  bool has(const std::string& key) {
    consumed_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(join(key) + ": wrong type");
    }
  }

  const nlohmann::json& raw(const std::string& key) {
    has(key);
    return j_.at(key);
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

Eigen::Vector3d vec3(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument(path + ": expected an array of 3 numbers");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

Eigen::Vector2d vec2(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument(path + ": expected an array of 2 numbers");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

void require_positive(double v, const std::string& key) {
  if (!(v > 0.0)) throw std::invalid_argument(key + ": must be > 0");
}

std::vector<int> parse_order(const std::string& text, const std::string& key) {
  std::vector<int> order;
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, '-')) {
    try {
      order.push_back(std::stoi(part));
    } catch (...) {
      throw std::invalid_argument(key + ": malformed scenario '" + text + "'");
    }
  }
  if (order.empty()) throw std::invalid_argument(key + ": empty scenario");
  return order;
}

std::vector<Track> default_tracks() {
  // three parallel 1 mm tracks along x, hatch spacing 0.5 mm, centered
  return {{1, {-0.5e-3, -0.5e-3}, {0.5e-3, -0.5e-3}},
          {2, {-0.5e-3, 0.0}, {0.5e-3, 0.0}},
          {3, {-0.5e-3, 0.5e-3}, {0.5e-3, 0.5e-3}}};
}

FaceCondition parse_face(const nlohmann::json& j, const std::string& path,
                         const FaceCondition& fallback) {
  Reader r(j, path);
  const std::string kind = r.get<std::string>("kind", "");
  if (kind == "dirichlet") {
    FaceCondition f = FaceCondition::dirichlet(r.get<double>("value", 300.0));
    return f;
  }
  if (kind == "insulated") return FaceCondition::insulated();
  if (kind == "convective") {
    FaceCondition f = FaceCondition::convective(r.get<double>("h", fallback.h),
                                                r.get<double>("t_inf", fallback.t_inf));
    require_positive(f.h, path + ".h");
    return f;
  }
  throw std::invalid_argument(path + ".kind: expected dirichlet|insulated|convective");
}

const char* face_key(Face f) {
  switch (f) {
    case Face::XMin: return "x_min";
    case Face::XMax: return "x_max";
    case Face::YMin: return "y_min";
    case Face::YMax: return "y_max";
    case Face::ZMin: return "z_min";
    case Face::ZMax: return "z_max";
  }
  return "";
}

}  // namespace

SpaceTimeBox GeometryConfig::domain_box(double t_begin, double t_end) const {
  SpaceTimeBox box;
  box.t_begin = t_begin;
  box.t_end = t_end;
  box.lo = origin;
  box.hi = origin + size;
  return box;
}

Grid SolverConfig::make_grid(const GeometryConfig& geometry) const {
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.dx = geometry.size.x() / (nx - 1);
  g.dy = geometry.size.y() / (ny - 1);
  g.dz = geometry.size.z() / (nz - 1);
  g.origin = geometry.origin;
  g.validate();
  return g;
}

double RunConfig::per_track_duration() const {
  return common_track_length(geometry.tracks) / laser.scan_speed;
}

double RunConfig::scan_duration(const std::vector<int>& order) const {
  return per_track_duration() * static_cast<double>(order.size());
}

double RunConfig::cooling_duration() const {
  if (!sequential.cooling) return 0.0;
  if (sequential.cooling_time >= 0.0) return sequential.cooling_time;
  return per_track_duration() * static_cast<double>(geometry.tracks.size());
}

Scenario RunConfig::scenario(const std::vector<int>& order) const {
  return make_scenario(geometry.tracks, order, laser.scan_speed);
}

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  Reader root(j, "");

  cfg.seed = root.get<std::uint64_t>("seed", 42);
  cfg.threads = root.get<int>("threads", 0);
  if (cfg.threads < 0) throw std::invalid_argument("threads: must be >= 0");

  if (root.has("material")) {
    Reader r(root.raw("material"), "material");
    cfg.material.density = r.get<double>("density", cfg.material.density);
    require_positive(cfg.material.density, "material.density");
    if (r.has("conductivity")) {
      Reader c(r.raw("conductivity"), "material.conductivity");
      ConductivityLaw& law = cfg.material.conductivity_law;
      law.c0 = c.get<double>("c0", law.c0);
      law.c1 = c.get<double>("c1", law.c1);
      law.tanh_amp = c.get<double>("tanh_amp", law.tanh_amp);
      law.tanh_rate = c.get<double>("tanh_rate", law.tanh_rate);
      law.tanh_center = c.get<double>("tanh_center", law.tanh_center);
    }
    if (r.has("capacity")) {
      Reader c(r.raw("capacity"), "material.capacity");
      CapacityLaw& law = cfg.material.capacity_law;
      law.c0 = c.get<double>("c0", law.c0);
      law.c1 = c.get<double>("c1", law.c1);
      law.g1_amp = c.get<double>("g1_amp", law.g1_amp);
      law.g1_rate = c.get<double>("g1_rate", law.g1_rate);
      law.g1_center = c.get<double>("g1_center", law.g1_center);
      law.g2_amp = c.get<double>("g2_amp", law.g2_amp);
      law.g2_rate = c.get<double>("g2_rate", law.g2_rate);
      law.g2_center = c.get<double>("g2_center", law.g2_center);
    }
  }

  if (root.has("laser")) {
    Reader r(root.raw("laser"), "laser");
    cfg.laser.effective_power = r.get<double>("effective_power", cfg.laser.effective_power);
    cfg.laser.radius = r.get<double>("radius", cfg.laser.radius);
    const bool penetration_given = r.has("penetration_depth");
    if (penetration_given)
      cfg.laser.penetration_depth = r.get<double>("penetration_depth", 0.0);
    else
      cfg.laser.penetration_depth = cfg.laser.radius;  // hemispherical default
    cfg.laser.scan_speed = r.get<double>("scan_speed", cfg.laser.scan_speed);
    require_positive(cfg.laser.effective_power, "laser.effective_power");
    require_positive(cfg.laser.radius, "laser.radius");
    require_positive(cfg.laser.penetration_depth, "laser.penetration_depth");
    require_positive(cfg.laser.scan_speed, "laser.scan_speed");
  }

  if (root.has("geometry")) {
    Reader r(root.raw("geometry"), "geometry");
    if (r.has("size")) cfg.geometry.size = vec3(r.raw("size"), "geometry.size");
    if (r.has("origin")) cfg.geometry.origin = vec3(r.raw("origin"), "geometry.origin");
    for (int a = 0; a < 3; ++a) require_positive(cfg.geometry.size[a], "geometry.size");
    if (r.has("tracks")) {
      const nlohmann::json& tracks = r.raw("tracks");
      if (!tracks.is_array() || tracks.empty())
        throw std::invalid_argument("geometry.tracks: expected a non-empty array");
      cfg.geometry.tracks.clear();
      for (std::size_t i = 0; i < tracks.size(); ++i) {
        const std::string path = "geometry.tracks[" + std::to_string(i) + "]";
        Reader t(tracks.at(i), path);
        Track track;
        track.id = t.get<int>("id", static_cast<int>(i) + 1);
        track.start = vec2(t.raw("start"), path + ".start");
        track.end = vec2(t.raw("end"), path + ".end");
        track.validate();
        cfg.geometry.tracks.push_back(track);
      }
    }
  }
  if (cfg.geometry.tracks.empty()) cfg.geometry.tracks = default_tracks();
  common_track_length(cfg.geometry.tracks);  // equal-length invariant

  // scenario selection: "all", "1-2-3", or a list of such strings
  {
    std::vector<std::string> names;
    if (root.has("scenario")) {
      const nlohmann::json& sel = root.raw("scenario");
      if (sel.is_string())
        names.push_back(sel.get<std::string>());
      else if (sel.is_array())
        for (const auto& s : sel) names.push_back(s.get<std::string>());
      else
        throw std::invalid_argument("scenario: expected a string or array of strings");
    } else {
      std::vector<int> order;
      for (const Track& t : cfg.geometry.tracks) order.push_back(t.id);
      std::sort(order.begin(), order.end());
      cfg.scenarios.push_back(order);
    }
    for (const std::string& name : names) {
      if (name == "all") {
        for (const Scenario& s :
             enumerate_scenarios(cfg.geometry.tracks, cfg.laser.scan_speed))
          cfg.scenarios.push_back(s.track_ids());
      } else {
        cfg.scenarios.push_back(parse_order(name, "scenario"));
      }
    }
    for (const std::vector<int>& order : cfg.scenarios)
      cfg.scenario(order);  // validates ids and equal lengths
  }

  if (root.has("solver")) {
    Reader r(root.raw("solver"), "solver");
    cfg.solver.nx = r.get<int>("nx", cfg.solver.nx);
    cfg.solver.ny = r.get<int>("ny", cfg.solver.ny);
    cfg.solver.nz = r.get<int>("nz", cfg.solver.nz);
    cfg.solver.safety = r.get<double>("safety", cfg.solver.safety);
    if (cfg.solver.nx < 3 || cfg.solver.ny < 3 || cfg.solver.nz < 3)
      throw std::invalid_argument("solver: node counts must be >= 3");
    if (!(cfg.solver.safety > 0.0 && cfg.solver.safety <= 1.0))
      throw std::invalid_argument("solver.safety: must be in (0, 1]");
    cfg.solver.snapshot_times =
        r.get<std::vector<double>>("snapshot_times", cfg.solver.snapshot_times);
  }

  if (root.has("boundaries")) {
    Reader r(root.raw("boundaries"), "boundaries");
    for (Face f : kAllFaces) {
      const char* key = face_key(f);
      if (r.has(key)) cfg.bc[f] = parse_face(r.raw(key), std::string("boundaries.") + key,
                                             cfg.bc[f]);
    }
  }

  if (root.has("training")) {
    Reader r(root.raw("training"), "training");
    TrainingConfig& t = cfg.training;
    t.hidden_layers = r.get<int>("hidden_layers", t.hidden_layers);
    t.hidden_width = r.get<int>("hidden_width", t.hidden_width);
    t.collocation.n_pde = r.get<int>("n_pde", t.collocation.n_pde);
    t.collocation.n_ic = r.get<int>("n_ic", t.collocation.n_ic);
    t.collocation.n_bc_per_face = r.get<int>("n_bc_per_face", t.collocation.n_bc_per_face);
    t.cluster_fraction = r.get<double>("cluster_fraction", t.cluster_fraction);
    t.cluster_radius_factor = r.get<double>("cluster_radius_factor", t.cluster_radius_factor);
    t.t_scale = r.get<double>("t_scale", t.t_scale);
    t.warmup_iterations = r.get<int>("warmup_iterations", t.warmup_iterations);
    t.block_size = r.get<int>("block_size", t.block_size);
    if (r.has("lbfgs")) {
      Reader l(r.raw("lbfgs"), "training.lbfgs");
      LbfgsConfig& lb = t.lbfgs;
      lb.history_size = l.get<int>("history_size", lb.history_size);
      lb.max_iterations = l.get<int>("max_iterations", lb.max_iterations);
      lb.gradient_tolerance = l.get<double>("gradient_tolerance", lb.gradient_tolerance);
      lb.wolfe_c1 = l.get<double>("wolfe_c1", lb.wolfe_c1);
      lb.wolfe_c2 = l.get<double>("wolfe_c2", lb.wolfe_c2);
      lb.max_line_search_steps = l.get<int>("max_line_search_steps", lb.max_line_search_steps);
    }
    t.validate();
  }

  if (root.has("operator")) {
    Reader r(root.raw("operator"), "operator");
    cfg.op.latent_dim = r.get<int>("latent_dim", cfg.op.latent_dim);
    cfg.op.path_samples = r.get<int>("path_samples", cfg.op.path_samples);
    cfg.op.branch_hidden_layers = r.get<int>("branch_hidden_layers", cfg.op.branch_hidden_layers);
    cfg.op.branch_hidden_width = r.get<int>("branch_hidden_width", cfg.op.branch_hidden_width);
    if (cfg.op.latent_dim < 1) throw std::invalid_argument("operator.latent_dim: must be >= 1");
    if (cfg.op.path_samples < 2)
      throw std::invalid_argument("operator.path_samples: must be >= 2");
  }

  if (root.has("sequential")) {
    Reader r(root.raw("sequential"), "sequential");
    cfg.sequential.cooling = r.get<bool>("cooling", cfg.sequential.cooling);
    cfg.sequential.cooling_time = r.get<double>("cooling_time", cfg.sequential.cooling_time);
  }

  if (root.has("simulation")) {
    Reader r(root.raw("simulation"), "simulation");
    cfg.simulation.initial_temperature =
        r.get<double>("initial_temperature", cfg.simulation.initial_temperature);
    cfg.simulation.end_time = r.get<double>("end_time", cfg.simulation.end_time);
    require_positive(cfg.simulation.initial_temperature, "simulation.initial_temperature");
  }

  if (root.has("evaluation")) {
    Reader r(root.raw("evaluation"), "evaluation");
    cfg.evaluation.melt_threshold = r.get<double>("melt_threshold", cfg.evaluation.melt_threshold);
    require_positive(cfg.evaluation.melt_threshold, "evaluation.melt_threshold");
    if (r.has("history_probes")) {
      for (const auto& p : r.raw("history_probes"))
        cfg.evaluation.history_probes.push_back(vec3(p, "evaluation.history_probes[]"));
    }
    cfg.evaluation.history_times =
        r.get<std::vector<double>>("history_times", cfg.evaluation.history_times);
  }

  cfg.material.validate();
  cfg.laser.validate();
  return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("config file not found: " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::runtime_error("malformed JSON in " + file.string() + ": " + err.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json tracks = nlohmann::json::array();
  for (const Track& t : cfg.geometry.tracks)
    tracks.push_back({{"id", t.id},
                      {"start", {t.start.x(), t.start.y()}},
                      {"end", {t.end.x(), t.end.y()}}});
  std::vector<std::string> scenario_names;
  for (const std::vector<int>& order : cfg.scenarios) {
    std::ostringstream name;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i) name << '-';
      name << order[i];
    }
    scenario_names.push_back(name.str());
  }
  nlohmann::json faces;
  for (Face f : kAllFaces) {
    const FaceCondition& c = cfg.bc[f];
    nlohmann::json jf;
    switch (c.kind) {
      case FaceCondition::Kind::Dirichlet:
        jf = {{"kind", "dirichlet"}, {"value", c.value}};
        break;
      case FaceCondition::Kind::Insulated:
        jf = {{"kind", "insulated"}};
        break;
      case FaceCondition::Kind::Convective:
        jf = {{"kind", "convective"}, {"h", c.h}, {"t_inf", c.t_inf}};
        break;
    }
    faces[face_key(f)] = jf;
  }
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : cfg.evaluation.history_probes) probes.push_back({p.x(), p.y(), p.z()});

  const ConductivityLaw& k = cfg.material.conductivity_law;
  const CapacityLaw& c = cfg.material.capacity_law;
  return {
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"material",
       {{"density", cfg.material.density},
        {"conductivity",
         {{"c0", k.c0},
          {"c1", k.c1},
          {"tanh_amp", k.tanh_amp},
          {"tanh_rate", k.tanh_rate},
          {"tanh_center", k.tanh_center}}},
        {"capacity",
         {{"c0", c.c0},
          {"c1", c.c1},
          {"g1_amp", c.g1_amp},
          {"g1_rate", c.g1_rate},
          {"g1_center", c.g1_center},
          {"g2_amp", c.g2_amp},
          {"g2_rate", c.g2_rate},
          {"g2_center", c.g2_center}}}}},
      {"laser",
       {{"effective_power", cfg.laser.effective_power},
        {"radius", cfg.laser.radius},
        {"penetration_depth", cfg.laser.penetration_depth},
        {"scan_speed", cfg.laser.scan_speed}}},
      {"geometry",
       {{"size", {cfg.geometry.size.x(), cfg.geometry.size.y(), cfg.geometry.size.z()}},
        {"origin",
         {cfg.geometry.origin.x(), cfg.geometry.origin.y(), cfg.geometry.origin.z()}},
        {"tracks", tracks}}},
      {"scenario", scenario_names},
      {"solver",
       {{"nx", cfg.solver.nx},
        {"ny", cfg.solver.ny},
        {"nz", cfg.solver.nz},
        {"safety", cfg.solver.safety},
        {"snapshot_times", cfg.solver.snapshot_times}}},
      {"boundaries", faces},
      {"training",
       {{"hidden_layers", cfg.training.hidden_layers},
        {"hidden_width", cfg.training.hidden_width},
        {"n_pde", cfg.training.collocation.n_pde},
        {"n_ic", cfg.training.collocation.n_ic},
        {"n_bc_per_face", cfg.training.collocation.n_bc_per_face},
        {"cluster_fraction", cfg.training.cluster_fraction},
        {"cluster_radius_factor", cfg.training.cluster_radius_factor},
        {"t_scale", cfg.training.t_scale},
        {"warmup_iterations", cfg.training.warmup_iterations},
        {"block_size", cfg.training.block_size},
        {"lbfgs",
         {{"history_size", cfg.training.lbfgs.history_size},
          {"max_iterations", cfg.training.lbfgs.max_iterations},
          {"gradient_tolerance", cfg.training.lbfgs.gradient_tolerance},
          {"wolfe_c1", cfg.training.lbfgs.wolfe_c1},
          {"wolfe_c2", cfg.training.lbfgs.wolfe_c2},
          {"max_line_search_steps", cfg.training.lbfgs.max_line_search_steps}}}}},
      {"operator",
       {{"latent_dim", cfg.op.latent_dim},
        {"path_samples", cfg.op.path_samples},
        {"branch_hidden_layers", cfg.op.branch_hidden_layers},
        {"branch_hidden_width", cfg.op.branch_hidden_width}}},
      {"sequential",
       {{"cooling", cfg.sequential.cooling}, {"cooling_time", cfg.sequential.cooling_time}}},
      {"simulation",
       {{"initial_temperature", cfg.simulation.initial_temperature},
        {"end_time", cfg.simulation.end_time}}},
      {"evaluation",
       {{"melt_threshold", cfg.evaluation.melt_threshold},
        {"history_probes", probes},
        {"history_times", cfg.evaluation.history_times}}}};
}

std::string config_hash(const RunConfig& config) {
  const std::string dump = to_json(config).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& artifacts,
                    const std::filesystem::path& out_dir) {
  nlohmann::json manifest = {{"command", command},
                             {"config", to_json(config)},
                             {"config_hash", config_hash(config)},
                             {"artifacts", artifacts}};
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

}  // namespace pbf
