#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pbf/collocation.hpp"
#include "pbf/lbfgs.hpp"
#include "pbf/mlp.hpp"
#include "pbf/normalization.hpp"
#include "pbf/physics_loss.hpp"

namespace pbf {

struct TrainingConfig {
  int hidden_layers = 5;
  int hidden_width = 64;
  CollocationCounts collocation;
  double cluster_fraction = 0.5;
  double cluster_radius_factor = 2.0;  // times the laser radius
  LbfgsConfig lbfgs;
  int warmup_iterations = 0;
  double t_scale = 1700.0;
  int block_size = 256;

  void validate() const;
  std::vector<int> layer_sizes(int input_dim, int output_dim) const;
};

// Reciprocal-of-initial-loss weighting; groups whose initial loss is ~0 are
// clamped to 1.
struct LossWeights {
  double ic = 1.0, bc = 1.0, pde = 1.0;
};

struct LossBreakdown {
  double ic = 0.0, bc = 0.0, pde = 0.0;
  double weighted(const LossWeights& w) const { return w.ic * ic + w.bc * bc + w.pde * pde; }
};

LossWeights capture_weights(const LossBreakdown& initial_losses);

struct TrainingRecord {
  int iteration = 0;
  double loss_ic = 0.0, loss_bc = 0.0, loss_pde = 0.0, total = 0.0;
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  LossWeights lambda;
  LossBreakdown initial_losses;
  LossBreakdown final_losses;
  int iterations = 0;
  int evaluations = 0;
  std::string status = "untrained";
  bool degraded = false;
  double wall_seconds = 0.0;
};

// One training problem: a space-time box, the active scan (or none for a
// cooling interval), boundary conditions, and the initial-condition source
// (uniform ambient or a frozen predecessor surrogate at box.t_begin).
struct PinnProblem {
  SpaceTimeBox box;
  std::optional<Scenario> scenario;
  MaterialParams material;
  LaserParams laser;
  BoundarySpec bc;
  double initial_temperature = 300.0;
  const TemperatureSurrogate* predecessor = nullptr;

  // heat source at a physical (t,x,y,z) point; zero when no scenario is set
  // or t is past the scan
  double source(double t, double x, double y, double z) const;
};

class PinnSurrogate final : public TemperatureSurrogate {
 public:
  Mlp model;
  NormalizationSpec norm;
  SpaceTimeBox box;
  TrainingMeta meta;

  double temperature(double t, double x, double y, double z) const override;
  Eigen::VectorXd temperature_batch(const Eigen::MatrixXd& queries) const override;

  // network output mapped to Kelvin for an already-normalized input
  double temperature_normalized(const Eigen::Vector4d& unit_input) const;

  // exact derivatives in physical units (chain rule through the recorded
  // normalization)
  PointDerivatives derivatives(double t, double x, double y, double z) const;
};

// Physics losses over a frozen collocation set. Heat-source values and
// initial-condition targets are cached at construction, so objective
// evaluations depend only on the parameters.
class PinnObjective {
 public:
  PinnObjective(const PinnProblem& problem, const TrainingConfig& config,
                CollocationSet collocation, NormalizationSpec norm);

  LossBreakdown losses(const Mlp& model) const;
  double loss_and_gradient(const Mlp& model, const LossWeights& weights,
                           Eigen::VectorXd& grad_out, LossBreakdown* breakdown = nullptr) const;

  const CollocationSet& collocation() const { return colloc_; }
  const Eigen::VectorXd& initial_targets() const { return ic_targets_; }
  const NormalizationSpec& normalization() const { return norm_; }

 private:
  // one block of one loss group
  struct Task {
    enum class Group { Pde, Ic, Face } group = Group::Pde;
    int face = 0;  // valid for Group::Face
    Eigen::Index begin = 0, end = 0;
  };
  double run(const Mlp& model, const LossWeights& weights, Eigen::VectorXd* grad_out,
             LossBreakdown* breakdown) const;

  PinnProblem problem_;
  TrainingConfig config_;
  CollocationSet colloc_;
  NormalizationSpec norm_;
  Eigen::VectorXd qv_;          // heat source at interior points
  Eigen::VectorXd ic_targets_;  // Kelvin at initial points
  std::vector<Task> tasks_;
};

// Trains one PINN on the problem's interval by full-batch L-BFGS over the
// weighted loss. Line-search failure yields the best-so-far model flagged
// degraded. Fixed seed => identical model.
PinnSurrogate train_pinn(const PinnProblem& problem, const TrainingConfig& config,
                         std::uint64_t seed, std::vector<TrainingRecord>* trace = nullptr);

// Strong-form residual of a trained surrogate at one physical point.
double pde_residual(const PinnSurrogate& surrogate, const MaterialParams& material,
                    const Scenario* scenario, const LaserParams& laser,
                    const Eigen::Vector4d& point);

void save_training_trace(const std::vector<TrainingRecord>& trace,
                         const std::filesystem::path& file);

}  // namespace pbf
