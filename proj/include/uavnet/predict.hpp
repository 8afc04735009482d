#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uavnet/telemetry.hpp"

namespace uavnet::predict {

enum class ModelKind { TreeEnsemble, BoostedTrees, FeedforwardNet };

// "rf", "gb", "mlp"
std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view text);

struct FeatureRow {
  double x_m = 0.0;
  double y_m = 0.0;
  double alt_m = 0.0;

  bool operator==(const FeatureRow&) const = default;
};

inline constexpr std::size_t kFeatureCount = 3;

struct TrainingRow {
  FeatureRow features;
  double target = 0.0;
};

struct Hyperparams {
  // tree ensemble
  int n_trees = 200;
  int max_depth = 12;
  int max_features = 0;  // 0 = floor(sqrt(d))
  int min_samples_leaf = 1;
  // boosted trees
  int boost_rounds = 300;
  double learning_rate = 0.05;
  int boost_depth = 3;
  // feedforward net
  int hidden_units = 64;
  int epochs = 500;
  double step_size = 1e-3;
  int batch_size = 32;

  void check() const;
};

inline constexpr std::size_t kMinTrainingRows = 20;

class TrainedPredictor {
 public:
  TrainedPredictor();
  ~TrainedPredictor();
  TrainedPredictor(const TrainedPredictor&);
  TrainedPredictor& operator=(const TrainedPredictor&);
  TrainedPredictor(TrainedPredictor&&) noexcept;
  TrainedPredictor& operator=(TrainedPredictor&&) noexcept;

  bool fitted() const;
  ModelKind kind() const;
  Metric target_metric() const;
  std::uint64_t train_seed() const;
  const Hyperparams& hyperparams() const;
  std::size_t n_train() const;

  // Projection used to build the features, carried so a saved model can be
  // applied to new geographic data.
  const std::optional<ProjectionOrigin>& origin() const;
  void set_origin(std::optional<ProjectionOrigin> origin);

  // Throws std::logic_error when unfitted.
  double predict(const FeatureRow& row) const;
  std::vector<double> predict(std::span<const FeatureRow> rows) const;

  // Versioned JSON document; see docs/model-format.md.
  std::string to_json() const;
  static TrainedPredictor from_json(std::string_view text);
  void save(const std::string& path) const;
  static TrainedPredictor load(const std::string& path);

  struct State;
  explicit TrainedPredictor(std::unique_ptr<State> s);

 private:
  std::unique_ptr<State> state_;
};

// Throws std::invalid_argument with fewer than kMinTrainingRows rows or
// non-finite features/targets.
TrainedPredictor fit(std::span<const TrainingRow> rows, ModelKind kind,
                     const Hyperparams& hp = {}, std::uint64_t seed = 1,
                     Metric target = Metric::Rsrp);

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
};

// Throws std::invalid_argument on length mismatch or empty input.
ErrorMetrics metrics(std::span<const double> y, std::span<const double> y_hat);

enum class Protocol { Loao, RandomSplit };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

struct FoldResult {
  std::string label;
  std::optional<std::int64_t> altitude_bin;  // LOAO bin index
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> test_index;
  std::vector<double> predictions;  // aligned with test_index
  ErrorMetrics error;
};

struct EvalReport {
  Protocol protocol = Protocol::Loao;
  ModelKind kind = ModelKind::TreeEnsemble;
  Metric target = Metric::Rsrp;
  std::vector<FoldResult> folds;
  // Over the concatenation of all held-out predictions.
  ErrorMetrics pooled;
  std::size_t n_test = 0;
};

struct LoaoOptions {
  double bin_width_m = 10.0;
  // Bins to hold out (floor(alt / width)); empty = every bin.
  std::vector<std::int64_t> holdout_bins;
};

// Throws std::invalid_argument with fewer than two non-empty bins.
EvalReport eval_loao(std::span<const TrainingRow> rows, ModelKind kind,
                     const LoaoOptions& opts = {}, std::uint64_t seed = 1,
                     const Hyperparams& hp = {}, Metric target = Metric::Rsrp);

// Lowest and highest non-empty bins.
std::vector<std::int64_t> edge_bins(std::span<const TrainingRow> rows, double bin_width_m);

// Seeded shuffle; round(test_fraction * n) rows for testing.
EvalReport eval_split(std::span<const TrainingRow> rows, ModelKind kind,
                      double test_fraction = 0.2, std::uint64_t seed = 1,
                      const Hyperparams& hp = {}, Metric target = Metric::Rsrp);

// (train, test) indices of the seeded split, in shuffled order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, std::uint64_t seed);

struct DatasetRows {
  std::vector<TrainingRow> rows;
  std::vector<std::size_t> sample_index;
  ProjectionOrigin origin;
};

// Samples with a position and a value for `metric`; x/y are local meters
// around `origin` (dataset centroid when absent), alt_m is ASL.
DatasetRows rows_from_dataset(const FlightDataset& ds, Metric metric,
                              std::optional<ProjectionOrigin> origin = std::nullopt);

}  // namespace uavnet::predict
