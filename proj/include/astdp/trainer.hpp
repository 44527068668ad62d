#pragma once

#include "astdp/model.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>

namespace astdp {

struct TrainConfig {
  double learningRate = 2e-4;
  double weightDecay = 5e-4;
  double adamBeta1 = 0.9;
  double adamBeta2 = 0.999;
  double adamEps = 1e-8;
  int maxEpochs = 50;
  int earlyStopPatience = 15;
  double plateauFactor = 0.5;
  int plateauPatience = 10;
  double gradClipNorm = 1.0;
  /// Training nodes per gradient step; 0 uses every training node at once.
  Index batchNodes = 0;
  /// Graphs above this size are processed as 1-hop neighbourhoods of each batch.
  Index fullGraphLimit = 2000;
  std::uint64_t seed = 0;
  bool plasticity = true;

  void validate() const;
};

/// Decoupled-weight-decay Adam over named parameter matrices.
struct AdamState {
  std::map<std::string, Matrix> firstMoment;
  std::map<std::string, Matrix> secondMoment;
  long step = 0;
};

void adamwStep(ModelParams& params, const std::map<std::string, Matrix>& grads, AdamState& state,
               const TrainConfig& config, double learningRate);

/// Scales every gradient so the global L2 norm is at most `maxNorm`;
/// returns the norm before clipping.
double clipGradNorm(std::map<std::string, Matrix>& grads, double maxNorm);

/// Learning-rate decay after `patience` epochs without improvement.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, int patience) : lr_(lr), factor_(factor), patience_(patience) {}
  double step(double metric);
  double lr() const { return lr_; }
  double best() const { return best_; }
  int bad() const { return bad_; }
  void restore(double lr, double best, int bad) { lr_ = lr, best_ = best, bad_ = bad; }

 private:
  double lr_;
  double factor_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  /// True when this epoch improved on the best value so far.
  bool update(double metric);
  bool shouldStop() const { return bad_ >= patience_; }
  double best() const { return best_; }
  int bad() const { return bad_; }
  void restore(double best, int bad) { best_ = best, bad_ = bad; }

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double trainLoss = 0.0;
  double valLoss = 0.0;
  double bce = 0.0;
  double mem = 0.0;
  double iso = 0.0;
  double reg = 0.0;
  double lr = 0.0;
  double spikeDensity = 0.0;
  double valMonitored = 0.0;
};

struct TrainerState {
  AdamState adam;
  int epoch = 0;
  double bestValLoss = std::numeric_limits<double>::infinity();
  double lr = 0.0;
  double schedulerBest = std::numeric_limits<double>::infinity();
  int schedulerBad = 0;
  int stopBad = 0;
  std::mt19937_64 rng;
};

struct BatchResult {
  LossBreakdown loss;
  double spikeDensity = 0.0;
  double gradNorm = 0.0;
};

/// Loss and parameter gradients of one batch with the model's surrogate.
std::map<std::string, Matrix> lossGradients(const Model& model, const LabeledDataset& data,
                                            const std::vector<Index>& rows, LossBreakdown* loss = nullptr,
                                            ForwardResult* forward = nullptr);

/// Gradient step, then spike-timing update, then prototype update.
BatchResult trainBatch(Model& model, TrainerState& state, const LabeledDataset& data,
                       const std::vector<Index>& rows, const TrainConfig& config);

EpochMetrics trainEpoch(Model& model, TrainerState& state, const LabeledDataset& data,
                        const TrainConfig& config);

/// Loss over one split without any update.
LossBreakdown evaluateLoss(const Model& model, const LabeledDataset& data, Split split);

/// Quantity watched by early stopping and the scheduler: validation loss
/// without the weight-norm term, which only tracks plastic state.
double monitoredLoss(const LossBreakdown& loss, const LossCoefficients& coeffs);

struct FitResult {
  std::vector<EpochMetrics> history;
  TrainerState state;
  int bestEpoch = 0;
  double bestValLoss = 0.0;
};

/// Trains until early stopping or `maxEpochs` and restores the best model.
FitResult fitWithEarlyStopping(Model& model, const LabeledDataset& data, const TrainConfig& config);

TrainerState initialState(const TrainConfig& config);

}  // namespace astdp
