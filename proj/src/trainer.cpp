#include "astdp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace astdp {

namespace {

/// Graph window a batch is evaluated on, with batch rows renumbered into it.
struct Window {
  const Matrix* x = nullptr;
  const SparseGraph* graph = nullptr;
  const std::vector<int>* labels = nullptr;
  std::vector<Index> rows;
  Matrix ownX;
  SparseGraph ownGraph;
  std::vector<int> ownLabels;
};

Window makeWindow(const LabeledDataset& data, const std::vector<Index>& rows, Index fullGraphLimit) {
  Window w;
  if (data.graph.numNodes() <= fullGraphLimit) {
    w.x = &data.features.values;
    w.graph = &data.graph;
    w.labels = &data.labels;
    w.rows = rows;
    return w;
  }
  std::vector<char> keep(static_cast<std::size_t>(data.graph.numNodes()), 0);
  for (Index r : rows) {
    keep[static_cast<std::size_t>(r)] = 1;
    for (Index j : data.graph.neighbors(r)) keep[static_cast<std::size_t>(j)] = 1;
  }
  std::vector<Index> nodes, position(keep.size(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) {
      position[i] = static_cast<Index>(nodes.size());
      nodes.push_back(static_cast<Index>(i));
    }
  }
  w.ownGraph = data.graph.induced(nodes);
  w.ownX = Matrix(static_cast<Index>(nodes.size()), data.features.values.cols());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    w.ownX.row(static_cast<Index>(k)) = data.features.values.row(nodes[k]);
    w.ownLabels.push_back(data.labels[static_cast<std::size_t>(nodes[k])]);
  }
  for (Index r : rows) w.rows.push_back(position[static_cast<std::size_t>(r)]);
  w.x = &w.ownX;
  w.graph = &w.ownGraph;
  w.labels = &w.ownLabels;
  return w;
}

Vector meanRows(const Matrix& m, const std::vector<Index>& rows) {
  Vector out = Vector::Zero(m.cols());
  for (Index r : rows) out += m.row(r).transpose();
  return out / static_cast<double>(rows.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (maxEpochs < 1) throw Error("trainer", "maxEpochs must be at least 1");
  if (learningRate < 0 || weightDecay < 0) throw Error("trainer", "rates must be non-negative");
  if (earlyStopPatience < 1 || plateauPatience < 1) throw Error("trainer", "patience must be at least 1");
  if (!(plateauFactor > 0 && plateauFactor <= 1)) throw Error("trainer", "plateauFactor must lie in (0,1]");
  if (!(gradClipNorm > 0)) throw Error("trainer", "gradClipNorm must be positive");
  if (batchNodes < 0) throw Error("trainer", "batchNodes must be non-negative");
}

double PlateauScheduler::step(double metric) {
  if (metric < best_) {
    best_ = metric;
    bad_ = 0;
  } else if (++bad_ > patience_) {
    lr_ *= factor_;
    bad_ = 0;
  }
  return lr_;
}

bool EarlyStopping::update(double metric) {
  if (metric < best_) {
    best_ = metric;
    bad_ = 0;
    return true;
  }
  ++bad_;
  return false;
}

double clipGradNorm(std::map<std::string, Matrix>& grads, double maxNorm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > maxNorm) {
    const double s = maxNorm / (norm + 1e-6);
    for (auto& [name, g] : grads) g *= s;
  }
  return norm;
}

void adamwStep(ModelParams& params, const std::map<std::string, Matrix>& grads, AdamState& state,
               const TrainConfig& config, double learningRate) {
  ++state.step;
  const double b1 = config.adamBeta1, b2 = config.adamBeta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  forEachParam(
      [&](const std::string& name, Matrix& p) {
        const auto it = grads.find(name);
        if (it == grads.end()) return;
        const Matrix& g = it->second;
        Matrix& m = state.firstMoment[name];
        Matrix& v = state.secondMoment[name];
        if (m.size() == 0) m = Matrix::Zero(p.rows(), p.cols());
        if (v.size() == 0) v = Matrix::Zero(p.rows(), p.cols());
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        p *= 1.0 - learningRate * config.weightDecay;
        p.array() -= learningRate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.adamEps);
      },
      params);
}

std::map<std::string, Matrix> lossGradients(const Model& model, const LabeledDataset& data,
                                            const std::vector<Index>& rows, LossBreakdown* loss,
                                            ForwardResult* forward) {
  const Window w = makeWindow(data, rows, std::numeric_limits<Index>::max());
  ad::Tape tape;
  ModelVars vars = bindParams(model.params, &tape);
  ForwardVars fv = forwardVars(model, vars, *w.x, *w.graph, model.config.surrogate);
  LossBreakdown breakdown;
  const ad::Var total =
      totalLossVar(*w.labels, w.rows, fv.fused, fv.result.scores.mem, fv.result.scores.iso,
                   regularization(model.stdpWeights, model.memory.prototypes), model.config.loss, &breakdown);
  if (!std::isfinite(breakdown.total)) throw Error("trainer", "non-finite loss");
  tape.backward(total);
  std::map<std::string, Matrix> grads;
  forEachParam([&](const std::string& name, ad::Var& v) { grads[name] = v.grad(); }, vars);
  if (loss) *loss = breakdown;
  if (forward) *forward = std::move(fv.result);
  return grads;
}

BatchResult trainBatch(Model& model, TrainerState& state, const LabeledDataset& data,
                       const std::vector<Index>& rows, const TrainConfig& config) {
  const Window w = makeWindow(data, rows, config.fullGraphLimit);
  ad::Tape tape;
  ModelVars vars = bindParams(model.params, &tape);
  ForwardVars fv = forwardVars(model, vars, *w.x, *w.graph, model.config.surrogate);
  BatchResult out;
  const ad::Var total =
      totalLossVar(*w.labels, w.rows, fv.fused, fv.result.scores.mem, fv.result.scores.iso,
                   regularization(model.stdpWeights, model.memory.prototypes), model.config.loss, &out.loss);
  if (!std::isfinite(out.loss.total)) {
    throw Error("trainer", "non-finite loss at epoch " + std::to_string(state.epoch + 1) +
                               " (bce=" + std::to_string(out.loss.bce) + ")");
  }
  tape.backward(total);
  std::map<std::string, Matrix> grads;
  forEachParam([&](const std::string& name, ad::Var& v) { grads[name] = v.grad(); }, vars);
  out.gradNorm = clipGradNorm(grads, config.gradClipNorm);
  adamwStep(model.params, grads, state.adam, config, state.lr);
  out.spikeDensity = fv.result.spikeDensity;

  if (!config.plasticity) return out;
  const ForwardResult& r = fv.result;
  if (model.config.toggles.stdp) {
    const Vector meanTimes = meanRows(r.encoding.summary.firstSpike, w.rows);
    applyUpdate(model.stdpWeights, stdpDelta(meanTimes, model.config.stdp), model.config.stdp);
  }
  if (model.config.toggles.edhmm) {
    Matrix z(static_cast<Index>(w.rows.size()), r.memoryInput.cols());
    std::vector<Index> assignment;
    for (std::size_t k = 0; k < w.rows.size(); ++k) {
      z.row(static_cast<Index>(k)) = r.memoryInput.row(w.rows[k]);
      assignment.push_back(r.assignment[static_cast<std::size_t>(w.rows[k])]);
    }
    if (!model.memory.seeded) seedPrototypes(model.memory, z);
    updateMemory(model.memory, z, assignment);
  }
  return out;
}

EpochMetrics trainEpoch(Model& model, TrainerState& state, const LabeledDataset& data,
                        const TrainConfig& config) {
  std::vector<Index> train = data.nodesIn(Split::Train);
  if (train.empty()) throw Error("trainer", "empty training split");
  std::shuffle(train.begin(), train.end(), state.rng);
  const std::size_t batch = config.batchNodes > 0 ? static_cast<std::size_t>(config.batchNodes) : train.size();

  EpochMetrics m;
  m.epoch = state.epoch + 1;
  m.lr = state.lr;
  double weight = 0.0;
  for (std::size_t start = 0; start < train.size(); start += batch) {
    const std::vector<Index> rows(train.begin() + static_cast<std::ptrdiff_t>(start),
                                  train.begin() + static_cast<std::ptrdiff_t>(std::min(train.size(), start + batch)));
    const BatchResult b = trainBatch(model, state, data, rows, config);
    const double wgt = static_cast<double>(rows.size());
    m.trainLoss += wgt * b.loss.total;
    m.bce += wgt * b.loss.bce;
    m.mem += wgt * b.loss.mem;
    m.iso += wgt * b.loss.iso;
    m.reg += wgt * b.loss.reg;
    m.spikeDensity += wgt * b.spikeDensity;
    weight += wgt;
  }
  m.trainLoss /= weight;
  m.bce /= weight;
  m.mem /= weight;
  m.iso /= weight;
  m.reg /= weight;
  m.spikeDensity /= weight;
  const LossBreakdown val = evaluateLoss(model, data, Split::Val);
  m.valLoss = val.total;
  m.valMonitored = monitoredLoss(val, model.config.loss);
  ++state.epoch;
  return m;
}

LossBreakdown evaluateLoss(const Model& model, const LabeledDataset& data, Split split) {
  const std::vector<Index> rows = data.nodesIn(split);
  if (rows.empty()) throw Error("trainer", "empty split");
  const ForwardResult r = forwardPass(model, data.features.values, data.graph);
  return totalLoss(data.labels, rows, r.scores.fused, r.scores.mem, r.scores.iso, model.stdpWeights,
                   model.memory.prototypes, model.config.loss);
}

double monitoredLoss(const LossBreakdown& loss, const LossCoefficients& coeffs) {
  return loss.total - coeffs.reg * loss.reg;
}

TrainerState initialState(const TrainConfig& config) {
  TrainerState s;
  s.lr = config.learningRate;
  s.rng.seed(config.seed);
  return s;
}

FitResult fitWithEarlyStopping(Model& model, const LabeledDataset& data, const TrainConfig& config) {
  config.validate();
  if (data.nodesIn(Split::Val).empty()) throw Error("trainer", "empty validation split");
  FitResult out;
  out.state = initialState(config);
  TrainerState& state = out.state;
  if (model.config.toggles.edhmm && !model.memory.seeded) seedMemory(model, data.features.values, data.nodesIn(Split::Train));

  PlateauScheduler scheduler(config.learningRate, config.plateauFactor, config.plateauPatience);
  EarlyStopping stopper(config.earlyStopPatience);
  Model best = model;
  for (int epoch = 0; epoch < config.maxEpochs; ++epoch) {
    EpochMetrics m = trainEpoch(model, state, data, config);
    const double monitored = m.valMonitored;
    out.history.push_back(m);
    state.lr = scheduler.step(monitored);
    state.schedulerBest = scheduler.best();
    state.schedulerBad = scheduler.bad();
    if (stopper.update(monitored)) {
      best = model;
      out.bestEpoch = m.epoch;
    }
    state.bestValLoss = stopper.best();
    state.stopBad = stopper.bad();
    if (stopper.shouldStop()) break;
  }
  model = std::move(best);
  out.bestValLoss = stopper.best();
  return out;
}

}  // namespace astdp
