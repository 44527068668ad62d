#include "astdp/checkpoint.hpp"
#include "astdp/harness.hpp"
#include "astdp/io.hpp"
#include "astdp/metrics.hpp"
#include "astdp/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace astdp;

namespace {

/// Problems with flags, configs or inputs; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SyntheticSpec data;
  ModelConfig model;
  TrainConfig train;
};

Json toJson(const RunConfig& c) {
  return {{"schemaVersion", kConfigSchemaVersion},
          {"data", astdp::toJson(c.data)},
          {"model", astdp::toJson(c.model)},
          {"train", astdp::toJson(c.train)}};
}

void overlayFile(const fs::path& path, RunConfig& c) {
  const Json j = readJson(path);
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (key == "schemaVersion") {
      if (item.value() != kConfigSchemaVersion) throw UsageError("unsupported config schema version");
    } else if (key == "data") {
      overlay(item.value(), c.data);
    } else if (key == "model") {
      overlay(item.value(), c.model);
    } else if (key == "train") {
      overlay(item.value(), c.train);
    } else {
      throw UsageError("unknown config section '" + key + "'");
    }
  }
}

/// Flags bound to config fields; a flag only replaces its field when given,
/// and is applied after the config file so flags win.
class Overrides {
 public:
  template <typename T, typename Target>
  CLI::Option* add(CLI::App* app, const std::string& name, Target& target, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    apply_.push_back([opt, value, &target] {
      if (opt->count()) target = static_cast<Target>(*value);
    });
    return opt;
  }

  void apply() const {
    for (const auto& f : apply_) f();
  }

 private:
  std::vector<std::function<void()>> apply_;
};

struct Common {
  std::string config;
  std::string out;
  CLI::Option* seed = nullptr;
  std::uint64_t seedValue = 0;
};

void addCommon(CLI::App* app, Common& c, bool needsOut = true) {
  app->add_option("--config", c.config, "JSON config; flags override its values")->check(CLI::ExistingFile);
  c.seed = app->add_option("--seed", c.seedValue, "Random seed");
  auto* out = app->add_option("--out", c.out, "Output directory");
  if (needsOut) out->required();
}

void resolve(const Common& common, const Overrides& overrides, RunConfig& config) {
  if (!common.config.empty()) overlayFile(common.config, config);
  overrides.apply();
  if (common.seed->count()) {
    config.data.seed = common.seedValue;
    config.train.seed = common.seedValue;
  }
}

std::vector<fs::path> datasetFiles(const fs::path& manifest) {
  const Json j = readJson(manifest);
  const fs::path dir = manifest.parent_path();
  return {manifest, dir / j.at("edges").get<std::string>(), dir / j.at("features").get<std::string>(),
          dir / j.at("labels").get<std::string>()};
}

LabeledDataset loadStandardized(const fs::path& manifest) {
  LabeledDataset d = loadDataset(manifest);
  d.features = zScoreNormalize(d.features);
  return d;
}

void writeManifest(const fs::path& dir, const std::string& command, const Json& config,
                   const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  writeJson(dir / "run.json", runManifest(command, config, inputs, outputs));
}

/// Runs `n` independent jobs on up to `jobs` threads; results land by index.
void parallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::mutex m;
  std::size_t next = 0;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(n)); ++t) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t k;
        {
          std::lock_guard<std::mutex> lock(m);
          if (next >= n || failure) return;
          k = next++;
        }
        try {
          body(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

template <typename F>
double secondsOf(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking graph anomaly detection toolkit"};
  app.require_subcommand(1);
  RunConfig config;

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic labelled graph");
  Common genCommon;
  Overrides genFlags;
  addCommon(gen, genCommon);
  genFlags.add<Index>(gen, "--nodes", config.data.numNodes, "Number of nodes");
  genFlags.add<Index>(gen, "--anomalies", config.data.numAnomalies, "Number of injected anomalies");
  genFlags.add<Index>(gen, "--clique", config.data.cliqueSize, "Clique size");
  genFlags.add<Index>(gen, "--features", config.data.featureDim, "Feature dimension");
  genFlags.add<double>(gen, "--edge-prob", config.data.baseEdgeProb, "Background edge probability");
  genFlags.add<double>(gen, "--noise", config.data.noiseSigma, "Feature noise in column standard deviations");
  genFlags.add<bool>(gen, "--directed", config.data.directed, "Store edges in one direction only");

  // encode
  auto* enc = app.add_subcommand("encode", "Encode a dataset to spikes and summarise the trains");
  Common encCommon;
  Overrides encFlags;
  std::string encData, encCheckpoint;
  addCommon(enc, encCommon);
  enc->add_option("--data", encData, "Dataset manifest")->required();
  enc->add_option("--checkpoint", encCheckpoint, "Use the encoder of a trained checkpoint");
  encFlags.add<Index>(enc, "--steps", config.model.lif.steps, "Simulation steps");
  encFlags.add<Index>(enc, "--hidden", config.model.hidden, "Hidden width");

  // train
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint and history");
  Common trainCommon;
  Overrides trainFlags;
  std::string trainData;
  std::vector<std::string> disabled;
  int repeats = 1, trainJobs = 1;
  std::string surrogate;
  addCommon(train, trainCommon);
  train->add_option("--data", trainData, "Dataset manifest")->required();
  train->add_option("--disable", disabled, "Switch a component off (lifgat, edhmm, srcgp, stdp, mstc, uncert)");
  train->add_option("--repeats", repeats, "Train this many seeds starting at --seed")->check(CLI::PositiveNumber);
  train->add_option("--jobs", trainJobs, "Parallel runs when repeating")->check(CLI::PositiveNumber);
  train->add_option("--surrogate", surrogate, "Spike surrogate")->check(CLI::IsMember({"rectangular", "sigmoidDerivative"}));
  trainFlags.add<int>(train, "--epochs", config.train.maxEpochs, "Maximum epochs");
  trainFlags.add<double>(train, "--lr", config.train.learningRate, "Learning rate");
  trainFlags.add<double>(train, "--wd", config.train.weightDecay, "Weight decay");
  trainFlags.add<int>(train, "--patience", config.train.earlyStopPatience, "Early stopping patience");
  trainFlags.add<Index>(train, "--batch-nodes", config.train.batchNodes, "Training nodes per step (0 = all)");
  trainFlags.add<Index>(train, "--hidden", config.model.hidden, "Hidden width");
  trainFlags.add<Index>(train, "--layers", config.model.layers, "Attention layers");
  trainFlags.add<Index>(train, "--heads", config.model.attention.heads, "Attention heads");
  trainFlags.add<Index>(train, "--prototypes", config.model.memory.prototypes, "Memory prototypes");
  trainFlags.add<double>(train, "--ratio", config.model.pooling.ratio, "Pooling ratio");
  trainFlags.add<Index>(train, "--steps", config.model.lif.steps, "Simulation steps");
  trainFlags.add<std::vector<int>>(train, "--kernels", config.model.kernels, "Temporal kernel sizes")->delimiter(',');

  // eval
  auto* eval = app.add_subcommand("eval", "Score the test split with a checkpoint");
  Common evalCommon;
  Overrides evalFlags;
  std::string evalData, evalCheckpoint;
  addCommon(eval, evalCommon);
  eval->add_option("--data", evalData, "Dataset manifest")->required();
  eval->add_option("--checkpoint", evalCheckpoint, "Checkpoint file")->required();

  // validate
  auto* val = app.add_subcommand("validate", "Run the theory validation suites");
  Common valCommon;
  Overrides valFlags;
  std::vector<std::string> only;
  int valJobs = 1;
  addCommon(val, valCommon);
  val->add_option("--only", only, "Suites to run (encoding, edhmm, srcgp, stdp, fusion)")
      ->delimiter(',')
      ->check(CLI::IsMember({"encoding", "edhmm", "srcgp", "stdp", "fusion"}));
  val->add_option("--jobs", valJobs, "Suites run in parallel")->check(CLI::PositiveNumber);

  // bench
  auto* bench = app.add_subcommand("bench", "Time each pipeline stage and report spike density");
  Common benchCommon;
  Overrides benchFlags;
  std::string benchData;
  std::vector<Index> benchSteps{8, 16, 32, 64};
  int benchRepeats = 5;
  bool zeroInput = false;
  addCommon(bench, benchCommon);
  bench->add_option("--data", benchData, "Dataset manifest (default: a generated graph)");
  bench->add_option("--steps-grid", benchSteps, "Simulation steps to time")->delimiter(',');
  bench->add_option("--repeats", benchRepeats, "Timed repeats per setting")->check(CLI::PositiveNumber);
  bench->add_flag("--zero-input", zeroInput, "Use all-zero features");
  benchFlags.add<Index>(bench, "--nodes", config.data.numNodes, "Nodes of the generated graph");
  benchFlags.add<Index>(bench, "--hidden", config.model.hidden, "Hidden width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  // Setup: anything failing here is a usage or input problem.
  std::function<int()> run;
  try {
    if (gen->parsed()) {
      resolve(genCommon, genFlags, config);
      config.data.validate();
      run = [&] {
        const LabeledDataset d = generateSynthetic(config.data);
        const fs::path dir = genCommon.out;
        const fs::path manifest = saveDataset(dir, d, config.data);
        writeManifest(dir, "generate", toJson(config), {}, datasetFiles(manifest));
        std::cout << "wrote " << manifest.string() << " (" << d.graph.numNodes() << " nodes, "
                  << std::count(d.labels.begin(), d.labels.end(), 1) << " anomalies)\n";
        return 0;
      };
    } else if (enc->parsed()) {
      resolve(encCommon, encFlags, config);
      auto data = std::make_shared<LabeledDataset>(loadStandardized(encData));
      auto weights = std::make_shared<TsgeWeights>();
      if (!encCheckpoint.empty()) {
        const Checkpoint c = loadCheckpoint(encCheckpoint);
        config.model = c.model.config;
        *weights = c.model.params.tsge;
      } else {
        std::mt19937_64 rng(config.train.seed);
        *weights = initTsge(data->features.values.cols(), config.model.hidden, rng);
      }
      if (weights->projection.rows() != data->features.values.cols()) throw UsageError("checkpoint and dataset feature dimensions differ");
      config.model.lif.validate();
      run = [&, data, weights] {
        const Encoding e = encode(data->features.values, config.model.lif, *weights);
        const Irregularity irr = irregularityScores(e.spikes, config.model.pooling);
        const fs::path dir = encCommon.out;
        fs::create_directories(dir);
        {
          std::ofstream out(dir / "encoding.csv", std::ios::binary);
          out << "nodeId,spikes,meanFirstSpike,cv,burst\n";
          for (Index i = 0; i < e.spikes.nodes(); ++i) {
            out << i << ',' << formatDouble(e.summary.counts.row(i).sum()) << ','
                << formatDouble(e.summary.firstSpike.row(i).mean()) << ',' << formatDouble(irr.cv(i)) << ','
                << formatDouble(irr.burst(i)) << '\n';
          }
        }
        const Json summary = {{"nodes", e.spikes.nodes()},
                              {"steps", e.spikes.steps()},
                              {"hidden", e.spikes.features()},
                              {"spikeDensity", spikeDensity(e.spikes)},
                              {"meanSpikesPerNode", static_cast<double>(e.spikes.count()) / static_cast<double>(e.spikes.nodes())}};
        writeJson(dir / "summary.json", summary);
        std::vector<fs::path> inputs = datasetFiles(encData);
        if (!encCheckpoint.empty()) inputs.push_back(encCheckpoint);
        writeManifest(dir, "encode", toJson(config), inputs, {dir / "encoding.csv", dir / "summary.json"});
        std::cout << "spike density " << formatDouble(spikeDensity(e.spikes)) << "\n";
        return 0;
      };
    } else if (train->parsed()) {
      resolve(trainCommon, trainFlags, config);
      for (const auto& name : disabled) config.model.toggles.disable(name);
      if (!surrogate.empty()) {
        Json s = {{"surrogate", {{"kind", surrogate}}}};
        overlay(s, config.model);
      }
      auto data = std::make_shared<LabeledDataset>(loadStandardized(trainData));
      config.model.featureDim = data->features.values.cols();
      config.model.validate();
      config.train.validate();
      run = [&, data] {
        const fs::path root = trainCommon.out;
        std::vector<std::string> lines(static_cast<std::size_t>(repeats));
        parallelFor(static_cast<std::size_t>(repeats), trainJobs, [&](std::size_t r) {
          RunConfig local = config;
          local.train.seed = config.train.seed + r;
          const fs::path dir = repeats > 1 ? root / ("seed-" + std::to_string(local.train.seed)) : root;
          fs::create_directories(dir);
          Model model = Model::create(local.model, local.train.seed);
          const FitResult fit = fitWithEarlyStopping(model, *data, local.train);
          saveCheckpoint(dir / "checkpoint.json", model, fit.state);
          writeHistoryCsv(dir / "history.csv", fit.history);
          Json cfg = toJson(local);
          cfg["disabled"] = local.model.toggles.disabled();
          writeManifest(dir, "train", cfg, datasetFiles(trainData), {dir / "checkpoint.json", dir / "history.csv"});
          std::ostringstream line;
          line << "seed " << local.train.seed << ": " << fit.history.size() << " epochs, best epoch " << fit.bestEpoch
               << ", best monitored val loss " << formatDouble(fit.bestValLoss);
          lines[r] = line.str();
        });
        for (const auto& l : lines) std::cout << l << "\n";
        return 0;
      };
    } else if (eval->parsed()) {
      resolve(evalCommon, evalFlags, config);
      auto ckpt = std::make_shared<Checkpoint>(loadCheckpoint(evalCheckpoint));
      auto data = std::make_shared<LabeledDataset>(loadStandardized(evalData));
      if (ckpt->model.config.featureDim != data->features.values.cols()) {
        throw UsageError("checkpoint expects " + std::to_string(ckpt->model.config.featureDim) +
                         " features but the dataset has " + std::to_string(data->features.values.cols()));
      }
      if (ckpt->model.params.tsge.projection.cols() != ckpt->model.config.hidden) {
        throw UsageError("checkpoint hidden width does not match its configuration");
      }
      run = [&, ckpt, data] {
        const Model& model = ckpt->model;
        const ForwardResult r = forwardPass(model, data->features.values, data->graph);
        const auto [yv, sv] = gather(data->labels, r.scores.fused, data->nodesIn(Split::Val));
        const double tau = selectThreshold(yv, sv);
        const std::vector<Index> test = data->nodesIn(Split::Test);
        const auto [yt, st] = gather(data->labels, r.scores.fused, test);
        const EvalReport report = evaluate(yt, st, tau, r.spikeDensity);
        const fs::path dir = evalCommon.out;
        fs::create_directories(dir);
        writeJson(dir / "report.json", astdp::toJson(report));
        writeScoresCsv(dir / "scores.csv", r.scores, data->labels, test);
        Json contributions = Json::object();
        const RowVector lambda = fusionWeights(model.params.fusion.logits, model.config.toggles.mask());
        for (std::size_t k = 0; k < kComponents; ++k) {
          const auto [yk, sk] = gather(data->labels, r.scores.component(k), test);
          contributions[kComponentNames[k]] = {{"meanScore", sk.mean()}, {"fusionWeight", lambda(static_cast<Index>(k))}};
        }
        writeJson(dir / "contributions.json", contributions);
        Json cfg = {{"model", astdp::toJson(model.config)}, {"threshold", tau}};
        std::vector<fs::path> inputs = datasetFiles(evalData);
        inputs.push_back(evalCheckpoint);
        writeManifest(dir, "eval", cfg, inputs, {dir / "report.json", dir / "scores.csv", dir / "contributions.json"});
        std::cout << "AUROC " << formatDouble(report.auroc) << "  AUPRC " << formatDouble(report.auprc)
                  << "  macro-F1 " << formatDouble(report.macroF1) << "  threshold " << formatDouble(tau) << "\n";
        return 0;
      };
    } else if (val->parsed()) {
      resolve(valCommon, valFlags, config);
      if (only.empty()) only = {"encoding", "edhmm", "srcgp", "stdp", "fusion"};
      const std::uint64_t seed = valCommon.seed->count() ? valCommon.seedValue : 0;
      run = [&, seed] {
        const fs::path dir = valCommon.out;
        fs::create_directories(dir);
        std::vector<Verdict> verdicts(only.size());
        parallelFor(only.size(), valJobs, [&](std::size_t k) {
          const std::string& suite = only[k];
          if (suite == "encoding") {
            EncodingCheck c;
            c.seed = seed;
            verdicts[k] = validateEncoding(c);
          } else if (suite == "edhmm") {
            MemoryCheck c;
            for (auto& s : c.seeds) s += seed;
            verdicts[k] = validateEdhmm(c);
          } else if (suite == "srcgp") {
            PoolingCheck c;
            c.seed = seed;
            verdicts[k] = validateSrcgp(c);
          } else if (suite == "stdp") {
            PlasticityCheck c;
            c.seed = seed;
            verdicts[k] = validateStdp(c);
          } else {
            FusionCheck c;
            c.seed = seed;
            verdicts[k] = validateFusion(c);
          }
        });
        bool all = true;
        std::vector<fs::path> outputs;
        for (std::size_t k = 0; k < only.size(); ++k) {
          const fs::path file = dir / (only[k] + ".json");
          writeJson(file, toJson(verdicts[k]));
          outputs.push_back(file);
          all = all && verdicts[k].pass;
          std::cout << (verdicts[k].pass ? "PASS " : "FAIL ") << only[k];
          if (!verdicts[k].reason.empty()) std::cout << ": " << verdicts[k].reason;
          std::cout << "\n";
        }
        writeManifest(dir, "validate", {{"suites", only}, {"seed", seed}}, {}, outputs);
        return all ? 0 : 1;
      };
    } else if (bench->parsed()) {
      resolve(benchCommon, benchFlags, config);
      auto data = std::make_shared<LabeledDataset>();
      if (!benchData.empty()) {
        *data = loadStandardized(benchData);
      } else {
        config.data.validate();
        *data = generateSynthetic(config.data);
        data->features = zScoreNormalize(data->features);
      }
      if (zeroInput) data->features.values.setZero();
      for (Index t : benchSteps) {
        if (t < 1) throw UsageError("steps must be positive");
      }
      config.model.featureDim = data->features.values.cols();
      run = [&, data] {
        const fs::path dir = benchCommon.out;
        fs::create_directories(dir);
        std::ofstream csv(dir / "bench.csv", std::ios::binary);
        csv << "steps,component,seconds,spikeDensity\n";
        const Matrix& x = data->features.values;
        const SparseGraph looped = data->graph.withSelfLoops();
        for (Index steps : benchSteps) {
          ModelConfig mc = config.model;
          mc.lif.steps = steps;
          mc.attention.steps = steps;
          mc.kernels.erase(std::remove_if(mc.kernels.begin(), mc.kernels.end(), [&](int k) { return k > 2 * steps - 1; }),
                           mc.kernels.end());
          if (mc.kernels.empty()) mc.kernels = {1};
          Model model = Model::create(mc, config.train.seed);
          std::map<std::string, std::vector<double>> times;
          double density = 0.0;
          for (int rep = 0; rep < benchRepeats; ++rep) {
            Encoding e;
            times["encoder"].push_back(secondsOf([&] { e = encode(x, mc.lif, model.params.tsge); }));
            density = spikeDensity(e.spikes);
            Matrix h = project(x, model.params.tsge.projection);
            times["attention"].push_back(secondsOf([&] {
              for (const auto& layer : model.params.lifgat) h = layerForward(h, looped, e.summary, layer, mc.attention).hidden;
            }));
            Vector mem, iso, temp, pred;
            times["memory"].push_back(secondsOf([&] {
              PrototypeMemory memory = model.memory;
              const Matrix z = combinedRepresentation(e.spikes, memory);
              seedPrototypes(memory, z);
              mem = memoryAnomalyScore(z, matchScores(z, memory), memory).raw;
            }));
            times["pooling"].push_back(secondsOf([&] {
              const Irregularity irr = irregularityScores(e.spikes, mc.pooling);
              iso = isolationScores(irr.score, irr.burst);
              pooledFeatures(e.spikes, selectTopK(irr.score, mc.pooling.ratio).indices, model.poolProj);
            }));
            times["plasticity"].push_back(secondsOf([&] {
              stdpForward(h, model.stdpWeights);
              stdpStrength(model.stdpWeights);
            }));
            TemporalFeatures tf;
            times["temporal"].push_back(secondsOf([&] {
              tf = temporalFeatures(e.spikes, model.params.mstc);
              temp = temporalAnomalyScore(tf.scaleMeans);
            }));
            times["fusion"].push_back(secondsOf([&] {
              pred = predictionScore(h, tf.hidden, model.params.fusion);
              const Vector u = uncertaintyScore(pred, mem, iso, temp);
              fuse({pred, mem, iso, temp, u}, fusionWeights(model.params.fusion.logits));
            }));
            times["total"].push_back(secondsOf([&] { forwardPass(model, x, data->graph); }));
          }
          for (const char* name : {"encoder", "attention", "memory", "pooling", "plasticity", "temporal", "fusion", "total"}) {
            const double s = median(times[name]);
            csv << steps << ',' << name << ',' << formatDouble(s) << ',' << formatDouble(density) << '\n';
            std::cout << "T=" << steps << "  " << name << "  " << s << " s\n";
          }
          std::cout << "T=" << steps << "  spike density " << density << "\n";
        }
        csv.close();
        Json cfg = toJson(config);
        cfg["stepsGrid"] = benchSteps;
        cfg["repeats"] = benchRepeats;
        cfg["zeroInput"] = zeroInput;
        writeManifest(dir, "bench", cfg, benchData.empty() ? std::vector<fs::path>{} : datasetFiles(benchData),
                      {dir / "bench.csv"});
        return 0;
      };
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    return run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
