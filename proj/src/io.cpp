#include "astdp/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace astdp {

namespace {

constexpr const char* kComponent = "io";

/// Reads known keys of one JSON object and rejects the rest.
class Fields {
 public:
  Fields(const Json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j.is_object()) throw Error("cli", section_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      field = it->template get<T>();
    } catch (const Json::exception&) {
      throw Error("cli", section_ + "." + key + ": wrong type");
    }
  }

  void getReal(const char* key, double& field) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) field = realFromJson(*it);
  }

  const Json* sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw Error("cli", "unknown config key '" + section_ + "." + item.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

std::string surrogateName(ad::SurrogateKind k) {
  return k == ad::SurrogateKind::Rectangular ? "rectangular" : "sigmoidDerivative";
}

ad::SurrogateKind surrogateKind(const std::string& s) {
  if (s == "rectangular") return ad::SurrogateKind::Rectangular;
  if (s == "sigmoidDerivative") return ad::SurrogateKind::SigmoidDerivative;
  throw Error("cli", "unknown surrogate '" + s + "'");
}

std::string seedingName(PrototypeSeeding s) {
  return s == PrototypeSeeding::FirstDistinct ? "firstDistinct" : "farthestPoint";
}

PrototypeSeeding seedingKind(const std::string& s) {
  if (s == "firstDistinct") return PrototypeSeeding::FirstDistinct;
  if (s == "farthestPoint") return PrototypeSeeding::FarthestPoint;
  throw Error("cli", "unknown seeding '" + s + "'");
}

std::ofstream openForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kComponent, "cannot write " + path.string());
  return out;
}

std::string readBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kComponent, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string formatDouble(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Json realToJson(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double realFromJson(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(kComponent, "expected a real number");
}

Json matrixToJson(const Matrix& m) {
  Json data = Json::array();
  for (Index k = 0; k < m.size(); ++k) data.push_back(realToJson(m.data()[k]));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrixFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw Error(kComponent, "malformed matrix");
  }
  const Index rows = j.at("rows").get<Index>(), cols = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Index>(data.size()) != rows * cols) {
    throw Error(kComponent, "matrix size does not match its data");
  }
  Matrix m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = realFromJson(data[static_cast<std::size_t>(k)]);
  return m;
}

Json toJson(const ModelConfig& c) {
  const auto& l = c.lif;
  const auto& a = c.attention;
  const auto& m = c.memory;
  const auto& p = c.pooling;
  const auto& s = c.stdp;
  const auto& t = c.toggles;
  return {
      {"featureDim", c.featureDim},
      {"hidden", c.hidden},
      {"layers", c.layers},
      {"midWidth", c.midWidth},
      {"kernels", c.kernels},
      {"lif",
       {{"tauSyn", l.tauSyn},
        {"tauMem", l.tauMem},
        {"threshold", l.threshold},
        {"adaptDecay", l.adaptDecay},
        {"adaptIncrement", l.adaptIncrement},
        {"steps", l.steps}}},
      {"attention",
       {{"heads", a.heads},
        {"attThreshold", a.attThreshold},
        {"tauMem", a.tauMem},
        {"lateralInhibition", a.lateralInhibition},
        {"passThrough", a.passThrough}}},
      {"memory",
       {{"prototypes", m.prototypes},
        {"temporalMix", m.temporalMix},
        {"temperature", m.temperature},
        {"matchThreshold", m.matchThreshold},
        {"learningRate", m.learningRate},
        {"strengthDecay", m.strengthDecay},
        {"strengthGain", m.strengthGain},
        {"strengthScale", m.strengthScale},
        {"homeoDecay", m.homeoDecay},
        {"homeoFloor", m.homeoFloor},
        {"countNormalizedGain", m.countNormalizedGain},
        {"seeding", seedingName(m.seeding)}}},
      {"pooling",
       {{"ratio", p.ratio}, {"cvWeight", p.cvWeight}, {"burstWeight", p.burstWeight},
        {"burstIsiThreshold", p.burstIsiThreshold}}},
      {"stdp",
       {{"aPlus", s.aPlus},
        {"aMinus", s.aMinus},
        {"tauPlus", s.tauPlus},
        {"tauMinus", s.tauMinus},
        {"beta", s.beta},
        {"clipLo", s.clipLo},
        {"clipHi", s.clipHi},
        {"anticausal", s.anticausal}}},
      {"toggles",
       {{"lifgat", t.lifgat}, {"edhmm", t.edhmm}, {"srcgp", t.srcgp}, {"stdp", t.stdp}, {"mstc", t.mstc},
        {"uncert", t.uncert}}},
      {"surrogate",
       {{"kind", surrogateName(c.surrogate.kind)},
        {"width", c.surrogate.width},
        {"steepness", c.surrogate.steepness},
        {"smoothForward", c.surrogate.smoothForward}}},
      {"loss",
       {{"mem", c.loss.mem}, {"iso", c.loss.iso}, {"reg", c.loss.reg}, {"clampEps", c.loss.clampEps}}},
  };
}

void overlay(const Json& j, ModelConfig& c) {
  Fields f(j, "model");
  f.get("featureDim", c.featureDim);
  f.get("hidden", c.hidden);
  f.get("layers", c.layers);
  f.get("midWidth", c.midWidth);
  f.get("kernels", c.kernels);
  if (const Json* s = f.sub("lif")) {
    Fields g(*s, "model.lif");
    g.get("tauSyn", c.lif.tauSyn);
    g.get("tauMem", c.lif.tauMem);
    g.get("threshold", c.lif.threshold);
    g.get("adaptDecay", c.lif.adaptDecay);
    g.get("adaptIncrement", c.lif.adaptIncrement);
    g.get("steps", c.lif.steps);
    g.finish();
  }
  if (const Json* s = f.sub("attention")) {
    Fields g(*s, "model.attention");
    g.get("heads", c.attention.heads);
    g.get("attThreshold", c.attention.attThreshold);
    g.get("tauMem", c.attention.tauMem);
    g.get("lateralInhibition", c.attention.lateralInhibition);
    g.get("passThrough", c.attention.passThrough);
    g.finish();
  }
  if (const Json* s = f.sub("memory")) {
    Fields g(*s, "model.memory");
    auto& m = c.memory;
    g.get("prototypes", m.prototypes);
    g.get("temporalMix", m.temporalMix);
    g.get("temperature", m.temperature);
    g.get("matchThreshold", m.matchThreshold);
    g.get("learningRate", m.learningRate);
    g.get("strengthDecay", m.strengthDecay);
    g.get("strengthGain", m.strengthGain);
    g.get("strengthScale", m.strengthScale);
    g.get("homeoDecay", m.homeoDecay);
    g.get("homeoFloor", m.homeoFloor);
    g.get("countNormalizedGain", m.countNormalizedGain);
    std::string seeding = seedingName(m.seeding);
    g.get("seeding", seeding);
    m.seeding = seedingKind(seeding);
    g.finish();
  }
  if (const Json* s = f.sub("pooling")) {
    Fields g(*s, "model.pooling");
    g.get("ratio", c.pooling.ratio);
    g.get("cvWeight", c.pooling.cvWeight);
    g.get("burstWeight", c.pooling.burstWeight);
    g.get("burstIsiThreshold", c.pooling.burstIsiThreshold);
    g.finish();
  }
  if (const Json* s = f.sub("stdp")) {
    Fields g(*s, "model.stdp");
    g.get("aPlus", c.stdp.aPlus);
    g.get("aMinus", c.stdp.aMinus);
    g.get("tauPlus", c.stdp.tauPlus);
    g.get("tauMinus", c.stdp.tauMinus);
    g.get("beta", c.stdp.beta);
    g.get("clipLo", c.stdp.clipLo);
    g.get("clipHi", c.stdp.clipHi);
    g.get("anticausal", c.stdp.anticausal);
    g.finish();
  }
  if (const Json* s = f.sub("toggles")) {
    Fields g(*s, "model.toggles");
    g.get("lifgat", c.toggles.lifgat);
    g.get("edhmm", c.toggles.edhmm);
    g.get("srcgp", c.toggles.srcgp);
    g.get("stdp", c.toggles.stdp);
    g.get("mstc", c.toggles.mstc);
    g.get("uncert", c.toggles.uncert);
    g.finish();
  }
  if (const Json* s = f.sub("surrogate")) {
    Fields g(*s, "model.surrogate");
    std::string kind = surrogateName(c.surrogate.kind);
    g.get("kind", kind);
    c.surrogate.kind = surrogateKind(kind);
    g.get("width", c.surrogate.width);
    g.get("steepness", c.surrogate.steepness);
    g.get("smoothForward", c.surrogate.smoothForward);
    g.finish();
  }
  if (const Json* s = f.sub("loss")) {
    Fields g(*s, "model.loss");
    g.get("mem", c.loss.mem);
    g.get("iso", c.loss.iso);
    g.get("reg", c.loss.reg);
    g.get("clampEps", c.loss.clampEps);
    g.finish();
  }
  f.finish();
}

Json toJson(const TrainConfig& c) {
  return {{"learningRate", c.learningRate},
          {"weightDecay", c.weightDecay},
          {"adamBeta1", c.adamBeta1},
          {"adamBeta2", c.adamBeta2},
          {"adamEps", c.adamEps},
          {"maxEpochs", c.maxEpochs},
          {"earlyStopPatience", c.earlyStopPatience},
          {"plateauFactor", c.plateauFactor},
          {"plateauPatience", c.plateauPatience},
          {"gradClipNorm", c.gradClipNorm},
          {"batchNodes", c.batchNodes},
          {"fullGraphLimit", c.fullGraphLimit},
          {"seed", c.seed},
          {"plasticity", c.plasticity}};
}

void overlay(const Json& j, TrainConfig& c) {
  Fields f(j, "train");
  f.get("learningRate", c.learningRate);
  f.get("weightDecay", c.weightDecay);
  f.get("adamBeta1", c.adamBeta1);
  f.get("adamBeta2", c.adamBeta2);
  f.get("adamEps", c.adamEps);
  f.get("maxEpochs", c.maxEpochs);
  f.get("earlyStopPatience", c.earlyStopPatience);
  f.get("plateauFactor", c.plateauFactor);
  f.get("plateauPatience", c.plateauPatience);
  f.get("gradClipNorm", c.gradClipNorm);
  f.get("batchNodes", c.batchNodes);
  f.get("fullGraphLimit", c.fullGraphLimit);
  f.get("seed", c.seed);
  f.get("plasticity", c.plasticity);
  f.finish();
}

Json toJson(const SyntheticSpec& s) {
  return {{"numNodes", s.numNodes},
          {"numAnomalies", s.numAnomalies},
          {"featureDim", s.featureDim},
          {"baseEdgeProb", s.baseEdgeProb},
          {"cliqueSize", s.cliqueSize},
          {"noiseSigma", s.noiseSigma},
          {"noisyFeatureFraction", s.noisyFeatureFraction},
          {"seed", s.seed},
          {"directed", s.directed},
          {"ratios", {{"train", s.ratios.train}, {"val", s.ratios.val}, {"test", s.ratios.test}}}};
}

void overlay(const Json& j, SyntheticSpec& s) {
  Fields f(j, "data");
  f.get("numNodes", s.numNodes);
  f.get("numAnomalies", s.numAnomalies);
  f.get("featureDim", s.featureDim);
  f.get("baseEdgeProb", s.baseEdgeProb);
  f.get("cliqueSize", s.cliqueSize);
  f.get("noiseSigma", s.noiseSigma);
  f.get("noisyFeatureFraction", s.noisyFeatureFraction);
  f.get("seed", s.seed);
  f.get("directed", s.directed);
  if (const Json* r = f.sub("ratios")) {
    Fields g(*r, "data.ratios");
    g.get("train", s.ratios.train);
    g.get("val", s.ratios.val);
    g.get("test", s.ratios.test);
    g.finish();
  }
  f.finish();
}

Json toJson(const EvalReport& r) {
  return {{"schemaVersion", kConfigSchemaVersion},
          {"auprc", r.auprc},
          {"auroc", r.auroc},
          {"macroF1", r.macroF1},
          {"f1Anomaly", r.f1Anomaly},
          {"f1Normal", r.f1Normal},
          {"threshold", r.threshold},
          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}}},
          {"spikeDensity", r.spikeDensity}};
}

EvalReport reportFromJson(const Json& j) {
  EvalReport r;
  Fields f(j, "report");
  int version = 0;
  f.get("schemaVersion", version);
  if (version != kConfigSchemaVersion) throw Error(kComponent, "unsupported report schema version");
  f.getReal("auprc", r.auprc);
  f.getReal("auroc", r.auroc);
  f.getReal("macroF1", r.macroF1);
  f.getReal("f1Anomaly", r.f1Anomaly);
  f.getReal("f1Normal", r.f1Normal);
  f.getReal("threshold", r.threshold);
  f.getReal("spikeDensity", r.spikeDensity);
  if (const Json* c = f.sub("confusion")) {
    Fields g(*c, "report.confusion");
    g.get("tp", r.confusion.tp);
    g.get("fp", r.confusion.fp);
    g.get("fn", r.confusion.fn);
    g.get("tn", r.confusion.tn);
    g.finish();
  }
  f.finish();
  return r;
}

Json readJson(const std::filesystem::path& path) {
  const std::string bytes = readBytes(path);
  try {
    return Json::parse(bytes);
  } catch (const Json::parse_error& e) {
    throw Error(kComponent, path.string() + ": " + e.what());
  }
}

void writeJson(const std::filesystem::path& path, const Json& j) {
  auto out = openForWrite(path);
  out << j.dump(2) << '\n';
}

std::filesystem::path saveDataset(const std::filesystem::path& dir, const LabeledDataset& data,
                                  const SyntheticSpec& spec) {
  std::filesystem::create_directories(dir);
  writeEdgeList(dir / "edges.csv", data.graph, !spec.directed);
  writeFeatures(dir / "features.csv", data.features.values);
  writeLabels(dir / "labels.csv", data.labels);
  const Json manifest = {
      {"schemaVersion", kConfigSchemaVersion},
      {"edges", "edges.csv"},
      {"features", "features.csv"},
      {"labels", "labels.csv"},
      {"nodes", data.graph.numNodes()},
      {"featureDim", data.features.values.cols()},
      {"anomalies", std::count(data.labels.begin(), data.labels.end(), 1)},
      {"seed", spec.seed},
      {"directed", spec.directed},
      {"split", {{"train", spec.ratios.train}, {"val", spec.ratios.val}, {"test", spec.ratios.test}}},
      {"generator", toJson(spec)},
  };
  const auto path = dir / "dataset.json";
  writeJson(path, manifest);
  return path;
}

LabeledDataset loadDataset(const std::filesystem::path& manifest) {
  if (!std::filesystem::exists(manifest)) throw Error(kComponent, "dataset manifest not found: " + manifest.string());
  const Json j = readJson(manifest);
  const auto dir = manifest.parent_path();
  try {
    const Index n = j.at("nodes").get<Index>();
    const bool directed = j.value("directed", false);
    LabeledDataset d;
    d.graph = loadEdgeList(dir / j.at("edges").get<std::string>(), n, !directed);
    d.features.values = loadFeatures(dir / j.at("features").get<std::string>());
    if (d.features.values.rows() != n) throw Error(kComponent, "feature rows do not match the node count");
    if (j.contains("featureDim") && d.features.values.cols() != j.at("featureDim").get<Index>()) {
      throw Error(kComponent, "feature columns do not match the manifest");
    }
    d.labels = loadLabels(dir / j.at("labels").get<std::string>(), n);
    SplitRatios ratios;
    const Json& s = j.at("split");
    ratios.train = s.at("train").get<double>();
    ratios.val = s.at("val").get<double>();
    ratios.test = s.at("test").get<double>();
    d.split = stratifiedSplit(d.labels, ratios, j.at("seed").get<std::uint64_t>());
    return d;
  } catch (const Json::exception& e) {
    throw Error(kComponent, manifest.string() + ": " + e.what());
  }
}

void writeScoresCsv(const std::filesystem::path& path, const AnomalyScoreVector& scores,
                    const std::vector<int>& labels, const std::vector<Index>& nodes) {
  auto out = openForWrite(path);
  out << "nodeId,pred,mem,iso,temp,uncert,fused,label\n";
  for (Index i : nodes) {
    out << i;
    for (std::size_t k = 0; k < kComponents + 1; ++k) {
      const Vector& v = k < kComponents ? scores.component(k) : scores.fused;
      out << ',' << formatDouble(v(i));
    }
    out << ',' << labels[static_cast<std::size_t>(i)] << '\n';
  }
}

void writeHistoryCsv(const std::filesystem::path& path, const std::vector<EpochMetrics>& history) {
  auto out = openForWrite(path);
  out << "epoch,trainLoss,valLoss,bce,mem,iso,reg,lr,spikeDensity\n";
  for (const auto& m : history) {
    out << m.epoch;
    for (double v : {m.trainLoss, m.valLoss, m.bce, m.mem, m.iso, m.reg, m.lr, m.spikeDensity}) {
      out << ',' << formatDouble(v);
    }
    out << '\n';
  }
}

std::string blobHash(const std::string& bytes) {
  std::string payload = "blob " + std::to_string(bytes.size());
  payload.push_back('\0');
  payload += bytes;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha1(), nullptr)) {
    throw Error(kComponent, "hashing failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

std::string fileHash(const std::filesystem::path& path) { return blobHash(readBytes(path)); }

Json runManifest(const std::string& command, const Json& config, const std::vector<std::filesystem::path>& inputs,
                 const std::vector<std::filesystem::path>& outputs) {
  Json in = Json::array(), out = Json::array();
  for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"hash", fileHash(p)}});
  for (const auto& p : outputs) out.push_back({{"path", p.string()}, {"hash", fileHash(p)}});
  return {{"schemaVersion", kConfigSchemaVersion},
          {"command", command},
          {"config", config},
          {"inputs", std::move(in)},
          {"outputs", std::move(out)}};
}

}  // namespace astdp
