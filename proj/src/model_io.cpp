#include "dfaprint/model_io.hpp"

#include <json.hpp>

namespace dfaprint {

namespace {

using json = nlohmann::ordered_json;

json vec(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json mat(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec(m.row(i).transpose()));
  return out;
}

Eigen::VectorXd to_vec(const json& node) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) out(static_cast<Eigen::Index>(i)) = node.at(i).get<double>();
  return out;
}

Eigen::MatrixXd to_mat(const json& node, Eigen::Index cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(node.size()), cols);
  for (std::size_t i = 0; i < node.size(); ++i) {
    const json& row = node.at(i);
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error("model file: ragged matrix");
    for (Eigen::Index j = 0; j < cols; ++j) out(static_cast<Eigen::Index>(i), j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return out;
}

json params_json(const SvmParams& p) {
  return json{{"c", p.c}, {"gamma", p.gamma}, {"kkt_tolerance", p.kkt_tolerance}, {"max_passes", p.max_passes}};
}

SvmParams params_from(const json& node) {
  SvmParams p;
  p.c = node.at("c").get<double>();
  p.gamma = node.at("gamma").get<double>();
  p.kkt_tolerance = node.at("kkt_tolerance").get<double>();
  p.max_passes = node.at("max_passes").get<std::size_t>();
  return p;
}

json pca_json(const PcaModel& pca) {
  json out;
  out["mean"] = vec(pca.mean);
  out["components"] = mat(pca.components);
  out["eigenvalues"] = vec(pca.eigenvalues);
  out["explained"] = vec(pca.explained);
  out["dim"] = pca.dim;
  out["zero_variance"] = pca.zero_variance;
  return out;
}

PcaModel pca_from(const json& node) {
  PcaModel pca;
  pca.mean = to_vec(node.at("mean"));
  pca.components = to_mat(node.at("components"), pca.mean.size());
  pca.eigenvalues = to_vec(node.at("eigenvalues"));
  pca.explained = to_vec(node.at("explained"));
  pca.dim = node.at("dim").get<std::size_t>();
  pca.zero_variance = node.at("zero_variance").get<bool>();
  if (static_cast<std::size_t>(pca.components.rows()) != pca.dim) throw Error("model file: PCA dimension mismatch");
  return pca;
}

}  // namespace

std::string model_to_json(const ModelFile& model) {
  const TrainedPipeline& p = model.pipeline;
  json doc;
  doc["format_version"] = model.version;
  doc["schema"] = model.schema.names();
  doc["dfa"] = json{{"min_box", model.dfa.min_box},
                    {"max_box_fraction", model.dfa.max_box_fraction},
                    {"boxes_per_decade", model.dfa.boxes_per_decade},
                    {"detrend_order", model.dfa.detrend_order}};
  doc["feature_names"] = p.feature_names;
  doc["standardizer"] = json{{"mean", vec(p.standardizer.mean)},
                             {"scale", vec(p.standardizer.scale)},
                             {"constant", p.standardizer.constant}};
  doc["mi_ranking"] = json{{"mi", p.ranking.mi}, {"max_mi", p.ranking.max_mi}};
  doc["selection"] = json{{"q", p.selection.q}, {"indices", p.selection.indices}, {"pca", pca_json(p.selection.pca)}};

  json svm;
  svm["classes"] = p.svm.classes;
  svm["pair_models"] = json::array();
  for (const auto& m : p.svm.pair_models) {
    svm["pair_models"].push_back(json{{"params", params_json(m.params)},
                                      {"bias", m.bias},
                                      {"converged", m.converged},
                                      {"dual_coef", m.dual_coef},
                                      {"support_vectors", mat(m.support_vectors)}});
  }
  doc["svm"] = svm;

  json training;
  training["seed"] = p.seed;
  training["bins"] = model.training.bins;
  training["q_grid"] = model.training.q_grid;
  training["variance_fraction"] = model.training.variance_fraction;
  training["c_grid"] = model.training.c_grid;
  training["gamma_scales"] = model.training.gamma_scales;
  training["folds"] = model.training.folds;
  training["candidates"] = json::array();
  for (const auto& c : p.candidates) {
    training["candidates"].push_back(json{{"q", c.q},
                                          {"num_features", c.num_features},
                                          {"reduced_dim", c.reduced_dim},
                                          {"params", params_json(c.params)},
                                          {"cv_accuracy", c.cv_accuracy}});
  }
  doc["training"] = training;
  return doc.dump(1) + "\n";
}

ModelFile model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("model file: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version")) throw Error("model file: missing format_version");
  ModelFile model;
  try {
    model.version = doc.at("format_version").get<int>();
    if (model.version != kModelFormatVersion) {
      throw Error("model file: unsupported format version " + std::to_string(model.version) + " (expected " +
                  std::to_string(kModelFormatVersion) + ")");
    }
    model.schema = MetricSchema(doc.at("schema").get<std::vector<std::string>>());
    const json& dfa = doc.at("dfa");
    model.dfa.min_box = dfa.at("min_box").get<std::size_t>();
    model.dfa.max_box_fraction = dfa.at("max_box_fraction").get<double>();
    model.dfa.boxes_per_decade = dfa.at("boxes_per_decade").get<std::size_t>();
    model.dfa.detrend_order = dfa.at("detrend_order").get<std::size_t>();
    model.dfa.validate();

    TrainedPipeline& p = model.pipeline;
    p.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    if (p.feature_names != fingerprint_feature_names(model.schema)) {
      throw Error("model file: feature names do not match the schema");
    }
    const json& st = doc.at("standardizer");
    p.standardizer.mean = to_vec(st.at("mean"));
    p.standardizer.scale = to_vec(st.at("scale"));
    p.standardizer.constant = st.at("constant").get<std::vector<bool>>();
    const auto n = p.feature_names.size();
    if (static_cast<std::size_t>(p.standardizer.mean.size()) != n ||
        static_cast<std::size_t>(p.standardizer.scale.size()) != n || p.standardizer.constant.size() != n) {
      throw Error("model file: standardizer size does not match the feature count");
    }
    p.ranking.feature_names = p.feature_names;
    p.ranking.mi = doc.at("mi_ranking").at("mi").get<std::vector<double>>();
    p.ranking.max_mi = doc.at("mi_ranking").at("max_mi").get<double>();
    if (p.ranking.mi.size() != n) throw Error("model file: MI ranking size does not match the feature count");

    const json& sel = doc.at("selection");
    p.selection.q = sel.at("q").get<int>();
    p.selection.indices = sel.at("indices").get<std::vector<std::size_t>>();
    for (auto i : p.selection.indices) {
      if (i >= n) throw Error("model file: selected feature index out of range");
    }
    p.selection.pca = pca_from(sel.at("pca"));
    if (p.selection.pca.num_features() != p.selection.indices.size()) {
      throw Error("model file: PCA input size does not match the selected features");
    }

    const json& svm = doc.at("svm");
    p.svm.classes = svm.at("classes").get<std::vector<FamilyLabel>>();
    const std::size_t k = p.svm.classes.size();
    if (k < 2) throw Error("model file: need at least 2 classes");
    const json& pairs = svm.at("pair_models");
    if (pairs.size() != k * (k - 1) / 2) throw Error("model file: wrong number of pairwise models");
    for (const json& node : pairs) {
      BinarySvmModel m;
      m.params = params_from(node.at("params"));
      m.bias = node.at("bias").get<double>();
      m.converged = node.at("converged").get<bool>();
      m.dual_coef = node.at("dual_coef").get<std::vector<double>>();
      m.support_vectors = to_mat(node.at("support_vectors"), static_cast<Eigen::Index>(p.selection.pca.dim));
      if (static_cast<std::size_t>(m.support_vectors.rows()) != m.dual_coef.size()) {
        throw Error("model file: support vector and coefficient counts differ");
      }
      p.svm.pair_models.push_back(std::move(m));
    }

    const json& tr = doc.at("training");
    p.seed = tr.at("seed").get<std::uint64_t>();
    model.training.seed = p.seed;
    model.training.bins = tr.at("bins").get<int>();
    model.training.q_grid = tr.at("q_grid").get<std::vector<int>>();
    model.training.variance_fraction = tr.at("variance_fraction").get<double>();
    model.training.c_grid = tr.at("c_grid").get<std::vector<double>>();
    model.training.gamma_scales = tr.at("gamma_scales").get<std::vector<double>>();
    model.training.folds = tr.at("folds").get<int>();
    for (const json& node : tr.at("candidates")) {
      QCandidate c;
      c.q = node.at("q").get<int>();
      c.num_features = node.at("num_features").get<std::size_t>();
      c.reduced_dim = node.at("reduced_dim").get<std::size_t>();
      c.params = params_from(node.at("params"));
      c.cv_accuracy = node.at("cv_accuracy").get<double>();
      p.candidates.push_back(c);
    }
    if (!p.candidates.empty()) {
      model.training.svm.kkt_tolerance = p.chosen().params.kkt_tolerance;
      model.training.svm.max_passes = p.chosen().params.max_passes;
    }
  } catch (const json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
  return model;
}

void save_model(const ModelFile& model, const std::string& path) { write_file(path, model_to_json(model)); }

ModelFile load_model(const std::string& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

ModelFile train_model(std::span<const LabeledTrace> traces, std::span<const std::string> groups,
                      const PipelineConfig& config, const DfaConfig& dfa) {
  if (traces.empty()) throw Error("training needs at least one trace");
  dfa.validate();
  std::vector<FeatureVector> fps;
  std::vector<FamilyLabel> labels;
  for (const auto& t : traces) {
    fps.push_back(fingerprint(t.trace, dfa));
    labels.push_back(t.family);
  }
  ModelFile model;
  model.schema = traces.front().trace.schema();
  model.dfa = dfa;
  model.training = config;
  model.pipeline = train_pipeline(fps, labels, groups, config);
  return model;
}

Prediction classify_trace(const ModelFile& model, const Trace& trace) {
  if (!(trace.schema() == model.schema)) {
    throw Error("schema mismatch: model expects [" + model.schema.to_string() + "] but trace has [" +
                trace.schema().to_string() + "]");
  }
  return model.pipeline.classify(fingerprint(trace, model.dfa));
}

}  // namespace dfaprint
