#include "dropal/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "dropal/error.hpp"

namespace dropal {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "dropal-checkpoint";
constexpr int kVersion = 1;

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(vector_to_json(m.row(r).transpose()));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ShapeError("checkpoint weight matrix has the wrong row count");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::VectorXd row = vector_from_json(j[static_cast<std::size_t>(r)]);
    if (row.size() != cols) throw ShapeError("checkpoint weight matrix has the wrong column count");
    m.row(r) = row.transpose();
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto& spec = ckpt.network.spec();
  const auto& p = ckpt.network.params();
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["spec"] = {{"input_dim", spec.input_dim},       {"hidden_sizes", spec.hidden_sizes},
               {"output_dim", spec.output_dim},     {"leakiness", spec.leakiness},
               {"dropout_prob", spec.dropout_prob}, {"l2_coeff", spec.l2_coeff}};
  json layers = json::array();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    layers.push_back({{"weights", matrix_to_json(p.weights[l])},
                      {"biases", vector_to_json(p.biases[l])}});
  }
  j["layers"] = std::move(layers);
  if (ckpt.standardizer) {
    const auto& s = *ckpt.standardizer;
    j["standardizer"] = {{"feature_mean", vector_to_json(s.feature_mean)},
                         {"feature_std", vector_to_json(s.feature_std)},
                         {"target_mean", s.target_mean},
                         {"target_std", s.target_std}};
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    if (j.at("format") != kFormat) throw Error("not a checkpoint file: " + path.string());
    if (j.at("version").get<int>() != kVersion) {
      throw Error("unsupported checkpoint version in " + path.string());
    }
    const json& js = j.at("spec");
    NetworkSpec spec;
    spec.input_dim = js.at("input_dim").get<std::size_t>();
    spec.hidden_sizes = js.at("hidden_sizes").get<std::vector<std::size_t>>();
    spec.output_dim = js.at("output_dim").get<std::size_t>();
    spec.leakiness = js.at("leakiness").get<double>();
    spec.dropout_prob = js.at("dropout_prob").get<double>();
    spec.l2_coeff = js.at("l2_coeff").get<double>();
    spec.validate();

    const auto widths = spec.layer_widths();
    const json& layers = j.at("layers");
    if (layers.size() != spec.num_layers()) throw ShapeError("checkpoint layer count mismatch");
    Parameters params;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto out = static_cast<Eigen::Index>(widths[l + 1]);
      const auto in_dim = static_cast<Eigen::Index>(widths[l]);
      params.weights.push_back(matrix_from_json(layers[l].at("weights"), out, in_dim));
      params.biases.push_back(vector_from_json(layers[l].at("biases")));
    }
    Checkpoint ckpt{Network(spec, std::move(params)), std::nullopt};
    if (j.contains("standardizer")) {
      const json& s = j["standardizer"];
      Standardizer st;
      st.feature_mean = vector_from_json(s.at("feature_mean"));
      st.feature_std = vector_from_json(s.at("feature_std"));
      st.target_mean = s.at("target_mean").get<double>();
      st.target_std = s.at("target_std").get<double>();
      if (static_cast<std::size_t>(st.feature_mean.size()) != spec.input_dim ||
          st.feature_std.size() != st.feature_mean.size()) {
        throw ShapeError("checkpoint standardizer does not match the network input");
      }
      ckpt.standardizer = std::move(st);
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace dropal
