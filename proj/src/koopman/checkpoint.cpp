#include "dkmpc/koopman/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dkmpc::koopman {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m)
{
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j)
{
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j)
{
  if (!j.is_array() || j.empty())
    throw CheckpointError("matrix must be a non-empty array of rows");
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols)
      throw CheckpointError("ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

json net_to_json(const nn::Mlp& net)
{
  json layers = json::array();
  for (const nn::Layer& l : net.layers()) {
    json jl;
    jl["weights"] = matrix_to_json(l.weight);
    jl["bias"] = vector_to_json(l.bias);
    jl["activation"] = nn::to_string(l.activation);
    layers.push_back(std::move(jl));
  }
  return layers;
}

nn::Mlp net_from_json(const json& j)
{
  std::vector<nn::Layer> layers;
  for (const json& jl : j) {
    nn::Layer l;
    l.weight = matrix_from_json(jl.at("weights"));
    l.bias = vector_from_json(jl.at("bias"));
    l.activation = nn::activation_from_string(jl.at("activation").get<std::string>());
    layers.push_back(std::move(l));
  }
  return nn::Mlp(std::move(layers));
}

json scaler_to_json(const nn::MinMaxScaler& s)
{
  return {{"min", vector_to_json(s.min())}, {"max", vector_to_json(s.max())}};
}

nn::MinMaxScaler scaler_from_json(const json& j)
{
  return nn::MinMaxScaler(vector_from_json(j.at("min")), vector_from_json(j.at("max")));
}

}  // namespace

std::string to_checkpoint_text(const KoopmanModel& model, const std::optional<TrainingConfig>& cfg)
{
  json j;
  j["version"] = kCheckpointVersion;
  j["dims"] = {{"n", model.dims().n}, {"m", model.dims().m}, {"phi", model.dims().phi}};
  j["scaler_x"] = scaler_to_json(model.state_scaler());
  j["scaler_u"] = scaler_to_json(model.input_scaler());
  j["encoder"] = net_to_json(model.encoder());
  j["decoder"] = net_to_json(model.decoder());
  j["A"] = matrix_to_json(model.a_scaled());
  j["B"] = matrix_to_json(model.b_scaled());
  if (cfg) {
    j["training"] = {{"phi", cfg->phi},
                     {"seq_len", cfg->seq_len},
                     {"epochs", cfg->epochs},
                     {"batch_size", cfg->batch_size},
                     {"learning_rate", cfg->learning_rate},
                     {"momentum", cfg->momentum},
                     {"plateau_patience", cfg->plateau_patience},
                     {"seed", cfg->seed},
                     {"validation_fraction", cfg->validation_fraction},
                     {"hidden", cfg->hidden}};
  }
  return j.dump(1);
}

KoopmanModel from_checkpoint_text(const std::string& text, TrainingConfig* cfg)
{
  try {
    const json j = json::parse(text);
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    KoopmanModel model(net_from_json(j.at("encoder")), net_from_json(j.at("decoder")), matrix_from_json(j.at("A")),
                       matrix_from_json(j.at("B")), scaler_from_json(j.at("scaler_x")),
                       scaler_from_json(j.at("scaler_u")));
    const json& dims = j.at("dims");
    if (dims.at("n").get<int>() != model.dims().n || dims.at("m").get<int>() != model.dims().m ||
        dims.at("phi").get<int>() != model.dims().phi)
      throw CheckpointError("dims block disagrees with stored matrices");
    if (cfg && j.contains("training")) {
      const json& t = j.at("training");
      cfg->phi = t.at("phi").get<int>();
      cfg->seq_len = t.at("seq_len").get<int>();
      cfg->epochs = t.at("epochs").get<int>();
      cfg->batch_size = t.at("batch_size").get<int>();
      cfg->learning_rate = t.at("learning_rate").get<double>();
      cfg->momentum = t.at("momentum").get<double>();
      cfg->plateau_patience = t.at("plateau_patience").get<int>();
      cfg->seed = t.at("seed").get<std::uint64_t>();
      cfg->validation_fraction = t.at("validation_fraction").get<double>();
      cfg->hidden = t.at("hidden").get<std::vector<int>>();
    }
    return model;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("inconsistent checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const KoopmanModel& model, const std::optional<TrainingConfig>& cfg)
{
  std::ofstream out(path);
  if (!out)
    throw CheckpointError("cannot write checkpoint " + path);
  out << to_checkpoint_text(model, cfg) << '\n';
}

KoopmanModel load_checkpoint(const std::string& path, TrainingConfig* cfg)
{
  std::ifstream in(path);
  if (!in)
    throw CheckpointError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_checkpoint_text(ss.str(), cfg);
}

}  // namespace dkmpc::koopman
