#include "lgss/checkpoint.hpp"

#include "json.hpp"

namespace lgss {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kVersion = 1;

ordered_json tensors_to_json(const TensorLayout& layout, const Eigen::VectorXd& values) {
  ordered_json arr = ordered_json::array();
  for (const TensorSpec& s : layout.specs()) {
    ordered_json t;
    t["name"] = s.name;
    t["shape"] = {s.rows, s.cols};
    ordered_json data = ordered_json::array();
    for (int k = 0; k < s.rows * s.cols; ++k) {
      data.push_back(static_cast<double>(static_cast<float>(values(s.offset + k))));
    }
    t["data"] = std::move(data);
    arr.push_back(std::move(t));
  }
  return arr;
}

void tensors_from_json(const ordered_json& arr, const TensorLayout& layout,
                       Eigen::VectorXd& values) {
  if (arr.size() != layout.specs().size()) {
    throw FormatError("checkpoint: tensor count mismatch");
  }
  for (const auto& t : arr) {
    const std::string name = t.at("name").get<std::string>();
    const int idx = layout.find(name);
    if (idx < 0) throw FormatError("checkpoint: unexpected tensor " + name);
    const TensorSpec& s = layout.spec(idx);
    const auto shape = t.at("shape");
    if (shape.at(0).get<int>() != s.rows || shape.at(1).get<int>() != s.cols) {
      throw FormatError("checkpoint: shape mismatch for " + name);
    }
    const auto& data = t.at("data");
    if (static_cast<int>(data.size()) != s.rows * s.cols) {
      throw FormatError("checkpoint: data length mismatch for " + name);
    }
    for (int k = 0; k < s.rows * s.cols; ++k) {
      values(s.offset + k) = static_cast<double>(data.at(static_cast<size_t>(k)).get<float>());
    }
  }
}

}  // namespace

void save_checkpoint(const BNetParams& bnet, const SeqParams& seq,
                     const std::filesystem::path& path) {
  ordered_json doc;
  doc["format"] = "lgss-checkpoint";
  doc["version"] = kVersion;

  ordered_json cfg;
  cfg["w_b"] = bnet.config.w_b;
  cfg["embed_dim"] = bnet.config.embed_dim;
  cfg["activation"] = activation_name(bnet.config.activation);
  cfg["diff_mode"] = diff_mode_name(bnet.config.diff_mode);
  ordered_json mods = ordered_json::array();
  for (const auto& [name, dim] : bnet.modalities) mods.push_back({{"name", name}, {"dim", dim}});
  cfg["modalities"] = std::move(mods);
  cfg["window"] = seq.config.window;
  cfg["hidden"] = seq.config.hidden;
  cfg["input_dim"] = seq.input_dim;
  doc["config"] = std::move(cfg);

  doc["bnet"] = tensors_to_json(bnet.layout, bnet.values);
  doc["seq"] = tensors_to_json(seq.layout, seq.values);
  atomic_write_file(path, doc.dump() + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint parse failure in " + path.string() + ": " + e.what());
  }
  if (doc.value("format", "") != "lgss-checkpoint") {
    throw FormatError("not a lgss checkpoint: " + path.string());
  }
  if (doc.value("version", -1) != kVersion) {
    throw FormatError("unsupported checkpoint version in " + path.string());
  }

  try {
    const auto& cfg = doc.at("config");
    std::vector<std::pair<std::string, int>> modalities;
    for (const auto& m : cfg.at("modalities")) {
      modalities.emplace_back(m.at("name").get<std::string>(), m.at("dim").get<int>());
    }
    Checkpoint ck{
        init_bnet_params(modalities, cfg.at("embed_dim").get<int>(), cfg.at("w_b").get<int>(), 0,
                         activation_from_name(cfg.at("activation").get<std::string>()),
                         diff_mode_from_name(cfg.at("diff_mode").get<std::string>())),
        init_seq_params(cfg.at("input_dim").get<int>(), cfg.at("hidden").get<int>(),
                        cfg.at("window").get<int>(), 0)};
    if (ck.bnet.boundary_dim() != ck.seq.input_dim) {
      throw FormatError("checkpoint: bnet output dim does not match seq input dim");
    }
    tensors_from_json(doc.at("bnet"), ck.bnet.layout, ck.bnet.values);
    tensors_from_json(doc.at("seq"), ck.seq.layout, ck.seq.values);
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint field error in " + path.string() + ": " + e.what());
  }
}

}  // namespace lgss
