#include "lgss/config.hpp"

#include <algorithm>
#include <sstream>

#include "lgss/util.hpp"

namespace lgss {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

Config Config::defaults() {
  Config c;
  c.set("seed", "0");
  c.set("jobs", "1");
  c.set("tau", "0.5");

  c.set("synth.movies", "20");
  c.set("synth.scenes_min", "5");
  c.set("synth.scenes_max", "15");
  c.set("synth.shots_min", "4");
  c.set("synth.shots_max", "20");
  c.set("synth.modality_dims", "place:16,cast:16,action:16,audio:16");
  c.set("synth.noise_sigma", "0.3");
  c.set("synth.anchor_share_prob", "0.3");
  c.set("synth.duration_min_s", "1.0");
  c.set("synth.duration_max_s", "5.0");

  c.set("bnet.w_b", "4");
  c.set("bnet.embed_dim", "16");
  c.set("bnet.activation", "relu");
  c.set("bnet.diff_mode", "elementwise");

  c.set("seq.window", "10");
  c.set("seq.hidden", "16");

  c.set("train.epochs", "30");
  c.set("train.learning_rate", "0.01");
  c.set("train.lr_drop_epoch", "15");
  c.set("train.lr_drop_factor", "10.0");
  c.set("train.weight_negative", "1.0");
  c.set("train.weight_positive", "9.0");
  c.set("train.clip_norm", "5.0");

  c.set("grouping.init_count", "600");
  c.set("grouping.j_min", "2");
  c.set("grouping.j_max", "30");
  c.set("grouping.beta", "inf");
  c.set("grouping.k_set", "5");
  c.set("grouping.k_para", "10");
  c.set("grouping.refine_step", "0.05");
  c.set("grouping.preceding_only", "true");
  c.set("grouping.research_scene_count", "false");

  c.set("evaluate.window_s", "3.0");
  return c;
}

Config Config::from_file(const std::filesystem::path& path) {
  Config c;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config " + path.string() + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw FormatError("config " + path.string() + ":" + std::to_string(lineno) + ": empty key");
    }
    c.set(key, value);
  }
  return c;
}

void Config::merge(const Config& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("config: unknown key " + key);
  return it->second;
}

int Config::get_int(const std::string& key) const {
  try {
    return std::stoi(get_string(key));
  } catch (const std::logic_error&) {
    throw ValidationError("config: key " + key + " is not an integer");
  }
}

double Config::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  try {
    return std::stod(v);
  } catch (const std::logic_error&) {
    throw ValidationError("config: key " + key + " is not a number");
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("config: key " + key + " is not a boolean");
}

std::uint64_t Config::get_uint(const std::string& key) const {
  try {
    return std::stoull(get_string(key));
  } catch (const std::logic_error&) {
    throw ValidationError("config: key " + key + " is not an unsigned integer");
  }
}

std::vector<std::pair<std::string, int>> Config::get_modality_dims(const std::string& key) const {
  std::vector<std::pair<std::string, int>> dims;
  std::istringstream in(get_string(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ValidationError("config: key " + key + " expects name:dim pairs");
    }
    dims.emplace_back(trim(item.substr(0, colon)), std::stoi(trim(item.substr(colon + 1))));
  }
  if (dims.empty()) throw ValidationError("config: key " + key + " has no modalities");
  return dims;
}

std::string Config::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
  return os.str();
}

void Config::write(const std::filesystem::path& path) const { atomic_write_file(path, dump()); }

}  // namespace lgss
