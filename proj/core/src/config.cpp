#include "rllg/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rllg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_key(const std::string& origin, const std::string& key) {
  throw std::invalid_argument(origin + ": unknown config key '" + key + "'");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string join_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

KvMap parse_kv_text(const std::string& text, const std::string& origin) {
  KvMap kv;
  const std::string body = trim(text);
  if (!body.empty() && body[0] == '{') {
    // the config.json flavor: one flat object
    nlohmann::json j = nlohmann::json::parse(body);
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_string())
        kv[it.key()] = it->get<std::string>();
      else if (it->is_boolean())
        kv[it.key()] = it->get<bool>() ? "true" : "false";
      else
        kv[it.key()] = format_double(it->get<double>());
    }
    return kv;
  }
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KvMap parse_kv_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_kv_text(buf.str(), path.string());
}

RunConfig apply_kv(RunConfig cfg, const KvMap& kv, const std::string& origin) {
  for (const auto& [key, value] : kv) {
    try {
      if (key.rfind("env.", 0) == 0) {
        cfg.env_overrides[key.substr(4)] = std::stod(value);
      } else if (key == "env") {
        cfg.env_id = value;
      } else if (key == "agent") {
        cfg.agent = value;
      } else if (key == "epochs") {
        cfg.epochs = std::stoi(value);
      } else if (key == "steps_per_epoch" || key == "steps-per-epoch") {
        cfg.steps_per_epoch = std::stoi(value);
      } else if (key == "updates_per_epoch" || key == "updates-per-epoch") {
        cfg.updates_per_epoch = std::stoi(value);
      } else if (key == "eval_trials" || key == "eval-trials") {
        cfg.eval_trials = std::stoi(value);
      } else if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "batch_size" || key == "batch-size") {
        cfg.batch_size = std::stoi(value);
      } else if (key == "buffer_capacity" || key == "buffer-capacity") {
        cfg.buffer_capacity = std::stoull(value);
      } else if (key == "hidden") {
        cfg.hidden = parse_int_list(value);
      } else if (key == "policy_activation" || key == "policy-activation") {
        cfg.policy_activation = value;
      } else if (key == "q_activation" || key == "q-activation") {
        cfg.q_activation = value;
      } else if (key == "lr") {
        cfg.lr = std::stod(value);
      } else if (key == "gamma") {
        cfg.gamma = std::stod(value);
      } else if (key == "tau") {
        cfg.tau = std::stod(value);
      } else if (key == "init_alpha" || key == "init-alpha") {
        cfg.init_alpha = std::stod(value);
      } else if (key == "phi") {
        cfg.phi = std::stod(value);
      } else if (key == "beta0") {
        cfg.beta0 = std::stod(value);
      } else if (key == "schedule") {
        cfg.schedule = value;
      } else if (key == "delta") {
        cfg.delta = std::stod(value);
      } else if (key == "period") {
        cfg.period = std::stoi(value);
      } else if (key == "lambda_threshold" || key == "lambda-threshold") {
        cfg.lambda_threshold = std::stod(value);
      } else if (key == "bc_metric" || key == "bc-metric") {
        cfg.bc_metric = value;
      } else if (key == "guide_checkpoint" || key == "guide-checkpoint") {
        cfg.guide_checkpoint = value;
      } else if (key == "snapshot_fraction" || key == "snapshot-fraction") {
        cfg.snapshot_fraction = std::stod(value);
      } else if (key == "out") {
        cfg.out_dir = value;
      } else if (key == "timing") {
        cfg.timing = value == "true" || value == "1" || value == "on";
      } else {
        bad_key(origin, key);
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument(origin + ": bad value for '" + key + "': " +
                                  value);
    }
  }
  return cfg;
}

KvMap config_to_kv(const RunConfig& cfg) {
  KvMap kv;
  kv["env"] = cfg.env_id;
  kv["agent"] = cfg.agent;
  kv["epochs"] = std::to_string(cfg.epochs);
  kv["steps_per_epoch"] = std::to_string(cfg.steps_per_epoch);
  kv["updates_per_epoch"] = std::to_string(cfg.updates_per_epoch);
  kv["eval_trials"] = std::to_string(cfg.eval_trials);
  kv["seed"] = std::to_string(cfg.seed);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["buffer_capacity"] = std::to_string(cfg.buffer_capacity);
  kv["hidden"] = join_int_list(cfg.hidden);
  kv["policy_activation"] = cfg.policy_activation;
  kv["q_activation"] = cfg.q_activation;
  kv["lr"] = format_double(cfg.lr);
  kv["gamma"] = format_double(cfg.gamma);
  kv["tau"] = format_double(cfg.tau);
  kv["init_alpha"] = format_double(cfg.init_alpha);
  kv["phi"] = format_double(cfg.phi);
  kv["beta0"] = format_double(cfg.beta0);
  kv["schedule"] = cfg.schedule;
  kv["delta"] = format_double(cfg.delta);
  kv["period"] = std::to_string(cfg.period);
  kv["lambda_threshold"] = format_double(cfg.lambda_threshold);
  kv["bc_metric"] = cfg.bc_metric;
  kv["guide_checkpoint"] = cfg.guide_checkpoint;
  kv["snapshot_fraction"] = format_double(cfg.snapshot_fraction);
  kv["out"] = cfg.out_dir;
  kv["timing"] = cfg.timing ? "true" : "false";
  for (const auto& [k, v] : cfg.env_overrides) kv["env." + k] = format_double(v);
  return kv;
}

std::string config_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config_to_kv(cfg)) j[k] = v;
  return j.dump(2) + "\n";
}

void write_config_json(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for write");
  f << config_json(cfg);
}

std::vector<SuiteEntry> parse_suite(const std::filesystem::path& path,
                                    const RunConfig& base) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open suite " + path.string());
  KvMap shared;
  std::vector<std::pair<std::string, KvMap>> entries;  // label -> overrides
  std::vector<std::string> agents;
  std::string line;
  int lineno = 0;
  bool in_section = false;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(path.string() + ":" +
                                    std::to_string(lineno) + ": bad section");
      std::istringstream ss(line.substr(1, line.size() - 2));
      std::string word, agent, as, label;
      ss >> word >> agent;
      if (word != "agent" || agent.empty())
        throw std::invalid_argument(path.string() + ":" +
                                    std::to_string(lineno) +
                                    ": expected [agent <id> (as <label>)]");
      if (ss >> as) {
        if (as != "as" || !(ss >> label))
          throw std::invalid_argument(path.string() + ":" +
                                      std::to_string(lineno) + ": bad label");
      } else {
        label = agent;
      }
      entries.emplace_back(label, KvMap{{"agent", agent}});
      agents.push_back(agent);
      in_section = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (in_section)
      entries.back().second[key] = value;
    else
      shared[key] = value;
  }
  if (entries.empty())
    throw std::invalid_argument(path.string() + ": suite declares no agents");

  // seeds may appear at the top level or per entry
  std::vector<SuiteEntry> out;
  for (auto& [label, overrides] : entries) {
    KvMap merged = shared;
    for (const auto& [k, v] : overrides) merged[k] = v;
    std::vector<std::uint64_t> seeds;
    if (auto it = merged.find("seeds"); it != merged.end()) {
      std::istringstream ss(it->second);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!trim(item).empty()) seeds.push_back(std::stoull(trim(item)));
      merged.erase(it);
    }
    if (seeds.empty()) seeds.push_back(base.seed);
    for (std::uint64_t s : seeds) {
      SuiteEntry e;
      e.label = label;
      e.config = apply_kv(base, merged, path.string());
      e.config.seed = s;
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace rllg
