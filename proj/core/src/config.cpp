#include "cbflearn/config.hpp"

#include <cstdio>
#include <sstream>

namespace cbflearn {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_obstacles(const std::vector<Obstacle>& obstacles) {
  std::string out;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (i) out += "; ";
    out += fmt_double(obstacles[i].cx) + " " + fmt_double(obstacles[i].cy) + " " +
           fmt_double(obstacles[i].r);
  }
  return out;
}

std::vector<Obstacle> parse_obstacles(const std::string& text) {
  std::vector<Obstacle> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::stringstream ss(group);
    Obstacle o;
    if (!(ss >> o.cx >> o.cy >> o.r)) throw ConfigError("bad obstacle triple: " + group);
    out.push_back(o);
  }
  if (out.empty()) throw ConfigError("obstacle list is empty");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
    if (pos != value.size()) throw ConfigError("trailing junk");
    return v;
  } catch (const ConfigError&) {
    throw ConfigError("bad numeric value for " + key + ": " + value);
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + value);
  }
}

long parse_long(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  const long l = static_cast<long>(v);
  if (static_cast<double>(l) != v) throw ConfigError("expected integer for " + key);
  return l;
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ConfigMap config_map(const ScenarioConfig& cfg) {
  ConfigMap m;
  m["env.scenario"] = cfg.name;
  m["env.order"] = std::to_string(cfg.order);
  m["env.obstacles"] = fmt_obstacles(cfg.obstacles);
  m["env.start_x"] = fmt_double(cfg.start_x);
  m["env.start_y"] = fmt_double(cfg.start_y);
  m["env.start_theta"] = fmt_double(cfg.start_theta);
  m["env.goal_x"] = fmt_double(cfg.goal_x);
  m["env.goal_y"] = fmt_double(cfg.goal_y);
  m["env.goal_theta"] = fmt_double(cfg.goal_theta);
  m["env.jitter"] = fmt_double(cfg.jitter);
  m["env.d"] = fmt_double(cfg.d_penalty);
  m["env.b"] = fmt_double(cfg.b_penalty);
  m["env.s"] = fmt_double(cfg.step_penalty);
  m["env.gamma"] = fmt_double(cfg.gamma);
  m["env.u_max"] = fmt_double(cfg.u_max);
  m["env.tau_max"] = fmt_double(cfg.tau_max);
  m["env.dt"] = fmt_double(cfg.dt);
  m["env.T"] = std::to_string(cfg.steps_per_episode);
  m["env.M"] = std::to_string(cfg.episodes);
  m["env.goal_radius"] = fmt_double(cfg.goal_radius);
  m["safety.a1"] = fmt_double(cfg.a1);
  m["safety.lambda0"] = fmt_double(cfg.kappa_lambda0);
  m["safety.kappa_hidden"] = std::to_string(cfg.kappa_hidden);
  m["rl.batch"] = std::to_string(cfg.batch_size);
  m["rl.actor_lr"] = fmt_double(cfg.actor_lr);
  m["rl.critic_lr"] = fmt_double(cfg.critic_lr);
  m["rl.tau"] = fmt_double(cfg.target_tau);
  m["rl.noise_start"] = fmt_double(cfg.noise_start);
  m["rl.noise_end"] = fmt_double(cfg.noise_end);
  m["rl.buffer"] = std::to_string(cfg.buffer_capacity);
  m["rl.hidden1"] = std::to_string(cfg.hidden1);
  m["rl.hidden2"] = std::to_string(cfg.hidden2);
  m["baseline.alpha"] = fmt_double(cfg.baseline_alpha);
  m["baseline.gain"] = fmt_double(cfg.baseline_gain);
  return m;
}

void apply_overrides(ScenarioConfig& cfg, const ConfigMap& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key == "env.scenario") cfg.name = value;
    else if (key == "env.order") cfg.order = static_cast<int>(parse_long(key, value));
    else if (key == "env.obstacles") cfg.obstacles = parse_obstacles(value);
    else if (key == "env.start_x") cfg.start_x = parse_double(key, value);
    else if (key == "env.start_y") cfg.start_y = parse_double(key, value);
    else if (key == "env.start_theta") cfg.start_theta = parse_double(key, value);
    else if (key == "env.goal_x") cfg.goal_x = parse_double(key, value);
    else if (key == "env.goal_y") cfg.goal_y = parse_double(key, value);
    else if (key == "env.goal_theta") cfg.goal_theta = parse_double(key, value);
    else if (key == "env.jitter") cfg.jitter = parse_double(key, value);
    else if (key == "env.d") cfg.d_penalty = parse_double(key, value);
    else if (key == "env.b") cfg.b_penalty = parse_double(key, value);
    else if (key == "env.s") cfg.step_penalty = parse_double(key, value);
    else if (key == "env.gamma") cfg.gamma = parse_double(key, value);
    else if (key == "env.u_max") cfg.u_max = parse_double(key, value);
    else if (key == "env.tau_max") cfg.tau_max = parse_double(key, value);
    else if (key == "env.dt") cfg.dt = parse_double(key, value);
    else if (key == "env.T") cfg.steps_per_episode = static_cast<int>(parse_long(key, value));
    else if (key == "env.M") cfg.episodes = static_cast<int>(parse_long(key, value));
    else if (key == "env.goal_radius") cfg.goal_radius = parse_double(key, value);
    else if (key == "safety.a1") cfg.a1 = parse_double(key, value);
    else if (key == "safety.lambda0") cfg.kappa_lambda0 = parse_double(key, value);
    else if (key == "safety.kappa_hidden") cfg.kappa_hidden = static_cast<int>(parse_long(key, value));
    else if (key == "rl.batch") cfg.batch_size = static_cast<int>(parse_long(key, value));
    else if (key == "rl.actor_lr") cfg.actor_lr = parse_double(key, value);
    else if (key == "rl.critic_lr") cfg.critic_lr = parse_double(key, value);
    else if (key == "rl.tau") cfg.target_tau = parse_double(key, value);
    else if (key == "rl.noise_start") cfg.noise_start = parse_double(key, value);
    else if (key == "rl.noise_end") cfg.noise_end = parse_double(key, value);
    else if (key == "rl.buffer") cfg.buffer_capacity = static_cast<std::size_t>(parse_long(key, value));
    else if (key == "rl.hidden1") cfg.hidden1 = static_cast<int>(parse_long(key, value));
    else if (key == "rl.hidden2") cfg.hidden2 = static_cast<int>(parse_long(key, value));
    else if (key == "baseline.alpha") cfg.baseline_alpha = parse_double(key, value);
    else if (key == "baseline.gain") cfg.baseline_gain = parse_double(key, value);
    else throw ConfigError("unknown config key: " + key);
  }
  cfg.validate();
}

ScenarioConfig scenario_from_map(const ConfigMap& map) {
  ScenarioConfig cfg;
  cfg.obstacles.clear();
  apply_overrides(cfg, map);
  if (cfg.obstacles.empty() && map.find("env.obstacles") == map.end())
    throw ConfigError("scenario_from_map: missing env.obstacles");
  return cfg;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("bad section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section at line " + std::to_string(lineno));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    if (section.empty()) throw ConfigError("key outside a [section] at line " + std::to_string(lineno));
    out[section + "." + key] = value;
  }
  return out;
}

std::string serialize_config_text(const ConfigMap& map) {
  std::string out;
  std::string section;
  for (const auto& [key, value] : map) {
    const std::size_t dotpos = key.find('.');
    const std::string sec = dotpos == std::string::npos ? "" : key.substr(0, dotpos);
    const std::string name = dotpos == std::string::npos ? key : key.substr(dotpos + 1);
    if (sec != section) {
      if (!out.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + value + "\n";
  }
  return out;
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string toolkit_version() { return "0.1.0"; }

}  // namespace cbflearn
