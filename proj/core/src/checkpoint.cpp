#include "cbflearn/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "cbflearn/config.hpp"

namespace cbflearn {

namespace {

constexpr const char* kMagic = "cbflearn-checkpoint v1";

struct TensorRef {
  std::string name;
  Matrix* tensor;
};

std::vector<TensorRef> tensor_table(Trainer& t) {
  std::vector<TensorRef> refs;
  auto add_group = [&refs](const std::string& prefix, const std::vector<Matrix*>& params) {
    for (std::size_t i = 0; i < params.size(); ++i)
      refs.push_back({prefix + "." + std::to_string(i), params[i]});
  };
  add_group("actor", t.actor().params());
  add_group("actor_target", t.actor_target().params());
  add_group("critic", t.critic().params());
  add_group("critic_target", t.critic_target().params());
  add_group("kappa", t.kappa_net().params());
  auto add_adam = [&refs](const std::string& prefix, Adam& adam) {
    for (std::size_t i = 0; i < adam.m.size(); ++i)
      refs.push_back({prefix + "_m." + std::to_string(i), &adam.m[i]});
    for (std::size_t i = 0; i < adam.v.size(); ++i)
      refs.push_back({prefix + "_v." + std::to_string(i), &adam.v[i]});
  };
  add_adam("adam_actor", t.actor_adam());
  add_adam("adam_critic", t.critic_adam());
  add_adam("adam_kappa", t.kappa_adam());
  return refs;
}

}  // namespace

void save_checkpoint(const std::string& path, const Trainer& trainer) {
  Trainer& t = const_cast<Trainer&>(trainer);  // read-only traversal of parameter tables

  const ConfigMap cfg_map = config_map(trainer.config());
  const std::string cfg_text = serialize_config_text(cfg_map);
  const std::uint64_t cfg_hash = fnv1a_hash(cfg_text);

  std::ofstream out(path);
  if (!out) throw CheckpointError("save_checkpoint: cannot open " + path);
  out << std::setprecision(17);

  out << kMagic << "\n";
  out << "config_hash " << std::hex << cfg_hash << std::dec << "\n";
  out << "episode " << trainer.episode() << "\n";
  out << "global_step " << trainer.global_step() << "\n";
  out << "adam_steps " << t.actor_adam().step_count << ' ' << t.critic_adam().step_count << ' '
      << t.kappa_adam().step_count << "\n";
  out << "rng " << t.rng() << "\n";

  std::size_t cfg_lines = 0;
  for (char c : cfg_text)
    if (c == '\n') ++cfg_lines;
  out << "config_lines " << cfg_lines << "\n" << cfg_text;

  for (const TensorRef& ref : tensor_table(t)) {
    const Matrix& m = *ref.tensor;
    out << "tensor " << ref.name << ' ' << m.rows() << ' ' << m.cols() << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out << ' ';
        out << m(i, j);
      }
      out << "\n";
    }
  }
  out << "end\n";
  if (!out) throw CheckpointError("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("load_checkpoint: cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw CheckpointError("load_checkpoint: bad magic in " + path);

  auto expect_key = [&in](const std::string& key) {
    std::string k;
    if (!(in >> k) || k != key) throw CheckpointError("load_checkpoint: expected " + key);
  };

  LoadedCheckpoint loaded;
  expect_key("config_hash");
  in >> std::hex >> loaded.config_hash >> std::dec;
  long episode = 0, global_step = 0;
  expect_key("episode");
  in >> episode;
  expect_key("global_step");
  in >> global_step;
  long adam_actor_steps = 0, adam_critic_steps = 0, adam_kappa_steps = 0;
  expect_key("adam_steps");
  in >> adam_actor_steps >> adam_critic_steps >> adam_kappa_steps;
  expect_key("rng");
  Rng rng;
  in >> rng;
  expect_key("config_lines");
  std::size_t cfg_lines = 0;
  in >> cfg_lines;
  std::getline(in, line);  // finish the count line
  std::string cfg_text;
  for (std::size_t i = 0; i < cfg_lines; ++i) {
    if (!std::getline(in, line)) throw CheckpointError("load_checkpoint: truncated config block");
    cfg_text += line + "\n";
  }
  if (fnv1a_hash(cfg_text) != loaded.config_hash)
    throw CheckpointError("load_checkpoint: config hash mismatch");

  const ScenarioConfig cfg = scenario_from_map(parse_config_text(cfg_text));
  loaded.trainer = std::make_unique<Trainer>(cfg, 0);
  Trainer& t = *loaded.trainer;

  std::vector<TensorRef> refs = tensor_table(t);
  std::size_t next_ref = 0;
  std::string tok;
  while (in >> tok) {
    if (tok == "end") break;
    if (tok != "tensor") throw CheckpointError("load_checkpoint: expected tensor, got " + tok);
    std::string name;
    std::size_t r = 0, c = 0;
    if (!(in >> name >> r >> c)) throw CheckpointError("load_checkpoint: bad tensor header");
    if (next_ref >= refs.size() || refs[next_ref].name != name)
      throw CheckpointError("load_checkpoint: unexpected tensor " + name);
    Matrix& m = *refs[next_ref].tensor;
    if (m.rows() != r || m.cols() != c)
      throw CheckpointError("load_checkpoint: shape mismatch for " + name);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!(in >> m[i])) throw CheckpointError("load_checkpoint: truncated tensor " + name);
    ++next_ref;
  }
  if (tok != "end" || next_ref != refs.size())
    throw CheckpointError("load_checkpoint: incomplete checkpoint " + path);

  t.actor_adam().step_count = adam_actor_steps;
  t.critic_adam().step_count = adam_critic_steps;
  t.kappa_adam().step_count = adam_kappa_steps;
  t.rng() = rng;
  t.set_counters(episode, global_step);
  return loaded;
}

}  // namespace cbflearn
