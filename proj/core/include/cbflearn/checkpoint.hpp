#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "cbflearn/ddpg.hpp"

namespace cbflearn {

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Versioned structured-text snapshot: every parameter array (actor, critic,
// targets, kappa net, optimizer moments), the resolved config and its hash,
// RNG state, and counters. Values are written with 17 significant digits so a
// round trip restores doubles exactly.
void save_checkpoint(const std::string& path, const Trainer& trainer);

struct LoadedCheckpoint {
  std::unique_ptr<Trainer> trainer;
  std::uint64_t config_hash = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace cbflearn
