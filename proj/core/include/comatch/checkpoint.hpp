#pragma once

#include <string>

#include "comatch/trainer.hpp"

namespace comatch {

struct Checkpoint {
  TrainState state;
  HyperParams hyper;
};

/// Writes the full training state as a self-describing JSON container.
/// Parameter arrays are keyed "<module>.<layer>.<weight|bias>" with explicit
/// shapes; doubles round-trip exactly.
void save_checkpoint(const TrainState& state, const HyperParams& hyper,
                     const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace comatch
