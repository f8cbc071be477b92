#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "vholab/agents/agent.hpp"
#include "vholab/agents/ppo.hpp"
#include "vholab/agents/rainbow.hpp"
#include "vholab/agents/sac.hpp"
#include "vholab/agents/trpo.hpp"
#include "vholab/errors.hpp"
#include "vholab/io/config.hpp"

namespace vholab {

inline std::unique_ptr<Agent> make_agent(const std::string& kind,
                                         const RunConfig& cfg,
                                         std::uint64_t seed) {
  if (kind == "ppo") return std::make_unique<PpoAgent>(cfg.ppo, seed);
  if (kind == "trpo") return std::make_unique<TrpoAgent>(cfg.trpo, seed);
  if (kind == "sac") return std::make_unique<SacAgent>(cfg.sac, seed);
  if (kind == "rainbow") return std::make_unique<RainbowAgent>(cfg.rainbow, seed);
  throw ConfigError("unknown agent kind: " + kind);
}

inline std::unique_ptr<Agent> make_agent(const RunConfig& cfg,
                                         std::uint64_t seed) {
  return make_agent(cfg.agent, cfg, seed);
}

}  // namespace vholab
