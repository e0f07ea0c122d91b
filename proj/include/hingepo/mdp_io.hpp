#pragma once

#include <string>

#include "hingepo/mdp.hpp"

namespace hingepo {

// JSON keys: n_states, n_actions, gamma, mu, reward (2-D), transition (3-D).
// Unknown keys are rejected; errors name the offending key and index.
Mdp load_mdp(const std::string& path);
Mdp mdp_from_json_text(const std::string& text);
void save_mdp(const Mdp& mdp, const std::string& path);
std::string mdp_to_json_text(const Mdp& mdp);

}  // namespace hingepo
