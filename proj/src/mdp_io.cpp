#include "hingepo/mdp_io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hingepo {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded())
    throw std::invalid_argument("MDP file is not valid JSON");
  if (!j.is_object()) throw std::invalid_argument("MDP JSON must be an object");
  return j;
}

double number_at(const json& j, const char* key) {
  if (!j.contains(key))
    throw std::invalid_argument(std::string("missing key '") + key + "'");
  if (!j[key].is_number())
    throw std::invalid_argument(std::string("key '") + key +
                                "' must be a number");
  return j[key].get<double>();
}

int int_at(const json& j, const char* key) {
  double v = number_at(j, key);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument(std::string("key '") + key +
                                "' must be an integer");
  return i;
}

}  // namespace

Mdp mdp_from_json_text(const std::string& text) {
  json j = parse(text);
  static const char* known[] = {"n_states", "n_actions", "gamma",
                                "mu",       "reward",    "transition"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok)
      throw std::invalid_argument("unknown key '" + it.key() +
                                  "' in MDP JSON");
  }

  Mdp m;
  m.n_states = int_at(j, "n_states");
  m.n_actions = int_at(j, "n_actions");
  m.gamma = number_at(j, "gamma");
  if (m.n_states < 1) throw std::invalid_argument("n_states must be >= 1");
  if (m.n_actions < 1) throw std::invalid_argument("n_actions must be >= 1");
  const int S = m.n_states, A = m.n_actions;

  const json& mu = j.contains("mu") ? j["mu"] : json();
  if (!mu.is_array() || static_cast<int>(mu.size()) != S)
    throw std::invalid_argument("mu must be an array of length n_states");
  for (int s = 0; s < S; ++s) {
    if (!mu[s].is_number())
      throw std::invalid_argument("mu[" + std::to_string(s) +
                                  "] must be a number");
    m.mu.push_back(mu[s].get<double>());
  }

  const json& rw = j.contains("reward") ? j["reward"] : json();
  if (!rw.is_array() || static_cast<int>(rw.size()) != S)
    throw std::invalid_argument("reward must have n_states rows");
  for (int s = 0; s < S; ++s) {
    if (!rw[s].is_array() || static_cast<int>(rw[s].size()) != A)
      throw std::invalid_argument("reward[" + std::to_string(s) +
                                  "] must have n_actions entries");
    for (int a = 0; a < A; ++a) {
      if (!rw[s][a].is_number())
        throw std::invalid_argument("reward[" + std::to_string(s) + "][" +
                                    std::to_string(a) + "] must be a number");
      m.reward.push_back(rw[s][a].get<double>());
    }
  }

  const json& tr = j.contains("transition") ? j["transition"] : json();
  if (!tr.is_array() || static_cast<int>(tr.size()) != S)
    throw std::invalid_argument("transition must have n_states rows");
  for (int s = 0; s < S; ++s) {
    if (!tr[s].is_array() || static_cast<int>(tr[s].size()) != A)
      throw std::invalid_argument("transition[" + std::to_string(s) +
                                  "] must have n_actions rows");
    for (int a = 0; a < A; ++a) {
      const json& row = tr[s][a];
      if (!row.is_array() || static_cast<int>(row.size()) != S)
        throw std::invalid_argument(
            "transition[" + std::to_string(s) + "][" + std::to_string(a) +
            "] must have n_states entries");
      for (int s2 = 0; s2 < S; ++s2) {
        if (!row[s2].is_number())
          throw std::invalid_argument(
              "transition[" + std::to_string(s) + "][" + std::to_string(a) +
              "][" + std::to_string(s2) + "] must be a number");
        m.transition.push_back(row[s2].get<double>());
      }
    }
  }

  m.finalize();
  return m;
}

Mdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open MDP file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return mdp_from_json_text(buf.str());
}

std::string mdp_to_json_text(const Mdp& m) {
  json j;
  j["n_states"] = m.n_states;
  j["n_actions"] = m.n_actions;
  j["gamma"] = m.gamma;
  j["mu"] = m.mu;
  json rw = json::array(), tr = json::array();
  for (int s = 0; s < m.n_states; ++s) {
    json row = json::array();
    for (int a = 0; a < m.n_actions; ++a) row.push_back(m.r(s, a));
    rw.push_back(row);
    json trow = json::array();
    for (int a = 0; a < m.n_actions; ++a) {
      json dist = json::array();
      for (int s2 = 0; s2 < m.n_states; ++s2) dist.push_back(m.p(s, a, s2));
      trow.push_back(dist);
    }
    tr.push_back(trow);
  }
  j["reward"] = rw;
  j["transition"] = tr;
  return j.dump(2) + "\n";
}

void save_mdp(const Mdp& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write MDP file: " + path);
  out << mdp_to_json_text(m);
}

}  // namespace hingepo
