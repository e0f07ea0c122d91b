#include "hingepo/generators.hpp"

#include <stdexcept>

#include "hingepo/rng.hpp"

namespace hingepo {

namespace {

Mdp blank(int S, int A, double gamma) {
  Mdp m;
  m.n_states = S;
  m.n_actions = A;
  m.gamma = gamma;
  m.mu.assign(S, 0.0);
  m.reward.assign(static_cast<std::size_t>(S) * A, 0.0);
  m.transition.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  return m;
}

void set_p(Mdp& m, int s, int a, int s2, double v) {
  m.transition[static_cast<std::size_t>(m.idx(s, a)) * m.n_states + s2] = v;
}

}  // namespace

Mdp make_chain(int n, double gamma) {
  if (n < 1) throw std::invalid_argument("chain size must be >= 1");
  Mdp m = blank(n, 2, gamma);
  m.mu[0] = 1.0;
  for (int s = 0; s < n; ++s) {
    int left = s > 0 ? s - 1 : 0;
    int right = s < n - 1 ? s + 1 : n - 1;
    set_p(m, s, 0, left, 1.0);
    set_p(m, s, 1, right, 1.0);
    if (s == n - 1) {
      m.reward[m.idx(s, 0)] = 1.0;
      m.reward[m.idx(s, 1)] = 1.0;
    }
  }
  m.finalize();
  return m;
}

Mdp make_gridworld(int w, int h, double gamma) {
  if (w < 1 || h < 1) throw std::invalid_argument("grid sides must be >= 1");
  Mdp m = blank(w * h, 4, gamma);
  m.mu[0] = 1.0;
  int goal = (h - 1) * w + (w - 1);
  const int dx[4] = {0, 0, -1, 1};  // up, down, left, right
  const int dy[4] = {-1, 1, 0, 0};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int s = y * w + x;
      for (int a = 0; a < 4; ++a) {
        int nx = x + dx[a], ny = y + dy[a];
        if (nx < 0 || nx >= w) nx = x;
        if (ny < 0 || ny >= h) ny = y;
        set_p(m, s, a, ny * w + nx, 1.0);
        if (s == goal) m.reward[m.idx(s, a)] = 1.0;
      }
    }
  m.finalize();
  return m;
}

Mdp make_random(int n_states, int n_actions, double gamma,
                std::uint64_t seed) {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("random MDP sizes must be >= 1");
  Mdp m = blank(n_states, n_actions, gamma);
  Rng rng(seed);
  Rng trans = rng.split(1), rew = rng.split(2), start = rng.split(3);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      auto row = trans.dirichlet_flat(n_states);
      for (int s2 = 0; s2 < n_states; ++s2) set_p(m, s, a, s2, row[s2]);
      m.reward[m.idx(s, a)] = rew.next_double();
    }
  m.mu = start.dirichlet_flat(n_states);
  m.finalize();
  return m;
}

}  // namespace hingepo
