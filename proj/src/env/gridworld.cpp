#include "plasticity/env/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <sstream>

namespace plasticity::env {

namespace {

bool in_bounds(Position p) { return p.row >= 0 && p.row < kGridSize && p.col >= 0 && p.col < kGridSize; }

char to_char(Cell c) {
  switch (c) {
    case Cell::Empty: return '.';
    case Cell::Wall: return '#';
    case Cell::Blue: return 'B';
    case Cell::Red: return 'R';
  }
  return '?';
}

}  // namespace

Position move(Position p, Action a) {
  switch (a) {
    case Action::Up: return {p.row - 1, p.col};
    case Action::Down: return {p.row + 1, p.col};
    case Action::Left: return {p.row, p.col - 1};
    case Action::Right: return {p.row, p.col + 1};
  }
  return p;
}

std::vector<Position> reachable_cells(const Grid& grid, Position from) {
  std::vector<Position> out;
  if (!in_bounds(from) || grid[from.index()] == Cell::Wall) return out;
  std::array<bool, kCells> seen{};
  std::deque<Position> queue{from};
  seen[from.index()] = true;
  while (!queue.empty()) {
    Position p = queue.front();
    queue.pop_front();
    out.push_back(p);
    for (int a = 0; a < kNumActions; ++a) {
      Position q = move(p, static_cast<Action>(a));
      if (!in_bounds(q) || seen[q.index()] || grid[q.index()] == Cell::Wall) continue;
      seen[q.index()] = true;
      queue.push_back(q);
    }
  }
  return out;
}

void encode_observation(const Grid& grid, Position agent, Real* out) {
  std::fill(out, out + kObservationSize, Real(0));
  for (int c = 0; c < kCells; ++c) {
    if (c == agent.index()) continue;
    out[c * kChannels + static_cast<int>(grid[c])] = Real(1);
  }
}

GridworldInstance::GridworldInstance(std::uint64_t seed, const Grid& layout, const EnvParams& params)
    : seed_(seed), params_(params), layout_(layout), grid_(layout) {
  initial_blue_ = static_cast<int>(std::count(layout_.begin(), layout_.end(), Cell::Blue));
  if (layout_[kCenter.index()] != Cell::Empty) {
    throw UsageError("gridworld layout: center cell must be empty");
  }
  if (params_.episode_length < 1) throw UsageError("gridworld: episode_length must be >= 1");
  reset();
}

GridworldInstance GridworldInstance::from_ascii(const std::string& text, const EnvParams& params,
                                                std::uint64_t seed) {
  std::istringstream in(text);
  std::string line;
  Grid grid;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= kGridSize || static_cast<int>(line.size()) != kGridSize) {
      throw UsageError("gridworld ascii: expected 11 lines of 11 characters");
    }
    for (int col = 0; col < kGridSize; ++col) {
      Cell c;
      switch (line[col]) {
        case '.': c = Cell::Empty; break;
        case '#': c = Cell::Wall; break;
        case 'B': c = Cell::Blue; break;
        case 'R': c = Cell::Red; break;
        case 'A':
          if (!(Position{row, col} == kCenter)) throw UsageError("gridworld ascii: agent must start at the center");
          c = Cell::Empty;
          break;
        default: throw UsageError(std::string("gridworld ascii: unknown cell character '") + line[col] + "'");
      }
      grid[Position{row, col}.index()] = c;
    }
    ++row;
  }
  if (row != kGridSize) throw UsageError("gridworld ascii: expected 11 lines of 11 characters");
  EnvParams p = params;
  p.n_blue = static_cast<int>(std::count(grid.begin(), grid.end(), Cell::Blue));
  p.n_red = static_cast<int>(std::count(grid.begin(), grid.end(), Cell::Red));
  return GridworldInstance(seed, grid, p);
}

Observation GridworldInstance::reset() {
  grid_ = layout_;
  agent_ = kCenter;
  step_count_ = 0;
  done_ = false;
  blue_remaining_ = count(Cell::Blue);
  return observe();
}

StepResult GridworldInstance::step(Action action) {
  if (done_) throw UsageError("gridworld: step called on a finished episode; call reset()");
  StepResult r;
  Position next = move(agent_, action);
  if (in_bounds(next) && grid_[next.index()] != Cell::Wall) {
    agent_ = next;
    Cell& c = grid_[next.index()];
    if (c == Cell::Blue) {
      r.reward = 1.0;
      --blue_remaining_;
      c = Cell::Empty;
    } else if (c == Cell::Red) {
      r.reward = -1.0;
      c = Cell::Empty;
    }
  }
  ++step_count_;
  done_ = step_count_ >= params_.episode_length ||
          (params_.end_when_blue_collected && blue_remaining_ == 0 && initial_blue_ > 0);
  r.done = done_;
  r.observation = observe();
  return r;
}

Observation GridworldInstance::observe() const {
  Observation obs(kObservationSize);
  encode_observation(grid_, agent_, obs.data());
  return obs;
}

int GridworldInstance::count(Cell c) const {
  return static_cast<int>(std::count(grid_.begin(), grid_.end(), c));
}

std::string GridworldInstance::to_ascii(bool show_agent) const {
  std::string s;
  s.reserve(kCells + kGridSize);
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      Position p{r, c};
      s += (show_agent && p == agent_) ? 'A' : to_char(grid_[p.index()]);
    }
    s += '\n';
  }
  return s;
}

GridworldInstance sample_instance(std::uint64_t seed, const EnvParams& params) {
  if (params.n_blue < 0 || params.n_red < 0) throw UsageError("gridworld: jewel counts must be >= 0");
  if (params.wall_density < 0.0 || params.wall_density >= 1.0) {
    throw UsageError("gridworld: wall_density must be in [0, 1)");
  }
  const int n_jewels = params.n_blue + params.n_red;
  if (n_jewels > kCells - 1) throw UsageError("gridworld: too many jewels for the grid");
  const int n_walls = static_cast<int>(std::lround(params.wall_density * kCells));

  Rng rng(seed);
  std::vector<int> free_cells(kCells);
  std::iota(free_cells.begin(), free_cells.end(), 0);
  free_cells.erase(free_cells.begin() + kCenter.index());

  for (;;) {
    Grid grid;
    grid.fill(Cell::Empty);
    std::shuffle(free_cells.begin(), free_cells.end(), rng);
    for (int i = 0; i < n_walls; ++i) grid[free_cells[i]] = Cell::Wall;

    std::vector<Position> reach = reachable_cells(grid, kCenter);
    reach.erase(reach.begin());  // the center itself stays empty
    if (static_cast<int>(reach.size()) < n_jewels) continue;
    std::shuffle(reach.begin(), reach.end(), rng);
    for (int i = 0; i < n_jewels; ++i) grid[reach[i].index()] = i < params.n_blue ? Cell::Blue : Cell::Red;
    return GridworldInstance(seed, grid, params);
  }
}

}  // namespace plasticity::env
