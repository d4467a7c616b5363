#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "plasticity/nn/tensor.hpp"

namespace plasticity::env {

inline constexpr int kGridSize = 11;
inline constexpr int kCells = kGridSize * kGridSize;
inline constexpr int kChannels = 4;
inline constexpr int kObservationSize = kCells * kChannels;
inline constexpr int kNumActions = 4;

/// Cell types double as observation channel indices: [EMPTY, WALL, BLUE, RED].
enum class Cell : std::uint8_t { Empty = 0, Wall = 1, Blue = 2, Red = 3 };

enum class Action : int { Up = 0, Down = 1, Left = 2, Right = 3 };

struct Position {
  int row = 0;
  int col = 0;
  int index() const { return row * kGridSize + col; }
  friend bool operator==(const Position&, const Position&) = default;
};

inline constexpr Position kCenter{kGridSize / 2, kGridSize / 2};

using Grid = std::array<Cell, kCells>;

/// Flattened 11x11x4 one-hot observation, cell-major: entry (cell * 4 + channel).
/// The agent's cell is encoded as all four channels zero.
using Observation = nn::RowVector<Real>;

struct EnvParams {
  int n_blue = 4;
  int n_red = 2;
  double wall_density = 0.15;
  int episode_length = 100;
  bool end_when_blue_collected = true;

  friend bool operator==(const EnvParams&, const EnvParams&) = default;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

/// One sampled jewel-collection maze. Dynamics are deterministic; the only randomness is
/// the layout, which is a pure function of the seed.
class GridworldInstance {
 public:
  GridworldInstance(std::uint64_t seed, const Grid& layout, const EnvParams& params);

  /// Parses the 11-line ASCII layout format ('.' empty, '#' wall, 'B' blue, 'R' red,
  /// 'A' agent; the agent, if present, must be at the center).
  static GridworldInstance from_ascii(const std::string& text, const EnvParams& params = {},
                                      std::uint64_t seed = 0);

  Observation reset();
  StepResult step(Action action);
  Observation observe() const;

  /// Writes the current state as 11 lines of 11 characters.
  std::string to_ascii(bool show_agent = true) const;

  const Grid& layout() const { return layout_; }
  const Grid& grid() const { return grid_; }
  Position agent() const { return agent_; }
  int step_count() const { return step_count_; }
  bool done() const { return done_; }
  std::uint64_t seed() const { return seed_; }
  const EnvParams& params() const { return params_; }
  int blue_remaining() const { return blue_remaining_; }
  int count(Cell c) const;

 private:
  std::uint64_t seed_;
  EnvParams params_;
  Grid layout_;
  Grid grid_;
  Position agent_ = kCenter;
  int step_count_ = 0;
  int blue_remaining_ = 0;
  int initial_blue_ = 0;
  bool done_ = false;
};

/// Deterministic layout sampler: walls at the configured density, then jewels on cells
/// reachable from the center. Layouts with too few reachable cells are redrawn.
GridworldInstance sample_instance(std::uint64_t seed, const EnvParams& params = {});

/// Cells reachable from `from` by 4-neighbour moves that avoid walls (includes `from`).
std::vector<Position> reachable_cells(const Grid& grid, Position from);

/// Fills `out` (length kObservationSize) with the one-hot encoding of `grid` with the agent at `agent`.
void encode_observation(const Grid& grid, Position agent, Real* out);

Position move(Position p, Action a);

}  // namespace plasticity::env
