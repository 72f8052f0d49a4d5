#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "diffplan/planner.hpp"

namespace diffplan::doorkey {

enum class Color { Red, Blue };
enum class DoorStatus { Open, Closed, Locked };

struct Cell {
  enum class Kind { Empty, Wall, Door, Key, Goal, Trap };
  Kind kind = Kind::Empty;
  Color color = Color::Red;           // doors and keys
  DoorStatus status = DoorStatus::Open;  // doors only
};

enum class Action { TurnLeft = 0, TurnRight = 1, Forward = 2, Pickup = 3, Toggle = 4 };
constexpr int kNumActions = 5;

enum class TaskVariant { ReachGoal, KeyRetrieval, RedDoorReaching, SafeGoalReaching };

std::string to_string(TaskVariant v);
std::optional<TaskVariant> task_variant_from_string(std::string_view name);

struct EnvConfig {
  int size = 8;  // >= 6
  TaskVariant variant = TaskVariant::ReachGoal;
  std::uint64_t layout_seed = 0;

  int max_steps() const { return 10 * size * size; }
};

/// Flat 15-feature observation, everything in [-1, 1]:
/// [0..1] agent x,y / (size-1); [2..5] heading one-hot (E,S,W,N);
/// [6] carrying red key; [7] red door open; [8] blue door open;
/// [9..14] key, blue-door, goal offsets (dx, dy) / (size-1).
using Observation = Eigen::Matrix<double, 15, 1>;

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  planner::SymbolicState symbols;
};

/// Two-route DoorKey world: a vertical wall with an open blue door and a
/// locked red door; a red key and the agent start on the left, the goal on
/// the right. The safe variant places a trap on the cell behind the blue
/// door. Deterministic for a given (config, seed).
class DoorKeyEnv {
 public:
  explicit DoorKeyEnv(const EnvConfig& config);

  std::pair<Observation, planner::SymbolicState> reset();
  StepResult step(Action action);

  bool done() const { return done_; }
  int step_count() const { return step_count_; }
  const EnvConfig& config() const { return config_; }

  planner::SymbolicState symbolic_state() const;
  Observation observation() const;

  /// Shortest-path cells to a subtask's target (open doors passable, locked
  /// doors only beyond the key, traps impassable). kUnreachable when walled
  /// off. Subtasks: go_red_key, go_open_red_door, go_blue_door, go_to_goal.
  int distance_to(const std::string& subtask_action) const;

  struct PrimitiveResult {
    int steps = 0;
    bool success = false;
  };
  /// Deterministic scripted controller for one reusable primitive; runs
  /// until the primitive's post-condition holds or 4*size low-level steps
  /// elapse. The episode keeps advancing underneath it.
  PrimitiveResult run_primitive(const std::string& name);

  /// One char per cell: '#' wall, '.' empty, 'K' key, 'R'/'r' red door
  /// (locked/open), 'B'/'b' blue door (closed/open), 'G' goal, 'T' trap,
  /// '>','v','<','^' agent heading.
  std::string render_ascii() const;

  // Layout introspection (tests and controllers).
  struct Pos {
    int x = 0, y = 0;
    bool operator==(const Pos& o) const { return x == o.x && y == o.y; }
  };
  const Cell& cell(Pos p) const { return grid_[p.y * config_.size + p.x]; }
  Pos agent_pos() const { return agent_; }
  int agent_dir() const { return dir_; }  // 0=E,1=S,2=W,3=N
  bool carrying_key() const { return carrying_; }
  Pos key_pos() const { return key_; }
  Pos goal_pos() const { return goal_; }
  Pos red_door_pos() const { return red_door_; }
  Pos blue_door_pos() const { return blue_door_; }
  int wall_column() const { return wall_col_; }

 private:
  Cell& cell_mut(Pos p) { return grid_[p.y * config_.size + p.x]; }
  bool in_bounds(Pos p) const;
  bool walkable(Pos p) const;  // for agent movement
  Pos front_cell() const;
  void build_layout();
  std::vector<int> bfs_distances(Pos from, bool red_door_open) const;

  EnvConfig config_;
  std::vector<Cell> grid_;
  Pos agent_{}, key_{}, goal_{}, red_door_{}, blue_door_{};
  int wall_col_ = 0;
  int dir_ = 0;
  bool carrying_ = false;
  bool key_on_grid_ = true;
  int step_count_ = 0;
  bool done_ = false;
  bool trapped_ = false;
  bool reached_goal_ = false;
};

/// Episode success per task variant: reach_goal -> goal reached;
/// key_retrieval -> carrying the red key; red_door_reaching -> red door
/// opened; safe_goal_reaching -> goal reached without stepping on the trap.
bool variant_success(const DoorKeyEnv& env, TaskVariant variant);

/// The four primitive action names in the order used by the planner rules.
const std::vector<std::string>& primitive_names();

}  // namespace diffplan::doorkey
