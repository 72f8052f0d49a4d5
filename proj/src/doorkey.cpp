#include "diffplan/doorkey.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "diffplan/rng.hpp"

namespace diffplan::doorkey {

namespace {

// Heading order: 0=E, 1=S, 2=W, 3=N.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};
constexpr int kUnreachable = planner::SymbolicState::kUnreachable;

/// Distance to a target cell given a field over passable cells: the target
/// itself may be blocked (key, closed door), in which case it costs one step
/// from its nearest reachable neighbour.
int cell_distance(const std::vector<int>& field, int n, DoorKeyEnv::Pos target,
                  bool target_passable) {
  if (target_passable && field[target.y * n + target.x] >= 0)
    return field[target.y * n + target.x];
  int best = -1;
  for (int d = 0; d < 4; ++d) {
    const int x = target.x + kDx[d], y = target.y + kDy[d];
    if (x < 0 || y < 0 || x >= n || y >= n) continue;
    const int v = field[y * n + x];
    if (v >= 0 && (best < 0 || v + 1 < best)) best = v + 1;
  }
  return best;
}

}  // namespace

std::string to_string(TaskVariant v) {
  switch (v) {
    case TaskVariant::ReachGoal: return "reach_goal";
    case TaskVariant::KeyRetrieval: return "key_retrieval";
    case TaskVariant::RedDoorReaching: return "red_door_reaching";
    case TaskVariant::SafeGoalReaching: return "safe_goal_reaching";
  }
  return "?";
}

std::optional<TaskVariant> task_variant_from_string(std::string_view name) {
  if (name == "reach_goal") return TaskVariant::ReachGoal;
  if (name == "key_retrieval") return TaskVariant::KeyRetrieval;
  if (name == "red_door_reaching") return TaskVariant::RedDoorReaching;
  if (name == "safe_goal_reaching") return TaskVariant::SafeGoalReaching;
  return std::nullopt;
}

const std::vector<std::string>& primitive_names() {
  static const std::vector<std::string> names = {
      "go_red_key", "go_open_red_door", "go_blue_door", "go_to_goal"};
  return names;
}

DoorKeyEnv::DoorKeyEnv(const EnvConfig& config) : config_(config) {
  if (config_.size < 6)
    throw std::invalid_argument("layout infeasible for size < 6");
  reset();
}

bool DoorKeyEnv::in_bounds(Pos p) const {
  return p.x >= 0 && p.y >= 0 && p.x < config_.size && p.y < config_.size;
}

bool DoorKeyEnv::walkable(Pos p) const {
  if (!in_bounds(p)) return false;
  const Cell& c = cell(p);
  switch (c.kind) {
    case Cell::Kind::Empty:
    case Cell::Kind::Goal:
    case Cell::Kind::Trap:
      return true;
    case Cell::Kind::Door:
      return c.status == DoorStatus::Open;
    case Cell::Kind::Wall:
    case Cell::Kind::Key:
      return false;
  }
  return false;
}

DoorKeyEnv::Pos DoorKeyEnv::front_cell() const {
  return Pos{agent_.x + kDx[dir_], agent_.y + kDy[dir_]};
}

void DoorKeyEnv::build_layout() {
  const int n = config_.size;
  grid_.assign(static_cast<std::size_t>(n) * n, Cell{});
  for (int x = 0; x < n; ++x) {
    cell_mut({x, 0}).kind = Cell::Kind::Wall;
    cell_mut({x, n - 1}).kind = Cell::Kind::Wall;
  }
  for (int y = 0; y < n; ++y) {
    cell_mut({0, y}).kind = Cell::Kind::Wall;
    cell_mut({n - 1, y}).kind = Cell::Kind::Wall;
  }

  wall_col_ = (n + 1) / 2;
  for (int y = 1; y < n - 1; ++y) cell_mut({wall_col_, y}).kind = Cell::Kind::Wall;

  blue_door_ = {wall_col_, n / 3};
  red_door_ = {wall_col_, 2 * n / 3};
  cell_mut(blue_door_) = Cell{Cell::Kind::Door, Color::Blue, DoorStatus::Open};
  cell_mut(red_door_) = Cell{Cell::Kind::Door, Color::Red, DoorStatus::Locked};

  if (config_.variant == TaskVariant::SafeGoalReaching) {
    cell_mut({wall_col_ + 1, blue_door_.y}).kind = Cell::Kind::Trap;
  }

  Pcg32 rng(config_.layout_seed,
            static_cast<std::uint64_t>(config_.size) * 8 +
                static_cast<std::uint64_t>(config_.variant));
  auto sample_empty = [&](int x_lo, int x_hi) {
    for (;;) {
      Pos p{x_lo + static_cast<int>(rng.next_below(x_hi - x_lo + 1)),
            1 + static_cast<int>(rng.next_below(config_.size - 2))};
      if (cell(p).kind == Cell::Kind::Empty) return p;
    }
  };
  // The key is a solid object; keep it off the single approach cells in
  // front of the doors so it can never wall off a route.
  const Pos blue_approach{wall_col_ - 1, blue_door_.y};
  const Pos red_approach{wall_col_ - 1, red_door_.y};
  do {
    key_ = sample_empty(1, wall_col_ - 1);
  } while (key_ == blue_approach || key_ == red_approach);
  cell_mut(key_) = Cell{Cell::Kind::Key, Color::Red, DoorStatus::Open};
  agent_ = sample_empty(1, wall_col_ - 1);
  dir_ = static_cast<int>(rng.next_below(4));
  goal_ = sample_empty(wall_col_ + 1, config_.size - 2);
  cell_mut(goal_).kind = Cell::Kind::Goal;
}

std::pair<Observation, planner::SymbolicState> DoorKeyEnv::reset() {
  build_layout();
  carrying_ = false;
  key_on_grid_ = true;
  step_count_ = 0;
  done_ = false;
  trapped_ = false;
  reached_goal_ = false;

  // Both documented routes must exist (the safe variant traps the blue
  // route's bottleneck by construction, so only the key route is checked).
  const int n = config_.size;
  const auto d = bfs_distances(agent_, true);
  if (cell_distance(d, n, key_, false) < 0 || d[goal_.y * n + goal_.x] < 0)
    throw std::logic_error("generated layout is not solvable");
  if (config_.variant != TaskVariant::SafeGoalReaching) {
    const auto blue_only = bfs_distances(agent_, false);
    if (blue_only[goal_.y * n + goal_.x] < 0)
      throw std::logic_error("blue-door route missing from layout");
  }
  return {observation(), symbolic_state()};
}

StepResult DoorKeyEnv::step(Action action) {
  if (done_) throw std::logic_error("step() on a finished episode");
  ++step_count_;
  double reward = 0.0;
  switch (action) {
    case Action::TurnLeft:
      dir_ = (dir_ + 3) % 4;
      break;
    case Action::TurnRight:
      dir_ = (dir_ + 1) % 4;
      break;
    case Action::Forward: {
      const Pos f = front_cell();
      if (walkable(f)) {
        agent_ = f;
        if (cell(f).kind == Cell::Kind::Goal) {
          reached_goal_ = true;
          done_ = true;
          reward = 1.0 - 0.9 * static_cast<double>(step_count_) /
                             config_.max_steps();
        } else if (cell(f).kind == Cell::Kind::Trap) {
          trapped_ = true;
          done_ = true;
        }
      }
      break;
    }
    case Action::Pickup: {
      const Pos f = front_cell();
      if (in_bounds(f) && cell(f).kind == Cell::Kind::Key && !carrying_) {
        carrying_ = true;
        key_on_grid_ = false;
        cell_mut(f) = Cell{};
      }
      break;
    }
    case Action::Toggle: {
      const Pos f = front_cell();
      if (in_bounds(f) && cell(f).kind == Cell::Kind::Door) {
        Cell& door = cell_mut(f);
        if (door.status == DoorStatus::Closed) {
          door.status = DoorStatus::Open;
        } else if (door.status == DoorStatus::Locked && carrying_ &&
                   door.color == Color::Red) {
          door.status = DoorStatus::Open;
        }
      }
      break;
    }
  }
  if (step_count_ >= config_.max_steps()) done_ = true;
  return StepResult{observation(), reward, done_, symbolic_state()};
}

planner::SymbolicState DoorKeyEnv::symbolic_state() const {
  planner::SymbolicState s;
  if (reached_goal_)
    s.progress = logic::make_nullary("reach_goal");
  else if (agent_.x > wall_col_)
    s.progress = logic::make_nullary("go_through_door");
  else if (carrying_)
    s.progress = logic::make_nullary("get_red_key");
  else
    s.progress = logic::make_nullary("initial");

  if (cell(red_door_).status == DoorStatus::Open)
    s.facts.push_back(logic::make_nullary("red_door_open"));
  if (cell(blue_door_).status == DoorStatus::Open)
    s.facts.push_back(logic::make_nullary("blue_door_open"));
  if (carrying_) s.facts.push_back(logic::make_nullary("carrying_red_key"));

  for (const auto& name : primitive_names())
    s.action_distance[name] = distance_to(name);
  return s;
}

Observation DoorKeyEnv::observation() const {
  Observation o = Observation::Zero();
  const double denom = config_.size - 1;
  o[0] = agent_.x / denom;
  o[1] = agent_.y / denom;
  o[2 + dir_] = 1.0;
  o[6] = carrying_ ? 1.0 : 0.0;
  o[7] = cell(red_door_).status == DoorStatus::Open ? 1.0 : 0.0;
  o[8] = cell(blue_door_).status == DoorStatus::Open ? 1.0 : 0.0;
  if (key_on_grid_) {
    o[9] = (key_.x - agent_.x) / denom;
    o[10] = (key_.y - agent_.y) / denom;
  }
  o[11] = (blue_door_.x - agent_.x) / denom;
  o[12] = (blue_door_.y - agent_.y) / denom;
  o[13] = (goal_.x - agent_.x) / denom;
  o[14] = (goal_.y - agent_.y) / denom;
  return o;
}

std::vector<int> DoorKeyEnv::bfs_distances(Pos from, bool red_door_open) const {
  const int n = config_.size;
  std::vector<int> dist(static_cast<std::size_t>(n) * n, -1);
  auto passable = [&](Pos p) {
    if (!in_bounds(p)) return false;
    const Cell& c = cell(p);
    switch (c.kind) {
      case Cell::Kind::Empty:
      case Cell::Kind::Goal:
        return true;
      case Cell::Kind::Door:
        return c.status == DoorStatus::Open ||
               (red_door_open && c.color == Color::Red);
      case Cell::Kind::Trap:   // controllers and heuristics avoid traps
      case Cell::Kind::Wall:
      case Cell::Kind::Key:
        return false;
    }
    return false;
  };
  std::deque<Pos> queue;
  dist[from.y * n + from.x] = 0;
  queue.push_back(from);
  while (!queue.empty()) {
    const Pos p = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) {
      const Pos q{p.x + kDx[d], p.y + kDy[d]};
      if (!in_bounds(q) || dist[q.y * n + q.x] >= 0) continue;
      if (!passable(q)) continue;
      dist[q.y * n + q.x] = dist[p.y * n + p.x] + 1;
      queue.push_back(q);
    }
  }
  return dist;
}

int DoorKeyEnv::distance_to(const std::string& subtask_action) const {
  const int n = config_.size;
  const bool red_open = cell(red_door_).status == DoorStatus::Open;
  const bool red_passable_now = red_open || carrying_;

  Pos target;
  bool target_passable = false;
  if (subtask_action == "go_red_key") {
    if (carrying_) return 0;
    target = key_;
  } else if (subtask_action == "go_open_red_door") {
    if (red_open) return 0;
    target = red_door_;
  } else if (subtask_action == "go_blue_door") {
    target = blue_door_;
    target_passable = cell(blue_door_).status == DoorStatus::Open;
  } else if (subtask_action == "go_to_goal") {
    if (reached_goal_) return 0;
    target = goal_;
    target_passable = true;
  } else {
    throw std::invalid_argument("unknown subtask action: " + subtask_action);
  }

  const auto direct = bfs_distances(agent_, red_passable_now);
  int best = cell_distance(direct, n, target, target_passable);

  // Two-phase: fetch the key first, then pass the red door.
  if (!red_passable_now && key_on_grid_) {
    const int to_key = cell_distance(direct, n, key_, false);
    if (to_key >= 0) {
      const auto with_key = bfs_distances(key_, true);
      const int rest = cell_distance(with_key, n, target, target_passable);
      if (rest >= 0 && (best < 0 || to_key + rest < best))
        best = to_key + rest;
    }
  }
  return best < 0 ? kUnreachable : best;
}

DoorKeyEnv::PrimitiveResult DoorKeyEnv::run_primitive(const std::string& name) {
  const int budget = 4 * config_.size;
  PrimitiveResult result;

  auto satisfied = [&]() -> bool {
    if (name == "go_red_key") return carrying_;
    if (name == "go_open_red_door")
      return cell(red_door_).status == DoorStatus::Open && agent_.x > wall_col_;
    if (name == "go_blue_door") return agent_.x > wall_col_ && !trapped_;
    if (name == "go_to_goal") return reached_goal_;
    throw std::invalid_argument("unknown primitive: " + name);
  };

  // Current navigation goal: the cell to approach and the interaction that
  // finishes the phase (none = just arrive).
  enum class Act { None, Pickup, Toggle };
  auto phase = [&](Pos& target, bool& target_passable, Act& act) -> bool {
    if (name == "go_red_key") {
      if (!key_on_grid_) return false;
      target = key_;
      target_passable = false;
      act = Act::Pickup;
      return true;
    }
    if (name == "go_open_red_door") {
      if (cell(red_door_).status != DoorStatus::Open) {
        if (!carrying_) return false;  // locked stays locked without the key
        target = red_door_;
        target_passable = false;
        act = Act::Toggle;
        return true;
      }
      target = {wall_col_ + 1, red_door_.y};
      target_passable = true;
      act = Act::None;
      return true;
    }
    if (name == "go_blue_door") {
      target = {wall_col_ + 1, blue_door_.y};
      target_passable = true;
      act = Act::None;
      return true;
    }
    if (name == "go_to_goal") {
      target = goal_;
      target_passable = true;
      act = Act::None;
      return true;
    }
    throw std::invalid_argument("unknown primitive: " + name);
  };

  auto turn_toward = [&](int desired) {
    return (desired - dir_ + 4) % 4 == 3 ? Action::TurnLeft : Action::TurnRight;
  };

  while (!satisfied() && !done_ && result.steps < budget) {
    Pos target;
    bool target_passable = false;
    Act act = Act::None;
    if (!phase(target, target_passable, act)) break;

    // One field per step: distances to the target, expanding only through
    // passable cells (the target itself may be a blocked key/door source).
    const bool red_passable = cell(red_door_).status == DoorStatus::Open;
    const auto field = bfs_distances(target, red_passable);
    const int n = config_.size;
    const int here = field[agent_.y * n + agent_.x];

    Action next_action;
    if (!target_passable && here == 1) {
      // Adjacent to the interaction target: face it, then act.
      int desired = 0;
      for (int d = 0; d < 4; ++d)
        if (agent_.x + kDx[d] == target.x && agent_.y + kDy[d] == target.y)
          desired = d;
      next_action = dir_ == desired
                        ? (act == Act::Pickup ? Action::Pickup : Action::Toggle)
                        : turn_toward(desired);
    } else {
      int desired = -1, best = -1;
      for (int d = 0; d < 4; ++d) {
        const Pos q{agent_.x + kDx[d], agent_.y + kDy[d]};
        if (!walkable(q)) continue;
        const int v = field[q.y * n + q.x];
        if (v >= 0 && (best < 0 || v < best)) {
          best = v;
          desired = d;
        }
      }
      if (desired < 0) break;  // no route
      next_action = dir_ == desired ? Action::Forward : turn_toward(desired);
    }
    step(next_action);
    ++result.steps;
  }
  result.success = satisfied();
  return result;
}

std::string DoorKeyEnv::render_ascii() const {
  std::string out;
  for (int y = 0; y < config_.size; ++y) {
    for (int x = 0; x < config_.size; ++x) {
      if (agent_ == Pos{x, y} && !done_) {
        out += ">v<^"[dir_];
        continue;
      }
      const Cell& c = cell({x, y});
      switch (c.kind) {
        case Cell::Kind::Empty: out += '.'; break;
        case Cell::Kind::Wall: out += '#'; break;
        case Cell::Kind::Key: out += 'K'; break;
        case Cell::Kind::Goal: out += 'G'; break;
        case Cell::Kind::Trap: out += 'T'; break;
        case Cell::Kind::Door: {
          const char open_ch = c.color == Color::Red ? 'r' : 'b';
          const char shut_ch = c.color == Color::Red ? 'R' : 'B';
          out += c.status == DoorStatus::Open ? open_ch : shut_ch;
          break;
        }
      }
    }
    out += '\n';
  }
  return out;
}

bool variant_success(const DoorKeyEnv& env, TaskVariant variant) {
  switch (variant) {
    case TaskVariant::ReachGoal:
      return env.agent_pos() == env.goal_pos();
    case TaskVariant::KeyRetrieval:
      return env.carrying_key();
    case TaskVariant::RedDoorReaching:
      return env.cell(env.red_door_pos()).status == DoorStatus::Open;
    case TaskVariant::SafeGoalReaching:
      return env.agent_pos() == env.goal_pos();
  }
  return false;
}

}  // namespace diffplan::doorkey
