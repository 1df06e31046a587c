#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "avf/mdp.hpp"

namespace avf {

class GridParseError : public std::runtime_error {
  public:
    GridParseError(const std::string& what, int row, int col)
        : std::runtime_error(what + " (row " + std::to_string(row) + ", col " +
                             std::to_string(col) + ")"),
          row(row), col(col) {}
    int row;
    int col;
};

enum class Cell : unsigned char { Wall, Floor, Goal, Start };

/// Rectangular grid with a wall border. Actions: up, down, left, right.
struct GridSpec {
    int rows = 0;
    int cols = 0;
    std::vector<Cell> cells; // row-major

    Cell at(int r, int c) const { return cells[static_cast<size_t>(r) * cols + c]; }
    bool is_wall(int r, int c) const { return at(r, c) == Cell::Wall; }
};

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/// Grid MDP: one state per non-wall cell plus a hidden absorbing sink,
/// indexed last. Moves are deterministic; walking into a wall stays put.
/// The goal pays reward 1 and falls into the sink on every action.
struct GridMdp {
    Mdp mdp;
    GridSpec spec;
    std::vector<int> cell_to_state;         // -1 for walls, row-major
    std::vector<std::pair<int, int>> state_to_cell; // visible states only
    int goal_state = -1;                    // -1 when the grid has no goal
    int start_state = -1;
    int sink_state = -1;

    int visible_states() const { return mdp.n_states - 1; }

    /// Pads a visible-length interest vector with delta = 0 at the sink.
    Vec pad_sink(const Vec& delta_visible) const;
};

/// Parses the ASCII format: '#' wall, '.' floor, 'G' goal, 'S' start.
GridMdp parse_grid(std::string_view text, double gamma);

/// The canonical 11x11 four-room layout: 104 floor cells in four 5x5 rooms,
/// goal at top-right, start at bottom-left.
GridMdp four_room(double gamma = 0.99);

/// The layout behind four_room(), also stored as data/four_room.txt.
std::string_view four_room_layout();

struct SetCoverInstance {
    int universe = 0;                   // elements are 1..universe
    std::vector<std::vector<int>> sets; // 1-based elements, one vector per set

    void validate() const;
    /// Text format: first line "n m", then one line per set of 1-based elements.
    static SetCoverInstance parse(std::string_view text);
};

/// The reduction MDP: layers X1 (universe elements), X2 (sets), X3 = {g, b},
/// gamma = 1/2, reward only at g, and delta = (+1 on X1, -1/4 on X2, 0 on X3).
/// Actions index out-edges in sorted target order; surplus actions self-loop.
struct SetCoverMdp {
    Mdp mdp;
    Vec delta;
    int n = 0; // universe size, states 0..n-1
    int m = 0; // set count, states n..n+m-1; g = n+m, b = n+m+1
};

SetCoverMdp set_cover_mdp(const SetCoverInstance& inst);

/// Minimum cover size recovered from the MDP as round(2n - 4 max R(pi)),
/// with the max taken by directional_max_oracle.
int min_cover_via_mdp(const SetCoverInstance& inst,
                      std::uint64_t cap = DeterministicPolicyEnumerator::kDefaultCap);

/// Exhaustive search over all 2^m subsets; returns -1 when no cover exists.
/// Independent of the MDP path; the setcover report compares the two.
int min_cover_exhaustive(const SetCoverInstance& inst);

} // namespace avf
