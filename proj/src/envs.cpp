#include "avf/envs.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace avf {

Vec GridMdp::pad_sink(const Vec& delta_visible) const {
    if (delta_visible.size() != visible_states())
        throw std::invalid_argument("pad_sink: expected one entry per visible state");
    Vec full = Vec::Zero(mdp.n_states);
    full.head(visible_states()) = delta_visible;
    return full;
}

GridMdp parse_grid(std::string_view text, double gamma) {
    std::vector<std::string> lines;
    {
        std::string line;
        std::istringstream in{std::string(text)};
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (!line.empty())
                lines.push_back(line);
        }
    }
    if (lines.empty())
        throw GridParseError("empty grid", 0, 0);

    GridMdp g;
    g.spec.rows = static_cast<int>(lines.size());
    g.spec.cols = static_cast<int>(lines[0].size());
    g.spec.cells.assign(static_cast<size_t>(g.spec.rows) * g.spec.cols, Cell::Wall);

    int goal_cells = 0, start_cells = 0, floor_cells = 0;
    for (int r = 0; r < g.spec.rows; ++r) {
        if (static_cast<int>(lines[r].size()) != g.spec.cols)
            throw GridParseError("ragged grid: row length differs", r, static_cast<int>(lines[r].size()));
        for (int c = 0; c < g.spec.cols; ++c) {
            Cell cell;
            switch (lines[r][c]) {
            case '#': cell = Cell::Wall; break;
            case '.': cell = Cell::Floor; break;
            case 'G': cell = Cell::Goal; ++goal_cells; break;
            case 'S': cell = Cell::Start; ++start_cells; break;
            default:
                throw GridParseError(std::string("unexpected character '") + lines[r][c] + "'", r, c);
            }
            if (cell != Cell::Wall)
                ++floor_cells;
            g.spec.cells[static_cast<size_t>(r) * g.spec.cols + c] = cell;
        }
    }
    if (floor_cells == 0)
        throw GridParseError("grid has no floor cells", 0, 0);
    if (goal_cells > 1)
        throw GridParseError("grid has more than one goal", 0, 0);
    if (start_cells > 1)
        throw GridParseError("grid has more than one start", 0, 0);
    for (int c = 0; c < g.spec.cols; ++c) {
        if (!g.spec.is_wall(0, c))
            throw GridParseError("grid border must be wall", 0, c);
        if (!g.spec.is_wall(g.spec.rows - 1, c))
            throw GridParseError("grid border must be wall", g.spec.rows - 1, c);
    }
    for (int r = 0; r < g.spec.rows; ++r) {
        if (!g.spec.is_wall(r, 0))
            throw GridParseError("grid border must be wall", r, 0);
        if (!g.spec.is_wall(r, g.spec.cols - 1))
            throw GridParseError("grid border must be wall", r, g.spec.cols - 1);
    }

    // state indexing: row-major over non-wall cells, sink appended last
    g.cell_to_state.assign(g.spec.cells.size(), -1);
    for (int r = 0; r < g.spec.rows; ++r) {
        for (int c = 0; c < g.spec.cols; ++c) {
            if (g.spec.is_wall(r, c))
                continue;
            const int id = static_cast<int>(g.state_to_cell.size());
            g.cell_to_state[static_cast<size_t>(r) * g.spec.cols + c] = id;
            g.state_to_cell.emplace_back(r, c);
            if (g.spec.at(r, c) == Cell::Goal)
                g.goal_state = id;
            if (g.spec.at(r, c) == Cell::Start)
                g.start_state = id;
        }
    }
    const int n_visible = static_cast<int>(g.state_to_cell.size());
    const int n = n_visible + 1;
    g.sink_state = n_visible;

    Mdp& mdp = g.mdp;
    mdp.n_states = n;
    mdp.n_actions = 4;
    mdp.discount = gamma;
    mdp.reward = Vec::Zero(n);
    if (g.goal_state >= 0)
        mdp.reward[g.goal_state] = 1.0;

    static constexpr int dr[4] = {-1, +1, 0, 0}; // up, down, left, right
    static constexpr int dc[4] = {0, 0, -1, +1};
    mdp.transition.assign(4, Mat::Zero(n, n));
    for (int a = 0; a < 4; ++a) {
        Mat& P = mdp.transition[a];
        for (int s = 0; s < n_visible; ++s) {
            if (s == g.goal_state) {
                P(s, g.sink_state) = 1.0;
                continue;
            }
            auto [r, c] = g.state_to_cell[s];
            const int nr = r + dr[a], nc = c + dc[a];
            const int target = g.spec.is_wall(nr, nc)
                                   ? s
                                   : g.cell_to_state[static_cast<size_t>(nr) * g.spec.cols + nc];
            P(s, target) = 1.0;
        }
        P(g.sink_state, g.sink_state) = 1.0;
    }
    mdp.validate();
    return g;
}

std::string_view four_room_layout() {
    static constexpr std::string_view kLayout =
        "#############\n"
        "#.....#....G#\n"
        "#.....#.....#\n"
        "#...........#\n"
        "#.....#.....#\n"
        "#.....#.....#\n"
        "##.####.....#\n"
        "#.....###.###\n"
        "#.....#.....#\n"
        "#.....#.....#\n"
        "#...........#\n"
        "#S....#.....#\n"
        "#############\n";
    return kLayout;
}

GridMdp four_room(double gamma) { return parse_grid(four_room_layout(), gamma); }

void SetCoverInstance::validate() const {
    if (universe < 1)
        throw std::invalid_argument("set cover: universe must be nonempty");
    if (sets.empty())
        throw std::invalid_argument("set cover: need at least one set");
    std::vector<bool> covered(universe + 1, false);
    for (const auto& s : sets) {
        if (s.empty())
            throw std::invalid_argument("set cover: empty subset");
        for (int e : s) {
            if (e < 1 || e > universe)
                throw std::invalid_argument("set cover: element " + std::to_string(e) +
                                            " outside universe");
            covered[e] = true;
        }
    }
    for (int e = 1; e <= universe; ++e)
        if (!covered[e])
            throw std::invalid_argument("set cover: element " + std::to_string(e) +
                                        " is in no set, minimum cover undefined");
}

SetCoverInstance SetCoverInstance::parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    SetCoverInstance inst;
    int m = 0;
    if (!(in >> inst.universe >> m))
        throw std::invalid_argument("set cover parse: expected header 'n m'");
    std::string rest;
    std::getline(in, rest);
    std::string line;
    while (static_cast<int>(inst.sets.size()) < m && std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<int> s;
        int e;
        while (ls >> e)
            s.push_back(e);
        if (!s.empty())
            inst.sets.push_back(std::move(s));
    }
    if (static_cast<int>(inst.sets.size()) != m)
        throw std::invalid_argument("set cover parse: expected " + std::to_string(m) + " sets");
    inst.validate();
    return inst;
}

SetCoverMdp set_cover_mdp(const SetCoverInstance& inst) {
    inst.validate();
    SetCoverMdp out;
    out.n = inst.universe;
    out.m = static_cast<int>(inst.sets.size());
    const int n_states = out.n + out.m + 2;
    const int g = out.n + out.m;
    const int b = g + 1;

    // out-edges per state, targets sorted ascending
    std::vector<std::vector<int>> edges(n_states);
    for (int i = 0; i < out.n; ++i) {
        for (int j = 0; j < out.m; ++j)
            if (std::find(inst.sets[j].begin(), inst.sets[j].end(), i + 1) != inst.sets[j].end())
                edges[i].push_back(out.n + j);
    }
    for (int j = 0; j < out.m; ++j)
        edges[out.n + j] = {g, b};
    edges[g] = {g};
    edges[b] = {b};

    int n_actions = 2;
    for (const auto& e : edges)
        n_actions = std::max(n_actions, static_cast<int>(e.size()));

    Mdp& mdp = out.mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.discount = 0.5;
    mdp.reward = Vec::Zero(n_states);
    mdp.reward[g] = 1.0;
    mdp.transition.assign(n_actions, Mat::Zero(n_states, n_states));
    for (int x = 0; x < n_states; ++x) {
        for (int a = 0; a < n_actions; ++a) {
            const int target = a < static_cast<int>(edges[x].size()) ? edges[x][a] : x;
            mdp.transition[a](x, target) = 1.0;
        }
    }
    mdp.validate();

    out.delta = Vec::Zero(n_states);
    out.delta.head(out.n).setOnes();
    out.delta.segment(out.n, out.m).setConstant(-0.25);
    return out;
}

int min_cover_via_mdp(const SetCoverInstance& inst, std::uint64_t cap) {
    const SetCoverMdp red = set_cover_mdp(inst);
    const OracleResult best = directional_max_oracle(red.mdp, red.delta, cap);
    return static_cast<int>(std::lround(2.0 * red.n - 4.0 * best.functional));
}

int min_cover_exhaustive(const SetCoverInstance& inst) {
    inst.validate();
    const int m = static_cast<int>(inst.sets.size());
    int best = -1;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
        std::vector<bool> covered(inst.universe + 1, false);
        for (int j = 0; j < m; ++j)
            if (mask & (1u << j))
                for (int e : inst.sets[j])
                    covered[e] = true;
        bool all = true;
        for (int e = 1; e <= inst.universe && all; ++e)
            all = covered[e];
        if (all) {
            const int size = __builtin_popcount(mask);
            if (best < 0 || size < best)
                best = size;
        }
    }
    return best;
}

} // namespace avf
