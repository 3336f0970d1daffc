#include "pscope/homology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pscope {

Filtration random_filtration(const CellComplex2D& complex, std::uint64_t seed) {
    Rng rng(seed);
    Filtration filt;
    filt.seed = seed;
    auto add_block = [&](std::int8_t dim, std::size_t count) {
        std::vector<int> ids(count);
        std::iota(ids.begin(), ids.end(), 0);
        rng.shuffle(ids);
        for (int id : ids) filt.order.push_back({dim, id});
    };
    add_block(0, complex.vertices.size());
    add_block(1, complex.edges.size());
    add_block(2, complex.faces.size());
    return filt;
}

BoundaryMatrixZ2 boundary_matrix(const CellComplex2D& complex, const Filtration& filt) {
    const long nv = static_cast<long>(complex.vertices.size());
    const long ne = static_cast<long>(complex.edges.size());
    std::vector<int> vertex_pos(nv, -1), edge_pos(ne, -1);
    for (std::size_t t = 0; t < filt.order.size(); ++t) {
        const auto& s = filt.order[t];
        if (s.dim == 0) vertex_pos[s.cell] = static_cast<int>(t);
        if (s.dim == 1) edge_pos[s.cell] = static_cast<int>(t);
    }
    BoundaryMatrixZ2 m;
    m.columns.resize(filt.order.size());
    m.dims.resize(filt.order.size());
    for (std::size_t t = 0; t < filt.order.size(); ++t) {
        const auto& s = filt.order[t];
        m.dims[t] = s.dim;
        if (s.dim == 1) {
            const auto& e = complex.edges[s.cell];
            m.columns[t] = {vertex_pos[e.a], vertex_pos[e.b]};
        } else if (s.dim == 2) {
            for (int e : complex.faces[s.cell].edges) m.columns[t].push_back(edge_pos[e]);
        }
        auto& col = m.columns[t];
        std::sort(col.begin(), col.end());
        for (int idx : col)
            if (idx < 0 || idx >= static_cast<int>(t))
                throw std::runtime_error("boundary_matrix: boundary cell not earlier in filtration");
        if (std::adjacent_find(col.begin(), col.end()) != col.end())
            throw std::runtime_error("boundary_matrix: repeated boundary cell");
    }
    return m;
}

void verify_chain_condition(const CellComplex2D& complex) {
    // over Z2 the boundary of a face's boundary must cancel vertex by vertex
    for (const auto& face : complex.faces) {
        std::vector<int> count(complex.vertices.size(), 0);
        for (int e : face.edges) {
            count[complex.edges[e].a] ^= 1;
            count[complex.edges[e].b] ^= 1;
        }
        for (int c : count)
            if (c != 0)
                throw std::runtime_error("chain condition violated: face boundary is not a cycle");
    }
}

PersistencePairs persistence(const CellComplex2D& complex, const Filtration& filt) {
    verify_chain_condition(complex);
    BoundaryMatrixZ2 m = boundary_matrix(complex, filt);
    const int n = static_cast<int>(m.columns.size());
    std::vector<int> low_owner(n, -1);  // low index -> column that holds it
    std::vector<std::vector<int>> cols = std::move(m.columns);
    std::vector<int> scratch;
    PersistencePairs out;
    std::vector<char> killed(n, 0);
    for (int j = 0; j < n; ++j) {
        auto& col = cols[j];
        while (!col.empty()) {
            int low = col.back();
            int owner = low_owner[low];
            if (owner < 0) break;
            // symmetric difference with the owner column
            scratch.clear();
            std::set_symmetric_difference(col.begin(), col.end(), cols[owner].begin(),
                                          cols[owner].end(), std::back_inserter(scratch));
            col.swap(scratch);
        }
        if (!col.empty()) {
            int birth = col.back();
            low_owner[birth] = j;
            killed[birth] = 1;
            out.pairs.push_back({birth, j, m.dims[birth]});
        }
    }
    for (int j = 0; j < n; ++j)
        if (cols[j].empty() && !killed[j]) out.essentials.push_back({j, m.dims[j]});
    std::sort(out.pairs.begin(), out.pairs.end(),
              [](const auto& a, const auto& b) { return a.birth < b.birth; });
    return out;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        int ra = find(a), rb = find(b);
        if (ra == rb) return false;
        parent[ra] = rb;
        return true;
    }
};

// beta0 by incremental union-find, beta1 by Euler's formula (beta2 = 0 for
// any subcomplex of a planar complex).
BettiCurves oracle_curves(const CellComplex2D& complex, const Filtration& filt) {
    BettiCurves c;
    UnionFind uf(complex.vertices.size());
    long v = 0, e = 0, f = 0, components = 0;
    c.beta0.push_back(0);
    c.beta1.push_back(0);
    for (const auto& step : filt.order) {
        if (step.dim == 0) {
            ++v;
            ++components;
        } else if (step.dim == 1) {
            ++e;
            const auto& edge = complex.edges[step.cell];
            if (uf.unite(edge.a, edge.b)) --components;
        } else {
            ++f;
        }
        c.beta0.push_back(components);
        c.beta1.push_back(components - v + e - f);
    }
    return c;
}

BettiCurves curves_from_pairs(const PersistencePairs& pairs, std::size_t total) {
    BettiCurves c;
    c.beta0.assign(total + 1, 0);
    c.beta1.assign(total + 1, 0);
    auto bump = [&](std::vector<long>& curve, int from, int to) {
        for (int t = from + 1; t <= to; ++t) curve[t] += 1;
    };
    for (const auto& p : pairs.pairs) {
        if (p.dim == 0) bump(c.beta0, p.birth, p.death);
        if (p.dim == 1) bump(c.beta1, p.birth, p.death);
    }
    for (const auto& ess : pairs.essentials) {
        if (ess.dim == 0) bump(c.beta0, ess.birth, static_cast<int>(total));
        if (ess.dim == 1) bump(c.beta1, ess.birth, static_cast<int>(total));
    }
    return c;
}

}  // namespace

BettiCurves betti_curves(const CellComplex2D& complex, const Filtration& filt,
                         const PersistencePairs& pairs) {
    BettiCurves reduced = curves_from_pairs(pairs, filt.size());
    BettiCurves oracle = oracle_curves(complex, filt);
    if (reduced.beta0 != oracle.beta0 || reduced.beta1 != oracle.beta1)
        throw std::runtime_error(
            "betti_curves: matrix reduction disagrees with the union-find/Euler oracle");
    return reduced;
}

AveragedCurves averaged_curves(const CellComplex2D& complex, int n_trials,
                               std::uint64_t base_seed) {
    if (n_trials < 1) throw std::invalid_argument("averaged_curves: n_trials must be >= 1");
    AveragedCurves avg;
    avg.n_trials = n_trials;
    avg.total_cells = f_vector(complex).total();
    std::vector<long> sum0(avg.total_cells + 1, 0), sum1(avg.total_cells + 1, 0);
    for (int trial = 0; trial < n_trials; ++trial) {
        Filtration filt = random_filtration(complex, mix_seed(base_seed, trial));
        BettiCurves c = betti_curves(complex, filt, persistence(complex, filt));
        for (std::size_t t = 0; t < c.beta0.size(); ++t) {
            sum0[t] += c.beta0[t];
            sum1[t] += c.beta1[t];
        }
    }
    avg.beta0.resize(sum0.size());
    avg.beta1.resize(sum1.size());
    for (std::size_t t = 0; t < sum0.size(); ++t) {
        avg.beta0[t] = static_cast<double>(sum0[t]) / n_trials;
        avg.beta1[t] = static_cast<double>(sum1[t]) / n_trials;
    }
    return avg;
}

std::array<HeatMapGrid, 2> heat_map_from_curves(const std::vector<int>& epochs,
                                                const std::vector<AveragedCurves>& curves,
                                                const Vec& losses, int n_bins) {
    if (epochs.size() < 2 || epochs.size() != curves.size() || epochs.size() != losses.size())
        throw std::invalid_argument("heat_map: need >= 2 aligned epochs");
    if (n_bins < 1) throw std::invalid_argument("heat_map: need at least 1 bin");
    std::array<HeatMapGrid, 2> grids;
    long max_cells = 0;
    for (const auto& c : curves) max_cells = std::max(max_cells, c.total_cells);
    for (int dim = 0; dim < 2; ++dim) {
        auto& g = grids[dim];
        g.dim = dim;
        g.n_bins = n_bins;
        g.max_total_cells = max_cells;
        g.values = Matrix(epochs.size(), n_bins);
        for (std::size_t e = 0; e < epochs.size(); ++e) {
            const auto& curve = dim == 0 ? curves[e].beta0 : curves[e].beta1;
            const long total = curves[e].total_cells;
            g.epochs.push_back(epochs[e]);
            g.loss.push_back(losses[e]);
            g.total_cells.push_back(total);
            for (int b = 0; b < n_bins; ++b) {
                double y = (b + 0.5) / n_bins;  // bin center in [0, 1]
                long t = std::min<long>(static_cast<long>(std::floor(y * max_cells)), total);
                g.values(e, b) = curve[t];
            }
            std::size_t argmax = 0;
            for (std::size_t t = 1; t < curve.size(); ++t)
                if (curve[t] > curve[argmax]) argmax = t;  // first attainment wins
            g.critical.push_back(static_cast<double>(argmax) / static_cast<double>(max_cells));
        }
    }
    return grids;
}

std::array<HeatMapGrid, 2> heat_map(const std::vector<SweepEntry>& sweep, int n_trials,
                                    std::uint64_t base_seed, int n_bins) {
    if (sweep.size() < 2) throw std::invalid_argument("heat_map: need at least 2 epochs");
    std::vector<int> epochs;
    std::vector<AveragedCurves> curves;
    Vec losses;
    for (const auto& entry : sweep) {
        epochs.push_back(entry.epoch);
        losses.push_back(entry.loss);
        // one shared trial-seed stream: identical complexes yield identical columns
        curves.push_back(averaged_curves(*entry.complex, n_trials, base_seed));
    }
    return heat_map_from_curves(epochs, curves, losses, n_bins);
}

double delta_correlation(const Vec& a, const Vec& b) {
    if (a.size() != b.size() || a.size() < 3)
        throw std::invalid_argument("delta_correlation: need two equal series of length >= 3");
    Vec da, db;
    for (std::size_t i = 1; i < a.size(); ++i) {
        da.push_back(a[i] - a[i - 1]);
        db.push_back(b[i] - b[i - 1]);
    }
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        ma += da[i] / da.size();
        mb += db[i] / db.size();
    }
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        num += (da[i] - ma) * (db[i] - mb);
        va += (da[i] - ma) * (da[i] - ma);
        vb += (db[i] - mb) * (db[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return num / std::sqrt(va * vb);
}

}  // namespace pscope
