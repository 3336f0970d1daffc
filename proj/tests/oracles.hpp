// Test-side oracles, deliberately independent of the library implementations
// they check (brute-force sums, finite differences, union-find, grids).
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "pscope/homology.hpp"
#include "pscope/nn.hpp"
#include "pscope/polydecomp.hpp"

namespace oracles {

using pscope::ReluNetwork;
using pscope::Vec;

// ---- network construction helpers ----

inline ReluNetwork make_net(const std::vector<int>& widths,
                            const std::vector<std::vector<double>>& weights,
                            const std::vector<std::vector<double>>& biases) {
    pscope::ArchitectureSpec spec{widths};
    std::vector<pscope::DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        pscope::DenseLayer l;
        l.weight = pscope::Matrix(widths[i + 1], widths[i]);
        l.weight.data = weights[i];
        l.bias = biases[i];
        layers.push_back(std::move(l));
    }
    return ReluNetwork(spec, std::move(layers));
}

// random net whose hidden hyperplanes spread across [-1,1]^2
inline ReluNetwork random_box_net(const std::vector<int>& widths, std::uint64_t seed,
                                  double bias_range = 0.6) {
    pscope::Rng rng(seed);
    pscope::ArchitectureSpec spec{widths};
    std::vector<pscope::DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        pscope::DenseLayer l;
        l.weight = pscope::Matrix(widths[i + 1], widths[i]);
        for (double& w : l.weight.data) w = rng.uniform(-1.5, 1.5);
        l.bias.resize(widths[i + 1]);
        for (double& b : l.bias) b = rng.uniform(-bias_range, bias_range);
        layers.push_back(std::move(l));
    }
    return ReluNetwork(spec, std::move(layers));
}

// hidden neuron whose zero line passes through p and q (single-layer nets)
inline std::pair<std::array<double, 2>, double> line_through(std::array<double, 2> p,
                                                             std::array<double, 2> q) {
    std::array<double, 2> w{-(q[1] - p[1]), q[0] - p[0]};
    double b = -(w[0] * p[0] + w[1] * p[1]);
    return {w, b};
}

// ---- finite differences ----

inline std::vector<double> flatten_params(const ReluNetwork& net) {
    std::vector<double> out;
    for (const auto& l : net.layers()) {
        out.insert(out.end(), l.weight.data.begin(), l.weight.data.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

inline ReluNetwork with_params(const ReluNetwork& net, const std::vector<double>& params) {
    auto layers = net.layers();
    std::size_t k = 0;
    for (auto& l : layers) {
        for (double& w : l.weight.data) w = params[k++];
        for (double& b : l.bias) b = params[k++];
    }
    return ReluNetwork(net.spec(), std::move(layers));
}

inline std::vector<double> fd_gradient(const ReluNetwork& net,
                                       const std::function<double(const ReluNetwork&)>& loss,
                                       double h) {
    std::vector<double> params = flatten_params(net);
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto plus = params, minus = params;
        plus[i] += h;
        minus[i] -= h;
        grad[i] = (loss(with_params(net, plus)) - loss(with_params(net, minus))) / (2.0 * h);
    }
    return grad;
}

inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-8});
}

// ---- union-find Betti oracle ----

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

struct OracleCurves {
    std::vector<long> beta0, beta1;
};

inline OracleCurves betti_oracle(const pscope::CellComplex2D& c, const pscope::Filtration& filt) {
    OracleCurves out;
    UnionFind uf(c.vertices.size());
    long v = 0, e = 0, f = 0, comp = 0;
    out.beta0.push_back(0);
    out.beta1.push_back(0);
    for (const auto& step : filt.order) {
        if (step.dim == 0) {
            ++v;
            ++comp;
        } else if (step.dim == 1) {
            ++e;
            if (uf.unite(c.edges[step.cell].a, c.edges[step.cell].b)) --comp;
        } else {
            ++f;
        }
        out.beta0.push_back(comp);
        out.beta1.push_back(comp - v + e - f);
    }
    return out;
}

// ---- grid sampling ----

// patterns realized at the centers of an n x n grid over the box interior
inline std::map<std::string, long> grid_pattern_counts(const ReluNetwork& net,
                                                       const pscope::BoundingBox2D& box, int n) {
    std::map<std::string, long> counts;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double x = box.x_min + (i + 0.5) / n * (box.x_max - box.x_min);
            double y = box.y_min + (j + 0.5) / n * (box.y_max - box.y_min);
            counts[pscope::pattern_key(pscope::binary_state_vector(net, {x, y}))]++;
        }
    }
    return counts;
}

// strict point-in-convex-polygon test (vertices CCW)
inline bool inside_face(const pscope::CellComplex2D& c, int f, double x, double y) {
    const auto& cyc = c.faces[f].vertices;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
        const auto& p = c.vertices[cyc[i]];
        const auto& q = c.vertices[cyc[(i + 1) % cyc.size()]];
        double cross = (q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x);
        if (cross <= 0.0) return false;
    }
    return true;
}

}  // namespace oracles
