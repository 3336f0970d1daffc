#include "pscope/dualgraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

namespace pscope {

DualGraph build_dual_graph(const CellComplex2D& complex) {
    if (complex.faces.empty()) throw std::invalid_argument("build_dual_graph: empty complex");
    DualGraph g;
    std::unordered_map<std::string, int> by_key;
    for (std::size_t f = 0; f < complex.faces.size(); ++f) {
        auto pattern = sign_to_pattern(complex.faces[f].sign);
        by_key.emplace(pattern_key(pattern), static_cast<int>(f));
        g.nodes.push_back({static_cast<int>(f), std::move(pattern)});
    }
    for (std::size_t f = 0; f < g.nodes.size(); ++f) {
        auto key = pattern_key(g.nodes[f].pattern);
        for (std::size_t bit = 0; bit < key.size(); ++bit) {
            char saved = key[bit];
            key[bit] = saved == '0' ? '1' : '0';
            auto it = by_key.find(key);
            if (it != by_key.end() && it->second > static_cast<int>(f))
                g.edges.emplace_back(static_cast<int>(f), it->second);
            key[bit] = saved;
        }
    }
    std::sort(g.edges.begin(), g.edges.end());

    std::set<std::pair<int, int>> geometric;
    for (const auto& ef : complex.edge_faces)
        if (ef[0] >= 0 && ef[1] >= 0) geometric.insert(std::minmax(ef[0], ef[1]));
    for (const auto& e : g.edges)
        if (!geometric.count(e)) g.non_geometric_edges.push_back(e);
    return g;
}

CoboundaryMatrix coboundary(const DualGraph& g) {
    return {g.nodes.size(), g.edges};
}

Matrix CoboundaryMatrix::dense() const {
    Matrix m(edges.size(), n_nodes);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        m(i, edges[i].first) = -1.0;
        m(i, edges[i].second) = 1.0;
    }
    return m;
}

Matrix laplacian(const DualGraph& g) {
    if (g.nodes.empty()) throw std::invalid_argument("laplacian: empty graph");
    Matrix l(g.nodes.size(), g.nodes.size());
    for (const auto& [a, b] : g.edges) {
        l(a, a) += 1.0;
        l(b, b) += 1.0;
        l(a, b) -= 1.0;
        l(b, a) -= 1.0;
    }
    return l;
}

WeightedLaplacianSpec unit_weights(const DualGraph& g) {
    return {Vec(g.nodes.size(), 1.0), {}};
}

WeightedLaplacianSpec vertex_weights_from_data(const CellComplex2D& complex, const ReluNetwork& net,
                                               const std::vector<std::array<double, 2>>& pts) {
    auto counts = count_points_per_face(complex, net, pts);
    Vec w(complex.faces.size(), 1.0);
    for (const auto& [face, count] : counts) w[face] += static_cast<double>(count);
    return {std::move(w), {}};
}

JacobiEigenResult jacobi_eigen(Matrix s, double off_tol, int max_sweeps) {
    if (s.rows != s.cols) throw std::invalid_argument("jacobi_eigen: matrix not square");
    const std::size_t n = s.rows;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    auto off_norm = [&]() {
        double sum = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) sum += 2.0 * s(p, q) * s(p, q);
        return std::sqrt(sum);
    };

    for (int sweep = 0; sweep < max_sweeps && off_norm() > off_tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = s(p, q);
                if (apq == 0.0) continue;
                double theta = (s(q, q) - s(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double skp = s(k, p), skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double spk = s(p, k), sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    if (off_norm() > off_tol)
        throw std::runtime_error("jacobi_eigen: no convergence after " +
                                 std::to_string(max_sweeps) + " sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s(a, a) < s(b, b); });
    JacobiEigenResult r;
    r.values.resize(n);
    r.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        r.values[k] = s(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) r.vectors(i, k) = v(i, order[k]);
    }
    return r;
}

FiedlerResult fiedler(const DualGraph& g, const WeightedLaplacianSpec& spec) {
    const std::size_t n = g.nodes.size();
    if (n == 0) throw std::invalid_argument("fiedler: empty graph");
    if (spec.vertex_weights.size() != n)
        throw std::invalid_argument("fiedler: vertex weight count mismatch");
    for (double w : spec.vertex_weights)
        if (!(w > 0.0)) throw std::invalid_argument("fiedler: vertex weights must be positive");
    if (!spec.edge_weights.empty() && spec.edge_weights.size() != g.edges.size())
        throw std::invalid_argument("fiedler: edge weight count mismatch");

    // K = coboundary^T W_E coboundary, then S = W_V^{-1/2} K W_V^{-1/2}
    Matrix k(n, n);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        double w = spec.edge_weights.empty() ? 1.0 : spec.edge_weights[e];
        auto [a, b] = g.edges[e];
        k(a, a) += w;
        k(b, b) += w;
        k(a, b) -= w;
        k(b, a) -= w;
    }
    Vec inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(spec.vertex_weights[i]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) k(i, j) *= inv_sqrt[i] * inv_sqrt[j];

    auto eig = jacobi_eigen(std::move(k));
    FiedlerResult r;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (eig.values[i] <= 1e-10)
            ++r.kernel_dim;
        else if (pick == n)
            pick = i;
    }
    if (pick == n)
        throw std::runtime_error("fiedler: no eigenvalue above threshold; graph has no edges");
    r.lambda = eig.values[pick];
    r.vector.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.vector[i] = inv_sqrt[i] * eig.vectors(i, pick);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(r.vector[i]) > 1e-12) {
            if (r.vector[i] < 0.0)
                for (double& x : r.vector) x = -x;
            break;
        }
    }
    return r;
}

int count_components(const DualGraph& g) {
    std::vector<int> parent(g.nodes.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    int merges = 0;
    for (const auto& [a, b] : g.edges) {
        int ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            ++merges;
        }
    }
    return static_cast<int>(g.nodes.size()) - merges;
}

PartitionReport score_partition(const DualGraph& g, double lambda, const Vec& v,
                                const CellComplex2D& complex, const ReluNetwork& net,
                                const std::vector<std::array<double, 2>>& points,
                                const std::vector<int>& labels) {
    if (v.size() != g.nodes.size())
        throw std::invalid_argument("score_partition: vector length mismatch");
    if (points.size() != labels.size())
        throw std::invalid_argument("score_partition: points/labels mismatch");

    std::unordered_map<int, std::pair<long, long>> face_stats;  // face -> (count, label sum)
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!complex.box.contains(points[i][0], points[i][1])) continue;
        auto& st = face_stats[locate(complex, net, points[i])];
        st.first += 1;
        st.second += labels[i];
    }
    if (face_stats.empty())
        throw std::runtime_error("score_partition: no training points land in the complex");

    PartitionReport rep;
    rep.fiedler_value = lambda;
    for (std::size_t node = 0; node < g.nodes.size(); ++node) {
        auto it = face_stats.find(g.nodes[node].face);
        if (it == face_stats.end()) continue;
        rep.restricted_nodes.push_back(static_cast<int>(node));
        rep.average_class.push_back(static_cast<double>(it->second.second) /
                                    static_cast<double>(it->second.first));
    }

    auto metrics = [&](double orientation, double& mis, double& l2, int& zeros) {
        long wrong = 0;
        double sq = 0.0;
        zeros = 0;
        for (std::size_t i = 0; i < rep.restricted_nodes.size(); ++i) {
            double x = orientation * v[rep.restricted_nodes[i]];
            int pred;
            if (std::fabs(x) <= 1e-12) {
                pred = 1;  // exact zeros are measure-zero; pinned to class 1
                ++zeros;
            } else {
                pred = x > 0.0 ? 1 : 0;
            }
            double diff = rep.average_class[i] - pred;
            if (std::fabs(diff) >= 0.5) ++wrong;
            sq += diff * diff;
        }
        mis = static_cast<double>(wrong) / static_cast<double>(rep.restricted_nodes.size());
        l2 = std::sqrt(sq);
    };

    double mis_pos, l2_pos, mis_neg, l2_neg;
    int zeros_pos, zeros_neg;
    metrics(1.0, mis_pos, l2_pos, zeros_pos);
    metrics(-1.0, mis_neg, l2_neg, zeros_neg);
    double orientation =
        (mis_neg < mis_pos || (mis_neg == mis_pos && l2_neg < l2_pos)) ? -1.0 : 1.0;

    rep.misclassified_fraction = orientation > 0 ? mis_pos : mis_neg;
    rep.l2_error = orientation > 0 ? l2_pos : l2_neg;
    rep.zero_entries = orientation > 0 ? zeros_pos : zeros_neg;
    rep.fiedler_vector.resize(v.size());
    rep.signs.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        rep.fiedler_vector[i] = orientation * v[i];
        rep.signs[i] = std::fabs(rep.fiedler_vector[i]) <= 1e-12
                           ? 1
                           : (rep.fiedler_vector[i] > 0.0 ? 1 : -1);
    }
    return rep;
}

}  // namespace pscope
