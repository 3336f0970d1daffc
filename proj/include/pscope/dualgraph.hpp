#pragma once

#include <utility>
#include <vector>

#include "pscope/polydecomp.hpp"

namespace pscope {

/// Node ids coincide with face ids of the source complex.
struct DualGraph {
    struct Node {
        int face = -1;
        ActivationPattern pattern;
    };
    std::vector<Node> nodes;
    std::vector<std::pair<int, int>> edges;  // (tail, head) with tail < head, sorted

    /// Hamming-1 pairs that do not share a geometric facet (diagnostic only).
    std::vector<std::pair<int, int>> non_geometric_edges;
};

DualGraph build_dual_graph(const CellComplex2D& complex);

/// Signed incidence rows: -1 at the tail, +1 at the head of each edge.
struct CoboundaryMatrix {
    std::size_t n_nodes = 0;
    std::vector<std::pair<int, int>> edges;
    Matrix dense() const;
};

CoboundaryMatrix coboundary(const DualGraph& g);

/// L = coboundary^T coboundary (degree minus adjacency), dense.
Matrix laplacian(const DualGraph& g);

struct WeightedLaplacianSpec {
    Vec vertex_weights;  // per node, > 0
    Vec edge_weights;    // per edge, > 0; empty means identity
};

WeightedLaplacianSpec unit_weights(const DualGraph& g);

/// W_V(i,i) = 1 + number of training points located in face i; W_E = identity.
WeightedLaplacianSpec vertex_weights_from_data(const CellComplex2D& complex, const ReluNetwork& net,
                                               const std::vector<std::array<double, 2>>& train_points);

struct FiedlerResult {
    double lambda = 0.0;
    Vec vector;          // generalized eigenvector, first entry above 1e-12 made positive
    int kernel_dim = 0;  // eigenvalues below 1e-10; >1 means the graph is disconnected
};

/// Smallest eigenpair with lambda > 1e-10 of the generalized problem
/// coboundary^T W_E coboundary v = lambda W_V v, via the symmetric similarity
/// S = W_V^{-1/2} K W_V^{-1/2}.
FiedlerResult fiedler(const DualGraph& g, const WeightedLaplacianSpec& spec);

struct JacobiEigenResult {
    Vec values;      // ascending
    Matrix vectors;  // column k pairs with values[k]
};

/// Cyclic Jacobi for dense symmetric matrices; converges when the
/// off-diagonal Frobenius norm drops below off_tol.
JacobiEigenResult jacobi_eigen(Matrix s, double off_tol = 1e-12, int max_sweeps = 100);

struct PartitionReport {
    double fiedler_value = 0.0;
    Vec fiedler_vector;              // in the scored orientation
    std::vector<std::int8_t> signs;  // +1/-1 per node
    double misclassified_fraction = 0.0;
    double l2_error = 0.0;
    std::vector<int> restricted_nodes;  // nodes whose face holds >= 1 training point
    std::vector<double> average_class;  // parallel to restricted_nodes
    int zero_entries = 0;               // |v_i| <= 1e-12, assigned class 1
};

/// Score the sign partition against per-face average class labels, restricted
/// to faces containing training data. The global sign is chosen to minimize
/// the misclassified fraction (ties: l2 error, then the incoming orientation).
PartitionReport score_partition(const DualGraph& g, double lambda, const Vec& fiedler_vector,
                                const CellComplex2D& complex, const ReluNetwork& net,
                                const std::vector<std::array<double, 2>>& points,
                                const std::vector<int>& labels);

/// Connected components by union-find over the dual edges (spectral oracle).
int count_components(const DualGraph& g);

}  // namespace pscope
