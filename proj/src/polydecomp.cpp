#include "pscope/polydecomp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pscope {

void BoundingBox2D::validate() const {
    if (!(x_min < x_max && y_min < y_max))
        throw std::invalid_argument("BoundingBox2D: need x_min < x_max and y_min < y_max");
    for (double v : {x_min, x_max, y_min, y_max})
        if (!std::isfinite(v)) throw std::invalid_argument("BoundingBox2D: non-finite bound");
}

BoundingBox2D inflate(const BoundingBox2D& box, double frac) {
    box.validate();
    double mx = 0.5 * frac * box.width(), my = 0.5 * frac * box.height();
    return {box.x_min - mx, box.x_max + mx, box.y_min - my, box.y_max + my};
}

BoundingBox2D bounding_box_of(const std::vector<std::array<double, 2>>& points) {
    if (points.empty()) throw std::invalid_argument("bounding_box_of: no points");
    BoundingBox2D b{points[0][0], points[0][0], points[0][1], points[0][1]};
    for (const auto& p : points) {
        b.x_min = std::min(b.x_min, p[0]);
        b.x_max = std::max(b.x_max, p[0]);
        b.y_min = std::min(b.y_min, p[1]);
        b.y_max = std::max(b.y_max, p[1]);
    }
    return b;
}

bool CellComplex2D::vertex_on_box_boundary(int v, double tol) const {
    const auto& p = vertices[v];
    return std::fabs(p.x - box.x_min) <= tol || std::fabs(p.x - box.x_max) <= tol ||
           std::fabs(p.y - box.y_min) <= tol || std::fabs(p.y - box.y_max) <= tol;
}

bool CellComplex2D::edge_on_box_boundary(int e, double tol) const {
    const auto& a = vertices[edges[e].a];
    const auto& b = vertices[edges[e].b];
    for (double side : {box.x_min, box.x_max})
        if (std::fabs(a.x - side) <= tol && std::fabs(b.x - side) <= tol) return true;
    for (double side : {box.y_min, box.y_max})
        if (std::fabs(a.y - side) <= tol && std::fabs(b.y - side) <= tol) return true;
    return false;
}

std::array<double, 2> CellComplex2D::face_centroid(int f) const {
    double cx = 0.0, cy = 0.0;
    for (int v : faces[f].vertices) {
        cx += vertices[v].x;
        cy += vertices[v].y;
    }
    double n = static_cast<double>(faces[f].vertices.size());
    return {cx / n, cy / n};
}

double CellComplex2D::face_area(int f) const {
    const auto& cyc = faces[f].vertices;
    double s = 0.0;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
        const auto& p = vertices[cyc[i]];
        const auto& q = vertices[cyc[(i + 1) % cyc.size()]];
        s += p.x * q.y - q.x * p.y;
    }
    return 0.5 * s;
}

ReluNetwork jitter_biases(const ReluNetwork& net, std::uint64_t seed) {
    Rng rng(seed);
    auto layers = net.layers();
    for (auto& l : layers)
        for (double& b : l.bias) b += rng.uniform(-1e-7, 1e-7);
    return ReluNetwork(net.spec(), std::move(layers));
}

namespace {

// Mutable state while neurons are folded in one at a time.
struct Builder {
    const ReluNetwork& net;
    const BoundingBox2D& box;
    const double tol;

    std::vector<CellComplex2D::VertexCell> verts;
    std::vector<Vec> preact;  // cached hidden preactivations per vertex
    std::vector<CellComplex2D::EdgeCell> edges;
    std::vector<std::array<int, 2>> edge_faces;
    struct Face {
        std::vector<int> cycle;  // vertex ids
        SignVector sign;
    };
    std::vector<Face> faces;
    std::map<std::pair<int, int>, int> edge_map;  // (min,max) vertex pair -> edge id

    Builder(const ReluNetwork& n, const BoundingBox2D& b, double t) : net(n), box(b), tol(t) {}

    int add_vertex(double x, double y, SignVector sign_prefix) {
        verts.push_back({x, y, std::move(sign_prefix)});
        preact.push_back(hidden_preactivations(net, {x, y}));
        return static_cast<int>(verts.size()) - 1;
    }

    int add_edge(int a, int b, SignVector sign_prefix, std::array<int, 2> fcs) {
        auto key = std::minmax(a, b);
        if (edge_map.count(key))
            throw DegeneracyError("duplicate edge between vertices " + std::to_string(a) + "," +
                                  std::to_string(b));
        edges.push_back({a, b, std::move(sign_prefix)});
        edge_faces.push_back(fcs);
        int id = static_cast<int>(edges.size()) - 1;
        edge_map[key] = id;
        return id;
    }

    int edge_between(int a, int b) const {
        auto it = edge_map.find(std::minmax(a, b));
        return it == edge_map.end() ? -1 : it->second;
    }

    void init_box() {
        add_vertex(box.x_min, box.y_min, {});
        add_vertex(box.x_max, box.y_min, {});
        add_vertex(box.x_max, box.y_max, {});
        add_vertex(box.x_min, box.y_max, {});
        for (int i = 0; i < 4; ++i) add_edge(i, (i + 1) % 4, {}, {0, -1});
        faces.push_back({{0, 1, 2, 3}, {}});
    }

    void insert_into_cycle(std::vector<int>& cycle, int u, int v, int m) {
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            int a = cycle[i], b = cycle[(i + 1) % cycle.size()];
            if ((a == u && b == v) || (a == v && b == u)) {
                cycle.insert(cycle.begin() + static_cast<long>(i) + 1, m);
                return;
            }
        }
        throw std::logic_error("edge endpoints not adjacent in face cycle");
    }

    void replace_face_ref(int edge_id, int old_f, int new_f) {
        for (int& f : edge_faces[edge_id])
            if (f == old_f) {
                f = new_f;
                return;
            }
        throw std::logic_error("edge does not reference face being split");
    }

    void process_neuron(int k) {
        std::vector<std::int8_t> cls(verts.size());
        for (std::size_t v = 0; v < verts.size(); ++v) {
            double g = preact[v][k];
            cls[v] = std::fabs(g) <= tol ? 0 : (g > 0 ? 1 : -1);
        }

        // (c) split every edge whose endpoints sit strictly on opposite sides
        std::size_t n_edges_before = edges.size();
        for (std::size_t e = 0; e < n_edges_before; ++e) {
            int u = edges[e].a, v = edges[e].b;
            if (cls[u] * cls[v] != -1) continue;
            double gu = preact[u][k], gv = preact[v][k];
            double t = gu / (gu - gv);  // exact linear root of the affine restriction
            double x = verts[u].x + t * (verts[v].x - verts[u].x);
            double y = verts[u].y + t * (verts[v].y - verts[u].y);
            int m = add_vertex(x, y, edges[e].sign);
            cls.push_back(0);
            // e becomes (u,m), new edge (m,v)
            edge_map.erase(std::minmax(u, v));
            auto key_um = std::minmax(u, m);
            if (edge_map.count(key_um)) throw DegeneracyError("split vertex collides with edge");
            edges[e].b = m;
            edge_map[key_um] = static_cast<int>(e);
            edges.push_back({m, v, edges[e].sign});
            edge_faces.push_back(edge_faces[e]);
            edge_map[std::minmax(m, v)] = static_cast<int>(edges.size()) - 1;
            for (int f : edge_faces[e])
                if (f >= 0) insert_into_cycle(faces[f].cycle, u, v, m);
        }

        // (d) split straddling faces along the chord between their two zeros
        std::size_t n_faces_before = faces.size();
        std::vector<std::int8_t> face_entry(faces.size(), 0);
        for (std::size_t f = 0; f < n_faces_before; ++f) {
            auto& cycle = faces[f].cycle;
            int n = static_cast<int>(cycle.size());
            int pos = 0, neg = 0;
            std::vector<int> zeros;
            for (int i = 0; i < n; ++i) {
                std::int8_t c = cls[cycle[i]];
                if (c > 0)
                    ++pos;
                else if (c < 0)
                    ++neg;
                else
                    zeros.push_back(i);
            }
            if (pos == 0 || neg == 0) {
                face_entry[f] = pos > 0 ? 1 : -1;  // all-zero face counts as "off"
                continue;
            }
            if (zeros.size() != 2)
                throw DegeneracyError("straddling face with " + std::to_string(zeros.size()) +
                                      " zero vertices");
            int p = zeros[0], q = zeros[1];
            if ((p + 1) % n == q || (q + 1) % n == p)
                throw DegeneracyError("zero vertices adjacent on straddling face");
            int vp = cycle[p], vq = cycle[q];
            int chord = add_edge(vp, vq, faces[f].sign,
                                 {static_cast<int>(f), static_cast<int>(faces.size())});
            // cycle[p..q] keeps id f; cycle[q..p] becomes a new face
            std::vector<int> c1(cycle.begin() + p, cycle.begin() + q + 1);
            std::vector<int> c2(cycle.begin() + q, cycle.end());
            c2.insert(c2.end(), cycle.begin(), cycle.begin() + p + 1);
            std::int8_t s1 = cls[c1[1]], s2 = cls[c2[1]];
            if (s1 == 0 || s2 == 0 || s1 == s2)
                throw DegeneracyError("inconsistent side classes after face split");
            int new_f = static_cast<int>(faces.size());
            for (std::size_t i = 0; i + 1 < c2.size(); ++i) {
                int e = edge_between(c2[i], c2[i + 1]);
                if (e < 0) throw std::logic_error("missing boundary edge in face split");
                if (e != chord) replace_face_ref(e, static_cast<int>(f), new_f);
            }
            faces.push_back({std::move(c2), faces[f].sign});
            faces[f].cycle = std::move(c1);
            face_entry[f] = s1;
            face_entry.push_back(s2);
        }

        // (e) append this neuron's sign entry to every cell
        for (std::size_t v = 0; v < verts.size(); ++v) verts[v].sign.push_back(cls[v]);
        for (auto& e : edges) {
            std::int8_t ca = cls[e.a], cb = cls[e.b];
            if (ca * cb == -1) throw std::logic_error("unsplit straddling edge");
            std::int8_t entry = (ca > 0 || cb > 0) ? 1 : ((ca < 0 || cb < 0) ? -1 : 0);
            e.sign.push_back(entry);
        }
        for (std::size_t f = 0; f < faces.size(); ++f) faces[f].sign.push_back(face_entry[f]);
    }

    CellComplex2D finalize() {
        CellComplex2D c;
        c.box = box;
        c.hidden_count = net.hidden_count();
        c.vertices = std::move(verts);
        c.edges = std::move(edges);
        c.edge_faces = std::move(edge_faces);
        for (auto& f : faces) {
            // counterclockwise boundary cycles
            double area = 0.0;
            for (std::size_t i = 0; i < f.cycle.size(); ++i) {
                const auto& p = c.vertices[f.cycle[i]];
                const auto& q = c.vertices[f.cycle[(i + 1) % f.cycle.size()]];
                area += p.x * q.y - q.x * p.y;
            }
            if (area < 0.0) std::reverse(f.cycle.begin(), f.cycle.end());
            CellComplex2D::FaceCell fc;
            fc.vertices = std::move(f.cycle);
            fc.sign = std::move(f.sign);
            for (std::size_t i = 0; i < fc.vertices.size(); ++i) {
                int e = edge_between(fc.vertices[i], fc.vertices[(i + 1) % fc.vertices.size()]);
                if (e < 0) throw std::logic_error("face cycle edge missing at finalize");
                fc.edges.push_back(e);
            }
            c.faces.push_back(std::move(fc));
        }
        for (std::size_t f = 0; f < c.faces.size(); ++f) {
            const auto& sign = c.faces[f].sign;
            for (std::int8_t s : sign)
                if (s == 0)
                    throw std::runtime_error(
                        "face sign vector contains a zero; subdivision tolerance bug");
            auto key = pattern_key(sign_to_pattern(sign));
            auto [it, inserted] = c.face_by_pattern.emplace(key, static_cast<int>(f));
            if (!inserted)
                throw std::runtime_error("two faces share activation pattern " + key +
                                         "; subdivision tolerance bug");
        }
        return c;
    }
};

}  // namespace

DecomposeResult decompose_ex(const ReluNetwork& net, const BoundingBox2D& box, double tol,
                             const detail::DecomposeHooks& hooks) {
    box.validate();
    if (net.input_dim() != 2)
        throw std::invalid_argument("decompose: network input dimension must be 2");
    if (tol <= 0.0) throw std::invalid_argument("decompose: tol must be > 0");

    const int max_retries = 3;
    ReluNetwork current = net;
    for (int attempt = 0;; ++attempt) {
        try {
            if (attempt < hooks.fail_attempts) throw DegeneracyError("injected degeneracy");
            Builder b(current, box, tol);
            b.init_box();
            for (int k = 0; k < current.hidden_count(); ++k) b.process_neuron(k);
            CellComplex2D complex = b.finalize();
            complex.degeneracy_retries = attempt;
            return {std::move(complex), std::move(current)};
        } catch (const DegeneracyError&) {
            if (attempt >= max_retries) throw;
            current = jitter_biases(net, mix_seed(0xD1CEB1A5ULL, static_cast<std::uint64_t>(attempt)));
        }
    }
}

CellComplex2D decompose(const ReluNetwork& net, const BoundingBox2D& box, double tol) {
    return decompose_ex(net, box, tol).complex;
}

FVector f_vector(const CellComplex2D& complex) {
    return {static_cast<long>(complex.vertices.size()), static_cast<long>(complex.edges.size()),
            static_cast<long>(complex.faces.size())};
}

int locate(const CellComplex2D& complex, const ReluNetwork& net, const std::array<double, 2>& point,
           double ambiguous_tol) {
    if (!complex.box.contains(point[0], point[1]))
        throw std::invalid_argument("locate: point outside the decomposition box");
    Vec g = hidden_preactivations(net, {point[0], point[1]});
    ActivationPattern pattern(g.size());
    std::vector<int> ambiguous;
    for (std::size_t i = 0; i < g.size(); ++i) {
        pattern[i] = g[i] > 0.0 ? 1 : 0;
        if (std::fabs(g[i]) <= ambiguous_tol) ambiguous.push_back(static_cast<int>(i));
    }
    auto find = [&](const ActivationPattern& p) -> int {
        auto it = complex.face_by_pattern.find(pattern_key(p));
        return it == complex.face_by_pattern.end() ? -1 : it->second;
    };
    int f = find(pattern);
    if (f >= 0) return f;
    // near a boundary, Eq.-(2) semantics put the point on the "bit 0" side
    ActivationPattern adjusted = pattern;
    for (int i : ambiguous) adjusted[i] = 0;
    f = find(adjusted);
    if (f >= 0) return f;
    if (ambiguous.size() <= 20) {
        for (std::uint64_t c = 0; c < (1ULL << ambiguous.size()); ++c) {
            for (std::size_t j = 0; j < ambiguous.size(); ++j)
                adjusted[ambiguous[j]] = static_cast<std::uint8_t>((c >> j) & 1);
            f = find(adjusted);
            if (f >= 0) return f;
        }
    }
    throw std::runtime_error("locate: pattern " + pattern_key(pattern) +
                             " not present in decomposition");
}

std::unordered_map<int, long> count_points_per_face(
    const CellComplex2D& complex, const ReluNetwork& net,
    const std::vector<std::array<double, 2>>& points) {
    std::unordered_map<int, long> counts;
    for (const auto& p : points) {
        if (!complex.box.contains(p[0], p[1])) continue;
        counts[locate(complex, net, p)]++;
    }
    return counts;
}

void validate_complex(const CellComplex2D& c) {
    auto fail = [](const std::string& msg) { throw std::runtime_error("invalid complex: " + msg); };
    const int nv = static_cast<int>(c.vertices.size());
    const int ne = static_cast<int>(c.edges.size());
    const int nf = static_cast<int>(c.faces.size());
    if (nv - ne + nf != 1) fail("Euler characteristic != 1");
    for (const auto& e : c.edges) {
        if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv || e.a == e.b) fail("bad edge endpoints");
        if (e.sign.size() != static_cast<std::size_t>(c.hidden_count)) fail("edge sign length");
    }
    std::vector<int> edge_face_count(ne, 0);
    for (int f = 0; f < nf; ++f) {
        const auto& fc = c.faces[f];
        if (fc.vertices.size() < 3 || fc.vertices.size() != fc.edges.size())
            fail("face cycle malformed");
        for (std::size_t i = 0; i < fc.vertices.size(); ++i) {
            int u = fc.vertices[i], v = fc.vertices[(i + 1) % fc.vertices.size()];
            const auto& e = c.edges[fc.edges[i]];
            if (!((e.a == u && e.b == v) || (e.a == v && e.b == u)))
                fail("face edge does not join consecutive cycle vertices");
            edge_face_count[fc.edges[i]]++;
        }
        for (std::int8_t s : fc.sign)
            if (s == 0) fail("face sign vector has a zero");
    }
    for (int e = 0; e < ne; ++e) {
        int expected = c.edge_on_box_boundary(e) ? 1 : 2;
        if (edge_face_count[e] != expected)
            fail("edge " + std::to_string(e) + " bounds " + std::to_string(edge_face_count[e]) +
                 " faces, expected " + std::to_string(expected));
    }
    if (c.face_by_pattern.size() != static_cast<std::size_t>(nf)) fail("pattern map size mismatch");
}

}  // namespace pscope
