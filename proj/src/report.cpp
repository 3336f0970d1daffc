#include "pscope/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pscope {

namespace {

const char* kFaceFill = "#aecbe8";
const char* kEdgeStroke = "#1f77b4";
const char* kVertexFill = "#d62728";
const char* kPositiveFill = "#1f77b4";
const char* kNegativeFill = "#9467bd";
const char* kLossStroke = "#d62728";
const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"};

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

struct Viewport {
    BoundingBox2D world;
    double w, h, margin;

    double sx(double x) const {
        return margin + (x - world.x_min) / (world.x_max - world.x_min) * (w - 2 * margin);
    }
    double sy(double y) const {
        return h - margin - (y - world.y_min) / (world.y_max - world.y_min) * (h - 2 * margin);
    }
};

std::string svg_open(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w) + "\" height=\"" + px(h) +
           "\" viewBox=\"0 0 " + px(w) + " " + px(h) + "\">\n";
}

bool overlaps(const BoundingBox2D& w, double x_lo, double x_hi, double y_lo, double y_hi) {
    return x_hi >= w.x_min && x_lo <= w.x_max && y_hi >= w.y_min && y_lo <= w.y_max;
}

void draw_complex(std::string& out, const CellComplex2D& c, const Viewport& vp) {
    const BoundingBox2D& w = vp.world;
    for (std::size_t f = 0; f < c.faces.size(); ++f) {
        double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
        for (int vid : c.faces[f].vertices) {
            const auto& v = c.vertices[vid];
            x_lo = std::min(x_lo, v.x);
            x_hi = std::max(x_hi, v.x);
            y_lo = std::min(y_lo, v.y);
            y_hi = std::max(y_hi, v.y);
        }
        if (!overlaps(w, x_lo, x_hi, y_lo, y_hi)) continue;
        out += "<polygon points=\"";
        for (std::size_t i = 0; i < c.faces[f].vertices.size(); ++i) {
            const auto& v = c.vertices[c.faces[f].vertices[i]];
            if (i) out += " ";
            out += px(vp.sx(v.x)) + "," + px(vp.sy(v.y));
        }
        out += std::string("\" fill=\"") + kFaceFill + "\" stroke=\"none\"/>\n";
    }
    for (const auto& e : c.edges) {
        const auto& a = c.vertices[e.a];
        const auto& b = c.vertices[e.b];
        if (!overlaps(w, std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y),
                      std::max(a.y, b.y)))
            continue;
        out += "<line x1=\"" + px(vp.sx(a.x)) + "\" y1=\"" + px(vp.sy(a.y)) + "\" x2=\"" +
               px(vp.sx(b.x)) + "\" y2=\"" + px(vp.sy(b.y)) + "\" stroke=\"" + kEdgeStroke +
               "\" stroke-width=\"1\"/>\n";
    }
    for (const auto& v : c.vertices) {
        if (!overlaps(w, v.x, v.x, v.y, v.y)) continue;
        out += "<circle cx=\"" + px(vp.sx(v.x)) + "\" cy=\"" + px(vp.sy(v.y)) +
               "\" r=\"2.5\" fill=\"" + kVertexFill + "\"/>\n";
    }
}

}  // namespace

std::string render_decomposition_svg(const CellComplex2D& complex, const SvgOptions& options) {
    Viewport vp{options.zoom.value_or(complex.box), static_cast<double>(options.width_px),
                static_cast<double>(options.height_px), 20.0};
    std::string out = svg_open(vp.w, vp.h);
    if (options.zoom)
        out += "<clipPath id=\"zoom\"><rect x=\"" + px(vp.margin) + "\" y=\"" + px(vp.margin) +
               "\" width=\"" + px(vp.w - 2 * vp.margin) + "\" height=\"" +
               px(vp.h - 2 * vp.margin) + "\"/></clipPath>\n<g clip-path=\"url(#zoom)\">\n";
    draw_complex(out, complex, vp);
    if (options.zoom) out += "</g>\n";
    out += "<rect x=\"" + px(vp.margin) + "\" y=\"" + px(vp.margin) + "\" width=\"" +
           px(vp.w - 2 * vp.margin) + "\" height=\"" + px(vp.h - 2 * vp.margin) +
           "\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
    return out;
}

std::string render_partition_svg(const CellComplex2D& complex, const PartitionReport& report,
                                 const SvgOptions& options) {
    Viewport vp{options.zoom.value_or(complex.box), static_cast<double>(options.width_px),
                static_cast<double>(options.height_px), 20.0};
    std::string out = svg_open(vp.w, vp.h);
    draw_complex(out, complex, vp);
    for (std::size_t f = 0; f < complex.faces.size(); ++f) {
        auto centroid = complex.face_centroid(static_cast<int>(f));
        const char* color = report.signs[f] > 0 ? kPositiveFill : kNegativeFill;
        out += "<circle cx=\"" + px(vp.sx(centroid[0])) + "\" cy=\"" + px(vp.sy(centroid[1])) +
               "\" r=\"4\" fill=\"" + color + "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

namespace {

std::string heat_color(double t) {
    // three-stop gradient, dark blue -> magenta -> yellow
    auto lerp = [](int a, int b, double u) { return static_cast<int>(std::lround(a + (b - a) * u)); };
    int r, g, b;
    if (t < 0.5) {
        double u = t / 0.5;
        r = lerp(13, 204, u);
        g = lerp(8, 71, u);
        b = lerp(135, 120, u);
    } else {
        double u = (t - 0.5) / 0.5;
        r = lerp(204, 240, u);
        g = lerp(71, 249, u);
        b = lerp(120, 33, u);
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string render_heatmap_svg(const HeatMapGrid& grid) {
    const double w = 900, h = 600, ml = 60, mr = 70, mt = 30, mb = 40;
    const double pw = w - ml - mr, ph = h - mt - mb;
    const std::size_t ne = grid.epochs.size();
    double max_val = 0.0;
    for (double v : grid.values.data) max_val = std::max(max_val, v);
    std::string out = svg_open(w, h);
    for (std::size_t e = 0; e < ne; ++e) {
        double x = ml + pw * e / ne;
        double cw = pw / ne;
        for (int b = 0; b < grid.n_bins; ++b) {
            double y = mt + ph - ph * (b + 1) / grid.n_bins;
            double t = max_val > 0.0 ? grid.values(e, b) / max_val : 0.0;
            out += "<rect x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(cw + 0.5) +
                   "\" height=\"" + px(ph / grid.n_bins + 0.5) + "\" fill=\"" + heat_color(t) +
                   "\"/>\n";
        }
    }
    double lo = grid.loss[0], hi = grid.loss[0];
    for (double v : grid.loss) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) hi = lo + 1.0;
    out += "<polyline fill=\"none\" stroke=\"" + std::string(kLossStroke) +
           "\" stroke-width=\"2\" points=\"";
    for (std::size_t e = 0; e < ne; ++e) {
        double x = ml + pw * (e + 0.5) / ne;
        double y = mt + ph - ph * (grid.loss[e] - lo) / (hi - lo);
        if (e) out += " ";
        out += px(x) + "," + px(y);
    }
    out += "\"/>\n";
    out += "<rect x=\"" + px(ml) + "\" y=\"" + px(mt) + "\" width=\"" + px(pw) + "\" height=\"" +
           px(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    out += "<text x=\"" + px(ml) + "\" y=\"" + px(h - 10) +
           "\" font-size=\"13\">epoch (beta_" + std::to_string(grid.dim) +
           "; y: cells added / max cells; overlay: loss)</text>\n";
    out += "</svg>\n";
    return out;
}

std::string render_curves_svg(const std::vector<Series>& series, const std::string& x_label,
                              const std::string& y_label, const std::optional<Series>& overlay) {
    const double w = 900, h = 600, ml = 70, mr = 70, mt = 30, mb = 50;
    const double pw = w - ml - mr, ph = h - mt - mb;
    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x_lo = x_hi = s.x[i];
                y_lo = y_hi = s.y[i];
                first = false;
            }
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, s.y[i]);
            y_hi = std::max(y_hi, s.y[i]);
        }
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    if (y_hi == y_lo) y_hi = y_lo + 1.0;
    std::string out = svg_open(w, h);
    auto sx = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) { return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph; };
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::string color = s.color.empty() ? kPalette[k % 6] : s.color;
        out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) out += " ";
            out += px(sx(s.x[i])) + "," + px(sy(s.y[i]));
        }
        out += "\"/>\n";
        out += "<text x=\"" + px(w - mr + 5) + "\" y=\"" + px(mt + 16.0 * (k + 1)) +
               "\" font-size=\"12\" fill=\"" + color + "\">" + s.label + "</text>\n";
    }
    if (overlay && overlay->x.size() > 1) {
        double o_lo = overlay->y[0], o_hi = overlay->y[0];
        for (double v : overlay->y) {
            o_lo = std::min(o_lo, v);
            o_hi = std::max(o_hi, v);
        }
        if (o_hi == o_lo) o_hi = o_lo + 1.0;
        out += "<polyline fill=\"none\" stroke=\"" + std::string(kLossStroke) +
               "\" stroke-dasharray=\"4 3\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < overlay->x.size(); ++i) {
            if (i) out += " ";
            out += px(sx(overlay->x[i])) + "," + px(mt + ph - (overlay->y[i] - o_lo) / (o_hi - o_lo) * ph);
        }
        out += "\"/>\n<text x=\"" + px(w - mr + 5) + "\" y=\"" + px(mt) +
               "\" font-size=\"12\" fill=\"" + kLossStroke + "\">" + overlay->label + "</text>\n";
    }
    out += "<rect x=\"" + px(ml) + "\" y=\"" + px(mt) + "\" width=\"" + px(pw) + "\" height=\"" +
           px(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    out += "<text x=\"" + px(ml + pw / 2) + "\" y=\"" + px(h - 12) + "\" font-size=\"13\">" +
           x_label + "</text>\n";
    out += "<text x=\"12\" y=\"" + px(mt + ph / 2) + "\" font-size=\"13\" transform=\"rotate(-90 12 " +
           px(mt + ph / 2) + ")\">" + y_label + "</text>\n";
    out += "</svg>\n";
    return out;
}

const char* const kSummaryHeader =
    "dataset,architecture,train_loss,test_loss,unweighted_misclass_pct,unweighted_l2_error,"
    "weighted_misclass_pct,weighted_l2_error,seed";

std::string summary_table_csv(const std::vector<ExperimentSummary>& rows) {
    std::string out = std::string(kSummaryHeader) + "\n";
    for (const auto& r : rows) {
        out += r.dataset + ",\"" + r.architecture + "\"," + format_double(r.train_loss) + "," +
               format_double(r.test_loss) + "," + format_double(r.unweighted_misclass_pct) + "," +
               format_double(r.unweighted_l2_error) + "," + format_double(r.weighted_misclass_pct) +
               "," + format_double(r.weighted_l2_error) + "," + std::to_string(r.seed) + "\n";
    }
    return out;
}

// ---- complex file ----

void save_complex(const CellComplex2D& c, const std::filesystem::path& path) {
    std::string out = "cellcomplex v1\n";
    out += "box " + format_double(c.box.x_min) + " " + format_double(c.box.x_max) + " " +
           format_double(c.box.y_min) + " " + format_double(c.box.y_max) + "\n";
    out += "hidden " + std::to_string(c.hidden_count) + "\n";
    out += "vertices " + std::to_string(c.vertices.size()) + "\n";
    for (const auto& v : c.vertices)
        out += format_double(v.x) + " " + format_double(v.y) + " " + sign_string(v.sign) + "\n";
    out += "edges " + std::to_string(c.edges.size()) + "\n";
    for (const auto& e : c.edges)
        out += std::to_string(e.a) + " " + std::to_string(e.b) + " " + sign_string(e.sign) + "\n";
    out += "faces " + std::to_string(c.faces.size()) + "\n";
    for (const auto& f : c.faces) {
        out += std::to_string(f.vertices.size());
        for (int v : f.vertices) out += " " + std::to_string(v);
        out += " " + sign_string(f.sign) + "\n";
    }
    atomic_write_file(path, out);
}

namespace {

SignVector parse_sign(const std::string& s) {
    SignVector out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+')
            out[i] = 1;
        else if (s[i] == '-')
            out[i] = -1;
        else if (s[i] == '0')
            out[i] = 0;
        else
            throw std::runtime_error("bad sign character in complex file");
    }
    return out;
}

}  // namespace

CellComplex2D load_complex(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open complex: " + path.string());
    std::string word;
    auto expect = [&](const std::string& tag) {
        in >> word;
        if (word != tag) throw std::runtime_error("bad complex file near '" + word + "'");
    };
    expect("cellcomplex");
    expect("v1");
    CellComplex2D c;
    expect("box");
    in >> c.box.x_min >> c.box.x_max >> c.box.y_min >> c.box.y_max;
    expect("hidden");
    in >> c.hidden_count;
    expect("vertices");
    std::size_t n;
    in >> n;
    for (std::size_t i = 0; i < n; ++i) {
        CellComplex2D::VertexCell v;
        in >> v.x >> v.y >> word;
        v.sign = parse_sign(word);
        c.vertices.push_back(std::move(v));
    }
    expect("edges");
    in >> n;
    std::map<std::pair<int, int>, int> edge_map;
    for (std::size_t i = 0; i < n; ++i) {
        CellComplex2D::EdgeCell e;
        in >> e.a >> e.b >> word;
        e.sign = parse_sign(word);
        edge_map[std::minmax(e.a, e.b)] = static_cast<int>(i);
        c.edges.push_back(std::move(e));
    }
    c.edge_faces.assign(c.edges.size(), {-1, -1});
    expect("faces");
    in >> n;
    for (std::size_t f = 0; f < n; ++f) {
        std::size_t k;
        in >> k;
        CellComplex2D::FaceCell fc;
        fc.vertices.resize(k);
        for (auto& v : fc.vertices) in >> v;
        in >> word;
        fc.sign = parse_sign(word);
        for (std::size_t i = 0; i < k; ++i) {
            auto it = edge_map.find(std::minmax(fc.vertices[i], fc.vertices[(i + 1) % k]));
            if (it == edge_map.end()) throw std::runtime_error("face cycle edge missing in file");
            fc.edges.push_back(it->second);
            auto& ef = c.edge_faces[it->second];
            (ef[0] < 0 ? ef[0] : ef[1]) = static_cast<int>(f);
        }
        c.face_by_pattern.emplace(pattern_key(sign_to_pattern(fc.sign)), static_cast<int>(f));
        c.faces.push_back(std::move(fc));
    }
    if (!in) throw std::runtime_error("truncated complex file: " + path.string());
    return c;
}

void save_dual_graph_csv(const DualGraph& g, const std::filesystem::path& path) {
    std::string out = "tail,head,tail_pattern,head_pattern\n";
    for (const auto& [a, b] : g.edges)
        out += std::to_string(a) + "," + std::to_string(b) + "," + pattern_key(g.nodes[a].pattern) +
               "," + pattern_key(g.nodes[b].pattern) + "\n";
    atomic_write_file(path, out);
}

void save_partition_json(const PartitionReport& report, const DualGraph& g,
                         const std::filesystem::path& path) {
    std::string out = "{\n  \"fiedler_value\": " + format_double(report.fiedler_value) +
                      ",\n  \"misclassified_fraction\": " +
                      format_double(report.misclassified_fraction) +
                      ",\n  \"l2_error\": " + format_double(report.l2_error) +
                      ",\n  \"zero_entries\": " + std::to_string(report.zero_entries) +
                      ",\n  \"restricted_nodes\": [";
    for (std::size_t i = 0; i < report.restricted_nodes.size(); ++i)
        out += (i ? "," : "") + std::to_string(report.restricted_nodes[i]);
    out += "],\n  \"average_class\": [";
    for (std::size_t i = 0; i < report.average_class.size(); ++i)
        out += (i ? "," : "") + format_double(report.average_class[i]);
    out += "],\n  \"nodes\": [\n";
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        out += "    {\"pattern\": \"" + pattern_key(g.nodes[i].pattern) + "\", \"value\": " +
               format_double(report.fiedler_vector[i]) + ", \"sign\": " +
               std::to_string(static_cast<int>(report.signs[i])) + "}";
        out += i + 1 < g.nodes.size() ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    atomic_write_file(path, out);
}

std::string curves_csv_rows(int epoch, const AveragedCurves& avg) {
    std::string out;
    const double total = static_cast<double>(avg.total_cells);
    for (int dim = 0; dim < 2; ++dim) {
        const auto& curve = dim == 0 ? avg.beta0 : avg.beta1;
        for (std::size_t t = 0; t < curve.size(); ++t)
            out += std::to_string(epoch) + ",avg," + std::to_string(dim) + "," + std::to_string(t) +
                   "," + format_double(total > 0 ? 100.0 * t / total : 0.0) + "," +
                   format_double(curve[t]) + "\n";
    }
    return out;
}

void save_heatmap_csv(const HeatMapGrid& grid, const std::filesystem::path& path) {
    std::string out = "epoch,loss,total_cells,critical_filtration";
    for (int b = 0; b < grid.n_bins; ++b)
        out += ",bin" + std::to_string(b);
    out += "\n";
    for (std::size_t e = 0; e < grid.epochs.size(); ++e) {
        out += std::to_string(grid.epochs[e]) + "," + format_double(grid.loss[e]) + "," +
               std::to_string(grid.total_cells[e]) + "," + format_double(grid.critical[e]);
        for (int b = 0; b < grid.n_bins; ++b) out += "," + format_double(grid.values(e, b));
        out += "\n";
    }
    atomic_write_file(path, out);
}

void save_fvector_csv(const std::vector<int>& epochs, const std::vector<FVector>& fv,
                      const std::filesystem::path& path) {
    std::string out = "epoch,f0,f1,f2\n";
    for (std::size_t i = 0; i < epochs.size(); ++i)
        out += std::to_string(epochs[i]) + "," + std::to_string(fv[i].f0) + "," +
               std::to_string(fv[i].f1) + "," + std::to_string(fv[i].f2) + "\n";
    atomic_write_file(path, out);
}

}  // namespace pscope
