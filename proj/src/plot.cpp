#include "fgap/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace fgap {

namespace {

constexpr double kW = 640, kH = 440, kL = 70, kR = 20, kT = 30, kB = 50;

struct Axes {
    double x0, x1, y0, y1;
    bool logy = true;

    double px(double x) const { return kL + (std::log10(x) - x0) / (x1 - x0) * (kW - kL - kR); }
    double py(double y) const {
        const double v = logy ? std::log10(y) : y;
        return kH - kB - (v - y0) / (y1 - y0) * (kH - kT - kB);
    }
};

std::string header(const std::string& title) {
    return fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
                       "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
                       "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
                       kW, kH, kW, kH, kL, title);
}

std::string frame(const Axes& a, const std::string& xlabel, const std::string& ylabel) {
    std::string s = fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kL,
                                kT, kW - kL - kR, kH - kT - kB);
    for (int e = static_cast<int>(std::ceil(a.x0)); e <= static_cast<int>(std::floor(a.x1)); ++e) {
        const double x = a.px(std::pow(10.0, e));
        s += fmt::format("<line x1=\"{:.2f}\" y1=\"{}\" x2=\"{:.2f}\" y2=\"{}\" stroke=\"black\"/>\n", x, kH - kB, x, kH - kB + 5);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e{}</text>\n",
                         x, kH - kB + 18, e);
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = a.y0 + (a.y1 - a.y0) * i / 4.0;
        const double y = kH - kB - (kH - kT - kB) * i / 4.0;
        s += fmt::format("<text x=\"{}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3g}</text>\n",
                         kL - 6, y + 4, a.logy ? std::pow(10.0, v) : v);
    }
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                     (kL + kW - kR) / 2, kH - 12, xlabel);
    s += fmt::format("<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
                     "transform=\"rotate(-90 14 {})\">{}</text>\n",
                     (kT + kH - kB) / 2, (kT + kH - kB) / 2, ylabel);
    return s;
}

std::string polyline(const Axes& a, const std::vector<double>& x, const std::vector<double>& y, const std::string& style) {
    std::string pts;
    for (std::size_t i = 0; i < x.size(); ++i) pts += fmt::format("{:.2f},{:.2f} ", a.px(x[i]), a.py(y[i]));
    return fmt::format("<polyline points=\"{}\" fill=\"none\" {}/>\n", pts, style);
}

std::string points(const Axes& a, const std::vector<double>& x, const std::vector<double>& y) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"#1f77b4\"/>\n", a.px(x[i]), a.py(y[i]));
    return s;
}

Axes log_axes(const std::vector<double>& x, const std::vector<std::vector<double>>& ys, bool logy) {
    Axes a;
    a.logy = logy;
    a.x0 = std::log10(*std::min_element(x.begin(), x.end())) - 0.1;
    a.x1 = std::log10(*std::max_element(x.begin(), x.end())) + 0.1;
    double lo = 1e300, hi = -1e300;
    for (const auto& y : ys)
        for (double v : y) {
            const double t = logy ? std::log10(v) : v;
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    const double pad = std::max(0.05 * (hi - lo), logy ? 0.05 : 0.05 * std::abs(hi) + 1e-12);
    a.y0 = lo - pad;
    a.y1 = hi + pad;
    return a;
}

std::string color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    // dark blue -> yellow
    const int r = static_cast<int>(std::lround(68 + t * (253 - 68)));
    const int g = static_cast<int>(std::lround(1 + t * (231 - 1)));
    const int b = static_cast<int>(std::lround(84 + t * (37 - 84)));
    return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
}

} // namespace

std::string rate_plot_svg(const FitReport& fit) {
    std::vector<double> fitted, lo, hi;
    for (double d : fit.deltas) fitted.push_back(fit.prefactor * std::pow(d, fit.slope));
    const bool predicted = !fit.band_lo.empty();
    for (std::size_t i = 0; i < fit.deltas.size(); ++i) {
        lo.push_back(predicted ? fit.band_lo[i] : (1 - fit.tau) * fitted[i]);
        hi.push_back(predicted ? fit.band_hi[i] : (1 + fit.tau) * fitted[i]);
    }
    const Axes a = log_axes(fit.deltas, {fit.max_grad, fitted, lo, hi}, true);
    std::string s = header(fmt::format("max H(grad u) vs delta: slope {:.4f} [{:.4f}, {:.4f}]", fit.slope, fit.slope_lo, fit.slope_hi));
    std::string band;
    for (std::size_t i = 0; i < fit.deltas.size(); ++i) band += fmt::format("{:.2f},{:.2f} ", a.px(fit.deltas[i]), a.py(hi[i]));
    for (std::size_t i = fit.deltas.size(); i-- > 0;) band += fmt::format("{:.2f},{:.2f} ", a.px(fit.deltas[i]), a.py(lo[i]));
    s += fmt::format("<polygon points=\"{}\" fill=\"#ff7f0e\" fill-opacity=\"0.2\" stroke=\"none\"/>\n", band);
    s += polyline(a, fit.deltas, fitted, "stroke=\"#d62728\" stroke-width=\"1.5\"");
    s += points(a, fit.deltas, fit.max_grad);
    s += frame(a, "delta", "max H(grad u)");
    return s + "</svg>\n";
}

std::string prefactor_plot_svg(const FitReport& fit) {
    const Axes a = log_axes(fit.deltas, {fit.prefactors}, false);
    std::string s = header(fmt::format("max H(grad u) / Phi_{}(delta): spread {:.3f} over the last half-decade", fit.N,
                                       fit.prefactor_spread));
    s += polyline(a, fit.deltas, fit.prefactors, "stroke=\"#1f77b4\" stroke-width=\"1\"");
    s += points(a, fit.deltas, fit.prefactors);
    s += frame(a, "delta", "prefactor");
    return s + "</svg>\n";
}

Heatmap heatmap_svg(const FieldSnapshot& snap, double half_width) {
    const Mesh& m = snap.mesh;
    if (m.dim != 2) throw PreconditionError("heatmap_svg: 2-D meshes only");
    Heatmap h;
    const auto it = std::max_element(snap.values.begin(), snap.values.end());
    h.argmax_element = it - snap.values.begin();
    h.argmax_location = m.centroid(h.argmax_element);
    const double vmax = *it > 0.0 ? *it : 1.0;
    const double cx = h.argmax_location(0), cy = h.argmax_location(1);
    const double size = kH - kT - 10;
    const double scale = size / (2 * half_width);
    auto X = [&](double x) { return kL + (x - cx + half_width) * scale; };
    auto Y = [&](double y) { return kT + (cy + half_width - y) * scale; };
    std::string s = header(fmt::format("H(grad u) at delta = {:.4g} (max {:.4g})", snap.delta, vmax));
    s += fmt::format("<clipPath id=\"win\"><rect x=\"{}\" y=\"{}\" width=\"{:.2f}\" height=\"{:.2f}\"/></clipPath>\n<g clip-path=\"url(#win)\">\n",
                     kL, kT, size, size);
    for (long e = 0; e < m.num_elements(); ++e) {
        const int* v = m.element(e);
        double minx = 1e300, maxx = -1e300, miny = 1e300, maxy = -1e300;
        for (int i = 0; i < 3; ++i) {
            minx = std::min(minx, m.vertices(0, v[i]));
            maxx = std::max(maxx, m.vertices(0, v[i]));
            miny = std::min(miny, m.vertices(1, v[i]));
            maxy = std::max(maxy, m.vertices(1, v[i]));
        }
        if (maxx < cx - half_width || minx > cx + half_width || maxy < cy - half_width || miny > cy + half_width) continue;
        const std::string c = color(snap.values[e] / vmax);
        s += fmt::format("<polygon points=\"{:.3f},{:.3f} {:.3f},{:.3f} {:.3f},{:.3f}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"0.2\"/>\n",
                         X(m.vertices(0, v[0])), Y(m.vertices(1, v[0])), X(m.vertices(0, v[1])), Y(m.vertices(1, v[1])),
                         X(m.vertices(0, v[2])), Y(m.vertices(1, v[2])), c, c);
    }
    s += "</g>\n";
    s += fmt::format("<circle id=\"argmax\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"5\" fill=\"none\" stroke=\"red\" stroke-width=\"2\" "
                     "data-x=\"{:.17g}\" data-y=\"{:.17g}\"/>\n",
                     X(cx), Y(cy), cx, cy);
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n", kL, kT, size, size);
    for (int i = 0; i <= 10; ++i)
        s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"16\" height=\"{:.2f}\" fill=\"{}\"/>\n", kL + size + 30,
                         kT + size * (1 - (i + 1) / 11.0), size / 11.0 + 0.5, color(i / 10.0));
    s += fmt::format("<text x=\"{:.2f}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{:.3g}</text>\n", kL + size + 50, kT + 10, vmax);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n", kL + size + 50, kT + size);
    h.svg = s + "</svg>\n";
    return h;
}

std::vector<std::string> emit_plots(const std::string& dir, const FitReport& fit, const std::optional<FieldSnapshot>& snapshot) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> out;
    auto write = [&](const std::string& name, const std::string& svg) {
        const std::string path = dir + "/" + name;
        std::ofstream f(path);
        f << svg;
        out.push_back(path);
    };
    write("rate.svg", rate_plot_svg(fit));
    write("prefactor.svg", prefactor_plot_svg(fit));
    if (snapshot) write("heatmap.svg", heatmap_svg(*snapshot).svg);
    return out;
}

} // namespace fgap
