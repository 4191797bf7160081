#include "fgap/mesh.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fgap {

const char* to_string(BoundaryTag tag) {
    switch (tag) {
    case BoundaryTag::Interior: return "interior";
    case BoundaryTag::Outer: return "outer";
    case BoundaryTag::Inclusion1: return "inclusion1";
    case BoundaryTag::Inclusion2: return "inclusion2";
    case BoundaryTag::Axis: return "axis";
    }
    return "?";
}

namespace {

using V2 = Eigen::Vector2d;
constexpr double kPi = std::numbers::pi;

bool is_curve(BoundaryTag t) {
    return t == BoundaryTag::Outer || t == BoundaryTag::Inclusion1 || t == BoundaryTag::Inclusion2;
}

uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

Mat quadratic_part(const NormModel& n) {
    if (n.family() == NormFamily::PerturbedEllipse) return n.frame().transpose() * n.matrix() * n.frame();
    return n.matrix();
}

Mat spd_sqrt(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

// T = M^{1/2} R with R a proper rotation chosen so that T^{-1} e_N is parallel to e_N
Mat frame_map(const NormModel& norm) {
    const int d = norm.dim();
    const Mat S = spd_sqrt(quadratic_part(norm));
    Vec e = Vec::Zero(d);
    e(d - 1) = 1.0;
    Vec dir = S.ldlt().solve(e);
    dir.normalize();
    Mat R = Mat::Identity(d, d);
    const Vec v = e - dir;
    if (v.norm() > 1e-14) {
        const Mat H = Mat::Identity(d, d) - 2.0 * v * v.transpose() / v.squaredNorm();
        Mat F = Mat::Identity(d, d);
        F(0, 0) = -1.0;
        R = H * F;
    }
    return S * R;
}

// ---------------------------------------------------------------------------------------
// Incremental constrained Delaunay triangulation (Lawson flips).

class Triangulation {
public:
    struct Tri {
        std::array<int, 3> v;
        std::array<int, 3> n; // n[i] is across the edge opposite v[i]
    };

    std::vector<V2> P;
    std::vector<Tri> T;
    std::unordered_set<uint64_t> constrained;

    Triangulation(const V2& center, double span) : span_(span) {
        const double L = 30.0 * span;
        P.push_back(center + V2(-L, -L));
        P.push_back(center + V2(L, -L));
        P.push_back(center + V2(0.0, L));
        T.push_back({{0, 1, 2}, {-1, -1, -1}});
    }

    static double orient(const V2& a, const V2& b, const V2& c) {
        return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    }

    // d strictly inside the circumcircle of the counter-clockwise triangle abc
    static bool incircle(const V2& a, const V2& b, const V2& c, const V2& d) {
        const long double adx = a.x() - d.x(), ady = a.y() - d.y();
        const long double bdx = b.x() - d.x(), bdy = b.y() - d.y();
        const long double cdx = c.x() - d.x(), cdy = c.y() - d.y();
        const long double al = adx * adx + ady * ady, bl = bdx * bdx + bdy * bdy, cl = cdx * cdx + cdy * cdy;
        const long double t1 = bdx * cdy - cdx * bdy, t2 = cdx * ady - adx * cdy, t3 = adx * bdy - bdx * ady;
        const long double det = al * t1 + bl * t2 + cl * t3;
        const long double perm = al * (fabsl(bdx * cdy) + fabsl(cdx * bdy)) + bl * (fabsl(cdx * ady) + fabsl(adx * cdy)) +
                                 cl * (fabsl(adx * bdy) + fabsl(bdx * ady));
        return det > 1e-12L * perm;
    }

    int insert(const V2& p) {
        const int t = locate(p);
        const Tri& tr = T[t];
        double o[3];
        int zeros = 0, zi = -1;
        for (int i = 0; i < 3; ++i) {
            if ((P[tr.v[i]] - p).norm() <= 1e-13 * span_) return tr.v[i];
            o[i] = orient(P[tr.v[(i + 1) % 3]], P[tr.v[(i + 2) % 3]], p);
            if (o[i] == 0.0) {
                ++zeros;
                zi = i;
            }
        }
        const int id = static_cast<int>(P.size());
        P.push_back(p);
        std::vector<std::pair<int, int>> stack;
        if (zeros == 1 && tr.n[zi] >= 0)
            split_edge(t, zi, id, stack);
        else
            split_face(t, id, stack);
        legalize(stack);
        return id;
    }

    void edge_set(std::unordered_set<uint64_t>& edges) const {
        edges.clear();
        for (const auto& tr : T)
            for (int i = 0; i < 3; ++i) edges.insert(edge_key(tr.v[(i + 1) % 3], tr.v[(i + 2) % 3]));
    }

private:
    double span_;
    int last_ = 0;

    int locate(const V2& p) {
        int t = last_;
        const long limit = 200 + 20 * static_cast<long>(std::sqrt(static_cast<double>(T.size())));
        for (long steps = 0; steps < limit; ++steps) {
            const Tri& tr = T[t];
            bool moved = false;
            for (int k = 0; k < 3; ++k) {
                const int i = static_cast<int>((steps + k) % 3);
                if (orient(P[tr.v[(i + 1) % 3]], P[tr.v[(i + 2) % 3]], p) < 0.0 && tr.n[i] >= 0) {
                    t = tr.n[i];
                    moved = true;
                    break;
                }
            }
            if (!moved) return last_ = t;
        }
        for (int s = 0; s < static_cast<int>(T.size()); ++s) {
            const Tri& tr = T[s];
            if (orient(P[tr.v[0]], P[tr.v[1]], p) >= 0 && orient(P[tr.v[1]], P[tr.v[2]], p) >= 0 &&
                orient(P[tr.v[2]], P[tr.v[0]], p) >= 0)
                return last_ = s;
        }
        throw GeometryError("triangulation: point location failed");
    }

    void replace_neighbor(int t, int from, int to) {
        if (t < 0) return;
        for (int i = 0; i < 3; ++i)
            if (T[t].n[i] == from) {
                T[t].n[i] = to;
                return;
            }
    }

    void split_face(int t, int p, std::vector<std::pair<int, int>>& stack) {
        const auto [a, b, c] = T[t].v;
        const int na = T[t].n[0], nb = T[t].n[1], nc = T[t].n[2];
        const int t1 = static_cast<int>(T.size()), t2 = t1 + 1;
        T[t] = {{p, a, b}, {nc, t1, t2}};
        T.push_back({{p, b, c}, {na, t2, t}});
        T.push_back({{p, c, a}, {nb, t, t1}});
        replace_neighbor(na, t, t1);
        replace_neighbor(nb, t, t2);
        stack.push_back({t, 0});
        stack.push_back({t1, 0});
        stack.push_back({t2, 0});
        last_ = t;
    }

    void split_edge(int t, int i, int p, std::vector<std::pair<int, int>>& stack) {
        const int a = T[t].v[i], b = T[t].v[(i + 1) % 3], c = T[t].v[(i + 2) % 3];
        const int u = T[t].n[i];
        const int nb = T[t].n[(i + 1) % 3], nc = T[t].n[(i + 2) % 3];
        int j = 0;
        while (T[u].n[j] != t) ++j;
        const int d = T[u].v[j];
        // u = (d, c, b)
        const int mc = T[u].n[(j + 1) % 3], mb = T[u].n[(j + 2) % 3];
        const int T1 = static_cast<int>(T.size()), T3 = T1 + 1;
        T[t] = {{p, a, b}, {nc, u, T1}};
        T.push_back({{p, c, a}, {nb, t, T3}});
        T[u] = {{p, b, d}, {mc, T3, t}};
        T.push_back({{p, d, c}, {mb, T1, u}});
        replace_neighbor(nb, t, T1);
        replace_neighbor(mb, u, T3);
        const uint64_t k = edge_key(b, c);
        if (constrained.erase(k)) {
            constrained.insert(edge_key(b, p));
            constrained.insert(edge_key(p, c));
        }
        for (int s : {t, T1, u, T3}) stack.push_back({s, 0});
        last_ = t;
    }

    void legalize(std::vector<std::pair<int, int>>& stack) {
        while (!stack.empty()) {
            const auto [t, i] = stack.back();
            stack.pop_back();
            const int u = T[t].n[i];
            if (u < 0) continue;
            const int p = T[t].v[i], a = T[t].v[(i + 1) % 3], b = T[t].v[(i + 2) % 3];
            if (constrained.count(edge_key(a, b))) continue;
            int j = 0;
            while (T[u].n[j] != t) ++j;
            const int q = T[u].v[j];
            if (!incircle(P[p], P[a], P[b], P[q])) continue;
            const int nta = T[t].n[(i + 1) % 3], ntb = T[t].n[(i + 2) % 3];
            const int nub = T[u].n[(j + 1) % 3], nua = T[u].n[(j + 2) % 3];
            T[t] = {{p, a, q}, {nub, u, ntb}};
            T[u] = {{p, q, b}, {nua, nta, t}};
            replace_neighbor(nub, u, t);
            replace_neighbor(nta, t, u);
            stack.push_back({t, 0});
            stack.push_back({u, 0});
        }
    }
};

// ---------------------------------------------------------------------------------------
// Planar mesher in the meshing frame (full plane, or the half plane y0 >= 0 as meridian).

struct PlanarMesh {
    std::vector<V2> y;
    std::vector<std::array<int, 3>> tris;
    std::vector<std::array<int, 2>> edges;
    std::vector<BoundaryTag> edge_tags;
    std::vector<BoundaryTag> vertex_tags;
};

class PlanarBuilder {
public:
    PlanarBuilder(const MeshDomain& dom, const MeshParams& par, const Mat& T, bool half)
        : dom_(dom), par_(par), T_(T), Tinv_(T.inverse()), half_(half) {
        const int d = dom.dim;
        auto to_plane = [&](const Vec& x) {
            const Vec y = Tinv_ * (x - dom.outer.center);
            double off = 0.0;
            for (int i = 0; i < d - 1; ++i) off = std::max(off, std::abs(y(i)));
            if (off > 1e-9 * (1.0 + y.norm()))
                throw PreconditionError("build_mesh: inclusion centers must lie on the e_N axis through the outer center");
            return V2(0.0, y(d - 1));
        };
        curves_.push_back({V2(0.0, 0.0), dom.outer.radius, BoundaryTag::Outer});
        for (std::size_t i = 0; i < dom.inclusions.size(); ++i)
            curves_.push_back({to_plane(dom.inclusions[i].center), dom.inclusions[i].radius,
                               i == 0 ? BoundaryTag::Inclusion1 : BoundaryTag::Inclusion2});
        if (dom.focus) focus_ = to_plane_any(*dom.focus);
        h_max_ = par.h_max;
        h_min_ = par.h_min > 0 ? par.h_min : (dom.delta > 0 ? dom.delta / (2.0 * par.k_gap) : par.h_max);
        h_min_ = std::min(h_min_, h_max_);
        lipschitz_ = dom.norm.is_quadratic() ? 1.0 : 1.5;
    }

    PlanarMesh build(long element_budget) {
        double ext = 0.0;
        for (int k = 0; k < 256; ++k) {
            const double a = 2 * kPi * k / 256;
            ext = std::max(ext, rho(0, V2(std::cos(a), std::sin(a))));
        }
        ext *= 1.05;
        Triangulation tri(V2(0.0, 0.0), ext);

        // boundary chains
        std::vector<Chain> chains;
        std::vector<BoundaryTag> ptag{BoundaryTag::Interior, BoundaryTag::Interior, BoundaryTag::Interior};
        auto add = [&](const V2& p, BoundaryTag tag) {
            const int id = tri.insert(p);
            if (id >= static_cast<int>(ptag.size())) ptag.resize(id + 1, BoundaryTag::Interior);
            if (ptag[id] == BoundaryTag::Interior || (is_curve(tag) && !is_curve(ptag[id]))) ptag[id] = tag;
            return id;
        };
        std::vector<std::pair<int, int>> axis_ends(curves_.size());
        for (std::size_t c = 0; c < curves_.size(); ++c) {
            Chain ch{curves_[c].tag, static_cast<int>(c), !half_, {}};
            const double a0 = -kPi / 2, a1 = half_ ? kPi / 2 : 3 * kPi / 2;
            for (const V2& p : sample_curve(static_cast<int>(c), a0, a1, !half_)) ch.pts.push_back(add(p, ch.tag));
            axis_ends[c] = {ch.pts.front(), ch.pts.back()};
            chains.push_back(std::move(ch));
        }
        if (half_) {
            // axis segments between consecutive boundary crossings
            std::vector<std::pair<double, int>> marks; // (z, point id)
            marks.push_back({tri.P[axis_ends[0].first].y(), axis_ends[0].first});
            marks.push_back({tri.P[axis_ends[0].second].y(), axis_ends[0].second});
            for (std::size_t c = 1; c < curves_.size(); ++c) {
                marks.push_back({tri.P[axis_ends[c].first].y(), axis_ends[c].first});
                marks.push_back({tri.P[axis_ends[c].second].y(), axis_ends[c].second});
            }
            std::sort(marks.begin(), marks.end());
            for (std::size_t k = 0; k + 1 < marks.size(); k += 2) {
                Chain ch{BoundaryTag::Axis, -1, false, {}};
                const V2 a(0.0, marks[k].first), b(0.0, marks[k + 1].first);
                ch.pts.push_back(marks[k].second);
                const auto inner = sample_segment(a, b);
                for (std::size_t i = 1; i + 1 < inner.size(); ++i) ch.pts.push_back(add(inner[i], BoundaryTag::Axis));
                ch.pts.push_back(marks[k + 1].second);
                chains.push_back(std::move(ch));
            }
        }

        // interior points
        const auto pts = interior_points(ext, element_budget);
        for (const V2& p : pts) add(p, BoundaryTag::Interior);

        recover(tri, chains, ptag);
        return extract(tri, chains, ptag);
    }

    double size(const V2& y) const {
        double h = h_max_;
        if (focus_) h = std::min(h, std::max(h_min_, par_.theta * (y - *focus_).norm()));
        if (curves_.size() == 3) {
            const double g = std::max(sdist(1, y), 0.0) + std::max(sdist(2, y), 0.0);
            h = std::min(h, std::max(h_min_, g / par_.k_gap));
        }
        return h;
    }

    Vec embed(const V2& v) const {
        Vec y = Vec::Zero(dom_.dim);
        y(0) = v.x();
        y(dom_.dim - 1) = v.y();
        return y;
    }

private:
    struct Curve {
        V2 c;
        double r;
        BoundaryTag tag;
    };
    struct Chain {
        BoundaryTag tag;
        int curve;
        bool closed;
        std::vector<int> pts;
    };

    const MeshDomain& dom_;
    MeshParams par_;
    Mat T_, Tinv_;
    bool half_;
    std::vector<Curve> curves_;
    std::optional<V2> focus_;
    double h_max_ = 0.25, h_min_ = 0.01, lipschitz_ = 1.0;

    V2 to_plane_any(const Vec& x) const {
        const Vec y = Tinv_ * (x - dom_.outer.center);
        return V2(y(0), y(dom_.dim - 1));
    }

    double h0y(const V2& v) const { return eval_dual(dom_.norm, T_ * embed(v)); }
    double rho(int c, const V2& u) const { return curves_[c].r / h0y(u); }
    double sdist(int c, const V2& y) const { return h0y(y - curves_[c].c) - curves_[c].r; }

    bool inside(const V2& y) const {
        if (half_ && y.x() <= 0.0) return false;
        if (sdist(0, y) >= 0.0) return false;
        for (std::size_t c = 1; c < curves_.size(); ++c)
            if (sdist(static_cast<int>(c), y) <= 0.0) return false;
        return true;
    }

    V2 curve_point(int c, double a) const {
        const V2 u(std::cos(a), std::sin(a));
        V2 p = curves_[c].c + rho(c, u) * u;
        return p;
    }

    V2 project(int c, const V2& y) const {
        const V2 u = (y - curves_[c].c).normalized();
        return curves_[c].c + rho(c, u) * u;
    }

    // points equidistributed in the metric 1/h along the curve, exactly on it
    std::vector<V2> sample_curve(int c, double a0, double a1, bool closed) const {
        std::vector<double> A{a0}, F{0.0};
        V2 prev = curve_point(c, a0);
        double hprev = size(prev);
        double a = a0;
        while (a < a1) {
            const double r = (prev - curves_[c].c).norm();
            a = std::min(a1, a + std::min(0.02, 0.2 * hprev / r));
            const V2 cur = curve_point(c, a);
            const double hc = size(cur);
            F.push_back(F.back() + (cur - prev).norm() * 0.5 * (1.0 / hprev + 1.0 / hc));
            A.push_back(a);
            prev = cur;
            hprev = hc;
        }
        const int n = std::max(closed ? 8 : 2, static_cast<int>(std::lround(F.back())));
        std::vector<V2> out;
        const int last = closed ? n - 1 : n;
        for (int k = 0; k <= last; ++k) {
            const double target = F.back() * k / n;
            const auto it = std::lower_bound(F.begin(), F.end(), target);
            std::size_t j = std::clamp<std::size_t>(it - F.begin(), 1, F.size() - 1);
            const double s = (target - F[j - 1]) / (F[j] - F[j - 1]);
            double ak = (k == 0) ? a0 : (k == n ? a1 : A[j - 1] + s * (A[j] - A[j - 1]));
            V2 p = curve_point(c, ak);
            if (half_ && (k == 0 || k == n)) p.x() = 0.0;
            out.push_back(p);
        }
        return out;
    }

    std::vector<V2> sample_segment(const V2& a, const V2& b) const {
        const double len = (b - a).norm();
        std::vector<double> S{0.0}, F{0.0};
        double s = 0.0, hprev = size(a);
        while (s < len) {
            const double sn = std::min(len, s + 0.2 * hprev);
            const double hc = size(a + (b - a) * (sn / len));
            F.push_back(F.back() + (sn - s) * 0.5 * (1.0 / hprev + 1.0 / hc));
            S.push_back(sn);
            s = sn;
            hprev = hc;
        }
        const int n = std::max(1, static_cast<int>(std::lround(F.back())));
        std::vector<V2> out;
        for (int k = 0; k <= n; ++k) {
            const double target = F.back() * k / n;
            const auto it = std::lower_bound(F.begin(), F.end(), target);
            std::size_t j = std::clamp<std::size_t>(it - F.begin(), 1, F.size() - 1);
            const double t = (target - F[j - 1]) / (F[j] - F[j - 1]);
            const double sk = S[j - 1] + t * (S[j] - S[j - 1]);
            V2 p = a + (b - a) * (sk / len);
            p.x() = 0.0;
            out.push_back(p);
        }
        return out;
    }

    std::vector<V2> interior_points(double ext, long element_budget) const {
        struct Cell {
            V2 c;
            double s;
        };
        std::vector<Cell> stack{{V2(0.0, 0.0), ext}};
        std::vector<V2> out;
        std::mt19937_64 rng(par_.seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        const double lh = std::max(par_.theta, lipschitz_ / par_.k_gap);
        long leaves = 0;
        while (!stack.empty()) {
            const Cell cell = stack.back();
            stack.pop_back();
            const double diag = std::sqrt(2.0) * cell.s;
            if (half_ && cell.c.x() + cell.s <= 0.0) continue;
            if (sdist(0, cell.c) > lipschitz_ * diag) continue;
            bool covered = false;
            for (std::size_t c = 1; c < curves_.size(); ++c)
                if (sdist(static_cast<int>(c), cell.c) < -lipschitz_ * diag) covered = true;
            if (covered) continue;
            const double hlow = std::max(h_min_, size(cell.c) - lh * diag);
            if (2.0 * cell.s > hlow) {
                const double q = cell.s / 2;
                // pushed in reverse so that the traversal is a z-order walk
                stack.push_back({cell.c + V2(q, q), q});
                stack.push_back({cell.c + V2(-q, q), q});
                stack.push_back({cell.c + V2(q, -q), q});
                stack.push_back({cell.c + V2(-q, -q), q});
                continue;
            }
            if (++leaves * 2 > element_budget)
                throw ResourceError(fmt::format(
                    "build_mesh: more than {} elements needed; try a coarser grading, e.g. theta = {:.3g} or a larger h_min",
                    element_budget, 2 * par_.theta));
            const V2 p = cell.c + par_.jitter * cell.s * V2(U(rng), U(rng));
            if (!inside(p)) continue;
            const double hp = size(p);
            bool near = half_ && p.x() < 0.45 * hp;
            for (std::size_t c = 0; c < curves_.size() && !near; ++c)
                if (std::abs(sdist(static_cast<int>(c), p)) < 0.45 * hp) near = true;
            if (!near) out.push_back(p);
        }
        return out;
    }

    void recover(Triangulation& tri, std::vector<Chain>& chains, std::vector<BoundaryTag>& ptag) const {
        std::unordered_set<uint64_t> edges;
        for (int round = 0; round < 60; ++round) {
            tri.edge_set(edges);
            bool complete = true;
            for (Chain& ch : chains) {
                std::vector<int> next;
                const std::size_t n = ch.pts.size();
                const std::size_t segs = ch.closed ? n : n - 1;
                for (std::size_t i = 0; i < segs; ++i) {
                    const int a = ch.pts[i], b = ch.pts[(i + 1) % n];
                    next.push_back(a);
                    if (edges.count(edge_key(a, b))) {
                        tri.constrained.insert(edge_key(a, b));
                        continue;
                    }
                    complete = false;
                    V2 m = 0.5 * (tri.P[a] + tri.P[b]);
                    if (ch.curve >= 0) m = project(ch.curve, m);
                    if (half_ && ch.tag == BoundaryTag::Axis) m.x() = 0.0;
                    const int id = tri.insert(m);
                    if (id == a || id == b) throw GeometryError("build_mesh: boundary segment recovery failed");
                    if (id >= static_cast<int>(ptag.size())) ptag.resize(id + 1, BoundaryTag::Interior);
                    ptag[id] = ch.tag;
                    next.push_back(id);
                }
                if (!ch.closed) next.push_back(ch.pts.back());
                ch.pts = std::move(next);
            }
            if (complete) return;
        }
        throw GeometryError("build_mesh: boundary segment recovery did not converge");
    }

    PlanarMesh extract(const Triangulation& tri, const std::vector<Chain>& chains, std::vector<BoundaryTag>& ptag) const {
        std::unordered_map<uint64_t, BoundaryTag> etag;
        for (const Chain& ch : chains) {
            const std::size_t n = ch.pts.size();
            const std::size_t segs = ch.closed ? n : n - 1;
            for (std::size_t i = 0; i < segs; ++i) etag[edge_key(ch.pts[i], ch.pts[(i + 1) % n])] = ch.tag;
        }
        ptag.resize(tri.P.size(), BoundaryTag::Interior);
        const int nt = static_cast<int>(tri.T.size());
        std::vector<int> comp(nt, -1);
        std::vector<char> keep(nt, 0);
        std::vector<int> queue;
        for (int s = 0; s < nt; ++s) {
            if (comp[s] >= 0) continue;
            queue.assign(1, s);
            comp[s] = s;
            int best = s;
            double best_area = -1.0;
            bool super = false;
            for (std::size_t q = 0; q < queue.size(); ++q) {
                const int t = queue[q];
                const auto& tr = tri.T[t];
                if (tr.v[0] < 3 || tr.v[1] < 3 || tr.v[2] < 3) super = true;
                const double area = Triangulation::orient(tri.P[tr.v[0]], tri.P[tr.v[1]], tri.P[tr.v[2]]);
                if (area > best_area) {
                    best_area = area;
                    best = t;
                }
                for (int i = 0; i < 3; ++i) {
                    const int u = tr.n[i];
                    if (u < 0 || comp[u] >= 0) continue;
                    if (etag.count(edge_key(tr.v[(i + 1) % 3], tr.v[(i + 2) % 3]))) continue;
                    comp[u] = s;
                    queue.push_back(u);
                }
            }
            if (super) continue;
            const auto& bt = tri.T[best];
            const V2 cen = (tri.P[bt.v[0]] + tri.P[bt.v[1]] + tri.P[bt.v[2]]) / 3.0;
            if (inside(cen))
                for (int t : queue) keep[t] = 1;
        }

        PlanarMesh out;
        std::vector<int> remap(tri.P.size(), -1);
        for (int t = 0; t < nt; ++t) {
            if (!keep[t]) continue;
            std::array<int, 3> v;
            for (int i = 0; i < 3; ++i) {
                int& r = remap[tri.T[t].v[i]];
                if (r < 0) {
                    r = static_cast<int>(out.y.size());
                    out.y.push_back(tri.P[tri.T[t].v[i]]);
                    out.vertex_tags.push_back(ptag[tri.T[t].v[i]]);
                }
                v[i] = r;
            }
            out.tris.push_back(v);
            for (int i = 0; i < 3; ++i) {
                const int a = tri.T[t].v[(i + 1) % 3], b = tri.T[t].v[(i + 2) % 3];
                const auto it = etag.find(edge_key(a, b));
                const int u = tri.T[t].n[i];
                if (it != etag.end() && (u < 0 || !keep[u])) {
                    out.edges.push_back({v[(i + 1) % 3], v[(i + 2) % 3]});
                    out.edge_tags.push_back(it->second);
                } else if (it == etag.end() && (u < 0 || !keep[u])) {
                    throw GeometryError("build_mesh: domain boundary not recovered");
                }
            }
        }
        return out;
    }
};

const WulffShape& shape_of(const MeshDomain& dom, BoundaryTag tag) {
    if (tag == BoundaryTag::Outer) return dom.outer;
    return dom.inclusions.at(static_cast<int>(tag) - static_cast<int>(BoundaryTag::Inclusion1));
}

double signed_volume(const Mat& X, const int* v, int dim) {
    Mat J(dim, dim);
    for (int i = 0; i < dim; ++i) J.col(i) = X.col(v[i + 1]) - X.col(v[0]);
    double f = 1.0;
    for (int i = 2; i <= dim; ++i) f *= i;
    return J.determinant() / f;
}

void orient_positive(const Mat& X, int* v, int dim) {
    if (signed_volume(X, v, dim) < 0.0) std::swap(v[0], v[1]);
}

struct FaceHash {
    std::size_t operator()(const std::array<int, 3>& f) const {
        uint64_t h = 1469598103934665603ull;
        for (int x : f) h = (h ^ static_cast<uint64_t>(x)) * 1099511628211ull;
        return h;
    }
};

std::array<int, 3> face_key(const int* v, int n) {
    std::array<int, 3> f{-1, -1, -1};
    for (int i = 0; i < n; ++i) f[i] = v[i];
    std::sort(f.begin(), f.begin() + n);
    return f;
}

// boundary facets from element faces: a face with one element is tagged when all its
// vertices carry the same curve tag
void derive_facets(Mesh& m) {
    const int d = m.dim;
    std::unordered_map<std::array<int, 3>, int, FaceHash> count;
    std::vector<int> face(d);
    for (long e = 0; e < m.num_elements(); ++e) {
        const int* v = m.element(e);
        for (int skip = 0; skip <= d; ++skip) {
            int k = 0;
            for (int i = 0; i <= d; ++i)
                if (i != skip) face[k++] = v[i];
            ++count[face_key(face.data(), d)];
        }
    }
    m.facets.clear();
    m.facet_tags.clear();
    for (const auto& [f, c] : count) {
        if (c != 1) continue;
        const BoundaryTag t = m.vertex_tags[f[0]];
        bool same = is_curve(t);
        for (int i = 1; i < d; ++i) same = same && m.vertex_tags[f[i]] == t;
        for (int i = 0; i < d; ++i) m.facets.push_back(f[i]);
        m.facet_tags.push_back(same ? t : BoundaryTag::Interior);
    }
}

Mesh revolve(const PlanarMesh& pm, const MeshDomain& dom, const Mat& T, int K, long budget) {
    if (K < 3) throw PreconditionError("build_mesh: at least 3 sectors are required");
    if (static_cast<long>(pm.tris.size()) * 3 * K > budget)
        throw ResourceError(fmt::format("build_mesh: {} elements exceed the budget of {}; use fewer sectors or a coarser grading",
                                        pm.tris.size() * 3 * K, budget));
    Mesh m;
    m.dim = 3;
    const int nv = static_cast<int>(pm.y.size());
    std::vector<int> base(nv);
    std::vector<char> on_axis(nv);
    int count = 0;
    for (int v = 0; v < nv; ++v) {
        on_axis[v] = pm.y[v].x() == 0.0;
        base[v] = count;
        count += on_axis[v] ? 1 : K;
    }
    m.vertices.resize(3, count);
    m.vertex_tags.assign(count, BoundaryTag::Interior);
    for (int v = 0; v < nv; ++v) {
        const BoundaryTag tag = pm.vertex_tags[v] == BoundaryTag::Axis ? BoundaryTag::Interior : pm.vertex_tags[v];
        const int reps = on_axis[v] ? 1 : K;
        for (int k = 0; k < reps; ++k) {
            const double a = 2 * kPi * k / K;
            Vec y(3);
            y << pm.y[v].x() * std::cos(a), pm.y[v].x() * std::sin(a), pm.y[v].y();
            m.vertices.col(base[v] + k) = dom.outer.center + T * y;
            m.vertex_tags[base[v] + k] = tag;
        }
    }
    auto id = [&](int v, int k) { return on_axis[v] ? base[v] : base[v] + (k % K); };
    for (const auto& t : pm.tris) {
        std::array<int, 3> s = t;
        std::sort(s.begin(), s.end());
        const int a = s[0], b = s[1], c = s[2];
        for (int k = 0; k < K; ++k) {
            const std::array<std::array<int, 4>, 3> tets{{{id(a, k), id(b, k), id(c, k), id(c, k + 1)},
                                                          {id(a, k), id(b, k), id(b, k + 1), id(c, k + 1)},
                                                          {id(a, k), id(a, k + 1), id(b, k + 1), id(c, k + 1)}}};
            for (auto tet : tets) {
                std::array<int, 4> srt = tet;
                std::sort(srt.begin(), srt.end());
                if (std::adjacent_find(srt.begin(), srt.end()) != srt.end()) continue;
                orient_positive(m.vertices, tet.data(), 3);
                m.simplices.insert(m.simplices.end(), tet.begin(), tet.end());
            }
        }
    }
    derive_facets(m);
    return m;
}

// Concentric 3-D domain: cubed-sphere shell in the meshing frame. Equiangular face grid,
// uniform radial layers; every hex is cut into two prisms along the face diagonal through the
// smaller surface index, every prism into three tetrahedra by the smallest-index rule.
Mesh shell(const MeshDomain& dom, const Mat& T, const MeshParams& params) {
    const double r = dom.inclusions[0].radius, R = dom.outer.radius;
    const int n = std::max(2, static_cast<int>(std::ceil(0.25 * kPi * (r + R) / params.h_max)));
    const int layers = std::max(1, static_cast<int>(std::ceil((R - r) / params.h_max)));
    const long estimate = 6L * n * n * layers * 6;
    if (estimate > params.max_elements)
        throw ResourceError(fmt::format("build_mesh: {} elements exceed the budget of {}", estimate, params.max_elements));

    Mesh m;
    m.dim = 3;
    std::unordered_map<long, int> ids;
    std::vector<Vec> X;
    std::vector<BoundaryTag> tags;
    auto vertex = [&](const std::array<int, 3>& g, int k) {
        const long key = ((static_cast<long>(g[0]) * (n + 1) + g[1]) * (n + 1) + g[2]) * (layers + 1) + k;
        const auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        Vec dir(3);
        for (int i = 0; i < 3; ++i) dir(i) = std::tan(0.25 * kPi * (2.0 * g[i] / n - 1.0));
        dir.normalize();
        const double rho = k == layers ? R : r + (R - r) * k / layers;
        const int id = static_cast<int>(X.size());
        X.push_back(dom.outer.center + T * (rho * dir));
        tags.push_back(k == 0 ? BoundaryTag::Inclusion1 : (k == layers ? BoundaryTag::Outer : BoundaryTag::Interior));
        ids.emplace(key, id);
        return id;
    };

    std::vector<std::array<int, 4>> tets;
    auto prism = [&](std::array<int, 6> V) {
        const int p = static_cast<int>(std::min_element(V.begin(), V.end()) - V.begin());
        if (p >= 3)
            for (int i = 0; i < 3; ++i) std::swap(V[i], V[i + 3]);
        const int s = p % 3;
        std::rotate(V.begin(), V.begin() + s, V.begin() + 3);
        std::rotate(V.begin() + 3, V.begin() + 3 + s, V.end());
        if (std::min(V[1], V[5]) < std::min(V[2], V[4])) {
            tets.push_back({V[0], V[1], V[2], V[5]});
            tets.push_back({V[0], V[1], V[5], V[4]});
        } else {
            tets.push_back({V[0], V[1], V[2], V[4]});
            tets.push_back({V[0], V[4], V[2], V[5]});
        }
        tets.push_back({V[0], V[4], V[5], V[3]});
    };
    for (int ax = 0; ax < 3; ++ax) {
        const int u = (ax + 1) % 3, v = (ax + 2) % 3;
        for (int side = 0; side < 2; ++side) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    std::array<std::array<int, 3>, 4> g; // quad corners in cyclic order
                    const int di[4] = {0, 1, 1, 0}, dj[4] = {0, 0, 1, 1};
                    for (int q = 0; q < 4; ++q) {
                        g[q][ax] = side * n;
                        g[q][u] = i + di[q];
                        g[q][v] = j + dj[q];
                    }
                    std::array<int, 4> surf;
                    for (int q = 0; q < 4; ++q) surf[q] = vertex(g[q], 0);
                    const int q0 = static_cast<int>(std::min_element(surf.begin(), surf.end()) - surf.begin()) % 2;
                    const std::array<std::array<int, 3>, 2> halves{{{q0, q0 + 1, q0 + 2}, {q0, q0 + 2, (q0 + 3) % 4}}};
                    for (int k = 0; k < layers; ++k)
                        for (const auto& h : halves)
                            prism({vertex(g[h[0]], k), vertex(g[h[1]], k), vertex(g[h[2]], k), vertex(g[h[0]], k + 1),
                                   vertex(g[h[1]], k + 1), vertex(g[h[2]], k + 1)});
                }
        }
    }
    m.vertices.resize(3, static_cast<long>(X.size()));
    for (std::size_t i = 0; i < X.size(); ++i) m.vertices.col(i) = X[i];
    m.vertex_tags = tags;
    for (auto t : tets) {
        orient_positive(m.vertices, t.data(), 3);
        m.simplices.insert(m.simplices.end(), t.begin(), t.end());
    }
    derive_facets(m);
    return m;
}

} // namespace

Vec Mesh::centroid(long e) const {
    Vec c = Vec::Zero(dim);
    const int* v = element(e);
    for (int i = 0; i <= dim; ++i) c += vertices.col(v[i]);
    return c / (dim + 1);
}

double Mesh::volume(long e) const { return signed_volume(vertices, element(e), dim); }

MeshDomain MeshDomain::from_config(const WulffConfig& cfg) {
    MeshDomain d{.norm = cfg.norm};
    d.dim = cfg.dim;
    d.inclusions = {cfg.shape1, cfg.shape2};
    d.outer = WulffShape{Vec::Zero(cfg.dim), cfg.outer_radius};
    d.focus = Vec::Zero(cfg.dim);
    d.delta = cfg.delta;
    return d;
}

MeshDomain MeshDomain::annulus(const NormModel& norm, const Vec& center, double r, double R) {
    if (!(r > 0.0 && r < R)) throw DomainError("MeshDomain::annulus: need 0 < r < R");
    MeshDomain d{.norm = norm};
    d.dim = norm.dim();
    d.inclusions = {WulffShape{center, r}};
    d.outer = WulffShape{center, R};
    return d;
}

Mesh build_mesh(const MeshDomain& domain, const MeshParams& params) {
    const int d = domain.dim;
    if (d != domain.norm.dim()) throw PreconditionError("build_mesh: norm dimension does not match the domain");
    if (d >= 4 || d < 2) throw PreconditionError("build_mesh: only N = 2 and N = 3 are meshed");
    if (d == 3 && !domain.norm.is_quadratic())
        throw PreconditionError("build_mesh: 3-D meshes need a Euclidean or Ellipse norm");
    if (domain.inclusions.empty() || domain.inclusions.size() > 2)
        throw PreconditionError("build_mesh: one or two inclusions are supported");
    for (const auto& s : domain.inclusions)
        if (eval_dual(domain.norm, s.center - domain.outer.center) + s.radius >= domain.outer.radius)
            throw PreconditionError("build_mesh: inclusions must lie inside the outer Wulff ball");
    if (!(params.h_max > 0.0 && params.theta > 0.0 && params.k_gap >= 1))
        throw PreconditionError("build_mesh: invalid grading parameters");

    const Mat T = frame_map(domain.norm);
    if (d == 3 && domain.inclusions.size() == 1 && (domain.inclusions[0].center - domain.outer.center).norm() == 0.0) {
        Mesh m = shell(domain, T, params);
        m.domain = std::make_shared<MeshDomain>(domain);
        m.T = T;
        m.origin = domain.outer.center;
        return m;
    }
    const bool half = d == 3;
    const long budget2d = half ? params.max_elements / (3L * std::max(params.sectors, 1)) : params.max_elements;
    PlanarBuilder builder(domain, params, T, half);
    const PlanarMesh pm = builder.build(budget2d);

    Mesh m;
    if (half) {
        m = revolve(pm, domain, T, params.sectors, params.max_elements);
    } else {
        m.dim = 2;
        m.vertices.resize(2, static_cast<long>(pm.y.size()));
        for (std::size_t v = 0; v < pm.y.size(); ++v) m.vertices.col(v) = domain.outer.center + T * pm.y[v];
        m.vertex_tags = pm.vertex_tags;
        for (const auto& t : pm.tris) {
            std::array<int, 3> v = t;
            orient_positive(m.vertices, v.data(), 2);
            m.simplices.insert(m.simplices.end(), v.begin(), v.end());
        }
        for (std::size_t e = 0; e < pm.edges.size(); ++e) {
            m.facets.push_back(pm.edges[e][0]);
            m.facets.push_back(pm.edges[e][1]);
            m.facet_tags.push_back(pm.edge_tags[e]);
        }
    }
    if (m.num_elements() > params.max_elements)
        throw ResourceError(fmt::format("build_mesh: {} elements exceed the budget of {}", m.num_elements(), params.max_elements));
    m.domain = std::make_shared<MeshDomain>(domain);
    m.T = T;
    m.origin = domain.outer.center;
    return m;
}

Mesh refine_uniform(const Mesh& mesh) {
    const int d = mesh.dim;
    Mesh out;
    out.dim = d;
    out.domain = mesh.domain;
    out.T = mesh.T;
    out.origin = mesh.origin;

    std::unordered_map<uint64_t, BoundaryTag> etag;
    for (long f = 0; f < mesh.num_facets(); ++f) {
        const int* v = mesh.facet(f);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) etag[edge_key(v[i], v[j])] = mesh.facet_tags[f];
    }

    std::vector<Vec> X;
    std::vector<Vec> X_raw; // unprojected, used to fix orientation
    std::vector<BoundaryTag> tags(mesh.vertex_tags);
    for (long v = 0; v < mesh.num_vertices(); ++v) {
        X.push_back(mesh.vertices.col(v));
        X_raw.push_back(mesh.vertices.col(v));
    }
    std::unordered_map<uint64_t, int> mid;
    auto midpoint = [&](int a, int b) {
        const uint64_t k = edge_key(a, b);
        const auto it = mid.find(k);
        if (it != mid.end()) return it->second;
        const Vec m = 0.5 * (mesh.vertices.col(a) + mesh.vertices.col(b));
        Vec p = m;
        BoundaryTag t = BoundaryTag::Interior;
        const auto et = etag.find(k);
        if (et != etag.end() && is_curve(et->second) && mesh.domain) {
            t = et->second;
            const WulffShape& s = shape_of(*mesh.domain, t);
            p = boundary_point(s, mesh.domain->norm, m - s.center);
        }
        const int id = static_cast<int>(X.size());
        X.push_back(p);
        X_raw.push_back(m);
        tags.push_back(t);
        mid.emplace(k, id);
        return id;
    };

    std::vector<std::array<int, 4>> children;
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const int* v = mesh.element(e);
        if (d == 2) {
            const int a = v[0], b = v[1], c = v[2];
            const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
            children.push_back({a, ab, ca, -1});
            children.push_back({ab, b, bc, -1});
            children.push_back({ca, bc, c, -1});
            children.push_back({ab, bc, ca, -1});
        } else {
            int m[4][4];
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j) m[i][j] = m[j][i] = midpoint(v[i], v[j]);
            children.push_back({v[0], m[0][1], m[0][2], m[0][3]});
            children.push_back({m[0][1], v[1], m[1][2], m[1][3]});
            children.push_back({m[0][2], m[1][2], v[2], m[2][3]});
            children.push_back({m[0][3], m[1][3], m[2][3], v[3]});
            // octahedron split along its shortest diagonal
            const std::array<std::array<int, 2>, 3> diag{{{m[0][1], m[2][3]}, {m[0][2], m[1][3]}, {m[0][3], m[1][2]}}};
            int best = 0;
            double bl = 1e300;
            for (int k = 0; k < 3; ++k) {
                const double l = (X_raw[diag[k][0]] - X_raw[diag[k][1]]).norm();
                if (l < bl) {
                    bl = l;
                    best = k;
                }
            }
            const auto& A = diag[(best + 1) % 3];
            const auto& B = diag[(best + 2) % 3];
            const std::array<int, 4> ring{A[0], B[0], A[1], B[1]};
            for (int k = 0; k < 4; ++k) children.push_back({diag[best][0], diag[best][1], ring[k], ring[(k + 1) % 4]});
        }
    }

    Mat Xr(d, static_cast<long>(X.size()));
    for (std::size_t i = 0; i < X.size(); ++i) Xr.col(i) = X_raw[i];
    out.vertices.resize(d, static_cast<long>(X.size()));
    for (std::size_t i = 0; i < X.size(); ++i) out.vertices.col(i) = X[i];
    out.vertex_tags = tags;
    long inverted = 0;
    for (auto c : children) {
        orient_positive(Xr, c.data(), d);
        if (signed_volume(out.vertices, c.data(), d) <= 0.0) ++inverted;
        out.simplices.insert(out.simplices.end(), c.begin(), c.begin() + d + 1);
    }
    if (inverted)
        throw GeometryError(fmt::format("refine_uniform: boundary projection inverted {} elements; start from a finer mesh",
                                        inverted));
    for (long f = 0; f < mesh.num_facets(); ++f) {
        const int* v = mesh.facet(f);
        const BoundaryTag t = mesh.facet_tags[f];
        if (d == 2) {
            const int m = midpoint(v[0], v[1]);
            out.facets.insert(out.facets.end(), {v[0], m, m, v[1]});
            out.facet_tags.insert(out.facet_tags.end(), {t, t});
        } else {
            const int ab = midpoint(v[0], v[1]), bc = midpoint(v[1], v[2]), ca = midpoint(v[2], v[0]);
            out.facets.insert(out.facets.end(), {v[0], ab, ca, ab, v[1], bc, ca, bc, v[2], ab, bc, ca});
            out.facet_tags.insert(out.facet_tags.end(), {t, t, t, t});
        }
    }
    return out;
}

MeshQuality mesh_quality(const Mesh& mesh) {
    MeshQuality q;
    const int d = mesh.dim;
    q.min_angle_deg = 180.0;
    q.min_volume = 1e300;
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const int* v = mesh.element(e);
        const double vol = mesh.volume(e);
        if (vol <= 0.0) ++q.inverted;
        q.min_volume = std::min(q.min_volume, vol);
        double longest = 0.0;
        for (int i = 0; i <= d; ++i)
            for (int j = i + 1; j <= d; ++j)
                longest = std::max(longest, (mesh.vertices.col(v[i]) - mesh.vertices.col(v[j])).norm());
        double aspect;
        if (d == 2) {
            const double a = (mesh.vertices.col(v[1]) - mesh.vertices.col(v[2])).norm();
            const double b = (mesh.vertices.col(v[2]) - mesh.vertices.col(v[0])).norm();
            const double c = (mesh.vertices.col(v[0]) - mesh.vertices.col(v[1])).norm();
            const double inr = 2.0 * std::abs(vol) / (a + b + c);
            aspect = longest / inr / (2.0 * std::sqrt(3.0));
            const double A = std::acos(std::clamp((b * b + c * c - a * a) / (2 * b * c), -1.0, 1.0));
            const double B = std::acos(std::clamp((a * a + c * c - b * b) / (2 * a * c), -1.0, 1.0));
            q.min_angle_deg = std::min({q.min_angle_deg, A * 180 / kPi, B * 180 / kPi, (kPi - A - B) * 180 / kPi});
        } else {
            double area = 0.0;
            for (int skip = 0; skip < 4; ++skip) {
                int f[3], k = 0;
                for (int i = 0; i < 4; ++i)
                    if (i != skip) f[k++] = v[i];
                const Eigen::Vector3d p = mesh.vertices.col(f[1]) - mesh.vertices.col(f[0]);
                const Eigen::Vector3d r = mesh.vertices.col(f[2]) - mesh.vertices.col(f[0]);
                area += 0.5 * p.cross(r).norm();
            }
            const double inr = 3.0 * std::abs(vol) / area;
            aspect = longest / inr / (2.0 * std::sqrt(6.0));
        }
        q.max_aspect = std::max(q.max_aspect, aspect);
    }
    if (d != 2) q.min_angle_deg = 0.0;
    return q;
}

MeshReport validate_mesh(const Mesh& mesh, int k_gap) {
    MeshReport rep;
    const int d = mesh.dim;
    rep.quality = mesh_quality(mesh);
    rep.inverted = rep.quality.inverted;

    std::unordered_map<std::array<int, 3>, int, FaceHash> count;
    std::vector<int> face(d);
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const int* v = mesh.element(e);
        for (int skip = 0; skip <= d; ++skip) {
            int k = 0;
            for (int i = 0; i <= d; ++i)
                if (i != skip) face[k++] = v[i];
            ++count[face_key(face.data(), d)];
        }
    }
    std::unordered_map<std::array<int, 3>, BoundaryTag, FaceHash> tagged;
    for (long f = 0; f < mesh.num_facets(); ++f) tagged[face_key(mesh.facet(f), d)] = mesh.facet_tags[f];
    rep.conforming = true;
    for (const auto& [f, c] : count) {
        if (c > 2) rep.conforming = false;
        if (c == 1) {
            const auto it = tagged.find(f);
            if (it == tagged.end() || it->second == BoundaryTag::Interior) ++rep.untagged_boundary_facets;
        }
    }
    for (const auto& [f, t] : tagged) {
        const auto it = count.find(f);
        if (it == count.end() || it->second != 1) {
            if (t != BoundaryTag::Axis) rep.conforming = false;
        }
    }

    if (mesh.domain) {
        const auto& dom = *mesh.domain;
        for (long v = 0; v < mesh.num_vertices(); ++v) {
            const BoundaryTag t = mesh.vertex_tags[v];
            if (!is_curve(t)) continue;
            const WulffShape& s = shape_of(dom, t);
            if (std::abs(eval_dual(dom.norm, mesh.vertices.col(v) - s.center) - s.radius) > 1e-9 * s.radius)
                ++rep.boundary_vertices_off_curve;
        }
        if (dom.inclusions.size() == 2) {
            Vec e = Vec::Zero(d);
            e(d - 1) = 1.0;
            const double h0e = eval_dual(dom.norm, e);
            const auto& s1 = dom.inclusions[0];
            const auto& s2 = dom.inclusions[1];
            const bool up = s1.center(d - 1) > s2.center(d - 1);
            const WulffShape& lo = up ? s2 : s1;
            const WulffShape& hi = up ? s1 : s2;
            const Vec a = lo.center + lo.radius / h0e * e;
            const Vec b = hi.center - hi.radius / h0e * e;
            std::vector<long> cand;
            const Vec lo_b = a.cwiseMin(b), hi_b = a.cwiseMax(b);
            for (long el = 0; el < mesh.num_elements(); ++el) {
                const int* v = mesh.element(el);
                Vec mn = mesh.vertices.col(v[0]), mx = mn;
                for (int i = 1; i <= d; ++i) {
                    mn = mn.cwiseMin(mesh.vertices.col(v[i]));
                    mx = mx.cwiseMax(mesh.vertices.col(v[i]));
                }
                if (((mx - lo_b).array() >= -1e-14).all() && ((hi_b - mn).array() >= -1e-14).all()) cand.push_back(el);
            }
            std::unordered_set<long> hit;
            Mat G;
            double vol;
            const int samples = 4000;
            for (int s = 1; s < samples; ++s) {
                const Vec x = a + (b - a) * (static_cast<double>(s) / samples);
                for (long el : cand) {
                    element_geometry(mesh, el, G, vol);
                    const Vec x0 = mesh.vertices.col(mesh.element(el)[0]);
                    Vec lam(d + 1);
                    for (int i = 1; i <= d; ++i) lam(i) = G.col(i).dot(x - x0);
                    lam(0) = 1.0 - lam.tail(d).sum();
                    if (lam.minCoeff() >= -1e-12) {
                        hit.insert(el);
                        break;
                    }
                }
            }
            rep.gap_layers = static_cast<long>(hit.size());
        }
    }
    (void)k_gap;
    return rep;
}

long locate_element(const Mesh& mesh, const Vec& x) {
    Mat G;
    double vol;
    const int d = mesh.dim;
    for (long e = 0; e < mesh.num_elements(); ++e) {
        element_geometry(mesh, e, G, vol);
        const Vec x0 = mesh.vertices.col(mesh.element(e)[0]);
        double l0 = 1.0, mn = 1.0;
        for (int i = 1; i <= d; ++i) {
            const double l = G.col(i).dot(x - x0);
            l0 -= l;
            mn = std::min(mn, l);
        }
        if (std::min(mn, l0) >= -1e-12) return e;
    }
    return -1;
}

void element_geometry(const Mesh& mesh, long e, Mat& grads, double& volume) {
    const int d = mesh.dim;
    const int* v = mesh.element(e);
    Mat J(d, d);
    for (int i = 0; i < d; ++i) J.col(i) = mesh.vertices.col(v[i + 1]) - mesh.vertices.col(v[0]);
    const Mat Jit = J.inverse().transpose();
    grads.resize(d, d + 1);
    grads.rightCols(d) = Jit;
    grads.col(0) = -Jit.rowwise().sum();
    double f = 1.0;
    for (int i = 2; i <= d; ++i) f *= i;
    volume = std::abs(J.determinant()) / f;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
    const int d = mesh.dim;
    out << "# finsler-gap mesh v1\n";
    out << "dim " << d << "\n";
    out << "vertices " << mesh.num_vertices() << "\n";
    for (long v = 0; v < mesh.num_vertices(); ++v) {
        for (int i = 0; i < d; ++i) out << (i ? " " : "") << fmt::format("{:.17g}", mesh.vertices(i, v));
        out << "\n";
    }
    out << "simplices " << mesh.num_elements() << "\n";
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const int* v = mesh.element(e);
        for (int i = 0; i <= d; ++i) out << (i ? " " : "") << v[i];
        out << "\n";
    }
    out << "facets " << mesh.num_facets() << "\n";
    for (long f = 0; f < mesh.num_facets(); ++f) {
        out << static_cast<int>(mesh.facet_tags[f]);
        const int* v = mesh.facet(f);
        for (int i = 0; i < d; ++i) out << " " << v[i];
        out << "\n";
    }
}

Mesh read_mesh(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# finsler-gap mesh v1", 0) != 0)
        throw ConfigError("read_mesh: missing '# finsler-gap mesh v1' header");
    auto expect = [&](const char* word) {
        std::string w;
        long n = -1;
        if (!(in >> w >> n) || w != word || n < 0) throw ConfigError(fmt::format("read_mesh: expected '{} <count>'", word));
        return n;
    };
    Mesh m;
    m.dim = static_cast<int>(expect("dim"));
    if (m.dim < 2 || m.dim > 3) throw ConfigError("read_mesh: dim must be 2 or 3");
    const int d = m.dim;
    const long nv = expect("vertices");
    m.vertices.resize(d, nv);
    for (long v = 0; v < nv; ++v)
        for (int i = 0; i < d; ++i)
            if (!(in >> m.vertices(i, v))) throw ConfigError("read_mesh: truncated vertex table");
    const long ne = expect("simplices");
    m.simplices.resize(ne * (d + 1));
    for (auto& x : m.simplices)
        if (!(in >> x) || x < 0 || x >= nv) throw ConfigError("read_mesh: bad simplex table");
    const long nf = expect("facets");
    m.vertex_tags.assign(nv, BoundaryTag::Interior);
    for (long f = 0; f < nf; ++f) {
        int tag;
        if (!(in >> tag) || tag < 0 || tag > 4) throw ConfigError("read_mesh: bad facet tag");
        m.facet_tags.push_back(static_cast<BoundaryTag>(tag));
        for (int i = 0; i < d; ++i) {
            int v;
            if (!(in >> v) || v < 0 || v >= nv) throw ConfigError("read_mesh: bad facet table");
            m.facets.push_back(v);
            m.vertex_tags[v] = static_cast<BoundaryTag>(tag);
        }
    }
    return m;
}

} // namespace fgap
