#include "fgap/solver.hpp"

#include <fmt/format.h>

#ifdef FGAP_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>
#include <unordered_map>

namespace fgap {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

int thread_count(int requested, long work) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    n = std::max(1, n);
    return static_cast<int>(std::min<long>(n, std::max<long>(1, work / 2000)));
}

template <class F>
void parallel_for(long n, int threads, F&& body) {
    const int t = thread_count(threads, n);
    if (t == 1) {
        body(0L, n);
        return;
    }
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) {
        const long lo = n * k / t, hi = n * (k + 1) / t;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

int dof_of(const DofMap& map, int v) {
    switch (map.kind[v]) {
    case DofKind::Free: return map.index[v];
    case DofKind::Tied: return map.num_free + map.index[v];
    default: return -1;
    }
}

// Element geometry and the Hessian sparsity pattern, computed once per mesh and DOF map.
struct Discretization {
    const Mesh& mesh;
    const DofMap& map;
    int d = 2;
    int nloc = 3;
    long ne = 0;
    std::vector<double> vol;
    std::vector<double> G;   // per element: d x (d+1), column-major
    std::vector<int> dof;    // per element: nloc
    SpMat pattern;
    std::vector<int> slot;   // per element: nloc * nloc positions into pattern values, -1 for Dirichlet

    Discretization(const Mesh& m, const DofMap& mp, bool with_pattern) : mesh(m), map(mp) {
        d = m.dim;
        nloc = d + 1;
        ne = m.num_elements();
        vol.resize(ne);
        G.resize(ne * d * nloc);
        dof.resize(ne * nloc);
        Mat g;
        double v;
        for (long e = 0; e < ne; ++e) {
            element_geometry(m, e, g, v);
            vol[e] = v;
            std::copy(g.data(), g.data() + d * nloc, G.data() + e * d * nloc);
            for (int i = 0; i < nloc; ++i) dof[e * nloc + i] = dof_of(mp, m.element(e)[i]);
        }
        if (with_pattern) build_pattern();
    }

    void build_pattern() {
        const int n = map.num_dofs();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(ne * nloc * nloc);
        for (long e = 0; e < ne; ++e)
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) {
                    const int a = dof[e * nloc + i], b = dof[e * nloc + j];
                    if (a >= 0 && b >= 0) trip.emplace_back(a, b, 0.0);
                }
        pattern.resize(n, n);
        pattern.setFromTriplets(trip.begin(), trip.end());
        pattern.makeCompressed();
        slot.assign(ne * nloc * nloc, -1);
        const int* outer = pattern.outerIndexPtr();
        const int* inner = pattern.innerIndexPtr();
        for (long e = 0; e < ne; ++e)
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) {
                    const int r = dof[e * nloc + i], c = dof[e * nloc + j];
                    if (r < 0 || c < 0) continue;
                    const int* pos = std::lower_bound(inner + outer[c], inner + outer[c + 1], r);
                    slot[(e * nloc + i) * nloc + j] = static_cast<int>(pos - inner);
                }
    }

    Eigen::Map<const Mat> grads(long e) const { return Eigen::Map<const Mat>(G.data() + e * d * nloc, d, nloc); }
};

struct ElementOut {
    std::vector<double> energy;
    std::vector<double> grad; // ne * nloc
    std::vector<double> hess; // ne * nloc * nloc
    std::vector<char> degenerate;
};

void element_kernel(const Discretization& D, const Vec& values, const NormModel& norm, const AssemblyOptions& opts,
                    ElementOut& out) {
    const int d = D.d, nloc = D.nloc;
    const bool fast = norm.is_quadratic() && !opts.general_path;
    const Mat& M = norm.matrix();
    out.energy.assign(D.ne, 0.0);
    out.grad.assign(D.ne * nloc, 0.0);
    if (opts.hessian) out.hess.assign(D.ne * nloc * nloc, 0.0);
    out.degenerate.assign(D.ne, 0);
    const double mu1 = norm.energy_floor();
    parallel_for(D.ne, opts.threads, [&](long lo, long hi) {
        Vec xi(d), s(d);
        Mat A(d, d), AG(d, nloc);
        for (long e = lo; e < hi; ++e) {
            const auto G = D.grads(e);
            const int* v = D.mesh.element(e);
            xi.setZero();
            for (int i = 0; i < nloc; ++i) xi += values(v[i]) * G.col(i);
            const double vol = D.vol[e];
            double h2;
            if (fast) {
                s = M * xi;
                h2 = xi.dot(s);
                A = M;
            } else {
                const double h = norm.value(xi);
                h2 = h * h;
                if (h <= opts.degenerate_grad) {
                    out.degenerate[e] = 1;
                    s = h > 0.0 ? dual_map(norm, xi) : Vec::Zero(d);
                    A = mu1 * Mat::Identity(d, d);
                } else {
                    s = dual_map(norm, xi);
                    if (opts.hessian) A = energy_hessian(norm, xi).A;
                }
            }
            out.energy[e] = 0.5 * vol * h2;
            for (int i = 0; i < nloc; ++i) out.grad[e * nloc + i] = vol * s.dot(G.col(i));
            if (opts.hessian) {
                AG.noalias() = A * G;
                for (int i = 0; i < nloc; ++i)
                    for (int j = 0; j < nloc; ++j) out.hess[(e * nloc + i) * nloc + j] = vol * G.col(i).dot(AG.col(j));
            }
        }
    });
}

Assembly assemble_with(const Discretization& D, const Vec& dofs, const NormModel& norm, const AssemblyOptions& opts) {
    const Vec values = vertex_values(dofs, D.map);
    ElementOut eo;
    element_kernel(D, values, norm, opts, eo);
    Assembly a;
    a.gradient = Vec::Zero(D.map.num_dofs());
    const int nloc = D.nloc;
    for (long e = 0; e < D.ne; ++e) {
        a.energy += eo.energy[e];
        a.degenerate_elements += eo.degenerate[e];
        for (int i = 0; i < nloc; ++i) {
            const int r = D.dof[e * nloc + i];
            if (r >= 0) a.gradient(r) += eo.grad[e * nloc + i];
        }
    }
    if (opts.hessian) {
        a.hessian = D.pattern;
        double* val = a.hessian.valuePtr();
        std::fill(val, val + a.hessian.nonZeros(), 0.0);
        for (long e = 0; e < D.ne; ++e)
            for (int k = 0; k < nloc * nloc; ++k) {
                const int p = D.slot[e * nloc * nloc + k];
                if (p >= 0) val[p] += eo.hess[e * nloc * nloc + k];
            }
    }
    return a;
}

// nodal residual r_v = sum_T |T| H grad H(grad u_T) . grad lambda_v
Vec nodal_residual(const DiscreteField& field, const Mesh& mesh, const NormModel& norm) {
    Vec r = Vec::Zero(mesh.num_vertices());
    Mat G;
    double vol;
    for (long e = 0; e < mesh.num_elements(); ++e) {
        element_geometry(mesh, e, G, vol);
        const Vec xi = field.gradients.col(e);
        const Vec s = norm.is_quadratic() ? Vec(norm.matrix() * xi) : dual_map(norm, xi);
        const int* v = mesh.element(e);
        for (int i = 0; i <= mesh.dim; ++i) r(v[i]) += vol * s.dot(G.col(i));
    }
    return r;
}

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

class LinearSolver {
public:
    explicit LinearSolver(bool cholmod) : cholmod_(cholmod) {}

    bool solve(const SpMat& H, const Vec& rhs, Vec& x) {
#ifdef FGAP_HAVE_CHOLMOD
        if (cholmod_) {
            if (!analyzed_) {
                chol_.analyzePattern(H);
                analyzed_ = true;
            }
            chol_.factorize(H);
            if (chol_.info() == Eigen::Success) {
                x = chol_.solve(rhs);
                if (chol_.info() == Eigen::Success && x.allFinite()) return true;
            }
        }
#endif
        ldlt_.compute(H);
        if (ldlt_.info() != Eigen::Success) return false;
        x = ldlt_.solve(rhs);
        return ldlt_.info() == Eigen::Success && x.allFinite();
    }

private:
    bool cholmod_;
#ifdef FGAP_HAVE_CHOLMOD
    Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> chol_;
    bool analyzed_ = false;
#endif
    Eigen::SimplicialLDLT<SpMat> ldlt_;
};

Vec interpolated_start(const Mesh& mesh, const DofMap& map) {
    Vec x = Vec::Zero(map.num_dofs());
    Vec sum = Vec::Zero(std::max(map.num_tied, 1));
    Vec cnt = Vec::Zero(std::max(map.num_tied, 1));
    for (long v = 0; v < mesh.num_vertices(); ++v) {
        const double p = map.phi(mesh.vertices.col(v));
        if (map.kind[v] == DofKind::Free) x(map.index[v]) = p;
        if (map.kind[v] == DofKind::Tied) {
            sum(map.index[v]) += p;
            cnt(map.index[v]) += 1.0;
        }
    }
    for (int g = 0; g < map.num_tied; ++g) x(map.num_free + g) = cnt(g) > 0 ? sum(g) / cnt(g) : 0.0;
    return x;
}

double data_scale(const DofMap& map) {
    double s = 0.0;
    for (std::size_t v = 0; v < map.kind.size(); ++v)
        if (map.kind[v] == DofKind::Dirichlet) s = std::max(s, std::abs(map.dirichlet(v)));
    return s;
}

} // namespace

DofMap make_dofmap(const Mesh& mesh, const AffineData& phi, InclusionMode mode, const std::vector<double>& fixed) {
    if (phi.a.size() != mesh.dim) throw PreconditionError("make_dofmap: boundary data dimension does not match the mesh");
    DofMap map;
    map.phi = phi;
    const long nv = mesh.num_vertices();
    map.kind.assign(nv, DofKind::Free);
    map.index.assign(nv, -1);
    map.dirichlet = Vec::Zero(nv);
    map.merged = mode == InclusionMode::Merged;
    int ninc = 0;
    for (long v = 0; v < nv; ++v) {
        const BoundaryTag t = mesh.vertex_tags[v];
        if (t == BoundaryTag::Inclusion1) ninc = std::max(ninc, 1);
        if (t == BoundaryTag::Inclusion2) ninc = 2;
    }
    if (mode == InclusionMode::Fixed && static_cast<int>(fixed.size()) < ninc)
        throw PreconditionError("make_dofmap: one fixed value per inclusion is required");
    map.group_of_inclusion.assign(ninc, -1);
    if (mode == InclusionMode::Tied)
        for (int i = 0; i < ninc; ++i) map.group_of_inclusion[i] = i;
    if (mode == InclusionMode::Merged)
        for (int i = 0; i < ninc; ++i) map.group_of_inclusion[i] = 0;
    map.num_tied = mode == InclusionMode::Fixed ? 0 : (mode == InclusionMode::Merged ? std::min(ninc, 1) : ninc);
    for (long v = 0; v < nv; ++v) {
        const BoundaryTag t = mesh.vertex_tags[v];
        if (t == BoundaryTag::Outer) {
            map.kind[v] = DofKind::Dirichlet;
            map.dirichlet(v) = phi(mesh.vertices.col(v));
        } else if (t == BoundaryTag::Inclusion1 || t == BoundaryTag::Inclusion2) {
            const int inc = t == BoundaryTag::Inclusion1 ? 0 : 1;
            if (mode == InclusionMode::Fixed) {
                map.kind[v] = DofKind::Dirichlet;
                map.dirichlet(v) = fixed[inc];
            } else {
                map.kind[v] = DofKind::Tied;
                map.index[v] = map.group_of_inclusion[inc];
            }
        } else {
            map.kind[v] = DofKind::Free;
            map.index[v] = map.num_free++;
        }
    }
    return map;
}

Vec vertex_values(const Vec& dofs, const DofMap& map) {
    const long nv = static_cast<long>(map.kind.size());
    Vec u(nv);
    for (long v = 0; v < nv; ++v) {
        switch (map.kind[v]) {
        case DofKind::Free: u(v) = dofs(map.index[v]); break;
        case DofKind::Tied: u(v) = dofs(map.num_free + map.index[v]); break;
        case DofKind::Dirichlet: u(v) = map.dirichlet(v); break;
        }
    }
    return u;
}

Assembly assemble(const Vec& dofs, const Mesh& mesh, const DofMap& map, const NormModel& norm, const AssemblyOptions& opts) {
    if (dofs.size() != map.num_dofs()) throw PreconditionError("assemble: DOF vector size does not match the DOF map");
    const Discretization D(mesh, map, opts.hessian);
    return assemble_with(D, dofs, norm, opts);
}

SolveResult solve(const Mesh& mesh, const DofMap& map, const NormModel& norm, const SolveOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    if (mesh.dim >= 4) throw PreconditionError("solve: N >= 4 is not supported");
    const Discretization D(mesh, map, true);
    AssemblyOptions ao;
    ao.general_path = opts.general_path;
    ao.threads = opts.threads;
    ao.degenerate_grad = 1e-14 * std::max(data_scale(map), 1e-300);
    AssemblyOptions eo = ao;
    eo.hessian = false;

    const Vec x_interp = interpolated_start(mesh, map);
    Vec x = opts.initial ? *opts.initial : x_interp;
    if (x.size() != map.num_dofs()) throw PreconditionError("solve: initial guess has the wrong size");

    SolveReport rep;
    double gref = map.num_dofs() ? max_abs(assemble_with(D, x_interp, norm, eo).gradient) : 0.0;
    Assembly A = assemble_with(D, x, norm, ao);
    if (gref == 0.0) gref = max_abs(A.gradient);
    double hdiag = 0.0;
    for (long i = 0; i < A.hessian.rows(); ++i) hdiag = std::max(hdiag, std::abs(A.hessian.coeff(i, i)));
    rep.tolerance = std::max(opts.rel_tol * gref, 1e-13 * std::max(data_scale(map), 1.0) * hdiag);
    rep.energy_trace.push_back(A.energy);

    LinearSolver lin(opts.use_cholmod);
    int roundoff_steps = 0;
    for (int it = 0;; ++it) {
        const double gmax = max_abs(A.gradient);
        if (gmax <= rep.tolerance) {
            rep.converged = true;
            break;
        }
        if (roundoff_steps >= 3) {
            rep.converged = true;
            rep.roundoff_stop = true;
            break;
        }
        if (it >= opts.max_iter)
            throw NumericError(fmt::format("solve: no convergence in {} iterations (residual {:.3e}, tolerance {:.3e})",
                                           opts.max_iter, gmax, rep.tolerance));
        rep.iterations = it + 1;
        Vec d;
        bool newton = lin.solve(A.hessian, -A.gradient, d);
        double gd = newton ? A.gradient.dot(d) : 0.0;
        if (!newton || !(gd < 0.0)) newton = false;

        bool accepted = false;
        Vec x_new;
        Assembly trial;
        if (newton) {
            double first = 0.0;
            for (double alpha : {1.0, 0.5, 0.25, 0.125}) {
                x_new = x + alpha * d;
                trial = assemble_with(D, x_new, norm, eo);
                if (alpha == 1.0) first = trial.energy;
                if (trial.energy <= A.energy + 1e-4 * alpha * gd) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted && first <= A.energy + 1e-14 * std::abs(A.energy)) {
                // decrease below roundoff of the energy: take the full step
                x_new = x + d;
                accepted = true;
                ++roundoff_steps;
            }
        }
        if (!accepted) {
            ++rep.gradient_steps;
            const Vec g = A.gradient;
            const double curv = g.dot(A.hessian * g);
            double alpha = curv > 0.0 ? g.squaredNorm() / curv : 1.0;
            for (int k = 0; k < 40 && !accepted; ++k, alpha *= 0.5) {
                x_new = x - alpha * g;
                trial = assemble_with(D, x_new, norm, eo);
                if (trial.energy <= A.energy - 1e-4 * alpha * g.squaredNorm()) accepted = true;
            }
        }
        if (!accepted) {
            std::string trace;
            for (double e : rep.energy_trace) trace += fmt::format(" {:.17g}", e);
            throw NumericError(fmt::format("solve: line search stagnated at residual {:.3e}; energy trace:{}", gmax, trace));
        }
        x = x_new;
        A = assemble_with(D, x, norm, ao);
        rep.energy_trace.push_back(A.energy);
    }

    SolveResult res;
    DiscreteField& f = res.field;
    f.dofs = x;
    f.values = vertex_values(x, map);
    f.energy = A.energy;
    f.gradients.resize(mesh.dim, mesh.num_elements());
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const auto G = D.grads(e);
        Vec xi = Vec::Zero(mesh.dim);
        const int* v = mesh.element(e);
        for (int i = 0; i <= mesh.dim; ++i) xi += f.values(v[i]) * G.col(i);
        f.gradients.col(e) = xi;
    }
    auto inclusion_value = [&](BoundaryTag t) {
        for (long v = 0; v < mesh.num_vertices(); ++v)
            if (mesh.vertex_tags[v] == t) return f.values(v);
        return 0.0;
    };
    f.U1 = inclusion_value(BoundaryTag::Inclusion1);
    f.U2 = inclusion_value(BoundaryTag::Inclusion2);

    rep.energy = A.energy;
    rep.residual = max_abs(A.gradient);
    rep.degenerate_elements = A.degenerate_elements;
    rep.U1 = f.U1;
    rep.U2 = f.U2;
    const auto f1 = flux_integral(f, mesh, norm, 1);
    const auto f2 = flux_integral(f, mesh, norm, 2);
    rep.flux1 = f1.variational;
    rep.flux2 = f2.variational;
    rep.flux1_quadrature = f1.quadrature;
    rep.flux2_quadrature = f2.quadrature;
    rep.outer_flux = outer_flux(f, mesh, norm);
    rep.divergence_defect = std::abs(rep.outer_flux - rep.flux1 - rep.flux2);
    rep.max_grad = max_grad_H(f, mesh, norm).value;
    if (opts.neck) rep.max_grad_neck = max_grad_H(f, mesh, norm, opts.neck).value;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.report = std::move(rep);
    return res;
}

FluxResult flux_integral(const DiscreteField& field, const Mesh& mesh, const NormModel& norm, int which) {
    const BoundaryTag tag = which == 1 ? BoundaryTag::Inclusion1 : BoundaryTag::Inclusion2;
    FluxResult out;
    const Vec r = nodal_residual(field, mesh, norm);
    for (long v = 0; v < mesh.num_vertices(); ++v)
        if (mesh.vertex_tags[v] == tag) out.variational -= r(v);

    // facet quadrature: find the element behind each tagged facet
    const int d = mesh.dim;
    std::unordered_map<uint64_t, long> owner;
    auto key = [](std::vector<int> f) {
        std::sort(f.begin(), f.end());
        uint64_t h = 0;
        for (int x : f) h = h * 2654435761ull + static_cast<uint64_t>(x) + 1;
        return h;
    };
    std::vector<uint64_t> wanted;
    for (long fi = 0; fi < mesh.num_facets(); ++fi)
        if (mesh.facet_tags[fi] == tag) {
            const int* fv = mesh.facet(fi);
            owner[key(std::vector<int>(fv, fv + d))] = -1;
        }
    if (owner.empty()) return out;
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const int* v = mesh.element(e);
        for (int skip = 0; skip <= d; ++skip) {
            std::vector<int> f;
            for (int i = 0; i <= d; ++i)
                if (i != skip) f.push_back(v[i]);
            const auto it = owner.find(key(f));
            if (it != owner.end()) it->second = e * (d + 1) + skip;
        }
    }
    for (const auto& [k, code] : owner) {
        if (code < 0) continue;
        const long e = code / (d + 1);
        const int skip = static_cast<int>(code % (d + 1));
        const int* v = mesh.element(e);
        std::vector<Vec> p;
        for (int i = 0; i <= d; ++i)
            if (i != skip) p.push_back(mesh.vertices.col(v[i]));
        Vec n(d);
        double area;
        if (d == 2) {
            const Vec t = p[1] - p[0];
            n << t(1), -t(0);
            area = t.norm();
        } else {
            const Eigen::Vector3d a = p[1] - p[0], b = p[2] - p[0];
            const Eigen::Vector3d c = a.cross(b);
            n = c;
            area = 0.5 * c.norm();
        }
        n.normalize();
        if (n.dot(mesh.vertices.col(v[skip]) - p[0]) < 0.0) n = -n;
        const Vec xi = field.gradients.col(e);
        const Vec s = norm.is_quadratic() ? Vec(norm.matrix() * xi) : dual_map(norm, xi);
        out.quadrature += area * s.dot(n);
    }
    return out;
}

double outer_flux(const DiscreteField& field, const Mesh& mesh, const NormModel& norm) {
    const Vec r = nodal_residual(field, mesh, norm);
    double s = 0.0;
    for (long v = 0; v < mesh.num_vertices(); ++v)
        if (mesh.vertex_tags[v] == BoundaryTag::Outer) s += r(v);
    return s;
}

MaxGrad max_grad_H(const DiscreteField& field, const Mesh& mesh, const NormModel& norm,
                   const std::optional<std::pair<WulffConfig, NeckSpec>>& neck) {
    MaxGrad m;
    m.location = Vec::Zero(mesh.dim);
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const double h = norm.value(field.gradients.col(e));
        if (h <= m.value && m.element >= 0) continue;
        const Vec c = mesh.centroid(e);
        if (neck && !neck_membership(c, neck->first, neck->second)) continue;
        m.value = h;
        m.element = e;
        m.location = c;
    }
    return m;
}

R0Result compute_R0(const WulffConfig& cfg, const AffineData& phi, const MeshParams& mesh_params, const SolveOptions& opts,
                    double delta_ref) {
    R0Result r;
    r.delta_ref = delta_ref > 0.0 ? delta_ref : 1e-3 * cfg.R1;
    auto merged_flux = [&](double delta) {
        const WulffConfig c = with_delta(cfg, delta);
        const Mesh mesh = build_mesh(MeshDomain::from_config(c), mesh_params);
        const DofMap map = make_dofmap(mesh, phi, InclusionMode::Merged);
        SolveOptions o = opts;
        o.neck.reset();
        o.initial.reset();
        const auto res = solve(mesh, map, c.norm, o);
        return res.report.flux1;
    };
    r.flux_ref = merged_flux(r.delta_ref);
    r.flux_half = merged_flux(0.5 * r.delta_ref);
    r.R0 = 2.0 * r.flux_half - r.flux_ref;
    const double scale = std::max(std::abs(r.R0), 1e-300);
    r.relative_change = r.R0 == 0.0 && r.flux_ref == r.flux_half ? 0.0 : std::abs(r.flux_ref - r.flux_half) / scale;
    r.warning = r.relative_change > 0.05;
    return r;
}

MaxPrincipleReport verify_max_principles(const DiscreteField& field, const Mesh& mesh, const DofMap& map,
                                         const NormModel& norm, const MaxPrincipleOptions& opts) {
    MaxPrincipleReport rep;
    rep.u_interior_max = rep.u_boundary_max = -1e300;
    rep.u_interior_min = rep.u_boundary_min = 1e300;
    for (long v = 0; v < mesh.num_vertices(); ++v) {
        const double u = field.values(v);
        if (map.kind[v] == DofKind::Dirichlet) {
            rep.u_boundary_max = std::max(rep.u_boundary_max, u);
            rep.u_boundary_min = std::min(rep.u_boundary_min, u);
        } else {
            rep.u_interior_max = std::max(rep.u_interior_max, u);
            rep.u_interior_min = std::min(rep.u_interior_min, u);
        }
    }
    rep.u_excess = std::max({0.0, rep.u_interior_max - rep.u_boundary_max, rep.u_boundary_min - rep.u_interior_min});
    for (int g = 0; g < map.num_tied; ++g) {
        const double U = field.dofs(map.num_free + g);
        if (rep.u_boundary_max > rep.u_boundary_min && !(U > rep.u_boundary_min && U < rep.u_boundary_max))
            rep.inclusion_strictly_inside = false;
    }

    rep.grad_interior_max = rep.grad_boundary_max = 0.0;
    rep.p_interior_max = rep.p_boundary_max = -1e300;
    for (long e = 0; e < mesh.num_elements(); ++e) {
        const int* v = mesh.element(e);
        bool boundary = false;
        double ubar = 0.0;
        for (int i = 0; i <= mesh.dim; ++i) {
            boundary = boundary || mesh.vertex_tags[v[i]] != BoundaryTag::Interior;
            ubar += field.values(v[i]);
        }
        ubar /= mesh.dim + 1;
        const double h = norm.value(field.gradients.col(e));
        const double f = opts.cutoff ? cutoff_f(mesh.centroid(e), *opts.cutoff).value : 1.0;
        const double P = p_function(f, h, ubar, opts.lambda, opts.lambda_0).value;
        if (boundary) {
            rep.grad_boundary_max = std::max(rep.grad_boundary_max, h);
            rep.p_boundary_max = std::max(rep.p_boundary_max, P);
        } else {
            rep.grad_interior_max = std::max(rep.grad_interior_max, h);
            rep.p_interior_max = std::max(rep.p_interior_max, P);
        }
    }
    rep.grad_excess = rep.grad_boundary_max > 0.0 ? rep.grad_interior_max / rep.grad_boundary_max - 1.0
                                                  : (rep.grad_interior_max > 0.0 ? 1e300 : -1.0);
    rep.p_excess = rep.p_boundary_max > 0.0 ? rep.p_interior_max / rep.p_boundary_max - 1.0
                                            : (rep.p_interior_max > 0.0 ? 1e300 : -1.0);
    rep.lambda_below_lambda0 = opts.lambda < opts.lambda_0;
    return rep;
}

double uniqueness_probe(const Mesh& mesh, const DofMap& map, const NormModel& norm, const SolveOptions& opts, unsigned seed) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t v = 0; v < map.kind.size(); ++v)
        if (map.kind[v] == DofKind::Dirichlet) {
            lo = std::min(lo, map.dirichlet(v));
            hi = std::max(hi, map.dirichlet(v));
        }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(lo, hi);
    auto run = [&]() {
        Vec x0(map.num_dofs());
        for (long i = 0; i < x0.size(); ++i) x0(i) = U(rng);
        SolveOptions o = opts;
        o.initial = x0;
        o.neck.reset();
        return solve(mesh, map, norm, o).field.dofs;
    };
    const Vec a = run();
    const Vec b = run();
    if (a.size() == 0) return 0.0;
    return max_abs(a - b) / std::max(max_abs(a), 1e-300);
}

} // namespace fgap
