#pragma once

// Piecewise-polynomial coefficient storage over the leaves of a Mesh.
// Layout: per leaf one block of `components * space.nb` doubles, component
// major, so block + c*nb is the coefficient slice of component c.

#include <cmath>
#include <functional>
#include <vector>

#include "rkdg/basis.hpp"
#include "rkdg/mesh.hpp"

namespace rkdg {

/// Callback type for pointwise initial/exact data.
using SpatialFn = std::function<StateVec(const Point&)>;

class DiscreteFunction {
  public:
    DiscreteFunction() = default;
    DiscreteFunction(const Mesh& mesh, const Space& space, int components)
        : mesh_(&mesh),
          space_(&space),
          r_(components),
          data_(std::size_t(mesh.num_leaves()) * components * space.nb, 0.0),
          mesh_version_(mesh.version()) {}

    const Mesh& mesh() const { return *mesh_; }
    const Space& space() const { return *space_; }
    int components() const { return r_; }
    int block_size() const { return r_ * space_->nb; }
    long mesh_version() const { return mesh_version_; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double* block(int leaf) { return data_.data() + std::size_t(leaf) * block_size(); }
    const double* block(int leaf) const { return data_.data() + std::size_t(leaf) * block_size(); }
    double* component(int leaf, int c) { return block(leaf) + c * space_->nb; }
    const double* component(int leaf, int c) const { return block(leaf) + c * space_->nb; }

    // --- dense-vector arithmetic (used by time steppers) -------------------
    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void assign(const DiscreteFunction& o) {
        data_ = o.data_;
        mesh_version_ = o.mesh_version_;
    }
    void axpy(double a, const DiscreteFunction& x) {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
    }
    void scale(double s) {
        for (double& v : data_) v *= s;
    }
    /// this = a*x + b*y
    void combine(double a, const DiscreteFunction& x, double b, const DiscreteFunction& y) {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = a * x.data_[i] + b * y.data_[i];
    }
    double norm_l2_dofs() const {
        double s = 0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }
    double dot_dofs(const DiscreteFunction& o) const {
        double s = 0;
        for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * o.data_[i];
        return s;
    }

    // --- pointwise access --------------------------------------------------
    /// L2-project (onb) / interpolate (nodal) pointwise data.
    void project(const SpatialFn& fn) {
        int nb = space_->nb;
        std::vector<double> phi(nb);
        for (int e = 0; e < mesh_->num_leaves(); ++e) {
            const CellGeometry& g = mesh_->geometry(e);
            double* b = block(e);
            if (space_->nodal()) {
                for (int q = 0; q < nb; ++q) {
                    Point x = ref_to_phys(g, space_->vol.points[q]);
                    StateVec u = fn(x);
                    for (int c = 0; c < r_; ++c) b[c * nb + q] = u[c];
                }
            } else {
                std::fill(b, b + block_size(), 0.0);
                double sv = std::sqrt(g.volume);
                for (int q = 0; q < space_->vol.size(); ++q) {
                    Point x = ref_to_phys(g, space_->vol.points[q]);
                    StateVec u = fn(x);
                    double w = space_->vol.weights[q];
                    const double* p = space_->vol_phi(q);
                    for (int c = 0; c < r_; ++c)
                        for (int i = 0; i < nb; ++i) b[c * nb + i] += sv * w * u[c] * p[i];
                }
            }
        }
    }

    /// Evaluate at a reference point of a leaf.
    StateVec evaluate(int leaf, const Point& xi) const {
        std::vector<double> phi(space_->nb);
        space_->ref_values(xi, phi.data());
        return eval_state(block(leaf), r_, space_->nb, phi.data(),
                          space_->scale(mesh_->geometry(leaf).volume));
    }

    StateVec cell_mean(int leaf) const {
        const double* b = block(leaf);
        int nb = space_->nb;
        StateVec m(r_);
        if (space_->nodal()) {
            for (int c = 0; c < r_; ++c) {
                double s = 0;
                for (int q = 0; q < nb; ++q) s += space_->vol.weights[q] * b[c * nb + q];
                m[c] = s;
            }
        } else {
            double sc = 1.0 / std::sqrt(mesh_->geometry(leaf).volume);
            for (int c = 0; c < r_; ++c) m[c] = b[c * nb] * sc;
        }
        return m;
    }

    /// Integral of each component over the whole domain.
    StateVec total_integral() const {
        StateVec s(r_);
        for (int e = 0; e < mesh_->num_leaves(); ++e) {
            StateVec m = cell_mean(e);
            double v = mesh_->geometry(e).volume;
            for (int c = 0; c < r_; ++c) s[c] += v * m[c];
        }
        return s;
    }

    static Point ref_to_phys(const CellGeometry& g, const Point& xi) {
        return {g.lower[0] + xi[0] * g.widths[0], g.lower[1] + xi[1] * g.widths[1]};
    }

    void set_mesh_version(long v) { mesh_version_ = v; }

  private:
    const Mesh* mesh_ = nullptr;
    const Space* space_ = nullptr;
    int r_ = 0;
    std::vector<double> data_;
    long mesh_version_ = 0;
};

/// Apply the current marks of `mesh` and carry every listed function along,
/// prolonging into fresh children and restricting merged siblings. Exact on
/// the polynomial space, so cell-mean mass is conserved both ways.
inline void adapt_mesh(Mesh& mesh, const std::vector<DiscreteFunction*>& fns) {
    for (DiscreteFunction* f : fns)
        if (f->mesh_version() != mesh.version())
            throw Error("adapt_mesh: function is stale (mesh changed since it was built)");
    auto plan = mesh.adapt();
    if (plan.empty()) return;
    for (DiscreteFunction* f : fns) {
        const Space& sp = f->space();
        int nb = sp.nb, r = f->components();
        std::vector<double> fresh(std::size_t(mesh.num_leaves()) * r * nb, 0.0);
        const std::vector<double>& old = f->data();
        for (int e = 0; e < mesh.num_leaves(); ++e) {
            const Mesh::Transfer& t = plan[e];
            double* dst = fresh.data() + std::size_t(e) * r * nb;
            if (t.kind == Mesh::Transfer::copy) {
                const double* src = old.data() + std::size_t(t.source) * r * nb;
                std::copy(src, src + r * nb, dst);
            } else if (t.kind == Mesh::Transfer::refine) {
                const double* src = old.data() + std::size_t(t.source) * r * nb;
                const Eigen::MatrixXd& P = sp.prolong_matrix(t.child);
                for (int c = 0; c < r; ++c)
                    for (int i = 0; i < nb; ++i) {
                        double s = 0;
                        for (int j = 0; j < nb; ++j) s += P(i, j) * src[c * nb + j];
                        dst[c * nb + i] = s;
                    }
            } else {
                for (int ch = 0; ch < sp.num_children(); ++ch) {
                    const double* src = old.data() + std::size_t(t.sources[ch]) * r * nb;
                    const Eigen::MatrixXd& R = sp.restrict_matrix(ch);
                    for (int c = 0; c < r; ++c)
                        for (int i = 0; i < nb; ++i) {
                            double s = 0;
                            for (int j = 0; j < nb; ++j) s += R(i, j) * src[c * nb + j];
                            dst[c * nb + i] += s;
                        }
                }
            }
        }
        f->data() = std::move(fresh);
        f->set_mesh_version(mesh.version());
    }
}

struct ErrorNorms {
    double l1 = 0, l2 = 0, linf = 0;
};

/// Error norms against pointwise reference data, over-integrated with k+3
/// Gauss points per axis to avoid quadrature aliasing.
inline ErrorNorms error_norms(const DiscreteFunction& u, const SpatialFn& exact, int component = 0) {
    const Space& sp = u.space();
    const Mesh& mesh = u.mesh();
    VolumeRule rule = tensor_rule(gauss_rule(sp.k + 3), sp.dim);
    std::vector<double> phi(sp.nb);
    ErrorNorms n;
    for (int e = 0; e < mesh.num_leaves(); ++e) {
        const CellGeometry& g = mesh.geometry(e);
        double sc = sp.scale(g.volume);
        for (int q = 0; q < rule.size(); ++q) {
            sp.ref_values(rule.points[q], phi.data());
            StateVec uh = eval_state(u.block(e), u.components(), sp.nb, phi.data(), sc);
            Point x = DiscreteFunction::ref_to_phys(g, rule.points[q]);
            double err = std::abs(uh[component] - exact(x)[component]);
            double w = rule.weights[q] * g.volume;
            n.l1 += w * err;
            n.l2 += w * err * err;
            n.linf = std::max(n.linf, err);
        }
    }
    n.l2 = std::sqrt(n.l2);
    return n;
}

}  // namespace rkdg
