#pragma once

// Polynomial spaces on the reference cell [0,1]^d (d = 1 or 2).
//
// Three basis kinds span the same full tensor-product space of per-axis
// degree <= k with (k+1)^d functions:
//   * onb           - tensor products of shifted orthonormal Legendre
//                     polynomials; coefficients carry a 1/sqrt(|E|) scaling
//                     so the element mass matrix is the identity.
//   * gauss_nodal   - Lagrange basis at tensor Gauss points; collocation
//                     with the Gauss volume rule makes the mass matrix
//                     exactly diagonal |E| w_q.
//   * lobatto_nodal - Lagrange basis at tensor Gauss-Lobatto points with the
//                     Lobatto volume rule; the diagonal |E| w_q mass matrix
//                     is the usual lumping by underintegration.
//
// The Space object precomputes basis values/derivatives at all volume and
// face quadrature points (including the two half-face maps a coarse cell
// needs at a hanging interface) plus the prolongation/restriction matrices
// between a parent cell and its 2^d children.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "rkdg/core.hpp"
#include "rkdg/quadrature.hpp"

namespace rkdg {

enum class BasisKind { onb, gauss_nodal, lobatto_nodal };

inline BasisKind parse_basis(const std::string& s) {
    if (s == "onb") return BasisKind::onb;
    if (s == "gauss" || s == "gauss_nodal") return BasisKind::gauss_nodal;
    if (s == "lobatto" || s == "lobatto_nodal") return BasisKind::lobatto_nodal;
    throw Error("unknown basis kind: " + s);
}

/// Shifted orthonormal Legendre values and derivatives on [0,1]:
/// p_i(x) = sqrt(2i+1) P_i(2x-1), orthonormal in L2(0,1).
inline void onb_line(int k, double x, double* val, double* der) {
    double t = 2.0 * x - 1.0;
    double p0 = 1.0, p1 = t, d0 = 0.0, d1 = 1.0;
    for (int i = 0; i <= k; ++i) {
        double p = (i == 0) ? 1.0 : p1;
        double d = (i == 0) ? 0.0 : d1;
        if (i >= 1) {
            // advance recurrence to degree i+1
            double p2 = ((2 * i + 1) * t * p1 - i * p0) / (i + 1);
            double d2 = ((2 * i + 1) * (p1 + t * d1) - i * d0) / (i + 1);
            p0 = p1; p1 = p2; d0 = d1; d1 = d2;
        }
        double s = std::sqrt(2.0 * i + 1.0);
        if (val) val[i] = s * p;
        if (der) der[i] = s * d * 2.0;  // chain rule for x -> 2x-1
    }
}

/// Lagrange basis through the given nodes: values and derivatives at x.
inline void lagrange_line(const std::vector<double>& nodes, double x, double* val, double* der) {
    int n = int(nodes.size());
    for (int i = 0; i < n; ++i) {
        double v = 1.0;
        for (int j = 0; j < n; ++j)
            if (j != i) v *= (x - nodes[j]) / (nodes[i] - nodes[j]);
        if (val) val[i] = v;
        if (der) {
            double d = 0.0;
            for (int m = 0; m < n; ++m) {
                if (m == i) continue;
                double term = 1.0 / (nodes[i] - nodes[m]);
                for (int j = 0; j < n; ++j)
                    if (j != i && j != m) term *= (x - nodes[j]) / (nodes[i] - nodes[j]);
                d += term;
            }
            der[i] = d;
        }
    }
}

/// Element mass matrix in a form tests and the operator can consume:
/// identity (onb) or diagonal entries (nodal kinds).
struct MassMatrix {
    bool identity = false;
    std::vector<double> diag;  // empty when identity
};

class Space {
  public:
    static constexpr int max_line = 16;               // degrees up to 15
    static constexpr int max_nb = max_line * max_line;

    BasisKind kind;
    int k = 1;        // polynomial degree per axis
    int dim = 2;
    int nb = 0;       // (k+1)^d basis functions

    VolumeRule vol;        // volume quadrature on [0,1]^d
    Rule1d line;           // the 1d rule behind it
    std::vector<double> nodes1d;  // interpolation nodes (nodal kinds; = line.points)

    static Space make(BasisKind kind, int k, int dim) {
        if (dim < 1 || dim > 2) throw Error("Space: dim must be 1 or 2");
        if (k < 0) throw Error("Space: polynomial degree must be >= 0");
        if (k >= max_line) throw Error("Space: polynomial degree must be < 16");
        if (kind == BasisKind::lobatto_nodal && k < 1)
            throw Error("Space: lobatto_nodal needs degree >= 1");
        Space s;
        s.kind = kind;
        s.k = k;
        s.dim = dim;
        s.nb = 1;
        for (int a = 0; a < dim; ++a) s.nb *= (k + 1);
        s.line = (kind == BasisKind::lobatto_nodal) ? lobatto_rule(k + 1) : gauss_rule(k + 1);
        s.vol = tensor_rule(s.line, dim);
        if (kind != BasisKind::onb) s.nodes1d = s.line.points;
        s.build_tables();
        s.build_transfers();
        return s;
    }

    bool nodal() const { return kind != BasisKind::onb; }

    /// Coefficient-to-value scaling: onb coefficients carry 1/sqrt(|E|).
    double scale(double volume) const { return nodal() ? 1.0 : 1.0 / std::sqrt(volume); }

    /// Basis values at an arbitrary reference point.
    void ref_values(const Point& xi, double* out) const {
        double vx[16], vy[16];
        line_values(xi[0], vx);
        if (dim == 1) {
            for (int i = 0; i <= k; ++i) out[i] = vx[i];
            return;
        }
        line_values(xi[1], vy);
        for (int b = 0; b <= k; ++b)
            for (int a = 0; a <= k; ++a) out[b * (k + 1) + a] = vx[a] * vy[b];
    }

    /// Reference-coordinate gradients at an arbitrary point, layout [i*2+axis].
    void ref_grads(const Point& xi, double* out) const {
        double vx[16], vy[16], dx[16], dy[16];
        line_values(xi[0], vx, dx);
        if (dim == 1) {
            for (int i = 0; i <= k; ++i) {
                out[i * 2 + 0] = dx[i];
                out[i * 2 + 1] = 0.0;
            }
            return;
        }
        line_values(xi[1], vy, dy);
        for (int b = 0; b <= k; ++b)
            for (int a = 0; a <= k; ++a) {
                int i = b * (k + 1) + a;
                out[i * 2 + 0] = dx[a] * vy[b];
                out[i * 2 + 1] = vx[a] * dy[b];
            }
    }

    /// Per-axis degrees of tensor basis function i.
    std::pair<int, int> axis_degrees(int i) const {
        if (dim == 1) return {i, 0};
        return {i % (k + 1), i / (k + 1)};
    }
    /// Mode degree used when grouping modal coefficients: max per-axis degree.
    int mode_degree(int i) const {
        auto [a, b] = axis_degrees(i);
        return std::max(a, b);
    }

    MassMatrix mass_matrix(double volume) const {
        MassMatrix m;
        if (!nodal()) {
            m.identity = true;
            return m;
        }
        m.diag.resize(nb);
        for (int q = 0; q < nb; ++q) m.diag[q] = volume * vol.weights[q];
        return m;
    }

    // --- quadrature tables ------------------------------------------------
    // Volume: [q*nb + i]; gradients [ (q*nb + i)*2 + axis ].
    const double* vol_phi(int q) const { return vol_phi_.data() + q * nb; }
    const double* vol_dphi(int q) const { return vol_dphi_.data() + q * nb * 2; }

    /// Number of quadrature points on one face.
    int face_npoints() const { return dim == 1 ? 1 : int(line.points.size()); }
    /// Face quadrature weight (sums to 1 over the face).
    double face_weight(int q) const { return dim == 1 ? 1.0 : line.weights[q]; }
    /// Reference point on face `side` (0:-x, 1:+x, 2:-y, 3:+y) at face
    /// parameter t0 + t_q * tscale (tangential remap for hanging faces).
    Point face_point(int side, int q, double t0 = 0.0, double tscale = 1.0) const {
        double t = dim == 1 ? 0.0 : t0 + line.points[q] * tscale;
        switch (side) {
            case 0: return {0.0, t};
            case 1: return {1.0, t};
            case 2: return {t, 0.0};
            default: return {t, 1.0};
        }
    }
    /// Conforming-face tables: values of all basis functions at face point q.
    const double* face_phi(int side, int q) const { return face_phi_[side].data() + q * nb; }
    const double* face_dphi(int side, int q) const { return face_dphi_[side].data() + q * nb * 2; }
    /// Half-face tables for the coarse side of a hanging face (2d only);
    /// half selects the tangential subinterval [0,1/2] or [1/2,1].
    const double* half_phi(int side, int half, int q) const {
        return half_phi_[side][half].data() + q * nb;
    }
    const double* half_dphi(int side, int half, int q) const {
        return half_dphi_[side][half].data() + q * nb * 2;
    }

    // --- transfers between a parent cell and its 2^d children --------------
    // Child c has per-axis offsets (c&1, c>>1) in the parent.
    // Coefficient blocks transform per component: child = P[c] * parent,
    // parent = sum_c R[c] * child_c. Both are exact on the polynomial space;
    // restriction after prolongation is the identity and cell means are
    // conserved.
    int num_children() const { return 1 << dim; }
    const Eigen::MatrixXd& prolong_matrix(int child) const { return prolong_[child]; }
    const Eigen::MatrixXd& restrict_matrix(int child) const { return restrict_[child]; }

    // --- modal/nodal change of basis (same degree, same cell) -------------
    /// Convert a nodal component block to onb coefficients (needs |E|).
    void to_modal(const double* nodal_vals, double volume, double* modal_out) const {
        Eigen::Map<const Eigen::VectorXd> n(nodal_vals, nb);
        Eigen::VectorXd c = node_vandermonde_inv_ * n * std::sqrt(volume);
        for (int i = 0; i < nb; ++i) modal_out[i] = c[i];
    }
    void from_modal(const double* modal, double volume, double* nodal_out) const {
        Eigen::Map<const Eigen::VectorXd> c(modal, nb);
        Eigen::VectorXd n = node_vandermonde_ * c / std::sqrt(volume);
        for (int i = 0; i < nb; ++i) nodal_out[i] = n[i];
    }

  private:
    std::vector<double> vol_phi_, vol_dphi_;
    std::vector<double> face_phi_[4], face_dphi_[4];
    std::vector<double> half_phi_[4][2], half_dphi_[4][2];
    std::vector<Eigen::MatrixXd> prolong_, restrict_;
    Eigen::MatrixXd node_vandermonde_, node_vandermonde_inv_;

    void line_values(double x, double* val, double* der = nullptr) const {
        if (kind == BasisKind::onb)
            onb_line(k, x, val, der);
        else
            lagrange_line(nodes1d, x, val, der);
    }

    void build_tables() {
        int nq = vol.size();
        vol_phi_.resize(nq * nb);
        vol_dphi_.resize(nq * nb * 2);
        for (int q = 0; q < nq; ++q) {
            ref_values(vol.points[q], vol_phi_.data() + q * nb);
            ref_grads(vol.points[q], vol_dphi_.data() + q * nb * 2);
        }
        int nsides = 2 * dim;
        int nf = face_npoints();
        for (int s = 0; s < nsides; ++s) {
            face_phi_[s].resize(nf * nb);
            face_dphi_[s].resize(nf * nb * 2);
            for (int q = 0; q < nf; ++q) {
                Point p = face_point(s, q);
                ref_values(p, face_phi_[s].data() + q * nb);
                ref_grads(p, face_dphi_[s].data() + q * nb * 2);
            }
            if (dim == 2) {
                for (int half = 0; half < 2; ++half) {
                    half_phi_[s][half].resize(nf * nb);
                    half_dphi_[s][half].resize(nf * nb * 2);
                    for (int q = 0; q < nf; ++q) {
                        Point p = face_point(s, q, 0.5 * half, 0.5);
                        ref_values(p, half_phi_[s][half].data() + q * nb);
                        ref_grads(p, half_dphi_[s][half].data() + q * nb * 2);
                    }
                }
            }
        }
        if (nodal()) {
            node_vandermonde_.resize(nb, nb);
            for (int q = 0; q < nb; ++q) {
                Point node = vol.points[q];
                double vx[16], vy[16];
                onb_line(k, node[0], vx, nullptr);
                if (dim == 1) {
                    for (int i = 0; i < nb; ++i) node_vandermonde_(q, i) = vx[i];
                } else {
                    onb_line(k, node[1], vy, nullptr);
                    for (int b = 0; b <= k; ++b)
                        for (int a = 0; a <= k; ++a)
                            node_vandermonde_(q, b * (k + 1) + a) = vx[a] * vy[b];
                }
            }
            node_vandermonde_inv_ = node_vandermonde_.inverse();
        }
    }

    void build_transfers() {
        int nc = num_children();
        prolong_.resize(nc);
        restrict_.resize(nc);
        // quadrature exact for products of two degree-k polynomials
        Rule1d g = gauss_rule(k + 1);
        VolumeRule gq = tensor_rule(g, dim);
        int nq = gq.size();

        std::vector<double> phi_c(nb), phi_p(nb);
        if (kind == BasisKind::onb) {
            for (int c = 0; c < nc; ++c) {
                Point off = {double(c & 1), double((c >> 1) & 1)};
                Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nb, nb);
                for (int q = 0; q < nq; ++q) {
                    Point xi = gq.points[q];
                    Point xp = {(xi[0] + off[0]) * 0.5, (xi[1] + off[1]) * 0.5};
                    ref_values(xi, phi_c.data());
                    ref_values(xp, phi_p.data());
                    for (int i = 0; i < nb; ++i)
                        for (int j = 0; j < nb; ++j)
                            T(i, j) += gq.weights[q] * phi_c[i] * phi_p[j];
                }
                double s = 1.0 / std::sqrt(double(nc));
                prolong_[c] = s * T;
                restrict_[c] = s * T.transpose();
            }
        } else {
            // consistent reference mass for the Lagrange basis
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb, nb);
            for (int q = 0; q < nq; ++q) {
                ref_values(gq.points[q], phi_p.data());
                for (int i = 0; i < nb; ++i)
                    for (int j = 0; j < nb; ++j) M(i, j) += gq.weights[q] * phi_p[i] * phi_p[j];
            }
            Eigen::MatrixXd Minv = M.inverse();
            for (int c = 0; c < nc; ++c) {
                Point off = {double(c & 1), double((c >> 1) & 1)};
                // prolongation: interpolate the parent polynomial at child nodes
                Eigen::MatrixXd P(nb, nb);
                for (int q = 0; q < nb; ++q) {
                    Point node = vol.points[q];
                    Point xp = {(node[0] + off[0]) * 0.5, (node[1] + off[1]) * 0.5};
                    ref_values(xp, phi_p.data());
                    for (int j = 0; j < nb; ++j) P(q, j) = phi_p[j];
                }
                prolong_[c] = P;
                // restriction: L2 projection of the child polynomial onto the parent
                Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nb, nb);
                for (int q = 0; q < nq; ++q) {
                    Point xi = gq.points[q];
                    Point xp = {(xi[0] + off[0]) * 0.5, (xi[1] + off[1]) * 0.5};
                    ref_values(xi, phi_c.data());
                    ref_values(xp, phi_p.data());
                    for (int j = 0; j < nb; ++j)
                        for (int q2 = 0; q2 < nb; ++q2)
                            W(j, q2) += gq.weights[q] * phi_p[j] * phi_c[q2];
                }
                restrict_[c] = Minv * W / double(nc);
            }
        }
    }
};

// --- small evaluation helpers used throughout the library -----------------

/// Evaluate an r-component coefficient block (layout [c*nb+i]) against a
/// basis-value row, applying the onb scaling factor.
inline StateVec eval_state(const double* block, int r, int nb, const double* phi, double scale) {
    StateVec u(r);
    for (int c = 0; c < r; ++c) {
        const double* bc = block + c * nb;
        double s = 0;
        for (int i = 0; i < nb; ++i) s += bc[i] * phi[i];
        u[c] = s * scale;
    }
    return u;
}

/// Physical-space gradient; inv_width[axis] = 1 / cell width along axis.
inline FluxMat eval_grad(const double* block, int r, int nb, const double* dphi, double scale,
                         const Point& inv_width, int dim) {
    FluxMat g(r, dim);
    for (int c = 0; c < r; ++c) {
        const double* bc = block + c * nb;
        for (int a = 0; a < dim; ++a) {
            double s = 0;
            for (int i = 0; i < nb; ++i) s += bc[i] * dphi[i * 2 + a];
            g(c, a) = s * scale * inv_width[a];
        }
    }
    return g;
}

}  // namespace rkdg
