#pragma once

// Quad/binary-tree AMR mesh over a Cartesian base grid (d = 1 or 2).
//
// Leaves are stored in canonical depth-first order (row-major over base
// cells, Morton order inside each tree), which is preserved across
// adaptation without re-sorting. Faces are enumerated once each, with the
// fine side owning hanging interfaces; 2:1 level balance across faces is
// enforced during adapt(). Optional per-axis periodicity turns wrapped
// domain-boundary interfaces into ordinary interior faces.
//
// Boundary ids: 1 = left, 2 = right, 3 = bottom, 4 = top.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rkdg/core.hpp"

namespace rkdg {

struct CellGeometry {
    Point lower = {0, 0};
    Point widths = {1, 1};  // widths[1] == 1 in 1d
    Point center = {0, 0};
    double volume = 1;
    double diameter = 1;  // cell diagonal
    int level = 0;
};

struct Face {
    int inside = -1;        // emitting leaf
    int outside = -1;       // neighbor leaf, or -1 on the domain boundary
    int boundary_id = 0;    // 1..4 when outside < 0
    int axis = 0;           // 0 = x-normal, 1 = y-normal
    int side_in = 0;        // face of the inside cell (0:-x, 1:+x, 2:-y, 3:+y)
    int side_out = 0;       // face of the outside cell
    int out_half = -1;      // tangential half on the coarse side (-1: conforming)
    double area = 1;        // |e| (1 in 1d)
    Point normal = {1, 0};  // from inside to outside
    Point center = {0, 0};
    double h_face = 1;      // mean adjacent cell volume / area
};

class Mesh {
  public:
    struct Transfer {
        enum Kind { copy, refine, coarsen } kind = copy;
        int source = -1;                       // old leaf (copy), parent (refine)
        int child = 0;                         // child position for refine
        std::array<int, 4> sources = {-1, -1, -1, -1};  // old siblings by child position
    };
    struct MarkCounts {
        int refine = 0;
        int coarsen = 0;
    };

    static Mesh cartesian(Point lo, Point hi, std::array<int, 2> counts, int dim,
                          std::array<bool, 2> periodic = {false, false}) {
        if (dim < 1 || dim > 2) throw Error("Mesh: dim must be 1 or 2");
        Mesh m;
        m.dim_ = dim;
        m.lo_ = lo;
        m.hi_ = hi;
        m.counts_ = counts;
        m.periodic_ = periodic;
        if (dim == 1) {
            m.counts_[1] = 1;
            m.periodic_[1] = false;
            m.hi_[1] = lo[1] + 1.0;
        }
        for (int a = 0; a < dim; ++a) {
            if (m.counts_[a] < 1) throw Error("Mesh: need at least one base cell per axis");
            if (!(m.hi_[a] > m.lo_[a])) throw Error("Mesh: domain bounds must be increasing");
        }
        for (long j = 0; j < m.counts_[1]; ++j)
            for (long i = 0; i < m.counts_[0]; ++i) m.leaves_.push_back({0, i, j});
        m.rebuild();
        return m;
    }

    int dim() const { return dim_; }
    int num_leaves() const { return int(leaves_.size()); }
    long version() const { return version_; }
    const CellGeometry& geometry(int leaf) const { return geom_[leaf]; }
    int level(int leaf) const { return leaves_[leaf].level; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<int>& cell_faces(int leaf) const { return cell_faces_[leaf]; }
    Point domain_lower() const { return lo_; }
    Point domain_upper() const { return hi_; }
    std::array<bool, 2> periodic() const { return periodic_; }

    double domain_volume() const {
        double v = hi_[0] - lo_[0];
        if (dim_ == 2) v *= hi_[1] - lo_[1];
        return v;
    }

    std::vector<int> neighbors(int leaf) const {
        std::vector<int> out;
        for (int f : cell_faces_[leaf]) {
            const Face& fc = faces_[f];
            if (fc.outside < 0) continue;
            out.push_back(fc.inside == leaf ? fc.outside : fc.inside);
        }
        return out;
    }

    /// Center-to-center displacement honoring periodic wrap.
    Point displacement(int from, int to) const {
        Point d = geom_[to].center - geom_[from].center;
        for (int a = 0; a < dim_; ++a) {
            if (!periodic_[a]) continue;
            double L = hi_[a] - lo_[a];
            if (d[a] > 0.5 * L) d[a] -= L;
            if (d[a] < -0.5 * L) d[a] += L;
        }
        return d;
    }

    /// Flag leaves for refinement/coarsening from a per-leaf indicator.
    /// Refine iff indicator > refine_tol and level < max_level, then one
    /// propagation pass flags face neighbors of refine-flagged leaves.
    /// Coarsen iff indicator < coarsen_tol, level > min_level and the leaf
    /// is not refine-flagged.
    MarkCounts mark(const std::vector<double>& indicator, double refine_tol, double coarsen_tol,
                    int min_level, int max_level) {
        if (int(indicator.size()) != num_leaves())
            throw Error("Mesh::mark: indicator size mismatch");
        if (refine_tol < 0 || coarsen_tol < 0)
            throw Error("Mesh::mark: tolerances must be non-negative");
        if (min_level < 0 || max_level < min_level)
            throw Error("Mesh::mark: invalid level bounds");
        int n = num_leaves();
        refine_.assign(n, 0);
        coarsen_.assign(n, 0);
        for (int i = 0; i < n; ++i)
            if (indicator[i] > refine_tol && leaves_[i].level < max_level) refine_[i] = 1;
        // single propagation pass to face neighbors
        std::vector<int> seeds;
        for (int i = 0; i < n; ++i)
            if (refine_[i]) seeds.push_back(i);
        for (int i : seeds)
            for (int nb : neighbors(i))
                if (leaves_[nb].level < max_level) refine_[nb] = 1;
        MarkCounts c;
        for (int i = 0; i < n; ++i) {
            if (refine_[i]) ++c.refine;
            if (!refine_[i] && indicator[i] < coarsen_tol && leaves_[i].level > min_level) {
                coarsen_[i] = 1;
                ++c.coarsen;
            }
        }
        have_marks_ = c.refine > 0 || c.coarsen > 0;
        return c;
    }

    void mark_all_refine() {
        refine_.assign(num_leaves(), 1);
        coarsen_.assign(num_leaves(), 0);
        have_marks_ = true;
    }

    /// Execute the current marks: split refine-flagged leaves (adding flags
    /// where needed to keep 2:1 face balance), merge complete sibling groups
    /// whose members are all coarsen-flagged and whose merge keeps balance.
    /// Returns one entry per new leaf describing where its data comes from;
    /// an empty plan means the mesh did not change.
    std::vector<Transfer> adapt() {
        std::vector<Transfer> plan;
        if (!have_marks_) return plan;
        int n = num_leaves();

        // refine set closed under 2:1 balance
        std::vector<int> target(n);
        for (int i = 0; i < n; ++i) target[i] = leaves_[i].level + (refine_[i] ? 1 : 0);
        bool changed = true;
        while (changed) {
            changed = false;
            for (const Face& f : faces_) {
                if (f.outside < 0) continue;
                int a = f.inside, b = f.outside;
                if (target[a] > target[b] + 1) {
                    target[b] = target[a] - 1;
                    changed = true;
                }
                if (target[b] > target[a] + 1) {
                    target[a] = target[b] - 1;
                    changed = true;
                }
            }
        }
        std::vector<uint8_t> do_refine(n, 0);
        for (int i = 0; i < n; ++i) do_refine[i] = target[i] > leaves_[i].level;

        // approve coarsening groups: 2^d consecutive siblings, all flagged,
        // none refining, merge must not violate balance with neighbor targets
        int group = 1 << dim_;
        std::vector<uint8_t> merge_start(n, 0);
        for (int i = 0; i + group <= n; ++i) {
            if (!coarsen_[i] || do_refine[i]) continue;
            const Leaf& l0 = leaves_[i];
            if (l0.level == 0) continue;
            if ((l0.gx & 1) != 0 || (dim_ == 2 && (l0.gy & 1) != 0)) continue;
            bool ok = true;
            for (int s = 0; s < group; ++s) {
                const Leaf& ls = leaves_[i + s];
                if (!coarsen_[i + s] || do_refine[i + s] || ls.level != l0.level ||
                    (ls.gx >> 1) != (l0.gx >> 1) || (ls.gy >> 1) != (l0.gy >> 1)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            int parent_level = l0.level - 1;
            for (int s = 0; s < group && ok; ++s)
                for (int fi : cell_faces_[i + s]) {
                    const Face& f = faces_[fi];
                    if (f.outside < 0) continue;
                    int other = (f.inside == i + s) ? f.outside : f.inside;
                    if (other >= i && other < i + group) continue;
                    if (target[other] > parent_level + 1) {
                        ok = false;
                        break;
                    }
                }
            if (ok) merge_start[i] = 1;
        }

        // build the new leaf list in canonical order
        std::vector<Leaf> fresh;
        for (int i = 0; i < n; ++i) {
            const Leaf& l = leaves_[i];
            if (do_refine[i]) {
                for (int c = 0; c < group; ++c) {
                    long cx = c & 1, cy = (c >> 1) & 1;
                    fresh.push_back({l.level + 1, 2 * l.gx + cx, dim_ == 2 ? 2 * l.gy + cy : 0});
                    Transfer t;
                    t.kind = Transfer::refine;
                    t.source = i;
                    t.child = c;
                    plan.push_back(t);
                }
            } else if (merge_start[i]) {
                Transfer t;
                t.kind = Transfer::coarsen;
                for (int s = 0; s < group; ++s) {
                    const Leaf& ls = leaves_[i + s];
                    int c = int(ls.gx & 1) + 2 * int(dim_ == 2 ? (ls.gy & 1) : 0);
                    t.sources[c] = i + s;
                }
                fresh.push_back({l.level - 1, l.gx >> 1, dim_ == 2 ? l.gy >> 1 : 0});
                plan.push_back(t);
                i += group - 1;
            } else {
                fresh.push_back(l);
                Transfer t;
                t.kind = Transfer::copy;
                t.source = i;
                plan.push_back(t);
            }
        }
        bool identical = fresh.size() == leaves_.size();
        if (identical)
            for (std::size_t i = 0; i < fresh.size(); ++i)
                if (fresh[i].level != leaves_[i].level || fresh[i].gx != leaves_[i].gx ||
                    fresh[i].gy != leaves_[i].gy) {
                    identical = false;
                    break;
                }
        refine_.clear();
        coarsen_.clear();
        have_marks_ = false;
        if (identical) return {};
        leaves_ = std::move(fresh);
        rebuild();
        ++version_;
        return plan;
    }

    void global_refine(int times) {
        for (int t = 0; t < times; ++t) {
            mark_all_refine();
            adapt();
        }
    }

    int max_present_level() const {
        int m = 0;
        for (const Leaf& l : leaves_) m = std::max(m, l.level);
        return m;
    }

    /// True when every face joins cells at most one level apart.
    bool balanced() const {
        for (const Face& f : faces_)
            if (f.outside >= 0 &&
                std::abs(leaves_[f.inside].level - leaves_[f.outside].level) > 1)
                return false;
        return true;
    }

  private:
    struct Leaf {
        int level;
        long gx, gy;  // global integer coordinates at this leaf's level
    };

    int dim_ = 2;
    Point lo_ = {0, 0}, hi_ = {1, 1};
    std::array<int, 2> counts_ = {1, 1};
    std::array<bool, 2> periodic_ = {false, false};
    std::vector<Leaf> leaves_;
    std::vector<CellGeometry> geom_;
    std::vector<Face> faces_;
    std::vector<std::vector<int>> cell_faces_;
    std::unordered_map<uint64_t, int> index_;
    std::vector<uint8_t> refine_, coarsen_;
    bool have_marks_ = false;
    long version_ = 1;

    static uint64_t key(int level, long gx, long gy) {
        return (uint64_t(level) << 52) | (uint64_t(gx) << 26) | uint64_t(gy);
    }

    long cells_at(int axis, int level) const { return long(counts_[axis]) << level; }

    /// Wrap or reject an out-of-range coordinate; returns false for a
    /// physical boundary.
    bool wrap(int axis, int level, long& g) const {
        long nc = cells_at(axis, level);
        if (g >= 0 && g < nc) return true;
        if (!periodic_[axis]) return false;
        g = ((g % nc) + nc) % nc;
        return true;
    }

    int find(int level, long gx, long gy) const {
        auto it = index_.find(key(level, gx, gy));
        return it == index_.end() ? -1 : it->second;
    }

    void rebuild() {
        int n = num_leaves();
        index_.clear();
        index_.reserve(2 * n);
        geom_.resize(n);
        double w0x = (hi_[0] - lo_[0]) / counts_[0];
        double w0y = dim_ == 2 ? (hi_[1] - lo_[1]) / counts_[1] : 1.0;
        for (int i = 0; i < n; ++i) {
            const Leaf& l = leaves_[i];
            index_[key(l.level, l.gx, l.gy)] = i;
            CellGeometry g;
            g.level = l.level;
            double sc = double(1L << l.level);
            g.widths = {w0x / sc, dim_ == 2 ? w0y / sc : 1.0};
            g.lower = {lo_[0] + l.gx * g.widths[0], dim_ == 2 ? lo_[1] + l.gy * g.widths[1] : 0.0};
            g.center = {g.lower[0] + 0.5 * g.widths[0],
                        dim_ == 2 ? g.lower[1] + 0.5 * g.widths[1] : 0.0};
            g.volume = g.widths[0] * (dim_ == 2 ? g.widths[1] : 1.0);
            g.diameter = dim_ == 2
                             ? std::sqrt(g.widths[0] * g.widths[0] + g.widths[1] * g.widths[1])
                             : g.widths[0];
            geom_[i] = g;
        }
        build_faces();
    }

    void build_faces() {
        int n = num_leaves();
        faces_.clear();
        cell_faces_.assign(n, {});
        for (int i = 0; i < n; ++i) {
            const Leaf& l = leaves_[i];
            for (int axis = 0; axis < dim_; ++axis)
                for (int dir = -1; dir <= 1; dir += 2) {
                    long t = (axis == 0 ? l.gx : l.gy) + dir;
                    long o = (axis == 0 ? l.gy : l.gx);
                    if (!wrap(axis, l.level, t)) {
                        emit_boundary(i, axis, dir);
                        continue;
                    }
                    long nx = axis == 0 ? t : o;
                    long ny = axis == 0 ? o : t;
                    int same = find(l.level, nx, ny);
                    if (same >= 0) {
                        if (dir > 0) emit_interior(i, same, axis, dir, -1);
                        continue;
                    }
                    int coarse = find(l.level - 1, nx >> 1, ny >> 1);
                    if (l.level > 0 && coarse >= 0) {
                        emit_interior(i, coarse, axis, dir, int(o & 1));
                        continue;
                    }
                    // finer neighbors own the interface; verify balance holds
                    long ft = dir > 0 ? 2 * t : 2 * t + 1;
                    long fo = 2 * o;
                    long fnx = axis == 0 ? ft : fo;
                    long fny = axis == 0 ? fo : ft;
                    if (find(l.level + 1, fnx, fny) < 0)
                        throw Error("Mesh: missing neighbor (2:1 balance violated)");
                }
        }
    }

    void emit_boundary(int in, int axis, int dir) {
        const CellGeometry& g = geom_[in];
        Face f;
        f.inside = in;
        f.outside = -1;
        f.boundary_id = axis == 0 ? (dir < 0 ? 1 : 2) : (dir < 0 ? 3 : 4);
        f.axis = axis;
        f.side_in = axis * 2 + (dir > 0 ? 1 : 0);
        f.side_out = -1;
        f.normal = axis == 0 ? Point{double(dir), 0.0} : Point{0.0, double(dir)};
        f.area = dim_ == 2 ? g.widths[1 - axis] : 1.0;
        f.center = g.center;
        f.center[axis] = g.lower[axis] + (dir > 0 ? g.widths[axis] : 0.0);
        f.h_face = g.volume / f.area;
        push_face(f);
    }

    void emit_interior(int in, int out, int axis, int dir, int out_half) {
        const CellGeometry& gi = geom_[in];
        const CellGeometry& go = geom_[out];
        Face f;
        f.inside = in;
        f.outside = out;
        f.axis = axis;
        f.side_in = axis * 2 + (dir > 0 ? 1 : 0);
        f.side_out = axis * 2 + (dir > 0 ? 0 : 1);
        f.out_half = out_half;
        f.normal = axis == 0 ? Point{double(dir), 0.0} : Point{0.0, double(dir)};
        f.area = dim_ == 2 ? gi.widths[1 - axis] : 1.0;  // fine side extent
        f.center = gi.center;
        f.center[axis] = gi.lower[axis] + (dir > 0 ? gi.widths[axis] : 0.0);
        f.h_face = 0.5 * (gi.volume + go.volume) / f.area;
        push_face(f);
    }

    void push_face(Face f) {
        int id = int(faces_.size());
        faces_.push_back(f);
        cell_faces_[f.inside].push_back(id);
        if (f.outside >= 0 && f.outside != f.inside) cell_faces_[f.outside].push_back(id);
    }
};

}  // namespace rkdg
