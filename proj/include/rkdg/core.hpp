#pragma once

// Small fixed-capacity value types and utilities shared by the whole library.
// State vectors and flux matrices are stack-allocated with a compile-time
// capacity so that model callbacks can be invoked per quadrature point
// without touching the heap.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rkdg {

/// Largest number of solution components supported by the value types below.
inline constexpr int max_components = 8;
/// Largest spatial dimension supported (1 or 2).
inline constexpr int max_dim = 2;

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Spatial point / direction. In 1d only the first entry is meaningful.
using Point = std::array<double, max_dim>;

inline Point operator+(Point a, const Point& b) { a[0] += b[0]; a[1] += b[1]; return a; }
inline Point operator-(Point a, const Point& b) { a[0] -= b[0]; a[1] -= b[1]; return a; }
inline Point operator*(double s, Point a) { a[0] *= s; a[1] *= s; return a; }
inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

/// Solution state (r components, r <= max_components).
class StateVec {
  public:
    StateVec() = default;
    explicit StateVec(int n, double fill = 0.0) : n_(n) {
        for (int i = 0; i < n_; ++i) v_[i] = fill;
    }
    StateVec(std::initializer_list<double> vals) : n_(int(vals.size())) {
        int i = 0;
        for (double v : vals) v_[i++] = v;
    }

    int size() const { return n_; }
    double& operator[](int i) { return v_[i]; }
    double operator[](int i) const { return v_[i]; }

    StateVec& operator+=(const StateVec& o) {
        for (int i = 0; i < n_; ++i) v_[i] += o.v_[i];
        return *this;
    }
    StateVec& operator-=(const StateVec& o) {
        for (int i = 0; i < n_; ++i) v_[i] -= o.v_[i];
        return *this;
    }
    StateVec& operator*=(double s) {
        for (int i = 0; i < n_; ++i) v_[i] *= s;
        return *this;
    }
    friend StateVec operator+(StateVec a, const StateVec& b) { return a += b; }
    friend StateVec operator-(StateVec a, const StateVec& b) { return a -= b; }
    friend StateVec operator*(double s, StateVec a) { return a *= s; }

  private:
    double v_[max_components] = {};
    int n_ = 0;
};

/// r x d matrix: one spatial flux column per dimension (or a gradient with
/// one column per derivative direction).
class FluxMat {
  public:
    FluxMat() = default;
    FluxMat(int rows, int cols) : r_(rows), d_(cols) {
        for (double& v : v_) v = 0.0;
    }

    int rows() const { return r_; }
    int cols() const { return d_; }
    double& operator()(int c, int axis) { return v_[c * max_dim + axis]; }
    double operator()(int c, int axis) const { return v_[c * max_dim + axis]; }

    /// Matrix-vector contraction with a direction: (F . n)_c = sum_axis F(c,axis) n[axis].
    StateVec apply(const Point& n) const {
        StateVec out(r_);
        for (int c = 0; c < r_; ++c) {
            double s = 0;
            for (int a = 0; a < d_; ++a) s += (*this)(c, a) * n[a];
            out[c] = s;
        }
        return out;
    }

    FluxMat& operator+=(const FluxMat& o) {
        for (int i = 0; i < max_components * max_dim; ++i) v_[i] += o.v_[i];
        return *this;
    }
    FluxMat& operator*=(double s) {
        for (int i = 0; i < max_components * max_dim; ++i) v_[i] *= s;
        return *this;
    }
    friend FluxMat operator+(FluxMat a, const FluxMat& b) { return a += b; }
    friend FluxMat operator*(double s, FluxMat a) { return a *= s; }

    /// Outer product u (x) n, used to feed jumps into viscous fluxes.
    static FluxMat outer(const StateVec& u, const Point& n, int dim) {
        FluxMat m(u.size(), dim);
        for (int c = 0; c < u.size(); ++c)
            for (int a = 0; a < dim; ++a) m(c, a) = u[c] * n[a];
        return m;
    }

  private:
    double v_[max_components * max_dim] = {};
    int r_ = 0;
    int d_ = 0;
};

/// Run fn(begin, end) over [0, n) split across `workers` threads.
/// With workers <= 1 the call is inline. Each chunk touches a disjoint index
/// range, so the caller is responsible only for making writes per-index.
inline void parallel_for(int n, int workers, const std::function<void(int, int)>& fn) {
    if (workers <= 1 || n < 2 * workers) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::mutex err_mutex;
    std::exception_ptr err;
    int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int b = w * chunk;
        int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace rkdg
