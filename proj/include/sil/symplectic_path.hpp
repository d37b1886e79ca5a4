#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sil/types.hpp"

namespace sil {

/// True iff ||M^T J M - J||_inf <= tol. Throws DimensionError for non-square
/// or odd-dimensional input.
bool validate_symplectic(const Matrix& M, double tol = 1e-9);

/// A 2n x 2n matrix certified to satisfy the symplectic relation.
struct SymplecticMatrix {
    Matrix entries;
    int n = 0;

    static SymplecticMatrix checked(const Matrix& M, double tol = 1e-9);
};

/// Linear Hamiltonian system xdot = J B(t) x with continuous, tau-periodic,
/// symmetric B. Symmetry and (when requested) a positive-definiteness margin
/// are certified by sampling at construction time.
class LinearSystem {
public:
    LinearSystem(int n, double tau, std::function<Matrix(double)> B,
                 double sym_tol = 1e-9, int certify_samples = 64);

    int n() const { return n_; }
    double tau() const { return tau_; }
    Matrix B(double t) const { return B_(t); }

    /// Smallest eigenvalue of B over the certification samples; the system is
    /// flagged positive definite when this margin is > 0.
    bool positive_definite() const { return margin_ > 0.0; }
    double definite_margin() const { return margin_; }

    /// Largest operator norm of B over the certification samples. Used to
    /// bound eigen-angle motion per integration step.
    double norm_bound() const { return norm_bound_; }

private:
    int n_;
    double tau_;
    std::function<Matrix(double)> B_;
    double margin_ = 0.0;
    double norm_bound_ = 0.0;
};

/// Sampled symplectic path gamma: [0, tau] -> Sp(2n) with gamma(0) = I.
///
/// Paths are immutable and cheap to copy (shared internal state). A path can
/// be evaluated at arbitrary interior times: paths produced by
/// integrate_fundamental re-integrate locally from the nearest grid node,
/// iterate paths delegate to their base path via gamma(s) gamma(tau)^j.
class SymplecticPath {
public:
    int n() const;
    double tau() const;
    std::size_t grid_size() const;
    double time_at(std::size_t i) const;
    const Matrix& matrix_at(std::size_t i) const;
    const Matrix& end_matrix() const;
    SymplecticMatrix end() const;

    /// Dense evaluation anywhere on [0, tau]. Deterministic.
    Matrix at(double t) const;

    /// Eigenvalues of the sample matrices (lazily computed, cached).
    const std::vector<ComplexVector>& sample_eigenvalues() const;

    std::shared_ptr<const LinearSystem> generator() const;
    /// Non-null when the path is an iterate; m is the iteration count.
    std::shared_ptr<const SymplecticPath> base() const;
    int iteration_count() const;

    /// True when the path (or the base of an iterate chain) was generated by
    /// a positive definite system. Required by the index engine.
    bool convex_generated() const;

    double drift() const;  // max_i ||G_i^T J G_i - J||_inf
    const char* interpolation() const;

    static SymplecticPath from_samples(int n, std::vector<double> times,
                                       std::vector<Matrix> mats,
                                       std::shared_ptr<const LinearSystem> generator,
                                       double path_tol = 1e-7);

    struct Impl;

private:
    friend SymplecticPath iterate_path(const SymplecticPath&, int);
    std::shared_ptr<const Impl> impl_;
};

/// Fundamental solution of sys by the classical 4th-order one-step method on
/// a uniform grid with `steps` steps. No symplectic projection is applied;
/// drift beyond path_tol raises AccuracyError. The grid must resolve
/// eigen-angle motion to < pi/8 per step (h * ||B|| <= pi/8), so crossings
/// cannot fall between samples.
SymplecticPath integrate_fundamental(std::shared_ptr<const LinearSystem> sys, int steps,
                                     double path_tol = 1e-7);
SymplecticPath integrate_fundamental(const LinearSystem& sys, int steps,
                                     double path_tol = 1e-7);

/// Iteration path on [0, m*tau]: gamma~(j tau + s) = gamma(s) gamma(tau)^j.
/// Purely algebraic; reuses gamma's grid shifted per period.
SymplecticPath iterate_path(const SymplecticPath& gamma, int m);

}  // namespace sil
