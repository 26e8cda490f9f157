#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mcpl/errors.hpp"

namespace mcpl {

/// Rectangular control-point zone: uniform nx-by-nz tensor grid over
/// [x_min, x_max] x [z_min, z_max] in the Oxz plane. A count of 1 along an
/// axis places the point at that axis midpoint.
struct ZoneSpec {
    double x_min = 0.0, x_max = 0.0;
    double z_min = 0.0, z_max = 0.0;
    int nx = 1, nz = 1;

    void validate() const {
        if (!(x_min < x_max) || !(z_min < z_max))
            throw contract_violation("ZoneSpec: ranges must satisfy min < max");
        if (nx < 1 || nz < 1) throw contract_violation("ZoneSpec: counts must be >= 1");
    }

    size_t count() const { return static_cast<size_t>(nx) * nz; }

    std::vector<std::array<double, 2>> points() const {
        validate();
        std::vector<std::array<double, 2>> pts;
        pts.reserve(count());
        for (int i = 0; i < nx; ++i) {
            const double x = nx == 1 ? 0.5 * (x_min + x_max)
                                     : x_min + (x_max - x_min) * i / (nx - 1.0);
            for (int j = 0; j < nz; ++j) {
                const double z = nz == 1 ? 0.5 * (z_min + z_max)
                                         : z_min + (z_max - z_min) * j / (nz - 1.0);
                pts.push_back({x, z});
            }
        }
        return pts;
    }
};

/// Zone transfer matrix: one row per control point, one column per carrier.
struct TransferMatrix {
    Eigen::MatrixXcd values;

    Eigen::Index points() const { return values.rows(); }
    Eigen::Index carriers() const { return values.cols(); }

    void validate() const {
        if (values.rows() < 1 || values.cols() < 1)
            throw contract_violation("TransferMatrix: must be non-empty");
        if (!values.allFinite()) throw contract_violation("TransferMatrix: non-finite entries");
    }

    /// Fewer control points than carriers makes the dark correlation matrix
    /// rank deficient; flagged rather than rejected.
    bool underdetermined() const { return values.rows() < values.cols(); }
};

/// Provides H_a,n rows for arbitrary control points; throws with the point
/// coordinates in the message when a point is unavailable.
using TransferRowProvider =
    std::function<Eigen::RowVectorXcd(double x, double z)>;

/// Assemble a zone transfer matrix from a row provider.
inline TransferMatrix build_transfer_matrix(const ZoneSpec& zone,
                                            const TransferRowProvider& provider) {
    zone.validate();
    const auto pts = zone.points();
    TransferMatrix m;
    Eigen::Index cols = -1;
    for (size_t i = 0; i < pts.size(); ++i) {
        Eigen::RowVectorXcd row = provider(pts[i][0], pts[i][1]);
        if (cols < 0) {
            cols = row.cols();
            m.values.resize(static_cast<Eigen::Index>(pts.size()), cols);
        }
        if (row.cols() != cols)
            throw contract_violation("build_transfer_matrix: provider returned ragged rows");
        m.values.row(static_cast<Eigen::Index>(i)) = row;
    }
    m.validate();
    return m;
}

/// ACC optimum: weights, the sum-based Rayleigh quotient they achieve, and
/// the mean-square contrast in dB (comparable across unequal zone sizes).
struct AccSolution {
    Eigen::VectorXcd weights;
    double contrast = 0.0;      ///< (w* Hb* Hb w) / (w* Hd* Hd w), sums over points
    double contrast_db = 0.0;   ///< 10 log10 of the mean-square ratio
    double eigenvalue = 0.0;    ///< of the regularized pair actually solved
    double eigen_residual = 0.0;///< ||A w - lambda (B+dI) w|| / (||w|| ||A||)
    int normalized_index = -1;  ///< entry pinned to 1+0i, -1 if none applicable
};

/// Mean-square acoustic contrast in dB for given weights.
/// Mean (not sum) over control points, so unequal zone sizes compare fairly.
inline double acoustic_contrast(const TransferMatrix& bright, const TransferMatrix& dark,
                                const Eigen::VectorXcd& weights) {
    if (bright.carriers() != weights.size() || dark.carriers() != weights.size())
        throw contract_violation("acoustic_contrast: dimension mismatch");
    const double num = (bright.values * weights).squaredNorm() / bright.points();
    const double den = (dark.values * weights).squaredNorm() / dark.points();
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(num / den);
}

/// Maximize bright-to-dark energy ratio over the carrier weights.
///
/// Solved as the generalized Hermitian eigenproblem (A, B + delta I) with
/// A = Hb* Hb, B = Hd* Hd via Cholesky reduction of the regularized B.
/// delta = regularization * trace(B) / M_d. The returned weights are scaled
/// so the entry `normalize_index` equals 1+0i; among near-degenerate top
/// eigenpairs the one with the largest |w[normalize_index]| wins.
inline AccSolution acc_solve(const TransferMatrix& bright, const TransferMatrix& dark,
                             double regularization = 1e-8, int normalize_index = 0) {
    bright.validate();
    dark.validate();
    if (bright.carriers() != dark.carriers())
        throw contract_violation("acc_solve: carrier count mismatch between zones");
    if (regularization < 0.0)
        throw contract_violation("acc_solve: regularization must be >= 0");
    const Eigen::Index n = bright.carriers();

    const Eigen::MatrixXcd A = bright.values.adjoint() * bright.values;
    const Eigen::MatrixXcd B = dark.values.adjoint() * dark.values;
    const double delta = regularization * B.trace().real() / static_cast<double>(dark.points());
    const Eigen::MatrixXcd Breg = B + delta * Eigen::MatrixXcd::Identity(n, n);

    {
        Eigen::LLT<Eigen::MatrixXcd> llt(Breg);
        if (llt.info() != Eigen::Success)
            throw contract_violation(
                "acc_solve: dark correlation matrix is singular; pass a regularization > 0");
    }

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> solver(A, Breg);
    if (solver.info() != Eigen::Success)
        throw contract_violation("acc_solve: generalized eigensolver failed");

    // eigenvalues ascend; collect the (near-)degenerate top cluster
    const Eigen::VectorXd evals = solver.eigenvalues();
    const double top = evals(n - 1);
    Eigen::Index pick = n - 1;
    if (normalize_index >= 0 && normalize_index < n) {
        double best = -1.0;
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            if (evals(i) < top * (1.0 - 1e-8)) break;
            const double mag = std::abs(solver.eigenvectors()(normalize_index, i));
            if (mag > best) {
                best = mag;
                pick = i;
            }
        }
    }
    Eigen::VectorXcd w = solver.eigenvectors().col(pick);

    AccSolution sol;
    sol.eigenvalue = evals(pick);
    sol.normalized_index = -1;
    if (normalize_index >= 0 && normalize_index < n &&
        std::abs(w(normalize_index)) > 1e-12 * w.norm()) {
        w /= w(normalize_index);
        sol.normalized_index = normalize_index;
    } else {
        // fall back: largest entry real positive
        Eigen::Index imax;
        w.cwiseAbs().maxCoeff(&imax);
        w /= w(imax);
    }
    sol.weights = w;

    const double num = (bright.values * w).squaredNorm();
    const double den = (dark.values * w).squaredNorm();
    sol.contrast = num / den;
    sol.contrast_db = 10.0 * std::log10((num / bright.points()) / (den / dark.points()));
    sol.eigen_residual = (A * w - sol.eigenvalue * (Breg * w)).norm() /
                         (w.norm() * A.operatorNorm());
    return sol;
}

/// Effective propagation distance of an axial SPL profile: the largest z with
/// spl >= max - 10 dB, linearly interpolated to the crossing beyond it.
struct EffectiveDistance {
    double z = 0.0;        ///< m
    bool unbounded = false;///< profile never dropped 10 dB below its max
};

inline EffectiveDistance effective_propagation_distance(
    std::span<const std::array<double, 2>> profile /* (z, spl_db) */) {
    if (profile.empty())
        throw contract_violation("effective_propagation_distance: empty profile");
    double max_spl = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < profile.size(); ++i) {
        if (i > 0 && !(profile[i][0] > profile[i - 1][0]))
            throw contract_violation("effective_propagation_distance: z must be strictly increasing");
        max_spl = std::max(max_spl, profile[i][1]);
    }
    const double threshold = max_spl - 10.0;
    size_t last = 0;
    for (size_t i = 0; i < profile.size(); ++i)
        if (profile[i][1] >= threshold) last = i;
    if (last + 1 >= profile.size()) return {profile.back()[0], true};
    const double z0 = profile[last][0], s0 = profile[last][1];
    const double z1 = profile[last + 1][0], s1 = profile[last + 1][1];
    return {z0 + (s0 - threshold) / (s0 - s1) * (z1 - z0), false};
}

}  // namespace mcpl
