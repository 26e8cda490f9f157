#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "mcpl/errors.hpp"

namespace mcpl::quad {

/// Nodes and weights on [-1, 1].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule of order n, computed once and cached.
/// Newton iteration on the recurrence; symmetric roots mirrored.
inline const Rule& gauss_legendre(int n) {
    if (n < 1) throw contract_violation("gauss_legendre: order must be >= 1");
    static std::map<int, Rule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

/// Tuning for the oscillatory field quadratures.
///
/// phase_per_panel is the integrand phase budget of one 16-point panel;
/// 24 rad keeps the per-panel error near 1e-9. refine scales every panel
/// count uniformly (used by the self-convergence property tests).
struct QuadSpec {
    double rel_tol = 1e-6;
    double phase_per_panel = 24.0;
    int panel_order = 16;
    double refine = 1.0;
    int max_doublings = 9;
    double evanescent_cutoff = 1e-12;

    double effective_phase_per_panel() const { return phase_per_panel / refine; }

    QuadSpec refined(double factor) const {
        QuadSpec s = *this;
        s.refine *= factor;
        return s;
    }
};

/// Flat composite rule: `panels` equal panels of `order` points on [lo, hi].
struct CompositeRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    CompositeRule() = default;
    CompositeRule(double lo, double hi, int panels, int order) {
        const Rule& base = gauss_legendre(order);
        nodes.reserve(static_cast<size_t>(panels) * order);
        weights.reserve(static_cast<size_t>(panels) * order);
        const double width = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = lo + (p + 0.5) * width;
            for (int j = 0; j < order; ++j) {
                nodes.push_back(mid + 0.5 * width * base.nodes[j]);
                weights.push_back(0.5 * width * base.weights[j]);
            }
        }
    }
};

/// Composite rule over explicit panel edges.
inline CompositeRule panels_rule(const std::vector<double>& edges, int order) {
    CompositeRule r;
    const Rule& base = gauss_legendre(order);
    r.nodes.reserve((edges.size() - 1) * order);
    r.weights.reserve((edges.size() - 1) * order);
    for (size_t p = 0; p + 1 < edges.size(); ++p) {
        const double mid = 0.5 * (edges[p] + edges[p + 1]);
        const double half = 0.5 * (edges[p + 1] - edges[p]);
        for (int j = 0; j < order; ++j) {
            r.nodes.push_back(mid + half * base.nodes[j]);
            r.weights.push_back(half * base.weights[j]);
        }
    }
    return r;
}

/// Panel count for a segment carrying `phase_span` radians of oscillation.
inline int panel_count(double phase_span, const QuadSpec& spec, int minimum = 1) {
    const double pp = spec.effective_phase_per_panel();
    const int n = static_cast<int>(std::ceil(std::abs(phase_span) / pp));
    return std::max(minimum, n);
}

}  // namespace mcpl::quad
