#include "cstop/envelope.hpp"

#include "cstop/error.hpp"

#include <algorithm>

namespace cstop {

ConcaveEnvelope ConcaveEnvelope::constant(const Rational& start, const Rational& value, bool stop) {
    ConcaveEnvelope e;
    e.vertices_.push_back({start, value, stop});
    return e;
}

ConcaveEnvelope ConcaveEnvelope::hull(std::vector<Vertex> points) {
    if (points.empty()) throw Error(ErrorCode::InvalidInstance, "envelope needs at least one point");
    std::stable_sort(points.begin(), points.end(), [](const Vertex& a, const Vertex& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.v != b.v) return a.v > b.v;
        return a.stop && !b.stop;
    });
    std::vector<Vertex> upper;
    for (Vertex& p : points) {
        if (!upper.empty() && upper.back().x == p.x) continue;
        // pop while the last vertex is on or below the chord to p
        while (upper.size() >= 2) {
            const Vertex& a = upper[upper.size() - 2];
            const Vertex& b = upper.back();
            Rational cross = (b.x - a.x) * (p.v - a.v) - (b.v - a.v) * (p.x - a.x);
            if (sgn(cross) >= 0) {
                upper.pop_back();
            } else {
                break;
            }
        }
        upper.push_back(std::move(p));
    }
    // free disposal: flat after the first maximum
    std::size_t best = 0;
    for (std::size_t i = 1; i < upper.size(); ++i) {
        if (upper[i].v > upper[best].v) best = i;
    }
    upper.resize(best + 1);
    ConcaveEnvelope e;
    e.vertices_ = std::move(upper);
    return e;
}

std::vector<Rational> ConcaveEnvelope::slopes() const {
    std::vector<Rational> s;
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
        s.push_back((vertices_[i + 1].v - vertices_[i].v) / (vertices_[i + 1].x - vertices_[i].x));
    }
    return s;
}

Rational ConcaveEnvelope::value(const Rational& y) const {
    if (y < domain_start()) {
        throw Error(ErrorCode::BudgetBelowDomain, "budget " + to_string(y) + " below domain start " +
                                                      to_string(domain_start()));
    }
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
        const Vertex& a = vertices_[i];
        const Vertex& b = vertices_[i + 1];
        if (y <= b.x) return a.v + (b.v - a.v) * (y - a.x) / (b.x - a.x);
    }
    return vertices_.back().v;
}

Rational ConcaveEnvelope::value(const ExtendedReal& y) const {
    if (y.is_pos_inf()) return max_value();
    if (y.is_neg_inf()) throw Error(ErrorCode::BudgetBelowDomain, "budget -inf");
    return value(y.finite());
}

bool ConcaveEnvelope::valid() const {
    if (vertices_.empty()) return false;
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
        if (vertices_[i + 1].x <= vertices_[i].x) return false;
    }
    std::vector<Rational> s = slopes();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (sgn(s[i]) <= 0) return false;
        if (i > 0 && s[i] >= s[i - 1]) return false;
    }
    return true;
}

namespace {

struct Segment {
    std::size_t child;
    Rational slope;
    Rational length;  // in spent-budget units p_j * dx
};

std::vector<Segment> sorted_segments(std::span<const std::pair<Rational, ConcaveEnvelope>> children) {
    std::vector<Segment> segs;
    for (std::size_t j = 0; j < children.size(); ++j) {
        const auto& [p, env] = children[j];
        const auto& vs = env.vertices();
        for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
            Rational dx = vs[i + 1].x - vs[i].x;
            segs.push_back({j, (vs[i + 1].v - vs[i].v) / dx, p * dx});
        }
    }
    std::stable_sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.slope > b.slope; });
    return segs;
}

}  // namespace

Allocation allocate(std::span<const std::pair<Rational, ConcaveEnvelope>> children, const Rational& total) {
    if (children.empty()) throw Error(ErrorCode::InvalidInstance, "allocate needs at least one child");
    Allocation a;
    Rational start = 0;
    a.value = 0;
    std::vector<Rational> spent(children.size());
    for (std::size_t j = 0; j < children.size(); ++j) {
        const auto& [p, env] = children[j];
        spent[j] = p * env.domain_start();
        start += spent[j];
        a.value += p * env.vertices().front().v;
    }
    if (total < start) {
        throw Error(ErrorCode::BudgetBelowDomain, "total " + to_string(total) + " below " + to_string(start));
    }
    Rational left = total - start;
    for (const Segment& s : sorted_segments(children)) {
        if (sgn(left) == 0) break;
        Rational take = s.length < left ? s.length : left;
        spent[s.child] += take;
        a.value += s.slope * take;
        left -= take;
    }
    a.budgets.resize(children.size());
    for (std::size_t j = 0; j < children.size(); ++j) a.budgets[j] = spent[j] / children[j].first;
    return a;
}

ConcaveEnvelope combine(std::span<const std::pair<Rational, ConcaveEnvelope>> children) {
    if (children.empty()) throw Error(ErrorCode::InvalidInstance, "combine needs at least one child");
    Rational x = 0, v = 0;
    for (const auto& [p, env] : children) {
        x += p * env.domain_start();
        v += p * env.vertices().front().v;
    }
    std::vector<ConcaveEnvelope::Vertex> pts{{x, v, false}};
    for (const Segment& s : sorted_segments(children)) {
        x += s.length;
        v += s.slope * s.length;
        pts.push_back({x, v, false});
    }
    return ConcaveEnvelope::hull(std::move(pts));
}

ConcaveEnvelope backstep(const Rational& stop_payoff, const Rational& f_dt, const Rational& g_dt,
                         const ConcaveEnvelope& continuation) {
    std::vector<ConcaveEnvelope::Vertex> pts{{Rational(0), stop_payoff, true}};
    for (const auto& c : continuation.vertices()) pts.push_back({g_dt + c.x, f_dt + c.v, false});
    return ConcaveEnvelope::hull(std::move(pts));
}

}  // namespace cstop
