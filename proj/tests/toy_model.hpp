#pragma once

// Two-component toy network and a brute-force oracle that runs forward-backward
// over the full joint state (alpha cell, both components' K/M/crack bins).

#include "imprs/dbn.hpp"
#include "imprs/system.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace toy {

using namespace imprs;

struct Toy {
    std::shared_ptr<DbnModel> dbn;
    std::shared_ptr<SystemModel> system;
    std::vector<YearRecord> records;  // years 1..3
    double load_mean = 0.0;
    double load_cov = 0.0;
    double intact = 0.0;
    std::vector<double> fraction;     // residual capacity by failed mask
};

inline Toy make_toy()
{
    Toy t;
    FatigueParams fp;
    fp.critical_depth = 10.0;
    DiscretizationConfig dc;
    dc.crack_boundaries = {0.0, 0.5, 1.5, 4.0, 10.0};
    dc.k_bins = 2;
    dc.m_bins = 1;
    dc.alpha_bins_D0 = 1;
    dc.alpha_bins_K = 3;
    dc.alpha_bins_M = 1;
    const double sd = fp.std_lnK;
    t.dbn = std::make_shared<DbnModel>(fp, CorrelationParams{}, dc, InspectionModel{},
                                       std::vector<double>{std::log(40.0) - sd * sd / 2, std::log(25.0) - sd * sd / 2},
                                       std::vector<int>{0, 1});

    CapacityModel cap;
    cap.mode = CapacityModel::Mode::General;
    cap.intact_resistance = 150.0;
    cap.sets = {{{0}, 0.6}, {{1}, 0.7}, {{0, 1}, 0.2}};
    t.intact = cap.intact_resistance;
    t.fraction = {1.0, 0.6, 0.7, 0.2};
    t.load_mean = 50.0;
    t.load_cov = 0.53;
    t.system = std::make_shared<SystemModel>(cap, LoadModel{t.load_mean, t.load_cov}, 2);

    for (int y = 1; y <= 3; ++y) t.records.emplace_back(y, 2);
    auto& r2 = t.records[1];
    r2.campaign = true;
    r2.outcomes[0] = Outcome{Outcome::Kind::NoDetection, 0.0};
    r2.outcomes[1] = Outcome{Outcome::Kind::Measured, 2.5};
    r2.repaired[1] = 1;
    auto& r3 = t.records[2];
    r3.campaign = true;
    r3.outcomes[0] = Outcome{Outcome::Kind::Measured, 4.0};
    return t;
}

// Lognormal exceedance written out directly.
inline double exceedance(double r, double mean, double cov)
{
    const double s2 = std::log1p(cov * cov);
    const double mu = std::log(mean) - 0.5 * s2;
    return 0.5 * std::erfc((std::log(r) - mu) / std::sqrt(2.0 * s2));
}

struct Oracle {
    // joint[a][x1][x2] flattened; x = (iK * nM + iM) * nD + d
    std::vector<std::vector<double>> predicted;  // normalized, per year
    std::vector<std::vector<double>> filtered;   // after update and repairs
    std::vector<std::vector<double>> smoothed;   // predicted year, conditioned on all records
    std::vector<double> interval;                // Pr(F_i* | Z_{1:i-1})
};

class JointOracle {
public:
    explicit JointOracle(const Toy& t) : t_(t), m_(*t.dbn)
    {
        nD_ = m_.nD();
        S_ = m_.nK() * m_.nM() * nD_;
        A_ = m_.cells();
    }

    std::size_t size() const { return static_cast<std::size_t>(A_ * S_ * S_); }
    std::size_t idx(int a, int x1, int x2) const { return static_cast<std::size_t>((a * S_ + x1) * S_ + x2); }

    Oracle run() const
    {
        Oracle o;
        std::vector<double> cur(size(), 0.0);
        const double pa = 1.0 / A_;
        const double pkm = 1.0 / (m_.nK() * m_.nM());
        for (int a = 0; a < A_; ++a) {
            const auto& d0 = m_.d0_given_alpha(m_.cell_coords(a)[0]);
            for (int x1 = 0; x1 < S_; ++x1)
                for (int x2 = 0; x2 < S_; ++x2)
                    cur[idx(a, x1, x2)] = pa * pkm * d0[static_cast<std::size_t>(x1 % nD_)] * pkm *
                                          d0[static_cast<std::size_t>(x2 % nD_)];
        }
        std::vector<std::vector<double>> pred_unnorm;
        for (const auto& rec : t_.records) {
            cur = grow(cur);
            pred_unnorm.push_back(cur);
            std::vector<double> p = cur;
            normalize(p);
            o.predicted.push_back(p);
            o.interval.push_back(system_failure(p));
            const auto L = likelihood(rec);
            for (std::size_t i = 0; i < cur.size(); ++i) cur[i] *= L[i];
            normalize(cur);
            cur = repair(cur, rec);
            o.filtered.push_back(cur);
        }
        // backward messages b_t = L_t * R_t^T G^T b_{t+1}
        const std::size_t T = t_.records.size();
        std::vector<double> b(size(), 1.0);
        o.smoothed.resize(T);
        for (std::size_t t = T; t-- > 0;) {
            if (t + 1 < T) b = repair_transpose(grow_transpose(b), t_.records[t]);
            const auto L = likelihood(t_.records[t]);
            for (std::size_t i = 0; i < b.size(); ++i) b[i] *= L[i];
            std::vector<double> s(size());
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = pred_unnorm[t][i] * b[i];
            normalize(s);
            o.smoothed[t] = s;
            normalize(b);
        }
        return o;
    }

    /// Joint distribution implied by a factorized belief.
    std::vector<double> joint(const BeliefState& belief) const
    {
        std::vector<double> j(size());
        const auto& w = belief.alpha_weights();
        const auto& p1 = belief.component(0).p;
        const auto& p2 = belief.component(1).p;
        for (int a = 0; a < A_; ++a)
            for (int x1 = 0; x1 < S_; ++x1)
                for (int x2 = 0; x2 < S_; ++x2)
                    j[idx(a, x1, x2)] = w[static_cast<std::size_t>(a)] * p1[static_cast<std::size_t>(a * S_ + x1)] *
                                        p2[static_cast<std::size_t>(a * S_ + x2)];
        return j;
    }

private:
    static void normalize(std::vector<double>& v)
    {
        double s = 0.0;
        for (double x : v) s += x;
        for (double& x : v) x /= s;
    }

    std::vector<double> transition(int group, int a, int x) const
    {
        const int iK = x / nD_ / m_.nM();
        const int iM = (x / nD_) % m_.nM();
        const auto c = m_.cell_coords(a);
        const SparseKernel& k = m_.kernel(group, c[1], iK, c[2], iM);
        const int d = x % nD_;
        std::vector<double> row(static_cast<std::size_t>(S_), 0.0);
        for (std::uint32_t e = k.offset[static_cast<std::size_t>(d)]; e < k.offset[static_cast<std::size_t>(d) + 1]; ++e) {
            const int to = k.first[static_cast<std::size_t>(d)] + static_cast<int>(e - k.offset[static_cast<std::size_t>(d)]);
            row[static_cast<std::size_t>(x - d + to)] = k.weight[e];
        }
        return row;
    }

    std::vector<double> grow(const std::vector<double>& in) const
    {
        std::vector<double> out(size(), 0.0);
        for (int a = 0; a < A_; ++a)
            for (int x1 = 0; x1 < S_; ++x1) {
                const auto r1 = transition(0, a, x1);
                for (int x2 = 0; x2 < S_; ++x2) {
                    const double p = in[idx(a, x1, x2)];
                    if (p == 0.0) continue;
                    const auto r2 = transition(1, a, x2);
                    for (int y1 = 0; y1 < S_; ++y1)
                        for (int y2 = 0; y2 < S_; ++y2)
                            out[idx(a, y1, y2)] += p * r1[static_cast<std::size_t>(y1)] * r2[static_cast<std::size_t>(y2)];
                }
            }
        return out;
    }

    std::vector<double> grow_transpose(const std::vector<double>& v) const
    {
        std::vector<double> out(size(), 0.0);
        for (int a = 0; a < A_; ++a)
            for (int x1 = 0; x1 < S_; ++x1) {
                const auto r1 = transition(0, a, x1);
                for (int x2 = 0; x2 < S_; ++x2) {
                    const auto r2 = transition(1, a, x2);
                    double s = 0.0;
                    for (int y1 = 0; y1 < S_; ++y1)
                        for (int y2 = 0; y2 < S_; ++y2)
                            s += r1[static_cast<std::size_t>(y1)] * r2[static_cast<std::size_t>(y2)] * v[idx(a, y1, y2)];
                    out[idx(a, x1, x2)] = s;
                }
            }
        return out;
    }

    // R(x -> y) for one component: same K/M bins, crack redrawn from the D0 marginal.
    double repair_prob(bool repaired, int x, int y) const
    {
        if (!repaired) return x == y ? 1.0 : 0.0;
        if (x / nD_ != y / nD_) return 0.0;
        return m_.d0_marginal()[static_cast<std::size_t>(y % nD_)];
    }

    std::vector<double> repair(const std::vector<double>& in, const YearRecord& rec) const
    {
        std::vector<double> out(size(), 0.0);
        for (int a = 0; a < A_; ++a)
            for (int x1 = 0; x1 < S_; ++x1)
                for (int x2 = 0; x2 < S_; ++x2)
                    for (int y1 = 0; y1 < S_; ++y1)
                        for (int y2 = 0; y2 < S_; ++y2)
                            out[idx(a, y1, y2)] += in[idx(a, x1, x2)] * repair_prob(rec.repaired[0], x1, y1) *
                                                   repair_prob(rec.repaired[1], x2, y2);
        return out;
    }

    std::vector<double> repair_transpose(const std::vector<double>& v, const YearRecord& rec) const
    {
        std::vector<double> out(size(), 0.0);
        for (int a = 0; a < A_; ++a)
            for (int x1 = 0; x1 < S_; ++x1)
                for (int x2 = 0; x2 < S_; ++x2)
                    for (int y1 = 0; y1 < S_; ++y1)
                        for (int y2 = 0; y2 < S_; ++y2)
                            out[idx(a, x1, x2)] += repair_prob(rec.repaired[0], x1, y1) *
                                                   repair_prob(rec.repaired[1], x2, y2) * v[idx(a, y1, y2)];
        return out;
    }

    std::vector<double> likelihood(const YearRecord& rec) const
    {
        std::vector<double> l1(static_cast<std::size_t>(nD_), 1.0), l2(static_cast<std::size_t>(nD_), 1.0);
        if (rec.outcomes[0].inspected()) l1 = m_.likelihood(rec.outcomes[0]);
        if (rec.outcomes[1].inspected()) l2 = m_.likelihood(rec.outcomes[1]);
        std::vector<double> L(size());
        for (int a = 0; a < A_; ++a)
            for (int x1 = 0; x1 < S_; ++x1)
                for (int x2 = 0; x2 < S_; ++x2)
                    L[idx(a, x1, x2)] = l1[static_cast<std::size_t>(x1 % nD_)] * l2[static_cast<std::size_t>(x2 % nD_)];
        return L;
    }

    double system_failure(const std::vector<double>& p) const
    {
        double s = 0.0;
        for (int a = 0; a < A_; ++a)
            for (int x1 = 0; x1 < S_; ++x1)
                for (int x2 = 0; x2 < S_; ++x2) {
                    const int mask = (x1 % nD_ == nD_ - 1 ? 1 : 0) | (x2 % nD_ == nD_ - 1 ? 2 : 0);
                    s += p[idx(a, x1, x2)] *
                         exceedance(t_.intact * t_.fraction[static_cast<std::size_t>(mask)], t_.load_mean, t_.load_cov);
                }
        return s;
    }

    const Toy& t_;
    const DbnModel& m_;
    int nD_ = 0;
    int S_ = 0;
    int A_ = 0;
};

}  // namespace toy
