#pragma once

#include <cmath>
#include <vector>

// Brute-force metric oracles: pairwise enumeration, exhaustive threshold
// sweep, comparison-based manual binning. Deliberately different algorithms
// from the library implementations.
namespace otsing::oracle {

inline double auroc_bruteforce(const std::vector<double>& id,
                               const std::vector<double>& ood) {
    double wins = 0.0;
    for (double a : id) {
        for (double b : ood) {
            if (a > b) wins += 1.0;
            else if (a == b) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

// Largest observed ID score tau with at least tpr of id >= tau, then the
// OOD fraction >= tau; every candidate threshold is tried.
inline double fpr_sweep(const std::vector<double>& id, const std::vector<double>& ood,
                        double tpr) {
    bool found = false;
    double best_tau = 0.0;
    for (double tau : id) {
        std::size_t covered = 0;
        for (double s : id) {
            if (s >= tau) ++covered;
        }
        if (static_cast<double>(covered) / static_cast<double>(id.size()) >= tpr) {
            if (!found || tau > best_tau) {
                best_tau = tau;
                found = true;
            }
        }
    }
    std::size_t fp = 0;
    for (double s : ood) {
        if (s >= best_tau) ++fp;
    }
    return static_cast<double>(fp) / static_cast<double>(ood.size());
}

inline double ece_manual(const std::vector<double>& conf, const std::vector<bool>& correct,
                         int bins) {
    double total_gap = 0.0;
    const auto n = static_cast<double>(conf.size());
    for (int b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / bins;
        const double hi = static_cast<double>(b + 1) / bins;
        double conf_sum = 0.0;
        double hit_sum = 0.0;
        std::size_t members = 0;
        for (std::size_t k = 0; k < conf.size(); ++k) {
            const bool in_bin = (b == 0) ? conf[k] <= hi : (conf[k] > lo && conf[k] <= hi);
            if (!in_bin) continue;
            ++members;
            conf_sum += conf[k];
            hit_sum += correct[k] ? 1.0 : 0.0;
        }
        if (members == 0) continue;
        const auto m = static_cast<double>(members);
        total_gap += (m / n) * std::abs(hit_sum / m - conf_sum / m);
    }
    return total_gap;
}

} // namespace otsing::oracle
