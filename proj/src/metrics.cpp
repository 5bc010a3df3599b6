#include "otsing/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "otsing/errors.hpp"

namespace otsing {

double mmc(const std::vector<double>& scores) {
    if (scores.empty()) {
        throw MetricsError("mmc: empty score list");
    }
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores) {
    if (id_scores.empty() || ood_scores.empty()) {
        throw MetricsError("auroc: empty score list");
    }
    std::vector<double> ood_sorted = ood_scores;
    std::sort(ood_sorted.begin(), ood_sorted.end());
    double wins = 0.0;
    for (double s : id_scores) {
        const auto lower = std::lower_bound(ood_sorted.begin(), ood_sorted.end(), s);
        const auto upper = std::upper_bound(lower, ood_sorted.end(), s);
        wins += static_cast<double>(lower - ood_sorted.begin()); // ood strictly below
        wins += 0.5 * static_cast<double>(upper - lower);        // ties at half credit
    }
    return wins / (static_cast<double>(id_scores.size()) *
                   static_cast<double>(ood_scores.size()));
}

double fpr_at_tpr(const std::vector<double>& id_scores,
                  const std::vector<double>& ood_scores, double tpr_target) {
    if (id_scores.empty() || ood_scores.empty()) {
        throw MetricsError("fpr_at_tpr: empty score list");
    }
    if (!(tpr_target > 0.0) || tpr_target > 1.0) {
        throw MetricsError("fpr_at_tpr: tpr_target must be in (0, 1]");
    }
    std::vector<double> id_sorted = id_scores;
    std::sort(id_sorted.begin(), id_sorted.end(), std::greater<double>());
    const auto n = static_cast<double>(id_sorted.size());
    const auto need = static_cast<std::size_t>(std::ceil(tpr_target * n));
    const double tau = id_sorted[need - 1];
    std::size_t false_positives = 0;
    for (double s : ood_scores) {
        if (s >= tau) ++false_positives;
    }
    return static_cast<double>(false_positives) / static_cast<double>(ood_scores.size());
}

namespace {

int bin_index(double score, int bins) {
    const int idx = static_cast<int>(std::ceil(score * bins)) - 1;
    return std::clamp(idx, 0, bins - 1);
}

} // namespace

double ece(const std::vector<double>& confidences, const std::vector<bool>& correct,
           int bins) {
    if (confidences.size() != correct.size()) {
        throw MetricsError("ece: confidence and correctness lengths differ");
    }
    if (confidences.empty()) {
        throw MetricsError("ece: empty input");
    }
    if (bins < 1) {
        throw MetricsError("ece: bins must be >= 1");
    }
    std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> hit_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(bins), 0);
    for (std::size_t k = 0; k < confidences.size(); ++k) {
        const auto b = static_cast<std::size_t>(bin_index(confidences[k], bins));
        conf_sum[b] += confidences[k];
        hit_sum[b] += correct[k] ? 1.0 : 0.0;
        ++counts[b];
    }
    const auto total = static_cast<double>(confidences.size());
    double result = 0.0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] == 0) continue;
        const auto size = static_cast<double>(counts[b]);
        result += (size / total) * std::abs(hit_sum[b] / size - conf_sum[b] / size);
    }
    return result;
}

std::vector<HistogramBin> confidence_histogram(const std::vector<double>& scores, int bins) {
    if (bins < 1) {
        throw MetricsError("confidence_histogram: bins must be >= 1");
    }
    std::vector<HistogramBin> hist(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        hist[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / bins;
        hist[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / bins;
    }
    for (double s : scores) {
        ++hist[static_cast<std::size_t>(bin_index(s, bins))].count;
    }
    return hist;
}

ConfidenceReport make_confidence_report(const ToyClassifier& model, const Matrix& id_x,
                                        const std::vector<int>& id_y, const Matrix& ood_x) {
    if (static_cast<Index>(id_y.size()) != id_x.rows()) {
        throw ShapeError("confidence report: label count != ID sample count");
    }
    ConfidenceReport report;
    const Matrix id_probs = model.forward_batch(id_x);
    for (Index r = 0; r < id_probs.rows(); ++r) {
        Index best = 0;
        for (Index i = 1; i < id_probs.cols(); ++i) {
            if (id_probs(r, i) > id_probs(r, best)) best = i;
        }
        report.id_scores.push_back(id_probs(r, best));
        report.id_correct.push_back(best == id_y[static_cast<std::size_t>(r)]);
    }
    const Matrix ood_probs = model.forward_batch(ood_x);
    for (Index r = 0; r < ood_probs.rows(); ++r) {
        report.ood_scores.push_back(ood_probs.row(r).maxCoeff());
    }
    return report;
}

} // namespace otsing
