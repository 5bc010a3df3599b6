#pragma once

#include <cstdint>
#include <vector>

#include "otsing/classifier.hpp"
#include "otsing/types.hpp"

namespace otsing {

// Mean maximum confidence.
double mmc(const std::vector<double>& scores);

// Mann-Whitney AUROC with half credit for ties; ID is the positive class
// and higher scores mean "more ID".
double auroc(const std::vector<double>& id_scores, const std::vector<double>& ood_scores);

// False positive rate at the given true positive rate. The threshold is the
// largest observed ID score tau with at least tpr_target of id_scores >= tau;
// both comparisons are inclusive.
double fpr_at_tpr(const std::vector<double>& id_scores,
                  const std::vector<double>& ood_scores, double tpr_target = 0.95);

// Expected calibration error over `bins` equal-width right-inclusive bins
// on [0, 1] (a score exactly on an interior edge lands in the lower bin).
double ece(const std::vector<double>& confidences, const std::vector<bool>& correct,
           int bins = 15);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::int64_t count = 0;
};

// Equal-width histogram on [0, 1] with the same right-inclusive edge rule;
// counts always sum to |scores|.
std::vector<HistogramBin> confidence_histogram(const std::vector<double>& scores, int bins);

// Max-softmax confidences and correctness flags for a model over ID and OOD
// inputs; the raw material for every metric above.
struct ConfidenceReport {
    std::vector<double> id_scores;
    std::vector<double> ood_scores;
    std::vector<bool> id_correct;
};

ConfidenceReport make_confidence_report(const ToyClassifier& model, const Matrix& id_x,
                                        const std::vector<int>& id_y, const Matrix& ood_x);

} // namespace otsing
