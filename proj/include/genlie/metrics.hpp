#pragma once

#include <stdexcept>
#include <vector>

#include "genlie/linalg.hpp"

namespace genlie {

struct MetricsReport {
    double f1 = 0.0;   // percent
    double acc = 0.0;  // percent
    double auc = 0.0;  // percent; valid only when auc_defined
    bool auc_defined = false;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    long n_pos = 0, n_neg = 0;
};

struct UndefinedAucError : std::runtime_error {
    UndefinedAucError() : std::runtime_error("AUC undefined: needs at least one positive and one negative") {}
};

// Positive-class F1 in percent; 0 when any denominator vanishes.
double f1_positive(const std::vector<int>& predictions, const std::vector<int>& labels);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Mann-Whitney AUC in percent, average ranks for ties. Throws
// UndefinedAucError on single-class input.
double auc(const Vec& scores, const std::vector<int>& labels);

MetricsReport compute_metrics(const Vec& scores, const std::vector<int>& predictions,
                              const std::vector<int>& labels);

}  // namespace genlie
