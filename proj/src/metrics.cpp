#include "genlie/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace genlie {

namespace {

void check_binary(const std::vector<int>& v, const char* name) {
    for (int x : v)
        if (x != 0 && x != 1) throw std::invalid_argument(std::string(name) + " must be 0/1");
}

void check_lengths(std::size_t a, std::size_t b) {
    if (a == 0) throw std::invalid_argument("empty input");
    if (a != b) throw std::invalid_argument("predictions and labels must have equal length");
}

}  // namespace

double f1_positive(const std::vector<int>& predictions, const std::vector<int>& labels) {
    check_lengths(predictions.size(), labels.size());
    check_binary(predictions, "predictions");
    check_binary(labels, "labels");
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        tp += (predictions[i] == 1 && labels[i] == 1);
        fp += (predictions[i] == 1 && labels[i] == 0);
        fn += (predictions[i] == 0 && labels[i] == 1);
    }
    if (tp + fp == 0 || tp + fn == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    check_lengths(predictions.size(), labels.size());
    long correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) correct += (predictions[i] == labels[i]);
    return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

double auc(const Vec& scores, const std::vector<int>& labels) {
    check_lengths(scores.size(), labels.size());
    check_binary(labels, "labels");
    const std::size_t n = scores.size();
    long n_pos = 0;
    for (int y : labels) n_pos += y;
    const long n_neg = static_cast<long>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw UndefinedAucError();

    // O(n log n) rank formulation with average ranks; exactly equivalent to
    // the pairwise Mann-Whitney count (ties credited 0.5).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
        i = j;
    }
    const double u = pos_rank_sum - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    return (u / (static_cast<double>(n_pos) * static_cast<double>(n_neg))) * 100.0;
}

MetricsReport compute_metrics(const Vec& scores, const std::vector<int>& predictions,
                              const std::vector<int>& labels) {
    MetricsReport r;
    check_lengths(predictions.size(), labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        r.tp += (predictions[i] == 1 && labels[i] == 1);
        r.fp += (predictions[i] == 1 && labels[i] == 0);
        r.tn += (predictions[i] == 0 && labels[i] == 0);
        r.fn += (predictions[i] == 0 && labels[i] == 1);
        r.n_pos += (labels[i] == 1);
        r.n_neg += (labels[i] == 0);
    }
    r.f1 = f1_positive(predictions, labels);
    r.acc = accuracy(predictions, labels);
    try {
        r.auc = auc(scores, labels);
        r.auc_defined = true;
    } catch (const UndefinedAucError&) {
        r.auc_defined = false;
    }
    return r;
}

}  // namespace genlie
