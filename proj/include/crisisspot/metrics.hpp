#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace crisisspot {

struct ClassMetrics {
    int label = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Classification report over the union of labels seen in truth and
/// predictions. Classes with a zero denominator score 0.
struct MetricsReport {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    std::vector<int> labels;                          // sorted
    std::vector<ClassMetrics> per_class;              // same order as labels
    std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
    std::size_t count = 0;
};

MetricsReport compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted);

nlohmann::json to_json(const MetricsReport& r);

/// (P_o - P_e) / (1 - P_e), with kappa = 1 when P_e = 1.
double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);
double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace crisisspot
