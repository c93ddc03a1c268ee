#include "crisisspot/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "crisisspot/errors.hpp"

namespace crisisspot {

MetricsReport compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted) {
    if (truth.size() != predicted.size())
        throw ParameterError("metrics: " + std::to_string(truth.size()) + " truths vs " +
                             std::to_string(predicted.size()) + " predictions");
    if (truth.empty()) throw ParameterError("metrics: no samples");
    MetricsReport r;
    r.count = truth.size();
    std::set<int> labels(truth.begin(), truth.end());
    labels.insert(predicted.begin(), predicted.end());
    r.labels.assign(labels.begin(), labels.end());
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < r.labels.size(); ++i) index[r.labels[i]] = i;

    const std::size_t k = r.labels.size();
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++r.confusion[index[truth[i]]][index[predicted[i]]];
        correct += truth[i] == predicted[i];
    }
    const double n = static_cast<double>(r.count);
    r.accuracy = static_cast<double>(correct) / n;

    for (std::size_t c = 0; c < k; ++c) {
        ClassMetrics m;
        m.label = r.labels[c];
        std::size_t predicted_c = 0;
        for (std::size_t t = 0; t < k; ++t) {
            m.support += r.confusion[c][t];
            predicted_c += r.confusion[t][c];
        }
        const double tp = static_cast<double>(r.confusion[c][c]);
        m.precision = predicted_c ? tp / static_cast<double>(predicted_c) : 0.0;
        m.recall = m.support ? tp / static_cast<double>(m.support) : 0.0;
        m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        const double w = static_cast<double>(m.support) / n;
        r.precision_macro += m.precision / static_cast<double>(k);
        r.recall_macro += m.recall / static_cast<double>(k);
        r.f1_macro += m.f1 / static_cast<double>(k);
        r.precision_weighted += w * m.precision;
        r.recall_weighted += w * m.recall;
        r.f1_weighted += w * m.f1;
        r.per_class.push_back(m);
    }
    return r;
}

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& m : r.per_class)
        per_class.push_back({{"label", m.label},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"support", m.support}});
    return {{"count", r.count},
            {"accuracy", r.accuracy},
            {"precision_macro", r.precision_macro},
            {"recall_macro", r.recall_macro},
            {"f1_macro", r.f1_macro},
            {"precision_weighted", r.precision_weighted},
            {"recall_weighted", r.recall_weighted},
            {"f1_weighted", r.f1_weighted},
            {"labels", r.labels},
            {"per_class", per_class},
            {"confusion", r.confusion}};
}

double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size())
        throw ParameterError("kappa: annotation lengths differ (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    if (a.empty()) throw ParameterError("kappa: no annotations");
    std::map<std::string, std::size_t> ca, cb;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        agree += a[i] == b[i];
    }
    // Chance agreement from integer counts so P_e = 1 is detected exactly.
    std::size_t chance = 0;
    for (const auto& [label, c] : ca) {
        auto it = cb.find(label);
        if (it != cb.end()) chance += c * it->second;
    }
    const std::size_t n = a.size();
    if (chance == n * n) return 1.0;
    const double nn = static_cast<double>(n);
    const double po = static_cast<double>(agree) / nn;
    const double pe = static_cast<double>(chance) / (nn * nn);
    return (po - pe) / (1.0 - pe);
}

double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<std::string> sa, sb;
    for (int v : a) sa.push_back(std::to_string(v));
    for (int v : b) sb.push_back(std::to_string(v));
    return cohen_kappa(sa, sb);
}

}  // namespace crisisspot
