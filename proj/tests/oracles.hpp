#pragma once

#include <set>
#include <string>
#include <vector>

// Brute-force metric oracles, kept independent of the library
// implementations they check.
namespace mir_test {

inline double oracle_recall_at_k(const std::vector<std::string>& order,
                                 const std::set<std::string>& relevant, int k) {
    std::set<std::string> in_corpus;
    for (const std::string& id : order) {
        if (relevant.count(id)) in_corpus.insert(id);
    }
    int hits = 0;
    for (int i = 0; i < k && i < static_cast<int>(order.size()); ++i) {
        if (in_corpus.count(order[static_cast<std::size_t>(i)])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(in_corpus.size());
}

inline double oracle_average_precision(const std::vector<std::string>& order,
                                       const std::set<std::string>& relevant) {
    std::set<std::string> in_corpus;
    for (const std::string& id : order) {
        if (relevant.count(id)) in_corpus.insert(id);
    }
    double sum = 0.0;
    for (const std::string& r : in_corpus) {
        int rank = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (order[i] == r) {
                rank = static_cast<int>(i) + 1;
                break;
            }
        }
        int hits = 0;
        for (int i = 0; i < rank; ++i) {
            if (in_corpus.count(order[static_cast<std::size_t>(i)])) ++hits;
        }
        sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
    return sum / static_cast<double>(in_corpus.size());
}

}  // namespace mir_test
