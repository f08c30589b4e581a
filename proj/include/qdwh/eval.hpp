#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qdwh/index.hpp"
#include "qdwh/model.hpp"

namespace qdwh {

// Relevance rule: a database item is relevant to a query iff their label
// sets intersect.
class RelevanceJudge {
public:
    explicit RelevanceJudge(const Dataset& db) : db_(&db) {}

    bool relevant(const std::uint8_t* query_label, std::size_t item) const;
    std::size_t count_relevant(const std::uint8_t* query_label) const;
    std::size_t num_items() const { return db_->num_items; }

private:
    const Dataset* db_;
};

// Prefix-precision average over the ranks of relevant items within the
// evaluated prefix: (1/R) sum_k (R_k/k) rel_k. truncation 0 means the full
// ranking; otherwise only the first `truncation` ranks count and R is the
// relevant count inside that prefix. 0 when nothing relevant (flag set).
double average_precision(const RankedList& ranked, const RelevanceJudge& judge,
                         const std::uint8_t* query_label, std::size_t truncation,
                         bool* any_relevant = nullptr);

double mean_average_precision(const std::vector<const std::uint8_t*>& query_labels,
                              const std::vector<RankedList>& rankings,
                              const RelevanceJudge& judge, std::size_t truncation);

using PrecisionCurve = std::vector<std::pair<std::size_t, double>>;

PrecisionCurve precision_at_k(const RankedList& ranked, const RelevanceJudge& judge,
                              const std::uint8_t* query_label, const std::vector<std::size_t>& ks);

struct RadiusPrecision {
    double precision = 0.0;
    bool empty_bucket = false;  // no database item within the radius
};

RadiusPrecision precision_within_radius(const BitCodeSet& set, const std::uint64_t* query_code,
                                        const RelevanceJudge& judge,
                                        const std::uint8_t* query_label, std::size_t radius = 2);

struct PrPoint {
    double recall;
    double precision;
};

// One point per rank where a relevant item sits: recall R_k/R, precision
// R_k/k. Empty when the database holds nothing relevant.
std::vector<PrPoint> pr_curve(const RankedList& ranked, const RelevanceJudge& judge,
                              const std::uint8_t* query_label);

struct EvalReport {
    double map = 0.0;
    PrecisionCurve precision_at_k;            // mean over queries per k
    double precision_within_radius2 = 0.0;    // mean over queries
    std::size_t empty_radius_buckets = 0;     // queries with no item in radius
    std::vector<PrPoint> pr_points;           // interpolated, fixed recall grid
    std::size_t code_length = 0;
    std::size_t num_database = 0;
    std::size_t num_queries = 0;
    std::string mode;
    std::size_t truncation = 0;
    std::size_t queries_without_relevant = 0;
};

// Aggregates per-query metrics for a whole run. Rankings must cover the
// database (required by pr_curve); query_codes power the radius metric.
// The PR curve is averaged across queries as interpolated precision (max
// precision at recall >= r) on a 101-point recall grid.
EvalReport build_eval_report(const std::vector<const std::uint8_t*>& query_labels,
                             const std::vector<RankedList>& rankings, const BitCodeSet& set,
                             const std::vector<std::vector<std::uint64_t>>& query_codes,
                             const RelevanceJudge& judge, std::size_t truncation,
                             const std::vector<std::size_t>& ks, const std::string& mode);

}  // namespace qdwh
