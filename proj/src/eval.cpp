#include "qdwh/eval.hpp"

#include <algorithm>

#include "qdwh/error.hpp"
#include "qdwh/kernels.hpp"

namespace qdwh {

bool RelevanceJudge::relevant(const std::uint8_t* query_label, std::size_t item) const {
    if (item >= db_->num_items) throw RangeError("database item out of range");
    const std::uint8_t* y = db_->label(item);
    for (std::size_t j = 0; j < db_->num_classes; ++j)
        if (query_label[j] && y[j]) return true;
    return false;
}

std::size_t RelevanceJudge::count_relevant(const std::uint8_t* query_label) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < db_->num_items; ++i)
        if (relevant(query_label, i)) ++n;
    return n;
}

double average_precision(const RankedList& ranked, const RelevanceJudge& judge,
                         const std::uint8_t* query_label, std::size_t truncation,
                         bool* any_relevant) {
    require_dims(!ranked.empty(), "ranking must be nonempty");
    std::size_t depth = ranked.size();
    if (truncation > 0) depth = std::min(depth, truncation);

    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t k = 1; k <= depth; ++k) {
        if (!judge.relevant(query_label, ranked[k - 1].index)) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(k);
    }
    if (any_relevant) *any_relevant = hits > 0;
    if (hits == 0) return 0.0;
    return sum / static_cast<double>(hits);
}

double mean_average_precision(const std::vector<const std::uint8_t*>& query_labels,
                              const std::vector<RankedList>& rankings,
                              const RelevanceJudge& judge, std::size_t truncation) {
    if (query_labels.empty()) throw ArgumentError("mean over an empty query set");
    require_dims(query_labels.size() == rankings.size(), "one ranking per query");
    double sum = 0.0;
    for (std::size_t i = 0; i < query_labels.size(); ++i)
        sum += average_precision(rankings[i], judge, query_labels[i], truncation);
    return sum / static_cast<double>(query_labels.size());
}

PrecisionCurve precision_at_k(const RankedList& ranked, const RelevanceJudge& judge,
                              const std::uint8_t* query_label,
                              const std::vector<std::size_t>& ks) {
    std::vector<std::size_t> prefix(ranked.size() + 1, 0);
    for (std::size_t i = 0; i < ranked.size(); ++i)
        prefix[i + 1] = prefix[i] + (judge.relevant(query_label, ranked[i].index) ? 1 : 0);
    PrecisionCurve curve;
    curve.reserve(ks.size());
    for (std::size_t k : ks) {
        if (k < 1 || k > ranked.size()) throw RangeError("k outside [1, n]");
        curve.emplace_back(k, static_cast<double>(prefix[k]) / static_cast<double>(k));
    }
    return curve;
}

RadiusPrecision precision_within_radius(const BitCodeSet& set, const std::uint64_t* query_code,
                                        const RelevanceJudge& judge,
                                        const std::uint8_t* query_label, std::size_t radius) {
    if (radius > set.code_length) throw RangeError("radius exceeds code length");
    std::vector<std::uint32_t> ham(set.num_items);
    kernels::hamming_scan(query_code, set.words.data(), set.words_per_code, set.num_items,
                          ham.data());
    std::size_t bucket = 0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.num_items; ++i) {
        if (ham[i] > radius) continue;
        ++bucket;
        if (judge.relevant(query_label, i)) ++hits;
    }
    if (bucket == 0) return RadiusPrecision{0.0, true};
    return RadiusPrecision{static_cast<double>(hits) / static_cast<double>(bucket), false};
}

std::vector<PrPoint> pr_curve(const RankedList& ranked, const RelevanceJudge& judge,
                              const std::uint8_t* query_label) {
    std::size_t total = 0;
    for (const RankedItem& item : ranked)
        if (judge.relevant(query_label, item.index)) ++total;
    std::vector<PrPoint> points;
    if (total == 0) return points;
    points.reserve(total);
    std::size_t hits = 0;
    for (std::size_t k = 1; k <= ranked.size(); ++k) {
        if (!judge.relevant(query_label, ranked[k - 1].index)) continue;
        ++hits;
        points.push_back(PrPoint{static_cast<double>(hits) / static_cast<double>(total),
                                 static_cast<double>(hits) / static_cast<double>(k)});
    }
    return points;
}

namespace {

// Interpolated precision of one query on the fixed recall grid g/100:
// max precision over curve points with recall >= grid recall.
void add_interpolated(const std::vector<PrPoint>& points, Vec& grid_sum) {
    std::size_t m = points.size();
    Vec suffix_max(m);
    double best = 0.0;
    for (std::size_t i = m; i-- > 0;) {
        best = std::max(best, points[i].precision);
        suffix_max[i] = best;
    }
    std::size_t at = 0;
    for (std::size_t g = 0; g <= 100; ++g) {
        double r = static_cast<double>(g) / 100.0;
        while (at < m && points[at].recall < r) ++at;
        grid_sum[g] += at < m ? suffix_max[at] : 0.0;
    }
}

}  // namespace

EvalReport build_eval_report(const std::vector<const std::uint8_t*>& query_labels,
                             const std::vector<RankedList>& rankings, const BitCodeSet& set,
                             const std::vector<std::vector<std::uint64_t>>& query_codes,
                             const RelevanceJudge& judge, std::size_t truncation,
                             const std::vector<std::size_t>& ks, const std::string& mode) {
    if (query_labels.empty()) throw ArgumentError("empty query set");
    require_dims(query_labels.size() == rankings.size(), "one ranking per query");
    require_dims(query_labels.size() == query_codes.size(), "one code per query");

    EvalReport report;
    report.code_length = set.code_length;
    report.num_database = set.num_items;
    report.num_queries = query_labels.size();
    report.mode = mode;
    report.truncation = truncation;

    report.map = mean_average_precision(query_labels, rankings, judge, truncation);
    for (std::size_t i = 0; i < query_labels.size(); ++i) {
        bool any = false;
        average_precision(rankings[i], judge, query_labels[i], truncation, &any);
        if (!any) ++report.queries_without_relevant;
    }

    double nq = static_cast<double>(query_labels.size());
    for (std::size_t k : ks) report.precision_at_k.emplace_back(k, 0.0);
    for (std::size_t i = 0; i < query_labels.size(); ++i) {
        PrecisionCurve c = precision_at_k(rankings[i], judge, query_labels[i], ks);
        for (std::size_t j = 0; j < ks.size(); ++j) report.precision_at_k[j].second += c[j].second;
    }
    for (auto& [k, p] : report.precision_at_k) p /= nq;

    double radius_sum = 0.0;
    for (std::size_t i = 0; i < query_labels.size(); ++i) {
        RadiusPrecision rp =
            precision_within_radius(set, query_codes[i].data(), judge, query_labels[i], 2);
        radius_sum += rp.precision;
        if (rp.empty_bucket) ++report.empty_radius_buckets;
    }
    report.precision_within_radius2 = radius_sum / nq;

    Vec grid_sum(101, 0.0);
    std::size_t contributing = 0;
    for (std::size_t i = 0; i < query_labels.size(); ++i) {
        std::vector<PrPoint> points = pr_curve(rankings[i], judge, query_labels[i]);
        if (points.empty()) continue;
        ++contributing;
        add_interpolated(points, grid_sum);
    }
    if (contributing > 0) {
        for (std::size_t g = 0; g <= 100; ++g)
            report.pr_points.push_back(PrPoint{static_cast<double>(g) / 100.0,
                                               grid_sum[g] / static_cast<double>(contributing)});
    }
    return report;
}

}  // namespace qdwh
