#include "facetpath/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace facetpath {

namespace {

bool correct_at(const Path& predicted, const Path& target, std::size_t k) {
    if (k == kLastDepth) return !predicted.empty() && predicted == target;
    if (predicted.depth() < k) return false;
    for (std::size_t i = 0; i < k; ++i)
        if (predicted[i] != target[i]) return false;
    return true;
}

void tally(AccuracyCount& acc, const Path& predicted, const Path& target, std::size_t k) {
    if (k != kLastDepth && target.depth() < k) return;
    ++acc.total;
    if (correct_at(predicted, target, k)) ++acc.correct;
}

}  // namespace

AccuracyCount accuracy_at_depth(std::span<const Path> predictions, std::span<const LabeledExample> examples,
                                std::size_t k) {
    if (predictions.size() != examples.size()) throw Error("accuracy: predictions and examples differ in length");
    if (k == 0) throw Error("accuracy: depth must be at least 1");
    AccuracyCount acc;
    for (std::size_t i = 0; i < examples.size(); ++i) tally(acc, predictions[i], examples[i].target_path, k);
    return acc;
}

AccuracyCount accuracy_at_depth(std::span<const Path> predictions, std::span<const LabeledExample> examples,
                                std::span<const std::size_t> subset, std::size_t k) {
    if (predictions.size() != examples.size()) throw Error("accuracy: predictions and examples differ in length");
    if (k == 0) throw Error("accuracy: depth must be at least 1");
    AccuracyCount acc;
    for (auto i : subset) {
        if (i >= examples.size()) throw Error("accuracy: subset index out of range");
        tally(acc, predictions[i], examples[i].target_path, k);
    }
    return acc;
}

EventOutcome simulate_event(std::span<const Path> result_paths, std::span<const Path> truth_paths,
                            const Path& predicted) {
    std::set<Path> truths(truth_paths.begin(), truth_paths.end());
    EventOutcome out;
    out.result_size = result_paths.size();
    for (const auto& p : result_paths) {
        const bool kept = predicted.is_prefix_of(p);
        const bool relevant = truths.contains(p);
        if (kept) {
            ++out.filtered_size;
            relevant ? ++out.tp : ++out.fp;
        } else if (relevant) {
            ++out.fn;
        }
    }
    if (out.tp + out.fp > 0) out.precision = static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fp);
    if (out.tp + out.fn > 0) out.recall = static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fn);
    return out;
}

EventOutcome simulate_event(std::span<const ProductId> result_set, std::span<const ProductId> clicked,
                            const Path& predicted, const TaxonomyTree& tree) {
    std::vector<Path> results, truths;
    for (const auto& id : result_set)
        if (const auto* p = tree.path_of(id)) results.push_back(*p);
    for (const auto& id : clicked)
        if (const auto* p = tree.path_of(id)) truths.push_back(*p);
    return simulate_event(results, truths, predicted);
}

std::vector<std::size_t> search_events(std::span<const LabeledExample> examples) {
    std::set<std::pair<std::string, std::size_t>> seen;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < examples.size(); ++i)
        if (seen.emplace(examples[i].session_id, examples[i].search_index).second) out.push_back(i);
    return out;
}

void mark_pareto(std::vector<SweepRow>& rows) {
    for (auto& r : rows) {
        r.pareto = std::none_of(rows.begin(), rows.end(), [&](const SweepRow& o) {
            return o.precision >= r.precision && o.recall >= r.recall &&
                   (o.precision > r.precision || o.recall > r.recall);
        });
    }
}

namespace {

struct SweepAccumulator {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision_sum = 0.0, recall_sum = 0.0;
    std::size_t recall_events = 0;
    std::size_t depth_sum = 0, valid = 0;
    SweepRow row;

    void add(const EventOutcome& o, std::size_t depth, bool is_valid) {
        ++row.events;
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        depth_sum += depth;
        if (is_valid) ++valid;
        if (o.precision) {
            ++row.precision_events;
            precision_sum += *o.precision;
        } else {
            ++row.emptied_events;
        }
        if (o.recall) {
            ++recall_events;
            recall_sum += *o.recall;
        }
    }

    SweepRow finish() {
        if (tp + fp > 0) row.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        if (tp + fn > 0) row.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        if (row.precision_events > 0) row.macro_precision = precision_sum / static_cast<double>(row.precision_events);
        if (recall_events > 0) row.macro_recall = recall_sum / static_cast<double>(recall_events);
        if (row.events > 0) {
            row.mean_depth = static_cast<double>(depth_sum) / static_cast<double>(row.events);
            row.validity_rate = static_cast<double>(valid) / static_cast<double>(row.events);
        }
        return row;
    }
};

}  // namespace

std::vector<SweepRow> sweep_thresholds(std::span<const EventPrediction> events, std::span<const double> cts,
                                       const TaxonomyTree& tree, bool safety_check) {
    struct Resolved {
        std::vector<Path> results, truths;
    };
    std::vector<Resolved> resolved;
    resolved.reserve(events.size());
    for (const auto& e : events) {
        Resolved r;
        for (const auto& id : e.event->result_set)
            if (const auto* p = tree.path_of(id)) r.results.push_back(*p);
        for (const auto& id : e.event->clicked)
            if (const auto* p = tree.path_of(id)) r.truths.push_back(*p);
        resolved.push_back(std::move(r));
    }

    std::vector<SweepRow> rows;
    for (double ct : cts) {
        SweepAccumulator acc;
        acc.row.ct = ct;
        const DecisionConfig config{ct, safety_check};
        for (std::size_t i = 0; i < events.size(); ++i) {
            auto d = decide(events[i].prediction, config, tree);
            acc.add(simulate_event(resolved[i].results, resolved[i].truths, d.path), d.path.depth(), d.valid);
        }
        rows.push_back(acc.finish());
    }
    mark_pareto(rows);
    return rows;
}

std::vector<double> default_ct_grid(std::span<const EventPrediction> events, std::size_t quantiles) {
    std::vector<double> values;
    for (const auto& e : events) values.insert(values.end(), e.prediction.step_gini.begin(), e.prediction.step_gini.end());
    std::set<double> grid{0.0, 1.0};
    if (!values.empty() && quantiles > 0) {
        std::sort(values.begin(), values.end());
        for (std::size_t q = 0; q <= quantiles; ++q) {
            const auto idx = q * (values.size() - 1) / quantiles;
            grid.insert(values[idx]);
        }
    }
    return {grid.begin(), grid.end()};
}

nlohmann::json to_json(const SweepRow& r) {
    return {{"ct", r.ct},
            {"precision", r.precision},
            {"recall", r.recall},
            {"macro_precision", r.macro_precision},
            {"macro_recall", r.macro_recall},
            {"mean_depth", r.mean_depth},
            {"validity_rate", r.validity_rate},
            {"events", r.events},
            {"precision_events", r.precision_events},
            {"emptied_events", r.emptied_events},
            {"pareto", r.pareto}};
}

void write_trace(const std::filesystem::path& file, std::span<const EventPrediction> events,
                 std::span<const double> cts, const TaxonomyTree& tree, bool safety_check) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write trace " + file.string());
    for (const auto& e : events) {
        const auto& ex = *e.event;
        nlohmann::json truncations = nlohmann::json::array();
        for (double ct : cts) {
            auto d = decide(e.prediction, {ct, safety_check}, tree);
            auto o = simulate_event(ex.result_set, ex.clicked, d.path, tree);
            truncations.push_back({{"ct", ct},
                                   {"path", tree.to_string(d.path)},
                                   {"depth", d.path.depth()},
                                   {"valid", d.valid},
                                   {"tp", o.tp},
                                   {"fp", o.fp},
                                   {"fn", o.fn}});
        }
        nlohmann::json line{{"event_id", ex.session_id + "#" + std::to_string(ex.search_index)},
                            {"query", ex.query},
                            {"session_products", ex.session_products},
                            {"generated_path", tree.to_string(e.prediction.nodes)},
                            {"gini", e.prediction.step_gini},
                            {"truncations", truncations}};
        out << line.dump() << '\n';
    }
}

std::vector<nlohmann::json> read_trace(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot read trace " + file.string());
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw Error(file.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

std::vector<SweepRow> sweep_from_trace(const std::vector<nlohmann::json>& trace) {
    std::map<double, SweepAccumulator> by_ct;
    for (const auto& line : trace) {
        for (const auto& t : line.at("truncations")) {
            EventOutcome o;
            o.tp = t.at("tp").get<std::size_t>();
            o.fp = t.at("fp").get<std::size_t>();
            o.fn = t.at("fn").get<std::size_t>();
            if (o.tp + o.fp > 0) o.precision = static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fp);
            if (o.tp + o.fn > 0) o.recall = static_cast<double>(o.tp) / static_cast<double>(o.tp + o.fn);
            const double ct = t.at("ct").get<double>();
            auto& acc = by_ct[ct];
            acc.row.ct = ct;
            acc.add(o, t.at("depth").get<std::size_t>(), t.at("valid").get<bool>());
        }
    }
    std::vector<SweepRow> rows;
    for (auto& [_, acc] : by_ct) rows.push_back(acc.finish());
    mark_pareto(rows);
    return rows;
}

}  // namespace facetpath
