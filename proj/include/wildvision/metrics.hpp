#pragma once

// Set-based per-image evaluation (recall, precision, f-measure) and dataset
// averages, plus the CSV / JSON Lines readers for evaluation pairs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildvision/core.hpp"
#include "wildvision/error.hpp"

namespace wildvision {

struct EvalRecord {
    std::string image_id;
    LabelSet truth;
    LabelSet predicted;
};

struct EvalResult {
    double recall = 0;
    double precision = 0;
    double fmeasure = 0;

    friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

struct AggregateResult {
    double mean_recall = 0;
    double mean_precision = 0;
    double mean_fmeasure = 0;
    std::size_t n = 0;
};

inline std::size_t intersection_size(const LabelSet& a, const LabelSet& b) {
    std::size_t n = 0;
    for (const auto& l : a) n += b.contains(l) ? 1 : 0;
    return n;
}

inline EvalResult evaluate(const EvalRecord& rec) {
    if (rec.truth.empty()) throw Error(Errc::EmptyTruth, "image '" + rec.image_id + "' has an empty truth set");
    const auto hits = static_cast<double>(intersection_size(rec.truth, rec.predicted));
    EvalResult r;
    r.recall = hits / static_cast<double>(rec.truth.size());
    r.precision = rec.predicted.empty() ? 0.0 : hits / static_cast<double>(rec.predicted.size());
    // Harmonic mean; taken as 0 where either component vanishes.
    r.fmeasure = (r.recall > 0 && r.precision > 0) ? 2.0 / (1.0 / r.recall + 1.0 / r.precision) : 0.0;
    return r;
}

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0;
    double comp_ = 0;
};

inline AggregateResult aggregate(const std::vector<EvalResult>& results) {
    if (results.empty()) throw Error(Errc::EmptyInput, "aggregate needs at least one result");
    CompensatedSum r, p, f;
    for (const auto& x : results) {
        r.add(x.recall);
        p.add(x.precision);
        f.add(x.fmeasure);
    }
    const auto n = static_cast<double>(results.size());
    return {r.value() / n, p.value() / n, f.value() / n, results.size()};
}

// ---------------------------------------------------------------------------
// Input files

/// One evaluation pair with the optional model/dataset it belongs to.
struct EvalRow {
    EvalRecord record;
    std::string model;
    std::string dataset;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Labels separated by ';' or whitespace.
inline LabelSet parse_label_list(const std::string& field) {
    LabelSet out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) out.emplace(token);
        token.clear();
    };
    for (char c : field) {
        if (c == ';' || c == ' ' || c == '\t' || c == '|')
            flush();
        else
            token.push_back(c);
    }
    flush();
    return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// CSV with header `image_id,truth,predicted[,model][,dataset]`; label lists
/// inside a cell are separated by ';'.
inline std::vector<EvalRow> read_eval_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> col;
    std::vector<EvalRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        if (col.empty()) {
            for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
            for (const char* need : {"image_id", "truth", "predicted"})
                if (!col.contains(need))
                    throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": header lacks '" +
                                                      need + "'");
            continue;
        }
        auto cell = [&](const char* name) -> std::string {
            const auto it = col.find(name);
            return it != col.end() && it->second < cells.size() ? cells[it->second] : std::string{};
        };
        try {
            rows.push_back({{cell("image_id"), detail::parse_label_list(cell("truth")),
                             detail::parse_label_list(cell("predicted"))},
                            cell("model"),
                            cell("dataset")});
        } catch (const Error& e) {
            throw Error(e.code(), source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

/// JSON Lines: {"image_id":..., "t":[...], "p":[...], "model"?:..., "dataset"?:...}.
inline std::vector<EvalRow> read_eval_jsonl(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<EvalRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto where = source + ":" + std::to_string(line_no) + ": ";
        try {
            const auto j = nlohmann::json::parse(line);
            EvalRow row;
            row.record.image_id = j.value("image_id", std::string{});
            for (const auto& l : j.at("t")) row.record.truth.emplace(l.get<std::string>());
            for (const auto& l : j.at("p")) row.record.predicted.emplace(l.get<std::string>());
            row.model = j.value("model", std::string{});
            row.dataset = j.value("dataset", std::string{});
            rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ParseError, where + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        }
    }
    return rows;
}

/// Dispatches on extension: .csv is CSV, anything else JSON Lines.
inline std::vector<EvalRow> read_eval_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    return path.extension() == ".csv" ? read_eval_csv(in, path.string()) : read_eval_jsonl(in, path.string());
}

struct GroupResult {
    std::string model;
    std::string dataset;
    AggregateResult result;
};

/// Per-(model, dataset) averages, in sorted group order.
inline std::vector<GroupResult> evaluate_groups(const std::vector<EvalRow>& rows) {
    std::map<std::pair<std::string, std::string>, std::vector<EvalResult>> groups;
    for (const auto& row : rows) groups[{row.model, row.dataset}].push_back(evaluate(row.record));
    std::vector<GroupResult> out;
    for (const auto& [key, results] : groups) out.push_back({key.first, key.second, aggregate(results)});
    return out;
}

inline nlohmann::ordered_json to_json(const AggregateResult& a) {
    nlohmann::ordered_json j;
    j["n"] = a.n;
    j["recall"] = a.mean_recall;
    j["precision"] = a.mean_precision;
    j["f-measure"] = a.mean_fmeasure;
    return j;
}

}  // namespace wildvision
