#include "d2d/profile/profile.hpp"

#include "d2d/common/error.hpp"
#include "d2d/common/text.hpp"
#include "d2d/profile/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

namespace d2d::profile {

namespace {

double as_double(const Value& v)
{
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
        return static_cast<double>(*i);
    }
    return std::get<double>(v);
}

NumericSummary summarize(const std::vector<double>& xs)
{
    NumericSummary s;
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    long double sum = 0;
    for (double x : xs) {
        sum += x;
    }
    const long double mean = sum / static_cast<long double>(xs.size());
    long double sq = 0;
    for (double x : xs) {
        const long double d = x - mean;
        sq += d * d;
    }
    s.mean = std::clamp(static_cast<double>(mean), s.min, s.max);
    s.std_dev = static_cast<double>(std::sqrt(sq / static_cast<long double>(xs.size())));
    return s;
}

std::vector<ValueCount> top_counts(std::unordered_map<std::string, std::size_t> counts)
{
    std::vector<ValueCount> all;
    all.reserve(counts.size());
    for (auto& [v, n] : counts) {
        all.push_back({v, n});
    }
    const auto keep = std::min(kTopValues, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      [](const ValueCount& a, const ValueCount& b) {
                          return a.count != b.count ? a.count > b.count : a.value < b.value;
                      });
    all.resize(keep);
    return all;
}

} // namespace

ColumnProfile profile_column(const TypedColumn& column)
{
    ColumnProfile p;
    p.name = column.name;
    p.inferred_type = column.type;
    p.detected_unit = column.unit;
    p.coerced_null_count = column.coerced_null_count;

    std::unordered_map<std::string, std::size_t> counts;
    std::vector<double> numbers;
    std::optional<std::string> lo;
    std::optional<std::string> hi;
    for (const auto& v : column.values) {
        if (is_null(v)) {
            ++p.null_count;
            continue;
        }
        ++counts[value_text(v)];
        if (is_numeric(column.type)) {
            numbers.push_back(as_double(v));
        } else if (column.type == ColumnType::datetime) {
            const auto& s = std::get<std::string>(v);
            if (!lo || s < *lo) {
                lo = s;
            }
            if (!hi || s > *hi) {
                hi = s;
            }
        }
    }
    p.distinct_count = counts.size();
    if (is_numeric(column.type) && !numbers.empty()) {
        p.numeric_summary = summarize(numbers);
    }
    if (lo && hi) {
        p.datetime_range = std::make_pair(*lo, *hi);
    }
    if (column.type == ColumnType::categorical || column.type == ColumnType::text || column.type == ColumnType::boolean) {
        p.top_values = top_counts(std::move(counts));
    }
    return p;
}

TableProfile build_profile(const TypedTable& table, const ProfileOptions& options)
{
    TableProfile out;
    out.row_count = table.row_count;
    out.columns.resize(table.columns.size());
    const auto n = static_cast<std::ptrdiff_t>(table.columns.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        out.columns[static_cast<std::size_t>(j)] = profile_column(table.columns[static_cast<std::size_t>(j)]);
    }
    out.fds = discover_fds(table, options.dependencies);
    out.candidate_keys = discover_keys(table, options.dependencies);
    return out;
}

TableProfile build_profile(const ingest::RawTable& table, const ProfileOptions& options)
{
    return build_profile(type_table(table), options);
}

nlohmann::ordered_json to_json(const TableProfile& profile)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = kProfileSchemaVersion;
    j["row_count"] = profile.row_count;
    j["statistics"] = {{"std_dev", "population"}, {"null_semantics", "nulls equal nulls in dependency partitions"}};
    ordered_json cols = ordered_json::array();
    for (const auto& c : profile.columns) {
        ordered_json cj;
        cj["name"] = c.name;
        cj["inferred_type"] = std::string(to_string(c.inferred_type));
        cj["null_count"] = c.null_count;
        cj["coerced_null_count"] = c.coerced_null_count;
        cj["distinct_count"] = c.distinct_count;
        if (c.numeric_summary) {
            cj["numeric_summary"] = {{"min", c.numeric_summary->min},
                                     {"max", c.numeric_summary->max},
                                     {"mean", c.numeric_summary->mean},
                                     {"std_dev", c.numeric_summary->std_dev}};
        } else {
            cj["numeric_summary"] = nullptr;
        }
        if (c.datetime_range) {
            cj["datetime_range"] = {{"min", c.datetime_range->first}, {"max", c.datetime_range->second}};
        } else {
            cj["datetime_range"] = nullptr;
        }
        ordered_json top = ordered_json::array();
        for (const auto& tv : c.top_values) {
            top.push_back({{"value", tv.value}, {"count", tv.count}});
        }
        cj["top_values"] = std::move(top);
        cj["detected_unit"] = c.detected_unit ? ordered_json(*c.detected_unit) : ordered_json(nullptr);
        cols.push_back(std::move(cj));
    }
    j["columns"] = std::move(cols);
    ordered_json fds = ordered_json::array();
    for (const auto& fd : profile.fds) {
        fds.push_back({{"determinant", fd.determinant}, {"dependent", fd.dependent}});
    }
    j["functional_dependencies"] = std::move(fds);
    j["candidate_keys"] = profile.candidate_keys;
    j["narrative"] = profile.narrative ? ordered_json(*profile.narrative) : ordered_json(nullptr);
    return j;
}

TableProfile profile_from_json(const nlohmann::json& j)
{
    try {
        if (j.at("schema_version").get<int>() != kProfileSchemaVersion) {
            throw Error("unsupported profile schema_version");
        }
        TableProfile p;
        p.row_count = j.at("row_count").get<std::size_t>();
        for (const auto& cj : j.at("columns")) {
            ColumnProfile c;
            c.name = cj.at("name").get<std::string>();
            auto type = column_type_from_string(cj.at("inferred_type").get<std::string>());
            if (!type) {
                throw Error("unknown column type in profile: " + cj.at("inferred_type").dump());
            }
            c.inferred_type = *type;
            c.null_count = cj.at("null_count").get<std::size_t>();
            c.coerced_null_count = cj.value("coerced_null_count", std::size_t{0});
            c.distinct_count = cj.at("distinct_count").get<std::size_t>();
            if (cj.contains("numeric_summary") && !cj["numeric_summary"].is_null()) {
                const auto& s = cj["numeric_summary"];
                c.numeric_summary = NumericSummary{s.at("min").get<double>(), s.at("max").get<double>(),
                                                   s.at("mean").get<double>(), s.at("std_dev").get<double>()};
            }
            if (cj.contains("datetime_range") && !cj["datetime_range"].is_null()) {
                c.datetime_range = std::make_pair(cj["datetime_range"].at("min").get<std::string>(),
                                                  cj["datetime_range"].at("max").get<std::string>());
            }
            for (const auto& tv : cj.at("top_values")) {
                c.top_values.push_back({tv.at("value").get<std::string>(), tv.at("count").get<std::size_t>()});
            }
            if (cj.contains("detected_unit") && !cj["detected_unit"].is_null()) {
                c.detected_unit = cj["detected_unit"].get<std::string>();
            }
            p.columns.push_back(std::move(c));
        }
        for (const auto& fj : j.at("functional_dependencies")) {
            p.fds.push_back({fj.at("determinant").get<std::vector<std::string>>(), fj.at("dependent").get<std::string>()});
        }
        p.candidate_keys = j.at("candidate_keys").get<std::vector<std::vector<std::string>>>();
        if (j.contains("narrative") && !j["narrative"].is_null()) {
            p.narrative = j["narrative"].get<std::string>();
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed profile JSON: ") + e.what());
    }
}

std::string synopsis(const TableProfile& profile)
{
    std::ostringstream os;
    os << "Table: " << profile.row_count << " rows, " << profile.columns.size() << " columns.\n";
    os << "Columns:\n";
    for (const auto& c : profile.columns) {
        os << "- " << c.name << " (" << to_string(c.inferred_type);
        if (c.detected_unit) {
            os << ", unit " << *c.detected_unit;
        }
        os << "): " << c.null_count << " nulls, " << c.distinct_count << " distinct";
        if (c.numeric_summary) {
            const auto& s = *c.numeric_summary;
            os << "; range " << text::format_number(s.min) << " to " << text::format_number(s.max) << ", mean "
               << text::format_fixed(s.mean, 2) << ", std " << text::format_fixed(s.std_dev, 2);
        }
        if (c.datetime_range) {
            os << "; from " << c.datetime_range->first << " to " << c.datetime_range->second;
        }
        if (!c.top_values.empty()) {
            os << "; top:";
            const auto shown = std::min<std::size_t>(5, c.top_values.size());
            for (std::size_t i = 0; i < shown; ++i) {
                os << (i == 0 ? " " : ", ") << c.top_values[i].value << " (" << c.top_values[i].count << ")";
            }
        }
        os << "\n";
    }
    // determinants containing a candidate key imply every other column; listing them adds nothing
    auto implied_by_key = [&](const FunctionalDependency& fd) {
        for (const auto& key : profile.candidate_keys) {
            if (std::all_of(key.begin(), key.end(), [&](const std::string& k) {
                    return std::find(fd.determinant.begin(), fd.determinant.end(), k) != fd.determinant.end();
                })) {
                return true;
            }
        }
        return false;
    };
    std::vector<const FunctionalDependency*> shown;
    std::size_t informative = 0;
    for (const auto& fd : profile.fds) {
        if (implied_by_key(fd)) {
            continue;
        }
        ++informative;
        if (shown.size() < kSynopsisMaxFds) {
            shown.push_back(&fd);
        }
    }
    os << "Functional dependencies (excluding those implied by candidate keys):";
    if (shown.empty()) {
        os << " none";
    }
    os << "\n";
    for (const auto* fd : shown) {
        os << "- " << text::join(fd->determinant, ", ") << " -> " << fd->dependent << "\n";
    }
    if (shown.size() < informative) {
        os << "- ... " << informative - shown.size() << " more\n";
    }
    os << "Candidate keys:";
    if (profile.candidate_keys.empty()) {
        os << " none";
    }
    os << "\n";
    for (const auto& k : profile.candidate_keys) {
        os << "- (" << text::join(k, ", ") << ")\n";
    }
    if (profile.narrative) {
        os << "Profiler reading: " << *profile.narrative << "\n";
    }
    return os.str();
}

} // namespace d2d::profile
