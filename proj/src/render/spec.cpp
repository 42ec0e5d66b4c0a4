#include "d2d/render/spec.hpp"

#include "d2d/common/text.hpp"

#include <cstdlib>
#include <mutex>

#ifndef D2D_DEFAULT_SCHEMA_DIR
#define D2D_DEFAULT_SCHEMA_DIR "schemas"
#endif

namespace d2d::render {

using nlohmann::json;
using nlohmann::ordered_json;
using chart::ChartType;
using profile::ColumnType;

std::string chart_title(const std::string& narrative)
{
    const auto trimmed = std::string(text::trim(narrative));
    if (text::utf8_length(trimmed) <= kTitleMaxChars) {
        return trimmed;
    }
    return std::string(text::trim(text::utf8_prefix(trimmed, kTitleMaxChars - 1))) + "\xE2\x80\xA6";
}

std::string axis_label(const std::string& column, const profile::TableProfile& profile)
{
    const auto* c = profile.find(column);
    if (c != nullptr && c->detected_unit) {
        return column + " (" + *c->detected_unit + ")";
    }
    return column;
}

std::string field_ref(const std::string& name)
{
    std::string out;
    for (char c : name) {
        if (c == '.' || c == '[' || c == ']' || c == '\\') {
            out.push_back('\\');
        }
        out.push_back(c);
    }
    return out;
}

namespace {

ColumnType type_of(const std::string& column, const profile::TableProfile& profile)
{
    const auto* c = profile.find(column);
    return c != nullptr ? c->inferred_type : ColumnType::text;
}

// Grammar measurement type for a column used as a positional or color channel.
std::string grammar_type(ColumnType t, bool discrete_axis)
{
    switch (t) {
    case ColumnType::integer: return discrete_axis ? "ordinal" : "quantitative";
    case ColumnType::decimal: return "quantitative";
    case ColumnType::datetime: return "temporal";
    default: return "nominal";
    }
}

ordered_json field_def(const std::string& field, const std::string& type, const std::string& title)
{
    return {{"field", field_ref(field)}, {"type", type}, {"title", title}};
}

std::string measure_title(const chart::ChartPlan& plan, const std::string& column, const profile::TableProfile& profile)
{
    if (plan.aggregate == chart::Aggregate::count) {
        return "count of rows";
    }
    const auto label = axis_label(column, profile);
    return plan.aggregate ? chart::to_string(*plan.aggregate) + " of " + label : label;
}

ordered_json color_def(const std::string& field, const std::string& type, const std::string& title)
{
    auto def = field_def(field, type, title);
    def["legend"] = {{"title", title}};
    return def;
}

ordered_json main_layer(const chart::ChartPlan& plan, const ChartData& data, const profile::TableProfile& profile)
{
    const auto& enc = plan.encodings;
    // aggregated measures live in their own output field
    const std::string measure_field = data.measure_field.value_or(enc.y.value_or(""));
    const auto measure_col = measure_column(plan);
    ordered_json layer;
    ordered_json e = ordered_json::object();
    auto positional = [&](const std::string& column, bool discrete_axis) {
        return field_def(column, grammar_type(type_of(column, profile), discrete_axis), axis_label(column, profile));
    };
    auto measure_def = [&]() {
        return field_def(measure_field, "quantitative", measure_title(plan, measure_col.value_or(enc.y.value_or("")), profile));
    };
    auto add_color = [&]() {
        if (enc.color) {
            const auto t = type_of(*enc.color, profile);
            e["color"] = color_def(*enc.color, grammar_type(t, true), axis_label(*enc.color, profile));
        }
    };

    switch (plan.chart_type) {
    case ChartType::bar:
    case ChartType::stacked_bar:
        layer["mark"] = {{"type", "bar"}, {"tooltip", true}};
        e["x"] = positional(*enc.x, true);
        e["y"] = measure_def();
        if (plan.chart_type == ChartType::stacked_bar) {
            e["y"]["stack"] = "zero";
        }
        add_color();
        break;
    case ChartType::line:
        layer["mark"] = {{"type", "line"}, {"point", true}, {"tooltip", true}};
        e["x"] = positional(*enc.x, false);
        e["y"] = measure_def();
        add_color();
        break;
    case ChartType::scatter:
        layer["mark"] = {{"type", "point"}, {"tooltip", true}};
        e["x"] = positional(*enc.x, false);
        e["y"] = positional(*enc.y, false);
        if (enc.color) {
            const auto t = type_of(*enc.color, profile);
            e["color"] = color_def(*enc.color, grammar_type(t, false), axis_label(*enc.color, profile));
        }
        break;
    case ChartType::box:
        layer["mark"] = {{"type", "boxplot"}};
        e["x"] = positional(*enc.x, true);
        e["y"] = positional(*enc.y, false);
        add_color();
        break;
    case ChartType::heatmap: {
        layer["mark"] = {{"type", "rect"}, {"tooltip", true}};
        e["x"] = positional(*enc.x, true);
        e["y"] = positional(*enc.y, true);
        const auto title = measure_title(plan, measure_col.value_or(""), profile);
        e["color"] = color_def(measure_field, "quantitative", title);
        break;
    }
    case ChartType::pie: {
        layer["mark"] = {{"type", "arc"}, {"tooltip", true}};
        auto theta = field_def(measure_field, "quantitative", measure_title(plan, measure_col.value_or(""), profile));
        theta["stack"] = true;
        e["theta"] = std::move(theta);
        add_color();
        break;
    }
    }
    layer["encoding"] = std::move(e);
    return layer;
}

ordered_json annotation_layer(const std::string& note, std::size_t i)
{
    ordered_json layer;
    layer["data"] = {{"values", ordered_json::array({{{"annotation", note}}})}};
    layer["mark"] = {{"type", "text"},
                     {"align", "left"},
                     {"baseline", "top"},
                     {"x", 0},
                     {"y", kChartHeight + 44 + static_cast<int>(i) * 16},
                     {"fontSize", 11},
                     {"color", "#444444"}};
    layer["encoding"] = {{"text", {{"field", "annotation"}, {"type", "nominal"}}}};
    return layer;
}

} // namespace

ChartSpec emit_spec(const chart::ChartPlan& plan, const ChartData& data, const profile::TableProfile& profile,
                    std::size_t plan_ref)
{
    ordered_json doc;
    doc["$schema"] = kGrammarSchemaUrl;
    ordered_json title = {{"text", chart_title(plan.key_insight_narrative)}, {"anchor", "start"}};
    const bool faceted = plan.encodings.facet.has_value();
    if (faceted && !plan.annotations.empty()) {
        title["subtitle"] = plan.annotations;
    }
    doc["title"] = std::move(title);
    doc["data"] = {{"values", data.values()}};

    ordered_json layers = ordered_json::array();
    layers.push_back(main_layer(plan, data, profile));
    if (!faceted) {
        for (std::size_t i = 0; i < plan.annotations.size(); ++i) {
            layers.push_back(annotation_layer(plan.annotations[i], i));
        }
    }
    if (faceted) {
        const auto& f = *plan.encodings.facet;
        doc["facet"] = field_def(f, "nominal", axis_label(f, profile));
        doc["columns"] = 3;
        doc["spec"] = {{"width", kChartWidth / 2}, {"height", kChartHeight / 2}, {"layer", std::move(layers)}};
    } else {
        doc["width"] = kChartWidth;
        doc["height"] = kChartHeight;
        doc["layer"] = std::move(layers);
    }
    doc["usermeta"] = {{"d2d",
                        {{"chart_type", chart::to_string(plan.chart_type)},
                         {"aggregate", plan.aggregate ? ordered_json(chart::to_string(*plan.aggregate)) : ordered_json(nullptr)},
                         {"source_rows", data.source_rows},
                         {"inline_rows", data.rows.size()},
                         {"sampled", data.sampled}}}};
    return {plan_ref, std::move(doc), data.rows.size()};
}

std::filesystem::path schema_dir()
{
    if (const char* env = std::getenv("D2D_SCHEMA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return D2D_DEFAULT_SCHEMA_DIR;
}

const jsonschema::JsonSchema& grammar_schema()
{
    static const jsonschema::JsonSchema schema = jsonschema::JsonSchema::from_file(schema_dir() / kGrammarSchemaFile);
    return schema;
}

namespace {

// Unit specs of a document: the layers of a layered or faceted spec, or the
// document itself.
void collect_units(const json& node, const std::string& path, std::vector<std::pair<std::string, const json*>>& out)
{
    if (!node.is_object()) {
        return;
    }
    if (node.contains("layer") && node["layer"].is_array()) {
        for (std::size_t i = 0; i < node["layer"].size(); ++i) {
            collect_units(node["layer"][i], path + "/layer/" + std::to_string(i), out);
        }
    } else if (node.contains("spec")) {
        collect_units(node["spec"], path + "/spec", out);
    } else {
        out.emplace_back(path, &node);
    }
}

bool has_title(const json& def)
{
    return def.is_object() && def.contains("title") && def["title"].is_string() &&
           !text::trim(def["title"].get<std::string>()).empty();
}

} // namespace

bool legend_law_holds(const json& doc)
{
    std::vector<std::pair<std::string, const json*>> units;
    collect_units(doc, "", units);
    for (const auto& [path, unit] : units) {
        if (!unit->contains("encoding")) {
            continue;
        }
        for (const auto& [channel, def] : (*unit)["encoding"].items()) {
            const bool legend = def.is_object() && def.contains("legend") && def["legend"].is_object();
            if ((channel == "color") != legend) {
                return false;
            }
        }
    }
    return true;
}

std::vector<std::string> validate_spec(const json& doc)
{
    std::vector<std::string> errors;
    try {
        if (!doc.is_object()) {
            return {"/: chart document must be a JSON object"};
        }
        const auto& title = doc.contains("title") ? doc["title"] : json();
        const bool titled = (title.is_string() && !text::trim(title.get<std::string>()).empty()) ||
                            (title.is_object() && title.contains("text") && title["text"].is_string() &&
                             !text::trim(title["text"].get<std::string>()).empty());
        if (!titled) {
            errors.push_back("/title: chart title is missing");
        }
        if (!doc.contains("data") || !doc["data"].contains("values") || !doc["data"]["values"].is_array() ||
            doc["data"]["values"].empty()) {
            errors.push_back("/data/values: inline data rows are missing");
        }
        std::vector<std::pair<std::string, const json*>> units;
        collect_units(doc, "", units);
        for (std::size_t u = 0; u < units.size(); ++u) {
            const auto& [path, unit] = units[u];
            if (!unit->contains("mark")) {
                errors.push_back((path.empty() ? "" : path) + "/mark: required property is missing");
                continue;
            }
            if (u != 0 || !unit->contains("encoding")) {
                continue; // only the main layer carries axes
            }
            const auto& enc = (*unit)["encoding"];
            for (const char* ch : {"x", "y", "theta"}) {
                if (enc.contains(ch) && !has_title(enc[ch])) {
                    errors.push_back(path + "/encoding/" + ch + "/title: axis title is missing");
                }
            }
        }
        if (!legend_law_holds(doc)) {
            errors.push_back("/: every color encoding needs a legend and only color encodings may have one");
        }
        for (const auto& e : grammar_schema().validate(doc)) {
            errors.push_back(e.to_string());
        }
    } catch (const std::exception& e) {
        errors.push_back(std::string("validation failed: ") + e.what());
    }
    return errors;
}

std::vector<std::string> validate_spec(const ChartSpec& spec)
{
    return validate_spec(json::parse(spec.grammar_doc.dump()));
}

} // namespace d2d::render
