#include "d2d/chart/plan.hpp"

#include "d2d/common/text.hpp"
#include "d2d/llm/structured.hpp"
#include "d2d/profile/profile.hpp"

#include <future>
#include <map>

namespace d2d::chart {

using nlohmann::json;
using nlohmann::ordered_json;
using profile::ColumnType;

std::string to_string(ChartType t)
{
    switch (t) {
    case ChartType::bar: return "bar";
    case ChartType::stacked_bar: return "stacked_bar";
    case ChartType::line: return "line";
    case ChartType::scatter: return "scatter";
    case ChartType::box: return "box";
    case ChartType::heatmap: return "heatmap";
    case ChartType::pie: return "pie";
    }
    return "bar";
}

std::optional<ChartType> chart_type_from_string(const std::string& s)
{
    for (auto t : kChartTypes) {
        if (to_string(t) == s) {
            return t;
        }
    }
    return std::nullopt;
}

std::string to_string(Aggregate a)
{
    switch (a) {
    case Aggregate::sum: return "sum";
    case Aggregate::mean: return "mean";
    case Aggregate::count: return "count";
    case Aggregate::median: return "median";
    }
    return "count";
}

std::optional<Aggregate> aggregate_from_string(const std::string& s)
{
    for (auto a : kAggregates) {
        if (to_string(a) == s) {
            return a;
        }
    }
    return std::nullopt;
}

namespace {

bool discrete(ColumnType t) { return t == ColumnType::categorical || t == ColumnType::boolean; }
bool numeric(ColumnType t) { return t == ColumnType::integer || t == ColumnType::decimal; }
bool ordered(ColumnType t) { return numeric(t) || t == ColumnType::datetime; }

} // namespace

std::vector<std::string> check_compatibility(ChartType type, const Encodings& enc, std::optional<Aggregate> aggregate,
                                             const profile::TableProfile& profile)
{
    std::vector<std::string> errors;
    auto column = [&](const char* channel, const std::optional<std::string>& name) -> std::optional<ColumnType> {
        if (!name) {
            return std::nullopt;
        }
        const auto* c = profile.find(*name);
        if (c == nullptr) {
            errors.push_back(std::string(channel) + " encoding references unknown column '" + *name + "'");
            return std::nullopt;
        }
        return c->inferred_type;
    };
    const auto x = column("x", enc.x);
    const auto y = column("y", enc.y);
    const auto color = column("color", enc.color);
    const auto facet = column("facet", enc.facet);
    if (!errors.empty()) {
        return errors;
    }
    const auto name = to_string(type);
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) {
            errors.push_back(name + ": " + msg);
        }
    };
    const bool counting = aggregate == Aggregate::count;
    // heatmaps use y as a second axis and carry the measure in color
    const bool heatmap = type == ChartType::heatmap;
    if (aggregate && !counting && !heatmap) {
        need(y && numeric(*y), to_string(*aggregate) + " needs a numeric y column");
    }
    if (facet) {
        need(discrete(*facet), "facet column must be categorical or boolean");
    }
    if (counting && y && !heatmap) {
        // count ignores the measure; insisting on its absence keeps specs unambiguous
        errors.push_back(name + ": count aggregates rows, so y must be left empty");
    }

    switch (type) {
    case ChartType::bar:
    case ChartType::stacked_bar:
        need(x && (discrete(*x) || *x == ColumnType::datetime || *x == ColumnType::integer),
             "x must be a categorical, boolean, datetime or integer column");
        need(counting || (y && numeric(*y)), "y must be numeric unless the aggregate is count");
        if (type == ChartType::stacked_bar) {
            need(color && discrete(*color), "stacked bars need a categorical or boolean color column");
        } else if (color) {
            need(discrete(*color), "color must be categorical or boolean");
        }
        break;
    case ChartType::line:
        need(x && ordered(*x), "x must be an ordered column (datetime, integer or decimal)");
        need(counting || (y && numeric(*y)), "y must be numeric unless the aggregate is count");
        if (color) {
            need(discrete(*color), "color must be categorical or boolean");
        }
        break;
    case ChartType::scatter:
        need(x && numeric(*x), "x must be numeric");
        need(y && numeric(*y), "y must be numeric");
        need(!aggregate, "scatter plots show raw points, so no aggregate");
        break;
    case ChartType::box:
        need(x && discrete(*x), "x must be categorical or boolean");
        need(y && numeric(*y), "y must be numeric");
        need(!aggregate, "box plots summarize raw values, so no aggregate");
        if (color) {
            need(discrete(*color), "color must be categorical or boolean");
        }
        break;
    case ChartType::heatmap:
        need(x && discrete(*x), "x must be categorical or boolean");
        need(y && discrete(*y), "y must be categorical or boolean");
        need(aggregate.has_value(), "heatmaps need an aggregate");
        if (aggregate && !counting) {
            need(color && numeric(*color), to_string(*aggregate) + " needs a numeric color column as the measure");
        } else if (counting) {
            need(!color, "count heatmaps color cells by the count, so color must be left empty");
        }
        break;
    case ChartType::pie:
        need(!enc.x, "pie charts have no x encoding");
        need(color && discrete(*color), "pie charts need a categorical or boolean color column for the slices");
        need(aggregate.has_value(), "pie charts need an aggregate");
        break;
    }
    return errors;
}

std::vector<std::string> validate_plan(const ChartPlan& plan, const profile::TableProfile& profile)
{
    auto errors = check_compatibility(plan.chart_type, plan.encodings, plan.aggregate, profile);
    if (text::trim(plan.key_insight_narrative).empty()) {
        errors.push_back("key_insight_narrative must not be empty");
    }
    if (plan.annotations.size() > kMaxAnnotations) {
        errors.push_back("at most 3 annotations are allowed");
    }
    return errors;
}

std::vector<insight::InsightRef> select_insights(const insight::InsightBundle& bundle, std::size_t max_charts)
{
    const std::array<insight::Lens, 3> order{insight::Lens::domain_related, insight::Lens::descriptive,
                                             insight::Lens::predictive};
    std::array<std::vector<std::size_t>, 3> queues;
    for (std::size_t l = 0; l < order.size(); ++l) {
        const auto& items = bundle.bucket(order[l]);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (items[i].viz_hint.has_value() == (pass == 0)) {
                    queues[l].push_back(i);
                }
            }
        }
    }
    std::vector<insight::InsightRef> picked;
    std::array<std::size_t, 3> next{0, 0, 0};
    bool progress = true;
    while (picked.size() < max_charts && progress) {
        progress = false;
        for (std::size_t l = 0; l < order.size() && picked.size() < max_charts; ++l) {
            if (next[l] < queues[l].size()) {
                picked.push_back({order[l], queues[l][next[l]++]});
                progress = true;
            }
        }
    }
    return picked;
}

const std::string& persona(std::size_t expert_id)
{
    static const std::array<std::string, 3> personas{
        "You are a business intelligence lead. You pick charts that an executive can read in a few seconds and "
        "that make the business consequence obvious.",
        "You are a statistician. You pick charts that show distributions and relationships faithfully and never "
        "hide variation behind an average without reason.",
        "You are a visualization designer. You care about perceptual accuracy: position before length before "
        "angle, few colors, and legends that explain every color.",
    };
    return personas[(expert_id - 1) % personas.size()];
}

namespace {

json chart_fields_schema()
{
    json nullable_string = {{"type", json::array({"string", "null"})}};
    json types = json::array();
    for (auto t : kChartTypes) {
        types.push_back(to_string(t));
    }
    json aggs = json::array();
    for (auto a : kAggregates) {
        aggs.push_back(to_string(a));
    }
    aggs.push_back(nullptr);
    return {
        {"chart_type", {{"enum", types}}},
        {"encodings",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties", {{"x", nullable_string}, {"y", nullable_string}, {"color", nullable_string}, {"facet", nullable_string}}}}},
        {"aggregate", {{"enum", aggs}}},
        {"rationale", {{"type", "string"}, {"pattern", "\\S"}}},
    };
}

const char* kRules =
    "Chart rules (column types come from the profile):\n"
    "- bar: x categorical, boolean, datetime or integer; y numeric, or leave y empty with aggregate count; "
    "optional categorical color.\n"
    "- stacked_bar: like bar, plus a required categorical or boolean color that splits each bar.\n"
    "- line: x datetime, integer or decimal; y numeric, or count with y empty; optional categorical color.\n"
    "- scatter: x and y numeric, no aggregate; optional color.\n"
    "- box: x categorical or boolean, y numeric, no aggregate.\n"
    "- heatmap: x and y categorical or boolean; aggregate required; for sum, mean or median the numeric measure "
    "goes in color; for count leave color empty.\n"
    "- pie: no x; color is the categorical slice column; aggregate required; y is the numeric measure, or empty "
    "for count.\n"
    "- sum, mean and median need a numeric measure; count needs none. facet, when used, must be categorical or "
    "boolean.\n"
    "Use exact column names from the profile and null for unused channels.\n";

std::string describe_insight(const insight::Insight& ins)
{
    std::string s = "Insight (" + insight::to_string(ins.lens) + "): " + ins.statement + "\n";
    for (const auto& e : ins.evidence) {
        s += "- evidence " + e.ref + ": " + e.statistic + "\n";
    }
    if (ins.viz_hint) {
        s += "Analyst's chart suggestion: " + *ins.viz_hint + "\n";
    }
    return s;
}

std::optional<std::string> canonical_column(const json& v, const profile::TableProfile& profile)
{
    if (!v.is_string()) {
        return std::nullopt;
    }
    const auto name = std::string(text::trim(v.get<std::string>()));
    if (name.empty()) {
        return std::nullopt;
    }
    for (const auto& c : profile.columns) {
        if (text::iequals(c.name, name)) {
            return c.name;
        }
    }
    return name; // left as is so validation names it
}

Encodings parse_encodings(const json& j, const profile::TableProfile& profile)
{
    Encodings e;
    auto get = [&](const char* k) { return j.contains(k) ? canonical_column(j[k], profile) : std::nullopt; };
    e.x = get("x");
    e.y = get("y");
    e.color = get("color");
    e.facet = get("facet");
    return e;
}

std::optional<Aggregate> parse_aggregate(const json& j)
{
    return j.is_string() ? aggregate_from_string(j.get<std::string>()) : std::nullopt;
}

ExpertProposal parse_proposal(const json& v, std::size_t expert_id, const profile::TableProfile& profile)
{
    ExpertProposal p;
    p.expert_id = expert_id;
    p.chart_type = *chart_type_from_string(v["chart_type"].get<std::string>());
    p.encodings = parse_encodings(v.value("encodings", json::object()), profile);
    p.aggregate = parse_aggregate(v.value("aggregate", json()));
    p.rationale = v["rationale"].get<std::string>();
    return p;
}

std::string render_proposal(const ExpertProposal& p)
{
    auto ch = [](const std::optional<std::string>& s) { return s.value_or("-"); };
    return "Expert " + std::to_string(p.expert_id) + ": " + to_string(p.chart_type) + " x=" + ch(p.encodings.x) +
           " y=" + ch(p.encodings.y) + " color=" + ch(p.encodings.color) + " facet=" + ch(p.encodings.facet) +
           " aggregate=" + (p.aggregate ? to_string(*p.aggregate) : std::string("none")) + ". " + p.rationale;
}

} // namespace

const jsonschema::JsonSchema& proposal_schema()
{
    static const jsonschema::JsonSchema schema(json{{"type", "object"},
                                                    {"required", {"chart_type", "encodings", "aggregate", "rationale"}},
                                                    {"properties", chart_fields_schema()}});
    return schema;
}

const jsonschema::JsonSchema& consensus_schema()
{
    static const jsonschema::JsonSchema schema([] {
        auto props = chart_fields_schema();
        props["key_insight_narrative"] = {{"type", "string"}, {"pattern", "\\S"}};
        props["annotations"] = {{"type", "array"}, {"maxItems", 3}, {"items", {{"type", "string"}, {"minLength", 1}}}};
        return json{{"type", "object"},
                    {"required", {"chart_type", "encodings", "aggregate", "rationale", "key_insight_narrative", "annotations"}},
                    {"properties", props}};
    }());
    return schema;
}

llm::ChatRequest expert_request(const insight::Insight& insight, const profile::TableProfile& profile,
                                std::size_t expert_id, const llm::StageModel& model)
{
    llm::ChatRequest req;
    req.model_id = model.model_id;
    req.temperature = model.temperature;
    req.schema_tag = "chart/expert-" + std::to_string(expert_id);
    req.messages.push_back({llm::Role::system, persona(expert_id)});
    std::string user = describe_insight(insight) + "\nStatistical profile of the table:\n\n" +
                       profile::synopsis(profile) + "\n" + kRules +
                       "\nPropose the single chart that communicates this insight best and explain why.\n\n" +
                       llm::schema_instructions(proposal_schema());
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

llm::ChatRequest consensus_request(const insight::Insight& insight, const profile::TableProfile& profile,
                                   const std::vector<ExpertProposal>& proposals, const llm::StageModel& model)
{
    llm::ChatRequest req;
    req.model_id = model.model_id;
    req.temperature = model.temperature;
    req.schema_tag = "chart/consensus";
    req.messages.push_back({llm::Role::system,
                            "You moderate a panel of visualization experts and write down the chart they settle on."});
    std::string user = describe_insight(insight) + "\nStatistical profile of the table:\n\n" +
                       profile::synopsis(profile) + "\n" + kRules + "\nProposals:\n";
    for (const auto& p : proposals) {
        user += "- " + render_proposal(p) + "\n";
    }
    user += "\nLet the experts argue: weigh what each chart type shows well and badly for this insight, and "
            "challenge every encoding choice before settling. Then record the agreed chart, its rationale, a "
            "one-sentence key insight narrative for the chart title area, and up to three short annotations "
            "worth printing on the chart.\n\n" +
            llm::schema_instructions(consensus_schema());
    req.messages.push_back({llm::Role::user, std::move(user)});
    return req;
}

PlanOutcome plan_chart(const insight::InsightBundle& bundle, const insight::InsightRef& ref,
                       const profile::TableProfile& profile, llm::Gateway& gateway, const PlannerConfig& config)
{
    if (config.k_experts < 1) {
        throw std::invalid_argument("k_experts must be at least 1");
    }
    const auto& ins = insight::resolve(bundle, ref);
    PlanOutcome out;

    std::vector<std::future<llm::StructuredResult>> pending;
    for (std::size_t e = 1; e <= config.k_experts; ++e) {
        pending.push_back(std::async(std::launch::async, [&, e] {
            llm::StructuredOptions opts;
            opts.max_repairs = config.expert.max_repairs;
            opts.check = [&](const json& v) {
                const auto p = parse_proposal(v, e, profile);
                return check_compatibility(p.chart_type, p.encodings, p.aggregate, profile);
            };
            return llm::complete_structured(gateway, expert_request(ins, profile, e, config.expert), proposal_schema(), opts);
        }));
    }
    std::exception_ptr failure;
    for (std::size_t e = 0; e < pending.size(); ++e) {
        try {
            auto r = pending[e].get();
            out.gateway_calls += static_cast<std::size_t>(r.calls);
            out.proposals.push_back(parse_proposal(r.value, e + 1, profile));
        } catch (...) {
            if (!failure) {
                failure = std::current_exception();
            }
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    const auto& first = out.proposals.front();
    bool unanimous = true;
    for (const auto& p : out.proposals) {
        unanimous = unanimous && p.chart_type == first.chart_type && p.encodings == first.encodings &&
                    p.aggregate == first.aggregate;
    }
    ChartPlan plan;
    plan.insight_ref = ref;
    if (unanimous) {
        plan.chart_type = first.chart_type;
        plan.encodings = first.encodings;
        plan.aggregate = first.aggregate;
        std::vector<std::string> rationales;
        for (const auto& p : out.proposals) {
            rationales.push_back("Expert " + std::to_string(p.expert_id) + ": " + p.rationale);
        }
        plan.rationale = text::join(rationales, " ");
        plan.key_insight_narrative = ins.statement;
        for (const auto& e : ins.evidence) {
            if (plan.annotations.size() < kMaxAnnotations && !text::trim(e.statistic).empty()) {
                plan.annotations.push_back(e.statistic);
            }
        }
        out.plan = std::move(plan);
        return out;
    }

    out.consensus_call = true;
    llm::StructuredOptions opts;
    opts.max_repairs = config.consensus.max_repairs;
    auto to_plan = [&](const json& v) {
        ChartPlan p;
        p.insight_ref = ref;
        p.chart_type = *chart_type_from_string(v["chart_type"].get<std::string>());
        p.encodings = parse_encodings(v.value("encodings", json::object()), profile);
        p.aggregate = parse_aggregate(v.value("aggregate", json()));
        p.rationale = v["rationale"].get<std::string>();
        p.key_insight_narrative = std::string(text::trim(v["key_insight_narrative"].get<std::string>()));
        for (const auto& a : v["annotations"]) {
            p.annotations.push_back(a.get<std::string>());
        }
        return p;
    };
    auto result = llm::complete_structured(gateway, consensus_request(ins, profile, out.proposals, config.consensus),
                                           consensus_schema(), opts);
    out.gateway_calls += static_cast<std::size_t>(result.calls);
    plan = to_plan(result.value);
    if (auto errors = validate_plan(plan, profile); !errors.empty()) {
        result = llm::complete_structured(gateway, llm::with_repair_turn(result, errors), consensus_schema(), opts);
        out.gateway_calls += static_cast<std::size_t>(result.calls);
        plan = to_plan(result.value);
        if (errors = validate_plan(plan, profile); !errors.empty()) {
            throw PlanValidationError("consensus chart plan is still invalid after the repair cycle: " +
                                      text::join(errors, "; "));
        }
    }
    out.plan = std::move(plan);
    return out;
}

ordered_json to_json(const Encodings& e)
{
    auto v = [](const std::optional<std::string>& s) { return s ? ordered_json(*s) : ordered_json(nullptr); };
    return {{"x", v(e.x)}, {"y", v(e.y)}, {"color", v(e.color)}, {"facet", v(e.facet)}};
}

ordered_json to_json(const ExpertProposal& p)
{
    ordered_json j;
    j["expert_id"] = p.expert_id;
    j["chart_type"] = to_string(p.chart_type);
    j["encodings"] = to_json(p.encodings);
    j["aggregate"] = p.aggregate ? ordered_json(to_string(*p.aggregate)) : ordered_json(nullptr);
    j["rationale"] = p.rationale;
    return j;
}

ordered_json to_json(const ChartPlan& p)
{
    ordered_json j;
    j["insight_ref"] = {{"lens", insight::to_string(p.insight_ref.lens)}, {"index", p.insight_ref.index}};
    j["chart_type"] = to_string(p.chart_type);
    j["encodings"] = to_json(p.encodings);
    j["aggregate"] = p.aggregate ? ordered_json(to_string(*p.aggregate)) : ordered_json(nullptr);
    j["rationale"] = p.rationale;
    j["key_insight_narrative"] = p.key_insight_narrative;
    j["annotations"] = p.annotations;
    return j;
}

ChartPlan plan_from_json(const json& j)
{
    ChartPlan p;
    const auto lens = insight::lens_from_string(j.at("insight_ref").at("lens").get<std::string>());
    if (!lens) {
        throw std::invalid_argument("unknown insight lens in chart plan");
    }
    p.insight_ref = {*lens, j["insight_ref"].at("index").get<std::size_t>()};
    const auto type = chart_type_from_string(j.at("chart_type").get<std::string>());
    if (!type) {
        throw std::invalid_argument("unknown chart type '" + j["chart_type"].get<std::string>() + "'");
    }
    p.chart_type = *type;
    const auto& e = j.at("encodings");
    auto opt = [&](const char* k) {
        return e.contains(k) && e[k].is_string() ? std::optional<std::string>(e[k].get<std::string>()) : std::nullopt;
    };
    p.encodings = {opt("x"), opt("y"), opt("color"), opt("facet")};
    if (j.contains("aggregate") && j["aggregate"].is_string()) {
        p.aggregate = aggregate_from_string(j["aggregate"].get<std::string>());
        if (!p.aggregate) {
            throw std::invalid_argument("unknown aggregate '" + j["aggregate"].get<std::string>() + "'");
        }
    }
    p.rationale = j.value("rationale", std::string());
    p.key_insight_narrative = j.at("key_insight_narrative").get<std::string>();
    p.annotations = j.value("annotations", std::vector<std::string>{});
    return p;
}

} // namespace d2d::chart
