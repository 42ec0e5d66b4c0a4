#include "d2d/common/text.hpp"
#include "d2d/ingest/table.hpp"
#include "d2d/profile/inference.hpp"
#include "d2d/profile/profile.hpp"
#include "d2d/render/dashboard.hpp"
#include "d2d/render/data.hpp"
#include "d2d/render/spec.hpp"

#include "golden.hpp"
#include "render_oracle.hpp"

#include <doctest.h>

#include <regex>

using namespace d2d;
using chart::Aggregate;
using chart::ChartPlan;
using chart::ChartType;
using nlohmann::json;

namespace {

profile::TypedTable typed(std::string_view csv) { return profile::type_table(ingest::parse_table(csv)); }

const profile::TypedTable& revenue_table()
{
    static const auto t = typed("month,channel,revenue\n"
                                "2024-01-01,email,$120.50\n"
                                "2024-01-01,search,$80.00\n"
                                "2024-01-01,email,$19.50\n"
                                "2024-02-01,search,$200.00\n"
                                "2024-02-01,social,$45.25\n"
                                "2024-03-01,email,$99.99\n"
                                "2024-03-01,social,$10.01\n");
    return t;
}

const profile::TypedTable& category_table()
{
    static const auto t = typed("category,score\na,1\na,2\nb,3\na,4\nc,5\nb,6\nc,7\na,8\nb,9\nc,10\n");
    return t;
}

ChartPlan plan(ChartType type, std::optional<std::string> x, std::optional<std::string> y,
               std::optional<std::string> color, std::optional<Aggregate> agg, std::vector<std::string> notes = {})
{
    ChartPlan p;
    p.chart_type = type;
    p.encodings.x = std::move(x);
    p.encodings.y = std::move(y);
    p.encodings.color = std::move(color);
    p.aggregate = agg;
    p.key_insight_narrative = "Revenue concentrates in email during January";
    p.annotations = std::move(notes);
    return p;
}

std::string pretty(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

} // namespace

TEST_CASE("count over a 4/3/3 split gives one row per category")
{
    auto p = plan(ChartType::pie, std::nullopt, std::nullopt, "category", Aggregate::count);
    const auto data = render::prepare_chart_data(category_table(), p);
    CHECK(data.fields == std::vector<std::string>{"category", "count"});
    REQUIRE(data.rows.size() == 3);
    CHECK(data.rows[0] == std::vector<json>{"a", 4});
    CHECK(data.rows[1] == std::vector<json>{"b", 3});
    CHECK(data.rows[2] == std::vector<json>{"c", 3});
    CHECK(data.measure_field == "count");
    CHECK_FALSE(data.sampled);
}

TEST_CASE("projection keeps every row")
{
    auto p = plan(ChartType::scatter, "score", "score", std::nullopt, std::nullopt);
    const auto data = render::prepare_chart_data(category_table(), p);
    CHECK(data.rows.size() == 10);
    CHECK(data.fields == std::vector<std::string>{"score"});
    CHECK(data.source_rows == 10);
}

TEST_CASE("mean over a text column is an aggregation error")
{
    auto p = plan(ChartType::bar, "score", "category", std::nullopt, Aggregate::mean);
    CHECK_THROWS_AS(render::prepare_chart_data(category_table(), p), render::AggregationError);
}

TEST_CASE("null grouping keys form their own group, sorted last")
{
    const auto t = typed("k,v\nb,1\n,2\na,3\n,4\nb,\n");
    auto p = plan(ChartType::bar, "k", "v", std::nullopt, Aggregate::sum);
    const auto data = render::prepare_chart_data(t, p);
    REQUIRE(data.rows.size() == 3);
    CHECK(data.rows[0] == std::vector<json>{"a", 3.0});
    CHECK(data.rows[1] == std::vector<json>{"b", 1.0});
    CHECK(data.rows[2] == std::vector<json>{render::kNullGroup, 6.0});

    p.aggregate = Aggregate::mean;
    const auto t2 = typed("k,v\nb,\na,3\n");
    const auto means = render::prepare_chart_data(t2, p);
    CHECK(means.rows[1][1].is_null());
}

TEST_CASE("rows beyond the cap are sampled with a fixed seed")
{
    profile::TypedTable t;
    t.row_count = 12000;
    profile::TypedColumn c;
    c.name = "n";
    c.type = profile::ColumnType::integer;
    for (std::int64_t i = 0; i < 12000; ++i) {
        c.values.emplace_back(i);
    }
    t.columns.push_back(c);
    auto p = plan(ChartType::scatter, "n", "n", std::nullopt, std::nullopt);
    const auto a = render::prepare_chart_data(t, p);
    const auto b = render::prepare_chart_data(t, p);
    CHECK(a.rows.size() == render::kMaxInlineRows);
    CHECK(a.sampled);
    CHECK(a.rows == b.rows);
    for (std::size_t i = 1; i < a.rows.size(); ++i) {
        REQUIRE(a.rows[i - 1][0].get<std::int64_t>() < a.rows[i][0].get<std::int64_t>());
    }
    render::DataOptions other;
    other.sample_seed = 7;
    CHECK(render::prepare_chart_data(t, p, other).rows != a.rows);
}

TEST_CASE("prepare_chart_data agrees with the nested-loop oracle")
{
    std::mt19937_64 rng(1234);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
        const auto t = testing::random_chart_table(rng);
        const auto prof = profile::build_profile(t);
        const auto type = chart::kChartTypes[rng() % chart::kChartTypes.size()];
        const auto p = testing::random_valid_plan(rng, type, t, prof);
        if (!p) {
            continue;
        }
        const auto expected = testing::oracle_chart_data(t, *p);
        const auto got = render::prepare_chart_data(t, *p);
        const bool exact = !p->aggregate || *p->aggregate == Aggregate::count || *p->aggregate == Aggregate::sum;
        const auto diff = testing::compare_chart_data(expected, got.fields, got.rows, exact);
        CHECK_MESSAGE(diff.empty(), "instance " << i << " " << chart::to_json(*p).dump() << ": " << diff);
        ++checked;
    }
    CHECK(checked >= 95);
}

TEST_CASE("stacked bar spec matches the golden file")
{
    const auto& t = revenue_table();
    const auto prof = profile::build_profile(t);
    auto p = plan(ChartType::stacked_bar, "month", "revenue", "channel", Aggregate::sum, {"January email peak"});
    REQUIRE(chart::validate_plan(p, prof).empty());
    const auto spec = render::emit_spec(p, render::prepare_chart_data(t, p), prof, 0);
    const auto& doc = spec.grammar_doc;
    CHECK(doc["layer"][0]["mark"]["type"] == "bar");
    CHECK(doc["layer"][0]["encoding"]["y"]["stack"] == "zero");
    CHECK(doc["layer"][0]["encoding"]["color"]["legend"]["title"] == "channel");
    CHECK(doc["layer"][1]["mark"]["type"] == "text");
    CHECK(spec.inline_data_rows == 6);
    CHECK(render::validate_spec(spec).empty());
    testing::check_golden("stacked_bar.vl.json", pretty(doc));
}

TEST_CASE("pie spec matches the golden file")
{
    const auto prof = profile::build_profile(category_table());
    auto p = plan(ChartType::pie, std::nullopt, std::nullopt, "category", Aggregate::count);
    p.key_insight_narrative = "Category a holds the largest share of rows";
    REQUIRE(chart::validate_plan(p, prof).empty());
    const auto spec = render::emit_spec(p, render::prepare_chart_data(category_table(), p), prof, 0);
    const auto& main = spec.grammar_doc["layer"][0];
    CHECK(main["mark"]["type"] == "arc");
    CHECK(main["encoding"]["color"]["legend"]["title"] == "category");
    CHECK(main["encoding"]["theta"]["field"] == "count");
    CHECK(render::validate_spec(spec).empty());
    testing::check_golden("pie.vl.json", pretty(spec.grammar_doc));
}

TEST_CASE("emission is deterministic")
{
    const auto& t = revenue_table();
    const auto prof = profile::build_profile(t);
    auto p = plan(ChartType::bar, "channel", "revenue", std::nullopt, Aggregate::median);
    const auto a = render::emit_spec(p, render::prepare_chart_data(t, p), prof, 3).grammar_doc.dump();
    const auto b = render::emit_spec(p, render::prepare_chart_data(t, p), prof, 3).grammar_doc.dump();
    CHECK(a == b);
}

TEST_CASE("long narratives are ellipsized to 80 code points")
{
    const std::string longer(120, 'x');
    const auto title = render::chart_title(longer);
    CHECK(text::utf8_length(title) == 80);
    CHECK(title.substr(title.size() - 3) == "\xE2\x80\xA6");
    CHECK(render::chart_title("  short  ") == "short");
}

TEST_CASE("axis labels carry detected units")
{
    const auto prof = profile::build_profile(revenue_table());
    const auto* rev = prof.find("revenue");
    REQUIRE(rev != nullptr);
    REQUIRE(rev->detected_unit.has_value());
    CHECK(render::axis_label("revenue", prof) == "revenue (" + *rev->detected_unit + ")");
    CHECK(render::axis_label("channel", prof) == "channel");
}

TEST_CASE("validate_spec reports a missing mark by path")
{
    const auto golden = json::parse(testing::read_file(testing::source_dir() / "tests/golden/stacked_bar.vl.json"));
    auto doc = golden;
    doc["layer"][0].erase("mark");
    const auto errors = render::validate_spec(doc);
    REQUIRE_FALSE(errors.empty());
    bool named = false;
    for (const auto& e : errors) {
        named = named || e.find("/layer/0/mark") != std::string::npos;
    }
    CHECK(named);
}

TEST_CASE("validate_spec rejects an unknown top-level key")
{
    auto doc = json::parse(testing::read_file(testing::source_dir() / "tests/golden/stacked_bar.vl.json"));
    REQUIRE(render::validate_spec(doc).empty());
    doc["flavour"] = "vanilla";
    const auto errors = render::validate_spec(doc);
    CHECK_FALSE(errors.empty());
}

TEST_CASE("validate_spec never throws on junk")
{
    CHECK_FALSE(render::validate_spec(json(42)).empty());
    CHECK_FALSE(render::validate_spec(json::object()).empty());
    CHECK_FALSE(render::validate_spec(json::parse(R"({"data":{"values":"nope"},"layer":7})")).empty());
}

TEST_CASE("legend law and validity hold for random valid plans of every type")
{
    std::mt19937_64 rng(99);
    for (auto type : chart::kChartTypes) {
        int emitted = 0;
        for (int i = 0; i < 25; ++i) {
            const auto t = testing::random_chart_table(rng, 60);
            const auto prof = profile::build_profile(t);
            const auto p = testing::random_valid_plan(rng, type, t, prof);
            if (!p) {
                continue;
            }
            const auto spec = render::emit_spec(*p, render::prepare_chart_data(t, *p), prof, 0);
            const auto doc = json::parse(spec.grammar_doc.dump());
            CHECK(render::legend_law_holds(doc));
            const auto errors = render::validate_spec(doc);
            CHECK_MESSAGE(errors.empty(), chart::to_json(*p).dump() << ": " << (errors.empty() ? "" : errors[0]));
            ++emitted;
        }
        CHECK_MESSAGE(emitted >= 20, chart::to_string(type));
    }
}

TEST_CASE("legend on a non-color channel breaks the law")
{
    auto doc = json::parse(testing::read_file(testing::source_dir() / "tests/golden/stacked_bar.vl.json"));
    doc["layer"][0]["encoding"]["x"]["legend"] = json::object();
    CHECK_FALSE(render::legend_law_holds(doc));
    auto bare = json::parse(testing::read_file(testing::source_dir() / "tests/golden/stacked_bar.vl.json"));
    bare["layer"][0]["encoding"]["color"].erase("legend");
    CHECK_FALSE(render::legend_law_holds(bare));
}

namespace {

std::size_t count_of(const std::string& hay, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

} // namespace

TEST_CASE("dashboard has one container and narrative per chart")
{
    const auto& t = revenue_table();
    const auto prof = profile::build_profile(t);
    std::vector<ChartPlan> plans;
    std::vector<render::ChartSpec> specs;
    for (std::size_t i = 0; i < 5; ++i) {
        auto p = plan(ChartType::bar, "channel", "revenue", std::nullopt, Aggregate::sum, {"note <" + std::to_string(i) + ">"});
        p.key_insight_narrative = "Narrative number " + std::to_string(i + 1);
        plans.push_back(p);
        specs.push_back(render::emit_spec(p, render::prepare_chart_data(t, p), prof, i));
    }
    semantics::DomainFinding domain{"Retail <marketing>", "Selling things & measuring it.", "", {}};
    insight::InsightBundle bundle;
    const auto d = render::assemble_dashboard(specs, bundle, domain, plans, "abc123");
    CHECK(d.chart_count == 5);
    CHECK(d.domain_header == domain.label);
    CHECK(count_of(d.html, "class=\"chart-container\"") == 5);
    CHECK(count_of(d.html, "<h2>Narrative number ") == 5);
    CHECK(count_of(d.html, "<li>note &lt;") == 5);
    CHECK(d.html.find("Retail &lt;marketing&gt;") != std::string::npos);
    CHECK(d.html.find("Selling things &amp; measuring it.") != std::string::npos);
    CHECK(d.html.find("abc123") != std::string::npos);
    CHECK(d.html.find(render::kVegaLiteScript) != std::string::npos);
    CHECK(count_of(d.html, "<section") == count_of(d.html, "</section>"));
}

TEST_CASE("a single chart without annotations renders no annotation list")
{
    const auto prof = profile::build_profile(category_table());
    auto p = plan(ChartType::pie, std::nullopt, std::nullopt, "category", Aggregate::count);
    const auto spec = render::emit_spec(p, render::prepare_chart_data(category_table(), p), prof, 0);
    const auto d = render::assemble_dashboard({spec}, {}, {"Scores", "Test scores.", "", {}}, {p}, "d");
    CHECK(d.chart_count == 1);
    CHECK(count_of(d.html, "class=\"chart-container\"") == 1);
    CHECK(d.html.find("<ul class=\"annotations\">") == std::string::npos);
    CHECK_THROWS(render::assemble_dashboard({}, {}, {}, {}, "d"));
}

TEST_CASE("embedded chart JSON cannot close its script element")
{
    nlohmann::ordered_json doc = {{"title", "</script><b>"}};
    const auto s = render::script_safe_json(doc);
    CHECK(s.find("</") == std::string::npos);
    CHECK(json::parse(s)["title"] == "</script><b>");
}
