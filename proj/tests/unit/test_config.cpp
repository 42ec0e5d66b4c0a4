#include "d2d/app/config.hpp"
#include "d2d/app/toml.hpp"
#include "d2d/common/error.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cstdlib>

using namespace d2d;
using app::Stage;
using nlohmann::json;

namespace {

// Sets or clears D2D_API_KEY for one scope.
class ApiKeyScope {
public:
    explicit ApiKeyScope(const char* value)
    {
        if (const char* old = std::getenv("D2D_API_KEY")) {
            saved_ = old;
        }
        if (value != nullptr) {
            ::setenv("D2D_API_KEY", value, 1);
        } else {
            ::unsetenv("D2D_API_KEY");
        }
    }
    ~ApiKeyScope()
    {
        if (saved_) {
            ::setenv("D2D_API_KEY", saved_->c_str(), 1);
        } else {
            ::unsetenv("D2D_API_KEY");
        }
    }

private:
    std::optional<std::string> saved_;
};

} // namespace

TEST_CASE("toml subset parses tables, strings, numbers and arrays")
{
    const auto doc = app::parse_toml(R"(# run settings
model_id = "gpt-4o"   # trailing comment
n_max = 1_0
ratio = 2.5e-1
"quoted key" = 'C:\raw\path'
flag = true
list = [1, 2, "three", false]
escaped = "tab\there \u00e9 \"q\""

[temperatures]
judge = 0.0
expert.note = "dotted"

[a.b]
c = -3
)");
    CHECK(doc["model_id"] == "gpt-4o");
    CHECK(doc["n_max"] == 10);
    CHECK(doc["ratio"].get<double>() == 0.25);
    CHECK(doc["quoted key"] == "C:\\raw\\path");
    CHECK(doc["flag"] == true);
    CHECK(doc["list"] == json::parse(R"([1, 2, "three", false])"));
    CHECK(doc["escaped"] == "tab\there \xC3\xA9 \"q\"");
    CHECK(doc["temperatures"]["judge"].get<double>() == 0.0);
    CHECK(doc["temperatures"]["expert"]["note"] == "dotted");
    CHECK(doc["a"]["b"]["c"] == -3);
}

TEST_CASE("toml errors name the line")
{
    auto line_of = [](const std::string& text) -> std::string {
        try {
            app::parse_toml(text);
        } catch (const ConfigError& e) {
            return e.what();
        }
        return "no error";
    };
    CHECK(line_of("a = 1\na = 2\n").find("line 2") != std::string::npos);
    CHECK(line_of("a = 1\n\nb = \n").find("line 3") != std::string::npos);
    CHECK(line_of("x = \"open\n").find("line 1") != std::string::npos);
    CHECK(line_of("[[arr]]\n").find("line 1") != std::string::npos);
    CHECK(line_of("just words\n").find("line 1") != std::string::npos);
    CHECK(line_of("[t]\nk = 1\n[t]\n").find("line 3") != std::string::npos);
}

TEST_CASE("defaults are the documented ones")
{
    const app::RunConfig c;
    CHECK(c.model_id == "gpt-4o");
    CHECK(c.n_max == 3);
    CHECK(c.threshold == 4);
    CHECK(c.k_experts == 3);
    CHECK(c.max_charts == 5);
    CHECK(c.geval_samples == 5);
    CHECK(c.mode == llm::Mode::replay);
    CHECK(c.temperature(Stage::generator) == 0.7);
    CHECK(c.temperature(Stage::judge) == 0.2);
    CHECK(c.temperature(Stage::geval) == 1.0);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("command line beats file beats default, field by field")
{
    testing::TempDir dir;
    testing::write_file(dir / "d2d.toml", R"(
model_id = "file-model"
n_max = 5
threshold = 3
seed = 7
cassette = "tapes/run.json"

[temperatures]
generator = 0.9
judge = 0.1
)");
    app::ConfigOverrides cli;
    cli.n_max = 2;
    cli.temperatures[Stage::judge] = 0.0;
    cli.judge_model_id = "cli-judge";
    const auto c = app::resolve_config(dir / "d2d.toml", cli);
    CHECK(c.model_id == "file-model");        // file
    CHECK(c.n_max == 2);                      // cli over file
    CHECK(c.threshold == 3);                  // file
    CHECK(c.k_experts == 3);                  // default
    CHECK(c.seed == 7);                       // file
    CHECK(c.temperature(Stage::generator) == 0.9);
    CHECK(c.temperature(Stage::judge) == 0.0);
    CHECK(c.temperature(Stage::expert) == 0.7);
    CHECK(c.cassette_path == dir.path() / "tapes/run.json");
    CHECK(c.stage_model(Stage::judge).model_id == "cli-judge");
    CHECK(c.stage_model(Stage::geval).model_id == "cli-judge");
    CHECK(c.stage_model(Stage::generator).model_id == "file-model");

    const auto no_file = app::resolve_config(std::nullopt, cli);
    CHECK(no_file.model_id == "gpt-4o");
    CHECK(no_file.n_max == 2);
}

TEST_CASE("unknown keys and bad values are config errors")
{
    testing::TempDir dir;
    auto load = [&](const std::string& body) {
        testing::write_file(dir / "c.toml", body);
        return app::resolve_config(dir / "c.toml", {});
    };
    CHECK_THROWS_AS(load("modle_id = \"x\"\n"), ConfigError);
    CHECK_THROWS_AS(load("threshold = 5\n"), ConfigError);
    CHECK_THROWS_AS(load("threshold = 0\n"), ConfigError);
    CHECK_THROWS_AS(load("n_max = 0\n"), ConfigError);
    CHECK_THROWS_AS(load("k_experts = 0\n"), ConfigError);
    CHECK_THROWS_AS(load("mode = \"sometimes\"\n"), ConfigError);
    CHECK_THROWS_AS(load("n_max = \"three\"\n"), ConfigError);
    CHECK_THROWS_AS(load("[temperatures]\njudge = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(load("[temperatures]\nnarrator = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(app::resolve_config(dir / "missing.toml", {}), ConfigError);
}

TEST_CASE("config round-trips through the manifest form")
{
    app::RunConfig c;
    c.model_id = "m";
    c.judge_model_id = "j";
    c.temperatures[Stage::reflector] = 0.4;
    c.n_max = 4;
    c.seed = 11;
    const auto back = app::config_from_json(json::parse(app::to_json(c).dump()));
    CHECK(back.model_id == "m");
    CHECK(back.judge_model_id == "j");
    CHECK(back.temperature(Stage::reflector) == 0.4);
    CHECK(back.n_max == 4);
    CHECK(back.seed == 11);
    CHECK(app::config_hash(back) == app::config_hash(c));
}

TEST_CASE("config hash ignores where and how, not what")
{
    app::RunConfig a;
    auto b = a;
    b.output_dir = "/elsewhere";
    b.mode = llm::Mode::record;
    b.cassette_path = "/tmp/x.json";
    b.max_in_flight = 9;
    CHECK(app::config_hash(a) == app::config_hash(b));
    auto c = a;
    c.temperatures[Stage::expert] = 0.5;
    CHECK(app::config_hash(a) != app::config_hash(c));
    auto d = a;
    d.seed = 43;
    CHECK(app::config_hash(a) != app::config_hash(d));
    CHECK(app::config_hash(a).size() == 12);
}

TEST_CASE("run preconditions")
{
    testing::TempDir dir;
    app::RunConfig live;
    live.mode = llm::Mode::live;
    {
        ApiKeyScope none(nullptr);
        CHECK_THROWS_AS(app::check_run_preconditions(live), ConfigError);
    }
    {
        ApiKeyScope key("sk-test");
        CHECK_NOTHROW(app::check_run_preconditions(live));
        auto record = live;
        record.mode = llm::Mode::record;
        CHECK_THROWS_AS(app::check_run_preconditions(record), ConfigError);
        record.cassette_path = dir / "new.json";
        CHECK_NOTHROW(app::check_run_preconditions(record));
    }
    {
        ApiKeyScope none(nullptr);
        app::RunConfig replay;
        CHECK_THROWS_AS(app::check_run_preconditions(replay), ConfigError);
        replay.cassette_path = dir / "absent.json";
        CHECK_THROWS_AS(app::check_run_preconditions(replay), ConfigError);
        testing::write_file(dir / "tape.json", "{}");
        replay.cassette_path = dir / "tape.json";
        CHECK_NOTHROW(app::check_run_preconditions(replay));
    }
}
