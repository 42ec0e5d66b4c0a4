// Re-records tests/cassettes/sample_run.json from the hand-written responses in
// tests/fixtures/sample_responses.json.
//   record_sample_cassette [cassette-path]

#include "d2d/app/run.hpp"

#include "fake_llm.hpp"
#include "sample_responder.hpp"
#include "test_util.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    using namespace d2d;
    namespace fs = std::filesystem;
    const auto src = testing::source_dir();
    const fs::path cassette = argc > 1 ? fs::path(argv[1]) : src / "tests/cassettes/sample_run.json";
    fs::remove(cassette);

    auto transport = std::make_shared<testing::ScriptedTransport>();
    transport->set_responder(
        testing::sample_responder(nlohmann::json::parse(testing::read_file(src / "tests/fixtures/sample_responses.json"))));

    app::RunConfig config;
    config.mode = llm::Mode::record;
    config.cassette_path = cassette;
    config.knowledge_path = src / "knowledge/stub.json";
    testing::TempDir out;
    config.output_dir = out.path() / "run";

    llm::Gateway gateway(llm::GatewayOptions{llm::Mode::record, config.max_in_flight, cassette}, transport);
    const auto report = app::cmd_run(src / "data/sample/marketing_customers.csv", config, gateway);
    if (report.exit_code != 0) {
        std::cerr << "recording failed: " << *report.error << "\n";
        return 1;
    }
    std::cout << "recorded " << gateway.cassette().size() << " responses into " << cassette.string() << "\n";
    return 0;
}
