#include "d2d/render/dashboard.hpp"

#include "d2d/common/text.hpp"

#include <sstream>
#include <stdexcept>

namespace d2d::render {

using text::html_escape;

std::string script_safe_json(const nlohmann::ordered_json& doc)
{
    const auto raw = doc.dump(2);
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        // "<\/" is the same JSON string but cannot close the script element
        if (raw[i] == '<' && i + 1 < raw.size() && (raw[i + 1] == '/' || raw[i + 1] == '!')) {
            out += raw[i + 1] == '/' ? "<\\/" : "\\u003c!";
            ++i;
            continue;
        }
        out.push_back(raw[i]);
    }
    return out;
}

namespace {

const char* kStyle = R"(body { font-family: system-ui, -apple-system, "Segoe UI", sans-serif; margin: 0; color: #222; background: #f6f7f9; }
header { background: #1f2d3d; color: #fff; padding: 24px 32px; }
header h1 { margin: 0 0 8px; font-size: 26px; }
header p { margin: 0; max-width: 60em; line-height: 1.45; }
main { display: grid; grid-template-columns: repeat(auto-fit, minmax(560px, 1fr)); gap: 24px; padding: 24px 32px; }
section.chart { background: #fff; border-radius: 6px; padding: 16px 20px; box-shadow: 0 1px 3px rgba(0,0,0,.12); }
section.chart h2 { font-size: 17px; margin: 0 0 6px; }
section.chart .insight { color: #555; margin: 0 0 12px; font-size: 14px; }
section.chart ul.annotations { margin: 10px 0 0; padding-left: 18px; font-size: 13px; color: #444; }
footer { padding: 12px 32px 24px; font-size: 12px; color: #666; }
)";

const char* kEmbedScript = R"(document.querySelectorAll('script[type="application/json"][data-chart]').forEach(function (node) {
  var target = document.getElementById(node.getAttribute('data-chart'));
  vegaEmbed(target, JSON.parse(node.textContent), {actions: false}).catch(function (err) {
    target.textContent = 'Chart failed to render: ' + err;
  });
});
)";

} // namespace

Dashboard assemble_dashboard(const std::vector<ChartSpec>& specs, const insight::InsightBundle& bundle,
                             const semantics::DomainFinding& domain, const std::vector<chart::ChartPlan>& plans,
                             const std::string& run_digest)
{
    if (specs.empty()) {
        throw std::invalid_argument("a dashboard needs at least one chart");
    }
    std::ostringstream os;
    os << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
       << "<meta name=\"viewport\" content=\"width=device-width, initial-scale=1\">\n"
       << "<title>" << html_escape(domain.label) << " dashboard</title>\n"
       << "<script src=\"" << kVegaScript << "\"></script>\n"
       << "<script src=\"" << kVegaLiteScript << "\"></script>\n"
       << "<script src=\"" << kVegaEmbedScript << "\"></script>\n"
       << "<style>\n" << kStyle << "</style>\n</head>\n<body>\n"
       << "<header>\n<h1>" << html_escape(domain.label) << "</h1>\n<p>" << html_escape(domain.definition)
       << "</p>\n</header>\n<main>\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        if (spec.plan_ref >= plans.size()) {
            throw std::out_of_range("chart spec references a missing plan");
        }
        const auto& plan = plans[spec.plan_ref];
        const auto id = "chart-" + std::to_string(i + 1);
        os << "<section class=\"chart\" id=\"section-" << (i + 1) << "\">\n"
           << "<h2>" << html_escape(plan.key_insight_narrative) << "</h2>\n";
        const auto& items = bundle.bucket(plan.insight_ref.lens);
        if (plan.insight_ref.index < items.size()) {
            os << "<p class=\"insight\">" << html_escape(insight::to_string(plan.insight_ref.lens)) << " insight: "
               << html_escape(items[plan.insight_ref.index].statement) << "</p>\n";
        }
        os << "<div class=\"chart-container\" id=\"" << id << "\"></div>\n"
           << "<script type=\"application/json\" data-chart=\"" << id << "\">\n"
           << script_safe_json(spec.grammar_doc) << "\n</script>\n";
        if (!plan.annotations.empty()) {
            os << "<ul class=\"annotations\">\n";
            for (const auto& a : plan.annotations) {
                os << "<li>" << html_escape(a) << "</li>\n";
            }
            os << "</ul>\n";
        }
        os << "</section>\n";
    }
    os << "</main>\n<footer>Run digest <code>" << html_escape(run_digest) << "</code></footer>\n"
       << "<script>\n" << kEmbedScript << "</script>\n</body>\n</html>\n";
    return {os.str(), specs.size(), domain.label};
}

} // namespace d2d::render
