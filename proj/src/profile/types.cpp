#include "d2d/profile/types.hpp"

#include "d2d/common/text.hpp"

#include <array>

namespace d2d::profile {

namespace {
constexpr std::array<std::string_view, 6> kTypeNames{"boolean", "integer", "decimal", "datetime", "categorical", "text"};
}

std::string_view to_string(ColumnType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<ColumnType> column_type_from_string(std::string_view s)
{
    for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
        if (kTypeNames[i] == s) {
            return static_cast<ColumnType>(i);
        }
    }
    return std::nullopt;
}

bool is_numeric(ColumnType t) { return t == ColumnType::integer || t == ColumnType::decimal; }

bool is_discrete(ColumnType t) { return t == ColumnType::categorical || t == ColumnType::boolean; }

bool is_ordered(ColumnType t) { return is_numeric(t) || t == ColumnType::datetime; }

std::string value_text(const Value& v)
{
    struct Visitor {
        std::string operator()(std::monostate) const { return {}; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return text::format_number(d); }
        std::string operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor{}, v);
}

const TypedColumn* TypedTable::find(std::string_view name) const
{
    for (const auto& c : columns) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

const ColumnProfile* TableProfile::find(std::string_view name) const
{
    for (const auto& c : columns) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

} // namespace d2d::profile
