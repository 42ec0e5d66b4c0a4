#include "d2d/profile/inference.hpp"

#include "d2d/common/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>
#include <unordered_set>

namespace d2d::profile {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool accepted(std::size_t parsed, std::size_t non_null)
{
    return non_null > 0 && parsed * 100 >= static_cast<std::size_t>(kAcceptPercent) * non_null;
}

// Parses digits with optional well-formed thousands groups ("1,234,567").
// Returns the digit string without separators, or nullopt.
std::optional<std::string> strip_grouping(std::string_view s)
{
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.find(',') == std::string_view::npos) {
        for (char c : s) {
            if (!is_digit(c)) {
                return std::nullopt;
            }
        }
        return std::string(s);
    }
    const auto groups = text::split(s, ',');
    std::string out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[i];
        if (i == 0 ? (g.empty() || g.size() > 3) : g.size() != 3) {
            return std::nullopt;
        }
        for (char c : g) {
            if (!is_digit(c)) {
                return std::nullopt;
            }
        }
        out += g;
    }
    return out;
}

bool valid_unit_token(std::string_view t)
{
    if (t.empty() || text::utf8_length(t) > 5) {
        return false;
    }
    for (char c : t) {
        const auto u = static_cast<unsigned char>(c);
        if (is_digit(c) || std::isspace(u) || c == '.' || c == ',' || c == '+' || c == '-' || c == ':' ||
            c == '/') {
            return false;
        }
    }
    return true;
}

int days_in_month(int y, int m)
{
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) {
        return 29;
    }
    return kDays[m - 1];
}

class Scanner {
public:
    explicit Scanner(std::string_view s) : s_(s) {}

    bool done() const { return i_ == s_.size(); }
    char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
    bool eat(char c)
    {
        if (peek() == c && !done()) {
            ++i_;
            return true;
        }
        return false;
    }
    // Reads between min and max digits.
    std::optional<int> digits(std::size_t min, std::size_t max)
    {
        std::size_t n = 0;
        int v = 0;
        while (n < max && i_ < s_.size() && is_digit(s_[i_])) {
            v = v * 10 + (s_[i_] - '0');
            ++i_;
            ++n;
        }
        if (n < min) {
            return std::nullopt;
        }
        return v;
    }
    std::string_view rest() const { return s_.substr(i_); }
    std::size_t pos() const { return i_; }
    void skip(std::size_t n) { i_ += n; }

private:
    std::string_view s_;
    std::size_t i_ = 0;
};

struct Clock {
    int hour = 0;
    int minute = 0;
    int second = 0;
    std::string fraction;
    std::string offset;
};

std::optional<Clock> parse_clock(Scanner& sc, bool allow_offset)
{
    Clock c;
    auto h = sc.digits(2, 2);
    if (!h || !sc.eat(':')) {
        return std::nullopt;
    }
    auto m = sc.digits(2, 2);
    if (!m) {
        return std::nullopt;
    }
    c.hour = *h;
    c.minute = *m;
    if (sc.eat(':')) {
        auto s = sc.digits(2, 2);
        if (!s) {
            return std::nullopt;
        }
        c.second = *s;
        if (sc.eat('.')) {
            const auto start = sc.pos();
            if (!sc.digits(1, 9)) {
                return std::nullopt;
            }
            c.fraction = std::string(sc.rest().data() - (sc.pos() - start), sc.pos() - start);
        }
    }
    if (c.hour > 23 || c.minute > 59 || c.second > 60) {
        return std::nullopt;
    }
    if (allow_offset) {
        if (sc.eat('Z')) {
            c.offset = "Z";
        } else if (sc.peek() == '+' || sc.peek() == '-') {
            const char sign = sc.peek();
            sc.skip(1);
            auto oh = sc.digits(2, 2);
            if (!oh) {
                return std::nullopt;
            }
            sc.eat(':');
            auto om = sc.digits(2, 2);
            if (!om || *oh > 14 || *om > 59) {
                return std::nullopt;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%c%02d:%02d", sign, *oh, *om);
            c.offset = buf;
        }
    }
    return c;
}

std::string canonical(int y, int m, int d, const std::optional<Clock>& clock)
{
    char buf[64];
    if (!clock) {
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d, clock->hour, clock->minute,
                  clock->second);
    std::string out = buf;
    if (!clock->fraction.empty()) {
        out += "." + clock->fraction;
    }
    return out + clock->offset;
}

std::optional<std::string> finish_date(int y, int m, int d, Scanner& sc, bool iso)
{
    if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) {
        return std::nullopt;
    }
    std::optional<Clock> clock;
    if (!sc.done()) {
        if (!(sc.eat('T') || sc.eat(' '))) {
            return std::nullopt;
        }
        clock = parse_clock(sc, iso);
        if (!clock || !sc.done()) {
            return std::nullopt;
        }
    }
    return canonical(y, m, d, clock);
}

std::string top_unit(const std::map<std::string, std::size_t>& counts, std::size_t& count)
{
    std::string best;
    count = 0;
    for (const auto& [token, n] : counts) {
        if (n > count) { // map order makes ties resolve lexicographically
            best = token;
            count = n;
        }
    }
    return best;
}

} // namespace

std::optional<bool> parse_boolean(std::string_view s)
{
    const auto t = text::to_lower(text::trim(s));
    if (t == "true" || t == "yes" || t == "1") {
        return true;
    }
    if (t == "false" || t == "no" || t == "0") {
        return false;
    }
    return std::nullopt;
}

std::optional<std::int64_t> parse_integer(std::string_view s)
{
    auto t = text::trim(s);
    if (!t.empty() && t.front() == '+') {
        t.remove_prefix(1);
        if (!t.empty() && t.front() == '-') {
            return std::nullopt;
        }
    }
    if (t.empty()) {
        return std::nullopt;
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        return std::nullopt;
    }
    return v;
}

std::optional<DecimalParts> parse_decimal(std::string_view s)
{
    auto t = text::trim(s);
    if (t.empty()) {
        return std::nullopt;
    }
    std::string sign;
    auto take_sign = [&] {
        if (!t.empty() && (t.front() == '-' || t.front() == '+') && sign.empty()) {
            if (t.front() == '-') {
                sign = "-";
            }
            t.remove_prefix(1);
            t = text::trim(t);
            return true;
        }
        return false;
    };
    take_sign();

    // leading unit: everything before the first digit or dot
    std::size_t lead_end = 0;
    while (lead_end < t.size() && !is_digit(t[lead_end]) && t[lead_end] != '.' && t[lead_end] != '-' &&
           t[lead_end] != '+') {
        ++lead_end;
    }
    const auto lead_raw = t.substr(0, lead_end);
    std::string lead(text::trim(lead_raw));
    // word prefixes must be spaced off ("USD 12"); glued ones are identifiers ("C001")
    if (!lead.empty() && std::any_of(lead.begin(), lead.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); }) &&
        !std::isspace(static_cast<unsigned char>(lead_raw.back()))) {
        return std::nullopt;
    }
    t.remove_prefix(lead_end);
    if (!lead.empty()) {
        const bool had_sign = !sign.empty();
        if (take_sign() && had_sign) {
            return std::nullopt;
        }
    }

    // numeric body: [digits/commas] [. digits] [exponent]
    std::size_t i = 0;
    while (i < t.size() && (is_digit(t[i]) || t[i] == ',')) {
        ++i;
    }
    const auto int_part = t.substr(0, i);
    std::string_view frac_part;
    bool has_dot = false;
    if (i < t.size() && t[i] == '.') {
        has_dot = true;
        const auto start = ++i;
        while (i < t.size() && is_digit(t[i])) {
            ++i;
        }
        frac_part = t.substr(start, i - start);
    }
    std::string exponent;
    if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < t.size() && (t[j] == '+' || t[j] == '-')) {
            ++j;
        }
        const auto digits_start = j;
        while (j < t.size() && is_digit(t[j])) {
            ++j;
        }
        if (j > digits_start) {
            exponent = "e" + std::string(t.substr(i + 1, j - i - 1));
            i = j;
        }
    }
    std::string digits;
    if (!int_part.empty()) {
        auto stripped = strip_grouping(int_part);
        if (!stripped) {
            return std::nullopt;
        }
        digits = *stripped;
    }
    if (digits.empty() && frac_part.empty()) {
        return std::nullopt;
    }
    if (has_dot && frac_part.empty() && digits.empty()) {
        return std::nullopt;
    }

    std::string trail(text::trim(t.substr(i)));
    if (!lead.empty() && !trail.empty()) {
        return std::nullopt;
    }
    const std::string& unit = lead.empty() ? trail : lead;
    if (!unit.empty() && !valid_unit_token(unit)) {
        return std::nullopt;
    }

    std::string literal = sign + (digits.empty() ? "0" : digits);
    if (!frac_part.empty()) {
        literal += "." + std::string(frac_part);
    }
    literal += exponent;
    double value = 0;
    auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), value);
    if (ec != std::errc{} || ptr != literal.data() + literal.size()) {
        return std::nullopt;
    }
    return DecimalParts{value, unit};
}

std::optional<std::string> parse_datetime(std::string_view s)
{
    const auto t = text::trim(s);
    if (t.size() < 7) {
        return std::nullopt;
    }
    Scanner sc(t);
    // year-first: YYYY-MM[-DD[...]] or YYYY/MM/DD
    if (t.size() >= 4 && is_digit(t[0]) && is_digit(t[1]) && is_digit(t[2]) && is_digit(t[3])) {
        const int y = *sc.digits(4, 4);
        char sep = sc.peek();
        if (sep != '-' && sep != '/') {
            return std::nullopt;
        }
        sc.skip(1);
        auto m = sc.digits(2, 2);
        if (!m) {
            return std::nullopt;
        }
        if (sc.done() && sep == '-') {
            if (*m < 1 || *m > 12) {
                return std::nullopt;
            }
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02d", y, *m);
            return std::string(buf);
        }
        if (!sc.eat(sep)) {
            return std::nullopt;
        }
        auto d = sc.digits(2, 2);
        if (!d) {
            return std::nullopt;
        }
        return finish_date(y, *m, *d, sc, true);
    }
    // day-first: D/M/YYYY, D-M-YYYY, D.M.YYYY
    auto d = sc.digits(1, 2);
    if (!d) {
        return std::nullopt;
    }
    const char sep = sc.peek();
    if (sep != '/' && sep != '-' && sep != '.') {
        return std::nullopt;
    }
    sc.skip(1);
    auto m = sc.digits(1, 2);
    if (!m || !sc.eat(sep)) {
        return std::nullopt;
    }
    auto y = sc.digits(4, 4);
    if (!y) {
        return std::nullopt;
    }
    return finish_date(*y, *m, *d, sc, false);
}

InferredColumn infer_type(std::span<const ingest::Cell> cells, std::optional<std::size_t> row_count)
{
    const std::size_t rows = row_count.value_or(cells.size());
    InferredColumn out;
    out.values.assign(cells.size(), std::monostate{});

    std::vector<std::size_t> live; // indices of non-null cells
    live.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].is_null) {
            ++out.source_null_count;
        } else {
            live.push_back(i);
        }
    }
    const std::size_t non_null = live.size();
    if (non_null == 0) {
        out.type = ColumnType::text;
        return out;
    }

    auto commit = [&](ColumnType type, std::size_t parsed) {
        out.type = type;
        out.coerced_null_count = non_null - parsed;
        return out;
    };

    // boolean
    {
        std::size_t parsed = 0;
        std::unordered_set<std::string> tokens;
        for (auto i : live) {
            if (auto b = parse_boolean(cells[i].text)) {
                ++parsed;
                tokens.insert(text::to_lower(text::trim(cells[i].text)));
            }
        }
        if (accepted(parsed, non_null) && tokens.size() <= 2) {
            for (auto i : live) {
                if (auto b = parse_boolean(cells[i].text)) {
                    out.values[i] = *b;
                }
            }
            return commit(ColumnType::boolean, parsed);
        }
    }

    // integer
    {
        std::size_t parsed = 0;
        for (auto i : live) {
            parsed += parse_integer(cells[i].text).has_value() ? 1 : 0;
        }
        if (accepted(parsed, non_null)) {
            for (auto i : live) {
                if (auto v = parse_integer(cells[i].text)) {
                    out.values[i] = *v;
                }
            }
            return commit(ColumnType::integer, parsed);
        }
    }

    // decimal, with lexical unit detection
    {
        std::vector<std::optional<DecimalParts>> parts(cells.size());
        std::map<std::string, std::size_t> unit_counts;
        for (auto i : live) {
            parts[i] = parse_decimal(cells[i].text);
            if (parts[i] && !parts[i]->unit.empty()) {
                ++unit_counts[parts[i]->unit];
            }
        }
        std::size_t unit_hits = 0;
        std::string unit = top_unit(unit_counts, unit_hits);
        const bool has_unit = !unit.empty() && unit_hits * 100 >= static_cast<std::size_t>(kUnitPercent) * non_null;
        std::size_t parsed = 0;
        for (auto i : live) {
            if (parts[i] && (parts[i]->unit.empty() || (has_unit && parts[i]->unit == unit))) {
                ++parsed;
            } else {
                parts[i].reset();
            }
        }
        if (accepted(parsed, non_null)) {
            for (auto i : live) {
                if (parts[i]) {
                    out.values[i] = parts[i]->value;
                }
            }
            if (has_unit) {
                out.unit = unit;
            }
            return commit(ColumnType::decimal, parsed);
        }
    }

    // datetime
    {
        std::vector<std::optional<std::string>> dates(cells.size());
        std::size_t parsed = 0;
        for (auto i : live) {
            dates[i] = parse_datetime(cells[i].text);
            parsed += dates[i].has_value() ? 1 : 0;
        }
        if (accepted(parsed, non_null)) {
            for (auto i : live) {
                if (dates[i]) {
                    out.values[i] = std::move(*dates[i]);
                }
            }
            return commit(ColumnType::datetime, parsed);
        }
    }

    // categorical vs text: every non-null cell "parses" as its trimmed text
    std::unordered_set<std::string_view> distinct;
    for (auto i : live) {
        distinct.insert(text::trim(cells[i].text));
    }
    const bool categorical = distinct.size() <= kCategoricalMinCap || distinct.size() * 20 <= rows;
    for (auto i : live) {
        out.values[i] = std::string(text::trim(cells[i].text));
    }
    return commit(categorical ? ColumnType::categorical : ColumnType::text, non_null);
}

InferredColumn infer_type(const std::vector<std::string>& cells)
{
    std::vector<ingest::Cell> raw;
    raw.reserve(cells.size());
    for (const auto& c : cells) {
        raw.push_back({c, false});
    }
    return infer_type(raw);
}

std::vector<ingest::Cell> column_cells(const ingest::RawTable& table, std::size_t column)
{
    std::vector<ingest::Cell> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        out.push_back(row[column]);
    }
    return out;
}

namespace {

TypedColumn type_one(const ingest::RawTable& table, std::size_t j)
{
    const auto cells = column_cells(table, j);
    auto inferred = infer_type(cells, table.row_count());
    TypedColumn col;
    col.name = table.column_names[j];
    col.type = inferred.type;
    col.values = std::move(inferred.values);
    col.unit = std::move(inferred.unit);
    col.source_null_count = inferred.source_null_count;
    col.coerced_null_count = inferred.coerced_null_count;
    return col;
}

} // namespace

TypedTable type_table(const ingest::RawTable& table)
{
    TypedTable out;
    out.row_count = table.row_count();
    out.columns.resize(table.column_count());
    const auto n = static_cast<std::ptrdiff_t>(table.column_count());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        out.columns[static_cast<std::size_t>(j)] = type_one(table, static_cast<std::size_t>(j));
    }
    return out;
}

TypedTable type_table_serial(const ingest::RawTable& table)
{
    TypedTable out;
    out.row_count = table.row_count();
    for (std::size_t j = 0; j < table.column_count(); ++j) {
        out.columns.push_back(type_one(table, j));
    }
    return out;
}

} // namespace d2d::profile
