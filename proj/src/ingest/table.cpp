#include "d2d/ingest/table.hpp"

#include "d2d/common/text.hpp"

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace d2d::ingest {

namespace {

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

class RecordReader {
public:
    RecordReader(std::string_view text, char delimiter, char quote)
        : text_(text), delimiter_(delimiter), quote_(quote)
    {
        if (text_.substr(0, 3) == "\xEF\xBB\xBF") {
            pos_ = 3;
        }
    }

    // Returns false at end of input. Physically blank lines are skipped.
    bool next(Record& out)
    {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '\n') {
                ++pos_;
                ++line_;
                continue;
            }
            if (c == '\r' && (pos_ + 1 >= text_.size() || text_[pos_ + 1] == '\n')) {
                pos_ += (pos_ + 1 < text_.size()) ? 2 : 1;
                ++line_;
                continue;
            }
            break;
        }
        if (pos_ >= text_.size()) {
            return false;
        }
        out.fields.clear();
        out.line = line_;
        std::string field;
        bool in_quotes = false;
        bool was_quoted = false;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (in_quotes) {
                if (c == quote_) {
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == quote_) {
                        field.push_back(quote_);
                        pos_ += 2;
                        continue;
                    }
                    in_quotes = false;
                    ++pos_;
                    continue;
                }
                if (c == '\n') {
                    ++line_;
                }
                field.push_back(c);
                ++pos_;
                continue;
            }
            if (c == quote_ && !was_quoted && text::trim(field).empty()) {
                field.clear();
                in_quotes = true;
                was_quoted = true;
                ++pos_;
                continue;
            }
            if (c == delimiter_) {
                out.fields.push_back(std::move(field));
                field.clear();
                was_quoted = false;
                ++pos_;
                continue;
            }
            if (c == '\r' || c == '\n') {
                break;
            }
            field.push_back(c);
            ++pos_;
        }
        if (in_quotes) {
            throw IoError("unterminated quoted field starting on line " + std::to_string(out.line));
        }
        out.fields.push_back(std::move(field));
        return true;
    }

private:
    std::string_view text_;
    char delimiter_;
    char quote_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

std::vector<std::string> disambiguate(const std::vector<std::string>& raw, std::vector<HeaderRename>& renames)
{
    std::vector<std::string> names;
    names.reserve(raw.size());
    std::set<std::string> taken;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::string base(text::trim(raw[i]));
        if (base.empty()) {
            base = "column_" + std::to_string(i + 1);
        }
        std::string name = base;
        for (int suffix = 2; taken.count(name) != 0; ++suffix) {
            name = base + "_" + std::to_string(suffix);
        }
        if (name != raw[i]) {
            renames.push_back({raw[i], name});
        }
        taken.insert(name);
        names.push_back(std::move(name));
    }
    return names;
}

bool needs_quoting(std::string_view s, char delimiter, char quote)
{
    if (s != text::trim(s)) {
        return true;
    }
    for (char c : s) {
        if (c == delimiter || c == quote || c == '\n' || c == '\r') {
            return true;
        }
    }
    return false;
}

} // namespace

MalformedRow::MalformedRow(std::size_t row_index, std::size_t line, std::size_t cells, std::size_t expected)
    : IngestError("malformed row " + std::to_string(row_index) + " (line " + std::to_string(line) + "): " +
                  std::to_string(cells) + " cells, header has " + std::to_string(expected)),
      row_index_(row_index),
      line_(line)
{
}

bool is_null_marker(std::string_view cell, const std::vector<std::string>& markers)
{
    const auto t = text::trim(cell);
    for (const auto& m : markers) {
        if (text::iequals(t, text::trim(m))) {
            return true;
        }
    }
    return false;
}

RawTable parse_table(std::string_view text, const IngestOptions& options, std::string source_path)
{
    if (!text::is_valid_utf8(text)) {
        throw IoError("input is not valid UTF-8: " + source_path);
    }
    RecordReader reader(text, options.delimiter, options.quote);
    Record header;
    if (!reader.next(header)) {
        throw EmptyTable("no header line: " + source_path);
    }

    RawTable table;
    table.source_path = std::move(source_path);
    table.delimiter = options.delimiter;
    table.column_names = disambiguate(header.fields, table.renamed_headers);

    Record rec;
    while (reader.next(rec)) {
        if (rec.fields.size() != table.column_names.size()) {
            throw MalformedRow(table.rows.size(), rec.line, rec.fields.size(), table.column_names.size());
        }
        std::vector<Cell> row;
        row.reserve(rec.fields.size());
        for (auto& f : rec.fields) {
            const bool null = is_null_marker(f, options.null_markers);
            row.push_back(Cell{std::move(f), null});
        }
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty()) {
        throw EmptyTable("table has a header but no data rows: " + table.source_path);
    }
    return table;
}

RawTable load_table(const std::filesystem::path& path, const IngestOptions& options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failure on " + path.string());
    }
    return parse_table(bytes, options, path.string());
}

std::string write_table(const RawTable& table, char quote)
{
    const char delim = table.delimiter;
    auto emit = [&](std::ostringstream& os, std::string_view s, bool force) {
        if (force || needs_quoting(s, delim, quote)) {
            os << quote;
            for (char c : s) {
                if (c == quote) {
                    os << quote;
                }
                os << c;
            }
            os << quote;
        } else {
            os << s;
        }
    };
    std::ostringstream os;
    // a lone empty field would otherwise serialize as a blank line
    const bool single = table.column_names.size() == 1;
    for (std::size_t i = 0; i < table.column_names.size(); ++i) {
        if (i > 0) {
            os << delim;
        }
        emit(os, table.column_names[i], single && table.column_names[i].empty());
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                os << delim;
            }
            emit(os, row[i].text, single && row[i].text.empty());
        }
        os << '\n';
    }
    return os.str();
}

} // namespace d2d::ingest
