#pragma once

#include "d2d/common/error.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace d2d::ingest {

struct IngestOptions {
    char delimiter = ',';
    char quote = '"';
    // Compared case-insensitively against the trimmed cell text.
    std::vector<std::string> null_markers{"", "NA", "N/A", "null"};
};

struct Cell {
    std::string text;
    bool is_null = false;

    friend bool operator==(const Cell&, const Cell&) = default;
};

struct HeaderRename {
    std::string original;
    std::string renamed;

    friend bool operator==(const HeaderRename&, const HeaderRename&) = default;
};

// Rectangular table of untyped cells. Every row has column_names.size() cells
// and there is at least one data row.
struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<Cell>> rows;
    std::string source_path;
    char delimiter = ',';
    std::vector<HeaderRename> renamed_headers;

    std::size_t row_count() const { return rows.size(); }
    std::size_t column_count() const { return column_names.size(); }

    friend bool operator==(const RawTable&, const RawTable&) = default;
};

class IngestError : public Error {
public:
    using Error::Error;
};

class IoError : public IngestError {
public:
    using IngestError::IngestError;
};

class MalformedRow : public IngestError {
public:
    MalformedRow(std::size_t row_index, std::size_t line, std::size_t cells, std::size_t expected);

    // 0-based index among data rows (the header is not counted).
    std::size_t row_index() const { return row_index_; }
    // 1-based physical line where the record starts.
    std::size_t line() const { return line_; }

private:
    std::size_t row_index_;
    std::size_t line_;
};

class EmptyTable : public IngestError {
public:
    using IngestError::IngestError;
};

RawTable load_table(const std::filesystem::path& path, const IngestOptions& options = {});

// Parses delimited text already in memory; `source_path` is recorded verbatim.
RawTable parse_table(std::string_view text, const IngestOptions& options = {}, std::string source_path = {});

// Serializes back to delimited text, quoting only where required.
std::string write_table(const RawTable& table, char quote = '"');

bool is_null_marker(std::string_view cell, const std::vector<std::string>& markers);

} // namespace d2d::ingest
