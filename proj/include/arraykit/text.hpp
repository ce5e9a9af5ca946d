#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arraykit::text {

/// Shortest decimal string that parses back to exactly `v`; locale-independent.
/// NaN formats as "NA".
std::string format_double(double v);

/// `v` rounded to `digits` significant digits in general notation.
std::string format_sig(double v, int digits = 6);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string> &parts, std::string_view sep);

/// Splits one delimited record; fields may be wrapped in double quotes with
/// "" as an escaped quote. Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_record(std::string_view line, char sep);

/// RFC 4180 style quoting: quotes the field only when needed.
std::string csv_quote(std::string_view field, char sep = ',');

std::string html_escape(std::string_view s);

/// Header line plus one line per row, comma separated, LF line endings.
std::string csv_document(const std::vector<std::string> &header, const std::vector<std::vector<std::string>> &rows);
/// Parses a document written by csv_document (no embedded newlines).
std::vector<std::vector<std::string>> parse_csv(std::string_view doc, char sep = ',');
/// Standalone HTML page holding one table; styles are inline.
std::string html_document(const std::string &title, const std::vector<std::string> &header,
                          const std::vector<std::vector<std::string>> &rows);

/// Reads a whole file; throws DataError when it cannot be opened.
std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view contents);

/// Lines of `contents`, CR/LF tolerant; a trailing newline does not
/// produce an empty final line.
std::vector<std::string> lines(std::string_view contents);

}  // namespace arraykit::text
