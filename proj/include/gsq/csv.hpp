// Copyright 2026-present the gsq project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gsq {

/// Value of the schema_version column carried by every CSV row.
inline constexpr int kCsvSchemaVersion = 1;

/// Shortest round-trippable decimal, independent of the global locale.
/// Non-finite values print as inf, -inf and nan.
std::string
format_double(double value);

std::string
format_optional(const std::optional<double>& value);

/// Parse a decimal written by format_double (or any strtod-style number).
/// Throws InvalidArgument.
double
parse_double(std::string_view text);

/// RFC 4180 quoting when the field needs it.
std::string
csv_escape(std::string_view field);

class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> header);

    /// Throws InvalidArgument when the field count differs from the header.
    void
    row(const std::vector<std::string>& fields);

    std::size_t
    rows_written() const noexcept {
        return rows_;
    }

private:
    void
    emit(const std::vector<std::string>& fields);

    std::ostream& out_;
    std::size_t columns_;
    std::size_t rows_ = 0;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position; std::nullopt when absent.
    std::optional<std::size_t>
    column(std::string_view name) const;
};

CsvTable
parse_csv(std::string_view text);

/// Throws IoError when the file cannot be read.
CsvTable
read_csv(const std::filesystem::path& path);

}  // namespace gsq
