// SPDX-License-Identifier: Apache-2.0

#include "comdml/csv.hpp"

#include <cstdio>

namespace comdml {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
    if (!out_) throw Error("cannot open " + path + " for writing");
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw Error(path_ + ": expected " + std::to_string(columns_) + " columns, got " +
                    std::to_string(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw Error("write failed on " + path_);
}

} // namespace comdml
