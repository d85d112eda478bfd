// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "comdml/errors.hpp"

namespace comdml {

// Floats are written with 9 significant digits.
std::string fmt9(double v);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
    std::string path_;
};

} // namespace comdml
