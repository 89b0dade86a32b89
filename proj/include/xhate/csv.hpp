#pragma once

// Minimal RFC-4180 CSV reader: quoted fields, escaped quotes, CRLF or LF,
// UTF-8 passthrough. First record is the header.

#include <string>

#include "xhate/corpus.hpp"

namespace xhate {

Table parse_csv(const std::string& content);
Table read_csv(const std::string& path);

}  // namespace xhate
