#pragma once

#include <string>
#include <vector>

namespace xhate {

// Entry point for the xhate tool; args excludes argv[0].
// Exit codes: 0 ok, 1 usage, 2 data/schema, 3 model/config/capability.
int cli_main(const std::vector<std::string>& args);

}  // namespace xhate
