// Shared helpers for the test binaries.
#pragma once

#include <cstdlib>
#include <string>

#include "qtml/eigenform.hpp"

namespace testutil {

// Coefficient cache shared by all test binaries.  Override with
// QTML_CACHE_DIR to reuse a prewarmed cache; tables are built on a miss.
inline std::string cache_dir() {
    if (const char* e = std::getenv("QTML_CACHE_DIR")) return e;
    return "qtml_cache";
}

inline qtml::eigenform::EigenformTable table(int kappa, std::uint64_t n_max) {
    return qtml::eigenform::eigenform_table_cached(kappa, n_max, cache_dir());
}

}  // namespace testutil
