#pragma once

#include "evlog/catalog.hpp"
#include "evlog/layout.hpp"
#include "evlog/logstore.hpp"
#include "evlog/metadata.hpp"

namespace evlog {

/// E(f) read from each filter's index entry; A(f) from the catalog. Throws
/// CorruptIndex when an indexed address is invalid or points at a row whose
/// slot disagrees.
ProfileMetadata profile(const LogStore& store, const StorageLayout& layout, const Catalog& catalog);

}  // namespace evlog
