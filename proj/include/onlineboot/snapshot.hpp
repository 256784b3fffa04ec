#pragma once

#include <iosfwd>

#include "onlineboot/engine.hpp"

namespace onlineboot {

/// Current snapshot format version. Readers reject other versions.
inline constexpr int kSnapshotVersion = 1;

/**
 * Writes the complete ensemble state as versioned line-oriented text.
 *
 * Floating-point values are written as hexadecimal literals, so a loaded
 * ensemble continues bit-identically to the one that was saved.
 */
void save_snapshot(const Ensemble& ensemble, std::ostream& out);

/// Throws std::runtime_error on a malformed or unsupported snapshot.
Ensemble load_snapshot(std::istream& in);

}  // namespace onlineboot
