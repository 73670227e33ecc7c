// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>

#include "cpfl/trainer/training.hpp"

namespace cpfl::train {

/// Text checkpoint: [checkpoint] header, the config sections, the layout
/// table, one [bundle.N] and [trace.N] section per bundle, then [end].
/// Parameter values are written with 17 significant digits.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint read_checkpoint(std::istream& in, std::string_view origin = "<checkpoint>");

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// Throws VersionError, TruncatedError or LayoutError for the respective
/// corruptions, IoError when the file cannot be opened.
[[nodiscard]] Checkpoint load_checkpoint(const std::string& path);

} // namespace cpfl::train
