// Copyright 2026 The cpfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace cpfl {

inline constexpr std::string_view kToolVersion = "0.1.0";

} // namespace cpfl
