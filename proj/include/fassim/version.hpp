// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

namespace fassim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fassim
