// Copyright 2026 The fuserank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <gtest/gtest.h>

#include "fuserank/error.hpp"

// Asserts that stmt throws fuserank::Error carrying exactly `code`.
#define EXPECT_FR_ERROR(stmt, expected_code)                                                   \
  do {                                                                                \
    try {                                                                             \
      stmt;                                                                           \
      ADD_FAILURE() << #stmt " did not throw";                                        \
    } catch (const ::fuserank::Error& e__) {                                          \
      EXPECT_EQ(e__.code(), expected_code) << #stmt ": " << e__.what();                        \
    } catch (const std::exception& e__) {                                             \
      ADD_FAILURE() << #stmt " threw a non-fuserank exception: " << e__.what();       \
    }                                                                                 \
  } while (0)
