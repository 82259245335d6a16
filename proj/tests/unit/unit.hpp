#pragma once

#include <doctest.h>

#include <algorithm>
#include <cmath>

#define CHECK_NEAR(actual, expected, tol)                                                        \
  do {                                                                                          \
    const double regir_a_ = (actual);                                                           \
    const double regir_e_ = (expected);                                                         \
    CHECK_MESSAGE(std::abs(regir_a_ - regir_e_) <= (tol), regir_a_ << " vs " << regir_e_);      \
  } while (false)

#define CHECK_REL(actual, expected, tol)                                                         \
  do {                                                                                          \
    const double regir_a_ = (actual);                                                           \
    const double regir_e_ = (expected);                                                         \
    CHECK_MESSAGE(std::abs(regir_a_ - regir_e_) <= (tol) * std::max(std::abs(regir_a_), std::abs(regir_e_)), \
                  regir_a_ << " vs " << regir_e_);                                              \
  } while (false)
