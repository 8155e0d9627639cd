#pragma once

#include <gtest/gtest.h>

#include "obdaml/hierarchy.hpp"

#define EXPECT_ERRC(stmt, errc)                                              \
  do {                                                                       \
    try {                                                                    \
      stmt;                                                                  \
      ADD_FAILURE() << "expected " << obdaml::to_string(errc) << ", no throw"; \
    } catch (const obdaml::Error& e_) {                                      \
      EXPECT_EQ(e_.code(), errc) << e_.what();                               \
    }                                                                        \
  } while (0)

inline obdaml::ClassCode operator""_c(const char* s, std::size_t) { return obdaml::ClassCode::parse(s); }
