#pragma once

#include <cstdint>
#include <string>

#include "kipps/rules.hpp"
#include "kipps/schema.hpp"

namespace kipps {

struct FixtureBundle {
  DataTable table;
  RuleSet rules;
};

// Rule-consistent network-flavoured fixture; the generator enforces the
// rules by construction, which makes it the compliance oracle.
// protocol ~ (0.4 DNS, 0.2 NTP, 0.4 HTTP); DNS pins dst_port=53 and
// src_zone=home, NTP pins dst_port=123, HTTP draws dst_port from {80,443};
// bytes is a balanced two-mode mixture.
FixtureBundle builtin_fixture(const std::string& name, std::size_t n, std::uint64_t seed);

}  // namespace kipps
