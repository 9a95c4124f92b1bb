#pragma once

#include <stdexcept>
#include <string>

namespace kipps {

// Process exit codes mirror these values (0 = success).
enum class Errc : int {
  config = 2,
  data = 3,
  budget_exhausted = 4,
  fingerprint = 5,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail_config(const std::string& msg) { throw Error(Errc::config, msg); }
[[noreturn]] inline void fail_data(const std::string& msg) { throw Error(Errc::data, msg); }

}  // namespace kipps
