#pragma once

// Private helpers shared by the HTTP-backed clients.

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>

#include "dsforge/error.hpp"

namespace dsforge::detail {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

inline UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint '" + url + "' lacks a scheme");
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw InvalidArgument("endpoint '" + url + "' must use http or https");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string env_or_empty(const std::string& var) {
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  return v ? std::string(v) : std::string();
}

inline void set_timeouts(httplib::Client& cli, double seconds) {
  const auto us = std::chrono::microseconds(static_cast<long long>(seconds * 1e6));
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(us).count(),
                             static_cast<long>(us.count() % 1000000));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(us).count(),
                       static_cast<long>(us.count() % 1000000));
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(us).count(),
                        static_cast<long>(us.count() % 1000000));
}

}  // namespace dsforge::detail
