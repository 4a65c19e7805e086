#include "dsforge/llm.hpp"

#include <fstream>

#include "dsforge/json_io.hpp"
#include "http_util.hpp"

namespace dsforge {

InFlightLimiter::InFlightLimiter(int max_in_flight) : max_(max_in_flight) {
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be ≥ 1");
}

InFlightLimiter::Slot InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return active_ < max_; });
  ++active_;
  peak_ = std::max(peak_, active_);
  return Slot(*this);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

int InFlightLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

FixtureLlmBackend::FixtureLlmBackend(std::map<std::string, std::string> responses,
                                     std::optional<std::string> fallback)
    : responses_(std::move(responses)), fallback_(std::move(fallback)) {}

FixtureLlmBackend FixtureLlmBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open LLM fixture '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error&) {
    throw SchemaError("LLM fixture '" + path.string() + "' is not valid JSON");
  }
  std::map<std::string, std::string> responses;
  try {
    responses = require_field(j, "responses", "LLM fixture").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError("LLM fixture: 'responses' must map query strings to response strings");
  }
  std::optional<std::string> fallback;
  if (auto it = j.find("default"); it != j.end() && it->is_string()) fallback = it->get<std::string>();
  return FixtureLlmBackend(std::move(responses), std::move(fallback));
}

std::string FixtureLlmBackend::complete(const std::string& query) {
  if (auto it = responses_.find(query); it != responses_.end()) return it->second;
  if (fallback_) return *fallback_;
  throw LlmError("no recorded response for query '" + query + "'");
}

HttpLlmBackend::HttpLlmBackend(HttpLlmOptions opts) : opts_(std::move(opts)), limiter_(opts_.max_in_flight) {
  detail::split_url(opts_.endpoint);  // validate early
}

std::string HttpLlmBackend::complete(const std::string& query) {
  const auto url = detail::split_url(opts_.endpoint);
  const Json body{{"model", opts_.model},
                  {"messages", Json::array({Json{{"role", "user"}, {"content", query}}})}};
  auto slot = limiter_.acquire();
  httplib::Client cli(url.origin);
  detail::set_timeouts(cli, opts_.timeout_seconds);
  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);
  auto res = cli.Post(url.path, headers, body.dump(), "application/json");
  if (!res) throw LlmError("LLM request to " + opts_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw LlmError("LLM endpoint returned HTTP " + std::to_string(res->status));
  try {
    const Json reply = Json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw LlmError("LLM endpoint returned an unexpected payload");
  }
}

std::unique_ptr<LlmBackend> make_llm_backend(const LlmSettings& s) {
  if (s.kind == "fixture")
    return std::make_unique<FixtureLlmBackend>(FixtureLlmBackend::load(s.fixture_path));
  if (s.kind == "http") {
    HttpLlmOptions o;
    o.endpoint = s.endpoint;
    o.model = s.model;
    o.api_key = detail::env_or_empty(s.api_key_env);
    o.max_in_flight = s.max_in_flight;
    return std::make_unique<HttpLlmBackend>(std::move(o));
  }
  throw InvalidArgument("unknown LLM backend kind '" + s.kind + "'");
}

}  // namespace dsforge
