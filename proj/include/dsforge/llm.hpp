#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <string>

#include "dsforge/core.hpp"
#include "dsforge/error.hpp"

namespace dsforge {

/// Caps the number of concurrent holders; RAII slots via acquire().
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int max_in_flight);

  class Slot {
   public:
    explicit Slot(InFlightLimiter& l) : limiter_(&l) {}
    Slot(Slot&& o) noexcept : limiter_(std::exchange(o.limiter_, nullptr)) {}
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;
    Slot& operator=(Slot&&) = delete;
    ~Slot() {
      if (limiter_) limiter_->release();
    }

   private:
    InFlightLimiter* limiter_;
  };

  [[nodiscard]] Slot acquire();
  int max_in_flight() const noexcept { return max_; }
  /// Highest concurrent occupancy observed so far.
  int peak() const;

 private:
  void release();

  const int max_;
  int active_ = 0;
  int peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

class LlmError : public Error {
 public:
  using Error::Error;
};

/// Text-in/text-out chat model. Implementations must accept concurrent calls.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const std::string& query) = 0;
  virtual std::string name() const = 0;
};

/// Replays recorded responses. Fixture file: JSON object {"responses": {query: response},
/// "default": response?}. Unknown queries without a default throw LlmError.
class FixtureLlmBackend : public LlmBackend {
 public:
  explicit FixtureLlmBackend(std::map<std::string, std::string> responses,
                             std::optional<std::string> fallback = std::nullopt);
  static FixtureLlmBackend load(const std::filesystem::path& path);

  std::string complete(const std::string& query) override;
  std::string name() const override { return "fixture"; }

 private:
  std::map<std::string, std::string> responses_;
  std::optional<std::string> fallback_;
};

struct HttpLlmOptions {
  std::string endpoint;  // full URL of a chat-completions route
  std::string model = "gpt-3.5-turbo";
  std::string api_key;   // sent as a bearer token when non-empty
  int max_in_flight = 2;
  double timeout_seconds = 60.0;
};

/// Chat-completion client: POSTs {"model", "messages": [{"role": "user", "content"}]} and
/// returns choices[0].message.content.
class HttpLlmBackend : public LlmBackend {
 public:
  explicit HttpLlmBackend(HttpLlmOptions opts);
  std::string complete(const std::string& query) override;
  std::string name() const override { return "http"; }
  const InFlightLimiter& limiter() const noexcept { return limiter_; }

 private:
  HttpLlmOptions opts_;
  InFlightLimiter limiter_;
};

/// Builds the backend selected by `settings`, reading the API key from its environment variable.
std::unique_ptr<LlmBackend> make_llm_backend(const LlmSettings& settings);

}  // namespace dsforge
