#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dsforge/core.hpp"
#include "dsforge/error.hpp"
#include "dsforge/image.hpp"

namespace dsforge {

struct GenRequest {
  Prompt prompt;
  int width = 768;
  int height = 768;
  std::uint64_t seed = 0;
  int index = 0;  // sample index within the prompt

  /// Empty when width and height are >= 64 and multiples of 8.
  std::vector<std::string> problems() const;
};

enum class GenErrorKind { InvalidRequest, Connection, Status, MalformedPayload, Timeout };

std::string_view to_string(GenErrorKind kind) noexcept;

class GenError : public Error {
 public:
  GenError(GenErrorKind kind, const std::string& message, int http_status = 0);

  GenErrorKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return status_; }

 private:
  GenErrorKind kind_;
  bool retryable_;
  int status_;
};

/// Text-to-image backend. Implementations must be safe for concurrent generate() calls.
class ImageBackend {
 public:
  virtual ~ImageBackend() = default;
  /// Returns an image of exactly req.width x req.height or throws GenError.
  virtual RasterImage generate(const GenRequest& req) = 0;
  virtual std::string name() const = 0;
};

/// Offline stand-in producing multi-octave value-noise textures. The coarse layout and the
/// palette follow the prompt text; fine detail and a small palette jitter follow
/// hash64(prompt text, seed, index). Output is bit-identical for identical inputs.
class MockBackend : public ImageBackend {
 public:
  RasterImage generate(const GenRequest& req) override;
  std::string name() const override { return "mock"; }
};

namespace serial {
/// Single-threaded reference for MockBackend::generate.
RasterImage mock_generate(const GenRequest& req);
}  // namespace serial

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double factor = 2.0;
};

struct HttpImageOptions {
  std::string endpoint;  // full URL accepting POST {prompt, width, height, seed}
  std::string api_key;   // bearer token when non-empty
  double timeout_seconds = 120.0;
  std::string extra_json = "{}";  // merged into the request body
  RetryPolicy retry;
};

/// Generic txt2img REST client. The response must be JSON with a base64 PNG under
/// "image" or as the first element of "images".
class HttpImageBackend : public ImageBackend {
 public:
  explicit HttpImageBackend(HttpImageOptions opts);
  RasterImage generate(const GenRequest& req) override;
  std::string name() const override { return "http"; }

  /// One attempt, no retry.
  RasterImage generate_once(const GenRequest& req);

 private:
  HttpImageOptions opts_;
};

struct GenResult {
  GenRequest request;
  std::optional<RasterImage> image;
  std::optional<GenError> error;

  bool ok() const noexcept { return image.has_value(); }
};

/// Runs every request with at most max_in_flight outstanding. Results keep input order;
/// a failing request yields an error entry and does not stop the others.
std::vector<GenResult> generate_batch(ImageBackend& backend, const std::vector<GenRequest>& reqs,
                                      int max_in_flight);

std::unique_ptr<ImageBackend> make_image_backend(const FormulationConfig& cfg);

/// Decodes padded base64 (whitespace ignored); nullopt on invalid input.
std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text);

}  // namespace dsforge
