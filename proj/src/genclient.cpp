#include "dsforge/genclient.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <thread>

#include <boost/beast/core/detail/base64.hpp>

#include "dsforge/json_io.hpp"
#include "dsforge/llm.hpp"
#include "dsforge/rng.hpp"
#include "http_util.hpp"

namespace dsforge {

std::vector<std::string> GenRequest::problems() const {
  std::vector<std::string> out;
  if (width < 64 || width % 8 != 0) out.push_back("width must be ≥ 64 and a multiple of 8, got " + std::to_string(width));
  if (height < 64 || height % 8 != 0)
    out.push_back("height must be ≥ 64 and a multiple of 8, got " + std::to_string(height));
  if (prompt.text.empty()) out.emplace_back("prompt text must be non-empty");
  return out;
}

std::string_view to_string(GenErrorKind kind) noexcept {
  switch (kind) {
    case GenErrorKind::InvalidRequest: return "invalid_request";
    case GenErrorKind::Connection: return "connection";
    case GenErrorKind::Status: return "status";
    case GenErrorKind::MalformedPayload: return "malformed_payload";
    case GenErrorKind::Timeout: return "timeout";
  }
  return "unknown";
}

GenError::GenError(GenErrorKind kind, const std::string& message, int http_status)
    : Error(message),
      kind_(kind),
      retryable_(kind == GenErrorKind::Status
                     ? (http_status >= 500 || http_status == 408 || http_status == 429)
                     : kind != GenErrorKind::MalformedPayload && kind != GenErrorKind::InvalidRequest),
      status_(http_status) {}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

// Lattice of uniform values for one value-noise octave. Shifts must stay within [0, 2) cells.
struct Octave {
  int cells;
  double weight;
  double shift_x, shift_y;  // in cells
  std::vector<double> lattice;

  Octave(std::uint64_t key, int cells_, double weight_, double sx, double sy)
      : cells(cells_), weight(weight_), shift_x(sx), shift_y(sy), lattice((cells_ + 3) * (cells_ + 3)) {
    for (int j = 0; j < cells + 3; ++j)
      for (int i = 0; i < cells + 3; ++i)
        lattice[j * (cells + 3) + i] =
            static_cast<double>(hash64({key, static_cast<std::uint64_t>(cells), static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(j)}) >> 11) * 0x1.0p-53;
  }

  double sample(double u, double v) const {  // u, v in [0, 1)
    const double fx = u * cells + shift_x;
    const double fy = v * cells + shift_y;
    const int ix = std::clamp(static_cast<int>(fx), 0, cells + 1);
    const int iy = std::clamp(static_cast<int>(fy), 0, cells + 1);
    double tx = fx - ix, ty = fy - iy;
    tx = tx * tx * (3.0 - 2.0 * tx);
    ty = ty * ty * (3.0 - 2.0 * ty);
    const int stride = cells + 3;
    const double a = lattice[iy * stride + ix], b = lattice[iy * stride + ix + 1];
    const double c = lattice[(iy + 1) * stride + ix], d = lattice[(iy + 1) * stride + ix + 1];
    return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
  }
};

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

struct MockTexture {
  std::vector<Octave> layout;  // keyed by the prompt
  std::vector<Octave> detail;  // keyed by (prompt, seed, index)
  std::vector<Octave> tint;
  double hue, saturation, value_lo, value_span;

  explicit MockTexture(const GenRequest& req) {
    const std::uint64_t prompt_key = hash64(req.prompt.text);
    const std::uint64_t sample_key =
        hash64({prompt_key, req.seed, static_cast<std::uint64_t>(static_cast<std::uint32_t>(req.index))});
    // Layout drifts by a fraction of a coarse cell between samples of one prompt.
    const double jx = 0.35 * (unit(mix64(sample_key ^ 1)) - 0.5);
    const double jy = 0.35 * (unit(mix64(sample_key ^ 2)) - 0.5);
    layout.emplace_back(mix64(prompt_key ^ 11), 3, 0.55, 1.0 + jx, 1.0 + jy);
    layout.emplace_back(mix64(prompt_key ^ 12), 6, 0.30, 1.0 + 2 * jx, 1.0 + 2 * jy);
    layout.emplace_back(mix64(prompt_key ^ 13), 12, 0.15, 1.0 + 4 * jx, 1.0 + 4 * jy);
    detail.emplace_back(mix64(sample_key ^ 21), 24, 0.45, 0.0, 0.0);
    detail.emplace_back(mix64(sample_key ^ 22), 48, 0.35, 0.0, 0.0);
    detail.emplace_back(mix64(sample_key ^ 23), 96, 0.20, 0.0, 0.0);
    tint.emplace_back(mix64(prompt_key ^ 31), 2, 0.7, 1.0 + jx, 1.0 + jy);
    tint.emplace_back(mix64(prompt_key ^ 32), 5, 0.3, 1.0, 1.0);
    hue = unit(mix64(prompt_key ^ 41)) + 0.06 * (unit(mix64(sample_key ^ 42)) - 0.5);
    saturation = 0.25 + 0.6 * unit(mix64(prompt_key ^ 43));
    value_lo = 0.05 + 0.3 * unit(mix64(prompt_key ^ 44));
    value_span = 0.45 + 0.5 * unit(mix64(prompt_key ^ 45));
  }

  static double field(const std::vector<Octave>& octaves, double u, double v) {
    double acc = 0.0;
    for (const auto& o : octaves) acc += o.weight * o.sample(u, v);
    return acc;
  }

  void shade(double u, double v, std::uint8_t* out) const {
    const double structure = 0.72 * field(layout, u, v) + 0.28 * field(detail, u, v);
    double h = hue + 0.18 * (field(tint, u, v) - 0.5);
    h -= std::floor(h);
    const double val = std::clamp(value_lo + value_span * structure, 0.0, 1.0);
    const double s = saturation;
    // HSV -> RGB
    const double h6 = h * 6.0;
    const int sector = std::min(static_cast<int>(h6), 5);
    const double f = h6 - sector;
    const double p = val * (1.0 - s), q = val * (1.0 - s * f), t = val * (1.0 - s * (1.0 - f));
    double r, g, b;
    switch (sector) {
      case 0: r = val, g = t, b = p; break;
      case 1: r = q, g = val, b = p; break;
      case 2: r = p, g = val, b = t; break;
      case 3: r = p, g = q, b = val; break;
      case 4: r = t, g = p, b = val; break;
      default: r = val, g = p, b = q; break;
    }
    out[0] = quantize_unit(r);
    out[1] = quantize_unit(g);
    out[2] = quantize_unit(b);
  }
};

void check_request(const GenRequest& req) {
  if (auto p = req.problems(); !p.empty()) throw GenError(GenErrorKind::InvalidRequest, p.front());
}

}  // namespace

RasterImage MockBackend::generate(const GenRequest& req) {
  check_request(req);
  const MockTexture tex(req);
  RasterImage img(req.width, req.height);
  auto* px = img.pixels().data();
  const int w = req.width, h = req.height;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const double v = (y + 0.5) / h;
    for (int x = 0; x < w; ++x) tex.shade((x + 0.5) / w, v, px + (static_cast<std::size_t>(y) * w + x) * 3);
  }
  return img;
}

namespace serial {
RasterImage mock_generate(const GenRequest& req) {
  check_request(req);
  const MockTexture tex(req);
  RasterImage img(req.width, req.height);
  for (int y = 0; y < req.height; ++y)
    for (int x = 0; x < req.width; ++x)
      tex.shade((x + 0.5) / req.width, (y + 0.5) / req.height, &img.at(x, y, 0));
  return img;
}
}  // namespace serial

// ---------------------------------------------------------------------------
// HTTP backend

std::optional<std::vector<std::uint8_t>> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  if (clean.size() % 4 != 0) return std::nullopt;
  namespace b64 = boost::beast::detail::base64;
  std::vector<std::uint8_t> out(b64::decoded_size(clean.size()));
  const auto [written, read] = b64::decode(out.data(), clean.data(), clean.size());
  std::size_t padding = 0;
  while (padding < clean.size() && clean[clean.size() - 1 - padding] == '=') ++padding;
  if (read + padding != clean.size() || padding > 2) return std::nullopt;
  out.resize(written);
  return out;
}

HttpImageBackend::HttpImageBackend(HttpImageOptions opts) : opts_(std::move(opts)) {
  detail::split_url(opts_.endpoint);
  try {
    if (!Json::parse(opts_.extra_json).is_object()) throw InvalidArgument("extra_json must be a JSON object");
  } catch (const nlohmann::json::parse_error&) {
    throw InvalidArgument("extra_json is not valid JSON");
  }
  if (opts_.retry.max_attempts < 1) throw InvalidArgument("retry.max_attempts must be ≥ 1");
}

RasterImage HttpImageBackend::generate_once(const GenRequest& req) {
  check_request(req);
  const auto url = detail::split_url(opts_.endpoint);
  Json body = Json::parse(opts_.extra_json);
  body["prompt"] = req.prompt.text;
  body["width"] = req.width;
  body["height"] = req.height;
  body["seed"] = req.seed;

  httplib::Client cli(url.origin);
  detail::set_timeouts(cli, opts_.timeout_seconds);
  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);
  auto res = cli.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string msg = "txt2img request failed: " + httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw GenError(GenErrorKind::Timeout, msg);
    throw GenError(GenErrorKind::Connection, msg);
  }
  if (res->status < 200 || res->status >= 300)
    throw GenError(GenErrorKind::Status, "txt2img endpoint returned HTTP " + std::to_string(res->status),
                   res->status);

  std::string encoded;
  try {
    const Json reply = Json::parse(res->body);
    if (reply.contains("image")) encoded = reply.at("image").get<std::string>();
    else encoded = reply.at("images").at(0).get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw GenError(GenErrorKind::MalformedPayload, "txt2img response lacks a base64 image");
  }
  if (auto comma = encoded.find(','); encoded.rfind("data:", 0) == 0 && comma != std::string::npos)
    encoded.erase(0, comma + 1);
  const auto bytes = base64_decode(encoded);
  if (!bytes) throw GenError(GenErrorKind::MalformedPayload, "txt2img response image is not valid base64");
  RasterImage img;
  try {
    img = decode_image(*bytes);
  } catch (const IoError& e) {
    throw GenError(GenErrorKind::MalformedPayload, std::string("txt2img response image: ") + e.what());
  }
  if (img.width() != req.width || img.height() != req.height) img = resize(img, req.width, req.height);
  return img;
}

RasterImage HttpImageBackend::generate(const GenRequest& req) {
  auto delay = opts_.retry.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return generate_once(req);
    } catch (const GenError& e) {
      if (!e.retryable() || attempt >= opts_.retry.max_attempts) throw;
    }
    std::this_thread::sleep_for(delay);
    delay = std::chrono::milliseconds(static_cast<long long>(delay.count() * opts_.retry.factor));
  }
}

// ---------------------------------------------------------------------------
// Batch

std::vector<GenResult> generate_batch(ImageBackend& backend, const std::vector<GenRequest>& reqs,
                                      int max_in_flight) {
  if (max_in_flight < 1) throw InvalidArgument("max_in_flight must be ≥ 1");
  std::vector<GenResult> results(reqs.size());
  if (reqs.empty()) return results;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < reqs.size(); i = next++) {
      results[i].request = reqs[i];
      try {
        results[i].image = backend.generate(reqs[i]);
      } catch (const GenError& e) {
        results[i].error = e;
      } catch (const std::exception& e) {
        results[i].error = GenError(GenErrorKind::Connection, e.what());
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), reqs.size());
  if (workers == 1) {
    worker();
    return results;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  pool.clear();
  return results;
}

std::unique_ptr<ImageBackend> make_image_backend(const FormulationConfig& cfg) {
  if (cfg.backend == BackendKind::Mock) return std::make_unique<MockBackend>();
  HttpImageOptions o;
  o.endpoint = cfg.http.endpoint;
  o.api_key = detail::env_or_empty(cfg.http.api_key_env);
  o.timeout_seconds = cfg.http.timeout_seconds;
  o.extra_json = cfg.http.extra_json;
  return std::make_unique<HttpImageBackend>(std::move(o));
}

}  // namespace dsforge
