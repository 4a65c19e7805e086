#include "dsforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>

#include "dsforge/error.hpp"
#include "dsforge/json_io.hpp"
#include "dsforge/noise.hpp"
#include "dsforge/rng.hpp"

namespace dsforge {

namespace {

const std::vector<double>& ssim_taps() {
  static const std::vector<double> k = gaussian_kernel_1d(kSsimWindow, kSsimSigma);
  return k;
}

void check_pair(int aw, int ah, int bw, int bh) {
  if (aw != bw || ah != bh)
    throw InvalidArgument("ssim: dimension mismatch " + std::to_string(aw) + "x" + std::to_string(ah) +
                          " vs " + std::to_string(bw) + "x" + std::to_string(bh));
  if (aw < kSsimWindow || ah < kSsimWindow)
    throw InvalidArgument("ssim: images must be at least 11x11, got " + std::to_string(aw) + "x" +
                          std::to_string(ah));
}

// Valid-region separable Gaussian filter; the per-output accumulation order is always
// t = 0..10, horizontally then vertically.
void blur_valid(const double* src, int w, int h, std::vector<double>& tmp, double* out) {
  const auto& k = ssim_taps();
  const int wv = w - kSsimWindow + 1;
  const int hv = h - kSsimWindow + 1;
  tmp.assign(static_cast<std::size_t>(wv) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    const double* row = src + static_cast<std::size_t>(y) * w;
    double* dst = tmp.data() + static_cast<std::size_t>(y) * wv;
    for (int t = 0; t < kSsimWindow; ++t) {
      const double kt = k[t];
      for (int x = 0; x < wv; ++x) dst[x] += kt * row[x + t];
    }
  }
  std::fill(out, out + static_cast<std::size_t>(wv) * hv, 0.0);
  for (int y = 0; y < hv; ++y) {
    double* dst = out + static_cast<std::size_t>(y) * wv;
    for (int t = 0; t < kSsimWindow; ++t) {
      const double kt = k[t];
      const double* row = tmp.data() + static_cast<std::size_t>(y + t) * wv;
      for (int x = 0; x < wv; ++x) dst[x] += kt * row[x];
    }
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::vector<std::uint8_t> luma8(const RasterImage& img) {
  std::vector<std::uint8_t> out(img.pixel_count());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned v = 299u * px[3 * i] + 587u * px[3 * i + 1] + 114u * px[3 * i + 2];
    out[i] = static_cast<std::uint8_t>((v + 500u) / 1000u);
  }
  return out;
}

SsimPlane::SsimPlane(const RasterImage& img) : width_(img.width()), height_(img.height()) {
  check_pair(width_, height_, width_, height_);
  const auto l8 = luma8(img);
  luma_.assign(l8.begin(), l8.end());
  const std::size_t nv = static_cast<std::size_t>(width_ - kSsimWindow + 1) * (height_ - kSsimWindow + 1);
  mu_.resize(nv);
  var_.resize(nv);
  std::vector<double> tmp;
  std::vector<double> sq(luma_.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = luma_[i] * luma_[i];
  blur_valid(luma_.data(), width_, height_, tmp, mu_.data());
  blur_valid(sq.data(), width_, height_, tmp, var_.data());
  for (std::size_t i = 0; i < nv; ++i) var_[i] -= mu_[i] * mu_[i];
}

double ssim(const SsimPlane& a, const SsimPlane& b) {
  check_pair(a.width_, a.height_, b.width_, b.height_);
  thread_local std::vector<double> prod, tmp, cov;
  prod.resize(a.luma_.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = a.luma_[i] * b.luma_[i];
  cov.resize(a.mu_.size());
  blur_valid(prod.data(), a.width_, a.height_, tmp, cov.data());
  double sum = 0.0;
  for (std::size_t i = 0; i < cov.size(); ++i) {
    const double ma = a.mu_[i], mb = b.mu_[i];
    const double mab = ma * mb;
    const double sab = cov[i] - mab;
    const double num = (2.0 * mab + kSsimC1) * (2.0 * sab + kSsimC2);
    const double den = (ma * ma + mb * mb + kSsimC1) * (a.var_[i] + b.var_[i] + kSsimC2);
    sum += num / den;
  }
  return sum / static_cast<double>(cov.size());
}

double ssim(const RasterImage& a, const RasterImage& b) {
  check_pair(a.width(), a.height(), b.width(), b.height());
  return ssim(SsimPlane(a), SsimPlane(b));
}

ClassSsim class_ssim(std::span<const RasterImage> images, int resize_to,
                     std::optional<PairSampling> sampling) {
  const std::size_t n = images.size();
  if (n < 2) throw InvalidArgument("class_ssim needs at least 2 images, got " + std::to_string(n));

  std::vector<std::optional<SsimPlane>> planes(n);
  const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < ni; ++i) {
    const auto& img = images[i];
    planes[i].emplace(resize_to > 0 ? resize(img, resize_to, resize_to) : img);
  }
  for (std::size_t i = 1; i < n; ++i)
    if (planes[i]->width() != planes[0]->width() || planes[i]->height() != planes[0]->height())
      throw InvalidArgument("class_ssim: images differ in size and no resize was requested");

  ClassSsim out;
  const std::size_t total = n * (n - 1) / 2;
  if (sampling && sampling->pairs > 0 && sampling->pairs < total) {
    out.sampled = true;
    const CounterRng rng(sampling->seed);
    out.pairs.reserve(sampling->pairs);
    for (std::size_t t = 0; t < sampling->pairs; ++t) {
      const auto b = rng.block(t, 0);
      const auto i = static_cast<std::size_t>(CounterRng::to_unit(b[0], b[1]) * n);
      auto j = static_cast<std::size_t>(CounterRng::to_unit(b[2], b[3]) * (n - 1));
      if (j >= i) ++j;
      out.pairs.push_back({std::min(i, j), std::max(i, j), 0.0});
    }
  } else {
    out.pairs.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) out.pairs.push_back({i, j, 0.0});
  }

  const auto np = static_cast<std::int64_t>(out.pairs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t p = 0; p < np; ++p) {
    auto& pr = out.pairs[p];
    pr.value = ssim(*planes[pr.i], *planes[pr.j]);
  }

  std::vector<double> values(out.pairs.size());
  std::transform(out.pairs.begin(), out.pairs.end(), values.begin(), [](const PairScore& p) { return p.value; });
  out.pair_count = values.size();
  out.mean = mean_of(values);
  out.sd = population_sd(values, out.mean);
  if (out.sampled) out.std_error = out.sd / std::sqrt(static_cast<double>(values.size()));
  return out;
}

double colorfulness(const RasterImage& input, std::optional<int> resize_to) {
  const RasterImage img = (resize_to && (input.width() != *resize_to || input.height() != *resize_to))
                              ? resize(input, *resize_to, *resize_to)
                              : input;
  // rg and 2*yb are integers, so exact integer moments make the result independent of
  // pixel order.
  std::int64_t s_rg = 0, s_yb2 = 0;
  __int128 q_rg = 0, q_yb2 = 0;
  const auto px = img.pixels();
  const auto n = static_cast<std::int64_t>(img.pixel_count());
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
    const std::int64_t rg = r - g;
    const std::int64_t yb2 = r + g - 2 * b;
    s_rg += rg;
    s_yb2 += yb2;
    q_rg += rg * rg;
    q_yb2 += yb2 * yb2;
  }
  const __int128 nn = n;
  const double denom = static_cast<double>(nn * nn);
  const double var_rg = static_cast<double>(nn * q_rg - static_cast<__int128>(s_rg) * s_rg) / denom;
  const double var_yb = static_cast<double>(nn * q_yb2 - static_cast<__int128>(s_yb2) * s_yb2) / denom / 4.0;
  const double mu_rg = static_cast<double>(s_rg) / static_cast<double>(n);
  const double mu_yb = static_cast<double>(s_yb2) / static_cast<double>(n) / 2.0;
  return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = mean_of(values);
  s.sd = population_sd(values, s.mean);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t m = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  return s;
}

// ---------------------------------------------------------------------------
// Audit

namespace {

struct ClassFiles {
  std::string name;
  std::vector<std::filesystem::path> files;
};

std::vector<ClassFiles> discover(const std::filesystem::path& root, const AuditOptions& opts) {
  namespace fs = std::filesystem;
  std::vector<ClassFiles> classes;
  if (opts.manifest) {
    const auto m = read_manifest(*opts.manifest);
    for (const auto& c : m.classes) {
      ClassFiles cf{c.label.name, {}};
      for (const auto& img : c.images) cf.files.push_back(root / img.path);
      if (!cf.files.empty()) classes.push_back(std::move(cf));
    }
    return classes;
  }
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    ClassFiles cf{d.filename().string(), {}};
    for (const auto& e : fs::directory_iterator(d))
      if (e.is_regular_file() && is_image_file(e.path())) cf.files.push_back(e.path());
    std::sort(cf.files.begin(), cf.files.end());
    if (!cf.files.empty()) classes.push_back(std::move(cf));
  }
  return classes;
}

}  // namespace

DiversityReport audit(const std::filesystem::path& dataset_dir, const AuditOptions& opts) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dataset_dir)) throw IoError("dataset directory '" + dataset_dir.string() + "' does not exist");
  if (opts.resize_to < 0) throw InvalidArgument("resize must be ≥ 0");
  const auto classes = discover(dataset_dir, opts);
  if (classes.empty()) throw Error("no classes found in '" + dataset_dir.string() + "'");

  DiversityReport report;
  report.resize_to = opts.resize_to;
  std::ofstream csv;
  if (opts.pairs_csv) {
    csv.open(*opts.pairs_csv, std::ios::trunc);
    if (!csv) throw IoError("cannot open '" + opts.pairs_csv->string() + "' for writing");
    csv << "class,image_a,image_b,ssim\n" << std::setprecision(17);
  }

  std::size_t loaded_total = 0;
  std::vector<double> all_colorfulness;
  for (const auto& cf : classes) {
    ClassReport cr;
    cr.name = cf.name;
    std::vector<RasterImage> images;
    std::vector<fs::path> kept;
    for (const auto& f : cf.files) {
      try {
        RasterImage img = read_image(f);
        cr.colorfulness.push_back(colorfulness(img, 224));
        images.push_back(opts.resize_to > 0 ? resize(img, opts.resize_to, opts.resize_to) : std::move(img));
        kept.push_back(f);
      } catch (const Error& e) {
        report.unreadable.push_back(f.lexically_relative(dataset_dir).generic_string());
      }
    }
    loaded_total += images.size();
    cr.image_count = images.size();
    if (!cr.colorfulness.empty()) {
      const auto s = summarize(cr.colorfulness);
      cr.colorfulness_mean = s.mean;
      cr.colorfulness_sd = s.sd;
      all_colorfulness.insert(all_colorfulness.end(), cr.colorfulness.begin(), cr.colorfulness.end());
    }
    if (images.size() >= 2) {
      cr.ssim = class_ssim(images, 0, opts.sampling);
      if (csv.is_open())
        for (const auto& p : cr.ssim->pairs)
          csv << cf.name << ',' << kept[p.i].filename().string() << ',' << kept[p.j].filename().string()
              << ',' << p.value << '\n';
      cr.ssim->pairs.clear();
      cr.ssim->pairs.shrink_to_fit();
    } else {
      report.warnings.push_back("class '" + cf.name + "' has " + std::to_string(images.size()) +
                                " readable image(s); SSIM skipped");
    }
    report.per_class.emplace(cf.name, std::move(cr));
  }
  if (loaded_total == 0) throw IoError("none of the images under '" + dataset_dir.string() + "' could be read");

  std::vector<double> means, sds;
  for (const auto& [name, cr] : report.per_class)
    if (cr.ssim) {
      means.push_back(cr.ssim->mean);
      sds.push_back(cr.ssim->sd);
    }
  if (!means.empty()) {
    report.ssim_mean_of_class_means = mean_of(means);
    report.ssim_sd_of_class_means = population_sd(means, report.ssim_mean_of_class_means);
    report.ssim_mean_pooled_sd = mean_of(sds);
  }
  report.colorfulness = summarize(all_colorfulness);
  return report;
}

namespace {

Json summary_json(const Summary& s) {
  return Json{{"count", s.count}, {"mean", s.mean}, {"sd", s.sd},
              {"min", s.min},     {"max", s.max},   {"median", s.median}};
}

}  // namespace

std::string report_to_json(const DiversityReport& r) {
  Json per_class = Json::object();
  for (const auto& [name, c] : r.per_class) {
    Json jc{{"image_count", c.image_count},
            {"colorfulness", c.colorfulness},
            {"colorfulness_mean", c.colorfulness_mean},
            {"colorfulness_sd", c.colorfulness_sd}};
    if (c.ssim) {
      jc["ssim_mean"] = c.ssim->mean;
      jc["ssim_sd"] = c.ssim->sd;
      jc["pair_count"] = c.ssim->pair_count;
      jc["ssim_sampled"] = c.ssim->sampled;
      jc["ssim_std_error"] = c.ssim->std_error;
    } else {
      jc["ssim_mean"] = nullptr;
      jc["ssim_sd"] = nullptr;
      jc["pair_count"] = 0;
      jc["ssim_sampled"] = false;
      jc["ssim_std_error"] = nullptr;
    }
    per_class[name] = std::move(jc);
  }
  Json j{{"per_class", per_class},
         {"dataset_level", Json{{"ssim_mean_of_class_means", r.ssim_mean_of_class_means},
                                {"ssim_sd_of_class_means", r.ssim_sd_of_class_means},
                                {"ssim_mean_of_class_sds", r.ssim_mean_pooled_sd},
                                {"colorfulness", summary_json(r.colorfulness)}}},
         {"resize_to", r.resize_to},
         {"warnings", r.warnings},
         {"unreadable", r.unreadable}};
  return j.dump(2);
}

DiversityReport report_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("report is not valid JSON: ") + e.what());
  }
  DiversityReport r;
  try {
    for (const auto& [name, jc] : require_field(j, "per_class", "report").items()) {
      ClassReport c;
      c.name = name;
      c.image_count = jc.at("image_count").get<std::size_t>();
      c.colorfulness = jc.at("colorfulness").get<std::vector<double>>();
      c.colorfulness_mean = jc.at("colorfulness_mean").get<double>();
      c.colorfulness_sd = jc.at("colorfulness_sd").get<double>();
      if (!jc.at("ssim_mean").is_null()) {
        ClassSsim s;
        s.mean = jc.at("ssim_mean").get<double>();
        s.sd = jc.at("ssim_sd").get<double>();
        s.pair_count = jc.at("pair_count").get<std::size_t>();
        s.sampled = jc.value("ssim_sampled", false);
        if (auto it = jc.find("ssim_std_error"); it != jc.end() && !it->is_null()) s.std_error = it->get<double>();
        c.ssim = s;
      }
      r.per_class.emplace(name, std::move(c));
    }
    const Json& d = require_field(j, "dataset_level", "report");
    r.ssim_mean_of_class_means = d.at("ssim_mean_of_class_means").get<double>();
    r.ssim_sd_of_class_means = d.at("ssim_sd_of_class_means").get<double>();
    r.ssim_mean_pooled_sd = d.at("ssim_mean_of_class_sds").get<double>();
    const Json& cs = d.at("colorfulness");
    r.colorfulness = Summary{cs.at("count").get<std::size_t>(), cs.at("mean").get<double>(),
                             cs.at("sd").get<double>(),         cs.at("min").get<double>(),
                             cs.at("max").get<double>(),        cs.at("median").get<double>()};
    r.resize_to = j.value("resize_to", 224);
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.unreadable = j.value("unreadable", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("report: ") + e.what());
  }
  return r;
}

void write_report(const DiversityReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << report_to_json(r) << '\n';
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------

namespace serial {

double ssim(const RasterImage& a, const RasterImage& b) {
  check_pair(a.width(), a.height(), b.width(), b.height());
  const auto& k = ssim_taps();
  const auto la = luma8(a), lb = luma8(b);
  const int w = a.width(), h = a.height();
  double sum = 0.0;
  std::size_t count = 0;
  for (int y0 = 0; y0 + kSsimWindow <= h; ++y0) {
    for (int x0 = 0; x0 + kSsimWindow <= w; ++x0) {
      double ma = 0, mb = 0, ea = 0, eb = 0, eab = 0;
      for (int dy = 0; dy < kSsimWindow; ++dy)
        for (int dx = 0; dx < kSsimWindow; ++dx) {
          const double wt = k[dy] * k[dx];
          const double va = la[(y0 + dy) * w + x0 + dx], vb = lb[(y0 + dy) * w + x0 + dx];
          ma += wt * va;
          mb += wt * vb;
          ea += wt * va * va;
          eb += wt * vb * vb;
          eab += wt * va * vb;
        }
      const double num = (2 * ma * mb + kSsimC1) * (2 * (eab - ma * mb) + kSsimC2);
      const double den = (ma * ma + mb * mb + kSsimC1) * ((ea - ma * ma) + (eb - mb * mb) + kSsimC2);
      sum += num / den;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

ClassSsim class_ssim(std::span<const RasterImage> images, int resize_to) {
  if (images.size() < 2) throw InvalidArgument("class_ssim needs at least 2 images");
  std::vector<RasterImage> sized;
  for (const auto& img : images) sized.push_back(resize_to > 0 ? serial::resize(img, resize_to, resize_to) : img);
  ClassSsim out;
  std::vector<double> values;
  for (std::size_t i = 0; i < sized.size(); ++i)
    for (std::size_t j = i + 1; j < sized.size(); ++j) {
      values.push_back(serial::ssim(sized[i], sized[j]));
      out.pairs.push_back({i, j, values.back()});
    }
  out.pair_count = values.size();
  out.mean = mean_of(values);
  out.sd = population_sd(values, out.mean);
  return out;
}

}  // namespace serial

}  // namespace dsforge
