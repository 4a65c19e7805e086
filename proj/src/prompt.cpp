#include "dsforge/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <unordered_set>

#include "dsforge/json_io.hpp"

namespace dsforge {

namespace {

std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80;
}

// Strips straight and typographic quotes from both ends, plus surrounding whitespace.
std::string strip_quotes(std::string_view s) {
  static const std::string_view kQuotes[] = {"\"", "'", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                             "\xE2\x80\x98", "\xE2\x80\x99", "`"};
  bool changed = true;
  while (changed) {
    changed = false;
    s = trim_view(s);
    for (auto q : kQuotes) {
      if (s.size() >= q.size() && s.substr(0, q.size()) == q) {
        s.remove_prefix(q.size());
        changed = true;
      }
      if (s.size() >= q.size() && s.substr(s.size() - q.size()) == q) {
        s.remove_suffix(q.size());
        changed = true;
      }
    }
  }
  return std::string(s);
}

}  // namespace

Prompt naive_prompt(const Label& label) {
  std::string text = "a photo of one " + label.name;
  if (label.context && !label.context->empty()) text += " " + *label.context;
  return Prompt::make(std::move(text), label, PromptSource::Naive);
}

std::string build_llm_query(const Label& label, const LlmQuery& query) {
  const std::string& t = query.query_template;
  const auto pos = t.find("{class}");
  if (pos == std::string::npos || t.find("{class}", pos + 1) != std::string::npos)
    throw InvalidArgument("query template must contain {class} exactly once");
  if (query.count < 1) throw InvalidArgument("query count must be positive");
  std::string out = t;
  out.replace(pos, 7, label.name);
  const std::string count = std::to_string(query.count);
  for (auto p = out.find("{count}"); p != std::string::npos; p = out.find("{count}", p + count.size()))
    out.replace(p, 7, count);
  return out;
}

PromptSet parse_llm_response(std::string_view raw, const Label& label, int expected) {
  if (expected < 1) throw InvalidArgument("expected prompt count must be positive");
  static const std::regex kItem(R"(^\s*(?:\d+\s*[.)]|-)\s*(.*)$)");
  std::vector<Prompt> prompts;
  std::unordered_set<std::string> seen;
  std::size_t start = 0;
  while (start <= raw.size() && static_cast<int>(prompts.size()) < expected) {
    auto nl = raw.find('\n', start);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string line(raw.substr(start, nl - start));
    start = nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, kItem)) continue;
    std::string text = strip_quotes(m[1].str());
    if (text.empty() || !seen.insert(text).second) continue;
    prompts.push_back(Prompt{std::move(text), label, PromptSource::Llm});
  }
  if (prompts.empty()) throw EmptyResponse(std::string(raw));
  return PromptSet(label, std::move(prompts));
}

Prompt caption_replace(std::string_view caption, const std::vector<std::string>& coarse_subjects,
                       const Label& label) {
  if (trim_view(caption).empty()) throw InvalidArgument("caption must be non-empty");
  const std::string hay = to_lower(caption);
  std::size_t best_pos = std::string::npos;
  std::size_t best_len = 0;
  for (const auto& raw_subject : coarse_subjects) {
    const std::string subject = to_lower(trim_view(raw_subject));
    if (subject.empty()) continue;
    for (auto p = hay.find(subject); p != std::string::npos; p = hay.find(subject, p + 1)) {
      const bool left_ok = p == 0 || !is_word_byte(hay[p - 1]);
      const auto end = p + subject.size();
      const bool right_ok = end == hay.size() || !is_word_byte(hay[end]);
      if (!left_ok || !right_ok) continue;
      if (p < best_pos || (p == best_pos && subject.size() > best_len)) {
        best_pos = p;
        best_len = subject.size();
      }
      break;  // later hits of this subject cannot be earlier
    }
  }
  if (best_pos == std::string::npos) throw NoSubjectFound(std::string(caption));
  std::string text(caption);
  text.replace(best_pos, best_len, label.name);
  return Prompt::make(std::move(text), label, PromptSource::Caption);
}

std::vector<CaptionLine> read_captions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open captions file '" + path.string() + "'");
  std::vector<CaptionLine> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_view(line).empty()) continue;
    CaptionLine c;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
      c.caption = std::string(trim_view(std::string_view(line).substr(0, tab)));
      auto img = trim_view(std::string_view(line).substr(tab + 1));
      if (!img.empty()) c.image = std::string(img);
    } else {
      c.caption = std::string(trim_view(line));
    }
    if (!c.caption.empty()) out.push_back(std::move(c));
  }
  return out;
}

namespace {

std::string filename_key(std::string_view s) {
  std::string out = to_lower(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '-' || c == ' '; }, '_');
  return out;
}

}  // namespace

std::vector<CaptionLine> captions_for_label(const std::vector<CaptionLine>& captions, const Label& label) {
  const std::string key = filename_key(label.name);
  std::vector<CaptionLine> out;
  for (const auto& c : captions) {
    if (!c.image) continue;
    const std::string stem = filename_key(std::filesystem::path(*c.image).stem().string());
    if (stem.compare(0, key.size(), key) != 0) continue;
    // "cat_3" names "cat", "cattle_3" does not
    if (stem.size() == key.size() || !std::isalpha(static_cast<unsigned char>(stem[key.size()])))
      out.push_back(c);
  }
  return out.empty() ? captions : out;
}

PromptSet caption_prompts(const std::vector<CaptionLine>& captions,
                          const std::vector<std::string>& coarse_subjects, const Label& label,
                          int limit) {
  std::vector<Prompt> prompts;
  std::unordered_set<std::string> seen;
  for (const auto& c : captions) {
    if (static_cast<int>(prompts.size()) >= limit) break;
    try {
      Prompt p = caption_replace(c.caption, coarse_subjects, label);
      if (seen.insert(p.text).second) prompts.push_back(std::move(p));
    } catch (const NoSubjectFound&) {
    }
  }
  if (prompts.empty()) throw NoSubjectFound("<all " + std::to_string(captions.size()) + " captions>");
  return PromptSet(label, std::move(prompts));
}

// ---------------------------------------------------------------------------
// Word-vector diversification

std::vector<std::string> AnimacyLexicon::problems() const {
  std::vector<std::string> out;
  if (living_words.empty()) out.emplace_back("living_words must not be empty");
  if (nonliving_words.empty()) out.emplace_back("nonliving_words must not be empty");
  if (living_modifiers.empty()) out.emplace_back("living_modifiers must not be empty");
  if (nonliving_modifiers.empty()) out.emplace_back("nonliving_modifiers must not be empty");
  for (const auto& w : living_words) {
    const auto lw = to_lower(w);
    for (const auto& n : nonliving_words)
      if (to_lower(n) == lw) out.push_back("'" + w + "' appears in both living_words and nonliving_words");
  }
  return out;
}

AnimacyLexicon AnimacyLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("lexicon '" + path.string() + "' is not valid JSON");
  }
  if (!j.is_object()) throw SchemaError("lexicon '" + path.string() + "': expected an object");
  AnimacyLexicon lex;
  auto field = [&](const char* key, std::vector<std::string>& out) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        out = it->get<std::vector<std::string>>();
      } catch (const nlohmann::json::exception&) {
        throw SchemaError("lexicon: '" + std::string(key) + "' must be a list of strings");
      }
    }
  };
  field("living_words", lex.living_words);
  field("nonliving_words", lex.nonliving_words);
  field("living_modifiers", lex.living_modifiers);
  field("nonliving_modifiers", lex.nonliving_modifiers);
  if (auto p = lex.problems(); !p.empty()) throw SchemaError("lexicon: " + p.front());
  return lex;
}

std::string_view to_string(Animacy a) noexcept { return a == Animacy::Living ? "living" : "nonliving"; }

AnimacyScores animacy_scores(const WordVectorStore& store, const AnimacyLexicon& lex, const Label& label) {
  if (auto p = lex.problems(); !p.empty()) throw InvalidArgument("lexicon: " + p.front());
  const auto target = store.resolve(label.name);
  auto mean_cosine = [&](const std::vector<std::string>& words) {
    double sum = 0.0;
    for (const auto& w : words) sum += cosine_similarity(store.resolve(w), target);
    return sum / static_cast<double>(words.size());
  };
  AnimacyScores s;
  s.living_mean = mean_cosine(lex.living_words);
  s.nonliving_mean = mean_cosine(lex.nonliving_words);
  s.decision = s.living_mean > s.nonliving_mean ? Animacy::Living : Animacy::NonLiving;
  return s;
}

Animacy classify_animacy(const WordVectorStore& store, const AnimacyLexicon& lex, const Label& label) {
  return animacy_scores(store, lex, label).decision;
}

std::optional<std::string> modify_label_in(std::string_view text, const Label& label,
                                           std::string_view modifier) {
  std::string out(text);
  auto pos = out.find(label.name);
  std::size_t len = label.name.size();
  if (pos == std::string::npos) {
    pos = to_lower(out).find(to_lower(label.name));
    if (pos == std::string::npos) return std::nullopt;
  }
  out.replace(pos, len, std::string(modifier) + " " + label.name);
  return out;
}

PromptSet diversify(const WordVectorStore& store, const AnimacyLexicon& lex, const Label& label,
                    const std::optional<Prompt>& base) {
  const Animacy a = classify_animacy(store, lex, label);
  const auto& modifiers = a == Animacy::Living ? lex.living_modifiers : lex.nonliving_modifiers;
  std::vector<Prompt> out;
  for (const auto& m : modifiers) {
    std::string text;
    if (base) {
      auto t = modify_label_in(base->text, label, m);
      if (!t) throw InvalidArgument("base prompt '" + base->text + "' does not mention label '" + label.name + "'");
      text = std::move(*t);
    } else {
      text = m + " " + label.name;
    }
    out.push_back(Prompt::make(std::move(text), label, PromptSource::Diversified));
  }
  return PromptSet(label, std::move(out));
}

}  // namespace dsforge
