#pragma once

// JSON bindings for the domain types. Field names are lower_snake_case and match the
// struct members one-to-one.

#include <json.hpp>

#include "dsforge/core.hpp"
#include "dsforge/noise.hpp"

namespace dsforge {

using Json = nlohmann::json;

/// j[key], or SchemaError naming `context` and the key.
const Json& require_field(const Json& j, const char* key, std::string_view context);

void to_json(Json& j, const Label& v);
void from_json(const Json& j, Label& v);
void to_json(Json& j, const Prompt& v);
void from_json(const Json& j, Prompt& v);
void to_json(Json& j, const NoiseSpec& v);
void from_json(const Json& j, NoiseSpec& v);
void to_json(Json& j, const ImageEntry& v);
void from_json(const Json& j, ImageEntry& v);
void to_json(Json& j, const ClassEntry& v);
void from_json(const Json& j, ClassEntry& v);
void to_json(Json& j, const DatasetManifest& v);
void from_json(const Json& j, DatasetManifest& v);

/// {"label": ..., "prompts": [text...], "sources": [...]}
Json prompt_set_to_json(const PromptSet& set);
PromptSet prompt_set_from_json(const Json& j);

/// Resolves a LocalvarNoise map_path against base_dir and loads the map.
NoiseSpec noise_spec_from_json(const Json& j, const std::filesystem::path& base_dir);

}  // namespace dsforge
