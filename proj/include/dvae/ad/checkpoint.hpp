#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "dvae/ad/adam.hpp"
#include "dvae/ad/parameter.hpp"

namespace dvae::ad {

inline constexpr int kCheckpointFormat = 1;

/// {"<id>": {"shape": [...], "values": [...]}, ...} with keys sorted, so the
/// dump is byte-stable for identical parameters. Doubles are written in
/// shortest round-trip form and reload bit-exactly.
nlohmann::json parameters_to_json(const ParameterStore& store);
/// Overwrites values of an already-laid-out store. Every store id must be
/// present with a matching shape.
void load_parameters(const nlohmann::json& doc, ParameterStore& store);

nlohmann::json adam_to_json(const AdamState& state, const ParameterStore& store);
AdamState adam_from_json(const nlohmann::json& doc, const ParameterStore& store);

/// Standalone parameter document: {"format_version": 1, "parameters": {...}}.
std::string checkpoint_document(const ParameterStore& store);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dvae::ad
