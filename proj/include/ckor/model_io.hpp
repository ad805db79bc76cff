#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "ckor/estimators.hpp"

namespace ckor {

using AnyModel = std::variant<CkorModel, ReducedModel, BedmdcModel>;

/// "ckor", "ny-ckor", "reduced" or "bedmdc".
std::string_view model_kind(const AnyModel& model);

/// Versioned JSON document. Doubles are written in shortest round-trip form,
/// so a saved and reloaded model predicts bit-identically.
std::string model_to_json(const AnyModel& model);

/// Throws ParseError on malformed documents and InputError on inconsistent shapes.
AnyModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace ckor
