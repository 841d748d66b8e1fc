#pragma once

#include <filesystem>
#include <iosfwd>

#include "krsml/model.hpp"

namespace krsml {

/// Current model file version. load_model rejects any other.
inline constexpr int kModelFormatVersion = 1;

/// Plain-text model file. Every real is written with 17 significant digits so
/// a loaded model predicts exactly like the saved one.
void save_model(const Model& model, const std::filesystem::path& path);
void write_model(const Model& model, std::ostream& out);

/// Throws DataError on unreadable files, version mismatch or a wrong number of entries.
Model load_model(const std::filesystem::path& path);
Model read_model(std::istream& in);

} // namespace krsml
