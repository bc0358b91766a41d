#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "simhc/synth.hpp"

namespace simhc {

constexpr int kDatasetFormatVersion = 1;

// One scene as a single-line JSON document. Doubles are written with
// round-trip precision, so scene_from_json(scene_to_json(s)) == s.
std::string scene_to_json(const LabeledScene& scene);
LabeledScene scene_from_json(std::string_view line);

std::string config_to_json(const SceneConfig& cfg);
SceneConfig config_from_json(std::string_view text);

// Newline-delimited scenes. Blank lines are skipped on read; a malformed
// line raises Error(Format) naming its line number.
void write_dataset(std::ostream& out, const std::vector<LabeledScene>& scenes);
std::vector<LabeledScene> read_dataset(std::istream& in);
std::vector<LabeledScene> read_dataset_file(const std::string& path);

}  // namespace simhc
