#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "taylormlp/calibration.hpp"
#include "taylormlp/container.hpp"
#include "taylormlp/mlp.hpp"
#include "taylormlp/taylor.hpp"

namespace taylormlp {

// Container kinds are told apart by a rank-0 "kind" section.
enum class ContainerKind { weights = 1, package = 2, stats = 3 };

TensorContainer to_container(const MlpWeights& weights);
TensorContainer to_container(const TaylorPackage& pkg);
TensorContainer to_container(const CalibrationStats& stats);

// These throw FormatError when the container holds a different kind or its
// sections are inconsistent.
MlpWeights weights_from_container(const TensorContainer& c);
TaylorPackage package_from_container(const TensorContainer& c);
CalibrationStats stats_from_container(const TensorContainer& c);

ContainerKind container_kind(const TensorContainer& c);

// Newline-delimited records of reals separated by whitespace or commas.
// Blank lines and lines starting with '#' are skipped. Every record must have
// `width` entries; width 0 takes it from the first record. Throws FormatError
// on malformed input.
std::vector<Vector> read_vectors(std::istream& in, std::size_t width = 0);
std::vector<Vector> read_vectors(const std::filesystem::path& path, std::size_t width = 0);
void write_vectors(std::ostream& out, const std::vector<Vector>& rows);

}  // namespace taylormlp
