#pragma once

#include <filesystem>
#include <iosfwd>

#include "mra/model.hpp"

namespace mra {

// Binary container, little endian:
//   char[4] "MRA1" | u32 L | u64 n | f64 sigma | n*L f64 observations (row major)
// The group is not stored and must be supplied by the reader.
void write_dataset_binary(std::ostream& out, const Dataset& data);
Dataset read_dataset_binary(std::istream& in, GroupKind group = GroupKind::cyclic);

// Text form: a "# MRA1 L=<L> n=<n> sigma=<sigma>" header line, then one
// observation per line with values in shortest round-trip decimal form.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, GroupKind group = GroupKind::cyclic);

void write_dataset(const std::filesystem::path& path, const Dataset& data);
// Detects the format from the first bytes.
Dataset read_dataset(const std::filesystem::path& path, GroupKind group = GroupKind::cyclic);

}  // namespace mra
