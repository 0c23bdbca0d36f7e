#pragma once

#include "gelab/data_gen.hpp"

#include <iosfwd>
#include <string>

namespace gelab {

/// Text serialization: a "d,p,n,t,seed" header line, then labelled blocks
/// (X row-major, Y, a, W row-major, v, xi, atoms, noise), every real printed
/// with 17 significant digits so that reading back is exact.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);

std::string dataset_to_string(const Dataset& data);
Dataset dataset_from_string(const std::string& text);

}  // namespace gelab
