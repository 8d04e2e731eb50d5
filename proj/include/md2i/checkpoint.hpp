#pragma once

#include <optional>
#include <string>
#include <vector>

#include "md2i/imputer.hpp"
#include "md2i/matrix.hpp"
#include "md2i/mtl.hpp"

namespace md2i {

struct NamedMatrix {
    std::string name;
    Matrix value;
};

/// Flat binary container: manifest of (name, shape, offset) entries followed
/// by one raw little-endian double payload. Round trips are bit-exact.
void save_checkpoint(const std::string& path, const std::vector<NamedMatrix>& entries);
std::vector<NamedMatrix> load_checkpoint(const std::string& path);

struct LoadedModel {
    GeneratorNet gen;
    DiscriminatorNet disc;
    std::optional<ClassifierHead> head;
};

std::vector<NamedMatrix> pack_model(const GeneratorNet& gen, const DiscriminatorNet& disc,
                                    const ClassifierHead* head);
LoadedModel unpack_model(const std::vector<NamedMatrix>& entries);

}  // namespace md2i
