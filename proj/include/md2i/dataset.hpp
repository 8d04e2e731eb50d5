#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "md2i/matrix.hpp"
#include "md2i/rng.hpp"

namespace md2i {

enum class ColType { Continuous, Binary };

enum class LabelKind { Auto, Classification, Regression };

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One domain: features X, mask M (1 = observed), optional labels Y.
/// Datasets are immutable by convention; corruption ops return copies.
struct DomainDataset {
    int domain_id = 0;
    Matrix x;                        // n x d, continuous columns in [0,1]
    Matrix y;                        // n x d_y one-hot, or n x 1 for regression; empty when unlabeled
    bool y_is_onehot = false;
    Matrix m;                        // n x d in {0,1}
    std::vector<ColType> col_types;  // size d

    int n() const { return x.rows; }
    int d() const { return x.cols; }
    int d_y() const { return y.cols; }
    bool has_labels() const { return y.rows > 0 && y.cols > 0; }

    /// Throws std::invalid_argument on any broken invariant.
    void validate() const;
};

struct MissingSpec {
    enum class Mechanism { McarPatch, McarUniform, MarRule };
    Mechanism mechanism = Mechanism::McarUniform;
    int patch_side = 13;     // McarPatch
    double rate = 0.3;       // McarUniform
    double threshold = 0.3;  // MarRule: t
    uint64_t seed = 0;
};

// Noise range for values substituted at missing positions.
inline constexpr double kNoiseLo = 0.0;
inline constexpr double kNoiseHi = 0.01;

/// Counter-clockwise rotations of square images (bilinear, zero fill,
/// clamped to [0,1]). One output domain per angle; labels are copied.
std::vector<DomainDataset> synth_rotated_digits(const DomainDataset& base,
                                                const std::vector<double>& angles_deg);

/// Per row, zeroes the mask over one patch_side x patch_side square at a
/// uniformly drawn position. X values stay in place.
DomainDataset inject_mcar_patch(const DomainDataset& ds, const MissingSpec& spec);

/// Independently zeroes each mask entry with probability rate.
DomainDataset inject_mcar_uniform(const DomainDataset& ds, const MissingSpec& spec);

/// Draws r ~ U[0,1) per row, two condition columns and half of the columns
/// at random; masks selected columns where r_i <= t and
/// (x1_i <= median(x1) or x2_i >= median(x2)).
DomainDataset inject_mar(const DomainDataset& ds, const MissingSpec& spec);

/// X with fresh noise at missing positions, plus the mask.
std::pair<Matrix, Matrix> make_tilde(const Matrix& x, const Matrix& m, Rng& rng);
std::pair<Matrix, Matrix> make_tilde(const DomainDataset& ds, uint64_t noise_seed);

/// Comma-delimited text with a `name:type` header (type in {c,b,label});
/// the mask lives in a sibling `<path>.mask` file over the feature columns.
DomainDataset load_tabular(const std::string& path, LabelKind label_kind = LabelKind::Auto);
void save_tabular(const DomainDataset& ds, const std::string& path);

/// Shuffled epoch partitions; the last batch may be short. Two iterators
/// built with the same arguments yield identical sequences.
class BatchIter {
public:
    BatchIter(int n, int batch_size, uint64_t seed);
    std::vector<std::vector<int>> next_epoch();

private:
    int n_;
    int batch_size_;
    Rng rng_;
};

/// One epoch of batches drawn from an existing random source.
std::vector<std::vector<int>> draw_batches(int n, int batch_size, Rng& rng);

Matrix one_hot(const std::vector<int>& labels, int num_classes);

/// Row-wise argmax; ties break toward the lowest index.
std::vector<int> argmax_rows(const Matrix& scores);

}  // namespace md2i
