#pragma once

#include <cstdint>
#include <vector>

#include "md2i/dataset.hpp"

namespace md2i {

/// Segment-display style digit images, 28x28, ten classes with per-sample
/// jitter in position, stroke geometry, intensity and pixel noise.
DomainDataset make_glyph_digits(int per_class, uint64_t seed);

/// Tabular data with three latent factors and linear cross-column
/// dependencies, all columns continuous in [0,1].
DomainDataset make_linear_tabular(int n, int d, uint64_t seed);

/// Regression tasks sharing one linear model with small per-task
/// perturbations; features carry cross-column structure so imputation has
/// signal to recover. One dataset per task.
std::vector<DomainDataset> make_task_regression(int tasks, int n_per_task, int d, uint64_t seed);

/// Two domains of clipped Gaussian blobs whose means differ by `shift`,
/// with linearly separable binary labels.
std::vector<DomainDataset> make_shifted_blobs(int n_per_domain, int d, double shift, uint64_t seed);

}  // namespace md2i
