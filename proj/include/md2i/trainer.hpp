#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "md2i/dataset.hpp"
#include "md2i/imputer.hpp"
#include "md2i/mmd.hpp"
#include "md2i/mtl.hpp"
#include "md2i/nn.hpp"

namespace md2i {

enum class TrainMode { Supervised, Unsupervised };

struct HyperParams {
    // Blend weights for the generator-side loss terms, in the order
    // (adversarial, discriminator, classifier, alignment).
    double lambda0 = 1.0;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double lambda3 = 2.0;
    double sigma = 10.0;
    SgdConfig sgd{0.01, 0.9, 32};
    double rho0 = 1.0;
    double rho_l2 = 0.1;
    int max_epochs = 300;
    int patience = 20;
    double convergence_tol = 1e-4;
    TrainMode mode = TrainMode::Supervised;
    DiscLossVariant disc_loss = DiscLossVariant::HintedEntries;
    uint64_t seed = 0;
};

/// Per-epoch, per-domain loss components (per-row means over the epoch's
/// batches). `total` combines the domain terms with their lambda weights;
/// the alignment term is shared per epoch and recorded separately.
struct EpochDomainRecord {
    int epoch = 0;
    int domain_id = 0;
    double l_rec = 0, l_m = 0, l_d = 0, l_c = 0, l_mmd = 0, total = 0;
};

struct TrainReport {
    std::vector<EpochDomainRecord> records;
    std::vector<double> epoch_totals;   // full weighted objective per epoch
    std::vector<double> epoch_seconds;  // wall clock, kept out of emitted files
    int epochs_run = 0;
    uint64_t seed = 0;
    std::string checkpoint_ref;
};

struct TrainedModel {
    GeneratorNet gen;
    DiscriminatorNet disc;
    std::optional<ClassifierHead> head;
    TrainReport report;
};

struct AaeOutputs {
    Matrix xtilde, xbar, xhat, h, m, e;
};

/// One pass of the autoencoding procedure on a batch: corrupt, generate,
/// compose, hint.
AaeOutputs aae_forward(GeneratorNet& g, const Matrix& x, const Matrix& m, Rng& rng);

struct DomainLosses {
    double l_rec = 0, l_m = 0, l_d = 0, l_c = 0;
};

struct LossComponents {
    std::vector<DomainLosses> domains;
    double l_mmd = 0;
};

/// sum_s (l_rec + lambda0*l_m + lambda1*l_d + lambda2*l_c) + lambda3*l_mmd;
/// the classifier term is dropped in unsupervised mode.
double total_loss(const LossComponents& components, const HyperParams& hp);

// Single-batch phase updates, exposed so the adversarial separation can be
// exercised directly. Each returns the unweighted per-row mean loss of its
// phase (train_step_gen returns (l_rec, l_m)).
double train_step_disc(GeneratorNet& g, DiscriminatorNet& d, const Matrix& xb, const Matrix& mb,
                       const HyperParams& hp, Rng& rng);
std::pair<double, double> train_step_gen(GeneratorNet& g, DiscriminatorNet& d, const Matrix& xb,
                                         const Matrix& mb, const std::vector<ColType>& col_types,
                                         const HyperParams& hp, Rng& rng);
// penalty_scale implements the mini-batch estimator of the full-dataset
// classifier objective: batch_rows / total_rows.
double train_step_mtl(GeneratorNet& g, ClassifierHead& head, const Matrix& xb, const Matrix& mb,
                      const Matrix& yb, int task, const HyperParams& hp, Rng& rng,
                      double penalty_scale = 1.0);
double train_step_mmd(GeneratorNet& g, const std::vector<const DomainDataset*>& domains,
                      const HyperParams& hp, Rng& rng);

/// Full training orchestration. Supervised mode requires labels in every
/// domain and builds the shared head (classification domains share one
/// task; regression domains get one task each). Stops when the 10-epoch
/// windowed mean of the objective improves by less than convergence_tol
/// for `patience` consecutive epochs, or at max_epochs.
TrainedModel train_md2i(const std::vector<DomainDataset>& domains, const HyperParams& hp);

/// Dataset with X replaced by the composed imputation and an all-ones mask.
DomainDataset impute_dataset(GeneratorNet& g, const DomainDataset& ds, uint64_t seed);

/// Encodings (n x d_e) for downstream use.
Matrix encode_dataset(GeneratorNet& g, const DomainDataset& ds, uint64_t seed);

void write_report_csv(const TrainReport& report, const std::string& path);
void write_manifest(const HyperParams& hp, const std::vector<std::string>& data_files,
                    const std::string& path);

}  // namespace md2i
