#pragma once

#include <span>
#include <string>
#include <vector>

#include "md2i/dataset.hpp"
#include "md2i/trainer.hpp"

namespace md2i {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);
double rmse(std::span<const double> pred, std::span<const double> truth);
/// F1 of the positive class; 0 when precision + recall is 0.
double f1_positive(const std::vector<int>& pred, const std::vector<int>& truth);

struct RunRecord {
    int run = 0;
    uint64_t seed = 0;
    int held_out_or_fold = 0;
    std::string metric;
    double value = 0;
};

struct ExperimentResult {
    std::string protocol;
    std::string method;
    int repeats = 0;
    std::vector<RunRecord> runs;
    double mean = 0;
    double stddev = 0;  // sample standard deviation
    void finalize();
};

enum class Method { Md2iS, Md2iU, B1, B2, B1Di, B2Di };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct DgOptions {
    int repeats = 50;
    std::vector<int> held_out;  // empty = every domain in turn
    uint64_t base_seed = 0;
    int downstream_epochs = 100;
    int threads = 1;
    TrainReport* first_report = nullptr;  // filled from the first trained run when set
};

/// Leave-one-domain-out accuracy. Sources keep their masks; the target
/// keeps its mask too and is never seen during training.
ExperimentResult run_dg_protocol(const std::vector<DomainDataset>& domains, const HyperParams& hp,
                                 const DgOptions& opts, Method method);

struct MtlOptions {
    int repeats = 50;
    double split = 0.5;
    uint64_t base_seed = 0;
    double mar_t = 0.3;  // <= 0 keeps the datasets' own masks
    int downstream_epochs = 100;
    int threads = 1;
    TrainReport* first_report = nullptr;
};

/// Per repeat: optional MAR corruption applied across the concatenated
/// tasks, per-task random split, train, test RMSE pooled over tasks.
ExperimentResult run_mtl_protocol(const std::vector<DomainDataset>& tasks, const HyperParams& hp,
                                  const MtlOptions& opts, Method method);

/// Baseline runner for the active protocol (kind must be B1/B2/B1-DI/B2-DI).
ExperimentResult run_baseline(Method kind, const std::string& protocol,
                              const std::vector<DomainDataset>& domains, const HyperParams& hp,
                              const DgOptions& dg_opts, const MtlOptions& mtl_opts);

/// Column means (continuous) and modes (binary) over observed entries.
std::vector<double> fit_column_fill(const std::vector<const DomainDataset*>& sources);
DomainDataset apply_column_fill(const DomainDataset& ds, const std::vector<double>& fill);

/// Two-hidden-layer net on raw features (baselines) and one-hidden-layer
/// net on encodings (downstream), trained with plain SGD.
MlpNet train_classifier_net(const Matrix& x, const Matrix& y_onehot, int hidden_layers, int hidden,
                            const SgdConfig& sgd, int epochs, uint64_t seed);
MlpNet train_regressor_net(const Matrix& x, const Matrix& y, int hidden_layers, int hidden,
                           const SgdConfig& sgd, int epochs, uint64_t seed);

void write_results_csv(const ExperimentResult& result, const std::string& path);
void append_summary_csv(const ExperimentResult& result, const std::string& path, bool header);

}  // namespace md2i
