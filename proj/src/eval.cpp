#include "md2i/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace md2i {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (pred.empty()) throw std::invalid_argument("accuracy: empty input");
    size_t correct = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / pred.size();
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("rmse: length mismatch");
    if (pred.empty()) throw std::invalid_argument("rmse: empty input");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        double diff = pred[i] - truth[i];
        acc += diff * diff;
    }
    return std::sqrt(acc / pred.size());
}

double f1_positive(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("f1: length mismatch");
    double tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == 1 && truth[i] == 1) ++tp;
        if (pred[i] == 1 && truth[i] == 0) ++fp;
        if (pred[i] == 0 && truth[i] == 1) ++fn;
    }
    double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

void ExperimentResult::finalize() {
    if (runs.empty()) {
        mean = stddev = 0;
        return;
    }
    double sum = 0.0;
    for (const auto& r : runs) sum += r.value;
    mean = sum / runs.size();
    if (runs.size() > 1) {
        double acc = 0.0;
        for (const auto& r : runs) acc += (r.value - mean) * (r.value - mean);
        stddev = std::sqrt(acc / (runs.size() - 1));
    } else {
        stddev = 0.0;
    }
}

std::string method_name(Method m) {
    switch (m) {
        case Method::Md2iS: return "md2i-s";
        case Method::Md2iU: return "md2i-u";
        case Method::B1: return "b1";
        case Method::B2: return "b2";
        case Method::B1Di: return "b1-di";
        case Method::B2Di: return "b2-di";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "md2i-s") return Method::Md2iS;
    if (name == "md2i-u") return Method::Md2iU;
    if (name == "b1") return Method::B1;
    if (name == "b2") return Method::B2;
    if (name == "b1-di") return Method::B1Di;
    if (name == "b2-di") return Method::B2Di;
    throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<double> fit_column_fill(const std::vector<const DomainDataset*>& sources) {
    if (sources.empty()) throw std::invalid_argument("fit_column_fill: no sources");
    int d = sources.front()->d();
    std::vector<double> fill(d, 0.0);
    for (int j = 0; j < d; ++j) {
        if (sources.front()->col_types[j] == ColType::Continuous) {
            double sum = 0.0;
            long count = 0;
            for (const auto* ds : sources)
                for (int i = 0; i < ds->n(); ++i)
                    if (ds->m(i, j) == 1.0) {
                        sum += ds->x(i, j);
                        ++count;
                    }
            fill[j] = count > 0 ? sum / count : 0.5;
        } else {
            long zeros = 0, ones = 0;
            for (const auto* ds : sources)
                for (int i = 0; i < ds->n(); ++i)
                    if (ds->m(i, j) == 1.0) (ds->x(i, j) == 0.0 ? zeros : ones) += 1;
            fill[j] = ones > zeros ? 1.0 : 0.0;  // ties break toward 0
        }
    }
    return fill;
}

DomainDataset apply_column_fill(const DomainDataset& ds, const std::vector<double>& fill) {
    if (static_cast<int>(fill.size()) != ds.d())
        throw std::invalid_argument("apply_column_fill: width mismatch");
    DomainDataset out = ds;
    for (int i = 0; i < ds.n(); ++i)
        for (int j = 0; j < ds.d(); ++j)
            if (ds.m(i, j) == 0.0) out.x(i, j) = fill[j];
    out.m = Matrix(ds.n(), ds.d(), 1.0);
    return out;
}

namespace {

std::vector<LayerSpec> stack_specs(int in, int hidden_layers, int hidden, int out) {
    std::vector<LayerSpec> specs;
    int width = in;
    for (int l = 0; l < hidden_layers; ++l) {
        specs.push_back({width, hidden, Activation::ReLU});
        width = hidden;
    }
    specs.push_back({width, out, Activation::Linear});
    return specs;
}

template <typename LossFn>
MlpNet train_net(const Matrix& x, const Matrix& y, std::vector<LayerSpec> specs,
                 const SgdConfig& sgd, int epochs, uint64_t seed, LossFn&& loss_fn) {
    Rng rng(seed);
    MlpNet net(specs, rng);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (const auto& idx : draw_batches(x.rows, sgd.batch_size, rng)) {
            Matrix xb = take_rows(x, idx);
            Matrix yb = take_rows(y, idx);
            const Matrix& out = net.forward(xb);
            Matrix grad;
            loss_fn(out, yb, &grad);
            scale(grad, 1.0 / xb.rows);
            net.backward(grad);
            net.sgd_step(sgd);
        }
    }
    return net;
}

}  // namespace

MlpNet train_classifier_net(const Matrix& x, const Matrix& y_onehot, int hidden_layers, int hidden,
                            const SgdConfig& sgd, int epochs, uint64_t seed) {
    return train_net(x, y_onehot, stack_specs(x.cols, hidden_layers, hidden, y_onehot.cols), sgd,
                     epochs, seed,
                     [](const Matrix& out, const Matrix& yb, Matrix* grad) {
                         return softmax_ce(out, yb, grad);
                     });
}

MlpNet train_regressor_net(const Matrix& x, const Matrix& y, int hidden_layers, int hidden,
                           const SgdConfig& sgd, int epochs, uint64_t seed) {
    return train_net(x, y, stack_specs(x.cols, hidden_layers, hidden, y.cols), sgd, epochs, seed,
                     [](const Matrix& out, const Matrix& yb, Matrix* grad) {
                         return squared_error(out, yb, grad);
                     });
}

namespace {

DomainDataset pool_datasets(const std::vector<const DomainDataset*>& parts) {
    DomainDataset out;
    out.col_types = parts.front()->col_types;
    int n = 0;
    for (const auto* p : parts) n += p->n();
    int d = parts.front()->d();
    out.x = Matrix(n, d);
    out.m = Matrix(n, d);
    bool labeled = parts.front()->has_labels();
    if (labeled) {
        out.y = Matrix(n, parts.front()->d_y());
        out.y_is_onehot = parts.front()->y_is_onehot;
    }
    int at = 0;
    for (const auto* p : parts) {
        for (int i = 0; i < p->n(); ++i, ++at) {
            std::copy(p->x.row_ptr(i), p->x.row_ptr(i) + d, out.x.row_ptr(at));
            std::copy(p->m.row_ptr(i), p->m.row_ptr(i) + d, out.m.row_ptr(at));
            if (labeled)
                std::copy(p->y.row_ptr(i), p->y.row_ptr(i) + p->d_y(), out.y.row_ptr(at));
        }
    }
    return out;
}

std::vector<int> true_labels(const DomainDataset& ds) { return argmax_rows(ds.y); }

double eval_classifier(MlpNet& net, const Matrix& x, const std::vector<int>& truth) {
    return accuracy(argmax_rows(net.forward(x)), truth);
}

// Dispatch `total` run indices across a fixed number of threads; exceptions
// propagate after join.
void parallel_runs(int total, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || total <= 1) {
        for (int i = 0; i < total; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < std::min(threads, total); ++t) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

double dg_single_run(const std::vector<DomainDataset>& domains, int held, const HyperParams& hp,
                     const DgOptions& opts, Method method, uint64_t seed,
                     TrainReport* report_out) {
    std::vector<const DomainDataset*> sources;
    std::vector<DomainDataset> source_copy;
    for (size_t s = 0; s < domains.size(); ++s)
        if (static_cast<int>(s) != held) sources.push_back(&domains[s]);
    const DomainDataset& target = domains[held];
    std::vector<int> target_truth = true_labels(target);
    int d = target.d();
    SgdConfig sgd = hp.sgd;

    auto downstream_from_encoder = [&](GeneratorNet& gen) {
        std::vector<Matrix> es;
        std::vector<Matrix> ys;
        for (const auto* src : sources) {
            es.push_back(encode_dataset(gen, *src, mix_seed(seed, 101 + src->domain_id)));
            ys.push_back(src->y);
        }
        Matrix e_pool(0, gen.code);
        Matrix y_pool(0, sources.front()->d_y());
        int n = 0;
        for (const auto& e : es) n += e.rows;
        e_pool = Matrix(n, gen.code);
        y_pool = Matrix(n, sources.front()->d_y());
        int at = 0;
        for (size_t k = 0; k < es.size(); ++k)
            for (int i = 0; i < es[k].rows; ++i, ++at) {
                std::copy(es[k].row_ptr(i), es[k].row_ptr(i) + gen.code, e_pool.row_ptr(at));
                std::copy(ys[k].row_ptr(i), ys[k].row_ptr(i) + y_pool.cols, y_pool.row_ptr(at));
            }
        MlpNet net = train_classifier_net(e_pool, y_pool, 1, gen.code, sgd,
                                          opts.downstream_epochs, mix_seed(seed, 7));
        Matrix e_target = encode_dataset(gen, target, mix_seed(seed, 999));
        return eval_classifier(net, e_target, target_truth);
    };

    switch (method) {
        case Method::Md2iS: {
            HyperParams run_hp = hp;
            run_hp.mode = TrainMode::Supervised;
            run_hp.seed = seed;
            std::vector<DomainDataset> src;
            for (const auto* s : sources) src.push_back(*s);
            TrainedModel model = train_md2i(src, run_hp);
            if (report_out) *report_out = model.report;
            Matrix e_target = encode_dataset(model.gen, target, mix_seed(seed, 999));
            Matrix probs = predict(*model.head, e_target, 0);
            return accuracy(argmax_rows(probs), target_truth);
        }
        case Method::Md2iU: {
            HyperParams run_hp = hp;
            run_hp.mode = TrainMode::Unsupervised;
            run_hp.seed = seed;
            std::vector<DomainDataset> src;
            for (const auto* s : sources) src.push_back(*s);
            TrainedModel model = train_md2i(src, run_hp);
            if (report_out) *report_out = model.report;
            return downstream_from_encoder(model.gen);
        }
        case Method::B2: {
            auto fill = fit_column_fill(sources);
            std::vector<DomainDataset> filled;
            std::vector<const DomainDataset*> filled_ptrs;
            for (const auto* s : sources) filled.push_back(apply_column_fill(*s, fill));
            for (const auto& f : filled) filled_ptrs.push_back(&f);
            DomainDataset pooled = pool_datasets(filled_ptrs);
            MlpNet net = train_classifier_net(pooled.x, pooled.y, 2, latent_width(d), sgd,
                                              opts.downstream_epochs, mix_seed(seed, 11));
            DomainDataset target_filled = apply_column_fill(target, fill);
            return eval_classifier(net, target_filled.x, target_truth);
        }
        case Method::B2Di: {
            DomainDataset pooled = pool_datasets(sources);
            HyperParams run_hp = hp;
            run_hp.mode = TrainMode::Unsupervised;
            run_hp.seed = seed;
            TrainedModel model = train_md2i({pooled}, run_hp);
            if (report_out) *report_out = model.report;
            DomainDataset pooled_imputed =
                impute_dataset(model.gen, pooled, mix_seed(seed, 31));
            MlpNet net = train_classifier_net(pooled_imputed.x, pooled_imputed.y, 2,
                                              latent_width(d), sgd, opts.downstream_epochs,
                                              mix_seed(seed, 11));
            DomainDataset target_imputed = impute_dataset(model.gen, target, mix_seed(seed, 37));
            return eval_classifier(net, target_imputed.x, target_truth);
        }
        case Method::B1: {
            double acc = 0.0;
            for (size_t k = 0; k < sources.size(); ++k) {
                auto fill = fit_column_fill({sources[k]});
                DomainDataset filled = apply_column_fill(*sources[k], fill);
                MlpNet net = train_classifier_net(filled.x, filled.y, 2, latent_width(d), sgd,
                                                  opts.downstream_epochs, mix_seed(seed, 11 + k));
                DomainDataset target_filled = apply_column_fill(target, fill);
                acc += eval_classifier(net, target_filled.x, target_truth);
            }
            return acc / sources.size();
        }
        case Method::B1Di: {
            double acc = 0.0;
            for (size_t k = 0; k < sources.size(); ++k) {
                HyperParams run_hp = hp;
                run_hp.mode = TrainMode::Unsupervised;
                run_hp.seed = mix_seed(seed, 41 + k);
                TrainedModel model = train_md2i({*sources[k]}, run_hp);
                DomainDataset imputed =
                    impute_dataset(model.gen, *sources[k], mix_seed(seed, 51 + k));
                MlpNet net = train_classifier_net(imputed.x, imputed.y, 2, latent_width(d), sgd,
                                                  opts.downstream_epochs, mix_seed(seed, 11 + k));
                DomainDataset target_imputed =
                    impute_dataset(model.gen, target, mix_seed(seed, 61 + k));
                acc += eval_classifier(net, target_imputed.x, target_truth);
            }
            return acc / sources.size();
        }
    }
    throw std::logic_error("dg_single_run: unhandled method");
}

}  // namespace

ExperimentResult run_dg_protocol(const std::vector<DomainDataset>& domains, const HyperParams& hp,
                                 const DgOptions& opts, Method method) {
    if (domains.size() < 2) throw std::invalid_argument("dg: needs at least 2 domains");
    for (const auto& ds : domains)
        if (!ds.has_labels() || !ds.y_is_onehot)
            throw std::invalid_argument("dg: every domain needs class labels");
    std::vector<int> held = opts.held_out;
    if (held.empty()) {
        held.resize(domains.size());
        std::iota(held.begin(), held.end(), 0);
    }
    for (int h : held)
        if (h < 0 || h >= static_cast<int>(domains.size()))
            throw std::invalid_argument("dg: held-out index out of range");

    ExperimentResult result;
    result.protocol = "dg";
    result.method = method_name(method);
    result.repeats = opts.repeats;
    int total = opts.repeats * static_cast<int>(held.size());
    result.runs.resize(total);

    parallel_runs(total, opts.threads, [&](int run) {
        int r = run / static_cast<int>(held.size());
        int hidx = run % static_cast<int>(held.size());
        uint64_t seed = mix_seed(mix_seed(opts.base_seed, r), 7919 + held[hidx]);
        TrainReport report;
        bool capture = opts.first_report && run == 0;
        double value = dg_single_run(domains, held[hidx], hp, opts, method, seed,
                                     capture ? &report : nullptr);
        if (capture) *opts.first_report = report;
        result.runs[run] = {run, seed, held[hidx], "accuracy", value};
    });
    result.finalize();
    return result;
}

namespace {

struct SplitTask {
    DomainDataset train;
    DomainDataset test;
};

std::vector<SplitTask> split_tasks(const std::vector<DomainDataset>& tasks, double split,
                                   double mar_t, uint64_t seed) {
    // MAR corruption runs over the concatenated table so the condition
    // columns and medians are global, then rows return to their tasks.
    std::vector<DomainDataset> working(tasks.begin(), tasks.end());
    if (mar_t > 0.0) {
        std::vector<const DomainDataset*> ptrs;
        for (const auto& t : tasks) ptrs.push_back(&t);
        DomainDataset all = pool_datasets(ptrs);
        MissingSpec spec;
        spec.mechanism = MissingSpec::Mechanism::MarRule;
        spec.threshold = mar_t;
        spec.seed = mix_seed(seed, 271);
        DomainDataset corrupted = inject_mar(all, spec);
        int at = 0;
        for (auto& t : working) {
            for (int i = 0; i < t.n(); ++i, ++at)
                std::copy(corrupted.m.row_ptr(at), corrupted.m.row_ptr(at) + t.d(),
                          t.m.row_ptr(i));
        }
    }
    std::vector<SplitTask> out;
    for (size_t k = 0; k < working.size(); ++k) {
        const DomainDataset& t = working[k];
        if (t.n() < 2) throw std::invalid_argument("mtl: a task has fewer than 2 samples");
        Rng rng(mix_seed(seed, 1000 + k));
        std::vector<int> perm(t.n());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        int n_train = std::clamp(static_cast<int>(std::lround(t.n() * split)), 1, t.n() - 1);
        std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
        std::vector<int> test_idx(perm.begin() + n_train, perm.end());
        SplitTask st;
        for (auto* pair : {&st.train, &st.test}) {
            pair->domain_id = t.domain_id;
            pair->col_types = t.col_types;
            pair->y_is_onehot = t.y_is_onehot;
        }
        st.train.x = take_rows(t.x, train_idx);
        st.train.m = take_rows(t.m, train_idx);
        st.train.y = take_rows(t.y, train_idx);
        st.test.x = take_rows(t.x, test_idx);
        st.test.m = take_rows(t.m, test_idx);
        st.test.y = take_rows(t.y, test_idx);
        out.push_back(std::move(st));
    }
    return out;
}

double pooled_rmse(const std::vector<std::vector<double>>& preds,
                   const std::vector<std::vector<double>>& truths) {
    std::vector<double> p, t;
    for (const auto& v : preds) p.insert(p.end(), v.begin(), v.end());
    for (const auto& v : truths) t.insert(t.end(), v.begin(), v.end());
    return rmse(p, t);
}

double mtl_single_run(const std::vector<DomainDataset>& tasks, const HyperParams& hp,
                      const MtlOptions& opts, Method method, uint64_t seed,
                      TrainReport* report_out) {
    auto splits = split_tasks(tasks, opts.split, opts.mar_t, seed);
    int d = tasks.front().d();
    SgdConfig sgd = hp.sgd;
    std::vector<std::vector<double>> preds(splits.size()), truths(splits.size());
    for (size_t k = 0; k < splits.size(); ++k) {
        truths[k].assign(splits[k].test.y.data.begin(), splits[k].test.y.data.end());
    }

    auto regress_with = [&](MlpNet& net, const Matrix& x, std::vector<double>& out) {
        const Matrix& y = net.forward(x);
        out.assign(y.data.begin(), y.data.end());
    };

    switch (method) {
        case Method::Md2iS: {
            HyperParams run_hp = hp;
            run_hp.mode = TrainMode::Supervised;
            run_hp.seed = seed;
            std::vector<DomainDataset> train_sets;
            for (const auto& s : splits) train_sets.push_back(s.train);
            TrainedModel model = train_md2i(train_sets, run_hp);
            if (report_out) *report_out = model.report;
            for (size_t k = 0; k < splits.size(); ++k) {
                Matrix e = encode_dataset(model.gen, splits[k].test, mix_seed(seed, 500 + k));
                Matrix yhat = predict(*model.head, e, static_cast<int>(k));
                preds[k].assign(yhat.data.begin(), yhat.data.end());
            }
            break;
        }
        case Method::Md2iU: {
            HyperParams run_hp = hp;
            run_hp.mode = TrainMode::Unsupervised;
            run_hp.seed = seed;
            std::vector<DomainDataset> train_sets;
            for (const auto& s : splits) train_sets.push_back(s.train);
            TrainedModel model = train_md2i(train_sets, run_hp);
            if (report_out) *report_out = model.report;
            for (size_t k = 0; k < splits.size(); ++k) {
                Matrix e_train = encode_dataset(model.gen, splits[k].train, mix_seed(seed, 400 + k));
                MlpNet net = train_regressor_net(e_train, splits[k].train.y, 1, model.gen.code,
                                                 sgd, opts.downstream_epochs, mix_seed(seed, 13 + k));
                Matrix e_test = encode_dataset(model.gen, splits[k].test, mix_seed(seed, 500 + k));
                regress_with(net, e_test, preds[k]);
            }
            break;
        }
        case Method::B1: {
            for (size_t k = 0; k < splits.size(); ++k) {
                auto fill = fit_column_fill({&splits[k].train});
                DomainDataset train = apply_column_fill(splits[k].train, fill);
                DomainDataset test = apply_column_fill(splits[k].test, fill);
                MlpNet net = train_regressor_net(train.x, train.y, 2, latent_width(d), sgd,
                                                 opts.downstream_epochs, mix_seed(seed, 13 + k));
                regress_with(net, test.x, preds[k]);
            }
            break;
        }
        case Method::B2: {
            std::vector<const DomainDataset*> train_ptrs;
            for (const auto& s : splits) train_ptrs.push_back(&s.train);
            auto fill = fit_column_fill(train_ptrs);
            std::vector<DomainDataset> filled;
            std::vector<const DomainDataset*> filled_ptrs;
            for (const auto& s : splits) filled.push_back(apply_column_fill(s.train, fill));
            for (const auto& f : filled) filled_ptrs.push_back(&f);
            DomainDataset pooled = pool_datasets(filled_ptrs);
            MlpNet net = train_regressor_net(pooled.x, pooled.y, 2, latent_width(d), sgd,
                                             opts.downstream_epochs, mix_seed(seed, 13));
            for (size_t k = 0; k < splits.size(); ++k) {
                DomainDataset test = apply_column_fill(splits[k].test, fill);
                regress_with(net, test.x, preds[k]);
            }
            break;
        }
        case Method::B1Di: {
            for (size_t k = 0; k < splits.size(); ++k) {
                HyperParams run_hp = hp;
                run_hp.mode = TrainMode::Unsupervised;
                run_hp.seed = mix_seed(seed, 600 + k);
                TrainedModel model = train_md2i({splits[k].train}, run_hp);
                DomainDataset train =
                    impute_dataset(model.gen, splits[k].train, mix_seed(seed, 700 + k));
                DomainDataset test =
                    impute_dataset(model.gen, splits[k].test, mix_seed(seed, 800 + k));
                MlpNet net = train_regressor_net(train.x, train.y, 2, latent_width(d), sgd,
                                                 opts.downstream_epochs, mix_seed(seed, 13 + k));
                regress_with(net, test.x, preds[k]);
            }
            break;
        }
        case Method::B2Di: {
            std::vector<const DomainDataset*> train_ptrs;
            for (const auto& s : splits) train_ptrs.push_back(&s.train);
            DomainDataset pooled = pool_datasets(train_ptrs);
            HyperParams run_hp = hp;
            run_hp.mode = TrainMode::Unsupervised;
            run_hp.seed = seed;
            TrainedModel model = train_md2i({pooled}, run_hp);
            DomainDataset pooled_train = impute_dataset(model.gen, pooled, mix_seed(seed, 900));
            MlpNet net = train_regressor_net(pooled_train.x, pooled_train.y, 2, latent_width(d),
                                             sgd, opts.downstream_epochs, mix_seed(seed, 13));
            for (size_t k = 0; k < splits.size(); ++k) {
                DomainDataset test =
                    impute_dataset(model.gen, splits[k].test, mix_seed(seed, 950 + k));
                regress_with(net, test.x, preds[k]);
            }
            break;
        }
    }
    return pooled_rmse(preds, truths);
}

}  // namespace

ExperimentResult run_mtl_protocol(const std::vector<DomainDataset>& tasks, const HyperParams& hp,
                                  const MtlOptions& opts, Method method) {
    if (tasks.empty()) throw std::invalid_argument("mtl: no tasks");
    for (const auto& t : tasks)
        if (!t.has_labels() || t.y_is_onehot)
            throw std::invalid_argument("mtl: every task needs regression labels");

    ExperimentResult result;
    result.protocol = "mtl";
    result.method = method_name(method);
    result.repeats = opts.repeats;
    result.runs.resize(opts.repeats);

    parallel_runs(opts.repeats, opts.threads, [&](int r) {
        uint64_t seed = mix_seed(opts.base_seed, 104729 + r);
        TrainReport report;
        bool capture = opts.first_report && r == 0;
        double value = mtl_single_run(tasks, hp, opts, method, seed, capture ? &report : nullptr);
        if (capture) *opts.first_report = report;
        result.runs[r] = {r, seed, r, "rmse", value};
    });
    result.finalize();
    return result;
}

ExperimentResult run_baseline(Method kind, const std::string& protocol,
                              const std::vector<DomainDataset>& domains, const HyperParams& hp,
                              const DgOptions& dg_opts, const MtlOptions& mtl_opts) {
    if (kind == Method::Md2iS || kind == Method::Md2iU)
        throw std::invalid_argument("run_baseline: kind must be a baseline");
    if (protocol == "dg") return run_dg_protocol(domains, hp, dg_opts, kind);
    if (protocol == "mtl") return run_mtl_protocol(domains, hp, mtl_opts, kind);
    throw std::invalid_argument("run_baseline: unknown protocol '" + protocol + "'");
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_results_csv(const ExperimentResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("results: cannot write '" + path + "'");
    out << "protocol,run,seed,held_out_or_fold,metric_name,value\n";
    for (const auto& r : result.runs)
        out << result.protocol << ',' << r.run << ',' << r.seed << ',' << r.held_out_or_fold << ','
            << r.metric << ',' << fmt(r.value) << '\n';
}

void append_summary_csv(const ExperimentResult& result, const std::string& path, bool header) {
    std::ofstream out(path, header ? std::ios::trunc : std::ios::app);
    if (!out) throw std::runtime_error("summary: cannot write '" + path + "'");
    if (header) out << "protocol,method,metric_name,stat,value,runs\n";
    std::string metric = result.runs.empty() ? "" : result.runs.front().metric;
    out << result.protocol << ',' << result.method << ',' << metric << ",mean," << fmt(result.mean)
        << ',' << result.runs.size() << '\n';
    out << result.protocol << ',' << result.method << ',' << metric << ",std,"
        << fmt(result.stddev) << ',' << result.runs.size() << '\n';
}

}  // namespace md2i
