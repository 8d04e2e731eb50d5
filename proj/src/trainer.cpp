#include "md2i/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace md2i {

AaeOutputs aae_forward(GeneratorNet& g, const Matrix& x, const Matrix& m, Rng& rng) {
    AaeOutputs out;
    auto [xtilde, mask] = make_tilde(x, m, rng);
    out.xtilde = std::move(xtilde);
    out.m = std::move(mask);
    auto [xbar, e] = generate(g, out.xtilde, out.m);
    out.xbar = std::move(xbar);
    out.e = std::move(e);
    out.xhat = impute(out.xtilde, out.m, out.xbar);
    out.h = sample_hint(out.m, rng);
    return out;
}

double total_loss(const LossComponents& components, const HyperParams& hp) {
    double total = 0.0;
    for (const auto& dom : components.domains) {
        total += dom.l_rec + hp.lambda0 * dom.l_m + hp.lambda1 * dom.l_d;
        if (hp.mode == TrainMode::Supervised) total += hp.lambda2 * dom.l_c;
    }
    return total + hp.lambda3 * components.l_mmd;
}

double train_step_disc(GeneratorNet& g, DiscriminatorNet& d, const Matrix& xb, const Matrix& mb,
                       const HyperParams& hp, Rng& rng) {
    AaeOutputs out = aae_forward(g, xb, mb, rng);
    Matrix mhat = discriminate(d, out.xhat, out.h);
    Matrix grad;
    double value = loss_disc(out.m, mhat, out.h, hp.disc_loss, &grad);
    scale(grad, hp.lambda1 / xb.rows);
    d.net.backward(grad);
    d.net.sgd_step(hp.sgd);
    return value / xb.rows;
}

std::pair<double, double> train_step_gen(GeneratorNet& g, DiscriminatorNet& d, const Matrix& xb,
                                         const Matrix& mb, const std::vector<ColType>& col_types,
                                         const HyperParams& hp, Rng& rng) {
    AaeOutputs out = aae_forward(g, xb, mb, rng);
    Matrix mhat = discriminate(d, out.xhat, out.h);
    Matrix grad_rec;
    double l_rec = loss_rec(xb, out.xbar, out.m, col_types, &grad_rec);
    Matrix grad_mhat;
    double l_m = loss_gen_adv(out.m, mhat, &grad_mhat);

    // The adversarial term reaches xbar through the frozen discriminator:
    // d L_M / d xbar = (1-m) .* (d L_M / d xhat).
    Matrix grad_input = d.net.backward(grad_mhat);  // n x 2d
    Matrix grad_xbar = grad_rec;
    double inv_n = 1.0 / xb.rows;
    for (int i = 0; i < grad_xbar.rows; ++i) {
        const double* gi = grad_input.row_ptr(i);
        const double* mi = out.m.row_ptr(i);
        double* go = grad_xbar.row_ptr(i);
        for (int j = 0; j < grad_xbar.cols; ++j)
            go[j] = inv_n * (go[j] + hp.lambda0 * (1.0 - mi[j]) * gi[j]);
    }
    Matrix grad_e = g.decoder.backward(grad_xbar);
    g.encoder.backward(grad_e);
    g.encoder.sgd_step(hp.sgd);
    g.decoder.sgd_step(hp.sgd);
    d.net.zero_grad();  // the D phase owns discriminator updates
    return {l_rec * inv_n, l_m * inv_n};
}

double train_step_mtl(GeneratorNet& g, ClassifierHead& head, const Matrix& xb, const Matrix& mb,
                      const Matrix& yb, int task, const HyperParams& hp, Rng& rng,
                      double penalty_scale) {
    AaeOutputs out = aae_forward(g, xb, mb, rng);
    std::vector<TaskBatch> batch{{task, &out.e, &yb}};
    Matrix grad_w;
    std::vector<Matrix> grad_e;
    double value = loss_mtl_grad(head, batch, &grad_w, &grad_e);
    // Split the full gradient back into data and penalty parts so the
    // penalties can be weighted down to the mini-batch estimator scale.
    double l1 = 0.0, fro2 = 0.0;
    for (size_t k = 0; k < head.w.data.size(); ++k) {
        double v = head.w.data[k];
        l1 += std::fabs(v);
        fro2 += v * v;
        double pen_grad = head.rho0 * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0)) +
                          2.0 * head.rho_l2 * v;
        grad_w.data[k] -= (1.0 - penalty_scale) * pen_grad;
    }
    double penalty = head.rho0 * l1 + head.rho_l2 * fro2;
    add_scaled(head.gw, grad_w, hp.lambda2);
    head.sgd_step(hp.sgd);
    // The encoder shares the per-row mean convention of the other phases.
    scale(grad_e[0], hp.lambda2 / xb.rows);
    g.encoder.backward(grad_e[0]);
    g.encoder.sgd_step(hp.sgd);
    return (value - penalty) / xb.rows;
}

double train_step_mmd(GeneratorNet& g, const std::vector<const DomainDataset*>& domains,
                      const HyperParams& hp, Rng& rng) {
    KernelConfig kcfg{hp.sigma};
    std::vector<Matrix> inputs;
    std::vector<Matrix> encodings;
    inputs.reserve(domains.size());
    encodings.reserve(domains.size());
    for (const DomainDataset* ds : domains) {
        auto batches = draw_batches(ds->n(), hp.sgd.batch_size, rng);
        Matrix xb = take_rows(ds->x, batches.front());
        Matrix mb = take_rows(ds->m, batches.front());
        auto [xtilde, mask] = make_tilde(xb, mb, rng);
        inputs.push_back(hconcat(xtilde, mask));
        encodings.push_back(g.encoder.forward(inputs.back()));
    }
    double l_mmd = 0.0;
    std::vector<Matrix> grads = mmd_loss_grad(encodings, kcfg, &l_mmd);
    for (size_t s = 0; s < domains.size(); ++s) {
        scale(grads[s], hp.lambda3);
        g.encoder.forward(inputs[s]);  // restore this domain's cache
        g.encoder.backward(grads[s]);
    }
    g.encoder.sgd_step(hp.sgd);
    return l_mmd;
}

namespace {

struct TaskLayout {
    std::vector<std::pair<TaskKind, int>> tasks;
    std::vector<int> task_of_domain;
};

TaskLayout plan_tasks(const std::vector<DomainDataset>& domains) {
    TaskLayout layout;
    bool all_onehot = true, all_regression = true;
    for (const auto& ds : domains) {
        if (!ds.has_labels()) throw std::invalid_argument("train: supervised mode requires labels");
        all_onehot = all_onehot && ds.y_is_onehot;
        all_regression = all_regression && !ds.y_is_onehot;
    }
    if (all_onehot) {
        int d_y = domains.front().d_y();
        for (const auto& ds : domains)
            if (ds.d_y() != d_y)
                throw std::invalid_argument("train: class counts differ across domains");
        layout.tasks = {{TaskKind::Classification, d_y}};
        layout.task_of_domain.assign(domains.size(), 0);
    } else if (all_regression) {
        for (size_t s = 0; s < domains.size(); ++s) {
            layout.tasks.push_back({TaskKind::Regression, 1});
            layout.task_of_domain.push_back(static_cast<int>(s));
        }
    } else {
        throw std::invalid_argument("train: domains mix classification and regression labels");
    }
    return layout;
}

}  // namespace

TrainedModel train_md2i(const std::vector<DomainDataset>& domains, const HyperParams& hp) {
    if (domains.empty()) throw std::invalid_argument("train: no domains");
    int d = domains.front().d();
    for (const auto& ds : domains) {
        if (ds.d() != d) throw std::invalid_argument("train: feature widths differ across domains");
        if (ds.col_types != domains.front().col_types)
            throw std::invalid_argument("train: column types differ across domains");
    }
    bool supervised = hp.mode == TrainMode::Supervised;

    Rng rng(hp.seed);
    TrainedModel model;
    model.gen = make_generator(d, rng);
    model.disc = make_discriminator(d, rng);
    TaskLayout layout;
    if (supervised) {
        layout = plan_tasks(domains);
        model.head = make_head(model.gen.code, layout.tasks, hp.rho0, hp.rho_l2, rng);
    }
    model.report.seed = hp.seed;

    int s_count = static_cast<int>(domains.size());
    std::vector<const DomainDataset*> domain_ptrs;
    double total_rows = 0;
    for (const auto& ds : domains) {
        domain_ptrs.push_back(&ds);
        total_rows += ds.n();
    }

    int stall_epochs = 0;
    for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        LossComponents components;
        components.domains.resize(s_count);
        for (int s = 0; s < s_count; ++s) {
            const DomainDataset& ds = domains[s];
            DomainLosses& dl = components.domains[s];

            double acc = 0.0;
            for (const auto& idx : draw_batches(ds.n(), hp.sgd.batch_size, rng)) {
                Matrix xb = take_rows(ds.x, idx);
                Matrix mb = take_rows(ds.m, idx);
                acc += train_step_disc(model.gen, model.disc, xb, mb, hp, rng) * xb.rows;
            }
            dl.l_d = acc / ds.n();

            double acc_rec = 0.0, acc_m = 0.0;
            for (const auto& idx : draw_batches(ds.n(), hp.sgd.batch_size, rng)) {
                Matrix xb = take_rows(ds.x, idx);
                Matrix mb = take_rows(ds.m, idx);
                auto [l_rec, l_m] =
                    train_step_gen(model.gen, model.disc, xb, mb, ds.col_types, hp, rng);
                acc_rec += l_rec * xb.rows;
                acc_m += l_m * xb.rows;
            }
            dl.l_rec = acc_rec / ds.n();
            dl.l_m = acc_m / ds.n();

            if (supervised) {
                auto idx = draw_batches(ds.n(), hp.sgd.batch_size, rng).front();
                Matrix xb = take_rows(ds.x, idx);
                Matrix mb = take_rows(ds.m, idx);
                Matrix yb = take_rows(ds.y, idx);
                dl.l_c = train_step_mtl(model.gen, *model.head, xb, mb, yb,
                                        layout.task_of_domain[s], hp, rng,
                                        static_cast<double>(xb.rows) / total_rows);
            }
        }
        components.l_mmd = train_step_mmd(model.gen, domain_ptrs, hp, rng);

        double epoch_total = total_loss(components, hp);
        model.report.epoch_totals.push_back(epoch_total);
        for (int s = 0; s < s_count; ++s) {
            const DomainLosses& dl = components.domains[s];
            EpochDomainRecord rec;
            rec.epoch = epoch;
            rec.domain_id = domains[s].domain_id;
            rec.l_rec = dl.l_rec;
            rec.l_m = dl.l_m;
            rec.l_d = dl.l_d;
            rec.l_c = dl.l_c;
            rec.l_mmd = components.l_mmd;
            rec.total = dl.l_rec + hp.lambda0 * dl.l_m + hp.lambda1 * dl.l_d +
                        (supervised ? hp.lambda2 * dl.l_c : 0.0);
            model.report.records.push_back(rec);
        }
        auto t1 = std::chrono::steady_clock::now();
        model.report.epoch_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        model.report.epochs_run = epoch;

        // Windowed convergence: stop after `patience` consecutive epochs with
        // relative improvement of the 10-epoch mean below convergence_tol.
        const auto& totals = model.report.epoch_totals;
        constexpr int kWindow = 10;
        if (static_cast<int>(totals.size()) > kWindow) {
            auto window_mean = [&](int end_excl) {
                double sum = 0.0;
                for (int i = end_excl - kWindow; i < end_excl; ++i) sum += totals[i];
                return sum / kWindow;
            };
            int n = static_cast<int>(totals.size());
            double prev = window_mean(n - 1);
            double curr = window_mean(n);
            double improvement = (prev - curr) / std::max(std::fabs(prev), 1e-12);
            stall_epochs = improvement < hp.convergence_tol ? stall_epochs + 1 : 0;
            if (stall_epochs >= hp.patience) break;
        }
    }
    return model;
}

DomainDataset impute_dataset(GeneratorNet& g, const DomainDataset& ds, uint64_t seed) {
    if (ds.d() != g.d) throw std::invalid_argument("impute_dataset: width differs from generator");
    auto [xtilde, mask] = make_tilde(ds, seed);
    auto [xbar, e] = generate(g, xtilde, mask);
    (void)e;
    DomainDataset out = ds;
    out.x = impute(xtilde, mask, xbar);
    out.m = Matrix(ds.n(), ds.d(), 1.0);
    return out;
}

Matrix encode_dataset(GeneratorNet& g, const DomainDataset& ds, uint64_t seed) {
    if (ds.d() != g.d) throw std::invalid_argument("encode_dataset: width differs from generator");
    auto [xtilde, mask] = make_tilde(ds, seed);
    return encode(g, xtilde, mask);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot write '" + path + "'");
    out << "epoch,domain,l_rec,l_m,l_d,l_c,l_mmd,total\n";
    for (const auto& r : report.records)
        out << r.epoch << ',' << r.domain_id << ',' << fmt(r.l_rec) << ',' << fmt(r.l_m) << ','
            << fmt(r.l_d) << ',' << fmt(r.l_c) << ',' << fmt(r.l_mmd) << ',' << fmt(r.total)
            << '\n';
}

void write_manifest(const HyperParams& hp, const std::vector<std::string>& data_files,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("manifest: cannot write '" + path + "'");
    out << "mode=" << (hp.mode == TrainMode::Supervised ? "supervised" : "unsupervised") << '\n';
    out << "seed=" << hp.seed << '\n';
    out << "lambda0=" << fmt(hp.lambda0) << '\n';
    out << "lambda1=" << fmt(hp.lambda1) << '\n';
    out << "lambda2=" << fmt(hp.lambda2) << '\n';
    out << "lambda3=" << fmt(hp.lambda3) << '\n';
    out << "sigma=" << fmt(hp.sigma) << '\n';
    out << "learning_rate=" << fmt(hp.sgd.learning_rate) << '\n';
    out << "momentum=" << fmt(hp.sgd.momentum) << '\n';
    out << "batch_size=" << hp.sgd.batch_size << '\n';
    out << "rho0=" << fmt(hp.rho0) << '\n';
    out << "rho_l2=" << fmt(hp.rho_l2) << '\n';
    out << "max_epochs=" << hp.max_epochs << '\n';
    out << "patience=" << hp.patience << '\n';
    out << "convergence_tol=" << fmt(hp.convergence_tol) << '\n';
    out << "disc_loss=" << (hp.disc_loss == DiscLossVariant::HintedEntries ? "hint" : "missing")
        << '\n';
    for (size_t i = 0; i < data_files.size(); ++i)
        out << "data" << i << '=' << data_files[i] << '\n';
}

}  // namespace md2i
