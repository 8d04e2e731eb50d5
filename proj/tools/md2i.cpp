// Command-line entry point: dataset synthesis, training, imputation,
// evaluation and gradient verification. Every command is reproducible from
// its flags and seed; outputs are plain files under --out.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "md2i/checkpoint.hpp"
#include "md2i/eval.hpp"
#include "md2i/gradcheck.hpp"
#include "md2i/synth.hpp"
#include "md2i/trainer.hpp"

namespace fs = std::filesystem;
using namespace md2i;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct HyperFlags {
    HyperParams hp;
    std::string mode = "supervised";
    std::string disc_loss = "hint";

    void attach(CLI::App* cmd, bool with_mode = true) {
        cmd->add_option("--lambda0", hp.lambda0, "Weight of the generator adversarial term")
            ->capture_default_str();
        cmd->add_option("--lambda1", hp.lambda1, "Weight of the discriminator term")
            ->capture_default_str();
        cmd->add_option("--lambda2", hp.lambda2, "Weight of the classifier term")
            ->capture_default_str();
        cmd->add_option("--lambda3", hp.lambda3, "Weight of the alignment term")
            ->capture_default_str();
        cmd->add_option("--sigma", hp.sigma, "RBF kernel bandwidth")->capture_default_str();
        cmd->add_option("--lr", hp.sgd.learning_rate, "SGD learning rate")->capture_default_str();
        cmd->add_option("--momentum", hp.sgd.momentum, "SGD momentum")->capture_default_str();
        cmd->add_option("--batch-size", hp.sgd.batch_size, "SGD batch size")->capture_default_str();
        cmd->add_option("--rho0", hp.rho0, "Classifier lasso penalty")->capture_default_str();
        cmd->add_option("--rho-l2", hp.rho_l2, "Classifier ridge penalty")->capture_default_str();
        cmd->add_option("--max-epochs", hp.max_epochs, "Epoch cap")->capture_default_str();
        cmd->add_option("--patience", hp.patience, "Stalled epochs before stopping")
            ->capture_default_str();
        cmd->add_option("--tol", hp.convergence_tol, "Relative improvement threshold")
            ->capture_default_str();
        if (with_mode)
            cmd->add_option("--mode", mode, "supervised|unsupervised")
                ->check(CLI::IsMember({"supervised", "unsupervised"}))
                ->capture_default_str();
        cmd->add_option("--disc-loss", disc_loss, "Discriminator loss index set: hint|missing")
            ->check(CLI::IsMember({"hint", "missing"}))
            ->capture_default_str();
    }

    HyperParams resolve(uint64_t seed) const {
        HyperParams out = hp;
        out.seed = seed;
        out.mode = mode == "supervised" ? TrainMode::Supervised : TrainMode::Unsupervised;
        out.disc_loss =
            disc_loss == "hint" ? DiscLossVariant::HintedEntries : DiscLossVariant::MissingEntries;
        return out;
    }
};

std::vector<DomainDataset> load_domains(const std::vector<std::string>& paths,
                                        LabelKind label_kind) {
    if (paths.empty()) throw ParseError("no data files given");
    std::vector<DomainDataset> out;
    for (size_t i = 0; i < paths.size(); ++i) {
        DomainDataset ds = load_tabular(paths[i], label_kind);
        ds.domain_id = static_cast<int>(i);
        out.push_back(std::move(ds));
    }
    return out;
}

LabelKind parse_label_kind(const std::string& s) {
    if (s == "auto") return LabelKind::Auto;
    if (s == "classification") return LabelKind::Classification;
    if (s == "regression") return LabelKind::Regression;
    throw CLI::ValidationError("--labels", "must be auto|classification|regression");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_plot_data(const TrainReport& report, const fs::path& dir) {
    struct Series {
        const char* name;
        double EpochDomainRecord::*field;
    };
    const Series series[] = {
        {"l_rec", &EpochDomainRecord::l_rec}, {"l_m", &EpochDomainRecord::l_m},
        {"l_d", &EpochDomainRecord::l_d},     {"l_c", &EpochDomainRecord::l_c},
        {"l_mmd", &EpochDomainRecord::l_mmd}, {"total", &EpochDomainRecord::total},
    };
    for (const auto& s : series) {
        std::ofstream out(dir / (std::string("plot_loss_") + s.name + ".csv"));
        out << "x,y\n";
        std::map<int, std::pair<double, int>> acc;  // epoch -> mean over domains
        for (const auto& r : report.records) {
            acc[r.epoch].first += r.*(s.field);
            acc[r.epoch].second += 1;
        }
        for (const auto& [epoch, sum_count] : acc)
            out << epoch << ',' << fmt(sum_count.first / sum_count.second) << '\n';
    }
}

int cmd_synth(const std::string& kind, const std::string& base_path, int per_class,
              const std::vector<double>& angles, int patch_side, int n, int d, int tasks,
              int n_per_task, double shift, double mcar_rate, double mar_t, uint64_t seed,
              const fs::path& out_dir) {
    fs::create_directories(out_dir);
    if (kind == "digits") {
        DomainDataset base = base_path.empty() ? make_glyph_digits(per_class, seed)
                                               : load_tabular(base_path, LabelKind::Classification);
        auto domains = synth_rotated_digits(base, angles);
        for (size_t a = 0; a < domains.size(); ++a) {
            DomainDataset ds = std::move(domains[a]);
            if (patch_side > 0) {
                MissingSpec spec;
                spec.mechanism = MissingSpec::Mechanism::McarPatch;
                spec.patch_side = patch_side;
                spec.seed = mix_seed(seed, 100 + a);
                ds = inject_mcar_patch(ds, spec);
            }
            char name[64];
            std::snprintf(name, sizeof(name), "digits_%03d.csv",
                          static_cast<int>(std::lround(angles[a])));
            save_tabular(ds, (out_dir / name).string());
        }
        std::cout << "wrote " << domains.size() << " digit domains to " << out_dir.string()
                  << "\n";
        return kExitOk;
    }
    if (kind == "tabular") {
        DomainDataset ds = make_linear_tabular(n, d, seed);
        if (mcar_rate > 0) {
            MissingSpec spec;
            spec.mechanism = MissingSpec::Mechanism::McarUniform;
            spec.rate = mcar_rate;
            spec.seed = mix_seed(seed, 1);
            ds = inject_mcar_uniform(ds, spec);
        } else if (mar_t > 0) {
            MissingSpec spec;
            spec.mechanism = MissingSpec::Mechanism::MarRule;
            spec.threshold = mar_t;
            spec.seed = mix_seed(seed, 2);
            ds = inject_mar(ds, spec);
        }
        save_tabular(ds, (out_dir / "tabular.csv").string());
        std::cout << "wrote tabular.csv (" << ds.n() << "x" << ds.d() << ") to "
                  << out_dir.string() << "\n";
        return kExitOk;
    }
    if (kind == "tasks") {
        auto task_sets = make_task_regression(tasks, n_per_task, d, seed);
        for (size_t t = 0; t < task_sets.size(); ++t) {
            if (mar_t > 0) {
                MissingSpec spec;
                spec.mechanism = MissingSpec::Mechanism::MarRule;
                spec.threshold = mar_t;
                spec.seed = mix_seed(seed, 300 + t);
                task_sets[t] = inject_mar(task_sets[t], spec);
            }
            char name[64];
            std::snprintf(name, sizeof(name), "task_%02d.csv", static_cast<int>(t));
            save_tabular(task_sets[t], (out_dir / name).string());
        }
        std::cout << "wrote " << task_sets.size() << " task files to " << out_dir.string() << "\n";
        return kExitOk;
    }
    if (kind == "blobs") {
        auto blobs = make_shifted_blobs(n, d, shift, seed);
        save_tabular(blobs[0], (out_dir / "blob_0.csv").string());
        save_tabular(blobs[1], (out_dir / "blob_1.csv").string());
        std::cout << "wrote blob_0.csv and blob_1.csv to " << out_dir.string() << "\n";
        return kExitOk;
    }
    throw CLI::ValidationError("--kind", "must be digits|tabular|tasks|blobs");
}

int cmd_train(const std::vector<std::string>& data_files, const HyperFlags& flags, uint64_t seed,
              const std::string& labels, const fs::path& out_dir) {
    auto domains = load_domains(data_files, parse_label_kind(labels));
    HyperParams hp = flags.resolve(seed);
    TrainedModel model = train_md2i(domains, hp);
    fs::create_directories(out_dir);
    save_checkpoint(
        (out_dir / "checkpoint.bin").string(),
        pack_model(model.gen, model.disc, model.head.has_value() ? &*model.head : nullptr));
    write_report_csv(model.report, (out_dir / "report.csv").string());
    write_manifest(hp, data_files, (out_dir / "manifest.txt").string());
    std::cout << "trained " << model.report.epochs_run
              << " epochs; checkpoint, report and manifest written to " << out_dir.string()
              << "\n";
    return kExitOk;
}

int cmd_impute(const std::string& checkpoint, const std::string& data_file, uint64_t seed,
               const std::string& labels, const fs::path& out_dir) {
    LoadedModel model = unpack_model(load_checkpoint(checkpoint));
    DomainDataset ds = load_tabular(data_file, parse_label_kind(labels));
    if (ds.d() != model.gen.d)
        throw ParseError("dataset width " + std::to_string(ds.d()) +
                         " does not match checkpoint width " + std::to_string(model.gen.d));
    DomainDataset imputed = impute_dataset(model.gen, ds, seed);
    fs::create_directories(out_dir);
    save_tabular(imputed, (out_dir / "imputed.csv").string());

    // The input file keeps original values at masked cells, so they serve
    // as ground truth for the imputation error.
    long missing = 0;
    double sq = 0.0;
    for (int i = 0; i < ds.n(); ++i)
        for (int j = 0; j < ds.d(); ++j)
            if (ds.m(i, j) == 0.0) {
                double diff = imputed.x(i, j) - ds.x(i, j);
                sq += diff * diff;
                ++missing;
            }
    std::ofstream rep(out_dir / "impute_report.txt");
    rep << "missing_entries=" << missing << '\n';
    rep << "rmse_vs_stored=" << (missing > 0 ? fmt(std::sqrt(sq / missing)) : "nan") << '\n';
    std::cout << "imputed " << missing << " entries; files written to " << out_dir.string()
              << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& protocol, const std::vector<std::string>& methods,
             const std::vector<std::string>& data_files, const HyperFlags& flags, uint64_t seed,
             int repeats, const std::vector<int>& held_out, double split, double mar_t,
             int downstream_epochs, int threads, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    HyperParams hp = flags.resolve(seed);
    bool first_summary = true;
    bool plotted = false;
    for (const auto& name : methods) {
        Method method = method_from_name(name);
        TrainReport first_report;
        ExperimentResult result;
        if (protocol == "dg") {
            auto domains = load_domains(data_files, LabelKind::Classification);
            DgOptions opts;
            opts.repeats = repeats;
            opts.held_out = held_out;
            opts.base_seed = seed;
            opts.downstream_epochs = downstream_epochs;
            opts.threads = threads;
            opts.first_report = &first_report;
            result = run_dg_protocol(domains, hp, opts, method);
        } else if (protocol == "mtl") {
            auto tasks = load_domains(data_files, LabelKind::Regression);
            MtlOptions opts;
            opts.repeats = repeats;
            opts.split = split;
            opts.base_seed = seed;
            opts.mar_t = mar_t;
            opts.downstream_epochs = downstream_epochs;
            opts.threads = threads;
            opts.first_report = &first_report;
            result = run_mtl_protocol(tasks, hp, opts, method);
        } else {
            throw CLI::ValidationError("--protocol", "must be dg|mtl");
        }
        write_results_csv(result, (out_dir / ("results_" + name + ".csv")).string());
        append_summary_csv(result, (out_dir / "summary.csv").string(), first_summary);
        first_summary = false;
        if (!plotted && !first_report.records.empty()) {
            emit_plot_data(first_report, out_dir);
            plotted = true;
        }
        if (protocol == "dg") {
            std::map<int, std::pair<double, int>> by_domain;
            for (const auto& r : result.runs) {
                by_domain[r.held_out_or_fold].first += r.value;
                by_domain[r.held_out_or_fold].second += 1;
            }
            std::ofstream out(out_dir / ("plot_accuracy_by_domain_" + name + ".csv"));
            out << "x,y\n";
            for (const auto& [dom, sum_count] : by_domain)
                out << dom << ',' << fmt(sum_count.first / sum_count.second) << '\n';
        }
        std::cout << protocol << " " << name << ": mean=" << result.mean
                  << " std=" << result.stddev << " over " << result.runs.size() << " runs\n";
    }
    return kExitOk;
}

int cmd_gradcheck(uint64_t seed, double tol, bool corrupt) {
    auto entries = run_gradcheck_suite(seed, corrupt);
    bool ok = true;
    for (const auto& e : entries) {
        bool pass = e.max_rel_err < tol;
        ok = ok && pass;
        std::printf("%-6s max_rel_err=%.3e %s\n", e.name.c_str(), e.max_rel_err,
                    pass ? "ok" : "FAIL");
    }
    return ok ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"md2i: adversarial autoencoder for multi-domain imputation and prediction"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file with [command] sections");

    uint64_t seed = 0;
    app.add_option("--seed", seed, "Master seed for every random choice")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Generate domain datasets in the tabular format");
    std::string kind = "digits";
    std::string base_path;
    int per_class = 100;
    std::vector<double> angles{0, 15, 30, 45, 60, 75};
    int patch_side = 13;
    int n = 500, d = 8, tasks = 20, n_per_task = 80;
    double shift = 0.3, mcar_rate = 0.3, mar_t = 0.0;
    std::string synth_out = "data";
    synth->add_option("--kind", kind, "digits|tabular|tasks|blobs")
        ->check(CLI::IsMember({"digits", "tabular", "tasks", "blobs"}))
        ->capture_default_str();
    synth->add_option("--base", base_path, "Digit base file; synthesized glyphs when omitted");
    synth->add_option("--per-class", per_class, "Digit images per class")->capture_default_str();
    synth->add_option("--angles", angles, "Rotation angles in degrees")->delimiter(',');
    synth->add_option("--patch-side", patch_side, "Square mask patch side; 0 disables")
        ->capture_default_str();
    synth->add_option("--n", n, "Rows (tabular/blobs)")->capture_default_str();
    synth->add_option("--d", d, "Feature columns (tabular/tasks/blobs)")->capture_default_str();
    synth->add_option("--tasks", tasks, "Task count (tasks)")->capture_default_str();
    synth->add_option("--n-per-task", n_per_task, "Rows per task (tasks)")->capture_default_str();
    synth->add_option("--shift", shift, "Domain mean shift (blobs)")->capture_default_str();
    synth->add_option("--mcar-rate", mcar_rate, "Uniform missing rate (tabular)")
        ->capture_default_str();
    synth->add_option("--mar-t", mar_t, "Missing-at-random threshold; 0 disables")
        ->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->capture_default_str();

    auto* train = app.add_subcommand("train", "Train the model on one or more domain files");
    std::vector<std::string> train_data;
    std::string train_labels = "auto";
    std::string train_out = "run";
    HyperFlags train_flags;
    train->add_option("--data", train_data, "Domain data files")->delimiter(',')->required();
    train->add_option("--labels", train_labels, "auto|classification|regression")
        ->capture_default_str();
    train->add_option("--out", train_out, "Output directory")->capture_default_str();
    train_flags.attach(train);

    auto* impute_cmd = app.add_subcommand("impute", "Complete a dataset with a trained model");
    std::string ckpt_path, impute_data;
    std::string impute_labels = "auto";
    std::string impute_out = "imputed";
    impute_cmd->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required();
    impute_cmd->add_option("--data", impute_data, "Dataset to complete")->required();
    impute_cmd->add_option("--labels", impute_labels, "auto|classification|regression")
        ->capture_default_str();
    impute_cmd->add_option("--out", impute_out, "Output directory")->capture_default_str();

    auto* eval_cmd = app.add_subcommand("eval", "Run an experiment protocol");
    std::string protocol = "dg";
    std::vector<std::string> methods{"md2i-s"};
    std::vector<std::string> eval_data;
    std::vector<int> held_out;
    int repeats = 50;
    double split = 0.5, eval_mar_t = 0.0;
    int downstream_epochs = 100;
    int threads = 1;
    std::string eval_out = "results";
    HyperFlags eval_flags;
    eval_cmd->add_option("--protocol", protocol, "dg|mtl")
        ->check(CLI::IsMember({"dg", "mtl"}))
        ->capture_default_str();
    eval_cmd->add_option("--methods", methods, "md2i-s,md2i-u,b1,b2,b1-di,b2-di")
        ->delimiter(',')
        ->capture_default_str();
    eval_cmd->add_option("--data", eval_data, "Domain/task data files")->delimiter(',')->required();
    eval_cmd->add_option("--repeats", repeats, "Protocol repeats")->capture_default_str();
    eval_cmd->add_option("--held-out", held_out, "Held-out domain indices (dg)")->delimiter(',');
    eval_cmd->add_option("--split", split, "Train fraction (mtl)")->capture_default_str();
    eval_cmd->add_option("--mar-t", eval_mar_t,
                         "Per-repeat missing-at-random threshold (mtl); 0 keeps file masks")
        ->capture_default_str();
    eval_cmd->add_option("--downstream-epochs", downstream_epochs,
                         "Epochs for baseline and downstream nets")
        ->capture_default_str();
    eval_cmd->add_option("--threads", threads, "Parallel repeats")->capture_default_str();
    eval_cmd->add_option("--out", eval_out, "Output directory")->capture_default_str();
    eval_flags.attach(eval_cmd);

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference verification of all losses");
    double gc_tol = 1e-4;
    bool gc_corrupt = false;
    gc->add_option("--tol", gc_tol, "Maximum relative error")->capture_default_str();
    gc->add_flag("--corrupt", gc_corrupt, "Perturb one gradient (failure-path test hook)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed())
            return cmd_synth(kind, base_path, per_class, angles, patch_side, n, d, tasks,
                             n_per_task, shift, mcar_rate, mar_t, seed, synth_out);
        if (train->parsed())
            return cmd_train(train_data, train_flags, seed, train_labels, train_out);
        if (impute_cmd->parsed())
            return cmd_impute(ckpt_path, impute_data, seed, impute_labels, impute_out);
        if (eval_cmd->parsed())
            return cmd_eval(protocol, methods, eval_data, eval_flags, seed, repeats, held_out,
                            split, eval_mar_t, downstream_epochs, threads, eval_out);
        if (gc->parsed()) return cmd_gradcheck(seed, gc_tol, gc_corrupt);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
